//! The paired with/without-per-user-features experiment: for every task,
//! model, and ablation, build the dataset, split, standardize on the
//! training side only, fit, and score on the held-out rows.
//!
//! Per-user aggregates are computed over the full dataset before splitting.
//! That replicated design leaks usage statistics across the split; reports
//! carry an explicit leakage flag for it.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{
    accuracy, f1, fit_cart_classifier, fit_gnb, fit_logistic, fit_random_forest,
    CartClassifierParams, ClassifierModel, ForestParams,
};
use crate::features::{
    build_dataset, compute_user_aggregates, join_aggregates, Dataset, FeatureError, Scaler, Task,
};
use crate::ingest::JobRecord;
use crate::matrix::Matrix;
use crate::regress::{
    fit_cart_regression, fit_elastic_net_cv, fit_lasso_lars_ic, fit_ols, fit_ridge, r_squared,
    CartParams, ElasticNetParams, IcCriterion, RegressionModel,
};
use crate::rng::stream;

use rand::seq::SliceRandom;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{task}/{model} (per_user_features={per_user}): {source}")]
    Cell {
        task: String,
        model: String,
        per_user: bool,
        source: Box<dyn std::error::Error + Send + Sync>,
    },
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),
    #[error("report parse error at line {line}: {reason}")]
    ReportParse { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegressorKind {
    LinearRegression,
    Llic,
    Encv,
    Ridge,
    Cart,
}

impl RegressorKind {
    pub const ALL: [RegressorKind; 5] = [
        RegressorKind::LinearRegression,
        RegressorKind::Llic,
        RegressorKind::Encv,
        RegressorKind::Ridge,
        RegressorKind::Cart,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RegressorKind::LinearRegression => "LinearRegression",
            RegressorKind::Llic => "LLIC",
            RegressorKind::Encv => "ENCV",
            RegressorKind::Ridge => "Ridge",
            RegressorKind::Cart => "CART",
        }
    }

    /// Linear-family models train on the standardized matrix; trees do not.
    pub fn standardized(self) -> bool {
        !matches!(self, RegressorKind::Cart)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClassifierKind {
    Lr,
    Cart,
    Gnb,
    Rf,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 4] = [
        ClassifierKind::Lr,
        ClassifierKind::Cart,
        ClassifierKind::Gnb,
        ClassifierKind::Rf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::Lr => "LR",
            ClassifierKind::Cart => "CART",
            ClassifierKind::Gnb => "GNB",
            ClassifierKind::Rf => "RF",
        }
    }

    pub fn standardized(self) -> bool {
        matches!(self, ClassifierKind::Lr | ClassifierKind::Gnb)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HyperParams {
    pub ridge_alpha: f64,
    pub lars_criterion: IcCriterion,
    pub enet_l1_ratio: f64,
    pub enet_folds: usize,
    pub logistic_l2: f64,
    pub forest_trees: usize,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            ridge_alpha: 0.5,
            lars_criterion: IcCriterion::Aic,
            enet_l1_ratio: 0.5,
            enet_folds: 5,
            logistic_l2: 1.0,
            forest_trees: 100,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub train_fraction: f64,
    /// Stratify the classification split by label.
    pub stratified: bool,
    pub rng_seed: u64,
    pub tasks: Vec<Task>,
    pub regressors: Vec<RegressorKind>,
    pub classifiers: Vec<ClassifierKind>,
    pub hyper: HyperParams,
    /// When off, report rows carry 0.0 seconds, making outputs byte-stable.
    pub measure_time: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            train_fraction: 0.8,
            stratified: true,
            rng_seed: 42,
            tasks: Task::ALL.to_vec(),
            regressors: RegressorKind::ALL.to_vec(),
            classifiers: ClassifierKind::ALL.to_vec(),
            hyper: HyperParams::default(),
            measure_time: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RowMetrics {
    Regression { r_squared: f64 },
    Classification { accuracy: f64, f1: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub task: Task,
    pub model: String,
    pub per_user_features: bool,
    pub metrics: RowMetrics,
    pub fit_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub dataset_rows: usize,
    pub seed: u64,
    pub config_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub fingerprint: Fingerprint,
    pub leakage_replicated_aggregates: bool,
    pub rows: Vec<ReportRow>,
}

/// FNV-1a over the canonical config JSON; stable across runs and builds.
fn config_digest(cfg: &ExperimentConfig) -> String {
    let json = serde_json::to_string(cfg).expect("config serializes");
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in json.as_bytes() {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{hash:016x}")
}

fn split_indices(
    n: usize,
    train_fraction: f64,
    labels: Option<&[f64]>,
    seed: u64,
) -> (Vec<usize>, Vec<usize>) {
    const SPLIT_SALT: u64 = 0x5311;
    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut rng = stream(seed, SPLIT_SALT);
    match labels {
        None => {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut rng);
            let cut = ((train_fraction * n as f64).floor() as usize).clamp(1, n - 1);
            train.extend_from_slice(&idx[..cut]);
            test.extend_from_slice(&idx[cut..]);
        }
        Some(labels) => {
            for class in [0.0, 1.0] {
                let mut idx: Vec<usize> = (0..n).filter(|&i| labels[i] == class).collect();
                if idx.is_empty() {
                    continue;
                }
                idx.shuffle(&mut rng);
                let cut = if idx.len() == 1 {
                    1
                } else {
                    ((train_fraction * idx.len() as f64).floor() as usize).clamp(1, idx.len() - 1)
                };
                train.extend_from_slice(&idx[..cut]);
                test.extend_from_slice(&idx[cut..]);
            }
        }
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

struct SplitData {
    x_train: Matrix,
    x_test: Matrix,
    y_train: Vec<f64>,
    /// Held-out targets, always in raw units.
    y_test: Vec<f64>,
    columns: Vec<String>,
    /// (mean, std) removed from y_train; predictions must be mapped back.
    target_scale: Option<(f64, f64)>,
}

impl SplitData {
    fn unscale_predictions(&self, pred: &mut [f64]) {
        if let Some((mean, std)) = self.target_scale {
            for v in pred {
                *v = *v * std + mean;
            }
        }
    }
}

/// Materialize one side of the ablation for a model family; standardization
/// statistics (features and regression target alike) come from the training
/// rows only.
fn prepare(ds: &Dataset, train_idx: &[usize], test_idx: &[usize], standardized: bool) -> SplitData {
    let x_train_raw = ds.x.select_rows(train_idx);
    let x_test_raw = ds.x.select_rows(test_idx);
    let mut y_train: Vec<f64> = train_idx.iter().map(|&i| ds.y[i]).collect();
    let y_test: Vec<f64> = test_idx.iter().map(|&i| ds.y[i]).collect();
    if standardized {
        let scaler = Scaler::fit(&x_train_raw, &ds.columns, &ds.kinds);
        let target_scale = crate::features::target_stats(ds.task, &y_train);
        if let Some((mean, std)) = target_scale {
            for v in &mut y_train {
                *v = (*v - mean) / std;
            }
        }
        SplitData {
            x_train: scaler.apply(&x_train_raw),
            x_test: scaler.apply(&x_test_raw),
            y_train,
            y_test,
            columns: scaler.output_columns(),
            target_scale,
        }
    } else {
        SplitData {
            x_train: x_train_raw,
            x_test: x_test_raw,
            y_train,
            y_test,
            columns: ds.columns.clone(),
            target_scale: None,
        }
    }
}

fn cell_err<E: std::error::Error + Send + Sync + 'static>(
    task: Task,
    model: &str,
    per_user: bool,
) -> impl FnOnce(E) -> EvalError + 'static {
    let model = model.to_string();
    move |e| EvalError::Cell {
        task: task.as_str().to_string(),
        model,
        per_user,
        source: Box::new(e),
    }
}

/// Run the full grid and assemble the report.
pub fn run_experiment(jobs: &[JobRecord], cfg: &ExperimentConfig) -> Result<EvalReport, EvalError> {
    if !(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0) {
        return Err(EvalError::InvalidConfig(
            "train_fraction must be in (0, 1)".into(),
        ));
    }
    if jobs.is_empty() {
        return Err(EvalError::InvalidConfig("no job records".into()));
    }

    let aggs = compute_user_aggregates(jobs);
    let joined = join_aggregates(jobs, &aggs)?;

    let mut rows = Vec::new();
    let mut any_user_features = false;

    for &task in &cfg.tasks {
        let ds_with = build_dataset(&joined, task, true, false);
        let ds_without = build_dataset(&joined, task, false, false);
        let task_salt = Task::ALL.iter().position(|t| *t == task).unwrap() as u64;
        let seed = crate::rng::derive_seed(cfg.rng_seed, 0xab10 + task_salt);
        let labels = (task.is_classification() && cfg.stratified).then_some(ds_with.y.as_slice());
        let (train_idx, test_idx) = split_indices(jobs.len(), cfg.train_fraction, labels, seed);

        if task.is_classification() {
            for &kind in &cfg.classifiers {
                for (per_user, ds) in [(true, &ds_with), (false, &ds_without)] {
                    any_user_features |= per_user;
                    let row = run_classification_cell(
                        ds, &train_idx, &test_idx, kind, &cfg.hyper, task, per_user,
                    )?;
                    rows.push(ReportRow {
                        fit_time_s: if cfg.measure_time { row.1 } else { 0.0 },
                        ..row.0
                    });
                }
            }
        } else {
            for &kind in &cfg.regressors {
                for (per_user, ds) in [(true, &ds_with), (false, &ds_without)] {
                    any_user_features |= per_user;
                    let row = run_regression_cell(
                        ds, &train_idx, &test_idx, kind, &cfg.hyper, task, per_user,
                    )?;
                    rows.push(ReportRow {
                        fit_time_s: if cfg.measure_time { row.1 } else { 0.0 },
                        ..row.0
                    });
                }
            }
        }
    }

    Ok(EvalReport {
        fingerprint: Fingerprint {
            dataset_rows: jobs.len(),
            seed: cfg.rng_seed,
            config_digest: config_digest(cfg),
        },
        leakage_replicated_aggregates: any_user_features,
        rows,
    })
}

fn run_regression_cell(
    ds: &Dataset,
    train_idx: &[usize],
    test_idx: &[usize],
    kind: RegressorKind,
    hyper: &HyperParams,
    task: Task,
    per_user: bool,
) -> Result<(ReportRow, f64), EvalError> {
    let data = prepare(ds, train_idx, test_idx, kind.standardized());
    let wrap = cell_err(task, kind.name(), per_user);
    let model = match kind {
        RegressorKind::LinearRegression => {
            RegressionModel::Linear(fit_ols(&data.x_train, &data.y_train, &data.columns).map_err(wrap)?)
        }
        RegressorKind::Llic => RegressionModel::Linear(
            fit_lasso_lars_ic(
                &data.x_train,
                &data.y_train,
                hyper.lars_criterion,
                &data.columns,
            )
            .map_err(wrap)?,
        ),
        RegressorKind::Encv => RegressionModel::Linear(
            fit_elastic_net_cv(
                &data.x_train,
                &data.y_train,
                hyper.enet_l1_ratio,
                hyper.enet_folds,
                &ElasticNetParams::default(),
                &data.columns,
            )
            .map_err(wrap)?,
        ),
        RegressorKind::Ridge => RegressionModel::Linear(
            fit_ridge(&data.x_train, &data.y_train, hyper.ridge_alpha, &data.columns)
                .map_err(wrap)?,
        ),
        RegressorKind::Cart => RegressionModel::Tree(
            fit_cart_regression(
                &data.x_train,
                &data.y_train,
                &CartParams::default(),
                &data.columns,
            )
            .map_err(wrap)?,
        ),
    };
    let fit_time = model.meta().fit_time_s;
    let mut pred = model
        .predict(&data.x_test, &data.columns)
        .map_err(cell_err(task, kind.name(), per_user))?;
    data.unscale_predictions(&mut pred);
    let r2 = r_squared(&data.y_test, &pred).map_err(cell_err(task, kind.name(), per_user))?;
    Ok((
        ReportRow {
            task,
            model: kind.name().to_string(),
            per_user_features: per_user,
            metrics: RowMetrics::Regression { r_squared: r2 },
            fit_time_s: fit_time,
        },
        fit_time,
    ))
}

fn run_classification_cell(
    ds: &Dataset,
    train_idx: &[usize],
    test_idx: &[usize],
    kind: ClassifierKind,
    hyper: &HyperParams,
    task: Task,
    per_user: bool,
) -> Result<(ReportRow, f64), EvalError> {
    let data = prepare(ds, train_idx, test_idx, kind.standardized());
    let to_labels = |v: &[f64]| -> Vec<u8> { v.iter().map(|&y| u8::from(y != 0.0)).collect() };
    let y_train = to_labels(&data.y_train);
    let y_test = to_labels(&data.y_test);
    let wrap = cell_err(task, kind.name(), per_user);
    let model = match kind {
        ClassifierKind::Lr => ClassifierModel::Logistic(
            fit_logistic(&data.x_train, &y_train, hyper.logistic_l2, &data.columns)
                .map_err(wrap)?,
        ),
        ClassifierKind::Cart => ClassifierModel::Tree(
            fit_cart_classifier(
                &data.x_train,
                &y_train,
                &CartClassifierParams::default(),
                &data.columns,
            )
            .map_err(wrap)?,
        ),
        ClassifierKind::Gnb => ClassifierModel::Gnb(
            fit_gnb(&data.x_train, &y_train, &data.columns).map_err(wrap)?,
        ),
        ClassifierKind::Rf => ClassifierModel::Forest(
            fit_random_forest(
                &data.x_train,
                &y_train,
                &ForestParams {
                    n_trees: hyper.forest_trees,
                    rng_seed: 0,
                    ..ForestParams::default()
                },
                &data.columns,
            )
            .map_err(wrap)?,
        ),
    };
    let fit_time = model.meta().fit_time_s;
    let pred = model
        .predict(&data.x_test, &data.columns)
        .map_err(cell_err(task, kind.name(), per_user))?;
    Ok((
        ReportRow {
            task,
            model: kind.name().to_string(),
            per_user_features: per_user,
            metrics: RowMetrics::Classification {
                accuracy: accuracy(&y_test, &pred),
                f1: f1(&y_test, &pred),
            },
            fit_time_s: fit_time,
        },
        fit_time,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Csv,
}

fn task_title(task: Task) -> &'static str {
    match task {
        Task::CpuRegression => "CPU usage prediction with regression",
        Task::MemRegression => "Memory usage prediction with regression",
        Task::FailureClassification => "Job failure classification",
    }
}

/// Render a report as a human-readable table or delimiter-separated values.
///
/// The table view shows percentages (two decimals, F1 as whole percent);
/// the CSV view keeps full-precision raw values so it re-parses exactly.
pub fn render_report(report: &EvalReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => render_csv(report),
        ReportFormat::Text => render_text(report),
    }
}

fn header_lines(report: &EvalReport) -> String {
    format!(
        "# jobcast evaluation report\n# config_digest={} seed={} dataset_rows={} leakage_replicated_aggregates={}\n",
        report.fingerprint.config_digest,
        report.fingerprint.seed,
        report.fingerprint.dataset_rows,
        report.leakage_replicated_aggregates,
    )
}

fn render_csv(report: &EvalReport) -> String {
    let mut out = header_lines(report);
    out.push_str("task,model,per_user_features,r_squared,accuracy,f1,fit_time_s\n");
    for row in &report.rows {
        let (r2, acc, f1v) = match row.metrics {
            RowMetrics::Regression { r_squared } => (r_squared.to_string(), String::new(), String::new()),
            RowMetrics::Classification { accuracy, f1 } => {
                (String::new(), accuracy.to_string(), f1.to_string())
            }
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            row.task.as_str(),
            row.model,
            row.per_user_features,
            r2,
            acc,
            f1v,
            row.fit_time_s
        )
        .unwrap();
    }
    out
}

fn render_text(report: &EvalReport) -> String {
    let mut out = header_lines(report);
    let mut seen: Vec<Task> = Vec::new();
    for row in &report.rows {
        if !seen.contains(&row.task) {
            seen.push(row.task);
        }
    }
    for task in seen {
        writeln!(out, "\n## {}", task_title(task)).unwrap();
        if task.is_classification() {
            writeln!(
                out,
                "{:<18} {:<17} {:>12} {:>7} {:>13}",
                "Model", "Per-User Features", "Accuracy (%)", "F1 (%)", "Time (second)"
            )
            .unwrap();
        } else {
            writeln!(
                out,
                "{:<18} {:<17} {:>13} {:>13}",
                "Model", "Per-User Features", "R squared (%)", "Time (second)"
            )
            .unwrap();
        }
        for row in report.rows.iter().filter(|r| r.task == task) {
            let flag = if row.per_user_features { "True" } else { "False" };
            match row.metrics {
                RowMetrics::Regression { r_squared } => {
                    writeln!(
                        out,
                        "{:<18} {:<17} {:>13.2} {:>13.3}",
                        row.model,
                        flag,
                        r_squared * 100.0,
                        row.fit_time_s
                    )
                    .unwrap();
                }
                RowMetrics::Classification { accuracy, f1 } => {
                    writeln!(
                        out,
                        "{:<18} {:<17} {:>12.2} {:>7.0} {:>13.3}",
                        row.model,
                        flag,
                        accuracy * 100.0,
                        f1 * 100.0,
                        row.fit_time_s
                    )
                    .unwrap();
                }
            }
        }
    }
    out
}

/// Parse the CSV form back into a report (header comments included).
pub fn parse_report(text: &str) -> Result<EvalReport, EvalError> {
    let mut fingerprint = Fingerprint {
        dataset_rows: 0,
        seed: 0,
        config_digest: String::new(),
    };
    let mut leakage = false;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let bad = |reason: &str| EvalError::ReportParse {
            line: line_no,
            reason: reason.to_string(),
        };
        if line.starts_with('#') {
            for token in line.trim_start_matches('#').split_whitespace() {
                if let Some((k, v)) = token.split_once('=') {
                    match k {
                        "config_digest" => fingerprint.config_digest = v.to_string(),
                        "seed" => fingerprint.seed = v.parse().map_err(|_| bad("bad seed"))?,
                        "dataset_rows" => {
                            fingerprint.dataset_rows =
                                v.parse().map_err(|_| bad("bad dataset_rows"))?;
                        }
                        "leakage_replicated_aggregates" => {
                            leakage = v.parse().map_err(|_| bad("bad leakage flag"))?;
                        }
                        _ => {}
                    }
                }
            }
            continue;
        }
        if line.trim().is_empty() || line.starts_with("task,") {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(bad("expected 7 fields"));
        }
        let task = Task::from_name(f[0]).ok_or_else(|| bad("unknown task"))?;
        let per_user = f[2].parse().map_err(|_| bad("bad per_user_features"))?;
        let fit_time_s: f64 = f[6].parse().map_err(|_| bad("bad fit_time_s"))?;
        let metrics = if task.is_classification() {
            RowMetrics::Classification {
                accuracy: f[4].parse().map_err(|_| bad("bad accuracy"))?,
                f1: f[5].parse().map_err(|_| bad("bad f1"))?,
            }
        } else {
            RowMetrics::Regression {
                r_squared: f[3].parse().map_err(|_| bad("bad r_squared"))?,
            }
        };
        rows.push(ReportRow {
            task,
            model: f[1].to_string(),
            per_user_features: per_user,
            metrics,
            fit_time_s,
        });
    }
    Ok(EvalReport {
        fingerprint,
        leakage_replicated_aggregates: leakage,
        rows,
    })
}
