//! Command-line front end: synth, ingest, featurize, train, predict,
//! evaluate, and report subcommands over the library pipeline.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error. Diagnostics go to
//! stderr; data goes to files or stdout.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::classify::{
    fit_cart_classifier, fit_gnb, fit_logistic, fit_random_forest, CartClassifierParams,
    ClassifierModel, ClassifyError, ForestParams,
};
use crate::evaluate::{
    parse_report, render_report, run_experiment, ClassifierKind, EvalError, ExperimentConfig,
    HyperParams, RegressorKind, ReportFormat,
};
use crate::features::{
    build_dataset, column_names, compute_user_aggregates, join_aggregates, FeatureError, Scaler,
    Task, UserEncoder,
};
use crate::ingest::{
    clean_filter_sample, jobs_from_csv, jobs_to_csv, parse_accounting_text, parse_resource_request,
    parse_roles_text, IngestConfig, IngestError, JobRecord, LabelRule, Role, SampleSize,
};
use crate::matrix::Matrix;
use crate::persist::{
    FallbackAggregate, ModelKind, ModelStore, PersistError, PersistedModel, StoreContext,
};
use crate::regress::{
    fit_cart_regression, fit_elastic_net_cv, fit_lasso_lars_ic, fit_ols, fit_ridge, CartParams,
    ElasticNetParams, RegressError, RegressionModel,
};
use crate::synth::{generate_workload, SynthConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Regress(#[from] RegressError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Persist(#[from] PersistError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Data(String),
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|source| CliError::Io {
                path: parent.to_path_buf(),
                source,
            })?;
        }
    }
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Parser)]
#[command(
    name = "jobcast",
    about = "Batch-scheduler log analytics: usage regression and failure prediction",
    disable_help_subcommand = true
)]
struct Cli {
    /// Seed for every random choice a subcommand makes.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic accounting log and roles file.
    Synth(SynthArgs),
    /// Parse, clean, filter, and sample an accounting log into job rows.
    Ingest(IngestArgs),
    /// Build a per-task feature dataset from ingested jobs.
    Featurize(FeaturizeArgs),
    /// Train and persist the submission-advisory model store.
    Train(TrainArgs),
    /// Predict usage and failure risk for new submissions.
    Predict(PredictArgs),
    /// Run the with/without-per-user-features experiment grid.
    Evaluate(EvaluateArgs),
    /// Re-render a saved evaluation report.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Output directory for accounting.log and roles.csv.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 50)]
    users: usize,
    #[arg(long, default_value_t = 400)]
    jobs_per_user: usize,
    /// Also write ground_truth.json with the latent generator state.
    #[arg(long, default_value_t = false)]
    ground_truth: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LabelRuleArg {
    AnyNonzero,
    ResourceKill,
}

impl From<LabelRuleArg> for LabelRule {
    fn from(v: LabelRuleArg) -> LabelRule {
        match v {
            LabelRuleArg::AnyNonzero => LabelRule::AnyNonzero,
            LabelRuleArg::ResourceKill => LabelRule::ResourceKillOnly,
        }
    }
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[arg(long)]
    log: PathBuf,
    #[arg(long)]
    roles: PathBuf,
    /// Output CSV of cleaned job rows.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = i64::MIN)]
    window_start: i64,
    #[arg(long, default_value_t = i64::MAX)]
    window_end: i64,
    #[arg(long, default_value_t = 200)]
    min_jobs: usize,
    /// "all" or a positive record count.
    #[arg(long, default_value = "all")]
    sample: String,
    #[arg(long, value_enum, default_value_t = LabelRuleArg::AnyNonzero)]
    label_rule: LabelRuleArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TaskArg {
    Cpu,
    Mem,
    Failure,
}

impl From<TaskArg> for Task {
    fn from(v: TaskArg) -> Task {
        match v {
            TaskArg::Cpu => Task::CpuRegression,
            TaskArg::Mem => Task::MemRegression,
            TaskArg::Failure => Task::FailureClassification,
        }
    }
}

#[derive(Debug, Args)]
struct FeaturizeArgs {
    /// Jobs CSV produced by `ingest`.
    #[arg(long)]
    jobs: PathBuf,
    #[arg(long, value_enum)]
    task: TaskArg,
    #[arg(long)]
    out: PathBuf,
    /// Leave out the per-user aggregate columns.
    #[arg(long, default_value_t = false)]
    no_user_features: bool,
    #[arg(long, default_value_t = false)]
    standardize: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RegressorArg {
    Ols,
    Llic,
    Encv,
    Ridge,
    Cart,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ClassifierArg {
    Lr,
    Cart,
    Gnb,
    Rf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Directory holding accounting.log and roles.csv (e.g. synth output).
    #[arg(long = "in")]
    in_dir: Option<PathBuf>,
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long)]
    roles: Option<PathBuf>,
    /// Output model-store directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = RegressorArg::Ridge)]
    regressor: RegressorArg,
    #[arg(long, value_enum, default_value_t = ClassifierArg::Gnb)]
    classifier: ClassifierArg,
    #[arg(long, default_value_t = 200)]
    min_jobs: usize,
    #[arg(long, default_value = "all")]
    sample: String,
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// Model store directory written by `train`.
    #[arg(long)]
    store: PathBuf,
    /// Accounting log with the submissions to score.
    #[arg(long)]
    jobs: PathBuf,
    /// Output CSV (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Csv,
}

impl From<FormatArg> for ReportFormat {
    fn from(v: FormatArg) -> ReportFormat {
        match v {
            FormatArg::Text => ReportFormat::Text,
            FormatArg::Csv => ReportFormat::Csv,
        }
    }
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Directory holding accounting.log and roles.csv.
    #[arg(long = "in")]
    in_dir: Option<PathBuf>,
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long)]
    roles: Option<PathBuf>,
    /// Report output path (stdout when omitted).
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    format: FormatArg,
    #[arg(long, default_value_t = 200)]
    min_jobs: usize,
    #[arg(long, default_value = "all")]
    sample: String,
    /// Record fit wall time as 0.0 so reports are byte-stable.
    #[arg(long, default_value_t = false)]
    no_timing: bool,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// A report in delimiter-separated form.
    #[arg(long = "in")]
    in_file: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    format: FormatArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parse argv and dispatch; returns the process exit code.
pub fn run_cli<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            if code == 0 {
                print!("{e}");
            } else {
                eprint!("{e}");
            }
            return code;
        }
    };
    let seed = cli.seed;
    let result = match cli.command {
        Command::Synth(args) => cmd_synth(&args, seed),
        Command::Ingest(args) => cmd_ingest(&args, seed),
        Command::Featurize(args) => cmd_featurize(&args),
        Command::Train(args) => cmd_train(&args, seed),
        Command::Predict(args) => cmd_predict(&args),
        Command::Evaluate(args) => cmd_evaluate(&args, seed),
        Command::Report(args) => cmd_report(&args),
    };
    match result {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            eprintln!("run `jobcast --help` for the flag grammar");
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn cmd_synth(args: &SynthArgs, seed: u64) -> Result<(), CliError> {
    let cfg = SynthConfig {
        n_users: args.users,
        jobs_per_user: (args.jobs_per_user, args.jobs_per_user),
        rng_seed: seed,
        ..SynthConfig::default()
    };
    cfg.validate().map_err(CliError::Usage)?;
    let w = generate_workload(&cfg);
    write_file(&args.out.join("accounting.log"), &w.accounting)?;
    write_file(&args.out.join("roles.csv"), &w.roles)?;
    if args.ground_truth {
        let truth = serde_json::json!({ "users": w.users, "jobs": w.jobs });
        write_file(
            &args.out.join("ground_truth.json"),
            &serde_json::to_string_pretty(&truth).expect("truth serializes"),
        )?;
    }
    eprintln!(
        "wrote {} records for {} users under {}",
        w.records.len(),
        w.users.len(),
        args.out.display()
    );
    Ok(())
}

fn sample_size(s: &str) -> Result<SampleSize, CliError> {
    s.parse::<SampleSize>().map_err(CliError::Usage)
}

fn ingest_from_files(
    log: &Path,
    roles: &Path,
    cfg: &IngestConfig,
) -> Result<crate::ingest::CleanedJobs, CliError> {
    let (records, stats) = parse_accounting_text(&read_file(log)?);
    if stats.errors > 0 {
        eprintln!(
            "warning: skipped {} malformed lines (first: {})",
            stats.errors,
            stats
                .samples
                .first()
                .map_or_else(String::new, ToString::to_string)
        );
    }
    let roles = parse_roles_text(&read_file(roles)?);
    Ok(clean_filter_sample(&records, &roles, cfg)?)
}

fn cmd_ingest(args: &IngestArgs, seed: u64) -> Result<(), CliError> {
    let cfg = IngestConfig {
        window_start: args.window_start,
        window_end: args.window_end,
        min_jobs_per_user: args.min_jobs,
        sample_size: sample_size(&args.sample)?,
        rng_seed: seed,
        label_rule: args.label_rule.into(),
    };
    let cleaned = ingest_from_files(&args.log, &args.roles, &cfg)?;
    write_file(&args.out, &jobs_to_csv(&cleaned.jobs))?;
    eprintln!(
        "kept {} of {} records ({} users below min-jobs, {} missing requests)",
        cleaned.stats.sampled,
        cleaned.stats.input,
        cleaned.stats.below_min_jobs,
        cleaned.stats.missing_request,
    );
    Ok(())
}

fn cmd_featurize(args: &FeaturizeArgs) -> Result<(), CliError> {
    let jobs = jobs_from_csv(&read_file(&args.jobs)?)?;
    if jobs.is_empty() {
        return Err(CliError::Data("no job rows in input".into()));
    }
    let aggs = compute_user_aggregates(&jobs);
    let joined = join_aggregates(&jobs, &aggs)?;
    let ds = build_dataset(
        &joined,
        args.task.into(),
        !args.no_user_features,
        args.standardize,
    );
    write_file(&args.out, &ds.to_delimited(','))?;
    if !ds.dropped_columns.is_empty() {
        eprintln!("dropped zero-variance columns: {:?}", ds.dropped_columns);
    }
    Ok(())
}

fn resolve_inputs(
    in_dir: Option<&PathBuf>,
    log: Option<&PathBuf>,
    roles: Option<&PathBuf>,
) -> Result<(PathBuf, PathBuf), CliError> {
    match (in_dir, log, roles) {
        (Some(dir), None, None) => Ok((dir.join("accounting.log"), dir.join("roles.csv"))),
        (None, Some(log), Some(roles)) => Ok((log.clone(), roles.clone())),
        _ => Err(CliError::Usage(
            "provide either --in DIR or both --log FILE and --roles FILE".into(),
        )),
    }
}

/// Fit the three store models (per-user features on) over the full dataset.
pub fn train_store(
    jobs: &[JobRecord],
    project_codes: Vec<String>,
    regressor: RegressorKind,
    classifier: ClassifierKind,
    seed: u64,
) -> Result<ModelStore, CliError> {
    if jobs.is_empty() {
        return Err(CliError::Data("no job records to train on".into()));
    }
    let hyper = HyperParams::default();
    let aggs = compute_user_aggregates(jobs);
    let joined = join_aggregates(jobs, &aggs)?;

    let fit_regression = |task: Task| -> Result<PersistedModel, CliError> {
        let ds = build_dataset(&joined, task, true, false);
        let (x, columns, scaler, y, target_scale) = if regressor.standardized() {
            let scaler = Scaler::fit(&ds.x, &ds.columns, &ds.kinds);
            let target_scale = crate::features::target_stats(task, &ds.y);
            let y = match target_scale {
                Some((mean, std)) => ds.y.iter().map(|v| (v - mean) / std).collect(),
                None => ds.y.clone(),
            };
            (
                scaler.apply(&ds.x),
                scaler.output_columns(),
                Some(scaler),
                y,
                target_scale,
            )
        } else {
            (ds.x.clone(), ds.columns.clone(), None, ds.y.clone(), None)
        };
        let model = match regressor {
            RegressorKind::LinearRegression => {
                RegressionModel::Linear(fit_ols(&x, &y, &columns)?)
            }
            RegressorKind::Llic => RegressionModel::Linear(fit_lasso_lars_ic(
                &x,
                &y,
                hyper.lars_criterion,
                &columns,
            )?),
            RegressorKind::Encv => RegressionModel::Linear(fit_elastic_net_cv(
                &x,
                &y,
                hyper.enet_l1_ratio,
                hyper.enet_folds,
                &ElasticNetParams::default(),
                &columns,
            )?),
            RegressorKind::Ridge => {
                RegressionModel::Linear(fit_ridge(&x, &y, hyper.ridge_alpha, &columns)?)
            }
            RegressorKind::Cart => RegressionModel::Tree(fit_cart_regression(
                &x,
                &y,
                &CartParams::default(),
                &columns,
            )?),
        };
        Ok(PersistedModel::new(
            task.as_str(),
            scaler,
            target_scale,
            ModelKind::Regression(model),
        ))
    };

    let cpu = fit_regression(Task::CpuRegression)?;
    let mem = fit_regression(Task::MemRegression)?;

    let failure = {
        let task = Task::FailureClassification;
        let ds = build_dataset(&joined, task, true, false);
        let y: Vec<u8> = ds.y.iter().map(|&v| u8::from(v != 0.0)).collect();
        let (x, columns, scaler) = if classifier.standardized() {
            let scaler = Scaler::fit(&ds.x, &ds.columns, &ds.kinds);
            (scaler.apply(&ds.x), scaler.output_columns(), Some(scaler))
        } else {
            (ds.x.clone(), ds.columns.clone(), None)
        };
        let model = match classifier {
            ClassifierKind::Lr => {
                ClassifierModel::Logistic(fit_logistic(&x, &y, hyper.logistic_l2, &columns)?)
            }
            ClassifierKind::Cart => ClassifierModel::Tree(fit_cart_classifier(
                &x,
                &y,
                &CartClassifierParams::default(),
                &columns,
            )?),
            ClassifierKind::Gnb => ClassifierModel::Gnb(fit_gnb(&x, &y, &columns)?),
            ClassifierKind::Rf => ClassifierModel::Forest(fit_random_forest(
                &x,
                &y,
                &ForestParams {
                    n_trees: hyper.forest_trees,
                    rng_seed: seed,
                    ..ForestParams::default()
                },
                &columns,
            )?),
        };
        PersistedModel::new(task.as_str(), scaler, None, ModelKind::Classification(model))
    };

    let encoder = UserEncoder::fit(jobs);
    let roles: std::collections::BTreeMap<String, Role> = jobs
        .iter()
        .map(|j| (j.owner.clone(), j.role))
        .collect();

    let mut by_role: HashMap<&str, Vec<&crate::features::UserAggregate>> = HashMap::new();
    for (user, agg) in &aggs {
        by_role.entry(roles[user].as_str()).or_default().push(agg);
    }
    let role_fallback = by_role
        .into_iter()
        .filter_map(|(role, list)| {
            FallbackAggregate::mean_of(&list).map(|f| (role.to_string(), f))
        })
        .collect();
    let all: Vec<&crate::features::UserAggregate> = aggs.values().collect();
    let global_fallback = FallbackAggregate::mean_of(&all).expect("non-empty jobs");
    let base_failure_rate =
        jobs.iter().map(|j| f64::from(j.failed)).sum::<f64>() / jobs.len() as f64;

    Ok(ModelStore {
        context: StoreContext {
            format: crate::persist::store_context_format().to_string(),
            seed,
            user_codes: encoder.names,
            project_codes,
            roles,
            aggregates: aggs,
            role_fallback,
            global_fallback,
            base_failure_rate,
        },
        cpu,
        mem,
        failure,
    })
}

fn cmd_train(args: &TrainArgs, seed: u64) -> Result<(), CliError> {
    let (log, roles) = resolve_inputs(args.in_dir.as_ref(), args.log.as_ref(), args.roles.as_ref())?;
    let cfg = IngestConfig {
        min_jobs_per_user: args.min_jobs,
        sample_size: sample_size(&args.sample)?,
        rng_seed: seed,
        ..IngestConfig::default()
    };
    let cleaned = ingest_from_files(&log, &roles, &cfg)?;
    let regressor = match args.regressor {
        RegressorArg::Ols => RegressorKind::LinearRegression,
        RegressorArg::Llic => RegressorKind::Llic,
        RegressorArg::Encv => RegressorKind::Encv,
        RegressorArg::Ridge => RegressorKind::Ridge,
        RegressorArg::Cart => RegressorKind::Cart,
    };
    let classifier = match args.classifier {
        ClassifierArg::Lr => ClassifierKind::Lr,
        ClassifierArg::Cart => ClassifierKind::Cart,
        ClassifierArg::Gnb => ClassifierKind::Gnb,
        ClassifierArg::Rf => ClassifierKind::Rf,
    };
    let store = train_store(&cleaned.jobs, cleaned.project_codes, regressor, classifier, seed)?;
    store.save(&args.out)?;
    eprintln!(
        "trained {}/{} on {} jobs into {}",
        regressor.name(),
        classifier.name(),
        cleaned.jobs.len(),
        args.out.display()
    );
    Ok(())
}

/// Submission-time attributes of one job to score.
#[derive(Debug, Clone)]
pub struct SubmissionAttributes {
    pub owner: String,
    pub req_time_s: u64,
    pub req_mem_bytes: u64,
    pub project: String,
}

/// Advisory for one submission.
#[derive(Debug, Clone)]
pub struct Advisory {
    pub owner: String,
    pub estimated_cpu_s: f64,
    pub estimated_mem_bytes: f64,
    pub failure_probability: f64,
    /// Requested resources fall below the estimated need.
    pub under_provisioned: bool,
    /// The user had no history; role-level fallback aggregates were used.
    pub cold_start: bool,
}

/// Prebuilt lookup indices over a loaded model store.
pub struct Advisor {
    store: ModelStore,
    user_index: HashMap<String, u32>,
    project_index: HashMap<String, u32>,
}

impl Advisor {
    pub fn new(store: ModelStore) -> Advisor {
        let user_index = store
            .context
            .user_codes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i as u32))
            .collect();
        let project_index = store
            .context
            .project_codes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i as u32))
            .collect();
        Advisor {
            store,
            user_index,
            project_index,
        }
    }

    pub fn store(&self) -> &ModelStore {
        &self.store
    }

    fn feature_row(&self, task: Task, attrs: &SubmissionAttributes) -> (Vec<f64>, bool) {
        let ctx = &self.store.context;
        let role = ctx.roles.get(&attrs.owner).copied().unwrap_or(Role::Unknowing);
        let (agg, cold) = match ctx.aggregates.get(&attrs.owner) {
            Some(a) => (
                FallbackAggregate {
                    a_cpu: a.a_cpu,
                    a_maxmem: a.a_maxmem,
                    a_reqtime: a.a_reqtime,
                    a_reqmem: a.a_reqmem,
                },
                false,
            ),
            None => (
                ctx.role_fallback
                    .get(role.as_str())
                    .cloned()
                    .unwrap_or_else(|| ctx.global_fallback.clone()),
                true,
            ),
        };
        let id = self
            .user_index
            .get(&attrs.owner)
            .copied()
            .unwrap_or(ctx.user_codes.len() as u32);
        let project = self
            .project_index
            .get(&attrs.project)
            .copied()
            .unwrap_or(ctx.project_codes.len() as u32);

        let mut row = vec![
            f64::from(id),
            attrs.req_mem_bytes as f64,
            attrs.req_time_s as f64,
            f64::from(project),
        ];
        for col in task.aggregate_columns() {
            row.push(match *col {
                "aCPU" => agg.a_cpu,
                "aMaxmem" => agg.a_maxmem,
                "aReqtime" => agg.a_reqtime,
                "aReqmem" => agg.a_reqmem,
                _ => unreachable!(),
            });
        }
        for r in Role::ALL {
            row.push(f64::from(u8::from(r == role)));
        }
        (row, cold)
    }

    fn apply_model(
        &self,
        doc: &PersistedModel,
        task: Task,
        attrs: &SubmissionAttributes,
    ) -> Result<(f64, bool), CliError> {
        let (row, cold) = self.feature_row(task, attrs);
        let raw = Matrix::from_rows(&[row]);
        let (x, columns) = match &doc.scaler {
            Some(scaler) => (scaler.apply(&raw), scaler.output_columns()),
            None => (raw, column_names(task, true).0),
        };
        let value = match &doc.model {
            ModelKind::Regression(m) => {
                let raw = m.predict(&x, &columns)?[0];
                match doc.target_scale {
                    Some((mean, std)) => raw * std + mean,
                    None => raw,
                }
            }
            ModelKind::Classification(m) => m.predict_proba(&x, &columns)?[0],
        };
        Ok((value, cold))
    }

    /// Score one submission against the store.
    pub fn advise(&self, attrs: &SubmissionAttributes) -> Result<Advisory, CliError> {
        let (cpu, cold) = self.apply_model(&self.store.cpu, Task::CpuRegression, attrs)?;
        let (mem, _) = self.apply_model(&self.store.mem, Task::MemRegression, attrs)?;
        let (prob, _) =
            self.apply_model(&self.store.failure, Task::FailureClassification, attrs)?;
        // Regressors can extrapolate below zero; an advisory estimate floors
        // at zero.
        let estimated_cpu_s = cpu.max(0.0);
        let estimated_mem_bytes = mem.max(0.0);
        let under_provisioned = estimated_cpu_s > attrs.req_time_s as f64
            || estimated_mem_bytes > attrs.req_mem_bytes as f64;
        Ok(Advisory {
            owner: attrs.owner.clone(),
            estimated_cpu_s,
            estimated_mem_bytes,
            failure_probability: prob,
            under_provisioned,
            cold_start: cold,
        })
    }
}

/// One-shot advisory against a loaded store.
pub fn predict_for_submission(
    store: &ModelStore,
    attrs: &SubmissionAttributes,
) -> Result<Advisory, CliError> {
    Advisor::new(store.clone()).advise(attrs)
}

fn cmd_predict(args: &PredictArgs) -> Result<(), CliError> {
    let store = ModelStore::load(&args.store)?;
    let advisor = Advisor::new(store);
    let (records, stats) = parse_accounting_text(&read_file(&args.jobs)?);
    if stats.errors > 0 {
        eprintln!("warning: skipped {} malformed lines", stats.errors);
    }
    let mut out = String::from(
        "owner,req_time_s,req_mem_bytes,estimated_cpu_s,estimated_maxvmem_bytes,failure_probability,under_provisioned,cold_start,status\n",
    );
    for rec in &records {
        match parse_resource_request(&rec.category) {
            Ok((req_time_s, req_mem_bytes)) => {
                let advisory = advisor.advise(&SubmissionAttributes {
                    owner: rec.owner.clone(),
                    req_time_s,
                    req_mem_bytes,
                    project: rec.project.clone(),
                })?;
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},ok\n",
                    advisory.owner,
                    req_time_s,
                    req_mem_bytes,
                    advisory.estimated_cpu_s,
                    advisory.estimated_mem_bytes,
                    advisory.failure_probability,
                    advisory.under_provisioned,
                    advisory.cold_start,
                ));
            }
            Err(_) => {
                out.push_str(&format!("{},,,,,,,,missing_request\n", rec.owner));
            }
        }
    }
    match &args.out {
        Some(path) => write_file(path, &out)?,
        None => print!("{out}"),
    }
    Ok(())
}

fn cmd_evaluate(args: &EvaluateArgs, seed: u64) -> Result<(), CliError> {
    let (log, roles) = resolve_inputs(args.in_dir.as_ref(), args.log.as_ref(), args.roles.as_ref())?;
    let cfg = IngestConfig {
        min_jobs_per_user: args.min_jobs,
        sample_size: sample_size(&args.sample)?,
        rng_seed: seed,
        ..IngestConfig::default()
    };
    let cleaned = ingest_from_files(&log, &roles, &cfg)?;
    let experiment = ExperimentConfig {
        rng_seed: seed,
        measure_time: !args.no_timing,
        ..ExperimentConfig::default()
    };
    let report = run_experiment(&cleaned.jobs, &experiment)?;
    let rendered = render_report(&report, args.format.into());
    match &args.report {
        Some(path) => write_file(path, &rendered)?,
        None => print!("{rendered}"),
    }
    Ok(())
}

fn cmd_report(args: &ReportArgs) -> Result<(), CliError> {
    let report = parse_report(&read_file(&args.in_file)?)?;
    let rendered = render_report(&report, args.format.into());
    match &args.out {
        Some(path) => write_file(path, &rendered)?,
        None => print!("{rendered}"),
    }
    Ok(())
}
