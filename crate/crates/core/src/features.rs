//! Feature construction: per-user average aggregates, the replicated re-join
//! onto job rows, role one-hot encoding, standardization, and per-task
//! dataset assembly.
//!
//! Aggregates are replicated, not cumulative: a user's averages are computed
//! once over all of their rows and attached unchanged to every row. That is
//! a deliberate leakage-accepting design and is flagged in evaluation
//! reports.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{JobRecord, Role};
use crate::matrix::Matrix;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("owner {user:?} has no aggregate entry")]
    UnknownUser { user: String },
}

/// Per-user means of usage and requests over that user's jobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserAggregate {
    pub user: String,
    pub a_cpu: f64,
    pub a_maxmem: f64,
    pub a_reqtime: f64,
    pub a_reqmem: f64,
    pub job_count: usize,
}

/// Arithmetic means per distinct owner. AVERAGE is the only aggregator.
pub fn compute_user_aggregates(jobs: &[JobRecord]) -> BTreeMap<String, UserAggregate> {
    let mut sums: BTreeMap<&str, (f64, f64, f64, f64, usize)> = BTreeMap::new();
    for j in jobs {
        let e = sums.entry(j.owner.as_str()).or_default();
        e.0 += j.cpu_s;
        e.1 += j.maxvmem_bytes;
        e.2 += j.req_time_s as f64;
        e.3 += j.req_mem_bytes as f64;
        e.4 += 1;
    }
    sums.into_iter()
        .map(|(user, (cpu, mem, rt, rm, n))| {
            let nf = n as f64;
            (
                user.to_string(),
                UserAggregate {
                    user: user.to_string(),
                    a_cpu: cpu / nf,
                    a_maxmem: mem / nf,
                    a_reqtime: rt / nf,
                    a_reqmem: rm / nf,
                    job_count: n,
                },
            )
        })
        .collect()
}

/// One job row joined with its owner's aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct JoinedJob {
    pub job: JobRecord,
    pub agg: UserAggregate,
}

/// Replicated re-join: one output row per input job, each carrying its
/// owner's aggregate tuple unchanged.
pub fn join_aggregates(
    jobs: &[JobRecord],
    aggs: &BTreeMap<String, UserAggregate>,
) -> Result<Vec<JoinedJob>, FeatureError> {
    jobs.iter()
        .map(|j| {
            aggs.get(&j.owner)
                .map(|agg| JoinedJob {
                    job: j.clone(),
                    agg: agg.clone(),
                })
                .ok_or_else(|| FeatureError::UnknownUser {
                    user: j.owner.clone(),
                })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Task {
    CpuRegression,
    MemRegression,
    FailureClassification,
}

impl Task {
    pub const ALL: [Task; 3] = [
        Task::CpuRegression,
        Task::MemRegression,
        Task::FailureClassification,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::CpuRegression => "cpu_regression",
            Task::MemRegression => "mem_regression",
            Task::FailureClassification => "failure_classification",
        }
    }

    pub fn from_name(s: &str) -> Option<Task> {
        Task::ALL.into_iter().find(|t| t.as_str() == s)
    }

    pub fn target_name(self) -> &'static str {
        match self {
            Task::CpuRegression => "cpu",
            Task::MemRegression => "maxvmem",
            Task::FailureClassification => "failed",
        }
    }

    pub fn is_classification(self) -> bool {
        matches!(self, Task::FailureClassification)
    }

    /// Aggregate columns joined for this task when per-user features are on.
    pub fn aggregate_columns(self) -> &'static [&'static str] {
        match self {
            Task::CpuRegression => &["aCPU", "aReqtime"],
            Task::MemRegression => &["aMaxmem", "aReqmem"],
            Task::FailureClassification => &["aCPU", "aMaxmem", "aReqtime", "aReqmem"],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnKind {
    Numeric,
    OneHot,
}

/// Per-column action of a fitted standardizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ColumnScale {
    /// One-hot columns pass through untouched.
    Passthrough,
    Standardize { mean: f64, std: f64 },
    /// Zero variance under standardization; the column is removed.
    Drop,
}

/// Fitted z-score parameters, aligned to the columns of the matrix the
/// scaler was fitted on. Variance is the population variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub columns: Vec<String>,
    pub scales: Vec<ColumnScale>,
}

impl Scaler {
    pub fn fit(x: &Matrix, columns: &[String], kinds: &[ColumnKind]) -> Scaler {
        assert_eq!(x.cols(), kinds.len());
        assert_eq!(x.cols(), columns.len());
        let n = x.rows() as f64;
        let means = x.col_means();
        let scales = (0..x.cols())
            .map(|c| {
                if kinds[c] == ColumnKind::OneHot {
                    return ColumnScale::Passthrough;
                }
                let mean = means[c];
                let var = (0..x.rows())
                    .map(|r| {
                        let d = x.get(r, c) - mean;
                        d * d
                    })
                    .sum::<f64>()
                    / n;
                let std = var.sqrt();
                if std <= 1e-12 * mean.abs().max(1.0) {
                    ColumnScale::Drop
                } else {
                    ColumnScale::Standardize { mean, std }
                }
            })
            .collect();
        Scaler {
            columns: columns.to_vec(),
            scales,
        }
    }

    /// Transform a matrix laid out like the fit input; dropped columns are
    /// removed from the output.
    pub fn apply(&self, x: &Matrix) -> Matrix {
        assert_eq!(x.cols(), self.scales.len(), "scaler/matrix column mismatch");
        let keep: Vec<usize> = (0..x.cols())
            .filter(|&c| self.scales[c] != ColumnScale::Drop)
            .collect();
        let mut out = Matrix::zeros(x.rows(), keep.len());
        for r in 0..x.rows() {
            for (j, &c) in keep.iter().enumerate() {
                let v = match self.scales[c] {
                    ColumnScale::Passthrough => x.get(r, c),
                    ColumnScale::Standardize { mean, std } => (x.get(r, c) - mean) / std,
                    ColumnScale::Drop => unreachable!(),
                };
                out.set(r, j, v);
            }
        }
        out
    }

    /// Column names surviving the transform, in order.
    pub fn output_columns(&self) -> Vec<String> {
        self.columns
            .iter()
            .zip(&self.scales)
            .filter(|(_, s)| **s != ColumnScale::Drop)
            .map(|(c, _)| c.clone())
            .collect()
    }

    pub fn dropped_columns(&self) -> Vec<String> {
        self.columns
            .iter()
            .zip(&self.scales)
            .filter(|(_, s)| **s == ColumnScale::Drop)
            .map(|(c, _)| c.clone())
            .collect()
    }
}

/// Feature matrix, named columns, and target vector for one task.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub columns: Vec<String>,
    pub kinds: Vec<ColumnKind>,
    pub x: Matrix,
    pub y: Vec<f64>,
    pub task: Task,
    pub with_user_features: bool,
    pub scaler: Option<Scaler>,
    /// (mean, std) removed from a standardized regression target; the
    /// binary classification target is never scaled.
    pub target_scale: Option<(f64, f64)>,
    pub dropped_columns: Vec<String>,
}

/// Population (mean, std) of a regression target; `None` for binary targets
/// or when the target is constant.
pub fn target_stats(task: Task, y: &[f64]) -> Option<(f64, f64)> {
    if task.is_classification() || y.is_empty() {
        return None;
    }
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    (std > 1e-12 * mean.abs().max(1.0)).then_some((mean, std))
}

/// Dense user codes in first-appearance order.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct UserEncoder {
    pub names: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, u32>,
}

impl UserEncoder {
    pub fn fit(jobs: &[JobRecord]) -> UserEncoder {
        let mut enc = UserEncoder::default();
        for j in jobs {
            enc.insert(&j.owner);
        }
        enc
    }

    fn insert(&mut self, name: &str) -> u32 {
        if let Some(&c) = self.index.get(name) {
            return c;
        }
        let code = self.names.len() as u32;
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), code);
        code
    }

    pub fn code(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    /// Rebuild the lookup map after deserialization.
    pub fn rebuild_index(&mut self) {
        self.index = self
            .names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i as u32))
            .collect();
    }
}

fn one_hot(role: Role) -> [f64; 7] {
    let mut v = [0.0; 7];
    let idx = Role::ALL.iter().position(|r| *r == role).unwrap();
    v[idx] = 1.0;
    v
}

/// Column names for a task/ablation, in schema order: the numeric block,
/// then the task's aggregates when enabled, then the role one-hots.
pub fn column_names(task: Task, with_user_features: bool) -> (Vec<String>, Vec<ColumnKind>) {
    let mut names: Vec<String> = vec!["id".into(), "reqMem".into(), "reqTime".into(), "project".into()];
    let mut kinds = vec![ColumnKind::Numeric; 4];
    if with_user_features {
        for agg in task.aggregate_columns() {
            names.push((*agg).into());
            kinds.push(ColumnKind::Numeric);
        }
    }
    for role in Role::ALL {
        names.push(format!("p_{role}"));
        kinds.push(ColumnKind::OneHot);
    }
    (names, kinds)
}

/// Assemble the feature matrix and target for one task.
///
/// When `standardize` is set the scaler is fitted over the whole input;
/// inside an evaluation split the caller should instead fit a [`Scaler`] on
/// the training rows and apply it to both sides.
pub fn build_dataset(
    rows: &[JoinedJob],
    task: Task,
    with_user_features: bool,
    standardize: bool,
) -> Dataset {
    let (columns, kinds) = column_names(task, with_user_features);
    let mut encoder = UserEncoder::default();
    let mut x = Matrix::zeros(rows.len(), columns.len());
    let mut y = Vec::with_capacity(rows.len());

    for (r, row) in rows.iter().enumerate() {
        let job = &row.job;
        let code = encoder.insert(&job.owner);
        let mut v: Vec<f64> = vec![
            code as f64,
            job.req_mem_bytes as f64,
            job.req_time_s as f64,
            job.project_id as f64,
        ];
        if with_user_features {
            for agg in task.aggregate_columns() {
                v.push(match *agg {
                    "aCPU" => row.agg.a_cpu,
                    "aMaxmem" => row.agg.a_maxmem,
                    "aReqtime" => row.agg.a_reqtime,
                    "aReqmem" => row.agg.a_reqmem,
                    _ => unreachable!(),
                });
            }
        }
        v.extend(one_hot(job.role));
        x.row_mut(r).copy_from_slice(&v);
        y.push(match task {
            Task::CpuRegression => job.cpu_s,
            Task::MemRegression => job.maxvmem_bytes,
            Task::FailureClassification => f64::from(job.failed),
        });
    }

    if standardize {
        let scaler = Scaler::fit(&x, &columns, &kinds);
        let x_std = scaler.apply(&x);
        let out_columns = scaler.output_columns();
        let dropped = scaler.dropped_columns();
        let out_kinds: Vec<ColumnKind> = columns
            .iter()
            .zip(&kinds)
            .filter(|(c, _)| !dropped.contains(c))
            .map(|(_, k)| *k)
            .collect();
        let target_scale = target_stats(task, &y);
        if let Some((mean, std)) = target_scale {
            for v in &mut y {
                *v = (*v - mean) / std;
            }
        }
        Dataset {
            columns: out_columns,
            kinds: out_kinds,
            x: x_std,
            y,
            task,
            with_user_features,
            scaler: Some(scaler),
            target_scale,
            dropped_columns: dropped,
        }
    } else {
        Dataset {
            columns,
            kinds,
            x,
            y,
            task,
            with_user_features,
            scaler: None,
            target_scale: None,
            dropped_columns: Vec::new(),
        }
    }
}

impl Dataset {
    /// Delimiter-separated export with a header row; the target is the last
    /// column.
    pub fn to_delimited(&self, delim: char) -> String {
        let mut out = String::new();
        for c in &self.columns {
            out.push_str(c);
            out.push(delim);
        }
        out.push_str(self.task.target_name());
        out.push('\n');
        for r in 0..self.x.rows() {
            for v in self.x.row(r) {
                out.push_str(&v.to_string());
                out.push(delim);
            }
            out.push_str(&self.y[r].to_string());
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Role;

    fn job(owner: &str, cpu: f64, mem: f64, rt: u64, rm: u64) -> JobRecord {
        JobRecord {
            owner: owner.into(),
            role: Role::Graduate,
            failed: 0,
            cpu_s: cpu,
            maxvmem_bytes: mem,
            req_time_s: rt,
            req_mem_bytes: rm,
            project_id: 0,
            submission_time: 0,
        }
    }

    #[test]
    fn two_point_mean_and_single_job_identity() {
        let jobs = vec![job("u", 2.0, 8.0, 10, 100), job("u", 4.0, 16.0, 30, 300)];
        let aggs = compute_user_aggregates(&jobs);
        let a = &aggs["u"];
        assert_eq!(a.a_cpu, 3.0);
        assert_eq!(a.a_maxmem, 12.0);
        assert_eq!(a.a_reqtime, 20.0);
        assert_eq!(a.a_reqmem, 200.0);
        assert_eq!(a.job_count, 2);

        let solo = vec![job("v", 7.0, 9.0, 11, 13)];
        let a = &compute_user_aggregates(&solo)["v"];
        assert_eq!((a.a_cpu, a.a_maxmem, a.a_reqtime, a.a_reqmem), (7.0, 9.0, 11.0, 13.0));
    }

    #[test]
    fn aggregates_match_pairwise_sum_oracle() {
        // Independent route: pairwise summation instead of a running sum.
        fn pairwise(v: &[f64]) -> f64 {
            match v.len() {
                0 => 0.0,
                1 => v[0],
                n => pairwise(&v[..n / 2]) + pairwise(&v[n / 2..]),
            }
        }
        let mut rng_state = 0x2545_f491_4f6c_dd1du64;
        let mut next = move || {
            rng_state ^= rng_state << 13;
            rng_state ^= rng_state >> 7;
            rng_state ^= rng_state << 17;
            (rng_state >> 11) as f64 / (1u64 << 53) as f64
        };
        let jobs: Vec<JobRecord> = (0..1000)
            .map(|_| {
                job(
                    "u",
                    next() * 1e4,
                    next() * 1e9,
                    (next() * 1e5) as u64 + 1,
                    (next() * 1e10) as u64 + 1,
                )
            })
            .collect();
        let a = &compute_user_aggregates(&jobs)["u"];
        let cpus: Vec<f64> = jobs.iter().map(|j| j.cpu_s).collect();
        let expect = pairwise(&cpus) / 1000.0;
        assert!((a.a_cpu - expect).abs() <= 1e-9 * expect.abs());
    }

    #[test]
    fn join_replicates_aggregates_per_user() {
        let mut jobs = Vec::new();
        for i in 0..5 {
            jobs.push(job("u", i as f64, 1.0, 1, 1));
        }
        jobs.push(job("v", 10.0, 2.0, 2, 2));
        jobs.push(job("v", 20.0, 2.0, 2, 2));
        let aggs = compute_user_aggregates(&jobs);
        let joined = join_aggregates(&jobs, &aggs).unwrap();
        assert_eq!(joined.len(), jobs.len());
        let u_rows: Vec<_> = joined.iter().filter(|r| r.job.owner == "u").collect();
        assert_eq!(u_rows.len(), 5);
        assert!(u_rows.iter().all(|r| r.agg == u_rows[0].agg));
        let distinct: std::collections::BTreeSet<String> =
            joined.iter().map(|r| r.agg.user.clone()).collect();
        assert_eq!(distinct.len(), 2);
    }

    #[test]
    fn join_is_insensitive_to_input_order() {
        let mut jobs = Vec::new();
        for u in 0..3 {
            for i in 0..4 {
                jobs.push(job(&format!("u{u}"), (u * 7 + i) as f64, 1.0, 1 + i as u64, 1));
            }
        }
        let aggs = compute_user_aggregates(&jobs);
        let joined = join_aggregates(&jobs, &aggs).unwrap();
        let mut shuffled = jobs.clone();
        shuffled.reverse();
        shuffled.swap(0, 5);
        let joined_shuffled = join_aggregates(&shuffled, &aggs).unwrap();

        let key = |r: &JoinedJob| {
            (
                r.job.owner.clone(),
                r.job.cpu_s.to_bits(),
                r.agg.a_cpu.to_bits(),
            )
        };
        let mut a: Vec<_> = joined.iter().map(key).collect();
        let mut b: Vec<_> = joined_shuffled.iter().map(key).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn join_rejects_unknown_owner() {
        let jobs = vec![job("u", 1.0, 1.0, 1, 1)];
        let aggs = BTreeMap::new();
        assert!(matches!(
            join_aggregates(&jobs, &aggs),
            Err(FeatureError::UnknownUser { .. })
        ));
    }

    fn joined_fixture() -> Vec<JoinedJob> {
        let mut jobs = Vec::new();
        for u in 0..4usize {
            for i in 0..6u64 {
                let mut j = job(
                    &format!("u{u}"),
                    (u as u64 * 10 + i) as f64,
                    (1000 + u as u64 * 100 + i * 7) as f64,
                    60 + i,
                    1024 * (u as u64 + 1),
                );
                j.role = Role::ALL[u % 7];
                j.project_id = u as u32 % 3;
                j.failed = u8::from(i % 3 == 0);
                jobs.push(j);
            }
        }
        let aggs = compute_user_aggregates(&jobs);
        join_aggregates(&jobs, &aggs).unwrap()
    }

    #[test]
    fn ablation_column_sets_nest() {
        let rows = joined_fixture();
        for task in Task::ALL {
            let with = build_dataset(&rows, task, true, false);
            let without = build_dataset(&rows, task, false, false);
            assert!(without.columns.iter().all(|c| with.columns.contains(c)));
            assert!(without.columns.len() < with.columns.len());
            assert!(!without.columns.iter().any(|c| c.starts_with('a')));
            let expected_aggs = task.aggregate_columns().len();
            assert_eq!(with.columns.len(), without.columns.len() + expected_aggs);
        }
    }

    #[test]
    fn without_aggregates_equals_with_aggregates_minus_those_columns() {
        let rows = joined_fixture();
        for task in Task::ALL {
            let with = build_dataset(&rows, task, true, false);
            let without = build_dataset(&rows, task, false, false);
            assert_eq!(with.y, without.y);
            for (c_out, name) in without.columns.iter().enumerate() {
                let c_in = with.columns.iter().position(|c| c == name).unwrap();
                for r in 0..with.x.rows() {
                    assert_eq!(with.x.get(r, c_in), without.x.get(r, c_out));
                }
            }
        }
    }

    #[test]
    fn one_hots_partition_each_row() {
        let rows = joined_fixture();
        let ds = build_dataset(&rows, Task::FailureClassification, true, false);
        let hot: Vec<usize> = ds
            .columns
            .iter()
            .enumerate()
            .filter(|(_, c)| c.starts_with("p_"))
            .map(|(i, _)| i)
            .collect();
        assert_eq!(hot.len(), 7);
        for r in 0..ds.x.rows() {
            let s: f64 = hot.iter().map(|&c| ds.x.get(r, c)).sum();
            assert_eq!(s, 1.0);
        }
    }

    #[test]
    fn standardized_columns_have_zero_mean_unit_variance() {
        let rows = joined_fixture();
        let ds = build_dataset(&rows, Task::CpuRegression, true, true);
        let n = ds.x.rows() as f64;
        for (c, kind) in ds.kinds.iter().enumerate() {
            if *kind != ColumnKind::Numeric {
                continue;
            }
            let mean: f64 = (0..ds.x.rows()).map(|r| ds.x.get(r, c)).sum::<f64>() / n;
            let var: f64 = (0..ds.x.rows())
                .map(|r| (ds.x.get(r, c) - mean).powi(2))
                .sum::<f64>()
                / n;
            assert!(mean.abs() < 1e-9, "column {c} mean {mean}");
            assert!((var - 1.0).abs() < 1e-9, "column {c} var {var}");
        }
    }

    #[test]
    fn saved_scaler_reproduces_training_matrix_exactly() {
        let rows = joined_fixture();
        let raw = build_dataset(&rows, Task::MemRegression, true, false);
        let std = build_dataset(&rows, Task::MemRegression, true, true);
        let scaler = std.scaler.clone().unwrap();
        let again = scaler.apply(&raw.x);
        assert_eq!(again, std.x);
    }

    #[test]
    fn zero_variance_column_is_dropped_and_recorded() {
        // All rows share one project -> the project column is constant.
        let mut rows = joined_fixture();
        for r in &mut rows {
            r.job.project_id = 5;
        }
        let ds = build_dataset(&rows, Task::CpuRegression, false, true);
        assert_eq!(ds.dropped_columns, vec!["project".to_string()]);
        assert!(!ds.columns.contains(&"project".to_string()));
    }

    #[test]
    fn user_encoder_uses_first_appearance_order() {
        let jobs = vec![
            job("zed", 1.0, 1.0, 1, 1),
            job("amy", 1.0, 1.0, 1, 1),
            job("zed", 1.0, 1.0, 1, 1),
        ];
        let enc = UserEncoder::fit(&jobs);
        assert_eq!(enc.names, vec!["zed".to_string(), "amy".to_string()]);
        assert_eq!(enc.code("zed"), Some(0));
        assert_eq!(enc.code("amy"), Some(1));
        assert_eq!(enc.code("bob"), None);
    }
}
