//! Desk-scale synthetic accounting workloads with a latent user-expertise
//! model.
//!
//! Each user draws an expertise level, base resource demands, and a CPU
//! efficiency. Jobs realize true demand as the user base times lognormal
//! noise; requests are the true need times a safety margin whose center
//! shrinks toward 1 and whose spread grows as expertise drops. A job fails
//! exactly when true demand exceeds a request, in which case the recorded
//! usage is truncated at the request (the limit kill). Emitted files follow
//! the ingest module's accounting and roles formats bit for bit.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::ingest::{roles_to_text, RawAccountingRecord, Role};
use crate::rng::stream;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_users: usize,
    pub jobs_per_user: (usize, usize),
    /// Sampling weights over [Faculty, Graduate, PostDoc, ResearchAss,
    /// Staff, UnderGra, Unknowing]; must sum to 1.
    pub role_weights: [f64; 7],
    pub n_projects: usize,
    /// Median and lognormal sigma of per-user base runtime (seconds).
    pub base_time_median_s: f64,
    pub base_time_sigma: f64,
    /// Median and lognormal sigma of per-user base memory (bytes).
    pub base_mem_median_bytes: f64,
    pub base_mem_sigma: f64,
    /// Per-user CPU efficiency range (cpu seconds per wallclock second).
    pub cpu_efficiency: (f64, f64),
    /// Job-level lognormal noise sigmas on runtime and memory.
    pub time_noise_sigma: f64,
    pub mem_noise_sigma: f64,
    /// Margin model: center = scale * (base + headroom * expertise), spread
    /// = floor + noise * (1 - expertise).
    pub margin_base: f64,
    pub margin_headroom: f64,
    pub margin_noise: f64,
    pub margin_noise_floor: f64,
    pub margin_scale: f64,
    pub window_start: i64,
    pub window_span_s: i64,
    pub rng_seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_users: 50,
            jobs_per_user: (400, 400),
            role_weights: [0.12, 0.38, 0.08, 0.12, 0.05, 0.20, 0.05],
            n_projects: 12,
            base_time_median_s: 1800.0,
            base_time_sigma: 0.9,
            base_mem_median_bytes: 2.0 * (1u64 << 30) as f64,
            base_mem_sigma: 1.0,
            cpu_efficiency: (0.25, 1.0),
            time_noise_sigma: 0.5,
            mem_noise_sigma: 0.4,
            margin_base: 1.3,
            margin_headroom: 1.1,
            margin_noise: 0.4,
            margin_noise_floor: 0.3,
            margin_scale: 1.0,
            window_start: 1_600_000_000,
            window_span_s: 94_608_000, // three years
            rng_seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.n_users == 0 {
            return Err("n_users must be positive".into());
        }
        if self.jobs_per_user.0 == 0 || self.jobs_per_user.0 > self.jobs_per_user.1 {
            return Err("jobs_per_user must be a non-empty positive range".into());
        }
        let weight_sum: f64 = self.role_weights.iter().sum();
        if self.role_weights.iter().any(|&w| w < 0.0) || (weight_sum - 1.0).abs() > 1e-9 {
            return Err("role_weights must be non-negative and sum to 1".into());
        }
        for (name, v) in [
            ("base_time_median_s", self.base_time_median_s),
            ("base_mem_median_bytes", self.base_mem_median_bytes),
            ("margin_base", self.margin_base),
            ("margin_scale", self.margin_scale),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("{name} must be positive"));
            }
        }
        for (name, v) in [
            ("base_time_sigma", self.base_time_sigma),
            ("base_mem_sigma", self.base_mem_sigma),
            ("time_noise_sigma", self.time_noise_sigma),
            ("mem_noise_sigma", self.mem_noise_sigma),
            ("margin_headroom", self.margin_headroom),
            ("margin_noise", self.margin_noise),
            ("margin_noise_floor", self.margin_noise_floor),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(format!("{name} must be non-negative"));
            }
        }
        if self.cpu_efficiency.0 <= 0.0 || self.cpu_efficiency.0 > self.cpu_efficiency.1 {
            return Err("cpu_efficiency must be a positive range".into());
        }
        if self.window_span_s <= 0 {
            return Err("window_span_s must be positive".into());
        }
        Ok(())
    }
}

/// Latent per-user parameters, kept for oracle tests.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruthUser {
    pub name: String,
    pub role: Role,
    pub expertise: f64,
    pub base_time_s: f64,
    pub base_mem_bytes: f64,
    pub cpu_efficiency: f64,
    pub project: String,
}

/// Ground truth for one emitted job.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruthJob {
    pub owner: String,
    pub job_number: u64,
    pub true_runtime_s: f64,
    pub true_mem_bytes: f64,
    pub req_time_s: u64,
    pub req_mem_bytes: u64,
    pub failed: bool,
}

#[derive(Debug, Clone)]
pub struct Workload {
    pub accounting: String,
    pub roles: String,
    pub records: Vec<RawAccountingRecord>,
    pub users: Vec<TruthUser>,
    pub jobs: Vec<TruthJob>,
}

fn lognormal(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    if sigma <= 0.0 {
        return 1.0;
    }
    let n = Normal::new(0.0, sigma).expect("finite sigma");
    n.sample(rng).exp()
}

fn pick_role(rng: &mut ChaCha8Rng, weights: &[f64; 7]) -> Role {
    let x: f64 = rng.random_range(0.0..1.0);
    let mut acc = 0.0;
    for (role, w) in Role::ALL.into_iter().zip(weights) {
        acc += w;
        if x < acc {
            return role;
        }
    }
    Role::Unknowing
}

/// Generate a workload: accounting text, roles text, the records given to
/// the serializer, and the ground truth behind them.
///
/// Deterministic given the config; per-user streams are derived from
/// `rng_seed`, and output is ordered by user index then job index.
pub fn generate_workload(cfg: &SynthConfig) -> Workload {
    assert!(cfg.validate().is_ok(), "invalid SynthConfig: {:?}", cfg.validate());

    let mut records = Vec::new();
    let mut users = Vec::new();
    let mut jobs = Vec::new();
    let mut roles_map: BTreeMap<String, Role> = BTreeMap::new();
    let mut job_number: u64 = 1000;

    for u in 0..cfg.n_users {
        let mut rng = stream(cfg.rng_seed, u as u64);
        let name = format!("user_{u:03}");
        let role = pick_role(&mut rng, &cfg.role_weights);
        let expertise: f64 = rng.random_range(0.0..1.0);
        let base_time_s = cfg.base_time_median_s * lognormal(&mut rng, cfg.base_time_sigma);
        let base_mem_bytes = cfg.base_mem_median_bytes * lognormal(&mut rng, cfg.base_mem_sigma);
        let cpu_efficiency = rng.random_range(cfg.cpu_efficiency.0..=cfg.cpu_efficiency.1);
        let project = format!("proj_{:02}", rng.random_range(0..cfg.n_projects));
        let n_jobs = rng.random_range(cfg.jobs_per_user.0..=cfg.jobs_per_user.1);

        // Every 17th user is missing from the directory dump.
        if u % 17 != 9 {
            roles_map.insert(name.clone(), role);
        }

        let margin_mu = cfg.margin_scale * (cfg.margin_base + cfg.margin_headroom * expertise);
        let margin_sigma = cfg.margin_noise_floor + cfg.margin_noise * (1.0 - expertise);

        for i in 0..n_jobs {
            let true_runtime_s = base_time_s * lognormal(&mut rng, cfg.time_noise_sigma);
            let true_mem_bytes = base_mem_bytes * lognormal(&mut rng, cfg.mem_noise_sigma);
            let req_time_s = (true_runtime_s * margin_mu * lognormal(&mut rng, margin_sigma))
                .ceil()
                .max(1.0) as u64;
            let req_mem_bytes = (true_mem_bytes * margin_mu * lognormal(&mut rng, margin_sigma))
                .ceil()
                .max(1.0) as u64;

            let time_kill = true_runtime_s > req_time_s as f64;
            let mem_kill = true_mem_bytes > req_mem_bytes as f64;
            let failed = time_kill || mem_kill;
            let runtime_s = if time_kill {
                req_time_s as f64
            } else {
                true_runtime_s
            };
            let maxvmem_bytes = if mem_kill {
                req_mem_bytes as f64
            } else {
                true_mem_bytes
            };
            let cpu_s = cpu_efficiency * runtime_s;

            let submission_time =
                cfg.window_start + rng.random_range(0..cfg.window_span_s);
            let start_time = submission_time + rng.random_range(5..600);
            let end_time = start_time + runtime_s.ceil() as i64;

            let mut category = format!("-l h_rt={req_time_s},h_vmem={req_mem_bytes}");
            if i % 5 == 2 {
                category.push_str(" -pe smp 1");
            }
            if i % 7 == 3 {
                // Ad-hoc context token; exercises colon escaping in the log.
                category.push_str(&format!(" -ac ctx:{}", i % 5));
            }
            let qname = match rng.random_range(0..20) {
                0 => "highmem.q",
                1 | 2 => "long.q",
                _ => "batch.q",
            };

            let (failed_code, exit_status) = if failed { (100, 137) } else { (0, 0) };
            let ru_utime = cpu_s * 0.92;
            let ru_stime = cpu_s - ru_utime;

            let mut extra: Vec<String> = Vec::with_capacity(32);
            extra.push(format!("node{:03}", job_number % 40)); // hostname
            extra.push("users".into()); // group
            extra.push(format!("run_{u:03}_{i}")); // job name
            extra.push("sge".into()); // account
            extra.push("0".into()); // priority
            extra.push(ru_utime.to_string()); // ru_utime
            extra.push(ru_stime.to_string()); // ru_stime
            for _ in 0..15 {
                extra.push("0".into()); // remaining ru_* counters
            }
            extra.push("defaultdepartment".into()); // department
            extra.push("NONE".into()); // granted_pe
            extra.push("1".into()); // slots
            extra.push("0".into()); // task_number
            extra.push("0.0".into()); // mem (GB-seconds, unused)
            extra.push("0.0".into()); // io
            extra.push("0.0".into()); // iow
            extra.push("NONE".into()); // pe_taskid
            extra.push("0".into()); // arid
            extra.push("0".into()); // ar_submission_time
            debug_assert_eq!(extra.len(), 32);

            records.push(RawAccountingRecord {
                qname: qname.into(),
                owner: name.clone(),
                job_number,
                submission_time,
                start_time,
                end_time,
                failed_code,
                exit_status,
                wallclock_s: runtime_s,
                cpu_s,
                maxvmem_bytes,
                project: project.clone(),
                category,
                extra,
            });
            jobs.push(TruthJob {
                owner: name.clone(),
                job_number,
                true_runtime_s,
                true_mem_bytes,
                req_time_s,
                req_mem_bytes,
                failed,
            });
            job_number += 1;
        }

        users.push(TruthUser {
            name,
            role,
            expertise,
            base_time_s,
            base_mem_bytes,
            cpu_efficiency,
            project,
        });
    }

    let mut accounting = String::from("# accounting dump (synthetic)\n");
    for rec in &records {
        accounting.push_str(&rec.to_line());
        accounting.push('\n');
    }

    Workload {
        accounting,
        roles: roles_to_text(&roles_map),
        records,
        users,
        jobs,
    }
}
