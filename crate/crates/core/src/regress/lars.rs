//! Lasso solution path by least-angle regression, with model selection by
//! an information criterion evaluated at every path breakpoint.
//!
//! Columns are centered and scaled to unit norm internally; the recorded
//! breakpoints are converted back to the original scale. The lasso
//! modification drops an active variable whose coefficient crosses zero and
//! re-inserts it later if its correlation catches up again. The path stops
//! when the residual decorrelates, when the active gram matrix turns
//! singular (exactly collinear columns can never all be active), or at the
//! iteration cap.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::matrix::{dot, solve_ldlt, Matrix};

use super::linear::center;
use super::{LinearModel, ModelMeta, RegressError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IcCriterion {
    Aic,
    Bic,
}

impl IcCriterion {
    pub fn as_str(self) -> &'static str {
        match self {
            IcCriterion::Aic => "aic",
            IcCriterion::Bic => "bic",
        }
    }

    /// `n ln(SS_res / n) + penalty * k`, `k` = nonzero coefficients + 1.
    pub fn score(self, n: usize, ss_res: f64, n_nonzero: usize) -> f64 {
        let nf = n as f64;
        let k = (n_nonzero + 1) as f64;
        let penalty = match self {
            IcCriterion::Aic => 2.0,
            IcCriterion::Bic => nf.ln(),
        };
        nf * (ss_res.max(1e-300) / nf).ln() + penalty * k
    }
}

/// One recorded path breakpoint, in original column scale.
#[derive(Debug, Clone)]
pub struct PathPoint {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub ss_res: f64,
    pub n_nonzero: usize,
    pub entered: Option<usize>,
    pub dropped: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct LarsPath {
    pub points: Vec<PathPoint>,
    /// True when no column carried any signal: the path is the null model.
    pub degenerate: bool,
    /// Set when the path ended early (singular gram or iteration cap).
    pub stopped: Option<String>,
}

/// Trace the full lasso path over the (centered, unit-norm) columns.
pub fn lars_lasso_path(x: &Matrix, y: &[f64]) -> Result<LarsPath, RegressError> {
    let n = x.rows();
    let p = x.cols();
    if n != y.len() {
        return Err(RegressError::LengthMismatch {
            expected: n,
            got: y.len(),
        });
    }
    if n <= 2 {
        return Err(RegressError::TooFewRows { n, needed: 3 });
    }
    if !x.all_finite() || y.iter().any(|v| !v.is_finite()) {
        return Err(RegressError::NonFiniteInput);
    }

    let (xc, yc, means, y_mean) = center(x, y);
    let norms: Vec<f64> = (0..p)
        .map(|j| (0..n).map(|r| xc.get(r, j).powi(2)).sum::<f64>().sqrt())
        .collect();
    let norm_floor = 1e-12 * norms.iter().cloned().fold(1.0_f64, f64::max);
    let usable: Vec<usize> = (0..p).filter(|&j| norms[j] > norm_floor).collect();

    // Unit-norm columns, stored column-major for the dot products below.
    let cols: Vec<Vec<f64>> = (0..p)
        .map(|j| {
            if norms[j] > norm_floor {
                (0..n).map(|r| xc.get(r, j) / norms[j]).collect()
            } else {
                vec![0.0; n]
            }
        })
        .collect();

    let to_original = |beta_n: &[f64], residual: &[f64], entered, dropped| {
        let coefficients: Vec<f64> = (0..p)
            .map(|j| {
                if norms[j] > norm_floor {
                    beta_n[j] / norms[j]
                } else {
                    0.0
                }
            })
            .collect();
        let intercept = y_mean - dot(&means, &coefficients);
        PathPoint {
            n_nonzero: coefficients.iter().filter(|v| **v != 0.0).count(),
            coefficients,
            intercept,
            ss_res: dot(residual, residual),
            entered,
            dropped,
        }
    };

    let mut beta_n = vec![0.0; p];
    let mut residual = yc.clone();
    let mut corr: Vec<f64> = (0..p).map(|j| dot(&cols[j], &residual)).collect();

    let mut points = vec![to_original(&beta_n, &residual, None, None)];
    let c0 = usable
        .iter()
        .map(|&j| corr[j].abs())
        .fold(0.0_f64, f64::max);
    let tol = 1e-10 * c0.max(1.0);
    if c0 <= tol {
        return Ok(LarsPath {
            points,
            degenerate: true,
            stopped: None,
        });
    }

    let mut active: Vec<usize> = Vec::new();
    let mut signs: Vec<f64> = Vec::new();
    let mut just_dropped = false;
    let mut stopped = None;
    let max_steps = 8 * p + 32;

    for _ in 0..max_steps {
        let c_max = usable
            .iter()
            .map(|&j| corr[j].abs())
            .fold(0.0_f64, f64::max);
        if c_max <= tol {
            break;
        }

        let mut entered = None;
        if !just_dropped && active.len() < usable.len() {
            let candidate = usable
                .iter()
                .copied()
                .filter(|j| !active.contains(j))
                .max_by(|&a, &b| {
                    corr[a]
                        .abs()
                        .partial_cmp(&corr[b].abs())
                        .unwrap()
                        .then(b.cmp(&a)) // ties -> lowest index
                })
                .expect("inactive set non-empty");
            active.push(candidate);
            signs.push(if corr[candidate] >= 0.0 { 1.0 } else { -1.0 });
            entered = Some(candidate);
        }
        just_dropped = false;

        // Equiangular direction over the signed active columns.
        let a_len = active.len();
        let mut gram = vec![0.0; a_len * a_len];
        for (ai, &ja) in active.iter().enumerate() {
            for (bi, &jb) in active.iter().enumerate().skip(ai) {
                let g = signs[ai] * signs[bi] * dot(&cols[ja], &cols[jb]);
                gram[ai * a_len + bi] = g;
                gram[bi * a_len + ai] = g;
            }
        }
        let ones = vec![1.0; a_len];
        let sol = match solve_ldlt(&gram, &ones, a_len) {
            Some(s) if s.dropped.is_empty() => s,
            _ => {
                stopped = Some("singular active gram matrix".to_string());
                break;
            }
        };
        let denom: f64 = sol.x.iter().sum();
        if denom <= 0.0 {
            stopped = Some("non-positive equiangular normalization".to_string());
            break;
        }
        let a_norm = 1.0 / denom.sqrt();
        let w: Vec<f64> = sol.x.iter().map(|v| v * a_norm).collect();
        let mut u = vec![0.0; n];
        for (ai, &j) in active.iter().enumerate() {
            let s = signs[ai] * w[ai];
            for (ui, cj) in u.iter_mut().zip(&cols[j]) {
                *ui += s * cj;
            }
        }

        // Step to the next entering event (or to the full LS solution).
        let mut gamma = c_max / a_norm;
        for &j in &usable {
            if active.contains(&j) {
                continue;
            }
            let a_j = dot(&cols[j], &u);
            for cand in [
                (c_max - corr[j]) / (a_norm - a_j),
                (c_max + corr[j]) / (a_norm + a_j),
            ] {
                if cand > 1e-12 && cand < gamma {
                    gamma = cand;
                }
            }
        }

        // Lasso modification: a coefficient crossing zero leaves first.
        let mut drop_at: Option<usize> = None;
        for (ai, &j) in active.iter().enumerate() {
            let dir = signs[ai] * w[ai];
            if dir == 0.0 {
                continue;
            }
            let cross = -beta_n[j] / dir;
            if cross > 1e-12 && cross < gamma {
                gamma = cross;
                drop_at = Some(ai);
            }
        }

        for (ai, &j) in active.iter().enumerate() {
            beta_n[j] += gamma * signs[ai] * w[ai];
        }
        for (ri, ui) in residual.iter_mut().zip(&u) {
            *ri -= gamma * ui;
        }
        for &j in &usable {
            corr[j] = dot(&cols[j], &residual);
        }

        let mut dropped = None;
        if let Some(ai) = drop_at {
            let j = active.remove(ai);
            signs.remove(ai);
            beta_n[j] = 0.0;
            just_dropped = true;
            dropped = Some(j);
        }

        points.push(to_original(&beta_n, &residual, entered, dropped));

        if active.len() == usable.len() && drop_at.is_none() {
            // Full least squares reached once correlations vanish.
            let c_now = usable
                .iter()
                .map(|&j| corr[j].abs())
                .fold(0.0_f64, f64::max);
            if c_now <= tol {
                break;
            }
        }
    }

    Ok(LarsPath {
        points,
        degenerate: false,
        stopped,
    })
}

/// Fit the lasso-LARS path and return the breakpoint minimizing `criterion`.
pub fn fit_lasso_lars_ic(
    x: &Matrix,
    y: &[f64],
    criterion: IcCriterion,
    columns: &[String],
) -> Result<LinearModel, RegressError> {
    let started = Instant::now();
    let path = lars_lasso_path(x, y)?;
    let n = x.rows();

    let mut best = 0;
    let mut best_score = f64::INFINITY;
    for (i, pt) in path.points.iter().enumerate() {
        let score = criterion.score(n, pt.ss_res, pt.n_nonzero);
        if score < best_score {
            best_score = score;
            best = i;
        }
    }
    let chosen = &path.points[best];

    let mut meta = ModelMeta::new(
        "LLIC",
        serde_json::json!({
            "criterion": criterion.as_str(),
            "path_breakpoints": path.points.len(),
            "selected_breakpoint": best,
        }),
        columns,
    );
    if path.degenerate {
        meta.notes.push("path degenerate: no column correlates with the target".into());
    }
    if let Some(reason) = &path.stopped {
        meta.notes.push(format!("path stopped early: {reason}"));
    }
    meta.fit_time_s = started.elapsed().as_secs_f64();
    Ok(LinearModel {
        intercept: chosen.intercept,
        coefficients: chosen.coefficients.clone(),
        meta,
    })
}
