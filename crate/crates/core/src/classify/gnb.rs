//! Gaussian naive Bayes with per-class maximum-likelihood means and
//! variances, floored at 1e-9 times the largest feature variance.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;
use crate::regress::ModelMeta;

use super::{validate_binary, ClassifyError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNBModel {
    pub priors: [f64; 2],
    pub means: [Vec<f64>; 2],
    pub variances: [Vec<f64>; 2],
    pub meta: ModelMeta,
}

impl GaussianNBModel {
    fn log_posteriors(&self, row: &[f64]) -> [f64; 2] {
        let mut out = [0.0; 2];
        for c in 0..2 {
            let mut ll = self.priors[c].ln();
            for (j, &v) in row.iter().enumerate() {
                let mu = self.means[c][j];
                let var = self.variances[c][j];
                ll += -0.5 * ((v - mu) * (v - mu) / var + var.ln() + LN_2PI);
            }
            out[c] = ll;
        }
        out
    }

    /// Majority by log posterior; the tie goes to class 0.
    pub fn predict_matrix(&self, x: &Matrix) -> Vec<u8> {
        (0..x.rows())
            .map(|r| {
                let lp = self.log_posteriors(x.row(r));
                u8::from(lp[1] > lp[0])
            })
            .collect()
    }

    /// Posterior probability of class 1 via the normalized likelihoods.
    pub fn predict_proba_matrix(&self, x: &Matrix) -> Vec<f64> {
        (0..x.rows())
            .map(|r| {
                let lp = self.log_posteriors(x.row(r));
                1.0 / (1.0 + (lp[0] - lp[1]).exp())
            })
            .collect()
    }
}

const LN_2PI: f64 = 1.8378770664093453;

/// Fit class priors and per-class feature Gaussians.
pub fn fit_gnb(x: &Matrix, y: &[u8], columns: &[String]) -> Result<GaussianNBModel, ClassifyError> {
    validate_binary(x, y)?;
    let n = x.rows();
    let p = x.cols();
    let n1 = y.iter().filter(|&&v| v == 1).count();
    let n0 = n - n1;
    if n0 == 0 || n1 == 0 {
        return Err(ClassifyError::SingleClass);
    }
    let started = Instant::now();

    let mut means = [vec![0.0; p], vec![0.0; p]];
    for r in 0..n {
        let c = usize::from(y[r]);
        for (j, &v) in x.row(r).iter().enumerate() {
            means[c][j] += v;
        }
    }
    for (c, count) in [(0, n0), (1, n1)] {
        for m in &mut means[c] {
            *m /= count as f64;
        }
    }

    let mut variances = [vec![0.0; p], vec![0.0; p]];
    for r in 0..n {
        let c = usize::from(y[r]);
        for (j, &v) in x.row(r).iter().enumerate() {
            let d = v - means[c][j];
            variances[c][j] += d * d;
        }
    }
    for (c, count) in [(0, n0), (1, n1)] {
        for v in &mut variances[c] {
            *v /= count as f64;
        }
    }

    // Floor: 1e-9 times the largest overall feature variance (or 1e-9 when
    // every feature is constant) keeps densities finite.
    let overall_means = x.col_means();
    let max_var = (0..p)
        .map(|j| {
            (0..n)
                .map(|r| {
                    let d = x.get(r, j) - overall_means[j];
                    d * d
                })
                .sum::<f64>()
                / n as f64
        })
        .fold(0.0_f64, f64::max);
    let floor = (1e-9 * max_var).max(1e-18);
    for c in 0..2 {
        for v in &mut variances[c] {
            if *v < floor {
                *v = floor;
            }
        }
    }

    let mut meta = ModelMeta::new("GNB", serde_json::json!({ "priors": "empirical" }), columns);
    meta.fit_time_s = started.elapsed().as_secs_f64();
    Ok(GaussianNBModel {
        priors: [n0 as f64 / n as f64, n1 as f64 / n as f64],
        means,
        variances,
        meta,
    })
}
