//! Random forest: gini trees on bootstrap samples with per-split feature
//! subsampling, combined by majority vote.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;
use crate::regress::ModelMeta;
use crate::rng::{derive_seed, stream};
use crate::tree::{grow, Criterion, GrowParams, Tree};

use super::{validate_binary, ClassifyError};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub rng_seed: u64,
    /// Bootstrap resampling of rows (n draws with replacement) per tree.
    pub bootstrap: bool,
    /// Candidate features re-drawn per split; defaults to ceil(sqrt(p)).
    pub features_per_split: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: None,
            rng_seed: 0,
            bootstrap: true,
            features_per_split: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    pub tree_seeds: Vec<u64>,
    pub n_trees: usize,
    pub meta: ModelMeta,
}

impl ForestModel {
    /// Majority vote over tree predictions; the tie goes to class 0.
    pub fn predict_matrix(&self, x: &Matrix) -> Vec<u8> {
        self.vote_fractions(x)
            .into_iter()
            .map(|f| u8::from(f > 0.5))
            .collect()
    }

    /// Fraction of trees voting for class 1.
    pub fn predict_proba_matrix(&self, x: &Matrix) -> Vec<f64> {
        self.vote_fractions(x)
    }

    fn vote_fractions(&self, x: &Matrix) -> Vec<f64> {
        let mut votes = vec![0usize; x.rows()];
        for tree in &self.trees {
            for (r, v) in votes.iter_mut().enumerate() {
                if tree.predict_row(x.row(r)) > 0.5 {
                    *v += 1;
                }
            }
        }
        votes
            .into_iter()
            .map(|v| v as f64 / self.trees.len() as f64)
            .collect()
    }
}

/// Train `n_trees` gini trees on per-tree bootstrap samples with derived
/// seeds; identical seeds give identical forests.
pub fn fit_random_forest(
    x: &Matrix,
    y: &[u8],
    params: &ForestParams,
    columns: &[String],
) -> Result<ForestModel, ClassifyError> {
    validate_binary(x, y)?;
    if y.is_empty() {
        return Err(ClassifyError::LengthMismatch { expected: 0, got: 0 });
    }
    let started = Instant::now();
    let n = x.rows();
    let p = x.cols();
    let m = params
        .features_per_split
        .unwrap_or_else(|| (p as f64).sqrt().ceil() as usize)
        .clamp(1, p);
    let yf: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();

    let tree_seeds: Vec<u64> = (0..params.n_trees)
        .map(|t| derive_seed(params.rng_seed, 0xf0f0 ^ t as u64))
        .collect();

    let grow_params = GrowParams {
        criterion: Criterion::Gini,
        max_depth: params.max_depth,
        min_samples_split: 2,
        features_per_split: if m < p { Some(m) } else { None },
    };

    let trees: Vec<Tree> = tree_seeds
        .iter()
        .map(|&seed| {
            let mut rng = stream(seed, 0);
            let idx: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            grow(x, &yf, idx, &grow_params, Some(&mut rng))
        })
        .collect();

    let mut meta = ModelMeta::new(
        "RF",
        serde_json::json!({
            "criterion": "gini",
            "n_trees": params.n_trees,
            "max_depth": params.max_depth,
            "features_per_split": m,
            "bootstrap": params.bootstrap,
            "rng_seed": params.rng_seed,
        }),
        columns,
    );
    meta.fit_time_s = started.elapsed().as_secs_f64();
    Ok(ForestModel {
        trees,
        tree_seeds,
        n_trees: params.n_trees,
        meta,
    })
}
