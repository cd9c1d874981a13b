//! Regression learners: ordinary least squares, ridge, lasso-LARS with
//! information-criterion selection, cross-validated elastic net, and CART
//! regression trees, plus the R-squared metric.

mod elastic_net;
mod lars;
mod linear;
mod metrics;

pub use elastic_net::{fit_elastic_net, fit_elastic_net_cv, ElasticNetParams};
pub use lars::{fit_lasso_lars_ic, lars_lasso_path, IcCriterion, LarsPath, PathPoint};
pub use linear::{fit_ols, fit_ridge};
pub use metrics::r_squared;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Matrix;
use crate::tree::{grow, Criterion, GrowParams, Tree};

#[derive(Debug, Error)]
pub enum RegressError {
    #[error("rank-deficient system (n={n}, p={p}); offending columns: {columns:?}")]
    RankDeficient {
        columns: Vec<String>,
        n: usize,
        p: usize,
    },
    #[error("did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("schema mismatch: model was trained on {expected:?}, got {got:?}")]
    SchemaMismatch {
        expected: Vec<String>,
        got: Vec<String>,
    },
    #[error("input contains non-finite values")]
    NonFiniteInput,
    #[error("need at least {needed} rows, got {n}")]
    TooFewRows { n: usize, needed: usize },
    #[error("target is constant; R-squared is undefined")]
    ConstantTarget,
    #[error("length mismatch: {expected} vs {got}")]
    LengthMismatch { expected: usize, got: usize },
}

/// Training metadata carried by every fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub algorithm: String,
    pub hyperparameters: serde_json::Value,
    pub columns: Vec<String>,
    pub fit_time_s: f64,
    /// Free-form fit notes (zeroed collinear columns, degenerate paths, ...).
    pub notes: Vec<String>,
}

impl ModelMeta {
    pub fn new(algorithm: &str, hyperparameters: serde_json::Value, columns: &[String]) -> Self {
        ModelMeta {
            algorithm: algorithm.to_string(),
            hyperparameters,
            columns: columns.to_vec(),
            fit_time_s: 0.0,
            notes: Vec::new(),
        }
    }
}

/// Linear predictor `a0 + X w` with coefficients aligned to `meta.columns`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub meta: ModelMeta,
}

impl LinearModel {
    pub fn predict_matrix(&self, x: &Matrix) -> Vec<f64> {
        assert_eq!(x.cols(), self.coefficients.len());
        x.matvec(&self.coefficients)
            .into_iter()
            .map(|v| v + self.intercept)
            .collect()
    }
}

/// Regression tree with leaf means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub tree: Tree,
    pub meta: ModelMeta,
}

impl RegressionTree {
    pub fn predict_matrix(&self, x: &Matrix) -> Vec<f64> {
        self.tree.predict(x)
    }

    pub fn depth(&self) -> usize {
        self.tree.depth()
    }

    pub fn n_leaves(&self) -> usize {
        self.tree.n_leaves()
    }
}

#[derive(Debug, Clone)]
pub struct CartParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for CartParams {
    fn default() -> Self {
        CartParams {
            max_depth: None,
            min_samples_split: 2,
        }
    }
}

/// Greedy top-down CART regression with the mse criterion and best splitter.
pub fn fit_cart_regression(
    x: &Matrix,
    y: &[f64],
    params: &CartParams,
    columns: &[String],
) -> Result<RegressionTree, RegressError> {
    if !x.all_finite() || y.iter().any(|v| !v.is_finite()) {
        return Err(RegressError::NonFiniteInput);
    }
    if x.rows() == 0 || x.rows() != y.len() {
        return Err(RegressError::LengthMismatch {
            expected: x.rows(),
            got: y.len(),
        });
    }
    let started = std::time::Instant::now();
    let grow_params = GrowParams {
        criterion: Criterion::Mse,
        max_depth: params.max_depth,
        min_samples_split: params.min_samples_split,
        features_per_split: None,
    };
    let tree = grow(x, y, (0..x.rows()).collect(), &grow_params, None);
    let mut meta = ModelMeta::new(
        "CART",
        serde_json::json!({
            "criterion": "mse",
            "splitter": "best",
            "max_depth": params.max_depth,
            "min_samples_split": params.min_samples_split,
        }),
        columns,
    );
    meta.fit_time_s = started.elapsed().as_secs_f64();
    Ok(RegressionTree { tree, meta })
}

/// Uniform prediction over the regression model family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum RegressionModel {
    Linear(LinearModel),
    Tree(RegressionTree),
}

impl RegressionModel {
    pub fn meta(&self) -> &ModelMeta {
        match self {
            RegressionModel::Linear(m) => &m.meta,
            RegressionModel::Tree(m) => &m.meta,
        }
    }

    pub fn meta_mut(&mut self) -> &mut ModelMeta {
        match self {
            RegressionModel::Linear(m) => &mut m.meta,
            RegressionModel::Tree(m) => &mut m.meta,
        }
    }

    /// Predict after checking that the columns match training metadata.
    pub fn predict(&self, x: &Matrix, columns: &[String]) -> Result<Vec<f64>, RegressError> {
        if columns != self.meta().columns.as_slice() {
            return Err(RegressError::SchemaMismatch {
                expected: self.meta().columns.clone(),
                got: columns.to_vec(),
            });
        }
        Ok(self.predict_rows(x))
    }

    /// Predict by position, trusting the caller on column order.
    pub fn predict_rows(&self, x: &Matrix) -> Vec<f64> {
        match self {
            RegressionModel::Linear(m) => m.predict_matrix(x),
            RegressionModel::Tree(m) => m.predict_matrix(x),
        }
    }
}
