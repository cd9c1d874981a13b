//! Binary classifiers: logistic regression, CART with the gini criterion,
//! Gaussian naive Bayes, and a bootstrap random forest, plus the accuracy
//! and F1 metrics.
//!
//! Ties break toward class 0 everywhere so predictions are deterministic.

mod forest;
mod gnb;
mod logistic;
mod metrics;

pub use forest::{fit_random_forest, ForestModel, ForestParams};
pub use gnb::{fit_gnb, GaussianNBModel};
pub use logistic::{fit_logistic, LogisticModel};
pub use metrics::{accuracy, f1, precision_recall};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Matrix;
use crate::regress::ModelMeta;
use crate::tree::{grow, Criterion, GrowParams, Tree};

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("training labels are a single class")]
    SingleClass,
    #[error("did not converge: gradient norm {gradient_norm:.3e} after {iterations} iterations")]
    NonConvergence {
        gradient_norm: f64,
        iterations: usize,
    },
    #[error("schema mismatch: model was trained on {expected:?}, got {got:?}")]
    SchemaMismatch {
        expected: Vec<String>,
        got: Vec<String>,
    },
    #[error("labels must be 0 or 1")]
    InvalidLabels,
    #[error("input contains non-finite values")]
    NonFiniteInput,
    #[error("length mismatch: {expected} vs {got}")]
    LengthMismatch { expected: usize, got: usize },
}

pub(crate) fn validate_binary(x: &Matrix, y: &[u8]) -> Result<(), ClassifyError> {
    if x.rows() != y.len() {
        return Err(ClassifyError::LengthMismatch {
            expected: x.rows(),
            got: y.len(),
        });
    }
    if !x.all_finite() {
        return Err(ClassifyError::NonFiniteInput);
    }
    if y.iter().any(|&v| v > 1) {
        return Err(ClassifyError::InvalidLabels);
    }
    Ok(())
}

/// Gini impurity of a binary label set: `1 - p0^2 - p1^2`.
pub fn gini_impurity(labels: &[u8]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let p = labels.iter().map(|&v| f64::from(v)).sum::<f64>() / labels.len() as f64;
    1.0 - p * p - (1.0 - p) * (1.0 - p)
}

/// Classification tree: leaves store the positive-class fraction and
/// predict the majority class (ties go to class 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationTree {
    pub tree: Tree,
    pub meta: ModelMeta,
}

impl ClassificationTree {
    pub fn predict_matrix(&self, x: &Matrix) -> Vec<u8> {
        self.tree
            .predict(x)
            .into_iter()
            .map(|p| u8::from(p > 0.5))
            .collect()
    }

    pub fn predict_proba_matrix(&self, x: &Matrix) -> Vec<f64> {
        self.tree.predict(x)
    }
}

#[derive(Debug, Clone)]
pub struct CartClassifierParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for CartClassifierParams {
    fn default() -> Self {
        CartClassifierParams {
            max_depth: None,
            min_samples_split: 2,
        }
    }
}

/// Greedy CART classification minimizing weighted child gini impurity.
pub fn fit_cart_classifier(
    x: &Matrix,
    y: &[u8],
    params: &CartClassifierParams,
    columns: &[String],
) -> Result<ClassificationTree, ClassifyError> {
    validate_binary(x, y)?;
    if y.is_empty() {
        return Err(ClassifyError::LengthMismatch { expected: 0, got: 0 });
    }
    let started = std::time::Instant::now();
    let yf: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
    let grow_params = GrowParams {
        criterion: Criterion::Gini,
        max_depth: params.max_depth,
        min_samples_split: params.min_samples_split,
        features_per_split: None,
    };
    let tree = grow(x, &yf, (0..x.rows()).collect(), &grow_params, None);
    let mut meta = ModelMeta::new(
        "CART",
        serde_json::json!({
            "criterion": "gini",
            "splitter": "best",
            "max_depth": params.max_depth,
        }),
        columns,
    );
    meta.fit_time_s = started.elapsed().as_secs_f64();
    Ok(ClassificationTree { tree, meta })
}

/// Uniform interface over the classifier family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ClassifierModel {
    Logistic(LogisticModel),
    Tree(ClassificationTree),
    Gnb(GaussianNBModel),
    Forest(ForestModel),
}

impl ClassifierModel {
    pub fn meta(&self) -> &ModelMeta {
        match self {
            ClassifierModel::Logistic(m) => &m.meta,
            ClassifierModel::Tree(m) => &m.meta,
            ClassifierModel::Gnb(m) => &m.meta,
            ClassifierModel::Forest(m) => &m.meta,
        }
    }

    pub fn meta_mut(&mut self) -> &mut ModelMeta {
        match self {
            ClassifierModel::Logistic(m) => &mut m.meta,
            ClassifierModel::Tree(m) => &mut m.meta,
            ClassifierModel::Gnb(m) => &mut m.meta,
            ClassifierModel::Forest(m) => &mut m.meta,
        }
    }

    pub fn predict(&self, x: &Matrix, columns: &[String]) -> Result<Vec<u8>, ClassifyError> {
        self.check_schema(columns)?;
        Ok(self.predict_rows(x))
    }

    pub fn predict_proba(&self, x: &Matrix, columns: &[String]) -> Result<Vec<f64>, ClassifyError> {
        self.check_schema(columns)?;
        Ok(self.predict_proba_rows(x))
    }

    pub fn predict_rows(&self, x: &Matrix) -> Vec<u8> {
        match self {
            ClassifierModel::Logistic(m) => m.predict_matrix(x),
            ClassifierModel::Tree(m) => m.predict_matrix(x),
            ClassifierModel::Gnb(m) => m.predict_matrix(x),
            ClassifierModel::Forest(m) => m.predict_matrix(x),
        }
    }

    pub fn predict_proba_rows(&self, x: &Matrix) -> Vec<f64> {
        match self {
            ClassifierModel::Logistic(m) => m.predict_proba_matrix(x),
            ClassifierModel::Tree(m) => m.predict_proba_matrix(x),
            ClassifierModel::Gnb(m) => m.predict_proba_matrix(x),
            ClassifierModel::Forest(m) => m.predict_proba_matrix(x),
        }
    }

    fn check_schema(&self, columns: &[String]) -> Result<(), ClassifyError> {
        if columns != self.meta().columns.as_slice() {
            return Err(ClassifyError::SchemaMismatch {
                expected: self.meta().columns.clone(),
                got: columns.to_vec(),
            });
        }
        Ok(())
    }
}
