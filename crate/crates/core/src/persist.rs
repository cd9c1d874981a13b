//! Model persistence and the on-disk model store used by submission-time
//! prediction.
//!
//! Each model is one self-describing JSON document: algorithm name,
//! hyperparameters, column names, the scaler it expects to run behind, the
//! parameters themselves, and fit metadata. JSON floats round-trip exactly,
//! so a loaded model reproduces bit-identical predictions.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::ClassifierModel;
use crate::features::{Scaler, UserAggregate};
use crate::ingest::Role;
use crate::regress::RegressionModel;

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("missing model file {path}")]
    MissingModel { path: PathBuf },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("unsupported document format {found:?} (expected {expected:?})")]
    Format { expected: String, found: String },
}

const MODEL_FORMAT: &str = "jobcast-model-v1";
const STORE_FORMAT: &str = "jobcast-store-v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum ModelKind {
    Regression(RegressionModel),
    Classification(ClassifierModel),
}

/// One persisted model document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistedModel {
    pub format: String,
    /// Task the model was trained for (free-form, see features::Task).
    pub task: String,
    /// Scaler to apply to raw feature rows before prediction, if any.
    pub scaler: Option<Scaler>,
    /// (mean, std) the regression target was standardized with at training
    /// time; predictions are mapped back through it.
    pub target_scale: Option<(f64, f64)>,
    pub model: ModelKind,
}

impl PersistedModel {
    pub fn new(
        task: &str,
        scaler: Option<Scaler>,
        target_scale: Option<(f64, f64)>,
        model: ModelKind,
    ) -> Self {
        PersistedModel {
            format: MODEL_FORMAT.to_string(),
            task: task.to_string(),
            scaler,
            target_scale,
            model,
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, PersistError> {
    let text = fs::read_to_string(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            PersistError::MissingModel {
                path: path.to_path_buf(),
            }
        } else {
            PersistError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    })?;
    serde_json::from_str(&text).map_err(|source| PersistError::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PersistError> {
    let text = serde_json::to_string_pretty(value).expect("model serializes");
    fs::write(path, text).map_err(|source| PersistError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn save_model(path: &Path, model: &PersistedModel) -> Result<(), PersistError> {
    write_json(path, model)
}

pub fn load_model(path: &Path) -> Result<PersistedModel, PersistError> {
    let model: PersistedModel = read_json(path)?;
    if model.format != MODEL_FORMAT {
        return Err(PersistError::Format {
            expected: MODEL_FORMAT.to_string(),
            found: model.format,
        });
    }
    Ok(model)
}

/// Mean aggregate values used when a user has no history of their own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FallbackAggregate {
    pub a_cpu: f64,
    pub a_maxmem: f64,
    pub a_reqtime: f64,
    pub a_reqmem: f64,
}

impl FallbackAggregate {
    pub fn mean_of(aggs: &[&UserAggregate]) -> Option<FallbackAggregate> {
        if aggs.is_empty() {
            return None;
        }
        let n = aggs.len() as f64;
        Some(FallbackAggregate {
            a_cpu: aggs.iter().map(|a| a.a_cpu).sum::<f64>() / n,
            a_maxmem: aggs.iter().map(|a| a.a_maxmem).sum::<f64>() / n,
            a_reqtime: aggs.iter().map(|a| a.a_reqtime).sum::<f64>() / n,
            a_reqmem: aggs.iter().map(|a| a.a_reqmem).sum::<f64>() / n,
        })
    }
}

/// Everything submission-time prediction needs besides the models: the
/// encoders, roles, per-user aggregates, and cold-start fallbacks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StoreContext {
    pub format: String,
    pub seed: u64,
    pub user_codes: Vec<String>,
    pub project_codes: Vec<String>,
    pub roles: BTreeMap<String, Role>,
    pub aggregates: BTreeMap<String, UserAggregate>,
    pub role_fallback: BTreeMap<String, FallbackAggregate>,
    pub global_fallback: FallbackAggregate,
    pub base_failure_rate: f64,
}

/// A trained model store directory: three models plus the context document.
#[derive(Debug, Clone)]
pub struct ModelStore {
    pub context: StoreContext,
    pub cpu: PersistedModel,
    pub mem: PersistedModel,
    pub failure: PersistedModel,
}

pub const CPU_MODEL_FILE: &str = "cpu_model.json";
pub const MEM_MODEL_FILE: &str = "mem_model.json";
pub const FAILURE_MODEL_FILE: &str = "failure_model.json";
pub const CONTEXT_FILE: &str = "context.json";

impl ModelStore {
    pub fn save(&self, dir: &Path) -> Result<(), PersistError> {
        fs::create_dir_all(dir).map_err(|source| PersistError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        write_json(&dir.join(CONTEXT_FILE), &self.context)?;
        save_model(&dir.join(CPU_MODEL_FILE), &self.cpu)?;
        save_model(&dir.join(MEM_MODEL_FILE), &self.mem)?;
        save_model(&dir.join(FAILURE_MODEL_FILE), &self.failure)
    }

    pub fn load(dir: &Path) -> Result<ModelStore, PersistError> {
        let context: StoreContext = read_json(&dir.join(CONTEXT_FILE))?;
        if context.format != STORE_FORMAT {
            return Err(PersistError::Format {
                expected: STORE_FORMAT.to_string(),
                found: context.format,
            });
        }
        Ok(ModelStore {
            context,
            cpu: load_model(&dir.join(CPU_MODEL_FILE))?,
            mem: load_model(&dir.join(MEM_MODEL_FILE))?,
            failure: load_model(&dir.join(FAILURE_MODEL_FILE))?,
        })
    }
}

pub fn store_context_format() -> &'static str {
    STORE_FORMAT
}
