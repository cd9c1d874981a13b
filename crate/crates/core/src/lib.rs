//! Analytics toolkit for batch-scheduler accounting logs.
//!
//! The pipeline runs in stages: [`ingest`] parses grid-engine accounting
//! files into cleaned job records, [`features`] rolls those up into per-user
//! aggregates and builds per-task feature matrices, [`regress`] and
//! [`classify`] hold the learners, and [`evaluate`] runs the paired
//! with/without-per-user-features experiment and renders its report.
//! [`synth`] generates desk-scale synthetic workloads so the whole pipeline
//! can be exercised without access to production logs.

pub mod classify;
pub mod cli;
pub mod evaluate;
pub mod features;
pub mod ingest;
pub mod matrix;
pub mod persist;
pub mod regress;
pub mod rng;
pub mod synth;
pub mod tree;

pub use features::{Dataset, Scaler, Task, UserAggregate};
pub use ingest::{IngestConfig, JobRecord, RawAccountingRecord, Role};
pub use matrix::Matrix;
