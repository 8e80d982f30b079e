//! Online linear classifiers, offline baselines and evaluation protocols
//! for binary clinical tabular data.

pub mod data;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod learners;
pub mod metrics;
pub mod offline;
pub mod report;
pub mod rng;
pub mod snapshot;
pub mod synth;

pub use data::{augment, decide, Dataset, FeatureSchema, Label, Sample, UpdateOutcome};
pub use error::{Error, Result};
pub use learners::{Algorithm, Learner, LearnerConfig};
