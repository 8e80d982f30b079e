//! JSON snapshots of trained models, tagged by model kind.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{FirstOrderModel, SecondOrderModel};
use crate::error::{Error, Result};
use crate::learners::{Learner, LearnerConfig, Model};
use crate::offline::{Forest, ForestConfig, SvmConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "order", rename_all = "snake_case")]
pub enum ModelState {
    FirstOrder {
        weights: Vec<f64>,
    },
    SecondOrder {
        mean: Vec<f64>,
        /// Row-major.
        covariance: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineSnapshot {
    pub config: LearnerConfig,
    pub step: u64,
    pub k: f64,
    pub n_updates: u64,
    pub state: ModelState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmSnapshot {
    pub config: SvmConfig,
    /// Feature weights followed by the bias.
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestSnapshot {
    pub config: ForestConfig,
    pub forest: Forest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Snapshot {
    Online(OnlineSnapshot),
    Svm(SvmSnapshot),
    Forest(ForestSnapshot),
}

impl Snapshot {
    pub fn from_learner(learner: &Learner) -> Snapshot {
        let state = match learner.model() {
            Model::FirstOrder(m) => ModelState::FirstOrder {
                weights: m.w.iter().copied().collect(),
            },
            Model::SecondOrder(m) => ModelState::SecondOrder {
                mean: m.mu.iter().copied().collect(),
                covariance: m.sigma.transpose().iter().copied().collect(),
            },
        };
        Snapshot::Online(OnlineSnapshot {
            config: *learner.config(),
            step: learner.step(),
            k: learner.k(),
            n_updates: learner.n_updates(),
            state,
        })
    }

    pub fn from_svm(config: SvmConfig, model: &FirstOrderModel) -> Snapshot {
        Snapshot::Svm(SvmSnapshot {
            config,
            weights: model.w.iter().copied().collect(),
        })
    }

    pub fn from_forest(config: ForestConfig, forest: Forest) -> Snapshot {
        Snapshot::Forest(ForestSnapshot { config, forest })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Snapshot::Online(_) => "online",
            Snapshot::Svm(_) => "svm",
            Snapshot::Forest(_) => "forest",
        }
    }

    pub fn to_learner(&self) -> Result<Learner> {
        let Snapshot::Online(s) = self else {
            return Err(Error::Invalid(format!("{} snapshot is not an online learner", self.kind())));
        };
        let model = match &s.state {
            ModelState::FirstOrder { weights } => {
                Model::FirstOrder(FirstOrderModel {
                    w: DVector::from_column_slice(weights),
                })
            }
            ModelState::SecondOrder { mean, covariance } => {
                let d = mean.len();
                if covariance.len() != d * d {
                    return Err(Error::Dimension {
                        expected: d * d,
                        got: covariance.len(),
                    });
                }
                Model::SecondOrder(SecondOrderModel {
                    mu: DVector::from_column_slice(mean),
                    sigma: DMatrix::from_row_slice(d, d, covariance),
                })
            }
        };
        Learner::from_parts(s.config, model, s.step, s.k, s.n_updates)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io_err = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
        serde_json::to_writer_pretty(&mut w, self)?;
        w.write_all(b"\n").map_err(io_err)?;
        w.flush().map_err(io_err)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Snapshot> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(serde_json::from_reader(BufReader::new(file))?)
    }
}
