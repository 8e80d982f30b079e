//! Online linear classifiers behind a single predict/update interface.
//!
//! All inputs are augmented vectors (see [`crate::data::augment`]). Models
//! start at `w = 0`, or `mu = 0, sigma = I` for second-order learners.

mod first_order;
mod second_order;

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::{decide, FirstOrderModel, Label, SecondOrderModel, UpdateOutcome};
use crate::error::{ensure_finite, Error, Result};

pub use first_order::{pa_step, PaVariant, RommaTrigger, ROMMA_DEGENERATE};
pub use second_order::{cw_alpha, cw_beta, iellip_decay, narow_gamma, scw2_alpha};

use first_order::*;
use second_order::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    Perceptron,
    Sop,
    Pa,
    Pa1,
    Pa2,
    Ogd,
    Alma,
    Romma,
    Aromma,
    Arow,
    Narow,
    Cw,
    Scw1,
    Scw2,
    Nherd,
    Iellip,
}

impl Algorithm {
    pub const ALL: [Algorithm; 16] = [
        Algorithm::Perceptron,
        Algorithm::Sop,
        Algorithm::Pa,
        Algorithm::Pa1,
        Algorithm::Pa2,
        Algorithm::Ogd,
        Algorithm::Alma,
        Algorithm::Romma,
        Algorithm::Aromma,
        Algorithm::Arow,
        Algorithm::Narow,
        Algorithm::Cw,
        Algorithm::Scw1,
        Algorithm::Scw2,
        Algorithm::Nherd,
        Algorithm::Iellip,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Perceptron => "Perceptron",
            Algorithm::Sop => "SOP",
            Algorithm::Pa => "PA",
            Algorithm::Pa1 => "PA1",
            Algorithm::Pa2 => "PA2",
            Algorithm::Ogd => "OGD",
            Algorithm::Alma => "ALMA",
            Algorithm::Romma => "ROMMA",
            Algorithm::Aromma => "aROMMA",
            Algorithm::Arow => "AROW",
            Algorithm::Narow => "NAROW",
            Algorithm::Cw => "CW",
            Algorithm::Scw1 => "SCW1",
            Algorithm::Scw2 => "SCW2",
            Algorithm::Nherd => "NHERD",
            Algorithm::Iellip => "IELLIP",
        }
    }

    pub fn is_second_order(self) -> bool {
        matches!(
            self,
            Algorithm::Sop
                | Algorithm::Arow
                | Algorithm::Narow
                | Algorithm::Cw
                | Algorithm::Scw1
                | Algorithm::Scw2
                | Algorithm::Nherd
                | Algorithm::Iellip
        )
    }

    /// Updates only on prediction mistakes (as opposed to margin violations).
    pub fn is_mistake_driven(self) -> bool {
        matches!(
            self,
            Algorithm::Perceptron | Algorithm::Sop | Algorithm::Romma | Algorithm::Iellip
        )
    }

    pub fn valid_names() -> String {
        Algorithm::ALL
            .iter()
            .map(|a| a.name().to_ascii_lowercase())
            .collect::<Vec<_>>()
            .join(", ")
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        Algorithm::ALL
            .iter()
            .copied()
            .find(|a| a.name().to_ascii_lowercase() == lower)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown algorithm `{s}`; valid names: {}",
                    Algorithm::valid_names()
                ))
            })
    }
}

/// Hyperparameters for every learner. Only the fields relevant to
/// `algorithm` are read.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub algorithm: Algorithm,
    /// Aggressiveness (PA1, PA2, SCW1, SCW2, NHERD).
    pub c: f64,
    /// AROW regularizer.
    pub r: f64,
    /// Confidence level for CW and SCW.
    pub eta: f64,
    /// ALMA accuracy parameter.
    pub alpha: f64,
    /// SOP ridge.
    pub a: f64,
    /// NAROW eigenvalue bound.
    pub b_bound: f64,
    pub ellip_b: f64,
    pub ellip_c: f64,
    /// OGD base step.
    pub eta0: f64,
}

impl LearnerConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        LearnerConfig {
            algorithm,
            c: 1.0,
            r: 1.0,
            eta: 0.75,
            alpha: 0.9,
            a: 1.0,
            b_bound: 1.0,
            ellip_b: 0.3,
            ellip_c: 0.5,
            eta0: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("c", self.c),
            ("r", self.r),
            ("a", self.a),
            ("b_bound", self.b_bound),
            ("eta0", self.eta0),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        if !(self.eta > 0.5 && self.eta < 1.0) {
            return Err(Error::Config(format!("eta must be in (0.5, 1), got {}", self.eta)));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config(format!("alpha must be in (0, 1], got {}", self.alpha)));
        }
        for (name, v) in [("ellip_b", self.ellip_b), ("ellip_c", self.ellip_c)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must be in [0, 1], got {v}")));
            }
        }
        if self.ellip_b * self.ellip_c >= 1.0 {
            return Err(Error::Config("ellip_b * ellip_c must be < 1".into()));
        }
        Ok(())
    }

    /// Inverse standard-normal CDF of `eta`.
    pub fn phi(&self) -> f64 {
        Normal::standard().inverse_cdf(self.eta)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    FirstOrder(FirstOrderModel),
    SecondOrder(SecondOrderModel),
}

impl Model {
    pub fn dim(&self) -> usize {
        match self {
            Model::FirstOrder(m) => m.dim(),
            Model::SecondOrder(m) => m.dim(),
        }
    }
}

/// Outcome of one algorithm step.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Step {
    pub updated: bool,
    pub loss: f64,
}

impl Step {
    fn updated(loss: f64) -> Step {
        Step { updated: true, loss }
    }
    fn skipped(loss: f64) -> Step {
        Step {
            updated: false,
            loss,
        }
    }
}

/// Mutable learner state: configuration, model and counters.
#[derive(Debug, Clone, PartialEq)]
pub struct Learner {
    config: LearnerConfig,
    model: Model,
    /// Index of the next update call, starting at 1.
    step: u64,
    /// ALMA progress counter.
    k: f64,
    n_updates: u64,
    phi: f64,
}

impl Learner {
    /// Fresh learner for augmented inputs of length `dim`.
    pub fn new(config: LearnerConfig, dim: usize) -> Result<Self> {
        config.validate()?;
        if dim == 0 {
            return Err(Error::Config("model dimension must be at least 1".into()));
        }
        let model = match config.algorithm {
            Algorithm::Sop => {
                let mut m = SecondOrderModel::identity(dim);
                m.sigma /= config.a;
                Model::SecondOrder(m)
            }
            a if a.is_second_order() => Model::SecondOrder(SecondOrderModel::identity(dim)),
            _ => Model::FirstOrder(FirstOrderModel::zeros(dim)),
        };
        Ok(Learner {
            config,
            model,
            step: 1,
            k: 1.0,
            n_updates: 0,
            phi: config.phi(),
        })
    }

    /// Rebuild a learner from saved parts.
    pub fn from_parts(
        config: LearnerConfig,
        model: Model,
        step: u64,
        k: f64,
        n_updates: u64,
    ) -> Result<Self> {
        config.validate()?;
        let kind_ok = match &model {
            Model::FirstOrder(_) => !config.algorithm.is_second_order(),
            Model::SecondOrder(_) => config.algorithm.is_second_order(),
        };
        if !kind_ok {
            return Err(Error::Invalid(format!(
                "model kind does not match algorithm {}",
                config.algorithm
            )));
        }
        if step == 0 || n_updates >= step || !(k >= 1.0) {
            return Err(Error::Invalid("inconsistent learner counters".into()));
        }
        Ok(Learner {
            config,
            model,
            step,
            k,
            n_updates,
            phi: config.phi(),
        })
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.config
    }

    pub fn algorithm(&self) -> Algorithm {
        self.config.algorithm
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn n_updates(&self) -> u64 {
        self.n_updates
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    fn check_input(&self, x: &[f64]) -> Result<DVector<f64>> {
        if x.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        ensure_finite(x, "input vector")?;
        Ok(DVector::from_column_slice(x))
    }

    fn score(&self, x: &DVector<f64>) -> f64 {
        match &self.model {
            Model::FirstOrder(m) => m.score(x),
            Model::SecondOrder(m) if self.config.algorithm == Algorithm::Sop => {
                m.mu.dot(&(&m.sigma * x))
            }
            Model::SecondOrder(m) => m.mu.dot(x),
        }
    }

    /// Score and label an input without changing state. With a label, the
    /// hinge loss of the current model is reported.
    pub fn predict(&self, x: &[f64], y: Option<Label>) -> Result<UpdateOutcome> {
        let xv = self.check_input(x)?;
        let margin = self.score(&xv);
        Ok(UpdateOutcome {
            predicted: decide(margin)?,
            margin,
            loss: y.map(|y| (1.0 - y.sign() * margin).max(0.0)),
            updated: false,
        })
    }

    /// Process one labelled example. The model changes only when the
    /// algorithm's trigger fires.
    pub fn update(&mut self, x: &[f64], y: Label) -> Result<UpdateOutcome> {
        let xv = self.check_input(x)?;
        let margin = self.score(&xv);
        let predicted = decide(margin)?;
        let ys = y.sign();
        let t = self.step;
        let cfg = self.config;

        let step = match (&mut self.model, cfg.algorithm) {
            (Model::FirstOrder(m), alg) => {
                let w = &mut m.w;
                match alg {
                    Algorithm::Perceptron => perceptron(w, &xv, ys, margin),
                    Algorithm::Pa => passive_aggressive(w, &xv, ys, margin, PaVariant::Pa, cfg.c),
                    Algorithm::Pa1 => passive_aggressive(w, &xv, ys, margin, PaVariant::Pa1, cfg.c),
                    Algorithm::Pa2 => passive_aggressive(w, &xv, ys, margin, PaVariant::Pa2, cfg.c),
                    Algorithm::Ogd => ogd(w, &xv, ys, margin, cfg.eta0, t),
                    Algorithm::Alma => alma(w, &mut self.k, &xv, ys, margin, cfg.alpha),
                    Algorithm::Romma => romma(w, &xv, ys, margin, RommaTrigger::Mistake),
                    Algorithm::Aromma => romma(w, &xv, ys, margin, RommaTrigger::Hinge),
                    other => unreachable!("{other} is second-order"),
                }
            }
            (Model::SecondOrder(m), alg) => match alg {
                Algorithm::Sop => sop(m, &xv, ys),
                Algorithm::Arow => arow(m, &xv, ys, cfg.r),
                Algorithm::Narow => narow(m, &xv, ys, cfg.b_bound),
                Algorithm::Cw => confidence_weighted(m, &xv, ys, self.phi, ConfidenceVariant::Exact),
                Algorithm::Scw1 => {
                    confidence_weighted(m, &xv, ys, self.phi, ConfidenceVariant::Soft1(cfg.c))
                }
                Algorithm::Scw2 => {
                    confidence_weighted(m, &xv, ys, self.phi, ConfidenceVariant::Soft2(cfg.c))
                }
                Algorithm::Nherd => nherd(m, &xv, ys, cfg.c),
                Algorithm::Iellip => iellip(m, &xv, ys, cfg.ellip_c, cfg.ellip_b, t),
                other => unreachable!("{other} is first-order"),
            },
        };

        if step.updated {
            self.n_updates += 1;
        }
        self.step += 1;
        Ok(UpdateOutcome {
            predicted,
            margin,
            loss: Some(step.loss),
            updated: step.updated,
        })
    }

    /// Weight vector used for prediction (`sigma * mu` for SOP).
    pub fn effective_weights(&self) -> DVector<f64> {
        match &self.model {
            Model::FirstOrder(m) => m.w.clone(),
            Model::SecondOrder(m) if self.config.algorithm == Algorithm::Sop => &m.sigma * &m.mu,
            Model::SecondOrder(m) => m.mu.clone(),
        }
    }
}
