//! Seeded synthetic stand-in for the clinical dataset.
//!
//! Feature 0 is uniform on [0, 1]; features 1..=12 are coin flips whose
//! bias depends on the class. Samples are kept only when the planted rule
//! `sum(x) - 6.5` classifies them with functional margin at least
//! `separation`, so the clean data is linearly separable with a known margin.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FeatureSchema, Label, Sample, CLINICAL_DIM};
use crate::error::{Error, Result};
use crate::rng::stream_rng;

const POS_BIAS: f64 = 0.75;
const NEG_BIAS: f64 = 0.25;
const RULE_BIAS: f64 = -6.5;
/// Largest functional margin the planted rule can reach on either class.
pub const MAX_SEPARATION: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_pos: usize,
    pub n_neg: usize,
    pub flip_rate: f64,
    pub seed: u64,
    pub separation: f64,
}

impl SyntheticSpec {
    pub fn new(n_pos: usize, n_neg: usize, flip_rate: f64, seed: u64) -> Self {
        SyntheticSpec {
            n_pos,
            n_neg,
            flip_rate,
            seed,
            separation: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_pos == 0 || self.n_neg == 0 {
            return Err(Error::Config("n_pos and n_neg must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.flip_rate) {
            return Err(Error::Config(format!(
                "flip rate must be in [0, 1), got {}",
                self.flip_rate
            )));
        }
        if !(self.separation > 0.0 && self.separation <= MAX_SEPARATION) {
            return Err(Error::Config(format!(
                "separation must be in (0, {MAX_SEPARATION}], got {}",
                self.separation
            )));
        }
        Ok(())
    }
}

/// The linear rule used to generate clean labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedRule {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl PlantedRule {
    pub fn score(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }

    pub fn classify(&self, x: &[f64]) -> Label {
        Label::from_sign(self.score(x))
    }

    /// Norm of `(weights, bias)` in augmented space.
    pub fn norm(&self) -> f64 {
        (self.weights.iter().map(|w| w * w).sum::<f64>() + self.bias * self.bias).sqrt()
    }

    /// Geometric margin over augmented inputs given a functional margin.
    pub fn geometric_margin(&self, functional: f64) -> f64 {
        functional / self.norm()
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub dataset: Dataset,
    pub rule: PlantedRule,
    /// Number of labels flipped away from the planted rule.
    pub flipped: usize,
}

pub fn planted_rule() -> PlantedRule {
    PlantedRule {
        weights: vec![1.0; CLINICAL_DIM],
        bias: RULE_BIAS,
    }
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let rule = planted_rule();
    let mut rng = stream_rng(spec.seed, 0);

    let mut samples = Vec::with_capacity(spec.n_pos + spec.n_neg);
    for (label, count, bias) in [
        (Label::Pos, spec.n_pos, POS_BIAS),
        (Label::Neg, spec.n_neg, NEG_BIAS),
    ] {
        let mut kept = 0;
        while kept < count {
            let mut x = Vec::with_capacity(CLINICAL_DIM);
            x.push(rng.random::<f64>());
            for _ in 1..CLINICAL_DIM {
                x.push(if rng.random_bool(bias) { 1.0 } else { 0.0 });
            }
            if label.sign() * rule.score(&x) >= spec.separation {
                samples.push(Sample::new(x, label));
                kept += 1;
            }
        }
    }
    samples.shuffle(&mut rng);

    let mut flipped = 0;
    if spec.flip_rate > 0.0 {
        for s in &mut samples {
            if rng.random_bool(spec.flip_rate) {
                s.y = match s.y {
                    Label::Pos => Label::Neg,
                    Label::Neg => Label::Pos,
                };
                flipped += 1;
            }
        }
    }

    Ok(SyntheticData {
        dataset: Dataset::new(FeatureSchema::clinical(), samples)?,
        rule,
        flipped,
    })
}
