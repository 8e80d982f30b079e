//! Shared data types: labels, samples, schemas, datasets and linear models.

use std::collections::HashSet;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary class label. `Pos` is the dengue-positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Pos,
    Neg,
}

impl Label {
    /// +1.0 or -1.0.
    pub fn sign(self) -> f64 {
        match self {
            Label::Pos => 1.0,
            Label::Neg => -1.0,
        }
    }

    pub fn from_sign(s: f64) -> Label {
        if s >= 0.0 {
            Label::Pos
        } else {
            Label::Neg
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Pos => write!(f, "+1"),
            Label::Neg => write!(f, "-1"),
        }
    }
}

/// Append the constant bias coordinate.
pub fn augment(x: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len() + 1);
    out.extend_from_slice(x);
    out.push(1.0);
    out
}

/// Sign decision with ties going to the positive class.
pub fn decide(score: f64) -> Result<Label> {
    if !score.is_finite() {
        return Err(Error::NonFinite("score"));
    }
    Ok(if score >= 0.0 { Label::Pos } else { Label::Neg })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Numeric,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureDescriptor {
    pub name: String,
    pub kind: FeatureKind,
}

/// Column names of the clinical CSV layout, features first, label last.
pub const CLINICAL_COLUMNS: [&str; 14] = [
    "days_symptomatic",
    "vomiting",
    "headache",
    "retro_orbital_pain",
    "rash",
    "abdominal_pain",
    "muscle_bone_pain",
    "high_fever",
    "hemorrhage",
    "ns1_antigen",
    "igm_elisa",
    "igg_elisa",
    "igm_elisa_1",
    "dengue",
];

/// Number of features in the clinical schema.
pub const CLINICAL_DIM: usize = 13;

/// Ordered feature descriptors plus the label column name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    features: Vec<FeatureDescriptor>,
    label_name: String,
}

impl FeatureSchema {
    /// A schema with arbitrary features. Names must be unique and nonempty.
    pub fn new(features: Vec<FeatureDescriptor>, label_name: impl Into<String>) -> Result<Self> {
        let label_name = label_name.into();
        let mut seen = HashSet::new();
        for f in &features {
            if f.name.is_empty() {
                return Err(Error::Schema("empty feature name".into()));
            }
            if !seen.insert(f.name.as_str()) || f.name == label_name {
                return Err(Error::Schema(format!("duplicate column `{}`", f.name)));
            }
        }
        Ok(FeatureSchema {
            features,
            label_name,
        })
    }

    /// The 13-feature clinical schema: symptom-days (numeric) then twelve
    /// binary symptom and investigation indicators.
    pub fn clinical() -> Self {
        let features = CLINICAL_COLUMNS[..CLINICAL_DIM]
            .iter()
            .enumerate()
            .map(|(i, name)| FeatureDescriptor {
                name: (*name).to_string(),
                kind: if i == 0 {
                    FeatureKind::Numeric
                } else {
                    FeatureKind::Binary
                },
            })
            .collect();
        FeatureSchema {
            features,
            label_name: CLINICAL_COLUMNS[CLINICAL_DIM].to_string(),
        }
    }

    /// Generic single-kind schema named `f0..f{d-1}`, for synthetic test data.
    pub fn numeric(dim: usize) -> Self {
        let features = (0..dim)
            .map(|i| FeatureDescriptor {
                name: format!("f{i}"),
                kind: FeatureKind::Numeric,
            })
            .collect();
        FeatureSchema {
            features,
            label_name: "label".into(),
        }
    }

    pub fn is_clinical(&self) -> bool {
        *self == FeatureSchema::clinical()
    }

    pub fn features(&self) -> &[FeatureDescriptor] {
        &self.features
    }

    pub fn label_name(&self) -> &str {
        &self.label_name
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }
}

/// Dense feature vector with a binary label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: Vec<f64>,
    pub y: Label,
}

impl Sample {
    pub fn new(x: Vec<f64>, y: Label) -> Self {
        Sample { x, y }
    }

    pub fn augmented(&self) -> Vec<f64> {
        augment(&self.x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: FeatureSchema,
    samples: Vec<Sample>,
    n_pos: usize,
    n_neg: usize,
}

impl Dataset {
    pub fn new(schema: FeatureSchema, samples: Vec<Sample>) -> Result<Self> {
        let d = schema.len();
        for s in &samples {
            if s.x.len() != d {
                return Err(Error::Dimension {
                    expected: d,
                    got: s.x.len(),
                });
            }
        }
        let n_pos = samples.iter().filter(|s| s.y == Label::Pos).count();
        let n_neg = samples.len() - n_pos;
        Ok(Dataset {
            schema,
            samples,
            n_pos,
            n_neg,
        })
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Sample> {
        self.samples
    }

    pub fn n_pos(&self) -> usize {
        self.n_pos
    }

    pub fn n_neg(&self) -> usize {
        self.n_neg
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.schema.len()
    }

    /// Same schema, different samples.
    pub fn with_samples(&self, samples: Vec<Sample>) -> Result<Self> {
        Dataset::new(self.schema.clone(), samples)
    }
}

/// Weight vector over augmented inputs; the last entry is the bias.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrderModel {
    pub w: DVector<f64>,
}

impl FirstOrderModel {
    pub fn zeros(dim: usize) -> Self {
        FirstOrderModel {
            w: DVector::zeros(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    /// Score for an augmented input.
    pub fn score(&self, x: &DVector<f64>) -> f64 {
        self.w.dot(x)
    }

    /// Score for a raw feature vector (bias applied).
    pub fn score_raw(&self, x: &[f64]) -> Result<f64> {
        if x.len() + 1 != self.w.len() {
            return Err(Error::Dimension {
                expected: self.w.len() - 1,
                got: x.len(),
            });
        }
        let bias = self.w[x.len()];
        Ok(x.iter().zip(self.w.iter()).map(|(a, b)| a * b).sum::<f64>() + bias)
    }

    pub fn predict_raw(&self, x: &[f64]) -> Result<Label> {
        decide(self.score_raw(x)?)
    }
}

/// Gaussian distribution over weight vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderModel {
    pub mu: DVector<f64>,
    pub sigma: DMatrix<f64>,
}

impl SecondOrderModel {
    pub fn identity(dim: usize) -> Self {
        SecondOrderModel {
            mu: DVector::zeros(dim),
            sigma: DMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn max_asymmetry(&self) -> f64 {
        let n = self.sigma.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.sigma[(i, j)] - self.sigma[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn symmetrize(&mut self) {
        let n = self.sigma.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (self.sigma[(i, j)] + self.sigma[(j, i)]);
                self.sigma[(i, j)] = avg;
                self.sigma[(j, i)] = avg;
            }
        }
    }

    /// True when a Cholesky factorization of sigma succeeds.
    pub fn is_positive_definite(&self) -> bool {
        self.sigma.clone().cholesky().is_some()
    }
}

/// Result of a single predict or update step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateOutcome {
    pub predicted: Label,
    /// Pre-update score.
    pub margin: f64,
    /// Algorithm loss on the step; `None` when no label was supplied.
    pub loss: Option<f64>,
    pub updated: bool,
}
