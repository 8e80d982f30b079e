//! Linear soft-margin SVM solved in the primal.
//!
//! Objective: `0.5 * |w|^2 + C * sum_i max(0, 1 - y_i (w.x_i + b))` with the
//! bias left unregularized. The weights follow seeded stochastic subgradient
//! steps of size `1 / (lambda t)`, `lambda = 1 / (C M)`, with projection onto
//! the ball of radius `1 / sqrt(lambda)`. The bias is refit exactly (a 1-D
//! convex piecewise-linear problem) after every epoch. The returned model is
//! the better of the suffix-averaged iterate and the best epoch-end iterate.

use nalgebra::DVector;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{FirstOrderModel, Label, Sample};
use crate::error::{Error, Result};
use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub c: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 1.0,
            epochs: 1000,
            seed: 0,
        }
    }
}

impl SvmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::Config(format!("C must be > 0, got {}", self.c)));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        Ok(())
    }
}

/// Objective values recorded while training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmTrace {
    pub first_epoch_objective: f64,
    pub final_objective: f64,
}

fn check_training_set(samples: &[Sample]) -> Result<usize> {
    let first = samples.first().ok_or(Error::EmptyDataset)?;
    let dim = first.x.len();
    if let Some(s) = samples.iter().find(|s| s.x.len() != dim) {
        return Err(Error::Dimension {
            expected: dim,
            got: s.x.len(),
        });
    }
    if !samples.iter().any(|s| s.y == Label::Pos) {
        return Err(Error::EmptyClass("+1"));
    }
    if !samples.iter().any(|s| s.y == Label::Neg) {
        return Err(Error::EmptyClass("-1"));
    }
    Ok(dim)
}

fn to_vectors(samples: &[Sample]) -> Vec<DVector<f64>> {
    samples
        .iter()
        .map(|s| DVector::from_column_slice(&s.x))
        .collect()
}

fn model_from(w: &DVector<f64>, b: f64) -> FirstOrderModel {
    let mut full = DVector::zeros(w.len() + 1);
    full.rows_mut(0, w.len()).copy_from(w);
    full[w.len()] = b;
    FirstOrderModel { w: full }
}

fn hinge_sum(scores: &[f64], ys: &[f64], b: f64) -> f64 {
    scores
        .iter()
        .zip(ys)
        .map(|(s, y)| (1.0 - y * (s + b)).max(0.0))
        .sum()
}

/// Exact minimizer over `b` of `sum_i max(0, 1 - y_i (s_i + b))`. When the
/// minimum is attained on an interval, its midpoint is returned.
pub(crate) fn refit_bias(scores: &[f64], ys: &[f64]) -> f64 {
    // every breakpoint y_i - s_i raises the slope by one, starting from
    // -n_pos, so the flat bottom lies between breakpoints n_pos - 1 and n_pos
    let mut kinks: Vec<f64> = scores.iter().zip(ys).map(|(s, y)| y - s).collect();
    kinks.sort_by(f64::total_cmp);
    let n_pos = ys.iter().filter(|&&y| y > 0.0).count();
    match n_pos {
        0 => kinks[0],
        p if p == kinks.len() => kinks[p - 1],
        p => 0.5 * (kinks[p - 1] + kinks[p]),
    }
}

/// Primal objective of a model whose last coordinate is the bias.
pub fn primal_objective(model: &FirstOrderModel, samples: &[Sample], c: f64) -> Result<f64> {
    let d = model.dim() - 1;
    let reg = 0.5 * model.w.rows(0, d).norm_squared();
    let mut slack = 0.0;
    for s in samples {
        slack += (1.0 - s.y.sign() * model.score_raw(&s.x)?).max(0.0);
    }
    Ok(reg + c * slack)
}

pub fn svm_train(samples: &[Sample], cfg: &SvmConfig) -> Result<FirstOrderModel> {
    svm_train_traced(samples, cfg).map(|(m, _)| m)
}

pub fn svm_train_traced(samples: &[Sample], cfg: &SvmConfig) -> Result<(FirstOrderModel, SvmTrace)> {
    cfg.validate()?;
    let dim = check_training_set(samples)?;
    let xs = to_vectors(samples);
    let ys: Vec<f64> = samples.iter().map(|s| s.y.sign()).collect();
    let m = samples.len();
    let lambda = 1.0 / (cfg.c * m as f64);
    let radius = 1.0 / lambda.sqrt();
    let mut rng = stream_rng(cfg.seed, 0);

    let mut w = DVector::<f64>::zeros(dim);
    let mut b = 0.0;
    let mut avg = DVector::<f64>::zeros(dim);
    let mut n_avg = 0u64;
    let avg_from = cfg.epochs / 2;
    let mut order: Vec<usize> = (0..m).collect();
    let mut first_epoch_objective = f64::NAN;
    let mut scores = vec![0.0; m];
    let mut t = 0u64;
    let mut best = (f64::INFINITY, model_from(&w, b));

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let violated = ys[i] * (w.dot(&xs[i]) + b) < 1.0;
            w *= 1.0 - 1.0 / t as f64;
            if violated {
                w.axpy(eta * ys[i], &xs[i], 1.0);
            }
            let norm = w.norm();
            if norm > radius {
                w *= radius / norm;
            }
            if epoch >= avg_from {
                avg += &w;
                n_avg += 1;
            }
        }
        for (s, x) in scores.iter_mut().zip(&xs) {
            *s = w.dot(x);
        }
        b = refit_bias(&scores, &ys);
        let obj = 0.5 * w.norm_squared() + cfg.c * hinge_sum(&scores, &ys, b);
        if epoch == 0 {
            first_epoch_objective = obj;
        }
        if obj < best.0 {
            best = (obj, model_from(&w, b));
        }
    }

    let w_final = avg / n_avg as f64;
    for (s, x) in scores.iter_mut().zip(&xs) {
        *s = w_final.dot(x);
    }
    let b_final = refit_bias(&scores, &ys);
    let mut model = model_from(&w_final, b_final);
    let mut final_objective = primal_objective(&model, samples, cfg.c)?;
    if best.0 < final_objective {
        (final_objective, model) = best;
    }
    Ok((
        model,
        SvmTrace {
            first_epoch_objective,
            final_objective,
        },
    ))
}

/// Deterministic full-batch subgradient reference solver. Returns the best
/// iterate seen over `iterations` steps.
pub fn svm_reference(samples: &[Sample], c: f64, iterations: usize) -> Result<FirstOrderModel> {
    let dim = check_training_set(samples)?;
    let xs = to_vectors(samples);
    let ys: Vec<f64> = samples.iter().map(|s| s.y.sign()).collect();
    let m = samples.len() as f64;
    let lambda = 1.0 / (c * m);

    let mut w = DVector::<f64>::zeros(dim);
    let mut scores = vec![0.0; samples.len()];
    let mut b = refit_bias(&scores, &ys);
    let mut best = (f64::INFINITY, model_from(&w, b));
    for t in 1..=iterations {
        for (s, x) in scores.iter_mut().zip(&xs) {
            *s = w.dot(x);
        }
        b = refit_bias(&scores, &ys);
        let objective = 0.5 * w.norm_squared() + c * hinge_sum(&scores, &ys, b);
        if objective < best.0 {
            best = (objective, model_from(&w, b));
        }
        // subgradient of lambda/2 |w|^2 + mean hinge
        let mut g = &w * lambda;
        for ((s, x), y) in scores.iter().zip(&xs).zip(&ys) {
            if y * (s + b) < 1.0 {
                g.axpy(-y / m, x, 1.0);
            }
        }
        w.axpy(-1.0 / (lambda * t as f64), &g, 1.0);
    }
    Ok(best.1)
}
