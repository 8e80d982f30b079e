//! Learners that keep a Gaussian over weights (mean and covariance).
//!
//! Every covariance change is a rank-one term `sigma -= beta * (sigma x)(sigma x)^T`,
//! optionally rescaled, followed by re-symmetrization.

use nalgebra::DVector;

use super::Step;
use crate::data::SecondOrderModel;

fn hinge(y: f64, margin: f64) -> f64 {
    (1.0 - y * margin).max(0.0)
}

/// `sigma -= beta * u u^T`, then re-symmetrize.
fn rank_one_downdate(model: &mut SecondOrderModel, u: &DVector<f64>, beta: f64) {
    model.sigma.ger(-beta, u, u, 1.0);
    model.symmetrize();
}

pub(crate) fn arow(model: &mut SecondOrderModel, x: &DVector<f64>, y: f64, r: f64) -> Step {
    let margin = model.mu.dot(x);
    let loss = hinge(y, margin);
    if loss <= 0.0 {
        return Step::skipped(0.0);
    }
    let sx = &model.sigma * x;
    let v = x.dot(&sx);
    let beta = 1.0 / (v + r);
    let alpha = loss * beta;
    model.mu.axpy(alpha * y, &sx, 1.0);
    rank_one_downdate(model, &sx, beta);
    Step::updated(loss)
}

/// Adaptive regularizer of NAROW; `None` stands for +infinity.
pub fn narow_gamma(v: f64, b: f64) -> Option<f64> {
    let den = b * v - 1.0;
    if den > 0.0 {
        Some(v / den)
    } else {
        None
    }
}

pub(crate) fn narow(model: &mut SecondOrderModel, x: &DVector<f64>, y: f64, b: f64) -> Step {
    let margin = model.mu.dot(x);
    let loss = hinge(y, margin);
    if loss <= 0.0 {
        return Step::skipped(0.0);
    }
    let sx = &model.sigma * x;
    let v = x.dot(&sx);
    if v <= 0.0 {
        return Step::updated(loss);
    }
    match narow_gamma(v, b) {
        Some(gamma) => {
            let beta = 1.0 / (v + gamma);
            model.mu.axpy(loss * beta * y, &sx, 1.0);
            rank_one_downdate(model, &sx, beta);
        }
        None => {
            // covariance frozen; first-order mean step only
            model.mu.axpy(loss / (2.0 * v) * y, &sx, 1.0);
        }
    }
    Step::updated(loss)
}

/// Closed-form multiplier of the exact confidence-weighted projection,
/// for signed margin `m` and variance `v`.
pub fn cw_alpha(m: f64, v: f64, phi: f64) -> f64 {
    let phi2 = phi * phi;
    let psi = 1.0 + phi2 / 2.0;
    let zeta = 1.0 + phi2;
    let disc = m * m * phi2 * phi2 / 4.0 + v * phi2 * zeta;
    ((-m * psi + disc.sqrt()) / (v * zeta)).max(0.0)
}

/// Multiplier for the squared-loss soft variant.
pub fn scw2_alpha(m: f64, v: f64, phi: f64, c: f64) -> f64 {
    let phi2 = phi * phi;
    let n = v + 1.0 / (2.0 * c);
    let gamma = phi * (phi2 * m * m * v * v + 4.0 * n * v * (n + v * phi2)).sqrt();
    ((-(2.0 * m * n + phi2 * m * v) + gamma) / (2.0 * (n * n + n * v * phi2))).max(0.0)
}

/// Covariance shrink factor paired with a mean multiplier `alpha`.
pub fn cw_beta(alpha: f64, v: f64, phi: f64) -> f64 {
    let avp = alpha * v * phi;
    let sqrt_u = (-avp + (avp * avp + 4.0 * v).sqrt()) / 2.0;
    alpha * phi / (sqrt_u + avp)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum ConfidenceVariant {
    Exact,
    Soft1(f64),
    Soft2(f64),
}

pub(crate) fn confidence_weighted(
    model: &mut SecondOrderModel,
    x: &DVector<f64>,
    y: f64,
    phi: f64,
    variant: ConfidenceVariant,
) -> Step {
    let m = y * model.mu.dot(x);
    let sx = &model.sigma * x;
    let v = x.dot(&sx);
    let loss = (phi * v.max(0.0).sqrt() - m).max(0.0);
    if loss <= 0.0 || v <= 0.0 {
        return Step::skipped(loss);
    }
    let alpha = match variant {
        ConfidenceVariant::Exact => cw_alpha(m, v, phi),
        ConfidenceVariant::Soft1(c) => cw_alpha(m, v, phi).min(c),
        ConfidenceVariant::Soft2(c) => scw2_alpha(m, v, phi, c),
    };
    if alpha <= 0.0 {
        return Step::updated(loss);
    }
    let beta = cw_beta(alpha, v, phi);
    model.mu.axpy(alpha * y, &sx, 1.0);
    rank_one_downdate(model, &sx, beta);
    Step::updated(loss)
}

pub(crate) fn nherd(model: &mut SecondOrderModel, x: &DVector<f64>, y: f64, c: f64) -> Step {
    let margin = model.mu.dot(x);
    let loss = hinge(y, margin);
    if loss <= 0.0 {
        return Step::skipped(0.0);
    }
    let sx = &model.sigma * x;
    let v = x.dot(&sx);
    model.mu.axpy(y * loss / (v + 1.0 / c), &sx, 1.0);
    let shrink = (c * c * v + 2.0 * c) / ((1.0 + c * v) * (1.0 + c * v));
    rank_one_downdate(model, &sx, shrink);
    Step::updated(loss)
}

/// Decay schedule `c * b^t`.
pub fn iellip_decay(c: f64, b: f64, t: u64) -> f64 {
    c * b.powf(t as f64)
}

pub(crate) fn iellip(
    model: &mut SecondOrderModel,
    x: &DVector<f64>,
    y: f64,
    ellip_c: f64,
    ellip_b: f64,
    t: u64,
) -> Step {
    let m = y * model.mu.dot(x);
    if m > 0.0 {
        return Step::skipped(0.0);
    }
    let sx = &model.sigma * x;
    let v = x.dot(&sx);
    if v <= 0.0 {
        return Step::updated(1.0);
    }
    let sv = v.sqrt();
    // sigma * g with g = y x / sqrt(v)
    let sg = sx * (y / sv);
    let alpha = ((1.0 - m / sv) * 0.5).clamp(0.0, 1.0);
    let ct = iellip_decay(ellip_c, ellip_b, t);
    model.mu.axpy(alpha, &sg, 1.0);
    model.sigma.ger(-ct, &sg, &sg, 1.0);
    model.sigma /= 1.0 - ct;
    model.symmetrize();
    Step::updated(1.0)
}

/// Second-order perceptron. `mu` accumulates `y x` over mistakes and
/// `sigma` is the inverse of `a I + sum x x^T` over mistakes.
pub(crate) fn sop(model: &mut SecondOrderModel, x: &DVector<f64>, y: f64) -> Step {
    let sx = &model.sigma * x;
    let margin = model.mu.dot(&sx);
    if y * margin > 0.0 {
        return Step::skipped(0.0);
    }
    let v = x.dot(&sx);
    rank_one_downdate(model, &sx, 1.0 / (1.0 + v));
    model.mu.axpy(y, x, 1.0);
    Step::updated(1.0)
}
