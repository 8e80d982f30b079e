//! Learners that keep a single weight vector.

use nalgebra::DVector;

use super::Step;

/// Threshold under which the ROMMA denominator is treated as degenerate.
pub const ROMMA_DEGENERATE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PaVariant {
    Pa,
    Pa1,
    Pa2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RommaTrigger {
    Mistake,
    Hinge,
}

fn hinge(y: f64, margin: f64) -> f64 {
    (1.0 - y * margin).max(0.0)
}

pub(crate) fn perceptron(w: &mut DVector<f64>, x: &DVector<f64>, y: f64, margin: f64) -> Step {
    if y * margin <= 0.0 {
        w.axpy(y, x, 1.0);
        Step::updated(1.0)
    } else {
        Step::skipped(0.0)
    }
}

/// Step size of the passive-aggressive family for a given hinge loss.
pub fn pa_step(variant: PaVariant, loss: f64, sq_norm: f64, c: f64) -> f64 {
    if sq_norm == 0.0 {
        return 0.0;
    }
    match variant {
        PaVariant::Pa => loss / sq_norm,
        PaVariant::Pa1 => (loss / sq_norm).min(c),
        PaVariant::Pa2 => loss / (sq_norm + 1.0 / (2.0 * c)),
    }
}

pub(crate) fn passive_aggressive(
    w: &mut DVector<f64>,
    x: &DVector<f64>,
    y: f64,
    margin: f64,
    variant: PaVariant,
    c: f64,
) -> Step {
    let loss = hinge(y, margin);
    if loss <= 0.0 {
        return Step::skipped(0.0);
    }
    let tau = pa_step(variant, loss, x.norm_squared(), c);
    w.axpy(tau * y, x, 1.0);
    Step::updated(loss)
}

pub(crate) fn ogd(
    w: &mut DVector<f64>,
    x: &DVector<f64>,
    y: f64,
    margin: f64,
    eta0: f64,
    t: u64,
) -> Step {
    let loss = hinge(y, margin);
    if loss <= 0.0 {
        return Step::skipped(0.0);
    }
    let rate = eta0 / (t as f64).sqrt();
    w.axpy(rate * y, x, 1.0);
    Step::updated(loss)
}

/// ALMA_2 with p = 2: normalized inputs, projection onto the unit ball.
pub(crate) fn alma(
    w: &mut DVector<f64>,
    k: &mut f64,
    x: &DVector<f64>,
    y: f64,
    margin: f64,
    alpha: f64,
) -> Step {
    let norm = x.norm();
    if norm == 0.0 {
        return Step::skipped(0.0);
    }
    let rate = (2.0 / *k).sqrt();
    let normalized_margin = y * margin / norm;
    let threshold = (1.0 - alpha) * rate;
    let loss = (threshold - normalized_margin).max(0.0);
    if normalized_margin > threshold {
        return Step::skipped(loss);
    }
    w.axpy(rate * y / norm, x, 1.0);
    let wn = w.norm();
    if wn > 1.0 {
        *w /= wn;
    }
    *k += 1.0;
    Step::updated(loss)
}

pub(crate) fn romma(
    w: &mut DVector<f64>,
    x: &DVector<f64>,
    y: f64,
    margin: f64,
    trigger: RommaTrigger,
) -> Step {
    let fired = match trigger {
        RommaTrigger::Mistake => y * margin <= 0.0,
        RommaTrigger::Hinge => hinge(y, margin) > 0.0,
    };
    let loss = match trigger {
        RommaTrigger::Mistake => f64::from(u8::from(fired)),
        RommaTrigger::Hinge => hinge(y, margin),
    };
    if !fired {
        return Step::skipped(loss);
    }
    let ww = w.norm_squared();
    let xx = x.norm_squared();
    let denom = xx * ww - margin * margin;
    if ww == 0.0 || denom < ROMMA_DEGENERATE {
        w.axpy(y, x, 1.0);
    } else {
        let c = (xx * ww - y * margin) / denom;
        let d = ww * (y - margin) / denom;
        *w *= c;
        w.axpy(d, x, 1.0);
    }
    Step::updated(loss)
}
