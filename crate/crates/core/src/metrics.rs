//! Confusion-matrix metrics. The positive class is `Label::Pos`.

use serde::{Deserialize, Serialize};

use crate::data::Label;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        ConfusionMatrix { tp, fp, tn, fn_ }
    }

    pub fn record(&mut self, truth: Label, predicted: Label) {
        match (truth, predicted) {
            (Label::Pos, Label::Pos) => self.tp += 1,
            (Label::Neg, Label::Pos) => self.fp += 1,
            (Label::Neg, Label::Neg) => self.tn += 1,
            (Label::Pos, Label::Neg) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// Swap the roles of the two classes.
    pub fn swapped(&self) -> Self {
        ConfusionMatrix {
            tp: self.tn,
            fp: self.fn_,
            tn: self.tp,
            fn_: self.fp,
        }
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.tn += other.tn;
        self.fn_ += other.fn_;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub tp_rate: f64,
    pub fp_rate: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    /// Matthews correlation coefficient.
    pub mcc: f64,
    /// Set when any ratio had a zero denominator and was reported as 0.
    pub degenerate: bool,
}

fn ratio(num: f64, den: f64, degenerate: &mut bool) -> f64 {
    if den == 0.0 {
        *degenerate = true;
        0.0
    } else {
        num / den
    }
}

pub fn compute_metrics(c: &ConfusionMatrix) -> Result<Metrics> {
    let total = c.total();
    if total == 0 {
        return Err(Error::EmptyConfusion);
    }
    let (tp, fp, tn, fn_) = (c.tp as f64, c.fp as f64, c.tn as f64, c.fn_ as f64);
    let mut degenerate = false;
    let accuracy = (tp + tn) / total as f64;
    let tp_rate = ratio(tp, tp + fn_, &mut degenerate);
    let fp_rate = ratio(fp, fp + tn, &mut degenerate);
    let precision = ratio(tp, tp + fp, &mut degenerate);
    let recall = tp_rate;
    let f_measure = ratio(2.0 * precision * recall, precision + recall, &mut degenerate);
    let den = ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt();
    let mcc = ratio(tp * tn - fp * fn_, den, &mut degenerate).clamp(-1.0, 1.0);
    Ok(Metrics {
        accuracy,
        tp_rate,
        fp_rate,
        precision,
        recall,
        f_measure,
        mcc,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_fixture() {
        let m = compute_metrics(&ConfusionMatrix::new(3, 1, 5, 1)).unwrap();
        assert!((m.accuracy - 0.8).abs() < 1e-12);
        assert!((m.precision - 0.75).abs() < 1e-12);
        assert!((m.recall - 0.75).abs() < 1e-12);
        assert!((m.f_measure - 0.75).abs() < 1e-12);
        // (15 - 1) / sqrt(4 * 4 * 6 * 6) = 14 / 24
        assert!((m.mcc - 14.0 / 24.0).abs() < 1e-12);
        assert!(!m.degenerate);
    }

    #[test]
    fn perfect_classifier() {
        let m = compute_metrics(&ConfusionMatrix::new(10, 0, 10, 0)).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.mcc, 1.0);
    }

    #[test]
    fn all_negative_predictor_is_degenerate() {
        let m = compute_metrics(&ConfusionMatrix::new(0, 0, 4, 4)).unwrap();
        assert_eq!(m.precision, 0.0);
        assert_eq!(m.recall, 0.0);
        assert!(m.degenerate);
    }

    #[test]
    fn empty_matrix_errors() {
        assert!(matches!(
            compute_metrics(&ConfusionMatrix::default()),
            Err(Error::EmptyConfusion)
        ));
    }

    fn arb_matrix() -> impl Strategy<Value = ConfusionMatrix> {
        (0u64..50, 0u64..50, 0u64..50, 0u64..50)
            .prop_filter("nonempty", |(a, b, c, d)| a + b + c + d > 0)
            .prop_map(|(a, b, c, d)| ConfusionMatrix::new(a, b, c, d))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn class_swap_relations(c in arb_matrix()) {
            let a = compute_metrics(&c).unwrap();
            let b = compute_metrics(&c.swapped()).unwrap();
            prop_assert!((a.mcc - b.mcc).abs() < 1e-12);
            if c.fp + c.tn > 0 {
                prop_assert!((b.tp_rate - (1.0 - a.fp_rate)).abs() < 1e-12);
            }
            if c.tp + c.fn_ > 0 {
                prop_assert!((b.fp_rate - (1.0 - a.tp_rate)).abs() < 1e-12);
            }
        }

        #[test]
        fn ranges(c in arb_matrix()) {
            let m = compute_metrics(&c).unwrap();
            for v in [m.accuracy, m.tp_rate, m.fp_rate, m.precision, m.recall, m.f_measure] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            prop_assert!((-1.0..=1.0).contains(&m.mcc));
        }
    }
}
