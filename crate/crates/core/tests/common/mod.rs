#![allow(dead_code)]

pub mod oracle;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use onlinedx::data::{FirstOrderModel, SecondOrderModel};
use onlinedx::learners::Model;
use onlinedx::{Label, Learner, LearnerConfig};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vector(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(d, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
}

/// Random symmetric positive-definite matrix with eigenvalues bounded away
/// from zero.
pub fn random_spd(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal)) / (d as f64).sqrt();
    &a * a.transpose() + DMatrix::identity(d, d) * 0.1
}

pub fn random_label(rng: &mut ChaCha8Rng) -> Label {
    if rng.random_bool(0.5) {
        Label::Pos
    } else {
        Label::Neg
    }
}

pub fn first_order_learner(cfg: LearnerConfig, w: &DVector<f64>) -> Learner {
    Learner::from_parts(cfg, Model::FirstOrder(FirstOrderModel { w: w.clone() }), 1, 1.0, 0)
        .expect("valid learner")
}

pub fn second_order_learner(cfg: LearnerConfig, mu: &DVector<f64>, sigma: &DMatrix<f64>) -> Learner {
    let model = SecondOrderModel {
        mu: mu.clone(),
        sigma: sigma.clone(),
    };
    Learner::from_parts(cfg, Model::SecondOrder(model), 1, 1.0, 0).expect("valid learner")
}

pub fn weights(learner: &Learner) -> &DVector<f64> {
    match learner.model() {
        Model::FirstOrder(m) => &m.w,
        Model::SecondOrder(_) => panic!("expected a first-order model"),
    }
}

pub fn gaussian(learner: &Learner) -> &SecondOrderModel {
    match learner.model() {
        Model::SecondOrder(m) => m,
        Model::FirstOrder(_) => panic!("expected a second-order model"),
    }
}

/// Largest absolute coordinate difference between two learners' models.
pub fn model_distance(a: &Learner, b: &Learner) -> f64 {
    match (a.model(), b.model()) {
        (Model::FirstOrder(x), Model::FirstOrder(y)) => (&x.w - &y.w).amax(),
        (Model::SecondOrder(x), Model::SecondOrder(y)) => {
            (&x.mu - &y.mu).amax().max((&x.sigma - &y.sigma).amax())
        }
        _ => f64::INFINITY,
    }
}
