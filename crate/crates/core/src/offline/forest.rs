//! CART random forest with Gini splits and majority voting.

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Label, Sample};
use crate::error::{Error, Result};
use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Features tried per split; `None` means `ceil(sqrt(d))`.
    pub max_features: Option<usize>,
    pub max_depth: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            max_features: None,
            max_depth: None,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::Config("a forest needs at least one tree".into()));
        }
        if let Some(k) = self.max_features {
            if k == 0 || k > dim {
                return Err(Error::Config(format!(
                    "max_features must be in 1..={dim}, got {k}"
                )));
            }
        }
        Ok(())
    }

    fn features_per_split(&self, dim: usize) -> usize {
        self.max_features
            .unwrap_or_else(|| ((dim as f64).sqrt().ceil() as usize).clamp(1, dim))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf(Label),
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    pub fn predict(&self, x: &[f64]) -> Label {
        let mut node = self;
        loop {
            match node {
                Node::Leaf(label) => return *label,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf(_) => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Node::Leaf(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub dim: usize,
    pub trees: Vec<Node>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Votes {
    pub pos: usize,
    pub neg: usize,
}

impl Votes {
    pub fn winner(&self) -> Label {
        majority_vote(self.pos, self.neg)
    }
}

/// Ties go to the positive class.
pub fn majority_vote(pos: usize, neg: usize) -> Label {
    if pos >= neg {
        Label::Pos
    } else {
        Label::Neg
    }
}

impl Forest {
    pub fn votes(&self, x: &[f64]) -> Result<Votes> {
        if x.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: x.len(),
            });
        }
        let pos = self
            .trees
            .iter()
            .filter(|t| t.predict(x) == Label::Pos)
            .count();
        Ok(Votes {
            pos,
            neg: self.trees.len() - pos,
        })
    }

    pub fn predict(&self, x: &[f64]) -> Result<Label> {
        Ok(self.votes(x)?.winner())
    }
}

pub fn rf_predict(forest: &Forest, x: &[f64]) -> Result<Label> {
    forest.predict(x)
}

fn gini(pos: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let p = pos as f64 / total as f64;
    2.0 * p * (1.0 - p)
}

struct Builder<'a> {
    samples: &'a [Sample],
    dim: usize,
    mtry: usize,
    max_depth: Option<usize>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

impl Builder<'_> {
    fn majority(&self, idx: &[usize]) -> (Label, usize) {
        let pos = idx
            .iter()
            .filter(|&&i| self.samples[i].y == Label::Pos)
            .count();
        (majority_vote(pos, idx.len() - pos), pos)
    }

    fn best_on_feature(&self, idx: &[usize], feature: usize, total_pos: usize) -> Option<BestSplit> {
        let mut order: Vec<(f64, bool)> = idx
            .iter()
            .map(|&i| (self.samples[i].x[feature], self.samples[i].y == Label::Pos))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = order.len();
        let mut best: Option<BestSplit> = None;
        let mut left_pos = 0;
        for k in 1..n {
            if order[k - 1].1 {
                left_pos += 1;
            }
            if order[k - 1].0 == order[k].0 {
                continue;
            }
            let right_pos = total_pos - left_pos;
            let impurity = (k as f64 * gini(left_pos, k)
                + (n - k) as f64 * gini(right_pos, n - k))
                / n as f64;
            if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                best = Some(BestSplit {
                    feature,
                    threshold: 0.5 * (order[k - 1].0 + order[k].0),
                    impurity,
                });
            }
        }
        best
    }

    fn grow(&self, idx: &mut [usize], depth: usize, rng: &mut ChaCha8Rng) -> Node {
        let (label, pos) = self.majority(idx);
        if pos == 0 || pos == idx.len() || self.max_depth.is_some_and(|m| depth >= m) {
            return Node::Leaf(label);
        }
        // features in random order; keep going past mtry until something splits
        let features = sample_indices(rng, self.dim, self.dim).into_vec();
        let mut best: Option<BestSplit> = None;
        for (tried, &f) in features.iter().enumerate() {
            if tried >= self.mtry && best.is_some() {
                break;
            }
            if let Some(cand) = self.best_on_feature(idx, f, pos) {
                if best.as_ref().is_none_or(|b| cand.impurity < b.impurity) {
                    best = Some(cand);
                }
            }
        }
        let Some(split) = best else {
            return Node::Leaf(label);
        };
        let mid = partition(idx, |i| self.samples[i].x[split.feature] <= split.threshold);
        let (l, r) = idx.split_at_mut(mid);
        Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: Box::new(self.grow(l, depth + 1, rng)),
            right: Box::new(self.grow(r, depth + 1, rng)),
        }
    }
}

fn partition(idx: &mut [usize], pred: impl Fn(usize) -> bool) -> usize {
    let mut mid = 0;
    for k in 0..idx.len() {
        if pred(idx[k]) {
            idx.swap(mid, k);
            mid += 1;
        }
    }
    mid
}

fn check_training_set(samples: &[Sample]) -> Result<usize> {
    let first = samples.first().ok_or(Error::EmptyDataset)?;
    let dim = first.x.len();
    for s in samples {
        if s.x.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: s.x.len(),
            });
        }
        crate::error::ensure_finite(&s.x, "feature")?;
    }
    Ok(dim)
}

/// Trains one tree on the rows listed in `rows` (duplicates allowed).
pub fn train_tree(
    samples: &[Sample],
    rows: &[usize],
    mtry: usize,
    max_depth: Option<usize>,
    rng: &mut ChaCha8Rng,
) -> Result<Node> {
    let dim = check_training_set(samples)?;
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if mtry == 0 || mtry > dim {
        return Err(Error::Config(format!("max_features must be in 1..={dim}, got {mtry}")));
    }
    let builder = Builder {
        samples,
        dim,
        mtry,
        max_depth,
    };
    let mut idx = rows.to_vec();
    Ok(builder.grow(&mut idx, 0, rng))
}

pub fn rf_train(samples: &[Sample], cfg: &ForestConfig) -> Result<Forest> {
    let dim = check_training_set(samples)?;
    cfg.validate(dim)?;
    let mtry = cfg.features_per_split(dim);
    let n = samples.len();
    let trees = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(cfg.seed, t as u64);
            let rows: Vec<usize> = if cfg.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            train_tree(samples, &rows, mtry, cfg.max_depth, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Forest { dim, trees })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_synthetic, SyntheticSpec};

    fn xor_like() -> Vec<Sample> {
        vec![
            Sample::new(vec![0.0, 0.0], Label::Neg),
            Sample::new(vec![0.0, 1.0], Label::Pos),
            Sample::new(vec![1.0, 0.0], Label::Pos),
            Sample::new(vec![1.0, 1.0], Label::Neg),
            Sample::new(vec![0.5, 0.2], Label::Pos),
        ]
    }

    #[test]
    fn single_full_tree_equals_cart() {
        let samples = xor_like();
        let cfg = ForestConfig {
            n_trees: 1,
            max_features: Some(2),
            bootstrap: false,
            ..Default::default()
        };
        let forest = rf_train(&samples, &cfg).unwrap();
        let rows: Vec<usize> = (0..samples.len()).collect();
        let cart = train_tree(&samples, &rows, 2, None, &mut stream_rng(99, 0)).unwrap();
        for s in &samples {
            assert_eq!(forest.predict(&s.x).unwrap(), cart.predict(&s.x));
            assert_eq!(cart.predict(&s.x), s.y);
        }
    }

    #[test]
    fn pure_training_set_gives_leaves() {
        let samples = vec![
            Sample::new(vec![0.1, 0.3], Label::Neg),
            Sample::new(vec![0.7, 0.2], Label::Neg),
        ];
        let forest = rf_train(&samples, &ForestConfig::default()).unwrap();
        assert!(forest.trees.iter().all(Node::is_leaf));
        assert_eq!(forest.predict(&[0.5, 0.5]).unwrap(), Label::Neg);
    }

    #[test]
    fn memorizes_distinct_points() {
        let data = generate_synthetic(&SyntheticSpec::new(60, 40, 0.2, 8)).unwrap();
        let cfg = ForestConfig {
            n_trees: 1,
            bootstrap: false,
            ..Default::default()
        };
        let forest = rf_train(data.dataset.samples(), &cfg).unwrap();
        for s in data.dataset.samples() {
            assert_eq!(forest.predict(&s.x).unwrap(), s.y);
        }
    }

    #[test]
    fn depth_limit_respected() {
        let data = generate_synthetic(&SyntheticSpec::new(60, 40, 0.2, 8)).unwrap();
        let cfg = ForestConfig {
            n_trees: 5,
            max_depth: Some(2),
            ..Default::default()
        };
        let forest = rf_train(data.dataset.samples(), &cfg).unwrap();
        assert!(forest.trees.iter().all(|t| t.depth() <= 2));
    }

    #[test]
    fn votes_recount_and_ties() {
        let data = generate_synthetic(&SyntheticSpec::new(50, 50, 0.1, 1)).unwrap();
        let forest = rf_train(data.dataset.samples(), &ForestConfig { n_trees: 10, ..Default::default() }).unwrap();
        for s in data.dataset.samples().iter().take(20) {
            let votes = forest.votes(&s.x).unwrap();
            let pos = forest.trees.iter().filter(|t| t.predict(&s.x) == Label::Pos).count();
            assert_eq!(votes.pos, pos);
            assert_eq!(votes.pos + votes.neg, 10);
        }
        assert_eq!(majority_vote(5, 5), Label::Pos);
        assert_eq!(majority_vote(4, 6), Label::Neg);
    }

    #[test]
    fn deterministic_per_seed() {
        let data = generate_synthetic(&SyntheticSpec::new(40, 30, 0.1, 2)).unwrap();
        let cfg = ForestConfig { n_trees: 8, seed: 11, ..Default::default() };
        let a = rf_train(data.dataset.samples(), &cfg).unwrap();
        let b = rf_train(data.dataset.samples(), &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_config() {
        let samples = xor_like();
        for cfg in [
            ForestConfig { n_trees: 0, ..Default::default() },
            ForestConfig { max_features: Some(3), ..Default::default() },
        ] {
            assert!(matches!(rf_train(&samples, &cfg), Err(Error::Config(_))));
        }
        assert!(rf_train(&[], &ForestConfig::default()).is_err());
        assert!(forest_dim_mismatch(&samples));
    }

    fn forest_dim_mismatch(samples: &[Sample]) -> bool {
        let forest = rf_train(samples, &ForestConfig { n_trees: 2, ..Default::default() }).unwrap();
        forest.predict(&[0.0]).is_err()
    }
}
