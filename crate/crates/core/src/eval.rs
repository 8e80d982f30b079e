//! Evaluation protocols: prequential streams, repeated shuffled runs,
//! chunked incremental replay, train/test splits and forest sweeps.

use std::collections::BTreeSet;
use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{augment, Dataset, FirstOrderModel, Label, Sample};
use crate::error::{Error, Result};
use crate::ingest::stratified_split;
use crate::learners::{Learner, LearnerConfig};
use crate::metrics::{compute_metrics, ConfusionMatrix, Metrics};
use crate::offline::{rf_train, svm_train, Forest, ForestConfig, SvmConfig};
use crate::rng::{derive_seed, stream_rng};

pub const DEFAULT_RUNS: usize = 20;

/// Whether independent runs may use the thread pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Parallel,
    Serial,
}

fn run_indexed<T, F>(n: usize, exec: Execution, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    // collect() keeps index order, so results never depend on scheduling
    match exec {
        Execution::Parallel => (0..n).into_par_iter().map(f).collect(),
        Execution::Serial => (0..n).map(f).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StreamEvalResult {
    pub n_samples: usize,
    pub mistakes: u64,
    pub error_rate: f64,
    pub n_updates: u64,
    pub cpu_seconds: f64,
}

/// Counts from one predict-then-update pass.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PassCounts {
    pub mistakes: u64,
    pub updates: u64,
    pub cpu_seconds: f64,
}

fn augmented(samples: &[Sample]) -> Vec<(Vec<f64>, Label)> {
    samples.iter().map(|s| (augment(&s.x), s.y)).collect()
}

fn timed_pass(learner: &mut Learner, stream: &[(Vec<f64>, Label)]) -> Result<PassCounts> {
    let mut counts = PassCounts::default();
    let start = Instant::now();
    for (x, y) in stream {
        let out = learner.update(x, *y)?;
        if out.predicted != *y {
            counts.mistakes += 1;
        }
        if out.updated {
            counts.updates += 1;
        }
    }
    counts.cpu_seconds = start.elapsed().as_secs_f64();
    Ok(counts)
}

/// Runs `learner` over `stream` once, predicting each sample before
/// learning from it.
pub fn prequential_pass(learner: &mut Learner, stream: &[Sample]) -> Result<PassCounts> {
    timed_pass(learner, &augmented(stream))
}

pub fn online_eval(config: &LearnerConfig, stream: &[Sample]) -> Result<StreamEvalResult> {
    let first = stream.first().ok_or(Error::EmptyDataset)?;
    let mut learner = Learner::new(*config, first.x.len() + 1)?;
    let counts = prequential_pass(&mut learner, stream)?;
    Ok(StreamEvalResult {
        n_samples: stream.len(),
        mistakes: counts.mistakes,
        error_rate: counts.mistakes as f64 / stream.len() as f64,
        n_updates: counts.updates,
        cpu_seconds: counts.cpu_seconds,
    })
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
    /// Set when `n < 2` and the deviation is undefined (reported as 0).
    pub degenerate: bool,
}

impl Aggregate {
    pub fn from_values(values: &[f64]) -> Result<Aggregate> {
        if values.is_empty() {
            return Err(Error::Invalid("cannot aggregate zero runs".into()));
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        if n < 2 {
            return Ok(Aggregate {
                mean,
                std: 0.0,
                n,
                degenerate: true,
            });
        }
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        Ok(Aggregate {
            mean,
            std: (ss / (n - 1) as f64).sqrt(),
            n,
            degenerate: false,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateResult {
    pub error_rate: Aggregate,
    pub n_updates: Aggregate,
    pub cpu_seconds: Aggregate,
    pub n_runs: usize,
}

impl AggregateResult {
    fn from_runs(runs: &[StreamEvalResult]) -> Result<Self> {
        let col = |f: fn(&StreamEvalResult) -> f64| -> Result<Aggregate> {
            Aggregate::from_values(&runs.iter().map(f).collect::<Vec<_>>())
        };
        Ok(AggregateResult {
            error_rate: col(|r| r.error_rate)?,
            n_updates: col(|r| r.n_updates as f64)?,
            cpu_seconds: col(|r| r.cpu_seconds)?,
            n_runs: runs.len(),
        })
    }
}

/// Sample order used by run `run` under `master_seed`.
pub fn run_order(n: usize, master_seed: u64, run: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream_rng(master_seed, run as u64 + 1));
    order
}

fn shuffled(data: &Dataset, master_seed: u64, run: usize) -> Vec<Sample> {
    run_order(data.len(), master_seed, run)
        .into_iter()
        .map(|i| data.samples()[i].clone())
        .collect()
}

fn check_runs(n_runs: usize, data: &Dataset) -> Result<()> {
    if n_runs == 0 {
        return Err(Error::Config("number of runs must be at least 1".into()));
    }
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(())
}

/// Every run's stream result, in run order.
pub fn repeated_runs(
    config: &LearnerConfig,
    data: &Dataset,
    n_runs: usize,
    master_seed: u64,
    exec: Execution,
) -> Result<Vec<StreamEvalResult>> {
    check_runs(n_runs, data)?;
    config.validate()?;
    run_indexed(n_runs, exec, |j| {
        online_eval(config, &shuffled(data, master_seed, j))
    })
}

pub fn repeated_eval(
    config: &LearnerConfig,
    data: &Dataset,
    n_runs: usize,
    master_seed: u64,
    exec: Execution,
) -> Result<AggregateResult> {
    AggregateResult::from_runs(&repeated_runs(config, data, n_runs, master_seed, exec)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReplayMode {
    /// Every prefix is learned from a fresh state.
    Retrain,
    /// The state carries over and only the new chunk is processed.
    Incremental,
}

/// Cumulative prefix sizes `ceil(k n / n_chunks)` for `k = 1..=n_chunks`.
pub fn chunk_boundaries(n: usize, n_chunks: usize) -> Result<Vec<usize>> {
    if n_chunks == 0 {
        return Err(Error::Config("chunk count must be at least 1".into()));
    }
    if n_chunks > n {
        return Err(Error::Config(format!(
            "chunk count {n_chunks} exceeds the {n} available samples"
        )));
    }
    Ok((1..=n_chunks).map(|k| (k * n).div_ceil(n_chunks)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChunkRow {
    pub records: usize,
    pub error_rate: Aggregate,
    pub n_updates: Aggregate,
    pub cpu_seconds: Aggregate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IncrementalResult {
    pub rows: Vec<ChunkRow>,
    /// Learner state after the last chunk, one per run.
    pub final_states: Vec<Learner>,
}

struct ChunkRun {
    steps: Vec<StreamEvalResult>,
    state: Learner,
}

fn replay_run(
    config: &LearnerConfig,
    stream: &[(Vec<f64>, Label)],
    bounds: &[usize],
    mode: ReplayMode,
) -> Result<ChunkRun> {
    let dim = stream[0].0.len();
    let mut steps = Vec::with_capacity(bounds.len());
    let mut learner = Learner::new(*config, dim)?;
    let (mut mistakes, mut updates, mut prev) = (0u64, 0u64, 0usize);
    for &end in bounds {
        let counts = match mode {
            ReplayMode::Retrain => {
                learner = Learner::new(*config, dim)?;
                let c = timed_pass(&mut learner, &stream[..end])?;
                mistakes = c.mistakes;
                updates = c.updates;
                c
            }
            ReplayMode::Incremental => {
                let c = timed_pass(&mut learner, &stream[prev..end])?;
                mistakes += c.mistakes;
                updates += c.updates;
                c
            }
        };
        steps.push(StreamEvalResult {
            n_samples: end,
            mistakes,
            error_rate: mistakes as f64 / end as f64,
            n_updates: updates,
            cpu_seconds: counts.cpu_seconds,
        });
        prev = end;
    }
    Ok(ChunkRun {
        steps,
        state: learner,
    })
}

pub fn incremental_protocol(
    config: &LearnerConfig,
    data: &Dataset,
    n_chunks: usize,
    mode: ReplayMode,
    n_runs: usize,
    master_seed: u64,
    exec: Execution,
) -> Result<IncrementalResult> {
    check_runs(n_runs, data)?;
    config.validate()?;
    let bounds = chunk_boundaries(data.len(), n_chunks)?;
    let runs = run_indexed(n_runs, exec, |j| {
        let stream = augmented(&shuffled(data, master_seed, j));
        replay_run(config, &stream, &bounds, mode)
    })?;
    let mut rows = Vec::with_capacity(bounds.len());
    for (k, &records) in bounds.iter().enumerate() {
        let step: Vec<StreamEvalResult> = runs.iter().map(|r| r.steps[k]).collect();
        let agg = AggregateResult::from_runs(&step)?;
        rows.push(ChunkRow {
            records,
            error_rate: agg.error_rate,
            n_updates: agg.n_updates,
            cpu_seconds: agg.cpu_seconds,
        });
    }
    Ok(IncrementalResult {
        rows,
        final_states: runs.into_iter().map(|r| r.state).collect(),
    })
}

/// Anything that labels raw feature vectors.
pub trait Classifier {
    fn classify(&self, x: &[f64]) -> Result<Label>;
}

impl Classifier for FirstOrderModel {
    fn classify(&self, x: &[f64]) -> Result<Label> {
        self.predict_raw(x)
    }
}

impl Classifier for Forest {
    fn classify(&self, x: &[f64]) -> Result<Label> {
        self.predict(x)
    }
}

impl Classifier for Learner {
    fn classify(&self, x: &[f64]) -> Result<Label> {
        Ok(self.predict(&augment(x), None)?.predicted)
    }
}

/// Predicts the same label for every input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Constant(pub Label);

impl Classifier for Constant {
    fn classify(&self, _x: &[f64]) -> Result<Label> {
        Ok(self.0)
    }
}

pub fn confusion(model: &dyn Classifier, test: &[Sample]) -> Result<ConfusionMatrix> {
    let mut cm = ConfusionMatrix::default();
    for s in test {
        cm.record(s.y, model.classify(&s.x)?);
    }
    Ok(cm)
}

pub fn metrics_report(model: &dyn Classifier, test: &Dataset) -> Result<Metrics> {
    compute_metrics(&confusion(model, test.samples())?)
}

/// Model families evaluated on held-out data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "trainer", rename_all = "lowercase")]
pub enum Trainer {
    Svm(SvmConfig),
    Forest(ForestConfig),
    /// A single online pass over the training set, then frozen.
    Online(LearnerConfig),
}

impl Trainer {
    /// Trains on `train`; `seed` replaces the configured seed.
    pub fn fit(&self, train: &[Sample], seed: u64) -> Result<Box<dyn Classifier + Send>> {
        Ok(match self {
            Trainer::Svm(cfg) => Box::new(svm_train(train, &SvmConfig { seed, ..*cfg })?),
            Trainer::Forest(cfg) => Box::new(rf_train(train, &ForestConfig { seed, ..*cfg })?),
            Trainer::Online(cfg) => {
                let first = train.first().ok_or(Error::EmptyDataset)?;
                let mut learner = Learner::new(*cfg, first.x.len() + 1)?;
                prequential_pass(&mut learner, train)?;
                Box::new(learner)
            }
        })
    }
}

fn split_seed(master_seed: u64, run: usize) -> u64 {
    derive_seed(master_seed, &[0, run as u64])
}

fn model_seed(master_seed: u64, run: usize) -> u64 {
    derive_seed(master_seed, &[1, run as u64])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRow {
    pub fraction: f64,
    pub train_size: usize,
    pub test_size: usize,
    pub accuracy: Aggregate,
}

/// Confusion matrix of run `run` at `fraction`, plus the split sizes.
pub fn split_run(
    trainer: &Trainer,
    data: &Dataset,
    fraction: f64,
    master_seed: u64,
    run: usize,
) -> Result<(ConfusionMatrix, usize, usize)> {
    let (train, test) = stratified_split(data, fraction, split_seed(master_seed, run))?;
    let model = trainer.fit(train.samples(), model_seed(master_seed, run))?;
    Ok((confusion(model.as_ref(), test.samples())?, train.len(), test.len()))
}

pub fn split_eval(
    trainer: &Trainer,
    data: &Dataset,
    fractions: &[f64],
    n_runs: usize,
    master_seed: u64,
    exec: Execution,
) -> Result<Vec<SplitRow>> {
    check_runs(n_runs, data)?;
    if fractions.is_empty() {
        return Err(Error::Config("no train fractions given".into()));
    }
    fractions
        .iter()
        .map(|&fraction| {
            let runs = run_indexed(n_runs, exec, |j| {
                split_run(trainer, data, fraction, master_seed, j)
            })?;
            let acc: Vec<f64> = runs
                .iter()
                .map(|(cm, _, _)| compute_metrics(cm).map(|m| m.accuracy))
                .collect::<Result<_>>()?;
            Ok(SplitRow {
                fraction,
                train_size: runs[0].1,
                test_size: runs[0].2,
                accuracy: Aggregate::from_values(&acc)?,
            })
        })
        .collect()
}

/// Metrics over the pooled confusion matrices of `n_runs` splits.
pub fn pooled_metrics(
    trainer: &Trainer,
    data: &Dataset,
    fraction: f64,
    n_runs: usize,
    master_seed: u64,
    exec: Execution,
) -> Result<Metrics> {
    check_runs(n_runs, data)?;
    let runs = run_indexed(n_runs, exec, |j| {
        split_run(trainer, data, fraction, master_seed, j)
    })?;
    let mut total = ConfusionMatrix::default();
    for (cm, _, _) in &runs {
        total.merge(cm);
    }
    compute_metrics(&total)
}

pub const SWEEP_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n_trees: usize,
    pub accuracy: Aggregate,
}

pub fn forest_sweep(
    base: &ForestConfig,
    data: &Dataset,
    tree_counts: &[usize],
    n_runs: usize,
    master_seed: u64,
    exec: Execution,
) -> Result<Vec<SweepRow>> {
    check_runs(n_runs, data)?;
    if tree_counts.is_empty() {
        return Err(Error::Config("no tree counts given".into()));
    }
    let mut seen = BTreeSet::new();
    for &n in tree_counts {
        if n == 0 {
            return Err(Error::Config("tree counts must be at least 1".into()));
        }
        if !seen.insert(n) {
            return Err(Error::Config(format!("tree count {n} listed twice")));
        }
    }
    tree_counts
        .iter()
        .map(|&n_trees| {
            let trainer = Trainer::Forest(ForestConfig { n_trees, ..*base });
            let acc = run_indexed(n_runs, exec, |j| {
                let (cm, _, _) = split_run(&trainer, data, SWEEP_FRACTION, master_seed, j)?;
                Ok(compute_metrics(&cm)?.accuracy)
            })?;
            Ok(SweepRow {
                n_trees,
                accuracy: Aggregate::from_values(&acc)?,
            })
        })
        .collect()
}
