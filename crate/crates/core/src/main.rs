use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use onlinedx::eval::{
    confusion, forest_sweep, incremental_protocol, pooled_metrics, repeated_eval, split_eval,
    Execution, ReplayMode, Trainer, DEFAULT_RUNS, SWEEP_FRACTION,
};
use onlinedx::ingest::{load_csv_with, save_csv, write_csv, BinaryImpute, ImputePolicy, NumericImpute};
use onlinedx::metrics::compute_metrics;
use onlinedx::offline::{rf_train, svm_train, ForestConfig, SvmConfig};
use onlinedx::report::{mean_std, mean_std_digits, Format, Report};
use onlinedx::snapshot::Snapshot;
use onlinedx::synth::{generate_synthetic, SyntheticSpec};
use onlinedx::{augment, Algorithm, Dataset, Learner, LearnerConfig};

const CPU_DIGITS: usize = 6;

#[derive(Parser)]
#[command(name = "onlinedx", version, about = "Online and offline classifiers for binary clinical tabular data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded synthetic dataset in the clinical CSV layout.
    Synth(SynthArgs),
    /// Prequential error, updates and time of online learners over shuffled runs.
    EvalOnline(EvalOnlineArgs),
    /// Chunked replay: retrain on each prefix or continue incrementally.
    Incremental(IncrementalArgs),
    /// Held-out accuracy of the SVM over train fractions, or of forests over tree counts.
    EvalOffline(EvalOfflineArgs),
    /// Train one model on a data file and save a snapshot.
    Train(TrainArgs),
    /// Label a data file with a saved snapshot.
    Predict(PredictArgs),
}

#[derive(Args)]
struct OutputArgs {
    /// Output file (standard output when omitted).
    #[arg(short, long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
}

#[derive(Args)]
struct DataArgs {
    /// Clinical CSV file.
    data: PathBuf,
    /// Keep raw feature values instead of min-max normalizing.
    #[arg(long)]
    no_normalize: bool,
    #[arg(long, value_enum, default_value_t = NumericImputeArg::Median)]
    impute_numeric: NumericImputeArg,
    #[arg(long, value_enum, default_value_t = BinaryImputeArg::Zero)]
    impute_binary: BinaryImputeArg,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_RUNS, value_parser = at_least_one)]
    runs: usize,
    /// Run repetitions one after another (cleaner timing).
    #[arg(long)]
    serial: bool,
}

#[derive(Args)]
struct LearnerArgs {
    /// Aggressiveness for PA1, PA2, SCW1, SCW2 and NHERD.
    #[arg(long)]
    c: Option<f64>,
    /// AROW regularizer.
    #[arg(long)]
    r: Option<f64>,
    /// Confidence level for CW and SCW, in (0.5, 1).
    #[arg(long)]
    eta: Option<f64>,
    /// ALMA accuracy parameter.
    #[arg(long)]
    alpha: Option<f64>,
    /// SOP ridge.
    #[arg(long)]
    a: Option<f64>,
    /// NAROW eigenvalue bound.
    #[arg(long)]
    b_bound: Option<f64>,
    #[arg(long)]
    ellip_b: Option<f64>,
    #[arg(long)]
    ellip_c: Option<f64>,
    /// OGD base step.
    #[arg(long)]
    eta0: Option<f64>,
}

impl LearnerArgs {
    fn config(&self, algorithm: Algorithm) -> LearnerConfig {
        let mut cfg = LearnerConfig::new(algorithm);
        let fields = [
            (&mut cfg.c, self.c),
            (&mut cfg.r, self.r),
            (&mut cfg.eta, self.eta),
            (&mut cfg.alpha, self.alpha),
            (&mut cfg.a, self.a),
            (&mut cfg.b_bound, self.b_bound),
            (&mut cfg.ellip_b, self.ellip_b),
            (&mut cfg.ellip_c, self.ellip_c),
            (&mut cfg.eta0, self.eta0),
        ];
        for (slot, value) in fields {
            if let Some(v) = value {
                *slot = v;
            }
        }
        cfg
    }
}

#[derive(Args)]
struct SvmArgs {
    /// SVM trade-off between margin and slack.
    #[arg(long, default_value_t = 1.0)]
    svm_c: f64,
    #[arg(long, default_value_t = SvmConfig::default().epochs)]
    epochs: usize,
}

#[derive(Args)]
struct ForestArgs {
    /// Features tried per split (default: ceil(sqrt(d))).
    #[arg(long)]
    max_features: Option<usize>,
    #[arg(long)]
    max_depth: Option<usize>,
    /// Grow each tree on the full training set instead of a bootstrap.
    #[arg(long)]
    no_bootstrap: bool,
}

impl ForestArgs {
    fn config(&self, n_trees: usize) -> ForestConfig {
        ForestConfig {
            n_trees,
            max_features: self.max_features,
            max_depth: self.max_depth,
            bootstrap: !self.no_bootstrap,
            seed: 0,
        }
    }
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    pos: usize,
    #[arg(long)]
    neg: usize,
    /// Label flip probability in [0, 1).
    #[arg(long, default_value_t = 0.0, value_parser = flip_rate)]
    flip: f64,
    /// Minimum functional margin of the planted rule.
    #[arg(long, default_value_t = 0.5)]
    separation: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalOnlineArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Comma-separated algorithm names, or `all`.
    #[arg(long, default_value = "all")]
    algorithms: String,
    #[command(flatten)]
    run: RunArgs,
    #[command(flatten)]
    learner: LearnerArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct IncrementalArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    algorithm: String,
    #[arg(long, value_enum, default_value_t = ModeArg::Incremental)]
    mode: ModeArg,
    #[arg(long, default_value_t = 10, value_parser = at_least_one)]
    chunks: usize,
    #[command(flatten)]
    run: RunArgs,
    #[command(flatten)]
    learner: LearnerArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct EvalOfflineArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum)]
    model: OfflineModel,
    /// Train fractions for the SVM sweep.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")]
    fractions: Vec<f64>,
    /// Tree counts for the forest sweep.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "1,2,3,4,5,6,7,8,9,10,20,30,40,50,60,70,80,90"
    )]
    tree_counts: Vec<usize>,
    /// Trees in the forest used for --metrics.
    #[arg(long, default_value_t = 100)]
    trees: usize,
    /// Append pooled test metrics at an 80:20 split.
    #[arg(long)]
    metrics: bool,
    #[command(flatten)]
    run: RunArgs,
    #[command(flatten)]
    svm: SvmArgs,
    #[command(flatten)]
    forest: ForestArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum)]
    model: TrainModel,
    /// Online algorithm (with --model online).
    #[arg(long)]
    algorithm: Option<String>,
    #[arg(long, default_value_t = 100)]
    trees: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    learner: LearnerArgs,
    #[command(flatten)]
    svm: SvmArgs,
    #[command(flatten)]
    forest: ForestArgs,
    /// Snapshot file to write.
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    snapshot: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Table,
}

#[derive(Clone, Copy, ValueEnum)]
enum NumericImputeArg {
    Median,
    Zero,
}

#[derive(Clone, Copy, ValueEnum)]
enum BinaryImputeArg {
    Zero,
    Mode,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Retrain,
    Incremental,
}

#[derive(Clone, Copy, ValueEnum)]
enum OfflineModel {
    Svm,
    Forest,
}

#[derive(Clone, Copy, ValueEnum)]
enum TrainModel {
    Online,
    Svm,
    Forest,
}

fn flip_rate(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if (0.0..1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("flip rate must be in [0, 1), got {v}"))
    }
}

fn at_least_one(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(n) => Ok(n),
        Err(_) => Err(format!("`{s}` is not a positive integer")),
    }
}

/// Failure reported to the user; usage errors exit with status 2.
enum Failure {
    Usage(String),
    Run(String),
}

impl From<onlinedx::Error> for Failure {
    fn from(e: onlinedx::Error) -> Self {
        match e {
            onlinedx::Error::Config(msg) => Failure::Usage(msg),
            other => Failure::Run(other.to_string()),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

impl DataArgs {
    fn policy(&self) -> ImputePolicy {
        ImputePolicy {
            numeric: match self.impute_numeric {
                NumericImputeArg::Median => NumericImpute::Median,
                NumericImputeArg::Zero => NumericImpute::Zero,
            },
            binary: match self.impute_binary {
                BinaryImputeArg::Zero => BinaryImpute::Zero,
                BinaryImputeArg::Mode => BinaryImpute::Mode,
            },
        }
    }

    fn load(&self) -> CliResult<Dataset> {
        Ok(load_csv_with(&self.data, self.policy(), !self.no_normalize)?)
    }

    fn describe(&self, report: &mut Report) {
        report
            .meta("data", self.data.display())
            .meta("normalize", !self.no_normalize)
            .meta("impute_numeric", format!("{:?}", self.policy().numeric).to_lowercase())
            .meta("impute_binary", format!("{:?}", self.policy().binary).to_lowercase());
    }
}

impl RunArgs {
    fn exec(&self) -> Execution {
        if self.serial {
            Execution::Serial
        } else {
            Execution::Parallel
        }
    }

    fn describe(&self, report: &mut Report) {
        report
            .meta("seed", self.seed)
            .meta("runs", self.runs)
            .meta("serial", self.serial);
        if self.runs == 1 {
            report.meta("note", "single run; std reported as 0");
        }
    }
}

fn describe_learner(report: &mut Report, cfg: &LearnerConfig) {
    report
        .meta("c", cfg.c)
        .meta("r", cfg.r)
        .meta("eta", cfg.eta)
        .meta("alpha", cfg.alpha)
        .meta("a", cfg.a)
        .meta("b_bound", cfg.b_bound)
        .meta("ellip_b", cfg.ellip_b)
        .meta("ellip_c", cfg.ellip_c)
        .meta("eta0", cfg.eta0);
}

fn emit(text: &str, out: Option<&Path>) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::Run(format!("cannot write {}: {e}", path.display()))),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Run(format!("cannot write output: {e}"))),
    }
}

fn emit_report(report: &Report, output: &OutputArgs) -> CliResult<()> {
    let format = match output.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Table => Format::Table,
    };
    emit(&report.render(format)?, output.out.as_deref())
}

fn parse_algorithms(spec: &str) -> CliResult<Vec<Algorithm>> {
    if spec.trim().eq_ignore_ascii_case("all") {
        return Ok(Algorithm::ALL.to_vec());
    }
    let mut algs = Vec::new();
    for name in spec.split(',').filter(|s| !s.trim().is_empty()) {
        let alg: Algorithm = name.parse()?;
        if !algs.contains(&alg) {
            algs.push(alg);
        }
    }
    if algs.is_empty() {
        return Err(Failure::Usage("no algorithms given".into()));
    }
    Ok(algs)
}

fn cmd_synth(args: &SynthArgs) -> CliResult<()> {
    let spec = SyntheticSpec {
        n_pos: args.pos,
        n_neg: args.neg,
        flip_rate: args.flip,
        seed: args.seed,
        separation: args.separation,
    };
    let data = generate_synthetic(&spec)?;
    match &args.out {
        Some(path) => save_csv(&data.dataset, path)?,
        None => write_csv(&data.dataset, io::stdout().lock())?,
    }
    Ok(())
}

fn cmd_eval_online(args: &EvalOnlineArgs) -> CliResult<()> {
    let algorithms = parse_algorithms(&args.algorithms)?;
    let data = args.data.load()?;
    let mut results = Vec::with_capacity(algorithms.len());
    for &alg in &algorithms {
        let cfg = args.learner.config(alg);
        let agg = repeated_eval(&cfg, &data, args.run.runs, args.run.seed, args.run.exec())?;
        results.push((alg, agg));
    }
    results.sort_by(|a, b| a.1.error_rate.mean.total_cmp(&b.1.error_rate.mean));

    let mut report = Report::new(["algorithm", "error_rate", "n_updates", "cpu_seconds"]);
    report.meta("command", "eval-online").meta(
        "algorithms",
        algorithms.iter().map(|a| a.name()).collect::<Vec<_>>().join(","),
    );
    args.data.describe(&mut report);
    args.run.describe(&mut report);
    describe_learner(&mut report, &args.learner.config(Algorithm::Perceptron));
    for (alg, agg) in &results {
        report.push_row(vec![
            alg.name().to_string(),
            mean_std(&agg.error_rate),
            mean_std(&agg.n_updates),
            mean_std_digits(&agg.cpu_seconds, CPU_DIGITS),
        ])?;
    }
    emit_report(&report, &args.output)
}

fn cmd_incremental(args: &IncrementalArgs) -> CliResult<()> {
    let alg: Algorithm = args.algorithm.parse()?;
    let cfg = args.learner.config(alg);
    let data = args.data.load()?;
    if args.chunks > data.len() {
        return Err(Failure::Usage(format!(
            "--chunks {} exceeds the {} samples in {}",
            args.chunks,
            data.len(),
            args.data.data.display()
        )));
    }
    let (mode, mode_name) = match args.mode {
        ModeArg::Retrain => (ReplayMode::Retrain, "retrain"),
        ModeArg::Incremental => (ReplayMode::Incremental, "incremental"),
    };
    let result = incremental_protocol(
        &cfg,
        &data,
        args.chunks,
        mode,
        args.run.runs,
        args.run.seed,
        args.run.exec(),
    )?;

    let mut report = Report::new(["records", "error_rate", "n_updates", "cpu_seconds"]);
    report
        .meta("command", "incremental")
        .meta("algorithm", alg.name())
        .meta("mode", mode_name)
        .meta("chunks", args.chunks);
    args.data.describe(&mut report);
    args.run.describe(&mut report);
    describe_learner(&mut report, &cfg);
    for row in &result.rows {
        report.push_row(vec![
            row.records.to_string(),
            mean_std(&row.error_rate),
            mean_std(&row.n_updates),
            mean_std_digits(&row.cpu_seconds, CPU_DIGITS),
        ])?;
    }
    emit_report(&report, &args.output)
}

fn metrics_block(metrics: &onlinedx::metrics::Metrics, label: &str) -> CliResult<Report> {
    let mut report = Report::new([
        "model",
        "accuracy",
        "tp_rate",
        "fp_rate",
        "precision",
        "recall",
        "f_measure",
        "mcc",
    ]);
    report.meta("pooled_test_metrics_fraction", SWEEP_FRACTION);
    let f = |v: f64| format!("{v:.4}");
    report.push_row(vec![
        label.to_string(),
        f(metrics.accuracy),
        f(metrics.tp_rate),
        f(metrics.fp_rate),
        f(metrics.precision),
        f(metrics.recall),
        f(metrics.f_measure),
        f(metrics.mcc),
    ])?;
    Ok(report)
}

fn cmd_eval_offline(args: &EvalOfflineArgs) -> CliResult<()> {
    let data = args.data.load()?;
    let (run, exec) = (&args.run, args.run.exec());
    let mut report;
    let metrics_trainer;
    match args.model {
        OfflineModel::Svm => {
            if let Some(f) = args.fractions.iter().find(|f| !(**f > 0.0 && **f < 1.0)) {
                return Err(Failure::Usage(format!("train fraction must be in (0, 1), got {f}")));
            }
            let cfg = SvmConfig {
                c: args.svm.svm_c,
                epochs: args.svm.epochs,
                seed: 0,
            };
            let trainer = Trainer::Svm(cfg);
            let rows = split_eval(&trainer, &data, &args.fractions, run.runs, run.seed, exec)?;
            report = Report::new(["fraction", "train", "test", "accuracy"]);
            report
                .meta("command", "eval-offline")
                .meta("model", "svm")
                .meta("svm_c", cfg.c)
                .meta("epochs", cfg.epochs);
            args.data.describe(&mut report);
            run.describe(&mut report);
            for row in &rows {
                report.push_row(vec![
                    format!("{:.2}", row.fraction),
                    row.train_size.to_string(),
                    row.test_size.to_string(),
                    mean_std(&row.accuracy),
                ])?;
            }
            metrics_trainer = trainer;
        }
        OfflineModel::Forest => {
            let base = args.forest.config(1);
            let rows = forest_sweep(&base, &data, &args.tree_counts, run.runs, run.seed, exec)?;
            report = Report::new(["n_trees", "accuracy"]);
            report
                .meta("command", "eval-offline")
                .meta("model", "forest")
                .meta("split_fraction", SWEEP_FRACTION)
                .meta(
                    "max_features",
                    base.max_features.map_or("sqrt".into(), |k| k.to_string()),
                )
                .meta(
                    "max_depth",
                    base.max_depth.map_or("unlimited".into(), |k| k.to_string()),
                )
                .meta("bootstrap", base.bootstrap);
            args.data.describe(&mut report);
            run.describe(&mut report);
            for row in &rows {
                report.push_row(vec![row.n_trees.to_string(), mean_std(&row.accuracy)])?;
            }
            metrics_trainer = Trainer::Forest(args.forest.config(args.trees));
        }
    }
    emit_report(&report, &args.output)?;
    if args.metrics {
        let metrics = pooled_metrics(&metrics_trainer, &data, SWEEP_FRACTION, run.runs, run.seed, exec)?;
        let label = match args.model {
            OfflineModel::Svm => "svm".to_string(),
            OfflineModel::Forest => format!("forest({})", args.trees),
        };
        let block = metrics_block(&metrics, &label)?;
        let format = match args.output.format {
            FormatArg::Csv => Format::Csv,
            FormatArg::Table => Format::Table,
        };
        let text = format!("\n{}", block.render(format)?);
        match &args.output.out {
            Some(path) => {
                let mut f = fs::OpenOptions::new()
                    .append(true)
                    .open(path)
                    .map_err(|e| Failure::Run(format!("cannot write {}: {e}", path.display())))?;
                f.write_all(text.as_bytes())
                    .map_err(|e| Failure::Run(format!("cannot write {}: {e}", path.display())))?;
            }
            None => emit(&text, None)?,
        }
    }
    Ok(())
}

fn cmd_train(args: &TrainArgs) -> CliResult<()> {
    let data = args.data.load()?;
    let snapshot = match args.model {
        TrainModel::Online => {
            let name = args
                .algorithm
                .as_deref()
                .ok_or_else(|| Failure::Usage("--algorithm is required with --model online".into()))?;
            let cfg = args.learner.config(name.parse()?);
            let mut learner = Learner::new(cfg, data.dim() + 1)?;
            for s in data.samples() {
                learner.update(&augment(&s.x), s.y)?;
            }
            Snapshot::from_learner(&learner)
        }
        TrainModel::Svm => {
            let cfg = SvmConfig {
                c: args.svm.svm_c,
                epochs: args.svm.epochs,
                seed: args.seed,
            };
            Snapshot::from_svm(cfg, &svm_train(data.samples(), &cfg)?)
        }
        TrainModel::Forest => {
            let cfg = ForestConfig {
                seed: args.seed,
                ..args.forest.config(args.trees)
            };
            Snapshot::from_forest(cfg, rf_train(data.samples(), &cfg)?)
        }
    };
    snapshot.save(&args.out)?;
    Ok(())
}

fn cmd_predict(args: &PredictArgs) -> CliResult<()> {
    let snapshot = Snapshot::load(&args.snapshot)?;
    let data = args.data.load()?;
    let model: Box<dyn onlinedx::eval::Classifier> = match &snapshot {
        Snapshot::Online(_) => Box::new(snapshot.to_learner()?),
        Snapshot::Svm(s) => Box::new(onlinedx::data::FirstOrderModel {
            w: nalgebra::DVector::from_column_slice(&s.weights),
        }),
        Snapshot::Forest(s) => Box::new(s.forest.clone()),
    };
    let mut report = Report::new(["row", "label", "predicted"]);
    report
        .meta("command", "predict")
        .meta("snapshot", args.snapshot.display())
        .meta("kind", snapshot.kind());
    args.data.describe(&mut report);
    let cm = confusion(model.as_ref(), data.samples())?;
    let metrics = compute_metrics(&cm)?;
    report
        .meta("accuracy", format!("{:.4}", metrics.accuracy))
        .meta("mcc", format!("{:.4}", metrics.mcc));
    for (i, s) in data.samples().iter().enumerate() {
        report.push_row(vec![
            (i + 1).to_string(),
            s.y.to_string(),
            model.classify(&s.x)?.to_string(),
        ])?;
    }
    emit_report(&report, &args.output)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::EvalOnline(a) => cmd_eval_online(a),
        Command::Incremental(a) => cmd_incremental(a),
        Command::EvalOffline(a) => cmd_eval_offline(a),
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
