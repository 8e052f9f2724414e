use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mts_anomaly::detector::{
    aggregate_max, default_stride, detect, tune_parameters, AnomalyScores, DetectorConfig, Mode,
    WeightStrategy,
};
use mts_anomaly::evaluation::{
    best_threshold, binarize, detect_standard_fcm, knn_discord_scores, metrics,
};
use mts_anomaly::io::{
    file_digest, parse_csv, read_labels, read_point_scores, write_grid, write_indexed_scores,
    write_labels, write_point_scores, write_series, write_subsequence_scores, RunManifest,
};
use mts_anomaly::series::{slide_windows, zscore_normalize};
use mts_anomaly::synthetic::{
    gen_pseudo_ecg, gen_relational, inject_amplitude, inject_shape, random_intervals, FactorRange,
};
use mts_anomaly::{Error, FcmParams, PsoConfig, Result, WindowSpec};

#[derive(Parser)]
#[command(
    name = "mts-anomaly",
    version,
    about = "Anomaly detection in multivariate time series"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score a CSV series and write per-point and per-window scores.
    Detect(DetectArgs),
    /// Grid-search cluster count and window length against labels.
    Tune(TuneArgs),
    /// Threshold point scores and report accuracy metrics.
    Eval(EvalArgs),
    /// Run a baseline detector (1-NN discord or unweighted FCM).
    Baseline(BaselineArgs),
    /// Generate a synthetic series with ground-truth labels.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Amplitude,
    Shape,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Amplitude => Mode::Amplitude,
            ModeArg::Shape => Mode::Shape,
        }
    }
}

#[derive(Args, Clone)]
struct PipelineArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "amplitude")]
    mode: ModeArg,
    #[arg(long, default_value_t = 2.0)]
    fuzzifier: f64,
    #[arg(long, default_value_t = 30)]
    pso_particles: usize,
    #[arg(long, default_value_t = 50)]
    pso_iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "mts")]
    out_prefix: String,
}

impl PipelineArgs {
    fn config(&self, clusters: usize, window: WindowSpec) -> DetectorConfig {
        let pso = PsoConfig {
            particles: self.pso_particles,
            max_iter: self.pso_iters,
            ..PsoConfig::default()
        };
        DetectorConfig {
            fuzzifier: self.fuzzifier,
            weights: WeightStrategy::Optimize(pso),
            fcm: FcmParams::default(),
            ..DetectorConfig::new(self.mode.into(), clusters, window)
        }
        .with_seed(self.seed)
    }

    fn output(&self, suffix: &str) -> PathBuf {
        PathBuf::from(format!("{}.{suffix}", self.out_prefix))
    }
}

#[derive(Args)]
struct DetectArgs {
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long, default_value_t = 2)]
    clusters: usize,
    #[arg(long, default_value_t = 5)]
    window: usize,
    /// Defaults to a tenth of the window length.
    #[arg(long)]
    stride: Option<usize>,
}

#[derive(Args)]
struct TuneArgs {
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Labels CSV (`t,label`) marking the known anomalous timestamps.
    #[arg(long)]
    labels: PathBuf,
    #[arg(long, default_value = "2:6", value_parser = parse_range)]
    clusters_range: (usize, usize),
    #[arg(long, default_value = "5:50", value_parser = parse_range)]
    window_range: (usize, usize),
    #[arg(long, default_value_t = 1)]
    stride: usize,
}

#[derive(Args)]
struct EvalArgs {
    /// Point scores CSV (`t,point_score`).
    #[arg(long)]
    scores: PathBuf,
    /// Labels CSV (`t,label`).
    #[arg(long)]
    truth: PathBuf,
    /// Flag points whose score is strictly above this value.
    #[arg(
        long,
        required_unless_present = "best_threshold",
        conflicts_with = "best_threshold",
        allow_negative_numbers = true
    )]
    threshold: Option<f64>,
    /// Pick the accuracy-maximizing threshold.
    #[arg(long)]
    best_threshold: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineMethod {
    Knn,
    Fcm,
}

#[derive(Args)]
struct BaselineArgs {
    #[arg(long, value_enum)]
    method: BaselineMethod,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long, default_value_t = 2)]
    clusters: usize,
    #[arg(long, default_value_t = 5)]
    window: usize,
    #[arg(long)]
    stride: Option<usize>,
    /// Minimum start distance of 1-NN matches; defaults to the window length.
    #[arg(long)]
    exclusion: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    Ecg,
    Relational,
}

#[derive(Clone, Copy, ValueEnum)]
enum InjectKind {
    None,
    Amplitude,
    Shape,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum, default_value = "ecg")]
    kind: SynthKind,
    #[arg(long, default_value_t = 500)]
    length: usize,
    /// Heart rates in beats per minute, one variable each.
    #[arg(long, value_delimiter = ',', default_value = "60,80,90")]
    rates: Vec<f64>,
    #[arg(long, value_enum, default_value = "amplitude")]
    inject: InjectKind,
    #[arg(long, default_value_t = 3)]
    anomalies: usize,
    #[arg(long, default_value_t = 30)]
    anomaly_length: usize,
    /// Factor range; defaults to 0:3 (amplitude) or 1:3 (shape).
    #[arg(long, value_parser = parse_float_range)]
    factors: Option<(f64, f64)>,
    /// Factors inside this band are redrawn; defaults to 0.8:1.2
    /// (amplitude) or 1:1.5 (shape).
    #[arg(long, value_parser = parse_float_range)]
    redraw_band: Option<(f64, f64)>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "synth")]
    out_prefix: String,
}

fn parse_range(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(':').ok_or("expected LOW:HIGH")?;
    let a: usize = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b: usize = b.trim().parse().map_err(|e| format!("{e}"))?;
    if a > b {
        return Err(format!("empty range {a}:{b}"));
    }
    Ok((a, b))
}

fn parse_float_range(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or("expected LOW:HIGH")?;
    let a: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
    if !(a <= b) {
        return Err(format!("empty range {a}:{b}"));
    }
    Ok((a, b))
}

fn write_detection(
    command: &str,
    pipeline: &PipelineArgs,
    config: &DetectorConfig,
    scores: &AnomalyScores,
    started: Instant,
) -> Result<()> {
    let points = pipeline.output("points.csv");
    let subs = pipeline.output("subsequences.csv");
    write_point_scores(scores, &points)?;
    write_subsequence_scores(scores, &subs)?;
    let manifest = RunManifest {
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.to_string(),
        input: pipeline.input.clone(),
        input_sha256: file_digest(&pipeline.input)?,
        config: config.clone(),
        weights_used: Some(scores.weights_used.clone()),
        outputs: vec![points.clone(), subs.clone()],
        duration_seconds: started.elapsed().as_secs_f64(),
    };
    let manifest_path = pipeline.output("manifest.json");
    manifest.write(&manifest_path)?;
    println!("weights {:?}", scores.weights_used.as_slice());
    for p in [&points, &subs, &manifest_path] {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn run_detect(args: &DetectArgs) -> Result<()> {
    let started = Instant::now();
    let series = parse_csv(&args.pipeline.input)?;
    let stride = args.stride.unwrap_or_else(|| default_stride(args.window));
    let config = args
        .pipeline
        .config(args.clusters, WindowSpec::new(args.window, stride));
    let scores = detect(&series, &config)?;
    write_detection("detect", &args.pipeline, &config, &scores, started)
}

fn run_tune(args: &TuneArgs) -> Result<()> {
    let series = parse_csv(&args.pipeline.input)?;
    let labels = read_labels(&args.labels)?;
    let clusters: Vec<usize> = (args.clusters_range.0..=args.clusters_range.1).collect();
    let windows: Vec<usize> = (args.window_range.0..=args.window_range.1).collect();
    let base = args
        .pipeline
        .config(clusters[0], WindowSpec::new(windows[0], args.stride));
    let result = tune_parameters(&series, &base, &clusters, &windows, &labels)?;
    let grid_path = args.pipeline.output("fgrid.csv");
    write_grid(&result.grid, &grid_path)?;
    println!(
        "best clusters {} window {} confidence_index {}",
        result.best_clusters,
        result.best_window,
        result.best().confidence_index
    );
    println!("wrote {}", grid_path.display());
    Ok(())
}

fn run_eval(args: &EvalArgs) -> Result<()> {
    let scores = read_point_scores(&args.scores)?;
    let truth = read_labels(&args.truth)?;
    let report = match args.threshold {
        Some(t) if !args.best_threshold => {
            let mut r = metrics(&binarize(&scores, t), &truth)?;
            r.threshold = Some(t);
            r
        }
        _ => best_threshold(&scores, &truth)?.1,
    };
    println!("{report}");
    Ok(())
}

fn run_baseline(args: &BaselineArgs) -> Result<()> {
    let started = Instant::now();
    let series = parse_csv(&args.pipeline.input)?;
    let stride = args.stride.unwrap_or_else(|| default_stride(args.window));
    let window = WindowSpec::new(args.window, stride);
    match args.method {
        BaselineMethod::Fcm => {
            let config = args
                .pipeline
                .config(args.clusters, window)
                .with_weights(WeightStrategy::Uniform);
            let scores = detect_standard_fcm(&series, &config)?;
            write_detection("baseline-fcm", &args.pipeline, &config, &scores, started)
        }
        BaselineMethod::Knn => {
            let set = slide_windows(&zscore_normalize(&series), window)?;
            let exclusion = args.exclusion.unwrap_or(args.window);
            let scores = knn_discord_scores(&set, exclusion)?;
            let per_point = aggregate_max(series.len(), set.starts(), args.window, &scores);
            let points = args.pipeline.output("points.csv");
            let subs = args.pipeline.output("subsequences.csv");
            write_indexed_scores(set.starts(), &scores, &subs)?;
            let idx: Vec<usize> = (0..per_point.len()).collect();
            write_point_table(&idx, &per_point, &points)?;
            for p in [&points, &subs] {
                println!("wrote {}", p.display());
            }
            Ok(())
        }
    }
}

fn write_point_table(t: &[usize], values: &[f64], path: &Path) -> Result<()> {
    use mts_anomaly::io::format_f64;
    let mut out = String::from("t,point_score\n");
    for (t, v) in t.iter().zip(values) {
        out.push_str(&format!("{t},{}\n", format_f64(*v)));
    }
    std::fs::write(path, out).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn run_synth(args: &SynthArgs) -> Result<()> {
    let (series, log) = match args.kind {
        SynthKind::Relational => gen_relational(args.seed),
        SynthKind::Ecg => {
            let base = gen_pseudo_ecg(args.length, &args.rates, args.seed)?;
            let intervals = || {
                random_intervals(
                    base.len(),
                    base.num_vars(),
                    args.anomalies,
                    args.anomaly_length,
                    args.seed.wrapping_add(1),
                )
            };
            let factors = |default: FactorRange, band: (f64, f64)| {
                let mut f = args
                    .factors
                    .map_or(default, |(lo, hi)| FactorRange::new(lo, hi));
                let (lo, hi) = args.redraw_band.unwrap_or(band);
                f = f.redraw_inside(lo, hi);
                f
            };
            match args.inject {
                InjectKind::None => (base, Default::default()),
                InjectKind::Amplitude => inject_amplitude(
                    &base,
                    &intervals()?,
                    factors(FactorRange::amplitude(), (0.8, 1.2)),
                    args.seed.wrapping_add(2),
                )?,
                InjectKind::Shape => inject_shape(
                    &base,
                    &intervals()?,
                    factors(FactorRange::shape(), (1.0, 1.5)),
                    args.seed.wrapping_add(2),
                )?,
            }
        }
    };
    let data = PathBuf::from(format!("{}.csv", args.out_prefix));
    let labels = PathBuf::from(format!("{}.labels.csv", args.out_prefix));
    write_series(&series, &data)?;
    write_labels(&log.labels(series.len()), &labels)?;
    for r in &log.records {
        println!(
            "injected {:?} at {}..{} variable {} factor {}",
            r.kind,
            r.start,
            r.end,
            r.variable,
            r.factor.map_or("-".to_string(), |f| f.to_string())
        );
    }
    println!("wrote {}", data.display());
    println!("wrote {}", labels.display());
    Ok(())
}

fn exit_code(err: &Error) -> u8 {
    match err.root() {
        Error::InvalidSpec(_)
        | Error::InvalidConfig(_)
        | Error::Io { .. }
        | Error::Parse { .. } => 2,
        _ => 1,
    }
}

fn configure_threads() {
    let Ok(raw) = std::env::var("MTS_THREADS") else {
        return;
    };
    match raw.trim().parse::<usize>() {
        Ok(0) => {}
        Ok(n) => {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
        Err(_) => eprintln!("warning: ignoring MTS_THREADS={raw:?}"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    let result = match &cli.command {
        Command::Detect(a) => run_detect(a),
        Command::Tune(a) => run_tune(a),
        Command::Eval(a) => run_eval(a),
        Command::Baseline(a) => run_baseline(a),
        Command::Synth(a) => run_synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = e.to_string().replace('\n', " ");
            eprintln!("error: kind={} message={message}", e.kind());
            ExitCode::from(exit_code(&e))
        }
    }
}
