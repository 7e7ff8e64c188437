//! Command-line front end: converts image trees to event recordings, inspects
//! them (statistics, spectra, rate profiles, rendered frames), and runs the
//! classifiers, all seeded for reproducible artifacts.
//!
//! Exit codes: 0 success, 2 usage or path problems, 3 empty dataset,
//! 1 anything else.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use saccade::analysis::{
    self, aggregate_features, compute_features, rate_profile, render_frames, save_frames_ppm,
    temporal_spectrum, Feature,
};
use saccade::classify::hfirst::{HfirstConfig, HfirstNetwork};
use saccade::classify::knn::{KnnModel, DEFAULT_K};
use saccade::classify::skim::{SkimConfig, SkimNetwork, DEFAULT_HIDDEN, DEFAULT_RIDGE};
use saccade::classify::EvalReport;
use saccade::event::EventStream;
use saccade::pipeline::{
    self, convert_directory, list_recordings, load_recordings, split_fixed, ConversionProfile,
    LabeledRecording,
};
use saccade::synth::write_digit_set;

#[derive(Parser)]
#[command(name = "saccade", version, about = "Saccadic image-to-event conversion toolkit")]
struct Cli {
    /// Worker threads for parallel stages (default: all logical cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// key=value defaults file; explicit flags win
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a labeled tree of synthetic digit images as PGM files
    Synth(SynthArgs),
    /// Convert an image tree into event recordings plus report.csv
    Convert(ConvertArgs),
    /// Per-recording feature statistics as CSV
    Stats(StatsArgs),
    /// Magnitude spectrum of pooled event timestamps as CSV
    Fft(FftArgs),
    /// Mean/std event-rate profile across recordings as CSV
    Rates(RatesArgs),
    /// Paint one recording into a sequence of PPM frames
    Render(RenderArgs),
    /// Train and evaluate a classifier on a labeled recording tree
    Classify(ClassifyArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Directory to create (one subdirectory per digit class)
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 10)]
    per_class: usize,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ConvertArgs {
    /// Root of the class-per-directory image tree
    #[arg(long)]
    input: PathBuf,
    /// Mirrored output tree (created if missing)
    #[arg(long)]
    output: PathBuf,
    /// Conversion profile: nmnist or ncaltech101
    #[arg(long)]
    profile: String,
    #[arg(long)]
    seed: Option<u64>,
    /// Contrast threshold in log-luminance units
    #[arg(long)]
    threshold: Option<f32>,
    /// Integration step in microseconds
    #[arg(long)]
    step_us: Option<u32>,
    /// Spontaneous events per pixel per second
    #[arg(long)]
    background_rate: Option<f64>,
    /// Relative per-pixel spread of the contrast threshold
    #[arg(long)]
    threshold_sigma: Option<f64>,
    /// Timestamp jitter standard deviation in microseconds
    #[arg(long)]
    latency_jitter_us: Option<f64>,
    /// Re-convert recordings that already exist in the output tree
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct StatsArgs {
    /// Root of a converted recording tree
    #[arg(long)]
    input: PathBuf,
    /// CSV destination (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FftArgs {
    #[arg(long)]
    input: PathBuf,
    /// FFT length as a power of two, 4..=27
    #[arg(long, default_value_t = 22)]
    length_exp: u32,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RatesArgs {
    #[arg(long)]
    input: PathBuf,
    /// Histogram bin width in microseconds
    #[arg(long, default_value_t = 1_000)]
    bin_us: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RenderArgs {
    /// One .bin recording (frame geometry from the meta.txt beside it)
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 10)]
    window_ms: u32,
    /// Directory for the numbered frames
    #[arg(long)]
    out: PathBuf,
    /// Frame filename prefix (default: recording stem)
    #[arg(long)]
    prefix: Option<String>,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Root of a labeled recording tree
    #[arg(long)]
    input: PathBuf,
    /// knn, hfirst, or skim
    #[arg(long)]
    algo: String,
    /// Feature for knn, repeatable (total, on, off, on_off_ratio, mean_x,
    /// mean_y, std_x, std_y, max_x, max_y)
    #[arg(long)]
    feature: Vec<String>,
    /// Neighbors for knn
    #[arg(long)]
    k: Option<usize>,
    /// Hidden layer width for skim
    #[arg(long)]
    hidden: Option<usize>,
    /// Ridge regularization for skim
    #[arg(long)]
    ridge: Option<f64>,
    /// Keep ON and OFF in separate skim input channels
    #[arg(long)]
    split_polarity: bool,
    /// Pool square pixel blocks of this side into one skim channel
    #[arg(long)]
    downsample: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Training recordings drawn per class (default: half the smallest class)
    #[arg(long)]
    train_per_class: Option<usize>,
    /// Test recordings drawn per class (default: the rest of the smallest class)
    #[arg(long)]
    test_per_class: Option<usize>,
    /// Per-class accuracy CSV destination (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dump trained weights: S2 kernels as CSV (hfirst) or the output
    /// matrix as a binary file (skim)
    #[arg(long)]
    weights_out: Option<PathBuf>,
}

/// Anything a subcommand can fail with, mapped onto the documented exit codes.
#[derive(Debug)]
enum CliError {
    Usage(String),
    Empty(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Empty(_) => 3,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Empty(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError::Runtime(e.to_string())
    }
}

impl From<pipeline::PipelineError> for CliError {
    fn from(e: pipeline::PipelineError) -> CliError {
        CliError::Runtime(e.to_string())
    }
}

impl From<analysis::AnalysisError> for CliError {
    fn from(e: analysis::AnalysisError) -> CliError {
        use analysis::AnalysisError::*;
        match e {
            NoRecordings | NoEvents => CliError::Empty(e.to_string()),
            ZeroBin | LengthOutOfRange { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = ConfigFile::load(cli.config.as_deref())?;
    if let Some(jobs) = cli.jobs.or(file.get("jobs")?) {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Synth(args) => cmd_synth(args, &file),
        Command::Convert(args) => cmd_convert(args, &file),
        Command::Stats(args) => cmd_stats(args),
        Command::Fft(args) => cmd_fft(args, &file),
        Command::Rates(args) => cmd_rates(args),
        Command::Render(args) => cmd_render(args),
        Command::Classify(args) => cmd_classify(args, &file),
    }
}

/// Optional defaults file: one `key = value` per line, `#` comments. Only
/// keys that correspond to flags are accepted, and flags always win.
struct ConfigFile {
    values: BTreeMap<String, String>,
}

const CONFIG_KEYS: &[&str] = &[
    "jobs",
    "seed",
    "threshold",
    "step_us",
    "background_rate",
    "threshold_sigma",
    "latency_jitter_us",
    "k",
    "hidden",
    "ridge",
    "length_exp",
];

impl ConfigFile {
    fn load(path: Option<&Path>) -> Result<ConfigFile, CliError> {
        let mut values = BTreeMap::new();
        let Some(path) = path else {
            return Ok(ConfigFile { values });
        };
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Usage(format!(
                    "config {} line {}: expected key = value",
                    path.display(),
                    i + 1
                )));
            };
            let key = key.trim().to_string();
            if !CONFIG_KEYS.contains(&key.as_str()) {
                return Err(CliError::Usage(format!(
                    "config {} line {}: unknown key {key}",
                    path.display(),
                    i + 1
                )));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(ConfigFile { values })
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|_| {
                CliError::Usage(format!("config key {key}: cannot parse {raw:?}"))
            }),
        }
    }
}

fn require_dir(path: &Path, what: &str) -> Result<(), CliError> {
    if !path.is_dir() {
        return Err(CliError::Usage(format!(
            "{what} {} is not a directory",
            path.display()
        )));
    }
    Ok(())
}

fn positive<T: PartialOrd + Default + std::fmt::Display>(
    value: T,
    what: &str,
) -> Result<T, CliError> {
    if value <= T::default() {
        return Err(CliError::Usage(format!("{what} must be positive, got {value}")));
    }
    Ok(value)
}

fn nonnegative<T: PartialOrd + Default + std::fmt::Display>(
    value: T,
    what: &str,
) -> Result<T, CliError> {
    if value < T::default() {
        return Err(CliError::Usage(format!(
            "{what} must not be negative, got {value}"
        )));
    }
    Ok(value)
}

fn write_or_print(out: Option<&Path>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

fn cmd_synth(args: SynthArgs, file: &ConfigFile) -> Result<(), CliError> {
    let seed = args.seed.or(file.get("seed")?).unwrap_or(0);
    let per_class = positive(args.per_class, "--per-class")?;
    let paths = write_digit_set(&args.output, per_class, seed)?;
    println!(
        "wrote {} images under {}",
        paths.len(),
        args.output.display()
    );
    Ok(())
}

fn cmd_convert(args: ConvertArgs, file: &ConfigFile) -> Result<(), CliError> {
    require_dir(&args.input, "--input")?;
    let mut profile = ConversionProfile::by_name(&args.profile)
        .ok_or_else(|| CliError::Usage(format!("unknown profile {:?}", args.profile)))?;
    if let Some(threshold) = args.threshold.or(file.get("threshold")?) {
        profile.params.threshold = positive(threshold, "--threshold")?;
    }
    if let Some(step) = args.step_us.or(file.get("step_us")?) {
        profile.params.step_us = positive(step as i64, "--step-us")? as u32;
    }
    if let Some(rate) = args.background_rate.or(file.get("background_rate")?) {
        profile.params.noise.background_rate_hz = nonnegative(rate, "--background-rate")?;
    }
    if let Some(sigma) = args.threshold_sigma.or(file.get("threshold_sigma")?) {
        profile.params.noise.threshold_sigma = nonnegative(sigma, "--threshold-sigma")?;
    }
    if let Some(jitter) = args.latency_jitter_us.or(file.get("latency_jitter_us")?) {
        profile.params.noise.latency_jitter_us = nonnegative(jitter, "--latency-jitter-us")?;
    }
    if let Some(seed) = args.seed.or(file.get("seed")?) {
        profile.params.seed = seed;
    }

    let report = convert_directory(&args.input, &args.output, &profile, args.force)?;
    println!(
        "{} converted, {} skipped, {} failed; {:.1} ms/image; report at {}",
        report.converted(),
        report.skipped(),
        report.failed(),
        report.ms_per_image(),
        args.output.join("report.csv").display()
    );
    Ok(())
}

fn labeled_tree(root: &Path) -> Result<Vec<LabeledRecording>, CliError> {
    require_dir(root, "--input")?;
    let recordings = list_recordings(root)?;
    if recordings.is_empty() {
        return Err(CliError::Empty(format!(
            "no .bin recordings under {}",
            root.display()
        )));
    }
    Ok(recordings)
}

fn load_streams(root: &Path) -> Result<Vec<(String, EventStream)>, CliError> {
    Ok(load_recordings(&labeled_tree(root)?)?)
}

fn cmd_stats(args: StatsArgs) -> Result<(), CliError> {
    let listed = labeled_tree(&args.input)?;
    let loaded = load_recordings(&listed)?;
    let mut csv = String::from("path,label");
    for feature in Feature::ALL {
        let _ = write!(csv, ",{}", feature.label());
    }
    csv.push('\n');
    let mut vectors = Vec::with_capacity(loaded.len());
    for (listing, (label, stream)) in listed.iter().zip(&loaded) {
        let rel = listing.path.strip_prefix(&args.input).unwrap_or(&listing.path);
        let features = compute_features(stream);
        let _ = write!(csv, "{},{label}", rel.display().to_string().replace(',', ";"));
        for feature in Feature::ALL {
            match features.get(feature) {
                Some(v) => {
                    let _ = write!(csv, ",{v}");
                }
                None => csv.push(','),
            }
        }
        csv.push('\n');
        vectors.push(features);
    }
    write_or_print(args.out.as_deref(), &csv)?;

    let summary = aggregate_features(&vectors);
    let on = summary.mean[Feature::OnCount as usize];
    let off = summary.mean[Feature::OffCount as usize];
    let extents: Vec<_> = loaded
        .iter()
        .filter_map(|(_, s)| analysis::address_extent(s))
        .collect();
    let extent_note = match (
        extents.iter().map(|e| e.0).min().zip(extents.iter().map(|e| e.0).max()),
        extents.iter().map(|e| e.1).min().zip(extents.iter().map(|e| e.1).max()),
    ) {
        (Some((x0, x1)), Some((y0, y1))) if (x0, y0) == (x1, y1) => format!("{x0}x{y0}"),
        (Some((x0, x1)), Some((y0, y1))) => format!("{x0}-{x1} x {y0}-{y1}"),
        _ => "n/a".into(),
    };
    let durations: Vec<u32> = loaded.iter().map(|(_, s)| s.duration_us).collect();
    let duration_note = if durations.windows(2).all(|w| w[0] == w[1]) {
        format!("{} us", durations[0])
    } else {
        "mixed".into()
    };
    eprintln!(
        "{} recordings: mean ON {on:.0}, mean OFF {off:.0}, extent {extent_note}, duration {duration_note}",
        loaded.len()
    );
    Ok(())
}

fn cmd_fft(args: FftArgs, file: &ConfigFile) -> Result<(), CliError> {
    let length_exp = file.get("length_exp")?.map_or(args.length_exp, |v| v);
    let seed = args.seed.or(file.get("seed")?).unwrap_or(0);
    let loaded = load_streams(&args.input)?;
    let streams: Vec<EventStream> = loaded.into_iter().map(|(_, s)| s).collect();
    let spectrum = temporal_spectrum(&streams, length_exp, seed)?;
    let mut csv = String::from("freq_hz,magnitude\n");
    for (bin, magnitude) in spectrum.magnitude.iter().enumerate() {
        let _ = writeln!(csv, "{},{magnitude}", spectrum.frequency(bin));
    }
    write_or_print(args.out.as_deref(), &csv)?;
    let peaks: Vec<String> = (1..spectrum.magnitude.len().min(100_000))
        .filter(|&b| spectrum.is_peak(b))
        .take(8)
        .map(|b| format!("{:.2} Hz", spectrum.frequency(b)))
        .collect();
    eprintln!(
        "{} bins at {:.4} Hz spacing; low-frequency peaks: {}",
        spectrum.magnitude.len(),
        spectrum.freq_step_hz,
        if peaks.is_empty() { "none".into() } else { peaks.join(", ") }
    );
    Ok(())
}

fn cmd_rates(args: RatesArgs) -> Result<(), CliError> {
    let loaded = load_streams(&args.input)?;
    let streams: Vec<EventStream> = loaded.into_iter().map(|(_, s)| s).collect();
    let profile = rate_profile(&streams, args.bin_us)?;
    let mut csv = String::from("bin_start_us,mean,std\n");
    for (i, (mean, std)) in profile.mean.iter().zip(&profile.std).enumerate() {
        let _ = writeln!(csv, "{},{mean},{std}", i as u64 * args.bin_us as u64);
    }
    write_or_print(args.out.as_deref(), &csv)?;
    Ok(())
}

fn cmd_render(args: RenderArgs) -> Result<(), CliError> {
    if !args.input.is_file() {
        return Err(CliError::Usage(format!(
            "--input {} is not a file",
            args.input.display()
        )));
    }
    let window_ms = positive(args.window_ms as i64, "--window-ms")? as u32;
    let stream = pipeline::load_recording(&args.input)?;
    let frames = render_frames(&stream, window_ms * 1_000);
    let prefix = args.prefix.unwrap_or_else(|| {
        args.input
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("frame")
            .to_string()
    });
    fs::create_dir_all(&args.out)?;
    let paths = save_frames_ppm(&frames, &args.out, &prefix)?;
    println!("wrote {} frames under {}", paths.len(), args.out.display());
    Ok(())
}

fn report_csv(report: &EvalReport, extra: &[(&str, f64)]) -> String {
    let mut csv = String::from("class,accuracy\n");
    for class in &report.classes {
        if let Some(acc) = report.class_accuracy(class) {
            let _ = writeln!(csv, "{class},{acc:.4}");
        }
    }
    for (name, value) in extra {
        let _ = writeln!(csv, "{name},{value:.4}");
    }
    csv
}

/// Classifier choice with its knobs already validated, so usage errors are
/// caught before any data is touched.
enum Plan {
    Knn { features: Vec<Feature>, k: usize },
    Hfirst,
    Skim(SkimConfig),
}

fn build_plan(args: &ClassifyArgs, file: &ConfigFile, seed: u64) -> Result<Plan, CliError> {
    match args.algo.as_str() {
        "knn" => {
            let features = if args.feature.is_empty() {
                vec![Feature::StdY]
            } else {
                args.feature
                    .iter()
                    .map(|name| {
                        name.parse()
                            .map_err(|_| CliError::Usage(format!("unknown feature {name:?}")))
                    })
                    .collect::<Result<Vec<Feature>, CliError>>()?
            };
            let k =
                positive(args.k.or(file.get("k")?).unwrap_or(DEFAULT_K) as i64, "--k")? as usize;
            Ok(Plan::Knn { features, k })
        }
        "hfirst" => Ok(Plan::Hfirst),
        "skim" => {
            let hidden = args.hidden.or(file.get("hidden")?).unwrap_or(DEFAULT_HIDDEN);
            let ridge = args.ridge.or(file.get("ridge")?).unwrap_or(DEFAULT_RIDGE);
            Ok(Plan::Skim(SkimConfig {
                hidden: positive(hidden as i64, "--hidden")? as usize,
                merge_polarity: !args.split_polarity,
                downsample: positive(args.downsample.unwrap_or(1) as i64, "--downsample")?
                    as usize,
                ridge: nonnegative(ridge, "--ridge")?,
                seed,
            }))
        }
        other => Err(CliError::Usage(format!("unknown algo {other:?}"))),
    }
}

fn cmd_classify(args: ClassifyArgs, file: &ConfigFile) -> Result<(), CliError> {
    let seed = args.seed.or(file.get("seed")?).unwrap_or(0);
    let plan = build_plan(&args, file, seed)?;
    let recordings = labeled_tree(&args.input)?;

    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &recordings {
        *counts.entry(r.label.as_str()).or_default() += 1;
    }
    let smallest = counts.values().copied().min().unwrap_or(0);
    let train_per_class = args.train_per_class.unwrap_or(smallest.div_ceil(2));
    let test_per_class = args
        .test_per_class
        .unwrap_or_else(|| smallest.saturating_sub(train_per_class).max(1));
    let split = split_fixed(&recordings, train_per_class, test_per_class, seed);
    for warning in &split.warnings {
        eprintln!("warning: {warning}");
    }
    if split.test.is_empty() {
        return Err(CliError::Empty("test split came out empty".into()));
    }

    let started = Instant::now();
    let (csv, balanced) = match plan {
        Plan::Knn { features, k } => classify_knn(&features, k, &split)?,
        Plan::Hfirst => classify_hfirst(&args, &split)?,
        Plan::Skim(config) => classify_skim(&args, config, &split)?,
    };
    write_or_print(args.out.as_deref(), &csv)?;
    eprintln!(
        "{}: balanced accuracy {balanced:.4} on {} train / {} test ({:.1} s)",
        args.algo,
        split.train.len(),
        split.test.len(),
        started.elapsed().as_secs_f64()
    );
    Ok(())
}

fn classify_knn(
    features: &[Feature],
    k: usize,
    split: &pipeline::Split,
) -> Result<(String, f64), CliError> {
    let featurize = |set: &[LabeledRecording]| -> Result<Vec<_>, CliError> {
        let loaded = load_recordings(set)?;
        Ok(loaded
            .into_iter()
            .map(|(label, stream)| (label, compute_features(&stream)))
            .collect())
    };
    let train = featurize(&split.train)?;
    let test = featurize(&split.test)?;
    let model = KnnModel::fit(k, features, &train)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let report = model.evaluate(&test);
    let balanced = report.balanced_accuracy();
    Ok((report_csv(&report, &[("balanced", balanced)]), balanced))
}

fn classify_hfirst(
    args: &ClassifyArgs,
    split: &pipeline::Split,
) -> Result<(String, f64), CliError> {
    let train = load_recordings(&split.train)?;
    let test = load_recordings(&split.test)?;
    let network = HfirstNetwork::train(&HfirstConfig::default(), &train)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    if let Some(path) = &args.weights_out {
        let mut csv = String::from("class,index,weight\n");
        for (class, weights) in network.s2_kernels() {
            for (index, weight) in weights.iter().enumerate() {
                let _ = writeln!(csv, "{class},{index},{weight}");
            }
        }
        fs::write(path, csv)?;
    }
    let (hard, soft) = network
        .evaluate(&test)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let balanced = hard.balanced_accuracy();
    let csv = report_csv(
        &hard,
        &[("balanced", balanced), ("balanced_soft", soft.balanced_accuracy())],
    );
    Ok((csv, balanced))
}

fn classify_skim(
    args: &ClassifyArgs,
    config: SkimConfig,
    split: &pipeline::Split,
) -> Result<(String, f64), CliError> {
    let train = load_recordings(&split.train)?;
    let test = load_recordings(&split.test)?;
    let trained = SkimNetwork::train(&config, &train)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    for warning in &trained.warnings {
        eprintln!("warning: {warning}");
    }
    if let Some(path) = &args.weights_out {
        trained
            .network
            .save_output_weights(path)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    let report = trained
        .network
        .evaluate(&test)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let balanced = report.balanced_accuracy();
    Ok((report_csv(&report, &[("balanced", balanced)]), balanced))
}
