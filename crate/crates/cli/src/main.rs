//! `rmod`: generate, calibrate, classify, evaluate, bench and trace.
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 I/O or format
//! error, 3 calibration failure.

mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rmod_core::classifier::{calibrate, config_digest, Outcome, ThresholdProfile};
use rmod_core::eval::{
    bench_pipelines, classify_batch, evaluate_records, export_envelope_trace, export_report,
    r_values, summarize_ranges, ConfusionMatrix, EvalReport,
};
use rmod_core::siggen::{generate_dataset, generate_record, read_dataset, stable_mix, write_dataset, DatasetSpec};
use rmod_core::{Error, GenConfig, Method, ModulationClass, StftConfig};

use config::{FileConfig, GenArgs, StftArgs};

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { code: 1, message: message.into() }
    }

    pub fn io(message: impl Into<String>) -> Self {
        CliError { code: 2, message: message.into() }
    }

    fn calibration(message: impl Into<String>) -> Self {
        CliError { code: 3, message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidConfig { .. } | Error::InvalidFrequency { .. } | Error::MethodMismatch { .. } => 1,
            Error::InsufficientSamples { .. } | Error::DegenerateInterval { .. } => 3,
            _ => 2,
        };
        CliError { code, message: e.to_string() }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "rmod", version, about = "Envelope-statistic classifier for AM, DSB and SSB signals")]
struct Cli {
    /// TOML file with default settings; flags override it [default: none]
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads, 0 for one per core [default: 0]
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a labelled dataset file
    Generate(GenerateArgs),
    /// Calibrate per-class R intervals from a dataset
    Calibrate(CalibrateArgs),
    /// Classify every record of a dataset against a profile
    Classify(ClassifyArgs),
    /// Compute accuracies and write an evaluation report
    Evaluate(EvaluateArgs),
    /// Time the Hilbert and STFT pipelines on a fresh dataset
    Bench(BenchArgs),
    /// Write envelope traces for one record per class
    Trace(TraceArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Records per class [default: 100]
    #[arg(long)]
    count: Option<usize>,
    /// Master seed [default: 42]
    #[arg(long)]
    seed: Option<u64>,
    /// Output dataset path [default: dataset.ds]
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    gen: GenArgs,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    /// Training dataset [default: dataset.ds]
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Pipeline: hilbert or stft [default: hilbert]
    #[arg(long)]
    method: Option<Method>,
    /// Fractional widening of each interval, split across both ends [default: 0]
    #[arg(long)]
    margin: Option<f64>,
    /// Output profile path [default: profile.json]
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    stft: StftArgs,
}

#[derive(Debug, Args)]
struct ClassifyArgs {
    /// Dataset to classify [default: dataset.ds]
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Threshold profile [default: profile.json]
    #[arg(long)]
    profile: Option<PathBuf>,
    /// Output predictions CSV [default: predictions.csv]
    #[arg(long)]
    out: Option<PathBuf>,
    /// STFT settings default to those stored in the profile
    #[command(flatten)]
    stft: StftArgs,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Predictions CSV from `classify`; skips classification [default: none]
    #[arg(long, conflicts_with_all = ["dataset", "profile"])]
    predictions: Option<PathBuf>,
    /// Test dataset, used together with --profile [default: none]
    #[arg(long, requires = "profile")]
    dataset: Option<PathBuf>,
    /// Threshold profile, used together with --dataset [default: none]
    #[arg(long, requires = "dataset")]
    profile: Option<PathBuf>,
    /// With neither input given: training records per class [default: 100]
    #[arg(long)]
    count: Option<usize>,
    /// With neither input given: training seed [default: 1]
    #[arg(long)]
    seed: Option<u64>,
    /// With neither input given: test records per class [default: 1000]
    #[arg(long)]
    test_count: Option<usize>,
    /// With neither input given: test seed [default: 2]
    #[arg(long)]
    test_seed: Option<u64>,
    /// Pipeline when calibrating here: hilbert or stft [default: hilbert]
    #[arg(long)]
    method: Option<Method>,
    /// Interval widening when calibrating here [default: 0]
    #[arg(long)]
    margin: Option<f64>,
    /// Output report path [default: report.json]
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    gen: GenArgs,
    #[command(flatten)]
    stft: StftArgs,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Records per class [default: 10000]
    #[arg(long)]
    count: Option<usize>,
    /// Master seed [default: 3]
    #[arg(long)]
    seed: Option<u64>,
    /// Time one pipeline only: hilbert or stft [default: both]
    #[arg(long)]
    method: Option<Method>,
    /// Output bench report [default: bench.json]
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    gen: GenArgs,
    #[command(flatten)]
    stft: StftArgs,
}

#[derive(Debug, Args)]
struct TraceArgs {
    /// Class to trace: AM, DSB or SSB; repeatable [default: all three]
    #[arg(long = "class")]
    classes: Vec<ModulationClass>,
    /// Pipeline: hilbert or stft [default: hilbert]
    #[arg(long)]
    method: Option<Method>,
    /// Master seed for the traced record [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, one file per class [default: traces]
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    gen: GenArgs,
    #[command(flatten)]
    stft: StftArgs,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: Cli) -> CliResult {
    let file = FileConfig::load(cli.config.as_deref())?;
    let threads = cli.threads.or(file.threads).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::usage(format!("threads: {e}")))?;
    pool.install(|| match cli.command {
        Command::Generate(a) => cmd_generate(&file, a),
        Command::Calibrate(a) => cmd_calibrate(&file, a),
        Command::Classify(a) => cmd_classify(&file, a),
        Command::Evaluate(a) => cmd_evaluate(&file, a),
        Command::Bench(a) => cmd_bench(&file, a),
        Command::Trace(a) => cmd_trace(&file, a),
    })
}

fn write_text(path: &Path, text: &str) -> CliResult {
    fs::write(path, text).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

fn cmd_generate(file: &FileConfig, a: GenerateArgs) -> CliResult {
    let count = config::count(a.count, file.count, 100, "count")?;
    let seed = a.seed.or(file.seed).unwrap_or(42);
    let gen = config::gen_config(file, &a.gen)?;
    let out = config::path_or(&a.out, "dataset.ds");
    let records = generate_dataset(&DatasetSpec::new(count, seed, gen))?;
    write_dataset(&out, &gen, &records)?;
    println!("wrote {} records ({count} per class, seed {seed}) to {}", records.len(), out.display());
    println!("config digest (hilbert): {}", config_digest(Method::Hilbert, &gen, &StftConfig::default()));
    Ok(())
}

fn cmd_calibrate(file: &FileConfig, a: CalibrateArgs) -> CliResult {
    let path = config::path_or(&a.dataset, "dataset.ds");
    let method = config::method(a.method, file);
    let margin = config::margin(a.margin, file)?;
    let out = config::path_or(&a.out, "profile.json");
    let data = read_dataset(&path)?;
    let stft = config::stft_config(StftConfig::default(), file, &a.stft, Some(data.config.sample_count()))?;
    let rs = r_values(&data.records, method, &stft)?;
    let profile = calibrate(&rs, method, margin, &data.config, &stft)
        .map_err(|e| CliError::calibration(format!("calibration failed: {e}")))?;
    profile.write(&out)?;
    println!("{method} profile from {} records, margin {margin}:", data.records.len());
    for iv in &profile.intervals {
        println!("  {:<3} [{:.6}, {:.6}]", iv.class.as_str(), iv.lo, iv.hi);
    }
    println!("wrote {}", out.display());
    Ok(())
}

/// Profile STFT settings, overridden by the config file or flags.
fn classify_stft(file: &FileConfig, args: &StftArgs, profile: &ThresholdProfile, n: usize) -> CliResult<StftConfig> {
    if args.any() || config::file_has_stft(file) {
        config::stft_config(profile.stft, file, args, Some(n))
    } else {
        profile.stft.validate(Some(n))?;
        Ok(profile.stft)
    }
}

fn warn_binding(profile: &ThresholdProfile, gen: &GenConfig, stft: &StftConfig) {
    if let Some(w) = profile.binding_warning(gen, stft) {
        eprintln!("warning: {w}");
    }
}

fn cmd_classify(file: &FileConfig, a: ClassifyArgs) -> CliResult {
    let data = read_dataset(&config::path_or(&a.dataset, "dataset.ds"))?;
    let profile = ThresholdProfile::read(&config::path_or(&a.profile, "profile.json"))?;
    let out = config::path_or(&a.out, "predictions.csv");
    let stft = classify_stft(file, &a.stft, &profile, data.config.sample_count())?;
    warn_binding(&profile, &data.config, &stft);
    let decisions = classify_batch(&data.records, &profile, &stft)?;
    let mut text = format!("# method={}\nindex,true_label,decision,r_value\n", profile.method);
    for (i, (rec, d)) in data.records.iter().zip(&decisions).enumerate() {
        let r = d.r.map(|r| format!("{:?}", r.value)).unwrap_or_default();
        let _ = writeln!(text, "{i},{},{},{r}", rec.label, d.outcome);
    }
    write_text(&out, &text)?;
    let cm = ConfusionMatrix::from_pairs(data.records.iter().zip(&decisions).map(|(r, d)| (r.label, d.outcome)));
    let unknown: u64 = ModulationClass::ALL.iter().map(|&c| cm.get(c, Outcome::Unknown)).sum();
    println!("classified {} records ({unknown} unknown), wrote {}", decisions.len(), out.display());
    Ok(())
}

fn read_predictions(path: &Path) -> CliResult<(Option<Method>, ConfusionMatrix)> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    let bad = |line: usize, msg: &str| CliError::io(format!("{}:{line}: {msg}", path.display()));
    let mut method = None;
    let mut cm = ConfusionMatrix::default();
    let mut header_seen = false;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(m) = comment.trim().strip_prefix("method=") {
                method = Some(m.parse().map_err(|e: String| bad(lineno, &e))?);
            }
            continue;
        }
        if !header_seen {
            if line != "index,true_label,decision,r_value" {
                return Err(bad(lineno, "expected header `index,true_label,decision,r_value`"));
            }
            header_seen = true;
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(bad(lineno, "expected 4 columns"));
        }
        let truth: ModulationClass = cols[1].parse().map_err(|e: String| bad(lineno, &e))?;
        let outcome: Outcome = cols[2].parse().map_err(|e: String| bad(lineno, &e))?;
        cm.record(truth, outcome);
    }
    if !header_seen {
        return Err(bad(1, "missing header"));
    }
    Ok((method, cm))
}

fn print_accuracies(report: &EvalReport) {
    println!("{} accuracy (reference in parentheses):", report.method);
    for c in ModulationClass::ALL {
        match report.accuracy.per_class.get(&c) {
            Some(a) => println!("  {:<3} {a:6.2}%  ({:.2}%)", c.as_str(), report.reference_accuracy[&c]),
            None => println!("  {:<3}    n/a", c.as_str()),
        }
    }
    println!("  overall {:.2}%", report.accuracy.overall);
    print!("{}", report.confusion.render());
}

fn cmd_evaluate(file: &FileConfig, a: EvaluateArgs) -> CliResult {
    let out = config::path_or(&a.out, "report.json");
    let report = if let Some(pred) = &a.predictions {
        let (stored, cm) = read_predictions(pred)?;
        let method = a.method.or(stored).or(file.method).unwrap_or(Method::Hilbert);
        EvalReport::new(method, cm)
    } else if let (Some(ds), Some(pp)) = (&a.dataset, &a.profile) {
        let data = read_dataset(ds)?;
        let profile = ThresholdProfile::read(pp)?;
        let stft = classify_stft(file, &a.stft, &profile, data.config.sample_count())?;
        warn_binding(&profile, &data.config, &stft);
        let decisions = classify_batch(&data.records, &profile, &stft)?;
        let cm = ConfusionMatrix::from_pairs(data.records.iter().zip(&decisions).map(|(r, d)| (r.label, d.outcome)));
        let labeled: Vec<_> = data
            .records
            .iter()
            .zip(&decisions)
            .filter_map(|(rec, d)| d.r.map(|r| rmod_core::classifier::LabeledR { label: rec.label, r }))
            .collect();
        EvalReport {
            ranges: summarize_ranges(&labeled, profile.method).ok(),
            profile: Some(profile.clone()),
            ..EvalReport::new(profile.method, cm)
        }
    } else {
        let gen = config::gen_config(file, &a.gen)?;
        let train = DatasetSpec::new(
            config::count(a.count, file.count, 100, "count")?,
            a.seed.or(file.seed).unwrap_or(1),
            gen,
        );
        let test = DatasetSpec::new(
            config::count(a.test_count, file.test_count, 1000, "test_count")?,
            a.test_seed.or(file.test_seed).unwrap_or(2),
            gen,
        );
        if train.master_seed == test.master_seed {
            return Err(CliError::usage("seed: training and test seeds must differ"));
        }
        let method = config::method(a.method, file);
        let margin = config::margin(a.margin, file)?;
        let stft = config::stft_config(StftConfig::default(), file, &a.stft, Some(gen.sample_count()))?;
        let train_records = generate_dataset(&train)?;
        let test_records = generate_dataset(&test)?;
        let result = evaluate_records(&train_records, &test_records, method, &stft, margin)
            .map_err(|e| match e {
                Error::InsufficientSamples { .. } | Error::DegenerateInterval { .. } => {
                    CliError::calibration(format!("calibration failed: {e}"))
                }
                e => e.into(),
            })?;
        EvalReport::from_experiment(&result)
    };
    print_accuracies(&report);
    export_report(&report, &out)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_bench(file: &FileConfig, a: BenchArgs) -> CliResult {
    let count = config::count(a.count, file.count, 10_000, "count")?;
    let seed = a.seed.or(file.seed).unwrap_or(3);
    let gen = config::gen_config(file, &a.gen)?;
    let stft = config::stft_config(StftConfig::default(), file, &a.stft, Some(gen.sample_count()))?;
    let methods: Vec<Method> = match a.method {
        Some(m) => vec![m],
        None => Method::ALL.to_vec(),
    };
    let out = config::path_or(&a.out, "bench.json");
    let records = generate_dataset(&DatasetSpec::new(count, seed, gen))?;
    let report = bench_pipelines(&records, &methods, &stft)?;
    for e in &report.entries {
        println!(
            "{:<7} {} signals  total {:.3} s  per signal {:.3} us",
            e.method.as_str(),
            e.signals,
            e.total_s,
            e.per_signal_s * 1e6
        );
    }
    if let Some(m) = &report.peak_memory {
        println!("peak resident memory {:.1} MiB ({})", m.peak_bytes as f64 / 1048576.0, m.source);
    }
    write_text(&out, &report.to_json())?;
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_trace(file: &FileConfig, a: TraceArgs) -> CliResult {
    let method = config::method(a.method, file);
    let seed = a.seed.or(file.seed).unwrap_or(0);
    let gen = config::gen_config(file, &a.gen)?;
    let stft = config::stft_config(StftConfig::default(), file, &a.stft, Some(gen.sample_count()))?;
    let dir = config::path_or(&a.out, "traces");
    fs::create_dir_all(&dir).map_err(|e| CliError::io(format!("{}: {e}", dir.display())))?;
    let classes = if a.classes.is_empty() { ModulationClass::ALL.to_vec() } else { a.classes };
    for class in classes {
        let record = generate_record(class, stable_mix(seed, class.ordinal() as u64, 0), &gen)?;
        let path = dir.join(format!("{}_{}.txt", class.as_str().to_ascii_lowercase(), method));
        export_envelope_trace(&record, method, &stft, &path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
