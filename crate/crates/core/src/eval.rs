//! Experiment harness: calibrate on one dataset, classify another, tabulate
//! the results and time the pipelines.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{calibrate, classify_record, Decision, LabeledR, Outcome, ThresholdProfile};
use crate::dsp::{analytic_signal, envelope_hilbert, stft, Method, StftConfig};
use crate::rstat::r_pipeline;
use crate::siggen::{generate_dataset, DatasetSpec, ModulationClass, SignalRecord};
use crate::{Error, Result};

pub const REPORT_FORMAT: &str = "rmod-report/1";
pub const BENCH_FORMAT: &str = "rmod-bench/1";

/// Per-class accuracies (%) reported for the reference experiment, AM, DSB, SSB.
pub const REFERENCE_ACCURACY_HILBERT: [f64; 3] = [98.60, 97.30, 97.90];
pub const REFERENCE_ACCURACY_STFT: [f64; 3] = [98.80, 99.10, 99.00];

pub fn reference_accuracy(method: Method) -> [f64; 3] {
    match method {
        Method::Hilbert => REFERENCE_ACCURACY_HILBERT,
        Method::Stft => REFERENCE_ACCURACY_STFT,
    }
}

/// Rows are true classes (AM, DSB, SSB); columns are outcomes (AM, DSB, SSB, Unknown).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 4]; 3],
}

impl ConfusionMatrix {
    pub fn record(&mut self, truth: ModulationClass, outcome: Outcome) {
        self.counts[truth.ordinal()][outcome.index()] += 1;
    }

    pub fn get(&self, truth: ModulationClass, outcome: Outcome) -> u64 {
        self.counts[truth.ordinal()][outcome.index()]
    }

    pub fn row_sum(&self, truth: ModulationClass) -> u64 {
        self.counts[truth.ordinal()].iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..3).map(|i| self.counts[i][i]).sum()
    }

    /// Diagonal count over row sum, in percent. Unknown is never correct.
    pub fn accuracy(&self, class: ModulationClass) -> Result<f64> {
        let row = self.row_sum(class);
        if row == 0 {
            return Err(Error::InsufficientSamples {
                what: format!("{class} accuracy"),
                required: 1,
                actual: 0,
            });
        }
        Ok(100.0 * self.get(class, class.into()) as f64 / row as f64)
    }

    pub fn overall(&self) -> Result<f64> {
        let total = self.total();
        if total == 0 {
            return Err(Error::InsufficientSamples {
                what: "overall accuracy".into(),
                required: 1,
                actual: 0,
            });
        }
        Ok(100.0 * self.correct() as f64 / total as f64)
    }

    pub fn from_pairs<I: IntoIterator<Item = (ModulationClass, Outcome)>>(pairs: I) -> Self {
        let mut cm = ConfusionMatrix::default();
        for (t, o) in pairs {
            cm.record(t, o);
        }
        cm
    }

    /// Fixed-width text rendering.
    pub fn render(&self) -> String {
        let mut s = format!("{:>6}", "");
        for o in Outcome::ALL {
            let _ = write!(s, "{:>9}", o.as_str());
        }
        s.push('\n');
        for c in ModulationClass::ALL {
            let _ = write!(s, "{:>6}", c.as_str());
            for o in Outcome::ALL {
                let _ = write!(s, "{:>9}", self.get(c, o));
            }
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassRange {
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub median: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeSummary {
    pub method: Method,
    pub classes: BTreeMap<ModulationClass, ClassRange>,
}

impl RangeSummary {
    pub fn get(&self, class: ModulationClass) -> &ClassRange {
        &self.classes[&class]
    }
}

/// Exact per-class order statistics and mean. Even counts take the mean of
/// the two middle values as median.
pub fn summarize_ranges(values: &[LabeledR], method: Method) -> Result<RangeSummary> {
    let mut classes = BTreeMap::new();
    for class in ModulationClass::ALL {
        let mut v: Vec<f64> = values
            .iter()
            .filter(|s| s.label == class)
            .map(|s| s.r.value)
            .collect();
        if v.len() < 2 {
            return Err(Error::InsufficientSamples {
                what: format!("{class} range summary"),
                required: 2,
                actual: v.len(),
            });
        }
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        };
        let mean = v.iter().sum::<f64>() / n as f64;
        classes.insert(
            class,
            ClassRange {
                count: n,
                min: v[0],
                max: v[n - 1],
                // Guard the documented min <= mean <= max against rounding.
                mean: mean.clamp(v[0], v[n - 1]),
                median,
            },
        );
    }
    Ok(RangeSummary { method, classes })
}

/// R for every record, in input order.
pub fn r_values(records: &[SignalRecord], method: Method, stft: &StftConfig) -> Result<Vec<LabeledR>> {
    records
        .par_iter()
        .map(|rec| {
            Ok(LabeledR {
                label: rec.label,
                r: r_pipeline(&rec.samples, method, stft)?,
            })
        })
        .collect()
}

pub fn classify_batch(
    records: &[SignalRecord],
    profile: &ThresholdProfile,
    stft: &StftConfig,
) -> Result<Vec<Decision>> {
    records
        .par_iter()
        .map(|rec| classify_record(&rec.samples, profile, stft))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchEntry {
    pub method: Method,
    pub signals: usize,
    pub total_s: f64,
    pub per_signal_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryReading {
    pub peak_bytes: u64,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub format: String,
    pub entries: Vec<BenchEntry>,
    pub threads: usize,
    pub peak_memory: Option<MemoryReading>,
}

impl BenchReport {
    pub fn entry(&self, method: Method) -> Option<&BenchEntry> {
        self.entries.iter().find(|e| e.method == method)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bench report serializes") + "\n"
    }
}

/// Process peak resident set size from `VmHWM` in `/proc/self/status`. This
/// is a high-water mark for the whole process, not a per-pipeline figure.
/// `None` where procfs is unavailable.
pub fn peak_memory() -> Option<MemoryReading> {
    let status = fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kib: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(MemoryReading {
        peak_bytes: kib * 1024,
        source: "/proc/self/status VmHWM".into(),
    })
}

/// Times envelope extraction + R over `records` for each method. Generation
/// is not included; each method runs as one batch on the current rayon pool.
pub fn bench_pipelines(
    records: &[SignalRecord],
    methods: &[Method],
    stft: &StftConfig,
) -> Result<BenchReport> {
    let mut entries = Vec::with_capacity(methods.len());
    for &method in methods {
        let start = Instant::now();
        let rs = r_values(records, method, stft)?;
        let total_s = start.elapsed().as_secs_f64();
        std::hint::black_box(&rs);
        entries.push(BenchEntry {
            method,
            signals: records.len(),
            total_s,
            per_signal_s: total_s / records.len().max(1) as f64,
        });
    }
    Ok(BenchReport {
        format: BENCH_FORMAT.into(),
        entries,
        threads: rayon::current_num_threads(),
        peak_memory: peak_memory(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub profile: ThresholdProfile,
    pub confusion: ConfusionMatrix,
    pub train_ranges: RangeSummary,
    pub test_ranges: RangeSummary,
    pub bench: BenchReport,
}

/// Generate both datasets, calibrate on the first, classify the second.
/// Timing covers only the test-set envelope + R + decision stage.
pub fn run_experiment(
    train: &DatasetSpec,
    test: &DatasetSpec,
    method: Method,
    stft: &StftConfig,
    margin: f64,
) -> Result<ExperimentResult> {
    if train.master_seed == test.master_seed {
        return Err(Error::config(
            "master_seed",
            "train and test datasets must use different seeds",
        ));
    }
    let train_records = generate_dataset(train)?;
    let test_records = generate_dataset(test)?;
    evaluate_records(&train_records, &test_records, method, stft, margin)
}

/// [`run_experiment`] on already generated or loaded records.
pub fn evaluate_records(
    train: &[SignalRecord],
    test: &[SignalRecord],
    method: Method,
    stft: &StftConfig,
    margin: f64,
) -> Result<ExperimentResult> {
    let gen = train
        .first()
        .map(|r| r.config)
        .ok_or_else(|| Error::InsufficientSamples {
            what: "training set".into(),
            required: 1,
            actual: 0,
        })?;
    let train_r = r_values(train, method, stft)?;
    let profile = calibrate(&train_r, method, margin, &gen, stft)?;
    let train_ranges = summarize_ranges(&train_r, method)?;

    let start = Instant::now();
    let decisions = classify_batch(test, &profile, stft)?;
    let total_s = start.elapsed().as_secs_f64();

    let confusion = ConfusionMatrix::from_pairs(
        test.iter().zip(&decisions).map(|(rec, d)| (rec.label, d.outcome)),
    );
    let test_r: Vec<LabeledR> = test
        .iter()
        .zip(&decisions)
        .filter_map(|(rec, d)| d.r.map(|r| LabeledR { label: rec.label, r }))
        .collect();
    let test_ranges = summarize_ranges(&test_r, method)?;
    let bench = BenchReport {
        format: BENCH_FORMAT.into(),
        entries: vec![BenchEntry {
            method,
            signals: test.len(),
            total_s,
            per_signal_s: total_s / test.len().max(1) as f64,
        }],
        threads: rayon::current_num_threads(),
        peak_memory: peak_memory(),
    };
    Ok(ExperimentResult {
        profile,
        confusion,
        train_ranges,
        test_ranges,
        bench,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Accuracies {
    pub per_class: BTreeMap<ModulationClass, f64>,
    pub overall: f64,
}

impl Accuracies {
    /// Classes with an empty row are left out.
    pub fn from_confusion(cm: &ConfusionMatrix) -> Self {
        let per_class = ModulationClass::ALL
            .into_iter()
            .filter_map(|c| cm.accuracy(c).ok().map(|a| (c, a)))
            .collect();
        Accuracies {
            per_class,
            overall: cm.overall().unwrap_or(0.0),
        }
    }
}

/// Serialized evaluation results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub format: String,
    pub method: Method,
    pub confusion: ConfusionMatrix,
    pub accuracy: Accuracies,
    pub reference_accuracy: BTreeMap<ModulationClass, f64>,
    pub ranges: Option<RangeSummary>,
    pub train_ranges: Option<RangeSummary>,
    pub profile: Option<ThresholdProfile>,
    pub timing: Option<BenchReport>,
}

impl EvalReport {
    pub fn new(method: Method, confusion: ConfusionMatrix) -> Self {
        let accuracy = Accuracies::from_confusion(&confusion);
        let reference_accuracy = ModulationClass::ALL
            .into_iter()
            .zip(reference_accuracy(method))
            .collect();
        EvalReport {
            format: REPORT_FORMAT.into(),
            method,
            confusion,
            accuracy,
            reference_accuracy,
            ranges: None,
            train_ranges: None,
            profile: None,
            timing: None,
        }
    }

    pub fn from_experiment(result: &ExperimentResult) -> Self {
        EvalReport {
            ranges: Some(result.test_ranges.clone()),
            train_ranges: Some(result.train_ranges.clone()),
            profile: Some(result.profile.clone()),
            timing: Some(result.bench.clone()),
            ..EvalReport::new(result.profile.method, result.confusion.clone())
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: EvalReport =
            serde_json::from_str(text).map_err(|e| Error::format(Some(e.line()), e.to_string()))?;
        if report.format != REPORT_FORMAT {
            return Err(Error::format(
                None,
                format!("unsupported report format `{}`", report.format),
            ));
        }
        Ok(report)
    }
}

pub fn export_report(report: &EvalReport, path: &Path) -> Result<()> {
    fs::write(path, report.to_json()).map_err(|e| Error::io(path, e))
}

pub fn read_report(path: &Path) -> Result<EvalReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    EvalReport::from_json(&text)
}

/// `(time_s, envelope)` pairs for plotting. The Hilbert trace has one point
/// per sample. The STFT trace has one point per frame, placed at the frame
/// centre, with value `sum_f |X(f, t)|` whatever aggregation the config uses
/// for R.
pub fn envelope_trace(
    record: &SignalRecord,
    method: Method,
    stft_cfg: &StftConfig,
) -> Result<Vec<(f64, f64)>> {
    let fs = record.config.sample_rate_hz;
    Ok(match method {
        Method::Hilbert => envelope_hilbert(&record.samples)?
            .values
            .into_iter()
            .enumerate()
            .map(|(k, a)| (k as f64 / fs, a))
            .collect(),
        Method::Stft => {
            let spec = stft(&analytic_signal(&record.samples)?, stft_cfg)?;
            let half = stft_cfg.window_len as f64 / 2.0;
            spec.frame_magnitude_sums()
                .into_iter()
                .enumerate()
                .map(|(t, a)| ((spec.frame_start(t) as f64 + half) / fs, a))
                .collect()
        }
    })
}

pub fn format_trace(
    record: &SignalRecord,
    method: Method,
    stft_cfg: &StftConfig,
) -> Result<String> {
    let points = envelope_trace(record, method, stft_cfg)?;
    let mut out = format!(
        "# rmod-trace v1 method={method} label={} seed={} message_freq_hz={:?} noise_power={:?}",
        record.label, record.seed, record.message_freq_hz, record.config.noise_power
    );
    if method == Method::Stft {
        let _ = write!(
            out,
            " window_len={} hop={} window={}",
            stft_cfg.window_len, stft_cfg.hop, stft_cfg.window
        );
    }
    out.push_str("\n# columns: time_s envelope\n");
    for (t, a) in points {
        let _ = writeln!(out, "{t:?} {a:?}");
    }
    Ok(out)
}

pub fn export_envelope_trace(
    record: &SignalRecord,
    method: Method,
    stft_cfg: &StftConfig,
    path: &Path,
) -> Result<()> {
    let text = format_trace(record, method, stft_cfg)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rstat::RValue;
    use crate::siggen::{generate_record, GenConfig};
    use proptest::prelude::*;

    fn lr(label: ModulationClass, value: f64) -> LabeledR {
        LabeledR {
            label,
            r: RValue {
                value,
                method: Method::Hilbert,
                n_points: 200,
            },
        }
    }

    #[test]
    fn perfect_matrix_is_fully_accurate() {
        let cm = ConfusionMatrix {
            counts: [[10, 0, 0, 0], [0, 7, 0, 0], [0, 0, 3, 0]],
        };
        for c in ModulationClass::ALL {
            assert_eq!(cm.accuracy(c).unwrap(), 100.0);
        }
        assert_eq!(cm.overall().unwrap(), 100.0);
    }

    #[test]
    fn am_row_accuracy() {
        let cm = ConfusionMatrix {
            counts: [[986, 6, 2, 6], [0, 1000, 0, 0], [0, 0, 1000, 0]],
        };
        assert!((cm.accuracy(ModulationClass::Am).unwrap() - 98.6).abs() < 1e-12);
    }

    #[test]
    fn all_unknown_is_zero() {
        let cm = ConfusionMatrix {
            counts: [[0, 0, 0, 5], [0, 0, 0, 5], [0, 0, 0, 5]],
        };
        assert_eq!(cm.accuracy(ModulationClass::Dsb).unwrap(), 0.0);
        assert_eq!(cm.overall().unwrap(), 0.0);
    }

    #[test]
    fn empty_row_is_an_error() {
        let cm = ConfusionMatrix::default();
        assert!(cm.accuracy(ModulationClass::Ssb).is_err());
        assert!(cm.overall().is_err());
    }

    #[test]
    fn range_summary_small() {
        let mut v = Vec::new();
        for c in ModulationClass::ALL {
            v.extend([0.3, 0.1, 0.2].map(|x| lr(c, x)));
        }
        let s = summarize_ranges(&v, Method::Hilbert).unwrap();
        let am = s.get(ModulationClass::Am);
        assert_eq!((am.min, am.max, am.median), (0.1, 0.3, 0.2));
        assert!((am.mean - 0.2).abs() < 1e-15);
        v.push(lr(ModulationClass::Ssb, 0.4));
        assert_eq!(summarize_ranges(&v, Method::Hilbert).unwrap().get(ModulationClass::Ssb).median, 0.25);
        assert!(summarize_ranges(&v[..4], Method::Hilbert).is_err());
    }

    #[test]
    fn report_round_trip() {
        let cm = ConfusionMatrix {
            counts: [[97, 1, 0, 2], [3, 95, 0, 2], [0, 0, 99, 1]],
        };
        let report = EvalReport::new(Method::Stft, cm.clone());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.json");
        export_report(&report, &path).unwrap();
        let back = read_report(&path).unwrap();
        assert_eq!(back.confusion, cm);
        assert_eq!(back, report);
    }

    #[test]
    fn report_io_errors_carry_path() {
        let err = read_report(Path::new("/nonexistent/dir/report.json")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/dir/report.json"));
    }

    #[test]
    fn ssb_trace_is_flat() {
        let cfg = GenConfig {
            noise_power: 0.0,
            ..GenConfig::default()
        };
        let rec = generate_record(ModulationClass::Ssb, 4, &cfg).unwrap();
        let pts = envelope_trace(&rec, Method::Hilbert, &StftConfig::default()).unwrap();
        assert_eq!(pts.len(), 200);
        for (_, a) in &pts {
            assert!((a - pts[0].1).abs() < 1e-9);
        }
        let frames = envelope_trace(&rec, Method::Stft, &StftConfig::default()).unwrap();
        assert_eq!(frames.len(), 9);
        assert!((frames[0].0 - 0.0032).abs() < 1e-12);
    }

    #[test]
    fn am_trace_swings_between_zero_and_two() {
        let cfg = GenConfig {
            noise_power: 0.0,
            ..GenConfig::default()
        };
        let rec = generate_record(ModulationClass::Am, 8, &cfg).unwrap();
        let text = format_trace(&rec, Method::Hilbert, &StftConfig::default()).unwrap();
        let values: Vec<f64> = text
            .lines()
            .filter(|l| !l.starts_with('#'))
            .map(|l| {
                let cols: Vec<f64> = l.split_whitespace().map(|c| c.parse().unwrap()).collect();
                assert_eq!(cols.len(), 2);
                cols[1]
            })
            .collect();
        assert_eq!(values.len(), 200);
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(0.0, f64::max);
        assert!(lo < 0.05 && hi > 1.95, "{lo} {hi}");
    }

    #[test]
    fn experiment_conserves_counts_and_matches_training_ranges() {
        let gen = GenConfig::default();
        let train = DatasetSpec::new(20, 100, gen);
        let test = DatasetSpec::new(30, 200, gen);
        let res = run_experiment(&train, &test, Method::Hilbert, &StftConfig::default(), 0.0).unwrap();
        assert_eq!(res.confusion.total(), 90);
        for c in ModulationClass::ALL {
            assert_eq!(res.confusion.row_sum(c), 30);
            let iv = res.profile.interval(c);
            let tr = res.train_ranges.get(c);
            assert_eq!((iv.lo, iv.hi), (tr.min, tr.max));
        }
        assert!(res.bench.entries[0].total_s > 0.0);
        assert!(run_experiment(&train, &train, Method::Hilbert, &StftConfig::default(), 0.0).is_err());
    }

    #[test]
    fn experiment_is_deterministic_apart_from_timing() {
        let gen = GenConfig::default();
        let train = DatasetSpec::new(15, 1, gen);
        let test = DatasetSpec::new(15, 2, gen);
        let a = run_experiment(&train, &test, Method::Stft, &StftConfig::default(), 0.1).unwrap();
        let b = run_experiment(&train, &test, Method::Stft, &StftConfig::default(), 0.1).unwrap();
        assert_eq!(a.profile, b.profile);
        assert_eq!(a.confusion, b.confusion);
        assert_eq!(a.test_ranges, b.test_ranges);
    }

    proptest! {
        #[test]
        fn accuracy_bounds_and_conservation(pairs in prop::collection::vec((0usize..3, 0usize..4), 1..500)) {
            let cm = ConfusionMatrix::from_pairs(pairs.iter().map(|&(t, o)| {
                (ModulationClass::ALL[t], Outcome::ALL[o])
            }));
            prop_assert_eq!(cm.total(), pairs.len() as u64);
            let overall = cm.overall().unwrap();
            prop_assert!((0.0..=100.0).contains(&overall));
            for c in ModulationClass::ALL {
                if let Ok(a) = cm.accuracy(c) {
                    prop_assert!((0.0..=100.0).contains(&a));
                }
            }
        }
    }
}
