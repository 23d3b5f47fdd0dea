//! Acceptance checks, one line per criterion. Criterion 10 (100,000 records
//! per class) runs only with `RMOD_ACCEPT_LARGE=1`.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rmod_core::classifier::{calibrate, classify_r, classify_record, Outcome, ThresholdProfile};
use rmod_core::dsp::{analytic_signal, dft, idft};
use rmod_core::eval::{
    evaluate_records, r_values, reference_accuracy, summarize_ranges, bench_pipelines, ConfusionMatrix,
    RangeSummary,
};
use rmod_core::rstat::r_pipeline;
use rmod_core::siggen::{
    generate_dataset, generate_message, modulate, read_dataset, write_dataset, DatasetSpec,
};
use rmod_core::{GenConfig, Method, ModulationClass, RValue, StftConfig};

const TRAIN_SEED: u64 = 1;
const TEST_SEED: u64 = 2;
const BAND_SEED: u64 = 7;
const BENCH_SEED: u64 = 11;

struct Outcomes {
    failed: usize,
}

impl Outcomes {
    fn report(&mut self, id: &str, pass: bool, detail: String) {
        println!("[{}] {id}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed += 1;
        }
    }
}

fn brute_r(a: &[f64]) -> f64 {
    let n = a.len() as f64;
    let mean = a.iter().sum::<f64>() / n;
    let var = a.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    var / (mean * mean)
}

fn clean() -> GenConfig {
    GenConfig {
        noise_power: 0.0,
        ..GenConfig::default()
    }
}

fn tone_record(class: ModulationClass, cfg: &GenConfig) -> Vec<f64> {
    let x = generate_message(250.0, 0.0, 1.0, 200, cfg.sample_rate_hz).unwrap();
    modulate(class, &x, cfg).unwrap()
}

fn hilbert_r(samples: &[f64]) -> f64 {
    r_pipeline(samples, Method::Hilbert, &StftConfig::default()).unwrap().value
}

fn grid(f: impl Fn(f64) -> f64) -> Vec<f64> {
    (0..200).map(|k| f(2.0 * PI * 250.0 * k as f64 / 10_000.0)).collect()
}

fn criterion_1(out: &mut Outcomes) {
    let r = hilbert_r(&tone_record(ModulationClass::Dsb, &clean()));
    let brute = brute_r(&grid(|p| p.cos().abs()));
    let continuum = PI * PI / 8.0 - 1.0;
    let offset = brute_r(&(0..200)
        .map(|k| (2.0 * PI * 250.0 * (k as f64 + 0.25) / 10_000.0).cos().abs())
        .collect::<Vec<_>>());
    let d_brute = (r - brute).abs();
    let d_cont = (r - continuum).abs();
    out.report(
        "1 DSB oracle",
        d_brute <= 1e-9 && d_cont <= 1e-3,
        format!(
            "R={r:.10} |R-brute|={d_brute:.1e} (tol 1e-9) |R-continuum|={d_cont:.2e} (tol 1e-3); \
             quarter-sample-offset grid gives {offset:.6}"
        ),
    );
}

fn criterion_2(out: &mut Outcomes) {
    let r = hilbert_r(&tone_record(ModulationClass::Am, &clean()));
    let brute = brute_r(&grid(|p| 1.0 + p.cos()));
    out.report(
        "2 AM oracle",
        (r - brute).abs() <= 1e-9 && (r - 0.5).abs() <= 1e-6,
        format!("R={r:.12} |R-brute|={:.1e} |R-0.5|={:.1e}", (r - brute).abs(), (r - 0.5).abs()),
    );
}

fn criterion_3(out: &mut Outcomes) {
    let r = hilbert_r(&tone_record(ModulationClass::Ssb, &clean()));
    out.report("3 SSB oracle", r <= 1e-10, format!("R={r:.3e} (limit 1e-10)"));
}

fn band_dataset() -> Vec<rmod_core::SignalRecord> {
    generate_dataset(&DatasetSpec::new(1000, BAND_SEED, GenConfig::default())).unwrap()
}

fn criterion_4(out: &mut Outcomes, hilbert: &RangeSummary, secs: f64) {
    let bands = [
        (ModulationClass::Am, 0.40, 0.52),
        (ModulationClass::Dsb, 0.18, 0.28),
        (ModulationClass::Ssb, 0.004, 0.02),
    ];
    let mut pass = true;
    let mut detail = String::new();
    for (c, lo, hi) in bands {
        let s = hilbert.get(c);
        let inside = s.min >= lo && s.max <= hi;
        pass &= inside;
        detail += &format!("{c} [{:.4}, {:.4}]{} ", s.min, s.max, if inside { "" } else { " OUT" });
    }
    let ivs: Vec<(f64, f64)> = ModulationClass::ALL
        .iter()
        .map(|&c| (hilbert.get(c).min, hilbert.get(c).max))
        .collect();
    let disjoint = (0..3).all(|i| (i + 1..3).all(|j| ivs[i].1 < ivs[j].0 || ivs[j].1 < ivs[i].0));
    pass &= disjoint && secs < 30.0;
    out.report(
        "4 Hilbert bands",
        pass,
        format!("{detail}disjoint={disjoint} seed={BAND_SEED} {secs:.2}s"),
    );
}

fn criterion_5(out: &mut Outcomes, stft: &RangeSummary) {
    let [am, dsb, ssb] = ModulationClass::ALL.map(|c| stft.get(c).median);
    out.report(
        "5 STFT ordering",
        ssb > am && am > dsb,
        format!("median SSB={ssb:.4} AM={am:.4} DSB={dsb:.4}"),
    );
}

fn accuracy_check(
    out: &mut Outcomes,
    id: &str,
    train_n: usize,
    test_n: usize,
) -> Option<ThresholdProfile> {
    let start = Instant::now();
    let gen = GenConfig::default();
    let train = generate_dataset(&DatasetSpec::new(train_n, TRAIN_SEED, gen)).unwrap();
    let test = generate_dataset(&DatasetSpec::new(test_n, TEST_SEED, gen)).unwrap();
    let mut pass = true;
    let mut detail = String::new();
    let mut stretch = String::new();
    let mut hilbert_profile = None;
    for method in Method::ALL {
        let res = evaluate_records(&train, &test, method, &StftConfig::default(), 0.0).unwrap();
        let reference = reference_accuracy(method);
        detail += &format!("{method}:");
        for c in ModulationClass::ALL {
            let a = res.confusion.accuracy(c).unwrap();
            pass &= a >= 95.0;
            detail += &format!(" {c}={a:.1}");
            let near = (a - reference[c.ordinal()]).abs() <= 3.0;
            stretch += &format!(" {method}/{c}={}", if near { "ok" } else { "off" });
        }
        detail += "; ";
        if method == Method::Hilbert {
            hilbert_profile = Some(res.profile);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    out.report(
        id,
        pass,
        format!("{detail}train seed {TRAIN_SEED} x{train_n}, test seed {TEST_SEED} x{test_n}, {secs:.1}s"),
    );
    println!("       stretch (within 3 points of reference, not asserted):{stretch}");
    hilbert_profile
}

fn criterion_7(out: &mut Outcomes, calibrated: &ThresholdProfile) {
    let carrier: Vec<f64> = (0..200).map(|k| (2.0 * PI * 1000.0 * k as f64 / 10_000.0).cos()).collect();
    let d_cal = classify_record(&carrier, calibrated, &StftConfig::default()).unwrap();
    let reference = ThresholdProfile::reference(Method::Hilbert);
    let d_ref = classify_record(&carrier, &reference, &StftConfig::default()).unwrap();
    let probe = RValue { value: 0.35, method: Method::Hilbert, n_points: 200 };
    let d_probe = classify_r(&probe, &reference).unwrap();
    let r_carrier = d_cal.r.map_or(f64::NAN, |r| r.value);
    out.report(
        "7 Unknown rejection",
        d_cal.outcome == Outcome::Unknown
            && d_ref.outcome == Outcome::Unknown
            && d_probe.outcome == Outcome::Unknown,
        format!(
            "carrier R={r_carrier:.2e} -> {} (calibrated), {} (reference); probe 0.35 -> {}",
            d_cal.outcome, d_ref.outcome, d_probe.outcome
        ),
    );
}

fn criterion_8(out: &mut Outcomes) {
    let records = generate_dataset(&DatasetSpec::new(3400, BENCH_SEED, GenConfig::default())).unwrap();
    let stft = StftConfig::default();
    bench_pipelines(&records[..500], &Method::ALL, &stft).unwrap();
    let report = bench_pipelines(&records, &Method::ALL, &stft).unwrap();
    let h = report.entry(Method::Hilbert).unwrap();
    let s = report.entry(Method::Stft).unwrap();
    out.report(
        "8 runtime ordering",
        h.per_signal_s < s.per_signal_s && h.signals >= 10_000,
        format!(
            "{} signals, hilbert {:.2} us/signal ({:.3}s), stft {:.2} us/signal ({:.3}s), {} threads",
            h.signals,
            h.per_signal_s * 1e6,
            h.total_s,
            s.per_signal_s * 1e6,
            s.total_s,
            report.threads
        ),
    );
}

fn property_suites() -> Result<(), String> {
    let mut runner = TestRunner::new(Config {
        cases: 64,
        failure_persistence: None,
        ..Config::default()
    });
    let signal = prop::collection::vec(-10.0f64..10.0, 8..256);

    runner
        .run(&(signal.clone(), 1e-3f64..1e3), |(x, a)| {
            let env: Vec<f64> = x.iter().map(|v| v.abs() + 0.1).collect();
            let scaled: Vec<f64> = env.iter().map(|v| v * a).collect();
            let r1 = brute_r(&env);
            let r2 = rmod_core::rstat::r_value(&rmod_core::Envelope { values: scaled, source: Method::Hilbert })
                .unwrap()
                .value;
            prop_assert!((r1 - r2).abs() <= 1e-12 * r1.max(1e-300) + 1e-15);
            Ok(())
        })
        .map_err(|e| format!("scale invariance: {e}"))?;

    runner
        .run(&signal, |x| {
            let c: Vec<_> = x.iter().map(|&v| num_complex_from(v)).collect();
            let back = idft(&dft(&c));
            let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for (a, b) in c.iter().zip(&back) {
                prop_assert!((a - b).norm() <= 1e-12 * scale);
            }
            Ok(())
        })
        .map_err(|e| format!("dft round trip: {e}"))?;

    runner
        .run(&signal, |x| {
            let z = analytic_signal(&x).unwrap();
            let n = x.len();
            for (zi, xi) in z.iter().zip(&x) {
                prop_assert!((zi.re - xi).abs() <= 1e-9);
            }
            let spec = dft(&z);
            for bin in spec.iter().skip(n / 2 + 1) {
                prop_assert!(bin.norm() <= 1e-9);
            }
            Ok(())
        })
        .map_err(|e| format!("analytic signal: {e}"))?;

    runner
        .run(&prop::collection::vec((0usize..3, 0usize..4), 1..400), |pairs| {
            let cm = ConfusionMatrix::from_pairs(
                pairs.iter().map(|&(t, o)| (ModulationClass::ALL[t], Outcome::ALL[o])),
            );
            prop_assert_eq!(cm.total(), pairs.len() as u64);
            for c in ModulationClass::ALL {
                let want = pairs.iter().filter(|p| p.0 == c.ordinal()).count() as u64;
                prop_assert_eq!(cm.row_sum(c), want);
            }
            Ok(())
        })
        .map_err(|e| format!("confusion conservation: {e}"))?;

    let spec = DatasetSpec::new(40, 99, GenConfig::default());
    let by_threads: Vec<_> = [1, 3, 8]
        .iter()
        .map(|&t| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .unwrap()
                .install(|| generate_dataset(&spec).unwrap())
        })
        .collect();
    if by_threads.windows(2).any(|w| w[0] != w[1]) {
        return Err("dataset differs across thread counts".into());
    }

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let ds_path = dir.path().join("d.ds");
    write_dataset(&ds_path, &spec.config, &by_threads[0]).map_err(|e| e.to_string())?;
    let first = std::fs::read(&ds_path).map_err(|e| e.to_string())?;
    let loaded = read_dataset(&ds_path).map_err(|e| e.to_string())?;
    if loaded.records != by_threads[0] {
        return Err("dataset round trip changed records".into());
    }
    write_dataset(&ds_path, &loaded.config, &loaded.records).map_err(|e| e.to_string())?;
    if std::fs::read(&ds_path).map_err(|e| e.to_string())? != first {
        return Err("dataset rewrite is not byte-identical".into());
    }

    let rs = r_values(&by_threads[0], Method::Stft, &StftConfig::default()).map_err(|e| e.to_string())?;
    let profile = calibrate(&rs, Method::Stft, 0.1, &spec.config, &StftConfig::default()).map_err(|e| e.to_string())?;
    let p_path = dir.path().join("p.json");
    profile.write(&p_path).map_err(|e| e.to_string())?;
    if ThresholdProfile::read(&p_path).map_err(|e| e.to_string())? != profile {
        return Err("profile round trip changed the profile".into());
    }
    Ok(())
}

fn num_complex_from(v: f64) -> num_complex::Complex64 {
    num_complex::Complex64::new(v, -0.5 * v)
}

fn criterion_9(out: &mut Outcomes) {
    let res = property_suites();
    out.report(
        "9 property suites",
        res.is_ok(),
        res.err().unwrap_or_else(|| {
            "scale invariance, dft round trip, analytic signal, confusion conservation, \
             thread-count determinism, file round trips"
                .into()
        }),
    );
}

fn main() -> ExitCode {
    let mut out = Outcomes { failed: 0 };
    criterion_1(&mut out);
    criterion_2(&mut out);
    criterion_3(&mut out);

    let start = Instant::now();
    let records = band_dataset();
    let hilbert = summarize_ranges(
        &r_values(&records, Method::Hilbert, &StftConfig::default()).unwrap(),
        Method::Hilbert,
    )
    .unwrap();
    criterion_4(&mut out, &hilbert, start.elapsed().as_secs_f64());
    let stft = summarize_ranges(
        &r_values(&records, Method::Stft, &StftConfig::default()).unwrap(),
        Method::Stft,
    )
    .unwrap();
    criterion_5(&mut out, &stft);

    let profile = accuracy_check(&mut out, "6 accuracy floors", 100, 1000);
    match profile {
        Some(p) => criterion_7(&mut out, &p),
        None => out.report("7 Unknown rejection", false, "no calibrated profile".into()),
    }
    criterion_8(&mut out);
    criterion_9(&mut out);

    if std::env::var("RMOD_ACCEPT_LARGE").is_ok_and(|v| v == "1") {
        accuracy_check(&mut out, "10 large-scale smoke", 100, 100_000);
    } else {
        println!("[SKIP] 10 large-scale smoke: set RMOD_ACCEPT_LARGE=1 to run 100,000 per class");
    }

    println!("{} criteria failed", out.failed);
    if out.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
