//! Deterministic synthesis of labeled AM, DSB and SSB test signals.
//!
//! Each record is a single-tone message modulated onto a unit-amplitude
//! cosine carrier, plus white Gaussian noise of fixed variance. Every random
//! draw for a record comes from one ChaCha8 stream seeded with the record's
//! own seed, in this order:
//!
//! 1. message frequency (one uniform),
//! 2. message phase (one uniform, scaled to `[0, 2 pi)`),
//! 3. noise, as Box-Muller pairs (two uniforms per pair of Gaussians).
//!
//! Uniforms are `rand`'s standard `f64` in `[0, 1)`. Per-record seeds come
//! from [`stable_mix`], so a dataset can be generated in any order or on any
//! number of threads and still be byte-identical.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dsp::analytic_signal;
use crate::{Error, Result};

mod io;

pub use io::{read_dataset, read_dataset_from, write_dataset, write_dataset_to, Dataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModulationClass {
    #[serde(rename = "AM")]
    Am,
    #[serde(rename = "DSB")]
    Dsb,
    #[serde(rename = "SSB")]
    Ssb,
}

impl ModulationClass {
    pub const ALL: [ModulationClass; 3] =
        [ModulationClass::Am, ModulationClass::Dsb, ModulationClass::Ssb];

    pub fn ordinal(self) -> usize {
        self as usize
    }

    pub fn from_ordinal(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModulationClass::Am => "AM",
            ModulationClass::Dsb => "DSB",
            ModulationClass::Ssb => "SSB",
        }
    }
}

impl fmt::Display for ModulationClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModulationClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "AM" => Ok(ModulationClass::Am),
            "DSB" => Ok(ModulationClass::Dsb),
            "SSB" => Ok(ModulationClass::Ssb),
            other => Err(format!("unknown modulation class `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sideband {
    Upper,
    Lower,
}

/// How the per-record message frequency is drawn from the configured range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FreqSampling {
    /// Uniform over the frequencies in range that complete a whole number of
    /// cycles in the record (multiples of `1 / duration_s`).
    IntegerCycles,
    /// Uniform over the closed interval.
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub carrier_freq_hz: f64,
    pub sample_rate_hz: f64,
    pub duration_s: f64,
    /// Variance of the additive Gaussian noise.
    pub noise_power: f64,
    /// AM modulation index, in (0, 1].
    pub mod_index: f64,
    pub message_freq_range_hz: [f64; 2],
    pub message_amplitude: f64,
    pub ssb_sideband: Sideband,
    pub message_freq_sampling: FreqSampling,
}

impl Default for GenConfig {
    /// 1 kHz carrier at 10 kHz sampling, 20 ms records, noise variance 0.01,
    /// full-depth AM, message tone in 200..=300 Hz on the integer-cycle grid.
    fn default() -> Self {
        GenConfig {
            carrier_freq_hz: 1000.0,
            sample_rate_hz: 10_000.0,
            duration_s: 0.020,
            noise_power: 0.01,
            mod_index: 1.0,
            message_freq_range_hz: [200.0, 300.0],
            message_amplitude: 1.0,
            ssb_sideband: Sideband::Upper,
            message_freq_sampling: FreqSampling::IntegerCycles,
        }
    }
}

/// Tolerance when deciding whether `duration * rate` or `f * duration` is integral.
const INTEGRAL_TOL: f64 = 1e-6;

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |field: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(field, format!("must be positive and finite, got {v}")))
            }
        };
        positive("carrier_freq_hz", self.carrier_freq_hz)?;
        positive("sample_rate_hz", self.sample_rate_hz)?;
        positive("duration_s", self.duration_s)?;
        positive("message_amplitude", self.message_amplitude)?;
        if !(self.noise_power.is_finite() && self.noise_power >= 0.0) {
            return Err(Error::config(
                "noise_power",
                format!("must be nonnegative and finite, got {}", self.noise_power),
            ));
        }
        if !(self.mod_index > 0.0 && self.mod_index <= 1.0) {
            return Err(Error::config(
                "mod_index",
                format!("must lie in (0, 1], got {}", self.mod_index),
            ));
        }
        if self.mod_index * self.message_amplitude > 1.0 + 1e-12 {
            return Err(Error::config(
                "mod_index",
                format!(
                    "mod_index * message_amplitude = {} overmodulates AM",
                    self.mod_index * self.message_amplitude
                ),
            ));
        }
        if self.carrier_freq_hz >= self.sample_rate_hz / 2.0 {
            return Err(Error::config(
                "carrier_freq_hz",
                format!(
                    "{} Hz must be below Nyquist ({} Hz)",
                    self.carrier_freq_hz,
                    self.sample_rate_hz / 2.0
                ),
            ));
        }
        let [lo, hi] = self.message_freq_range_hz;
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
            return Err(Error::config(
                "message_freq_range_hz",
                format!("need 0 < lo <= hi, got [{lo}, {hi}]"),
            ));
        }
        if hi >= self.carrier_freq_hz {
            return Err(Error::config(
                "message_freq_range_hz",
                format!("upper bound {hi} Hz must be below the carrier"),
            ));
        }
        let exact = self.duration_s * self.sample_rate_hz;
        if (exact - exact.round()).abs() > INTEGRAL_TOL || exact.round() < 16.0 {
            return Err(Error::config(
                "duration_s",
                format!("duration * sample_rate = {exact} must be an integer >= 16"),
            ));
        }
        if self.message_freq_sampling == FreqSampling::IntegerCycles
            && self.cycle_range().is_none()
        {
            return Err(Error::config(
                "message_freq_range_hz",
                format!(
                    "no whole-cycle frequency (multiple of {} Hz) in [{lo}, {hi}]",
                    1.0 / self.duration_s
                ),
            ));
        }
        Ok(())
    }

    /// Record length `N = round(duration_s * sample_rate_hz)`.
    pub fn sample_count(&self) -> usize {
        (self.duration_s * self.sample_rate_hz).round() as usize
    }

    /// Inclusive range of whole-cycle counts whose frequency lies in the
    /// message range.
    fn cycle_range(&self) -> Option<(u64, u64)> {
        let [lo, hi] = self.message_freq_range_hz;
        let first = (lo * self.duration_s - INTEGRAL_TOL).ceil().max(1.0);
        let last = (hi * self.duration_s + INTEGRAL_TOL).floor();
        (first <= last).then_some((first as u64, last as u64))
    }

    fn draw_message_freq<R: Rng>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let [lo, hi] = self.message_freq_range_hz;
        match self.message_freq_sampling {
            FreqSampling::Continuous => lo + u * (hi - lo),
            FreqSampling::IntegerCycles => {
                let (first, last) = self.cycle_range().expect("validated config");
                let span = last - first + 1;
                let k = first + ((u * span as f64) as u64).min(span - 1);
                k as f64 / self.duration_s
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalRecord {
    pub label: ModulationClass,
    pub samples: Vec<f64>,
    pub message_freq_hz: f64,
    pub message_phase_rad: f64,
    pub seed: u64,
    pub config: GenConfig,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetSpec {
    pub counts_per_class: usize,
    pub master_seed: u64,
    pub config: GenConfig,
}

impl DatasetSpec {
    pub fn new(counts_per_class: usize, master_seed: u64, config: GenConfig) -> Self {
        DatasetSpec {
            counts_per_class,
            master_seed,
            config,
        }
    }

    pub fn total(&self) -> usize {
        3 * self.counts_per_class
    }
}

/// `x[k] = amplitude * cos(2 pi freq k / fs + phase)`.
pub fn generate_message(
    freq_hz: f64,
    phase_rad: f64,
    amplitude: f64,
    n: usize,
    sample_rate_hz: f64,
) -> Result<Vec<f64>> {
    let nyquist_hz = sample_rate_hz / 2.0;
    if !(freq_hz > 0.0 && freq_hz < nyquist_hz) {
        return Err(Error::InvalidFrequency { freq_hz, nyquist_hz });
    }
    if n == 0 {
        return Err(Error::Empty);
    }
    let w = 2.0 * PI * freq_hz / sample_rate_hz;
    Ok((0..n)
        .map(|k| amplitude * (w * k as f64 + phase_rad).cos())
        .collect())
}

/// Puts `message` on a unit cosine carrier.
///
/// * AM: `(1 + m x) cos(wc t)`
/// * DSB: `x cos(wc t)`
/// * SSB (phasing method): `x cos(wc t) -/+ H{x} sin(wc t)`, minus for the
///   upper sideband.
pub fn modulate(class: ModulationClass, message: &[f64], config: &GenConfig) -> Result<Vec<f64>> {
    let n = config.sample_count();
    if message.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: message.len(),
        });
    }
    let wc = 2.0 * PI * config.carrier_freq_hz / config.sample_rate_hz;
    let carrier = |k: usize| (wc * k as f64).cos();
    Ok(match class {
        ModulationClass::Am => message
            .iter()
            .enumerate()
            .map(|(k, x)| (1.0 + config.mod_index * x) * carrier(k))
            .collect(),
        ModulationClass::Dsb => message
            .iter()
            .enumerate()
            .map(|(k, x)| x * carrier(k))
            .collect(),
        ModulationClass::Ssb => {
            let quadrature = analytic_signal(message)?;
            let sign = match config.ssb_sideband {
                Sideband::Upper => -1.0,
                Sideband::Lower => 1.0,
            };
            message
                .iter()
                .zip(&quadrature)
                .enumerate()
                .map(|(k, (x, z))| x * carrier(k) + sign * z.im * (wc * k as f64).sin())
                .collect()
        }
    })
}

/// A pair of independent standard normals by the Box-Muller transform.
pub fn box_muller<R: Rng>(rng: &mut R) -> (f64, f64) {
    let u1: f64 = rng.random();
    let u2: f64 = rng.random();
    // 1 - u1 lies in (0, 1], so the log is finite.
    let radius = (-2.0 * (1.0 - u1).ln()).sqrt();
    let angle = TAU * u2;
    (radius * angle.cos(), radius * angle.sin())
}

/// Adds i.i.d. zero-mean Gaussian noise of variance `noise_power`. Zero power
/// returns the input untouched and draws nothing from `rng`.
pub fn add_awgn<R: Rng>(signal: &[f64], noise_power: f64, rng: &mut R) -> Vec<f64> {
    let mut out = signal.to_vec();
    if noise_power <= 0.0 {
        return out;
    }
    let sigma = noise_power.sqrt();
    for pair in out.chunks_mut(2) {
        let (a, b) = box_muller(rng);
        pair[0] += sigma * a;
        if let Some(second) = pair.get_mut(1) {
            *second += sigma * b;
        }
    }
    out
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-record seed: `splitmix64(splitmix64(splitmix64(master) ^ class) ^ index)`.
pub fn stable_mix(master_seed: u64, class_ordinal: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master_seed) ^ class_ordinal) ^ index)
}

/// Builds one record from `(label, seed, config)`; the same triple always
/// gives bit-identical samples.
pub fn generate_record(label: ModulationClass, seed: u64, config: &GenConfig) -> Result<SignalRecord> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let message_freq_hz = config.draw_message_freq(&mut rng);
    let mut message_phase_rad = TAU * rng.random::<f64>();
    if message_phase_rad >= TAU {
        message_phase_rad = 0.0;
    }
    let n = config.sample_count();
    let message = generate_message(
        message_freq_hz,
        message_phase_rad,
        config.message_amplitude,
        n,
        config.sample_rate_hz,
    )?;
    let clean = modulate(label, &message, config)?;
    let samples = add_awgn(&clean, config.noise_power, &mut rng);
    Ok(SignalRecord {
        label,
        samples,
        message_freq_hz,
        message_phase_rad,
        seed,
        config: *config,
    })
}

impl SignalRecord {
    pub fn regenerate(&self) -> Result<SignalRecord> {
        generate_record(self.label, self.seed, &self.config)
    }
}

/// All records of a dataset, class-major then index. Runs on the current
/// rayon pool; output does not depend on the thread count.
pub fn generate_dataset(spec: &DatasetSpec) -> Result<Vec<SignalRecord>> {
    if spec.counts_per_class == 0 {
        return Err(Error::config("counts_per_class", "must be at least 1"));
    }
    spec.config.validate()?;
    let per = spec.counts_per_class;
    (0..spec.total())
        .into_par_iter()
        .map(|i| {
            let class = ModulationClass::ALL[i / per];
            let index = (i % per) as u64;
            let seed = stable_mix(spec.master_seed, class.ordinal() as u64, index);
            generate_record(class, seed, &spec.config)
        })
        .collect()
}
