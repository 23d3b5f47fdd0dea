//! Interval calibration and R-value classification with an Unknown outcome.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dsp::{Method, StftConfig};
use crate::rstat::{r_pipeline, RValue};
use crate::siggen::{GenConfig, ModulationClass};
use crate::{Error, Result};

pub const PROFILE_FORMAT: &str = "rmod-profile/1";

/// Minimum calibration samples per class.
pub const MIN_CALIBRATION_SAMPLES: usize = 10;

/// Observed Hilbert-envelope R bands for 20 ms noisy tone records
/// (1 kHz carrier, 10 kHz sampling, noise variance 0.01).
pub const REFERENCE_HILBERT_BANDS: [(ModulationClass, f64, f64); 3] = [
    (ModulationClass::Am, 0.4297, 0.4941),
    (ModulationClass::Dsb, 0.1970, 0.2603),
    (ModulationClass::Ssb, 0.0072, 0.0127),
];

/// Observed STFT-of-analytic-signal R bands for the same records. The AM and
/// DSB bands overlap on [3.4561, 3.6373].
pub const REFERENCE_STFT_BANDS: [(ModulationClass, f64, f64); 3] = [
    (ModulationClass::Am, 3.4561, 3.9323),
    (ModulationClass::Dsb, 2.8268, 3.6373),
    (ModulationClass::Ssb, 5.2914, 6.4936),
];

/// Theoretical R values of the classical envelope analysis (high CNR), kept
/// for reports only. SSB is a single constant.
pub const CLASSICAL_R_VALUES: [(ModulationClass, f64, f64); 3] = [
    (ModulationClass::Am, 0.76, 0.79),
    (ModulationClass::Dsb, 1.31, 1.54),
    (ModulationClass::Ssb, 1.00, 1.00),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    #[serde(rename = "AM")]
    Am,
    #[serde(rename = "DSB")]
    Dsb,
    #[serde(rename = "SSB")]
    Ssb,
    Unknown,
}

impl Outcome {
    pub const ALL: [Outcome; 4] = [Outcome::Am, Outcome::Dsb, Outcome::Ssb, Outcome::Unknown];

    /// Column index in a confusion matrix.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn class(self) -> Option<ModulationClass> {
        match self {
            Outcome::Am => Some(ModulationClass::Am),
            Outcome::Dsb => Some(ModulationClass::Dsb),
            Outcome::Ssb => Some(ModulationClass::Ssb),
            Outcome::Unknown => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Am => "AM",
            Outcome::Dsb => "DSB",
            Outcome::Ssb => "SSB",
            Outcome::Unknown => "Unknown",
        }
    }
}

impl From<ModulationClass> for Outcome {
    fn from(c: ModulationClass) -> Self {
        match c {
            ModulationClass::Am => Outcome::Am,
            ModulationClass::Dsb => Outcome::Dsb,
            ModulationClass::Ssb => Outcome::Ssb,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Outcome {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("unknown") {
            return Ok(Outcome::Unknown);
        }
        s.parse::<ModulationClass>().map(Outcome::from)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassInterval {
    pub class: ModulationClass,
    pub lo: f64,
    pub hi: f64,
}

impl ClassInterval {
    pub fn contains(&self, r: f64) -> bool {
        self.lo <= r && r <= self.hi
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdProfile {
    pub format: String,
    pub method: Method,
    /// One interval per class, in AM, DSB, SSB order.
    pub intervals: [ClassInterval; 3],
    pub margin: f64,
    pub calibration_count: BTreeMap<ModulationClass, usize>,
    pub gen_config_digest: String,
    pub stft: StftConfig,
}

/// Hex SHA-256 over the JSON of the generation config and, for the STFT
/// pipeline, the STFT config. The Hilbert pipeline does not depend on the
/// STFT settings, so they are left out of its digest.
pub fn config_digest(method: Method, gen: &GenConfig, stft: &StftConfig) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(gen).expect("GenConfig serializes"));
    h.update(b"|");
    h.update(method.as_str().as_bytes());
    if method == Method::Stft {
        h.update(b"|");
        h.update(serde_json::to_vec(stft).expect("StftConfig serializes"));
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledR {
    pub label: ModulationClass,
    pub r: RValue,
}

impl ThresholdProfile {
    pub fn interval(&self, class: ModulationClass) -> &ClassInterval {
        &self.intervals[class.ordinal()]
    }

    /// Profile built from fixed bands rather than calibration.
    pub fn from_bands(method: Method, bands: &[(ModulationClass, f64, f64); 3]) -> Self {
        let intervals = bands.map(|(class, lo, hi)| ClassInterval { class, lo, hi });
        ThresholdProfile {
            format: PROFILE_FORMAT.into(),
            method,
            intervals,
            margin: 0.0,
            calibration_count: BTreeMap::new(),
            gen_config_digest: String::new(),
            stft: StftConfig::default(),
        }
    }

    pub fn reference(method: Method) -> Self {
        match method {
            Method::Hilbert => Self::from_bands(method, &REFERENCE_HILBERT_BANDS),
            Method::Stft => Self::from_bands(method, &REFERENCE_STFT_BANDS),
        }
    }

    /// `None` when the profile was calibrated under the given configs,
    /// otherwise a human-readable warning.
    pub fn binding_warning(&self, gen: &GenConfig, stft: &StftConfig) -> Option<String> {
        let digest = config_digest(self.method, gen, stft);
        (digest != self.gen_config_digest).then(|| {
            format!(
                "profile was calibrated under config digest {} but data/pipeline digest is {}; \
                 R intervals may not apply",
                short(&self.gen_config_digest),
                short(&digest)
            )
        })
    }

    fn validate(&self) -> Result<()> {
        if self.format != PROFILE_FORMAT {
            return Err(Error::format(
                None,
                format!("unsupported profile format `{}`", self.format),
            ));
        }
        for (i, iv) in self.intervals.iter().enumerate() {
            if iv.class.ordinal() != i {
                return Err(Error::format(None, "intervals must be listed AM, DSB, SSB"));
            }
            if !(iv.lo.is_finite() && iv.hi.is_finite() && iv.lo <= iv.hi) {
                return Err(Error::format(
                    None,
                    format!("invalid interval for {}: [{}, {}]", iv.class, iv.lo, iv.hi),
                ));
            }
        }
        if !(self.margin.is_finite() && self.margin >= 0.0) {
            return Err(Error::format(None, "margin must be nonnegative"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("profile serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let profile: ThresholdProfile =
            serde_json::from_str(text).map_err(|e| Error::format(Some(e.line()), e.to_string()))?;
        profile.validate()?;
        Ok(profile)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

fn short(digest: &str) -> &str {
    &digest[..digest.len().min(12)]
}

/// Per-class `[min, max]` of the training R values, each widened by
/// `margin * (max - min) / 2` on both sides.
pub fn calibrate(
    samples: &[LabeledR],
    method: Method,
    margin: f64,
    gen: &GenConfig,
    stft: &StftConfig,
) -> Result<ThresholdProfile> {
    if !(margin.is_finite() && margin >= 0.0) {
        return Err(Error::config("margin", format!("must be nonnegative, got {margin}")));
    }
    if let Some(bad) = samples.iter().find(|s| s.r.method != method) {
        return Err(Error::MethodMismatch {
            expected: method,
            actual: bad.r.method,
        });
    }
    let mut counts = BTreeMap::new();
    let mut intervals = Vec::with_capacity(3);
    for class in ModulationClass::ALL {
        let (count, lo, hi) = samples
            .iter()
            .filter(|s| s.label == class)
            .fold((0usize, f64::INFINITY, f64::NEG_INFINITY), |(n, lo, hi), s| {
                (n + 1, lo.min(s.r.value), hi.max(s.r.value))
            });
        if count < MIN_CALIBRATION_SAMPLES {
            return Err(Error::InsufficientSamples {
                what: format!("{class} calibration"),
                required: MIN_CALIBRATION_SAMPLES,
                actual: count,
            });
        }
        if lo == hi && margin == 0.0 {
            return Err(Error::DegenerateInterval {
                class: class.to_string(),
                value: lo,
            });
        }
        let pad = 0.5 * margin * (hi - lo);
        counts.insert(class, count);
        intervals.push(ClassInterval {
            class,
            lo: lo - pad,
            hi: hi + pad,
        });
    }
    Ok(ThresholdProfile {
        format: PROFILE_FORMAT.into(),
        method,
        intervals: intervals.try_into().expect("three classes"),
        margin,
        calibration_count: counts,
        gen_config_digest: config_digest(method, gen, stft),
        stft: *stft,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub outcome: Outcome,
    /// Absent only when R could not be computed (degenerate signal).
    pub r: Option<RValue>,
    /// Number of intervals containing R.
    pub matched: usize,
    /// Set when the signal was degenerate and forced to Unknown.
    pub diagnostic: Option<String>,
}

/// Inclusive interval lookup. No match gives Unknown; several matches go to
/// the class whose interval midpoint is nearest, ties resolved AM < DSB < SSB.
pub fn classify_r(r: &RValue, profile: &ThresholdProfile) -> Result<Decision> {
    if r.method != profile.method {
        return Err(Error::MethodMismatch {
            expected: profile.method,
            actual: r.method,
        });
    }
    let mut matched = 0;
    let mut best: Option<(f64, ModulationClass)> = None;
    for iv in &profile.intervals {
        if !iv.contains(r.value) {
            continue;
        }
        matched += 1;
        let dist = (r.value - iv.midpoint()).abs();
        if best.is_none_or(|(d, _)| dist < d) {
            best = Some((dist, iv.class));
        }
    }
    Ok(Decision {
        outcome: best.map_or(Outcome::Unknown, |(_, c)| c.into()),
        r: Some(*r),
        matched,
        diagnostic: None,
    })
}

/// Computes R with the profile's method and classifies it. An all-zero
/// signal yields Unknown with a diagnostic instead of an error; non-finite
/// samples or records too short for the pipeline are errors.
pub fn classify_record(
    samples: &[f64],
    profile: &ThresholdProfile,
    stft: &StftConfig,
) -> Result<Decision> {
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::format(None, "non-finite sample in record"));
    }
    match r_pipeline(samples, profile.method, stft) {
        Ok(r) => classify_r(&r, profile),
        Err(Error::ZeroMeanEnvelope) => Ok(Decision {
            outcome: Outcome::Unknown,
            r: None,
            matched: 0,
            diagnostic: Some(Error::ZeroMeanEnvelope.to_string()),
        }),
        Err(e) => Err(e),
    }
}
