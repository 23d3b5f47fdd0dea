//! Transforms feeding the two envelope pipelines.
//!
//! Everything here is pure: the only shared state is a per-thread FFT plan
//! cache inside [`fourier`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

mod analytic;
pub mod fourier;
mod stft;

pub use analytic::{analytic_signal, envelope_hilbert, ComplexSeries};
pub use fourier::{dft, idft};
pub use stft::{envelope_stft, stft, Spectrogram};

/// Envelope extraction pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Hilbert,
    Stft,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::Hilbert, Method::Stft];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Hilbert => "hilbert",
            Method::Stft => "stft",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "hilbert" => Ok(Method::Hilbert),
            "stft" => Ok(Method::Stft),
            other => Err(format!("unknown method `{other}` (expected hilbert or stft)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowFn {
    Rectangular,
    /// Periodic Hann, `w[n] = 0.5 - 0.5 cos(2 pi n / L)`.
    Hann,
}

impl WindowFn {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            WindowFn::Rectangular => vec![1.0; len],
            WindowFn::Hann => (0..len)
                .map(|n| {
                    0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / len as f64).cos()
                })
                .collect(),
        }
    }
}

impl FromStr for WindowFn {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "hann" => Ok(WindowFn::Hann),
            "rectangular" | "rect" => Ok(WindowFn::Rectangular),
            other => Err(format!(
                "unknown window `{other}` (expected hann or rectangular)"
            )),
        }
    }
}

impl fmt::Display for WindowFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WindowFn::Rectangular => "rectangular",
            WindowFn::Hann => "hann",
        })
    }
}

/// How a spectrogram is reduced to the sample set that R is computed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StftAggregation {
    /// Every magnitude `|X(f, t)|`, frame-major. Captures how concentrated the
    /// signal energy is across the time-frequency plane.
    Cells,
    /// One value per frame, `sum_f |X(f, t)|`.
    FrameSum,
}

impl FromStr for StftAggregation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "cells" => Ok(StftAggregation::Cells),
            "frame_sum" => Ok(StftAggregation::FrameSum),
            other => Err(format!(
                "unknown aggregation `{other}` (expected cells or frame-sum)"
            )),
        }
    }
}

impl fmt::Display for StftAggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StftAggregation::Cells => "cells",
            StftAggregation::FrameSum => "frame-sum",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StftConfig {
    pub window_len: usize,
    pub hop: usize,
    pub window: WindowFn,
    pub aggregation: StftAggregation,
}

impl Default for StftConfig {
    /// 64-sample Hann window, hop 16: nine full frames over a 200-sample record.
    fn default() -> Self {
        StftConfig {
            window_len: 64,
            hop: 16,
            window: WindowFn::Hann,
            aggregation: StftAggregation::Cells,
        }
    }
}

impl StftConfig {
    /// Checks `1 <= hop <= window_len`, and `window_len <= signal_len` when a
    /// length is given.
    pub fn validate(&self, signal_len: Option<usize>) -> crate::Result<()> {
        if self.window_len == 0 {
            return Err(crate::Error::config("window_len", "must be at least 1"));
        }
        if self.hop == 0 || self.hop > self.window_len {
            return Err(crate::Error::config(
                "hop",
                format!("must lie in [1, window_len = {}]", self.window_len),
            ));
        }
        if let Some(n) = signal_len {
            if self.window_len > n {
                return Err(crate::Error::TooShort {
                    len: n,
                    required: self.window_len,
                });
            }
        }
        Ok(())
    }

    pub fn frame_count(&self, signal_len: usize) -> usize {
        if signal_len < self.window_len || self.hop == 0 {
            0
        } else {
            (signal_len - self.window_len) / self.hop + 1
        }
    }
}

/// Nonnegative amplitude sequence produced by one of the pipelines.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub values: Vec<f64>,
    pub source: Method,
}

impl Envelope {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_gives_nine_frames_on_200_samples() {
        let cfg = StftConfig::default();
        assert_eq!(cfg.frame_count(200), 9);
        assert!(cfg.validate(Some(200)).is_ok());
    }

    #[test]
    fn config_validation() {
        let mut cfg = StftConfig {
            hop: 0,
            ..StftConfig::default()
        };
        assert!(cfg.validate(None).is_err());
        cfg.hop = 65;
        assert!(cfg.validate(None).is_err());
        cfg.hop = 64;
        assert!(cfg.validate(Some(63)).is_err());
        assert!(cfg.validate(Some(64)).is_ok());
    }

    #[test]
    fn hann_is_periodic() {
        let w = WindowFn::Hann.coefficients(4);
        let expected = [0.0, 0.5, 1.0, 0.5];
        for (a, b) in w.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn parse_names() {
        assert_eq!("STFT".parse::<Method>().unwrap(), Method::Stft);
        assert_eq!("rect".parse::<WindowFn>().unwrap(), WindowFn::Rectangular);
        assert_eq!(
            "frame-sum".parse::<StftAggregation>().unwrap(),
            StftAggregation::FrameSum
        );
        assert!("wavelet".parse::<Method>().is_err());
    }
}
