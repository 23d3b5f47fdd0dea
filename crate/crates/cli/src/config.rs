//! Settings layering: built-in defaults, then the TOML config file, then flags.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use rmod_core::siggen::{FreqSampling, Sideband};
use rmod_core::{GenConfig, Method, StftAggregation, StftConfig, WindowFn};
use serde::Deserialize;

use crate::CliError;

/// Everything a config file may set. Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub count: Option<usize>,
    pub seed: Option<u64>,
    pub test_count: Option<usize>,
    pub test_seed: Option<u64>,
    pub method: Option<Method>,
    pub margin: Option<f64>,
    pub threads: Option<usize>,
    pub carrier_freq_hz: Option<f64>,
    pub sample_rate_hz: Option<f64>,
    pub duration_s: Option<f64>,
    pub noise_power: Option<f64>,
    pub mod_index: Option<f64>,
    pub message_freq_min_hz: Option<f64>,
    pub message_freq_max_hz: Option<f64>,
    pub message_amplitude: Option<f64>,
    pub ssb_sideband: Option<Sideband>,
    pub message_freq_sampling: Option<FreqSampling>,
    pub window_len: Option<usize>,
    pub hop: Option<usize>,
    pub window: Option<WindowFn>,
    pub aggregation: Option<StftAggregation>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::usage(format!("config file {}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct GenArgs {
    /// Additive noise variance [default: 0.01]
    #[arg(long)]
    pub noise_power: Option<f64>,
    /// AM modulation index in (0, 1] [default: 1.0]
    #[arg(long)]
    pub mod_index: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct StftArgs {
    /// STFT window length in samples [default: 64]
    #[arg(long)]
    pub window_len: Option<usize>,
    /// STFT hop in samples [default: 16]
    #[arg(long)]
    pub hop: Option<usize>,
    /// STFT window: hann or rectangular [default: hann]
    #[arg(long)]
    pub window: Option<WindowFn>,
    /// Values R is taken over: cells (every |X|) or frame-sum [default: cells]
    #[arg(long)]
    pub aggregation: Option<StftAggregation>,
}

impl StftArgs {
    pub fn any(&self) -> bool {
        self.window_len.is_some()
            || self.hop.is_some()
            || self.window.is_some()
            || self.aggregation.is_some()
    }
}

pub fn gen_config(file: &FileConfig, args: &GenArgs) -> Result<GenConfig, CliError> {
    let d = GenConfig::default();
    let range = [
        file.message_freq_min_hz.unwrap_or(d.message_freq_range_hz[0]),
        file.message_freq_max_hz.unwrap_or(d.message_freq_range_hz[1]),
    ];
    let cfg = GenConfig {
        carrier_freq_hz: file.carrier_freq_hz.unwrap_or(d.carrier_freq_hz),
        sample_rate_hz: file.sample_rate_hz.unwrap_or(d.sample_rate_hz),
        duration_s: file.duration_s.unwrap_or(d.duration_s),
        noise_power: args.noise_power.or(file.noise_power).unwrap_or(d.noise_power),
        mod_index: args.mod_index.or(file.mod_index).unwrap_or(d.mod_index),
        message_freq_range_hz: range,
        message_amplitude: file.message_amplitude.unwrap_or(d.message_amplitude),
        ssb_sideband: file.ssb_sideband.unwrap_or(d.ssb_sideband),
        message_freq_sampling: file.message_freq_sampling.unwrap_or(d.message_freq_sampling),
    };
    cfg.validate().map_err(CliError::from)?;
    Ok(cfg)
}

/// `base` is what the STFT settings fall back to before file and flags,
/// normally the defaults, or a profile's stored settings when classifying.
pub fn stft_config(
    base: StftConfig,
    file: &FileConfig,
    args: &StftArgs,
    signal_len: Option<usize>,
) -> Result<StftConfig, CliError> {
    let cfg = StftConfig {
        window_len: args.window_len.or(file.window_len).unwrap_or(base.window_len),
        hop: args.hop.or(file.hop).unwrap_or(base.hop),
        window: args.window.or(file.window).unwrap_or(base.window),
        aggregation: args.aggregation.or(file.aggregation).unwrap_or(base.aggregation),
    };
    cfg.validate(signal_len).map_err(CliError::from)?;
    Ok(cfg)
}

pub fn file_has_stft(file: &FileConfig) -> bool {
    file.window_len.is_some() || file.hop.is_some() || file.window.is_some() || file.aggregation.is_some()
}

pub fn method(flag: Option<Method>, file: &FileConfig) -> Method {
    flag.or(file.method).unwrap_or(Method::Hilbert)
}

pub fn margin(flag: Option<f64>, file: &FileConfig) -> Result<f64, CliError> {
    let m = flag.or(file.margin).unwrap_or(0.0);
    if !(m.is_finite() && m >= 0.0) {
        return Err(CliError::usage(format!("margin: must be a nonnegative number, got {m}")));
    }
    Ok(m)
}

pub fn count(flag: Option<usize>, file_value: Option<usize>, default: usize, name: &str) -> Result<usize, CliError> {
    let c = flag.or(file_value).unwrap_or(default);
    if c == 0 {
        return Err(CliError::usage(format!("{name}: must be at least 1")));
    }
    Ok(c)
}

pub fn path_or(flag: &Option<PathBuf>, default: &str) -> PathBuf {
    flag.clone().unwrap_or_else(|| PathBuf::from(default))
}
