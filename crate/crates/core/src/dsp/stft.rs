use num_complex::Complex64;

use super::fourier::dft_in_place;
use super::{analytic_signal, Envelope, Method, StftAggregation, StftConfig};
use crate::Result;

/// Complex time-frequency matrix, stored frame-major: frame `t` occupies
/// `bins[t * window_len .. (t + 1) * window_len]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    bins: Vec<Complex64>,
    frames: usize,
    pub config: StftConfig,
}

impl Spectrogram {
    pub fn frame_count(&self) -> usize {
        self.frames
    }

    pub fn bin_count(&self) -> usize {
        self.config.window_len
    }

    pub fn frame(&self, t: usize) -> &[Complex64] {
        let l = self.config.window_len;
        &self.bins[t * l..(t + 1) * l]
    }

    pub fn get(&self, bin: usize, frame: usize) -> Complex64 {
        self.frame(frame)[bin]
    }

    pub fn frames(&self) -> impl Iterator<Item = &[Complex64]> {
        self.bins.chunks_exact(self.config.window_len)
    }

    /// `sum_f |X(f, t)|` for every frame.
    pub fn frame_magnitude_sums(&self) -> Vec<f64> {
        self.frames()
            .map(|f| f.iter().map(|v| v.norm()).sum())
            .collect()
    }

    /// All magnitudes, frame-major.
    pub fn magnitudes(&self) -> Vec<f64> {
        self.bins.iter().map(|v| v.norm()).collect()
    }

    /// Index of the first sample of frame `t`.
    pub fn frame_start(&self, t: usize) -> usize {
        t * self.config.hop
    }
}

/// Windowed, hopped DFT. Only full frames are produced; trailing samples that
/// do not fill a window are dropped.
pub fn stft(series: &[Complex64], config: &StftConfig) -> Result<Spectrogram> {
    config.validate(Some(series.len()))?;
    let window = config.window.coefficients(config.window_len);
    let frames = config.frame_count(series.len());
    let mut bins = Vec::with_capacity(frames * config.window_len);
    for t in 0..frames {
        let start = t * config.hop;
        let seg = &series[start..start + config.window_len];
        let offset = bins.len();
        bins.extend(seg.iter().zip(&window).map(|(s, w)| s * w));
        dft_in_place(&mut bins[offset..]);
    }
    Ok(Spectrogram {
        bins,
        frames,
        config: *config,
    })
}

/// Analytic signal, then STFT, then magnitude reduction per
/// [`StftConfig::aggregation`].
pub fn envelope_stft(signal: &[f64], config: &StftConfig) -> Result<Envelope> {
    config.validate(Some(signal.len()))?;
    let spec = stft(&analytic_signal(signal)?, config)?;
    let values = match config.aggregation {
        StftAggregation::Cells => spec.magnitudes(),
        StftAggregation::FrameSum => spec.frame_magnitude_sums(),
    };
    Ok(Envelope {
        values,
        source: Method::Stft,
    })
}
