use num_complex::Complex64;

use super::fourier::{dft_in_place, idft_in_place};
use super::{Envelope, Method};
use crate::{Error, Result};

/// Complex sampled series; usually an analytic signal.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSeries {
    pub values: Vec<Complex64>,
    pub sample_rate_hz: f64,
}

impl ComplexSeries {
    pub fn analytic(signal: &[f64], sample_rate_hz: f64) -> Result<Self> {
        Ok(ComplexSeries {
            values: analytic_signal(signal)?,
            sample_rate_hz,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Analytic signal `s + j H{s}` by one-sided spectral masking.
///
/// Bin 0 (and bin N/2 for even N) pass unchanged, bins `1..ceil(N/2)` are
/// doubled and the remaining negative-frequency bins are zeroed.
pub fn analytic_signal(signal: &[f64]) -> Result<Vec<Complex64>> {
    let n = signal.len();
    if n < 2 {
        return Err(Error::TooShort { len: n, required: 2 });
    }
    let mut buf: Vec<Complex64> = signal.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    dft_in_place(&mut buf);

    // Strictly positive frequencies end before N/2 for even N.
    let positive_end = n.div_ceil(2);
    for v in &mut buf[1..positive_end] {
        *v *= 2.0;
    }
    let negative_start = n / 2 + 1;
    for v in &mut buf[negative_start..] {
        *v = Complex64::new(0.0, 0.0);
    }

    idft_in_place(&mut buf);
    Ok(buf)
}

/// Instantaneous amplitude `|s + j H{s}|`, one value per input sample.
pub fn envelope_hilbert(signal: &[f64]) -> Result<Envelope> {
    let values = analytic_signal(signal)?.iter().map(|z| z.norm()).collect();
    Ok(Envelope {
        values,
        source: Method::Hilbert,
    })
}
