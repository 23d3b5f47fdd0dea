//! The R statistic: `Var(A) / Mean(A)^2` of an envelope, using the
//! population (1/n) variance.

use serde::{Deserialize, Serialize};

use crate::dsp::{envelope_hilbert, envelope_stft, Envelope, Method, StftConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RValue {
    pub value: f64,
    pub method: Method,
    pub n_points: usize,
}

pub fn mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty);
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Population variance, two-pass.
pub fn variance(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::InsufficientSamples {
            what: "variance".into(),
            required: 2,
            actual: values.len(),
        });
    }
    let m = mean(values)?;
    Ok(values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64)
}

pub fn r_value(envelope: &Envelope) -> Result<RValue> {
    let var = variance(&envelope.values)?;
    let m = mean(&envelope.values)?;
    if m <= 0.0 {
        return Err(Error::ZeroMeanEnvelope);
    }
    Ok(RValue {
        value: var / (m * m),
        method: envelope.source,
        n_points: envelope.len(),
    })
}

/// Envelope extraction followed by [`r_value`]. `stft` is ignored for the
/// Hilbert pipeline.
pub fn r_pipeline(samples: &[f64], method: Method, stft: &StftConfig) -> Result<RValue> {
    let env = match method {
        Method::Hilbert => envelope_hilbert(samples)?,
        Method::Stft => envelope_stft(samples, stft)?,
    };
    r_value(&env)
}
