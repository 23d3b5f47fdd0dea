use std::path::PathBuf;

use crate::dsp::Method;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error("frequency {freq_hz} Hz outside (0, {nyquist_hz}) Hz")]
    InvalidFrequency { freq_hz: f64, nyquist_hz: f64 },

    #[error("length mismatch: expected {expected} samples, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("input of length {len} shorter than required {required}")]
    TooShort { len: usize, required: usize },

    #[error("empty input")]
    Empty,

    #[error("envelope mean is zero; R is undefined for an all-zero signal")]
    ZeroMeanEnvelope,

    #[error("method mismatch: expected {expected}, got {actual}")]
    MethodMismatch { expected: Method, actual: Method },

    #[error("insufficient samples for {what}: need at least {required}, got {actual}")]
    InsufficientSamples {
        what: String,
        required: usize,
        actual: usize,
    },

    #[error("degenerate interval for {class}: all calibration R values equal {value}")]
    DegenerateInterval { class: String, value: f64 },

    #[error("format error{}: {msg}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Format { line: Option<usize>, msg: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn format(line: Option<usize>, msg: impl Into<String>) -> Self {
        Error::Format {
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
