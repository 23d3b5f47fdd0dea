//! Modulation classification for analog AM, DSB and SSB signals from a single
//! envelope statistic.
//!
//! The statistic is `R = Var(A) / Mean(A)^2` of an amplitude envelope `A`. Two
//! envelope pipelines are provided:
//!
//! * [`Method::Hilbert`]: modulus of the analytic signal, one value per sample.
//! * [`Method::Stft`]: short-time Fourier transform of the analytic signal,
//!   reduced to magnitudes (see [`StftAggregation`]).
//!
//! Per-class R intervals are calibrated from labeled synthetic data
//! ([`classifier::calibrate`]) and used to map new R values to AM, DSB, SSB or
//! Unknown ([`classifier::classify_r`]).
//!
//! ```
//! use rmod_core::siggen::{generate_record, GenConfig, ModulationClass};
//! use rmod_core::{rstat, Method, StftConfig};
//!
//! let cfg = GenConfig { noise_power: 0.0, ..GenConfig::default() };
//! let rec = generate_record(ModulationClass::Ssb, 7, &cfg).unwrap();
//! let r = rstat::r_pipeline(&rec.samples, Method::Hilbert, &StftConfig::default()).unwrap();
//! assert!(r.value < 1e-10);
//! ```

pub mod classifier;
pub mod dsp;
pub mod error;
pub mod eval;
pub mod rstat;
pub mod siggen;

pub use dsp::{Envelope, Method, StftAggregation, StftConfig, WindowFn};
pub use error::{Error, Result};
pub use rstat::RValue;
pub use siggen::{GenConfig, ModulationClass, SignalRecord};
