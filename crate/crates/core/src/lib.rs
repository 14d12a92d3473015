//! Jointly optimum detection and parameter estimation.
//!
//! The crate provides, generically over a scalar type (`f32`/`f64`):
//!
//! * [`detest`] — posterior summaries, the coupled single-step test, the
//!   two-step test (likelihood-ratio detection plus a reliability check), and
//!   Monte-Carlo threshold calibration for both;
//! * [`changepoint`] — retrospective changepoint detection in a Gaussian
//!   sequence as a [`detest::JointModel`];
//! * [`radar`] — a multistatic radar scene whose target-position grid forms a
//!   [`detest::JointModel`], with matched filtering against fading and noise;
//! * [`oracle`] — slow, independent re-derivations of the key identities,
//!   runnable as self-check suites;
//! * [`harness`] — seeded Monte-Carlo driving: calibration, evaluation
//!   sweeps over reliability fractions, CSV export.
//!
//! The generic machinery keys on [`num::Real`]; the common concrete choices
//! are aliased at the crate root (`ThresholdSet64` and friends).

pub mod changepoint;
pub mod detest;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod logdomain;
pub mod num;
pub mod oracle;
pub mod radar;
pub mod serialize;

pub use error::{Error, Result};
pub use num::Real;

/// `f64` instantiations of the core types.
pub type PosteriorSummary64 = detest::PosteriorSummary<f64>;
pub type Decision64 = detest::Decision<f64>;
pub type ThresholdSet64 = detest::ThresholdSet<f64>;
pub type SignedLog64 = logdomain::SignedLog<f64>;
pub type ChangepointModel64 = changepoint::ChangepointModel<f64>;
pub type RadarModel64 = radar::RadarModel<f64>;

/// `f32` instantiations, for callers trading precision for footprint.
pub type PosteriorSummary32 = detest::PosteriorSummary<f32>;
pub type Decision32 = detest::Decision<f32>;
pub type ThresholdSet32 = detest::ThresholdSet<f32>;
pub type SignedLog32 = logdomain::SignedLog<f32>;
pub type ChangepointModel32 = changepoint::ChangepointModel<f32>;
pub type RadarModel32 = radar::RadarModel<f32>;
