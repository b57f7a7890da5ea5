//! Fractional diffusive delay `exp(-(L s)^alpha)` and the
//! first-order-plus-FDD process model.
//!
//! * [`fdd`]: frequency response, series impulse response and its
//!   diagnostics.
//! * [`ilt`]: contour inverse Laplace transform used as an independent check
//!   and for fractional-pole step responses.
//! * [`ladder`]: n-stage RC ladder reference systems.
//! * [`models`]: FOPDT, FO²PDT and FOPFDD model families.
//! * [`fitting`]: two-objective Bode fitting over a weighted-sum Pareto
//!   front.
//! * [`analysis`]: step-response errors and the end-to-end table pipeline.

pub mod analysis;
pub mod error;
#[cfg(feature = "mpfr")]
mod extended;
pub mod fdd;
pub mod fitting;
pub mod ilt;
pub mod ladder;
pub mod models;
pub mod signal;

pub use error::{Error, Result};
pub use fdd::{Arithmetic, FddParams, SeriesConfig};
pub use signal::{FrequencyResponseSamples, SampledSignal, TimeGrid};
