//! Micrometeorological station series: gap analysis, interpolation, model-based
//! gap filling, quality control and a benchmarking harness.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix the common double-precision instantiations.

pub mod bench;
pub mod gapfill;
pub mod gapgen;
pub mod interp;
pub mod linalg;
pub mod obs;
pub mod qc;
pub mod rng;
pub mod scalar;
pub mod synthetic;

pub use scalar::Scalar;

pub type Series = obs::TimeSeries<f64>;
pub type Series32 = obs::TimeSeries<f32>;
