//! Uplink simulation library for large-array receivers with coarse
//! analog-to-digital conversion.
//!
//! The crate is organized around the signal path of a multi-user uplink:
//!
//! * [`quant`] — uniform mid-rise quantizers, the probability law of their
//!   outputs under Gaussian observation noise, and the equivalent (averaged)
//!   transfer function that turns the nonlinear front end into an additive
//!   noise model.
//! * [`signal`] — Gray-labeled square QAM constellations, channel matrices
//!   (line-of-sight steering vectors and i.i.d. Rayleigh), and the SNR
//!   bookkeeping that maps an operating point to a noise variance.
//! * [`rx`] — maximum-ratio combining and the detectors that act on it:
//!   a table-driven quadratic detector (with either a transparent-front-end
//!   or an equivalent-transfer-function table) and an exact per-antenna
//!   likelihood search, plus multiply-count models for both.
//! * [`mc`] — reproducible Monte-Carlo bit-error-rate sweeps and the scatter
//!   data used to visualize combiner outputs, with Wilson score intervals.
//!
//! All randomness flows through caller-seeded generators; every simulation
//! entry point is deterministic given its configuration.

pub mod error;
pub mod mc;
pub mod quant;
pub mod rx;
pub mod signal;

pub use error::{Error, Result};
