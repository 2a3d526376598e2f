//! Lossy wave propagation with fractional-derivative damping.
//!
//! Operators live in [`frac_calculus`] and [`frac_laplacian`], time-domain
//! integrators in [`wave_models`] and [`burgers_models`], plane-wave analysis
//! in [`dispersion`], end-to-end experiments in [`attenuation_lab`], and the
//! command-line front end in [`cli`].

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attenuation_lab;
pub mod burgers_models;
pub mod cli;
pub mod config;
pub mod dispersion;
pub mod error;
pub mod frac_calculus;
pub mod frac_laplacian;
pub mod output;
mod par;
pub mod wave_models;

pub use error::{Error, Result};
pub use frac_calculus::FracOrder;
pub use frac_laplacian::{Boundary, Grid1D};
pub use wave_models::{MediumParams, ModelKind};
