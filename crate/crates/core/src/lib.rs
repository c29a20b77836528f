//! Pivoted and non-pivoted bootstrap confidence intervals for time averages
//! of chaotic interval maps.
//!
//! The crate simulates the example maps with shadowing perturbations, fits
//! piecewise spline estimates of the transformation, resamples initial
//! states from a kernel density estimate, and builds bootstrap, Gaussian
//! and Student-t intervals for the spatial average of an observable. The
//! [`harness`] module drives the coverage study.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bootstrap;
pub mod density;
pub mod dynsys;
pub mod edgeworth;
pub mod error;
pub mod harness;
pub mod rng;
pub mod spline;
pub mod stats;

pub use error::{Error, Result};
