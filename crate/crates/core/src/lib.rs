//! Grover-based amplitude estimation without phase estimation.
//!
//! - [`math`]: angle/probability maps and period inversion.
//! - [`oracle`]: the measurement abstraction and its seeded binomial
//!   reference implementation.
//! - [`adaptive`]: the adaptive interval estimator.
//! - [`baselines`]: MLAE and an IQAE reference reimplementation.
//! - [`bench`]: experiment grids, aggregation, slope fits and reports.

pub mod adaptive;
pub mod baselines;
pub mod bench;
pub mod error;
pub mod math;
pub mod oracle;

pub use error::{Error, Result};
