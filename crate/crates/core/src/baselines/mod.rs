//! Comparators sharing the oracle interface and query ledger with the
//! adaptive estimator, so query counts and classical-op counts line up.
//!
//! The IQAE here is a reference reimplementation of the iterative scheme
//! (FINDNEXTK depth search plus a per-round binomial interval), not a
//! bit-compatible port of any published code.

mod clopper_pearson;
pub mod iqae;
pub mod mlae;

use serde::{Deserialize, Serialize};

use crate::math::ProbInterval;

pub use clopper_pearson::{beta_quantile, clopper_pearson};
pub use iqae::{run_iqae, run_iqae_traced, CiMethod, IqaeConfig, IqaeRound};
pub use mlae::{run_mlae, MlaeConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineResult {
    pub interval: ProbInterval,
    /// Point estimate, when the method produces one (MLAE).
    pub estimate: Option<f64>,
    pub n_oracle: u64,
    pub total_shots: u64,
    /// Likelihood evaluations (MLAE) or FINDNEXTK probes plus interval
    /// evaluations (IQAE).
    pub classical_ops: u64,
    /// MLAE: every count was 0 or N. IQAE: at least one round made no
    /// depth progress.
    pub flagged: bool,
}
