//! Iterative amplitude estimation, reference reimplementation.
//!
//! Every round measures one batch at the current depth, pools it with the
//! earlier batches at that depth, builds an interval for `sin²((2m+1)θ)` and
//! inverts it on the period established when the depth was chosen. The next
//! depth comes from FINDNEXTK: start at the largest depth the interval width
//! allows and step down until the interval sits inside one period, giving up
//! (and resampling at the current depth) once `2m+1` would fall below twice
//! its current value.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{clopper_pearson, BaselineResult};
use crate::adaptive::{clamp_ci, compute_delta, next_m, next_period};
use crate::error::{Error, Result};
use crate::math::{invert_interval, PeriodIndex, ThetaInterval};
use crate::oracle::GroverOracle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    ChernoffHoeffding,
    ClopperPearson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IqaeConfig {
    pub epsilon: f64,
    pub alpha: f64,
    pub n_shots: u64,
    pub ci_method: CiMethod,
    /// Safety cap on rounds; `None` means 1_000_000.
    pub max_rounds: Option<u64>,
}

impl IqaeConfig {
    pub fn new(epsilon: f64, alpha: f64, n_shots: u64, ci_method: CiMethod) -> Self {
        Self {
            epsilon,
            alpha,
            n_shots,
            ci_method,
            max_rounds: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Config(format!("epsilon must be in (0, 1), got {}", self.epsilon)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must be in (0, 1), got {}", self.alpha)));
        }
        if self.n_shots == 0 {
            return Err(Error::Config("n_shots must be positive".into()));
        }
        Ok(())
    }

    /// Number of distinct depths the error budget is split over:
    /// `⌈log₂(π/(8ε))⌉`, at least 1.
    pub fn round_budget(&self) -> u64 {
        (PI / (8.0 * self.epsilon)).log2().ceil().max(1.0) as u64
    }
}

/// Chernoff-Hoeffding half-width after `j` pooled batches at one depth:
/// the adaptive estimator's formula with its `T + 1` replaced by `budget`.
pub fn chernoff_half_width(budget: u64, alpha: f64, j: u64, n_shots: u64) -> f64 {
    compute_delta(budget - 1, alpha, j, n_shots)
}

/// Does `iv` lie inside a single period of `sin²((2m+1)θ)`?
pub fn fits_one_period(iv: ThetaInterval, m: u64) -> Option<PeriodIndex> {
    let period = next_period(iv.lo, m);
    (iv.hi <= period.upper_bound()).then_some(period)
}

/// FINDNEXTK. Returns the chosen depth, its period, and the number of
/// depths probed. Falls back to `current` when nothing at least doubles
/// `2m+1`.
pub fn find_next_m(iv: ThetaInterval, current: u64) -> (u64, Option<PeriodIndex>, u64) {
    let floor = 2 * current + 1;
    let mut probes = 0;
    let mut m = next_m(iv, u64::MAX / 4);
    while m >= floor {
        probes += 1;
        if let Some(period) = fits_one_period(iv, m) {
            return (m, Some(period), probes);
        }
        m -= 1;
    }
    (current, None, probes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IqaeRound {
    pub m: u64,
    pub period: PeriodIndex,
    /// Pooled shots and good counts at this depth so far.
    pub shots: u64,
    pub good: u64,
    pub theta_iv: ThetaInterval,
    /// FINDNEXTK found nothing and the depth was kept.
    pub stalled: bool,
    pub probes: u64,
}

pub fn run_iqae<O: GroverOracle + ?Sized>(
    config: &IqaeConfig,
    oracle: &mut O,
) -> Result<BaselineResult> {
    run_iqae_traced(config, oracle).map(|(res, _)| res)
}

pub fn run_iqae_traced<O: GroverOracle + ?Sized>(
    config: &IqaeConfig,
    oracle: &mut O,
) -> Result<(BaselineResult, Vec<IqaeRound>)> {
    config.validate()?;
    oracle.reset_ledger();
    let budget = config.round_budget();
    let max_rounds = config.max_rounds.unwrap_or(1_000_000);

    let mut m = 0u64;
    let mut period = PeriodIndex { k: 0, depth: 0 };
    let (mut good, mut j) = (0u64, 0u64);
    let mut classical_ops = 0u64;
    let mut flagged = false;
    let mut trace = Vec::new();

    for _ in 0..max_rounds {
        good += oracle.measure(m, 1.0, config.n_shots)?.good_count;
        j += 1;
        let shots = j * config.n_shots;
        let ci = match config.ci_method {
            CiMethod::ChernoffHoeffding => clamp_ci(
                good,
                shots,
                chernoff_half_width(budget, config.alpha, j, config.n_shots),
            ),
            CiMethod::ClopperPearson => clopper_pearson(good, shots, config.alpha / budget as f64),
        };
        classical_ops += 1;
        let theta_iv = invert_interval(ci, period);
        let p_iv = theta_iv.to_prob();

        let mut round = IqaeRound {
            m,
            period,
            shots,
            good,
            theta_iv,
            stalled: false,
            probes: 0,
        };
        if p_iv.width() <= config.epsilon {
            trace.push(round);
            let ledger = oracle.ledger();
            let res = BaselineResult {
                interval: p_iv,
                estimate: None,
                n_oracle: ledger.oracle_queries,
                total_shots: ledger.total_shots,
                classical_ops,
                flagged,
            };
            return Ok((res, trace));
        }

        let (m_next, next, probes) = find_next_m(theta_iv, m);
        classical_ops += probes;
        round.probes = probes;
        match next {
            Some(p) => {
                m = m_next;
                period = p;
                good = 0;
                j = 0;
            }
            None => {
                round.stalled = true;
                flagged = true;
            }
        }
        trace.push(round);
    }
    Err(Error::RoundLimit {
        method: "iqae",
        limit: max_rounds,
    })
}
