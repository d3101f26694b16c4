//! Adaptive interval estimation of an amplitude using Grover iterations only.
//!
//! Each round `t` runs at a fixed Grover depth `m_t` and adjustment factor
//! `r_t`, growing the sample in batches of `n_shots` until the θ-interval is
//! narrower than `1/K` of a period at depth `m_t`. The next depth is the
//! largest one whose period still covers the interval, and when the interval
//! straddles a period boundary the next round scales the good amplitude by
//! `√r_{t+1}` so that its upper end lands exactly on that boundary.
//!
//! Half-widths come from Hoeffding's inequality with a `Σ 1/j²` union bound
//! over batch counts, so the coverage guarantee survives the data-dependent
//! stopping inside each round.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{
    asin_sqrt, invert_interval, DOMAIN_TOL, period_width, stretch_angle, PeriodIndex, ProbInterval,
    ThetaInterval,
};
use crate::oracle::GroverOracle;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveConfig {
    /// Target width of the output interval for `p`.
    pub epsilon: f64,
    /// One minus the confidence level.
    pub alpha: f64,
    /// Minimum geometric growth of `2m+1` between rounds. Odd, at least 3.
    pub k: u64,
    pub n_shots: u64,
    /// Hard cap on batches per round; `None` uses
    /// [`default_max_inner_iterations`].
    pub max_inner_iterations: Option<u64>,
    /// Estimate `p/2` instead of `p` (one extra fair ancilla), which lifts
    /// the `p ≤ 1/2` requirement. Output endpoints are doubled.
    pub halve_input: bool,
}

impl AdaptiveConfig {
    /// Defaults: `K = 3`, 100 shots per batch, input halving on.
    pub fn new(epsilon: f64, alpha: f64) -> Self {
        Self {
            epsilon,
            alpha,
            k: 3,
            n_shots: 100,
            max_inner_iterations: None,
            halve_input: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Config(format!("epsilon must be in (0, 1), got {}", self.epsilon)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must be in (0, 1), got {}", self.alpha)));
        }
        if self.k < 3 || self.k.is_multiple_of(2) {
            return Err(Error::Config(format!("K must be odd and >= 3, got {}", self.k)));
        }
        if self.n_shots == 0 {
            return Err(Error::Config("n_shots must be positive".into()));
        }
        if self.max_inner_iterations == Some(0) {
            return Err(Error::Config("max_inner_iterations must be positive".into()));
        }
        Ok(())
    }

    /// Precision the inner algorithm works to: `ε/2` when halving, since
    /// the endpoints are doubled on the way out.
    fn internal_epsilon(&self) -> f64 {
        if self.halve_input {
            self.epsilon / 2.0
        } else {
            self.epsilon
        }
    }
}

/// Everything observed and derived in one round, at the point its repeat
/// loop exited.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundState {
    pub t: usize,
    pub m: u64,
    pub r: f64,
    pub k_hat: u64,
    /// Cumulative shots `N_t = j · n_shots`.
    pub n: u64,
    /// Cumulative good count `X_t`.
    pub x: u64,
    /// Batches taken in this round.
    pub j: u64,
    pub delta: f64,
    /// `[L_t, U_t]` for `sin²((2m_t+1)θ_t)`.
    pub ci_raw: ProbInterval,
    /// Interval for the adjusted angle `θ_t = arcsin √(r_t p)` inside period
    /// `k_hat`, before the cap.
    pub theta_adjusted: ThetaInterval,
    /// Interval for `θ` after capping and rescaling.
    pub theta_iv: ThetaInterval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub interval: ProbInterval,
    pub n_oracle: u64,
    pub total_shots: u64,
    pub rounds: Vec<RoundState>,
    pub stopped_at: usize,
    /// Repeat-loop iterations summed over rounds.
    pub classical_ops: u64,
    /// Upper bound on the round index used for the union bound.
    pub t_max: u64,
    pub halved: bool,
}

impl EstimationResult {
    pub fn mean_r(&self) -> f64 {
        self.rounds.iter().map(|s| s.r).sum::<f64>() / self.rounds.len() as f64
    }

    pub fn worst_r(&self) -> f64 {
        self.rounds.iter().map(|s| s.r).fold(1.0, f64::min)
    }
}

/// `⌈log(π/(Kε)) / log K⌉`, floored at zero.
pub fn compute_t(epsilon: f64, k: u64) -> u64 {
    let x = (PI / (k as f64 * epsilon)).ln() / (k as f64).ln();
    let snapped = if (x - x.round()).abs() < 1e-9 { x.round() } else { x.ceil() };
    snapped.max(0.0) as u64
}

/// Hoeffding half-width after `j` batches, valid simultaneously over all
/// `j ≥ 1` and all `t_max + 1` rounds at total level `alpha`.
pub fn compute_delta(t_max: u64, alpha: f64, j: u64, n_shots: u64) -> f64 {
    let j = j as f64;
    let log_term = (PI * PI * (t_max as f64 + 1.0) / (3.0 * alpha) * j * j).ln();
    (log_term / (2.0 * j * n_shots as f64)).sqrt()
}

pub fn clamp_ci(x: u64, n: u64, delta: f64) -> ProbInterval {
    let mean = x as f64 / n as f64;
    let lo = (mean - delta).max(0.0);
    let hi = (mean + delta).min(1.0);
    ProbInterval { lo, hi: hi.max(lo) }
}

/// Cap both ends at `arcsin √(r/2)` (the image of `π/4`), then map back to
/// the unadjusted angle when `r < 1`. The result lies in `[0, π/4]`.
pub fn cap_and_rescale(iv: ThetaInterval, r: f64) -> Result<ThetaInterval> {
    let cap = asin_sqrt(r / 2.0);
    // A capped end maps to π/4 exactly; the round trip through arcsin would
    // land an ulp short. Ends within DOMAIN_TOL of the cap count as capped
    // (the cap often coincides with a period boundary computed another way).
    let end = |theta: f64| -> Result<f64> {
        if theta >= cap - DOMAIN_TOL {
            Ok(FRAC_PI_4)
        } else if r < 1.0 {
            stretch_angle(theta, r).map(|s| s.min(FRAC_PI_4))
        } else {
            Ok(theta)
        }
    };
    let lo = end(iv.lo)?;
    let hi = end(iv.hi)?;
    Ok(ThetaInterval { lo, hi: hi.max(lo) })
}

/// Largest `m` whose period width `π/(2(2m+1))` is at least the interval
/// width. A zero-width interval returns `m_max`.
pub fn next_m(iv: ThetaInterval, m_max: u64) -> u64 {
    let w = iv.width();
    if w <= 0.0 {
        return m_max;
    }
    let guess = (PI / 4.0) / w - 0.5;
    let mut m = if guess <= 0.0 { 0 } else { guess.floor() as u64 };
    // The floor can land one off when the width sits on a period width;
    // settle against the same predicate the repeat loop uses.
    while m > 0 && period_width(m) < w {
        m -= 1;
    }
    while period_width(m + 1) >= w {
        m += 1;
    }
    m
}

/// Period at depth `m_next` holding `theta_lo`. A point exactly on a
/// boundary belongs to the upper period.
pub fn next_period(theta_lo: f64, m_next: u64) -> PeriodIndex {
    let n = (2 * m_next + 1) as f64;
    let k = (2.0 * n * theta_lo / PI).floor().max(0.0) as u64;
    PeriodIndex {
        k: k.min(2 * m_next),
        depth: m_next,
    }
}

/// Adjustment factor for the next round: if the interval pokes past the
/// upper boundary of `period`, scale so that its upper end maps onto that
/// boundary; otherwise 1.
pub fn next_adjustment(iv: ThetaInterval, period: PeriodIndex) -> f64 {
    let boundary = period.upper_bound();
    if boundary < iv.hi {
        boundary.sin().powi(2) / iv.hi.sin().powi(2)
    } else {
        1.0
    }
}

/// Batch cap per round: four times the analytic bound on the number of
/// batches, evaluated at the smallest admissible adjustment `r = 1/4`.
pub fn default_max_inner_iterations(t_max: u64, alpha: f64, k: u64, n_shots: u64) -> u64 {
    let c = ((1.0f64 / 8.0).sqrt() / k as f64 * FRAC_PI_2).sin().powi(2);
    let n = n_shots as f64;
    let log_term = (PI * PI * (t_max as f64 + 1.0) / (3.0 * alpha)).ln();
    let a = (4.0 / (c * c * n) * log_term).ceil();
    let b = (64.0 / (c.powi(4) * n * n)).ceil();
    4 * a.max(b).max(1.0) as u64
}

/// `[sin² lo, sin² hi]` with the cap at `π/4` mapped to exactly 1/2, which
/// `sin²(π/4)` misses by an ulp.
fn capped_prob(iv: ThetaInterval) -> ProbInterval {
    let p = |theta: f64| {
        if theta >= FRAC_PI_4 {
            0.5
        } else {
            theta.sin().powi(2)
        }
    };
    ProbInterval {
        lo: p(iv.lo),
        hi: p(iv.hi),
    }
}

/// Width below which the repeat loop exits at depth `m`: `1/K` of a period.
fn exit_width(k: u64, m: u64) -> f64 {
    FRAC_PI_2 / (k * (2 * m + 1)) as f64
}

/// Run the adaptive estimator against `oracle`.
///
/// The oracle ledger is reset first; on return `n_oracle` and `total_shots`
/// are this run's totals.
pub fn run<O: GroverOracle + ?Sized>(
    config: &AdaptiveConfig,
    oracle: &mut O,
) -> Result<EstimationResult> {
    config.validate()?;
    oracle.reset_ledger();

    let eps = config.internal_epsilon();
    let t_max = compute_t(eps, config.k);
    let max_inner = config
        .max_inner_iterations
        .unwrap_or_else(|| default_max_inner_iterations(t_max, config.alpha, config.k, config.n_shots));
    // 2m+1 never needs to exceed π/ε.
    let m_max = ((PI / eps - 1.0) / 2.0).ceil().max(0.0) as u64;
    let input_scale = if config.halve_input { 0.5 } else { 1.0 };

    let mut m = 0u64;
    let mut r = 1.0f64;
    let mut k_hat = 0u64;
    let mut rounds = Vec::new();
    let mut classical_ops = 0u64;

    for t in 0..=t_max as usize {
        let period = PeriodIndex { k: k_hat, depth: m };
        let threshold = exit_width(config.k, m);
        let mut x = 0u64;
        let mut j = 0u64;
        let state = loop {
            j += 1;
            if j > max_inner {
                return Err(Error::InnerLoopExceeded {
                    round: t,
                    limit: max_inner,
                });
            }
            let batch = oracle.measure(m, r * input_scale, config.n_shots)?;
            x += batch.good_count;
            let n = j * config.n_shots;
            let delta = compute_delta(t_max, config.alpha, j, config.n_shots);
            let ci_raw = clamp_ci(x, n, delta);
            let theta_adjusted = invert_interval(ci_raw, period);
            let theta_iv = cap_and_rescale(theta_adjusted, r)?;
            classical_ops += 1;
            if theta_iv.width() <= threshold {
                break RoundState {
                    t,
                    m,
                    r,
                    k_hat,
                    n,
                    x,
                    j,
                    delta,
                    ci_raw,
                    theta_adjusted,
                    theta_iv,
                };
            }
        };

        let theta_iv = state.theta_iv;
        rounds.push(state);
        let p_iv = capped_prob(theta_iv);
        if t as u64 == t_max || p_iv.width() <= eps {
            break;
        }

        let m_next = next_m(theta_iv, m_max);
        let next = next_period(theta_iv.lo, m_next);
        r = next_adjustment(theta_iv, next);
        m = m_next;
        k_hat = next.k;
    }

    let last = rounds.last().expect("at least one round runs");
    let p_iv = capped_prob(last.theta_iv);
    let interval = if config.halve_input {
        ProbInterval {
            lo: (2.0 * p_iv.lo).min(1.0),
            hi: (2.0 * p_iv.hi).min(1.0),
        }
    } else {
        p_iv
    };
    let ledger = oracle.ledger();
    Ok(EstimationResult {
        interval,
        n_oracle: ledger.oracle_queries,
        total_shots: ledger.total_shots,
        stopped_at: last.t,
        rounds,
        classical_ops,
        t_max,
        halved: config.halve_input,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::shrink_angle;
    use crate::oracle::{AmplitudeProblem, BinomialOracle, ExactOracle};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_6;

    #[test]
    fn compute_t_examples() {
        assert_eq!(compute_t(PI / 9.0, 3), 1);
        assert_eq!(compute_t(1e-3, 3), 7);
        assert_eq!(compute_t(1e-6, 3), 13);
        assert_eq!(compute_t(0.9, 5), 0);
    }

    #[test]
    fn compute_delta_examples() {
        assert_abs_diff_eq!(compute_delta(7, 0.05, 1, 100), 0.17701, epsilon = 1e-4);
        assert_abs_diff_eq!(compute_delta(7, 0.05, 100, 100), 0.02785, epsilon = 1e-4);
        for j in 1..=10_000 {
            assert!(compute_delta(7, 0.05, 4 * j, 100) < compute_delta(7, 0.05, j, 100));
        }
    }

    #[test]
    fn clamp_ci_examples() {
        assert_eq!(clamp_ci(0, 100, 0.3), ProbInterval { lo: 0.0, hi: 0.3 });
        let c = clamp_ci(100, 100, 0.3);
        assert_abs_diff_eq!(c.lo, 0.7, epsilon = 1e-15);
        assert_eq!(c.hi, 1.0);
        let c = clamp_ci(50, 100, 0.17701);
        assert_abs_diff_eq!(c.lo, 0.32299, epsilon = 1e-12);
        assert_abs_diff_eq!(c.hi, 0.67701, epsilon = 1e-12);
    }

    #[test]
    fn cap_and_rescale_examples() {
        let iv = cap_and_rescale(ThetaInterval { lo: 0.2, hi: 0.3 }, 1.0).unwrap();
        assert_eq!((iv.lo, iv.hi), (0.2, 0.3));
        // only the upper end is past the cap
        let iv = cap_and_rescale(ThetaInterval { lo: 0.7, hi: 0.9 }, 1.0).unwrap();
        assert_eq!(iv.lo, 0.7);
        assert_abs_diff_eq!(iv.hi, FRAC_PI_4, epsilon = 1e-15);
        let iv = cap_and_rescale(ThetaInterval { lo: 0.3, hi: 0.4 }, 0.8).unwrap();
        assert_abs_diff_eq!(iv.lo, 0.336_729_076_646_405_4, epsilon = 1e-12);
        assert_abs_diff_eq!(iv.hi, 0.450_463_608_790_113_7, epsilon = 1e-12);
        assert_abs_diff_eq!(shrink_angle(iv.lo, 0.8), 0.3, epsilon = 1e-9);
        assert_abs_diff_eq!(shrink_angle(iv.hi, 0.8), 0.4, epsilon = 1e-9);
        // Past the cap at r < 1 the result is pinned at π/4.
        let iv = cap_and_rescale(ThetaInterval { lo: 0.5, hi: 0.9 }, 0.6).unwrap();
        assert_abs_diff_eq!(iv.hi, FRAC_PI_4, epsilon = 1e-12);
    }

    #[test]
    fn next_m_examples() {
        assert_eq!(next_m(ThetaInterval { lo: 0.0, hi: period_width(1) }, 99), 1);
        assert_eq!(next_m(ThetaInterval { lo: 0.0, hi: period_width(1) * (1.0 + 1e-12) }, 99), 0);
        assert_eq!(next_m(ThetaInterval { lo: 0.3, hi: 0.4 }, 99), 7);
        assert_eq!(next_m(ThetaInterval { lo: 0.0, hi: FRAC_PI_2 }, 99), 0);
        assert_eq!(next_m(ThetaInterval { lo: 0.4, hi: 0.4 }, 99), 99);
        assert!(period_width(7) >= 0.1 - 1e-15 && period_width(8) < 0.1);
    }

    #[test]
    fn next_m_is_largest_admissible() {
        for i in 1..5000 {
            let w = i as f64 * 1e-4;
            let m = next_m(ThetaInterval { lo: 0.0, hi: w }, u64::MAX);
            assert!(period_width(m) >= w);
            assert!(period_width(m + 1) < w);
        }
    }

    #[test]
    fn next_period_examples() {
        assert_eq!(next_period(0.0, 5).k, 0);
        assert_eq!(next_period(0.4636, 1).k, 0);
        assert_eq!(next_period(0.55, 1).k, 1);
        // boundary ties go up
        assert_eq!(next_period(FRAC_PI_2 / 3.0 * 2.0, 1).k, 2);
        assert_eq!(next_period(FRAC_PI_2, 1).k, 2);
    }

    #[test]
    fn next_adjustment_examples() {
        let p = PeriodIndex { k: 0, depth: 1 };
        assert_eq!(next_adjustment(ThetaInterval { lo: 0.1, hi: 0.5 }, p), 1.0);
        let r = next_adjustment(ThetaInterval { lo: 0.50, hi: 0.55 }, p);
        assert_abs_diff_eq!(r, 0.915_074_031_510_370_8, epsilon = 1e-12);
        assert_abs_diff_eq!(shrink_angle(0.55, r), FRAC_PI_6, epsilon = 1e-9);
    }

    #[test]
    fn default_cap_matches_bound() {
        // 4 · max(⌈218.36⌉, ⌈4857.55⌉) for T = 7, α = 0.05, K = 3, 100 shots
        assert_eq!(default_max_inner_iterations(7, 0.05, 3, 100), 4 * 4858);
    }

    #[test]
    fn config_validation() {
        let ok = AdaptiveConfig::new(1e-3, 0.05);
        assert!(ok.validate().is_ok());
        for bad in [
            AdaptiveConfig { epsilon: 0.0, ..ok.clone() },
            AdaptiveConfig { epsilon: 1.0, ..ok.clone() },
            AdaptiveConfig { alpha: 0.0, ..ok.clone() },
            AdaptiveConfig { k: 4, ..ok.clone() },
            AdaptiveConfig { k: 1, ..ok.clone() },
            AdaptiveConfig { n_shots: 0, ..ok.clone() },
            AdaptiveConfig { max_inner_iterations: Some(0), ..ok.clone() },
        ] {
            assert!(matches!(bad.validate(), Err(Error::Config(_))), "{bad:?}");
        }
    }

    fn exact(p: f64) -> ExactOracle {
        ExactOracle::new(AmplitudeProblem::new(p, "t").unwrap())
    }

    fn config(eps: f64) -> AdaptiveConfig {
        AdaptiveConfig {
            halve_input: false,
            ..AdaptiveConfig::new(eps, 0.05)
        }
    }

    #[test]
    fn zero_amplitude_hugs_zero() {
        let res = run(&config(1e-4), &mut exact(0.0)).unwrap();
        assert_eq!(res.interval.lo, 0.0);
        assert!(res.interval.hi <= 1e-4);
        let q: u64 = res.rounds.iter().map(|s| s.n * s.m).sum();
        assert_eq!(res.n_oracle, q);
    }

    #[test]
    fn exact_trace_p02() {
        let res = run(&config(1e-3), &mut exact(0.2)).unwrap();
        assert!(res.interval.contains(0.2));
        assert!(res.interval.width() <= 1e-3);
        for w in res.rounds.windows(2) {
            assert!(2 * w[1].m + 1 >= 3 * (2 * w[0].m + 1));
        }
        // frozen trace: (m, k_hat, j) per round
        let trace: Vec<(u64, u64, u64)> = res.rounds.iter().map(|s| (s.m, s.k_hat, s.j)).collect();
        assert_eq!(trace, GOLDEN_TRACE_P02);
    }

    const GOLDEN_TRACE_P02: &[(u64, u64, u64)] =
        &[(0, 0, 1), (1, 0, 2), (4, 2, 1), (17, 9, 1), (67, 39, 1), (289, 170, 1)];

    #[test]
    fn inner_loop_cap_is_enforced() {
        let cfg = AdaptiveConfig {
            max_inner_iterations: Some(1),
            ..config(1e-3)
        };
        // round 1 of the p = 0.2 trace needs two batches
        let err = run(&cfg, &mut exact(0.2)).unwrap_err();
        assert!(matches!(err, Error::InnerLoopExceeded { round: 1, limit: 1 }));
    }

    #[test]
    fn halving_covers_large_p() {
        for (i, p) in [0.6, 0.75, 0.93, 1.0].into_iter().enumerate() {
            let cfg = AdaptiveConfig::new(1e-4, 0.05);
            let mut o = BinomialOracle::new(AmplitudeProblem::new(p, "t").unwrap(), 100 + i as u64);
            let res = run(&cfg, &mut o).unwrap();
            assert!(res.halved);
            assert!(res.interval.contains(p), "p={p} {:?}", res.interval);
            assert!(res.interval.width() <= 1e-4);
        }
    }

    #[test]
    fn sampled_runs_respect_invariants() {
        for seed in 0..40u64 {
            let p = (seed as f64 + 0.5) / 80.0;
            let mut o = BinomialOracle::new(AmplitudeProblem::new(p, "t").unwrap(), seed);
            let res = run(&config(1e-5), &mut o).unwrap();
            assert!(res.interval.width() <= 1e-5);
            for (i, s) in res.rounds.iter().enumerate() {
                assert!(s.r >= 0.25 && s.r <= 1.0);
                assert_eq!(s.n, s.j * 100);
                assert!(s.theta_iv.hi <= FRAC_PI_4 + 1e-15);
                assert!(s.theta_iv.width() <= exit_width(3, s.m));
                let period = PeriodIndex { k: s.k_hat, depth: s.m };
                assert!(period.contains(&s.theta_adjusted, 1e-12));
                if let Some(next) = res.rounds.get(i + 1) {
                    assert!(2 * next.m + 1 >= 3 * (2 * s.m + 1));
                    let next_period = PeriodIndex { k: next.k_hat, depth: next.m };
                    let lo = shrink_angle(s.theta_iv.lo, next.r);
                    let hi = shrink_angle(s.theta_iv.hi, next.r);
                    if next.r < 1.0 {
                        assert_abs_diff_eq!(hi, next_period.upper_bound(), epsilon = 1e-9);
                    }
                    assert!(next_period.contains(&ThetaInterval { lo, hi }, 1e-9));
                }
            }
        }
    }
}
