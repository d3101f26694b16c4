//! Angle/probability transforms and period bookkeeping.
//!
//! Measuring the good-state flag after `m` Grover iterations succeeds with
//! probability `sin²((2m+1)θ)` where `θ = arcsin √p`. Over `[0, π/2]` that map
//! is monotone on each of the `2m+1` "periods" of width `π/(2(2m+1))`, which
//! is what makes interval inversion well defined once the period is known.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Drift tolerated on arcsin/probability inputs before we call it a bug.
pub const DOMAIN_TOL: f64 = 1e-12;

/// Snap `x` into `[0, 1]` if it is within [`DOMAIN_TOL`] of it.
pub(crate) fn clamp_unit(what: &'static str, x: f64) -> Result<f64> {
    if (-DOMAIN_TOL..=1.0 + DOMAIN_TOL).contains(&x) {
        Ok(x.clamp(0.0, 1.0))
    } else {
        Err(Error::Domain { what, value: x })
    }
}

fn clamp_angle(what: &'static str, theta: f64) -> Result<f64> {
    if (-DOMAIN_TOL..=FRAC_PI_2 + DOMAIN_TOL).contains(&theta) {
        Ok(theta.clamp(0.0, FRAC_PI_2))
    } else {
        Err(Error::Domain { what, value: theta })
    }
}

/// `arcsin √x` for `x` already known to be in `[0, 1]`.
#[inline]
pub(crate) fn asin_sqrt(x: f64) -> f64 {
    x.clamp(0.0, 1.0).sqrt().asin()
}

/// Closed angle interval inside `[0, π/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaInterval {
    pub lo: f64,
    pub hi: f64,
}

impl ThetaInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        let lo = clamp_angle("theta interval lower end", lo)?;
        let hi = clamp_angle("theta interval upper end", hi)?;
        if lo > hi + DOMAIN_TOL {
            return Err(Error::Domain {
                what: "theta interval (lo > hi)",
                value: lo - hi,
            });
        }
        Ok(Self { lo, hi: hi.max(lo) })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Probability interval `[sin² lo, sin² hi]`.
    pub fn to_prob(&self) -> ProbInterval {
        ProbInterval {
            lo: self.lo.sin().powi(2),
            hi: self.hi.sin().powi(2),
        }
    }
}

/// Closed probability interval inside `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbInterval {
    pub lo: f64,
    pub hi: f64,
}

impl ProbInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        let lo = clamp_unit("probability interval lower end", lo)?;
        let hi = clamp_unit("probability interval upper end", hi)?;
        if lo > hi + DOMAIN_TOL {
            return Err(Error::Domain {
                what: "probability interval (lo > hi)",
                value: lo - hi,
            });
        }
        Ok(Self { lo, hi: hi.max(lo) })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, p: f64) -> bool {
        self.lo <= p && p <= self.hi
    }
}

/// Period `k` of `sin²((2m+1)θ)`, i.e. `[k, k+1]·π/(2(2m+1))`.
///
/// Stores the Grover depth `m` rather than the width so the boundaries are
/// always computed from integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodIndex {
    pub k: u64,
    pub depth: u64,
}

impl PeriodIndex {
    pub fn new(k: u64, depth: u64) -> Result<Self> {
        if k > 2 * depth {
            return Err(Error::Config(format!(
                "period index {k} exceeds 2m = {}",
                2 * depth
            )));
        }
        Ok(Self { k, depth })
    }

    /// `2m + 1`.
    pub fn multiplier(&self) -> f64 {
        odd_multiplier(self.depth)
    }

    pub fn lower_bound(&self) -> f64 {
        self.k as f64 * FRAC_PI_2 / self.multiplier()
    }

    pub fn upper_bound(&self) -> f64 {
        (self.k + 1) as f64 * FRAC_PI_2 / self.multiplier()
    }

    pub fn contains(&self, iv: &ThetaInterval, tol: f64) -> bool {
        iv.lo >= self.lower_bound() - tol && iv.hi <= self.upper_bound() + tol
    }
}

#[inline]
pub fn odd_multiplier(m: u64) -> f64 {
    (2 * m + 1) as f64
}

/// Width of one period at depth `m`: `π / (2(2m+1))`.
#[inline]
pub fn period_width(m: u64) -> f64 {
    FRAC_PI_2 / odd_multiplier(m)
}

pub fn theta_from_p(p: f64) -> Result<f64> {
    Ok(asin_sqrt(clamp_unit("probability", p)?))
}

pub fn p_from_theta(theta: f64) -> Result<f64> {
    let theta = clamp_angle("angle", theta)?;
    Ok(theta.sin().powi(2))
}

/// Success probability `sin²((2m+1)·arcsin √(r·p))` of one shot after `m`
/// Grover iterations on a state whose good amplitude was scaled by `√r`.
pub fn grover_probability(p: f64, m: u64, r: f64) -> Result<f64> {
    let p = clamp_unit("probability", p)?;
    if !(r > 0.0 && r <= 1.0 + DOMAIN_TOL) {
        return Err(Error::Domain {
            what: "adjustment factor",
            value: r,
        });
    }
    let scaled = clamp_unit("adjusted probability r*p", r * p)?;
    Ok((odd_multiplier(m) * asin_sqrt(scaled)).sin().powi(2))
}

/// Invert a confidence interval for `sin²((2m+1)θ)` into the unique
/// θ-interval inside the given period.
///
/// On even periods the map is increasing, on odd periods decreasing, so the
/// endpoints swap roles. The result is clamped onto the period to absorb
/// last-bit rounding.
pub fn invert_interval(ci: ProbInterval, period: PeriodIndex) -> ThetaInterval {
    let n = period.multiplier();
    let (lo_num, hi_num) = if period.k.is_multiple_of(2) {
        let base = period.k as f64 * FRAC_PI_2;
        (asin_sqrt(ci.lo) + base, asin_sqrt(ci.hi) + base)
    } else {
        let base = (period.k + 1) as f64 * FRAC_PI_2;
        (base - asin_sqrt(ci.hi), base - asin_sqrt(ci.lo))
    };
    let (plo, phi) = (period.lower_bound(), period.upper_bound());
    let lo = (lo_num / n).clamp(plo, phi);
    let hi = (hi_num / n).clamp(plo, phi);
    ThetaInterval { lo, hi: hi.max(lo) }
}

/// `θ ↦ arcsin √(r·sin²θ)`. Contracts distances for `r ≤ 1`.
pub fn shrink_angle(theta: f64, r: f64) -> f64 {
    asin_sqrt(r * theta.sin().powi(2))
}

/// `θ ↦ arcsin √(sin²θ / r)`, the inverse of [`shrink_angle`].
///
/// Callers cap `sin²θ / r` at 1/2 first; anything past 1 means the cap was
/// skipped.
pub fn stretch_angle(theta: f64, r: f64) -> Result<f64> {
    if !(r > 0.0 && r <= 1.0 + DOMAIN_TOL) {
        return Err(Error::Domain {
            what: "adjustment factor",
            value: r,
        });
    }
    let x = clamp_unit("stretched probability sin^2(theta)/r", theta.sin().powi(2) / r)?;
    Ok(asin_sqrt(x))
}

/// `arcsin √|p1 − p2|`, an upper bound on `|arcsin √p1 − arcsin √p2|`.
pub fn arcsin_sqrt_diff_bound(p1: f64, p2: f64) -> f64 {
    asin_sqrt((p1 - p2).abs())
}
