//! Maximum-likelihood amplitude estimation on the exponential schedule
//! `m = 0, 1, 2, 4, …, 2^(T−1)`.
//!
//! The likelihood is maximised by a uniform θ-grid search followed by a
//! golden-section refinement around the best grid point; the interval is the
//! likelihood-ratio set `{θ : 2(ℓ̂ − ℓ(θ)) ≤ χ²₁(1−α)}`, taken as the span of
//! every grid point inside it and refined at both edges. Its coverage is
//! empirical only.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::BaselineResult;
use crate::error::{Error, Result};
use crate::math::{odd_multiplier, ProbInterval};
use crate::oracle::GroverOracle;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlaeConfig {
    /// Number of non-zero depths; the schedule has `t + 1` points.
    pub t: u32,
    pub n_shots: u64,
    /// θ-grid size; `None` picks `max(1000, 50·(2·2^(T−1)+1))`.
    pub grid_resolution: Option<usize>,
    pub alpha: f64,
}

impl MlaeConfig {
    pub fn new(t: u32, n_shots: u64, alpha: f64) -> Self {
        Self {
            t,
            n_shots,
            grid_resolution: None,
            alpha,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.t > 40 {
            return Err(Error::Config(format!("MLAE T = {} is beyond any usable grid", self.t)));
        }
        if self.n_shots == 0 {
            return Err(Error::Config("n_shots must be positive".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must be in (0, 1), got {}", self.alpha)));
        }
        if matches!(self.grid_resolution, Some(g) if g < 3) {
            return Err(Error::Config("grid_resolution must be at least 3".into()));
        }
        Ok(())
    }

    pub fn schedule(&self) -> Vec<u64> {
        std::iter::once(0)
            .chain((0..self.t).map(|i| 1u64 << i))
            .collect()
    }

    fn grid_size(&self) -> usize {
        self.grid_resolution.unwrap_or_else(|| {
            let deepest = self.schedule().last().copied().unwrap_or(0);
            (50 * (2 * deepest as usize + 1)).max(1000)
        })
    }
}

/// Good counts observed at one depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub m: u64,
    pub shots: u64,
    pub good: u64,
}

/// `Σ X log sin²((2m+1)θ) + (N−X) log cos²((2m+1)θ)`, with `0·log 0 = 0`.
pub fn log_likelihood(theta: f64, obs: &[Observation]) -> f64 {
    obs.iter()
        .map(|o| {
            let angle = odd_multiplier(o.m) * theta;
            let s = angle.sin().powi(2);
            let c = angle.cos().powi(2);
            let bad = o.shots - o.good;
            let mut ll = 0.0;
            if o.good > 0 {
                ll += o.good as f64 * s.ln();
            }
            if bad > 0 {
                ll += bad as f64 * c.ln();
            }
            ll
        })
        .sum()
}

fn grid_point(i: usize, size: usize) -> f64 {
    FRAC_PI_2 * i as f64 / (size - 1) as f64
}

/// Index of the first maximum over the uniform grid of `size` points on
/// `[0, π/2]`, with its value.
pub fn grid_argmax(obs: &[Observation], size: usize) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for i in 0..size {
        let ll = log_likelihood(grid_point(i, size), obs);
        if ll > best.1 {
            best = (i, ll);
        }
    }
    best
}

struct Counter<'a> {
    obs: &'a [Observation],
    evals: u64,
}

impl Counter<'_> {
    fn ll(&mut self, theta: f64) -> f64 {
        self.evals += 1;
        log_likelihood(theta, self.obs)
    }
}

/// Golden-section search for the maximum on `[a, b]`.
fn golden_max(f: &mut Counter<'_>, mut a: f64, mut b: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f.ll(c), f.ll(d));
    for _ in 0..80 {
        if (b - a).abs() < 1e-15 {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f.ll(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f.ll(d);
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Bisect between `inside` (above `threshold`) and `outside` for the
/// crossing point.
fn bisect_edge(f: &mut Counter<'_>, mut inside: f64, mut outside: f64, threshold: f64) -> f64 {
    for _ in 0..60 {
        let mid = 0.5 * (inside + outside);
        if f.ll(mid) >= threshold {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    inside
}

pub fn run_mlae<O: GroverOracle + ?Sized>(
    config: &MlaeConfig,
    oracle: &mut O,
) -> Result<BaselineResult> {
    config.validate()?;
    oracle.reset_ledger();
    let obs = config
        .schedule()
        .into_iter()
        .map(|m| {
            oracle.measure(m, 1.0, config.n_shots).map(|b| Observation {
                m,
                shots: b.shots,
                good: b.good_count,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let flagged = obs.iter().all(|o| o.good == 0 || o.good == o.shots);

    let size = config.grid_size();
    let mut f = Counter { obs: &obs, evals: 0 };
    let lls: Vec<f64> = (0..size).map(|i| f.ll(grid_point(i, size))).collect();
    let (best_i, _) = lls
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });

    let a = grid_point(best_i.saturating_sub(1), size);
    let b = grid_point((best_i + 1).min(size - 1), size);
    let (mut theta_hat, mut ll_hat) = golden_max(&mut f, a, b);
    if lls[best_i] >= ll_hat {
        theta_hat = grid_point(best_i, size);
        ll_hat = lls[best_i];
    }

    let z = Normal::standard().inverse_cdf(1.0 - config.alpha / 2.0);
    let threshold = ll_hat - z * z / 2.0;
    let first = lls.iter().position(|&v| v >= threshold);
    let last = lls.iter().rposition(|&v| v >= threshold);
    let (mut lo, mut hi) = (theta_hat, theta_hat);
    if let (Some(i0), Some(i1)) = (first, last) {
        lo = lo.min(grid_point(i0, size));
        hi = hi.max(grid_point(i1, size));
        if i0 > 0 && grid_point(i0, size) <= theta_hat {
            lo = bisect_edge(&mut f, grid_point(i0, size), grid_point(i0 - 1, size), threshold);
        }
        if i1 + 1 < size && grid_point(i1, size) >= theta_hat {
            hi = bisect_edge(&mut f, grid_point(i1, size), grid_point(i1 + 1, size), threshold);
        }
    }
    let p = |theta: f64| theta.sin().powi(2);
    let ledger = oracle.ledger();
    Ok(BaselineResult {
        interval: ProbInterval {
            lo: p(lo),
            hi: p(hi).max(p(lo)),
        },
        estimate: Some(p(theta_hat)),
        n_oracle: ledger.oracle_queries,
        total_shots: ledger.total_shots,
        classical_ops: f.evals,
        flagged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{AmplitudeProblem, BinomialOracle, ExactOracle};
    use statrs::distribution::{Binomial, Discrete};

    #[test]
    fn schedule_is_exponential() {
        assert_eq!(MlaeConfig::new(4, 100, 0.05).schedule(), vec![0, 1, 2, 4, 8]);
        assert_eq!(MlaeConfig::new(0, 100, 0.05).schedule(), vec![0]);
    }

    #[test]
    fn zero_amplitude() {
        let mut o = ExactOracle::new(AmplitudeProblem::new(0.0, "z").unwrap());
        let res = run_mlae(&MlaeConfig::new(6, 100, 0.05), &mut o).unwrap();
        assert_eq!(res.estimate, Some(0.0));
        assert_eq!(res.interval.lo, 0.0);
        assert!(res.flagged);
        assert_eq!(res.n_oracle, 100 * (1 + 2 + 4 + 8 + 16 + 32));
    }

    #[test]
    fn seeded_estimate_near_truth() {
        let mut o = BinomialOracle::new(AmplitudeProblem::new(0.2, "p").unwrap(), 77);
        let cfg = MlaeConfig::new(8, 100, 0.05);
        let res = run_mlae(&cfg, &mut o).unwrap();
        let est = res.estimate.unwrap();
        assert!((est - 0.2).abs() < 1e-3, "estimate {est}");
        assert!(res.interval.contains(est));
        assert!(!res.flagged);
    }

    #[test]
    fn refined_argmax_matches_dense_brute_force() {
        // Independent route: 10⁶-point grid of the full binomial log-pmf.
        let mut o = BinomialOracle::new(AmplitudeProblem::new(0.2, "p").unwrap(), 77);
        let cfg = MlaeConfig::new(8, 100, 0.05);
        let res = run_mlae(&cfg, &mut o).unwrap();
        let mut o = BinomialOracle::new(AmplitudeProblem::new(0.2, "p").unwrap(), 77);
        let obs: Vec<Observation> = cfg
            .schedule()
            .into_iter()
            .map(|m| Observation { m, shots: 100, good: o.measure(m, 1.0, 100).unwrap().good_count })
            .collect();
        let n = 1_000_000;
        let (mut best_theta, mut best) = (0.0, f64::NEG_INFINITY);
        for i in 0..n {
            let theta = FRAC_PI_2 * (i as f64 + 0.5) / n as f64;
            let ll: f64 = obs
                .iter()
                .map(|ob| {
                    let q = (odd_multiplier(ob.m) * theta).sin().powi(2).clamp(1e-300, 1.0 - 1e-16);
                    Binomial::new(q, ob.shots).unwrap().ln_pmf(ob.good)
                })
                .sum();
            if ll > best {
                best = ll;
                best_theta = theta;
            }
        }
        let brute = best_theta.sin().powi(2);
        assert!((res.estimate.unwrap() - brute).abs() < 2e-6, "{} vs {brute}", res.estimate.unwrap());
    }

    #[test]
    fn grid_argmax_equals_brute_force_on_same_grid() {
        let obs = [
            Observation { m: 0, shots: 100, good: 31 },
            Observation { m: 1, shots: 100, good: 88 },
            Observation { m: 2, shots: 100, good: 60 },
        ];
        let size = 2001;
        let (i, v) = grid_argmax(&obs, size);
        let brute = (0..size)
            .map(|k| (k, log_likelihood(grid_point(k, size), &obs)))
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(b.0.cmp(&a.0)))
            .unwrap();
        assert_eq!((i, v), brute);
    }

    #[test]
    fn likelihood_is_finite_at_scale() {
        let obs: Vec<Observation> = (0..=20u32)
            .map(|t| Observation {
                m: if t == 0 { 0 } else { 1 << (t - 1) },
                shots: 100_000,
                good: 37_000,
            })
            .collect();
        for i in 1..1000 {
            let ll = log_likelihood(FRAC_PI_2 * i as f64 / 1000.0, &obs);
            assert!(ll.is_finite());
        }
    }

    #[test]
    fn classical_ops_count_every_evaluation() {
        let mut o = ExactOracle::new(AmplitudeProblem::new(0.3, "p").unwrap());
        let cfg = MlaeConfig {
            grid_resolution: Some(5000),
            ..MlaeConfig::new(4, 100, 0.05)
        };
        let res = run_mlae(&cfg, &mut o).unwrap();
        assert!(res.classical_ops >= 5000);
        assert!(res.interval.contains(0.3));
    }
}
