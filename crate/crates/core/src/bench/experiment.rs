use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::adaptive::{self, AdaptiveConfig, EstimationResult};
use crate::baselines::{self, CiMethod, IqaeConfig, MlaeConfig};
use crate::error::{Error, Result};
use crate::math::ProbInterval;
use crate::oracle::{AmplitudeProblem, BinomialOracle, ExactOracle, GroverOracle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// `p ~ U(0, 1/2)`, 100 shots per batch.
    UniformP,
    /// `p = 1/4` (θ = π/6, a period boundary for K = 3), 100 shots.
    BoundaryP025,
    /// `p ~ U(0, 1/2)`, 800 shots per batch.
    Shots800,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::UniformP => "uniform_p",
            Scenario::BoundaryP025 => "boundary_p_025",
            Scenario::Shots800 => "shots_800",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Scenario::UniformP, Scenario::BoundaryP025, Scenario::Shots800]
            .into_iter()
            .find(|sc| sc.name() == s)
    }

    pub fn default_shots(self) -> u64 {
        match self {
            Scenario::Shots800 => 800,
            _ => 100,
        }
    }

    pub fn default_methods(self) -> Vec<Method> {
        match self {
            Scenario::Shots800 => vec![Method::Adaptive, Method::IqaeCp, Method::IqaeCh],
            _ => vec![Method::Adaptive, Method::IqaeCp],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Adaptive,
    Mlae,
    IqaeCp,
    IqaeCh,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Adaptive, Method::Mlae, Method::IqaeCp, Method::IqaeCh];

    pub fn name(self) -> &'static str {
        match self {
            Method::Adaptive => "adaptive",
            Method::Mlae => "mlae",
            Method::IqaeCp => "iqae_cp",
            Method::IqaeCh => "iqae_ch",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }

    fn seed_id(self) -> u64 {
        match self {
            Method::Adaptive => 1,
            Method::Mlae => 2,
            Method::IqaeCp => 3,
            Method::IqaeCh => 4,
        }
    }
}

/// Default desk-scale precision grid: `1e-3 … 1e-8`.
pub fn default_epsilons() -> Vec<f64> {
    vec![1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub epsilons: Vec<f64>,
    pub n_p_samples: usize,
    pub alpha: f64,
    pub k: u64,
    pub n_shots: u64,
    pub methods: Vec<Method>,
    pub master_seed: u64,
    /// Use [`ExactOracle`] instead of the seeded sampler.
    pub exact_oracle: bool,
}

impl ExperimentConfig {
    pub fn new(scenario: Scenario, master_seed: u64) -> Self {
        Self {
            scenario,
            epsilons: default_epsilons(),
            n_p_samples: 100,
            alpha: 0.05,
            k: 3,
            n_shots: scenario.default_shots(),
            methods: scenario.default_methods(),
            master_seed,
            exact_oracle: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilons.is_empty() || self.epsilons.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
            return Err(Error::Config("epsilons must be a non-empty list in (0, 1)".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("at least one method is required".into()));
        }
        if self.n_p_samples == 0 {
            return Err(Error::Config("n_p_samples must be positive".into()));
        }
        AdaptiveConfig {
            k: self.k,
            n_shots: self.n_shots,
            ..AdaptiveConfig::new(self.epsilons[0], self.alpha)
        }
        .validate()
    }

    /// The `p` values used for every method and precision.
    pub fn p_values(&self) -> Vec<f64> {
        match self.scenario {
            Scenario::BoundaryP025 => vec![0.25; self.n_p_samples],
            Scenario::UniformP | Scenario::Shots800 => {
                let mut rng = ChaCha20Rng::seed_from_u64(splitmix64(self.master_seed ^ P_DRAW_SALT));
                (0..self.n_p_samples).map(|_| rng.random_range(0.0..0.5)).collect()
            }
        }
    }
}

const P_DRAW_SALT: u64 = 0x7064_7261_7773; // "pdraws"

/// Documentation string for the per-run seed rule, copied into reports.
pub const SEED_RULE: &str = "seed = fold(master_seed, [method_id, eps_index, p_index]) with h <- splitmix64(h ^ splitmix64(v)); method_id adaptive=1 mlae=2 iqae_cp=3 iqae_ch=4; p draws: ChaCha20Rng(splitmix64(master_seed ^ 0x706472617773)) uniform [0, 0.5)";

/// SplitMix64 output function.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn run_seed(master_seed: u64, method: Method, eps_index: usize, p_index: usize) -> u64 {
    [method.seed_id(), eps_index as u64, p_index as u64]
        .into_iter()
        .fold(master_seed, |h, v| splitmix64(h ^ splitmix64(v)))
}

/// Smallest MLAE `T` whose Fisher-information interval width
/// `z_{1−α/2} / √(N Σ (2m+1)²)` (worst case over θ) is at most `epsilon`.
pub fn mlae_depth_for_epsilon(epsilon: f64, n_shots: u64, alpha: f64) -> u32 {
    let z = Normal::standard().inverse_cdf(1.0 - alpha / 2.0);
    let mut info = 1.0f64;
    for t in 1..=40u32 {
        let n = (2u64 << (t - 1)) as f64 + 1.0;
        info += n * n;
        if z / (n_shots as f64 * info).sqrt() <= epsilon {
            return t;
        }
    }
    40
}

/// Per-run summary shared by every method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub interval: ProbInterval,
    pub n_oracle: u64,
    pub total_shots: u64,
    pub classical_ops: u64,
    /// Mean and minimum adjustment factor over rounds; 1 for the baselines.
    pub mean_r: f64,
    pub worst_r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: Method,
    pub eps_index: usize,
    pub epsilon: f64,
    pub p_index: usize,
    pub p_true: f64,
    pub seed: u64,
    pub outcome: std::result::Result<RunOutcome, String>,
    /// Full adaptive trace, kept only when requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<EstimationResult>,
}

impl RunRecord {
    pub fn covered(&self) -> Option<bool> {
        self.outcome.as_ref().ok().map(|o| o.interval.contains(self.p_true))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub method: Method,
    pub epsilon: f64,
    pub run_count: u64,
    #[serde(with = "nan_as_null")]
    pub coverage_fraction: f64,
    #[serde(with = "nan_as_null")]
    pub mean_n_oracle: f64,
    #[serde(with = "nan_as_null")]
    pub mean_total_shots: f64,
    #[serde(with = "nan_as_null")]
    pub mean_classical_ops: f64,
    #[serde(with = "nan_as_null")]
    pub mean_final_width: f64,
    #[serde(with = "nan_as_null")]
    pub mean_r: f64,
    #[serde(with = "nan_as_null")]
    pub worst_r: f64,
    pub failures: u64,
}

/// Empty aggregates have NaN means, which JSON cannot carry.
mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_nan() {
            s.serialize_none()
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub rows: Vec<AggregateRow>,
    pub records: Vec<RunRecord>,
    /// Wall-clock time for the whole grid. Informational only; never part of
    /// a report.
    pub elapsed: Duration,
}

impl Experiment {
    pub fn failure_fraction(&self) -> f64 {
        let failed = self.records.iter().filter(|r| r.outcome.is_err()).count();
        failed as f64 / self.records.len().max(1) as f64
    }
}

fn run_one<O: GroverOracle>(
    config: &ExperimentConfig,
    method: Method,
    epsilon: f64,
    oracle: &mut O,
    keep_trace: bool,
) -> Result<(RunOutcome, Option<EstimationResult>)> {
    match method {
        Method::Adaptive => {
            // Every scenario draws p from [0, 1/2], so no input halving.
            let cfg = AdaptiveConfig {
                k: config.k,
                n_shots: config.n_shots,
                halve_input: false,
                ..AdaptiveConfig::new(epsilon, config.alpha)
            };
            let res = adaptive::run(&cfg, oracle)?;
            let outcome = RunOutcome {
                interval: res.interval,
                n_oracle: res.n_oracle,
                total_shots: res.total_shots,
                classical_ops: res.classical_ops,
                mean_r: res.mean_r(),
                worst_r: res.worst_r(),
            };
            Ok((outcome, keep_trace.then_some(res)))
        }
        Method::Mlae | Method::IqaeCp | Method::IqaeCh => {
            let res = match method {
                Method::Mlae => {
                    let t = mlae_depth_for_epsilon(epsilon, config.n_shots, config.alpha);
                    baselines::run_mlae(&MlaeConfig::new(t, config.n_shots, config.alpha), oracle)?
                }
                Method::IqaeCp | Method::IqaeCh => {
                    let ci = if method == Method::IqaeCp {
                        CiMethod::ClopperPearson
                    } else {
                        CiMethod::ChernoffHoeffding
                    };
                    baselines::run_iqae(&IqaeConfig::new(epsilon, config.alpha, config.n_shots, ci), oracle)?
                }
                Method::Adaptive => unreachable!(),
            };
            let outcome = RunOutcome {
                interval: res.interval,
                n_oracle: res.n_oracle,
                total_shots: res.total_shots,
                classical_ops: res.classical_ops,
                mean_r: 1.0,
                worst_r: 1.0,
            };
            Ok((outcome, None))
        }
    }
}

/// Run the full `(method, ε, p)` grid and aggregate per `(method, ε)`.
///
/// Runs execute in parallel; seeds depend only on grid position, and
/// aggregation happens after collection in grid order, so the result is
/// independent of scheduling.
pub fn run_experiment(config: &ExperimentConfig, keep_traces: bool) -> Result<Experiment> {
    config.validate()?;
    let start = Instant::now();
    let ps = config.p_values();
    let mut tasks = Vec::new();
    for &method in &config.methods {
        for (ei, &eps) in config.epsilons.iter().enumerate() {
            for (pi, &p) in ps.iter().enumerate() {
                tasks.push((method, ei, eps, pi, p));
            }
        }
    }

    let records: Vec<RunRecord> = tasks
        .into_par_iter()
        .map(|(method, eps_index, epsilon, p_index, p_true)| {
            let seed = run_seed(config.master_seed, method, eps_index, p_index);
            let problem = AmplitudeProblem::new(p_true, format!("p[{p_index}]"));
            let result = problem.and_then(|problem| {
                if config.exact_oracle {
                    run_one(config, method, epsilon, &mut ExactOracle::new(problem), keep_traces)
                } else {
                    run_one(config, method, epsilon, &mut BinomialOracle::new(problem, seed), keep_traces)
                }
            });
            let (outcome, trace) = match result {
                Ok((o, t)) => (Ok(o), t),
                Err(e) => (Err(e.to_string()), None),
            };
            RunRecord {
                method,
                eps_index,
                epsilon,
                p_index,
                p_true,
                seed,
                outcome,
                trace,
            }
        })
        .collect();

    let mut rows = Vec::new();
    for &method in &config.methods {
        for (ei, &eps) in config.epsilons.iter().enumerate() {
            let group: Vec<&RunRecord> = records
                .iter()
                .filter(|r| r.method == method && r.eps_index == ei)
                .collect();
            rows.push(aggregate(method, eps, &group));
        }
    }
    Ok(Experiment {
        rows,
        records,
        elapsed: start.elapsed(),
    })
}

pub fn aggregate(method: Method, epsilon: f64, group: &[&RunRecord]) -> AggregateRow {
    let ok: Vec<(&RunRecord, &RunOutcome)> = group
        .iter()
        .filter_map(|r| r.outcome.as_ref().ok().map(|o| (*r, o)))
        .collect();
    let n = ok.len() as f64;
    let mean = |f: &dyn Fn(&RunOutcome) -> f64| ok.iter().map(|(_, o)| f(o)).sum::<f64>() / n;
    let covered = ok.iter().filter(|(r, o)| o.interval.contains(r.p_true)).count();
    AggregateRow {
        method,
        epsilon,
        run_count: ok.len() as u64,
        coverage_fraction: covered as f64 / n,
        mean_n_oracle: mean(&|o| o.n_oracle as f64),
        mean_total_shots: mean(&|o| o.total_shots as f64),
        mean_classical_ops: mean(&|o| o.classical_ops as f64),
        mean_final_width: mean(&|o| o.interval.width()),
        mean_r: mean(&|o| o.mean_r),
        worst_r: if ok.is_empty() {
            f64::NAN
        } else {
            ok.iter().map(|(_, o)| o.worst_r).fold(f64::INFINITY, f64::min)
        },
        failures: (group.len() - ok.len()) as u64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_distinct_and_stable() {
        let a = run_seed(42, Method::Adaptive, 0, 0);
        assert_eq!(a, run_seed(42, Method::Adaptive, 0, 0));
        assert_ne!(a, run_seed(42, Method::Adaptive, 0, 1));
        assert_ne!(a, run_seed(42, Method::Adaptive, 1, 0));
        assert_ne!(a, run_seed(42, Method::IqaeCp, 0, 0));
        assert_ne!(a, run_seed(43, Method::Adaptive, 0, 0));
    }

    #[test]
    fn splitmix_reference_values() {
        // First outputs of the SplitMix64 generator seeded with 0.
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(splitmix64(0x9E37_79B9_7F4A_7C15), 0x6E78_9E6A_A1B9_65F4);
    }

    #[test]
    fn p_draws_follow_scenario() {
        let cfg = ExperimentConfig::new(Scenario::UniformP, 5);
        let ps = cfg.p_values();
        assert_eq!(ps.len(), 100);
        assert!(ps.iter().all(|&p| (0.0..0.5).contains(&p)));
        assert_eq!(ps, cfg.p_values());
        let cfg = ExperimentConfig::new(Scenario::BoundaryP025, 5);
        assert!(cfg.p_values().iter().all(|&p| p == 0.25));
        assert_eq!(ExperimentConfig::new(Scenario::Shots800, 1).n_shots, 800);
    }

    #[test]
    fn single_exact_run_aggregate() {
        let cfg = ExperimentConfig {
            epsilons: vec![1e-3],
            n_p_samples: 1,
            methods: vec![Method::Adaptive],
            exact_oracle: true,
            ..ExperimentConfig::new(Scenario::BoundaryP025, 9)
        };
        let exp = run_experiment(&cfg, false).unwrap();
        assert_eq!(exp.rows.len(), 1);
        let row = &exp.rows[0];
        assert_eq!(row.run_count, 1);
        assert_eq!(row.failures, 0);
        assert!(row.mean_final_width <= 1e-3);
        assert_eq!(row.coverage_fraction, 1.0);
        assert!(row.worst_r <= row.mean_r);
    }

    #[test]
    fn failures_are_counted_not_aggregated() {
        let ok = RunRecord {
            method: Method::Adaptive,
            eps_index: 0,
            epsilon: 1e-3,
            p_index: 0,
            p_true: 0.3,
            seed: 1,
            outcome: Ok(RunOutcome {
                interval: ProbInterval { lo: 0.2995, hi: 0.3004 },
                n_oracle: 10,
                total_shots: 20,
                classical_ops: 3,
                mean_r: 0.9,
                worst_r: 0.8,
            }),
            trace: None,
        };
        let bad = RunRecord {
            outcome: Err("boom".into()),
            ..ok.clone()
        };
        let row = aggregate(Method::Adaptive, 1e-3, &[&ok, &bad]);
        assert_eq!((row.run_count, row.failures), (1, 1));
        assert_eq!(row.mean_n_oracle, 10.0);
        assert_eq!(row.worst_r, 0.8);
        let empty = aggregate(Method::Adaptive, 1e-3, &[&bad]);
        assert!(empty.coverage_fraction.is_nan() && empty.worst_r.is_nan());
    }

    #[test]
    fn mlae_depth_grows_with_precision() {
        let ts: Vec<u32> = [1e-2, 1e-3, 1e-4].iter().map(|&e| mlae_depth_for_epsilon(e, 100, 0.05)).collect();
        assert!(ts[0] < ts[1] && ts[1] < ts[2]);
        assert_eq!(ts[1], 8);
    }

    #[test]
    fn rejects_bad_configs() {
        let base = ExperimentConfig::new(Scenario::UniformP, 1);
        for bad in [
            ExperimentConfig { epsilons: vec![], ..base.clone() },
            ExperimentConfig { epsilons: vec![0.0], ..base.clone() },
            ExperimentConfig { methods: vec![], ..base.clone() },
            ExperimentConfig { k: 4, ..base.clone() },
            ExperimentConfig { n_p_samples: 0, ..base.clone() },
        ] {
            assert!(matches!(run_experiment(&bad, false), Err(Error::Config(_))));
        }
    }
}
