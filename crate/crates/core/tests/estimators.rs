use qae_core::adaptive::{self, AdaptiveConfig};
use qae_core::baselines::{run_iqae, run_mlae, CiMethod, IqaeConfig, MlaeConfig};
use qae_core::oracle::{AmplitudeProblem, BinomialOracle, ExactOracle, GroverOracle, MeasurementBatch, QueryLedger};
use qae_core::{Error, Result};

/// Wraps another oracle and records every request.
struct Recording<O> {
    inner: O,
    calls: Vec<(u64, f64, u64)>,
}

impl<O: GroverOracle> GroverOracle for Recording<O> {
    fn measure(&mut self, m: u64, r: f64, shots: u64) -> Result<MeasurementBatch> {
        self.calls.push((m, r, shots));
        self.inner.measure(m, r, shots)
    }
    fn ledger(&self) -> QueryLedger {
        self.inner.ledger()
    }
    fn reset_ledger(&mut self) {
        self.inner.reset_ledger()
    }
    fn kind(&self) -> &'static str {
        "recording"
    }
}

fn problem(p: f64) -> AmplitudeProblem {
    AmplitudeProblem::new(p, "it").unwrap()
}

#[test]
fn custom_oracle_sees_consistent_requests() {
    let mut o = Recording {
        inner: BinomialOracle::new(problem(0.31), 5),
        calls: Vec::new(),
    };
    let cfg = AdaptiveConfig::new(1e-5, 0.05);
    let res = adaptive::run(&cfg, &mut o).unwrap();
    assert!(res.interval.width() <= 1e-5);
    assert!(res.halved);
    // halving shows up as r ≤ 1/2 on every call
    assert!(o.calls.iter().all(|&(_, r, s)| r <= 0.5 && s == 100));
    let queries: u64 = o.calls.iter().map(|&(m, _, s)| m * s).sum();
    assert_eq!(queries, res.n_oracle);
    assert_eq!(o.calls.len() as u64 * 100, res.total_shots);
}

#[test]
fn all_methods_agree_on_an_exact_oracle() {
    let p = 0.4137;
    let eps = 1e-4;
    let ad = adaptive::run(&AdaptiveConfig::new(eps, 0.05), &mut ExactOracle::new(problem(p))).unwrap();
    let cp = run_iqae(
        &IqaeConfig::new(eps, 0.05, 100, CiMethod::ClopperPearson),
        &mut ExactOracle::new(problem(p)),
    )
    .unwrap();
    let ch = run_iqae(
        &IqaeConfig::new(eps, 0.05, 100, CiMethod::ChernoffHoeffding),
        &mut ExactOracle::new(problem(p)),
    )
    .unwrap();
    let ml = run_mlae(&MlaeConfig::new(10, 100, 0.05), &mut ExactOracle::new(problem(p))).unwrap();
    for iv in [ad.interval, cp.interval, ch.interval, ml.interval] {
        assert!(iv.contains(p), "{iv:?}");
    }
    assert!((ml.estimate.unwrap() - p).abs() < 1e-3);
}

#[test]
fn sampled_runs_cover_above_one_half() {
    let mut covered = 0;
    for seed in 0..40u64 {
        let p = 0.5 + 0.0123 * seed as f64;
        let mut o = BinomialOracle::new(problem(p), seed);
        let res = adaptive::run(&AdaptiveConfig::new(1e-4, 0.05), &mut o).unwrap();
        assert!(res.interval.width() <= 1e-4);
        covered += res.interval.contains(p) as usize;
    }
    assert!(covered >= 38, "{covered}/40");
}

#[test]
fn config_errors_surface_before_any_query() {
    let mut o = ExactOracle::new(problem(0.2));
    for cfg in [
        AdaptiveConfig::new(0.0, 0.05),
        AdaptiveConfig::new(1e-3, 1.5),
        AdaptiveConfig { k: 2, ..AdaptiveConfig::new(1e-3, 0.05) },
        AdaptiveConfig { n_shots: 0, ..AdaptiveConfig::new(1e-3, 0.05) },
    ] {
        assert!(matches!(adaptive::run(&cfg, &mut o), Err(Error::Config(_))));
    }
    assert_eq!(o.ledger().totals(), (0, 0));
}
