//! Grover measurement oracles.
//!
//! An estimator only ever sees [`GroverOracle`]: it asks for `shots`
//! measurements after `m` Grover iterations on a state whose good amplitude
//! has been scaled by `√r`, and gets back a count of good outcomes. The
//! hidden amplitude lives inside the oracle and is not reachable through the
//! trait.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{self, grover_probability};

/// PRNG behind [`BinomialOracle`], recorded in report metadata.
pub const PRNG_NAME: &str = "ChaCha20Rng (rand_chacha 0.9, seed_from_u64)";
/// Exact binomial sampler behind [`BinomialOracle`].
pub const SAMPLER_NAME: &str = "rand_distr 0.5 Binomial (BINV inversion / BTPE)";

/// The estimation target. `p_true` is known to the harness, never to an
/// estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeProblem {
    p_true: f64,
    pub label: String,
}

impl AmplitudeProblem {
    pub fn new(p_true: f64, label: impl Into<String>) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_true) {
            return Err(Error::Config(format!("p_true must be in [0, 1], got {p_true}")));
        }
        Ok(Self {
            p_true,
            label: label.into(),
        })
    }

    pub fn p_true(&self) -> f64 {
        self.p_true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementBatch {
    pub m: u64,
    pub r: f64,
    pub shots: u64,
    pub good_count: u64,
}

/// Running totals `Σ N_t·m_t` and `Σ N_t`.
///
/// A shot at depth 0 costs no oracle query; `total_shots` is kept alongside
/// so a stricter accounting can be recomputed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryLedger {
    pub oracle_queries: u64,
    pub total_shots: u64,
}

impl QueryLedger {
    fn record(&mut self, m: u64, shots: u64) {
        self.oracle_queries = self.oracle_queries.saturating_add(shots.saturating_mul(m));
        self.total_shots = self.total_shots.saturating_add(shots);
    }

    pub fn totals(&self) -> (u64, u64) {
        (self.oracle_queries, self.total_shots)
    }
}

pub trait GroverOracle {
    /// Measure `shots` copies of `Q^m` applied to the `r`-adjusted state.
    fn measure(&mut self, m: u64, r: f64, shots: u64) -> Result<MeasurementBatch>;

    fn ledger(&self) -> QueryLedger;

    fn reset_ledger(&mut self);

    /// Short tag for reports.
    fn kind(&self) -> &'static str;
}

impl<O: GroverOracle + ?Sized> GroverOracle for &mut O {
    fn measure(&mut self, m: u64, r: f64, shots: u64) -> Result<MeasurementBatch> {
        (**self).measure(m, r, shots)
    }
    fn ledger(&self) -> QueryLedger {
        (**self).ledger()
    }
    fn reset_ledger(&mut self) {
        (**self).reset_ledger()
    }
    fn kind(&self) -> &'static str {
        (**self).kind()
    }
}

fn check_request(r: f64, shots: u64) -> Result<()> {
    if shots == 0 {
        return Err(Error::Config("shots must be positive".into()));
    }
    if !(r > 0.0 && r <= 1.0 + math::DOMAIN_TOL) {
        return Err(Error::Domain {
            what: "adjustment factor",
            value: r,
        });
    }
    Ok(())
}

/// Reference oracle: draws good counts from the exact binomial distribution
/// with a seeded, platform-stable stream.
#[derive(Debug, Clone)]
pub struct BinomialOracle {
    problem: AmplitudeProblem,
    seed: u64,
    rng: ChaCha20Rng,
    ledger: QueryLedger,
}

impl BinomialOracle {
    pub fn new(problem: AmplitudeProblem, seed: u64) -> Self {
        Self {
            problem,
            seed,
            rng: ChaCha20Rng::seed_from_u64(seed),
            ledger: QueryLedger::default(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn problem(&self) -> &AmplitudeProblem {
        &self.problem
    }
}

impl GroverOracle for BinomialOracle {
    fn measure(&mut self, m: u64, r: f64, shots: u64) -> Result<MeasurementBatch> {
        check_request(r, shots)?;
        let q = grover_probability(self.problem.p_true, m, r)?;
        let good_count = Binomial::new(shots, q)
            .map_err(|_| Error::Domain {
                what: "binomial success probability",
                value: q,
            })?
            .sample(&mut self.rng);
        self.ledger.record(m, shots);
        Ok(MeasurementBatch {
            m,
            r,
            shots,
            good_count,
        })
    }

    fn ledger(&self) -> QueryLedger {
        self.ledger
    }

    fn reset_ledger(&mut self) {
        self.ledger = QueryLedger::default();
    }

    fn kind(&self) -> &'static str {
        "binomial"
    }
}

/// Deterministic test double: every batch returns `round(shots · q)`.
#[derive(Debug, Clone)]
pub struct ExactOracle {
    problem: AmplitudeProblem,
    ledger: QueryLedger,
}

impl ExactOracle {
    pub fn new(problem: AmplitudeProblem) -> Self {
        Self {
            problem,
            ledger: QueryLedger::default(),
        }
    }

    pub fn problem(&self) -> &AmplitudeProblem {
        &self.problem
    }
}

impl GroverOracle for ExactOracle {
    fn measure(&mut self, m: u64, r: f64, shots: u64) -> Result<MeasurementBatch> {
        check_request(r, shots)?;
        let q = grover_probability(self.problem.p_true, m, r)?;
        let good_count = ((shots as f64 * q).round() as u64).min(shots);
        self.ledger.record(m, shots);
        Ok(MeasurementBatch {
            m,
            r,
            shots,
            good_count,
        })
    }

    fn ledger(&self) -> QueryLedger {
        self.ledger
    }

    fn reset_ledger(&mut self) {
        self.ledger = QueryLedger::default();
    }

    fn kind(&self) -> &'static str {
        "exact"
    }
}
