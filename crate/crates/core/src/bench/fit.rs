use serde::{Deserialize, Serialize};

use super::experiment::AggregateRow;
use crate::error::{Error, Result};

/// Quantity on the y axis of a scaling fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum YField {
    NOracle,
    ClassicalOps,
    TotalShots,
}

impl YField {
    pub fn name(self) -> &'static str {
        match self {
            YField::NOracle => "n_oracle",
            YField::ClassicalOps => "classical_ops",
            YField::TotalShots => "total_shots",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [YField::NOracle, YField::ClassicalOps, YField::TotalShots]
            .into_iter()
            .find(|y| y.name() == s)
    }

    pub fn of(self, row: &AggregateRow) -> f64 {
        match self {
            YField::NOracle => row.mean_n_oracle,
            YField::ClassicalOps => row.mean_classical_ops,
            YField::TotalShots => row.mean_total_shots,
        }
    }
}

/// OLS fit of `log10 y = slope · log10 ε + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

/// Ordinary least squares `y = a x + b`, returning `(a, b, r²)`.
/// A constant `y` counts as a perfect fit.
fn ols(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let a = sxy / sxx;
    let b = my - a * mx;
    let ss_tot: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let ss_res: f64 = x.iter().zip(y).map(|(u, v)| (v - (a * u + b)).powi(2)).sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    (a, b, r2)
}

fn distinct_count(xs: &[f64]) -> usize {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.len()
}

/// Log-log fit of a per-ε quantity. Rows with no successful runs are skipped.
pub fn fit_scaling(rows: &[AggregateRow], y: YField) -> Result<SlopeFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.run_count > 0 && y.of(r) > 0.0)
        .map(|r| (r.epsilon.log10(), y.of(r).log10()))
        .unzip();
    fit_points(&xs, &ys)
}

/// Log-log fit on raw `(ε, y)` pairs.
pub fn fit_log10(epsilons: &[f64], ys: &[f64]) -> Result<SlopeFit> {
    let xs: Vec<f64> = epsilons.iter().map(|e| e.log10()).collect();
    let ys: Vec<f64> = ys.iter().map(|v| v.log10()).collect();
    fit_points(&xs, &ys)
}

fn fit_points(xs: &[f64], ys: &[f64]) -> Result<SlopeFit> {
    let distinct = distinct_count(xs);
    if distinct < 3 {
        return Err(Error::TooFewPoints(distinct));
    }
    let (slope, intercept, r_squared) = ols(xs, ys);
    Ok(SlopeFit {
        slope,
        intercept,
        r_squared,
        n_points: xs.len(),
    })
}

/// Fit of `y = a · L ln L + b` with `L = ln(1/ε)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogLogFit {
    pub a: f64,
    pub b: f64,
    pub r_squared: f64,
}

pub fn fit_log_loglog(epsilons: &[f64], ys: &[f64]) -> Result<LogLogFit> {
    let distinct = distinct_count(epsilons);
    if distinct < 3 {
        return Err(Error::TooFewPoints(distinct));
    }
    let xs: Vec<f64> = epsilons
        .iter()
        .map(|e| {
            let l = (1.0 / e).ln();
            l * l.ln()
        })
        .collect();
    let (a, b, r_squared) = ols(&xs, ys);
    Ok(LogLogFit { a, b, r_squared })
}
