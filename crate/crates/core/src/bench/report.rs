use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::experiment::{AggregateRow, Experiment, ExperimentConfig, Method, SEED_RULE};
use super::fit::{fit_scaling, SlopeFit, YField};
use crate::error::{Error, Result};
use crate::oracle::{PRNG_NAME, SAMPLER_NAME};

pub const CSV_HEADER: &str = "method,epsilon,run_count,coverage_fraction,mean_n_oracle,mean_total_shots,mean_classical_ops,mean_final_width,mean_r,worst_r,failures";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl ReportFormat {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "csv" => Some(ReportFormat::Csv),
            "json" => Some(ReportFormat::Json),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub master_seed: u64,
    pub scenario: String,
    pub oracle: String,
    pub prng: String,
    pub sampler: String,
    pub seed_rule: String,
    /// `sha256:` of the compact JSON serialization of the experiment config.
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitEntry {
    pub method: Method,
    pub x: String,
    pub y: YField,
    pub fit: SlopeFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub metadata: ReportMetadata,
    pub rows: Vec<AggregateRow>,
    pub fits: Vec<FitEntry>,
}

pub fn config_hash(config: &ExperimentConfig) -> String {
    let json = serde_json::to_string(config).expect("config serializes");
    let digest = Sha256::digest(json.as_bytes());
    let mut out = String::from("sha256:");
    for b in digest {
        write!(out, "{b:02x}").unwrap();
    }
    out
}

/// Assemble a report, fitting `n_oracle` and `classical_ops` against ε for
/// every method that has at least three precisions.
pub fn build_report(config: &ExperimentConfig, experiment: &Experiment) -> Report {
    let mut fits = Vec::new();
    for &method in &config.methods {
        let rows: Vec<AggregateRow> = experiment.rows.iter().filter(|r| r.method == method).cloned().collect();
        for y in [YField::NOracle, YField::ClassicalOps] {
            if let Ok(fit) = fit_scaling(&rows, y) {
                fits.push(FitEntry {
                    method,
                    x: "epsilon".into(),
                    y,
                    fit,
                });
            }
        }
    }
    Report {
        metadata: ReportMetadata {
            master_seed: config.master_seed,
            scenario: config.scenario.name().into(),
            oracle: if config.exact_oracle { "exact" } else { "binomial" }.into(),
            prng: PRNG_NAME.into(),
            sampler: SAMPLER_NAME.into(),
            seed_rule: SEED_RULE.into(),
            config_hash: config_hash(config),
        },
        rows: experiment.rows.clone(),
        fits,
    }
}

pub fn render_csv(report: &Report) -> String {
    let m = &report.metadata;
    let mut out = String::new();
    for (k, v) in [
        ("master_seed", m.master_seed.to_string()),
        ("scenario", m.scenario.clone()),
        ("oracle", m.oracle.clone()),
        ("prng", m.prng.clone()),
        ("sampler", m.sampler.clone()),
        ("seed_rule", m.seed_rule.clone()),
        ("config_hash", m.config_hash.clone()),
    ] {
        writeln!(out, "# {k}: {v}").unwrap();
    }
    for f in &report.fits {
        writeln!(
            out,
            "# fit: method={} x={} y={} slope={} intercept={} r_squared={} n_points={}",
            f.method.name(),
            f.x,
            f.y.name(),
            f.fit.slope,
            f.fit.intercept,
            f.fit.r_squared,
            f.fit.n_points
        )
        .unwrap();
    }
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &report.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.method.name(),
            r.epsilon,
            r.run_count,
            r.coverage_fraction,
            r.mean_n_oracle,
            r.mean_total_shots,
            r.mean_classical_ops,
            r.mean_final_width,
            r.mean_r,
            r.worst_r,
            r.failures
        )
        .unwrap();
    }
    out
}

pub fn render_json(report: &Report) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

pub fn emit_report(report: &Report, format: ReportFormat, path: &Path) -> Result<()> {
    let body = match format {
        ReportFormat::Csv => render_csv(report),
        ReportFormat::Json => render_json(report),
    };
    fs::write(path, body).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Read a report written by [`emit_report`]; the format is sniffed from the
/// first non-blank character.
pub fn read_report(path: &Path) -> Result<Report> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let bad = |msg: String| Error::Report {
        path: path.to_path_buf(),
        msg,
    };
    if text.trim_start().starts_with('{') {
        return serde_json::from_str(&text).map_err(|e| bad(e.to_string()));
    }
    parse_csv(&text).map_err(bad)
}

fn parse_csv(text: &str) -> std::result::Result<Report, String> {
    let mut meta = std::collections::BTreeMap::new();
    let mut fits = Vec::new();
    let mut rows = Vec::new();
    let mut seen_header = false;
    for (lineno, line) in text.lines().enumerate() {
        let at = |msg: &str| format!("line {}: {msg}", lineno + 1);
        if let Some(comment) = line.strip_prefix("# ") {
            if let Some(rest) = comment.strip_prefix("fit: ") {
                fits.push(parse_fit(rest).ok_or_else(|| at("bad fit line"))?);
            } else if let Some((k, v)) = comment.split_once(": ") {
                meta.insert(k.to_string(), v.to_string());
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        if !seen_header {
            if line != CSV_HEADER {
                return Err(at("unexpected header"));
            }
            seen_header = true;
            continue;
        }
        rows.push(parse_row(line).ok_or_else(|| at("bad row"))?);
    }
    if !seen_header {
        return Err("missing header".into());
    }
    let mut get = |k: &str| meta.remove(k).ok_or(format!("missing metadata `{k}`"));
    let metadata = ReportMetadata {
        master_seed: get("master_seed")?.parse().map_err(|_| "bad master_seed".to_string())?,
        scenario: get("scenario")?,
        oracle: get("oracle")?,
        prng: get("prng")?,
        sampler: get("sampler")?,
        seed_rule: get("seed_rule")?,
        config_hash: get("config_hash")?,
    };
    Ok(Report { metadata, rows, fits })
}

fn parse_row(line: &str) -> Option<AggregateRow> {
    let f: Vec<&str> = line.split(',').collect();
    if f.len() != 11 {
        return None;
    }
    let x = |i: usize| f[i].parse::<f64>().ok();
    Some(AggregateRow {
        method: Method::parse(f[0])?,
        epsilon: x(1)?,
        run_count: f[2].parse().ok()?,
        coverage_fraction: x(3)?,
        mean_n_oracle: x(4)?,
        mean_total_shots: x(5)?,
        mean_classical_ops: x(6)?,
        mean_final_width: x(7)?,
        mean_r: x(8)?,
        worst_r: x(9)?,
        failures: f[10].parse().ok()?,
    })
}

fn parse_fit(rest: &str) -> Option<FitEntry> {
    let kv: std::collections::HashMap<&str, &str> =
        rest.split(' ').filter_map(|p| p.split_once('=')).collect();
    Some(FitEntry {
        method: Method::parse(kv.get("method")?)?,
        x: kv.get("x")?.to_string(),
        y: YField::parse(kv.get("y")?)?,
        fit: SlopeFit {
            slope: kv.get("slope")?.parse().ok()?,
            intercept: kv.get("intercept")?.parse().ok()?,
            r_squared: kv.get("r_squared")?.parse().ok()?,
            n_points: kv.get("n_points")?.parse().ok()?,
        },
    })
}
