use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qae_core::adaptive::{self, AdaptiveConfig};
use qae_core::baselines::{self, CiMethod, IqaeConfig, MlaeConfig};
use qae_core::bench::{
    build_report, emit_report, fit_scaling, mlae_depth_for_epsilon, read_report, run_experiment,
    ExperimentConfig, Method, ReportFormat, Scenario, SlopeFit, YField,
};
use qae_core::math::ProbInterval;
use qae_core::oracle::{AmplitudeProblem, BinomialOracle, ExactOracle, GroverOracle};
use qae_core::Error;

/// Runs whose failure share exceeds this make `bench` exit with code 3.
const FAILURE_THRESHOLD: f64 = 0.10;

#[derive(Parser)]
#[command(name = "qae", version, about = "Amplitude estimation without phase estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum MethodArg {
    Adaptive,
    Mlae,
    IqaeCp,
    IqaeCh,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum ScenarioArg {
    UniformP,
    #[value(name = "boundary_p_025")]
    BoundaryP025,
    #[value(name = "shots_800")]
    Shots800,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum XArg {
    Epsilon,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum YArg {
    NOracle,
    ClassicalOps,
    TotalShots,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate a single amplitude and print the result as JSON.
    Estimate {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long = "K", default_value_t = 3)]
        k: u64,
        #[arg(long, default_value_t = 100)]
        shots: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "adaptive")]
        method: MethodArg,
        /// Deterministic oracle returning round(shots · probability).
        #[arg(long)]
        exact_oracle: bool,
        /// Skip the p → p/2 input halving (valid only when p ≤ 1/2).
        #[arg(long)]
        assume_p_le_half: bool,
    },
    /// Run a benchmark scenario and write an aggregate report.
    Bench {
        #[arg(long, value_enum)]
        scenario: ScenarioArg,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated precisions; defaults to 1e-3,…,1e-8.
        #[arg(long, value_delimiter = ',')]
        epsilons: Option<Vec<f64>>,
        /// Comma-separated methods; defaults depend on the scenario.
        #[arg(long, value_delimiter = ',', value_enum)]
        methods: Option<Vec<MethodArg>>,
        /// Number of `p` values per precision.
        #[arg(long, default_value_t = 100)]
        runs: usize,
        #[arg(long)]
        exact_oracle: bool,
    },
    /// Fit log10(y) against log10(ε) from a bench report.
    Fit {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "epsilon")]
        x: XArg,
        #[arg(long, value_enum)]
        y: YArg,
        /// Required when the report holds more than one method.
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
    },
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Adaptive => Method::Adaptive,
            MethodArg::Mlae => Method::Mlae,
            MethodArg::IqaeCp => Method::IqaeCp,
            MethodArg::IqaeCh => Method::IqaeCh,
        }
    }
}

#[derive(Serialize)]
struct EstimateOutput {
    method: &'static str,
    oracle: &'static str,
    seed: u64,
    epsilon: f64,
    interval: ProbInterval,
    width: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    estimate: Option<f64>,
    n_oracle: u64,
    total_shots: u64,
    classical_ops: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    rounds: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    worst_r: Option<f64>,
    flagged: bool,
}

#[derive(Serialize)]
struct FitOutput {
    method: &'static str,
    x: &'static str,
    y: &'static str,
    #[serde(flatten)]
    fit: SlopeFit,
}

enum Failure {
    Config(String),
    Run(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::TooFewPoints(_) | Error::Report { .. } | Error::Io { .. } => {
                Failure::Config(e.to_string())
            }
            _ => Failure::Run(e.to_string()),
        }
    }
}

fn estimate_with<O: GroverOracle>(
    oracle: &mut O,
    method: Method,
    epsilon: f64,
    alpha: f64,
    k: u64,
    shots: u64,
    halve: bool,
) -> Result<EstimateOutput, Failure> {
    let kind = oracle.kind();
    let base = |interval: ProbInterval| EstimateOutput {
        method: method.name(),
        oracle: kind,
        seed: 0,
        epsilon,
        interval,
        width: interval.width(),
        estimate: None,
        n_oracle: 0,
        total_shots: 0,
        classical_ops: 0,
        rounds: None,
        mean_r: None,
        worst_r: None,
        flagged: false,
    };
    match method {
        Method::Adaptive => {
            let cfg = AdaptiveConfig {
                k,
                n_shots: shots,
                halve_input: halve,
                ..AdaptiveConfig::new(epsilon, alpha)
            };
            let res = adaptive::run(&cfg, oracle)?;
            Ok(EstimateOutput {
                n_oracle: res.n_oracle,
                total_shots: res.total_shots,
                classical_ops: res.classical_ops,
                rounds: Some(res.rounds.len()),
                mean_r: Some(res.mean_r()),
                worst_r: Some(res.worst_r()),
                ..base(res.interval)
            })
        }
        _ => {
            let res = match method {
                Method::Mlae => {
                    let t = mlae_depth_for_epsilon(epsilon, shots, alpha);
                    baselines::run_mlae(&MlaeConfig::new(t, shots, alpha), oracle)?
                }
                Method::IqaeCp => baselines::run_iqae(
                    &IqaeConfig::new(epsilon, alpha, shots, CiMethod::ClopperPearson),
                    oracle,
                )?,
                _ => baselines::run_iqae(
                    &IqaeConfig::new(epsilon, alpha, shots, CiMethod::ChernoffHoeffding),
                    oracle,
                )?,
            };
            Ok(EstimateOutput {
                estimate: res.estimate,
                n_oracle: res.n_oracle,
                total_shots: res.total_shots,
                classical_ops: res.classical_ops,
                flagged: res.flagged,
                ..base(res.interval)
            })
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Estimate {
            p,
            epsilon,
            alpha,
            k,
            shots,
            seed,
            method,
            exact_oracle,
            assume_p_le_half,
        } => {
            if assume_p_le_half && p > 0.5 {
                return Err(Failure::Config(format!("--assume-p-le-half given but p = {p}")));
            }
            let problem = AmplitudeProblem::new(p, "cli")?;
            let method = Method::from(method);
            let halve = !assume_p_le_half;
            let mut out = if exact_oracle {
                estimate_with(&mut ExactOracle::new(problem), method, epsilon, alpha, k, shots, halve)?
            } else {
                estimate_with(&mut BinomialOracle::new(problem, seed), method, epsilon, alpha, k, shots, halve)?
            };
            out.seed = seed;
            println!("{}", serde_json::to_string_pretty(&out).expect("serializable"));
            Ok(())
        }
        Command::Bench {
            scenario,
            out,
            format,
            seed,
            epsilons,
            methods,
            runs,
            exact_oracle,
        } => {
            let scenario = match scenario {
                ScenarioArg::UniformP => Scenario::UniformP,
                ScenarioArg::BoundaryP025 => Scenario::BoundaryP025,
                ScenarioArg::Shots800 => Scenario::Shots800,
            };
            let mut config = ExperimentConfig::new(scenario, seed);
            if let Some(e) = epsilons {
                config.epsilons = e;
            }
            if let Some(m) = methods {
                config.methods = m.into_iter().map(Method::from).collect();
            }
            config.n_p_samples = runs;
            config.exact_oracle = exact_oracle;
            let experiment = run_experiment(&config, false)?;
            let format = match format {
                FormatArg::Csv => ReportFormat::Csv,
                FormatArg::Json => ReportFormat::Json,
            };
            emit_report(&build_report(&config, &experiment), format, &out)?;
            let failed = experiment.failure_fraction();
            eprintln!(
                "{} runs in {:.2}s, {:.1}% failed",
                experiment.records.len(),
                experiment.elapsed.as_secs_f64(),
                100.0 * failed
            );
            if failed > FAILURE_THRESHOLD {
                return Err(Failure::Run(format!(
                    "{:.1}% of runs failed (threshold {:.0}%)",
                    100.0 * failed,
                    100.0 * FAILURE_THRESHOLD
                )));
            }
            Ok(())
        }
        Command::Fit { input, x: XArg::Epsilon, y, method } => {
            let report = read_report(&input)?;
            let mut present: Vec<Method> = report.rows.iter().map(|r| r.method).collect();
            present.sort();
            present.dedup();
            let method = match method.map(Method::from) {
                Some(m) => m,
                None if present.len() == 1 => present[0],
                None => {
                    return Err(Failure::Config(format!(
                        "report holds {} methods; pick one with --method",
                        present.len()
                    )))
                }
            };
            let rows: Vec<_> = report.rows.into_iter().filter(|r| r.method == method).collect();
            let y = match y {
                YArg::NOracle => YField::NOracle,
                YArg::ClassicalOps => YField::ClassicalOps,
                YArg::TotalShots => YField::TotalShots,
            };
            let fit = fit_scaling(&rows, y)?;
            let out = FitOutput {
                method: method.name(),
                x: "epsilon",
                y: y.name(),
                fit,
            };
            println!("{}", serde_json::to_string_pretty(&out).expect("serializable"));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
