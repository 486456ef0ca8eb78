//! `tempo`: run simulations from a TOML config, sweep one parameter, and fit
//! or extrapolate decay rates.
//!
//! Exit codes: 0 success, 2 configuration or input error, 3 numerical
//! failure, 4 some sweep entries failed, 5 analysis error.

mod config;
mod io;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use tempo_core::analysis::{extrapolate_gamma, extrapolate_with_sensitivity, fit_exponential, DecayFit};
use tempo_core::engine::{run_brute_force, run_tempo_observed, Trajectory};
use tempo_core::influence::TrotterMode;
use tempo_core::TempoError;

use config::{ConfigError, RunConfig, Solver, SweepParam};
use io::{read_gamma_points, read_table, summary_csv, trajectory_csv, write_atomic, write_json, SchemaError, SummaryRow};

#[derive(Parser)]
#[command(name = "tempo", version, about = "Non-Markovian open quantum dynamics with tensor networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation; writes trajectory.csv and manifest.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Print one line per step to stderr.
        #[arg(long)]
        progress: bool,
    },
    /// Run the config once per value of one parameter, in parallel.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        param: SweepParam,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
        /// Fit an exponential tail to this observable for each run.
        #[arg(long)]
        fit: Option<String>,
        /// Parallel runs; defaults to the number of cores.
        #[arg(long, env = "TEMPO_WORKERS")]
        workers: Option<usize>,
    },
    /// Fit `y ≈ A·exp(−γt)` to one column of a trajectory CSV.
    Fit {
        #[arg(long)]
        input: PathBuf,
        /// Column to fit; defaults to the first observable.
        #[arg(long)]
        column: Option<String>,
        /// `t_lo,t_hi`; defaults to the last third of the trajectory.
        #[arg(long, value_parser = parse_window)]
        window: Option<(f64, f64)>,
        /// Write JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cubic extrapolation of γ in 1/K from a memory-length sweep summary.
    Extrapolate {
        #[arg(long)]
        input: PathBuf,
        /// Same sweep at a different λ_c; reports |Δγ_inf| as sensitivity.
        #[arg(long)]
        refined: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// An error together with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn numerical_code(e: &TempoError) -> u8 {
    match e {
        TempoError::InvalidParameter { .. }
        | TempoError::UnsupportedDimension(_)
        | TempoError::NotHermitian(_)
        | TempoError::SpectralTable(_)
        | TempoError::DenseLimit { .. } => 2,
        TempoError::FitWindow(_) | TempoError::RankDeficient(_) | TempoError::NoZeroCrossing => 5,
        _ => 3,
    }
}

fn classify(error: anyhow::Error) -> Failure {
    let code = if error.downcast_ref::<ConfigError>().is_some() || error.downcast_ref::<SchemaError>().is_some() {
        2
    } else if let Some(e) = error.downcast_ref::<TempoError>() {
        numerical_code(e)
    } else if error.downcast_ref::<csv::Error>().is_some() {
        2
    } else {
        1
    };
    Failure { code, error }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out, progress } => cmd_run(&config, &out, progress),
        Command::Sweep { config, param, values, out, fit, workers } => {
            cmd_sweep(&config, param, &values, &out, fit.as_deref(), workers)
        }
        Command::Fit { input, column, window, out } => cmd_fit(&input, column.as_deref(), window, out.as_deref()),
        Command::Extrapolate { input, refined, out } => cmd_extrapolate(&input, refined.as_deref(), out.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

type CmdResult = std::result::Result<u8, Failure>;

#[derive(Serialize)]
struct StatsSummary {
    peak_bond: usize,
    peak_n_tot: usize,
    final_n_tot: usize,
    discarded_weight: f64,
    max_trace_error: f64,
    step_seconds: f64,
}

/// Everything needed to reproduce a run and find its outputs.
#[derive(Serialize)]
struct RunManifest<'a> {
    version: &'static str,
    config: &'a RunConfig,
    delta: f64,
    steps: usize,
    #[serde(rename = "K")]
    memory_len: usize,
    lambda_c: f64,
    mode: TrotterMode,
    reduce: bool,
    solver: Solver,
    started: String,
    finished: String,
    wall_seconds: f64,
    stats: StatsSummary,
    outputs: Vec<String>,
}

struct RunOutput {
    trajectory: Trajectory,
    seconds: f64,
}

fn execute(cfg: &RunConfig, out: &Path, progress: bool) -> Result<RunOutput> {
    let sim = cfg.simulation()?;
    let started = chrono::Utc::now();
    let clock = Instant::now();
    let trajectory = match cfg.sim.solver {
        Solver::Tempo => run_tempo_observed(&sim, |t| {
            if progress {
                let n = t.len() - 1;
                eprintln!("step {n}/{} bond {} n_tot {}", sim.steps, t.stats.bond_max[n], t.stats.n_tot[n]);
            }
        })?,
        Solver::Dense => run_brute_force(&sim)?,
    };
    let seconds = clock.elapsed().as_secs_f64();
    let finished = chrono::Utc::now();

    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let csv_path = out.join("trajectory.csv");
    let comments = vec![
        format!("tempo {}", env!("CARGO_PKG_VERSION")),
        format!(
            "delta={} steps={} K={} lambda_c={:e} mode={:?} reduce={}",
            sim.delta, sim.steps, sim.memory_len, sim.policy.relative_cutoff, sim.mode, sim.reduce
        ),
    ];
    write_atomic(&csv_path, &trajectory_csv(&trajectory, &comments)?)?;
    let stats = &trajectory.stats;
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        delta: sim.delta,
        steps: sim.steps,
        memory_len: sim.effective_memory(),
        lambda_c: sim.policy.relative_cutoff,
        mode: sim.mode,
        reduce: sim.reduce,
        solver: cfg.sim.solver,
        started: started.to_rfc3339(),
        finished: finished.to_rfc3339(),
        wall_seconds: seconds,
        stats: StatsSummary {
            peak_bond: stats.peak_bond(),
            peak_n_tot: stats.peak_n_tot(),
            final_n_tot: stats.n_tot.last().copied().unwrap_or(0),
            discarded_weight: stats.discarded_weight.last().copied().unwrap_or(0.0),
            max_trace_error: trajectory.trace_error.iter().copied().fold(0.0, f64::max),
            step_seconds: stats.step_seconds.iter().sum(),
        },
        outputs: vec!["trajectory.csv".into(), "manifest.json".into()],
    };
    write_json(&out.join("manifest.json"), &manifest)?;
    Ok(RunOutput { trajectory, seconds })
}

fn cmd_run(config: &Path, out: &Path, progress: bool) -> CmdResult {
    let cfg = RunConfig::load(config).map_err(|e| classify(e.into()))?;
    let run = execute(&cfg, out, progress).map_err(classify)?;
    eprintln!("{} steps in {:.2}s -> {}", run.trajectory.len() - 1, run.seconds, out.display());
    Ok(0)
}

fn cmd_sweep(config: &Path, param: SweepParam, values: &[f64], out: &Path, fit: Option<&str>, workers: Option<usize>) -> CmdResult {
    let cfg = RunConfig::load(config).map_err(|e| classify(e.into()))?;
    if values.is_empty() {
        return Err(Failure { code: 2, error: anyhow!("--values is empty; nothing to sweep") });
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        if n == 0 {
            return Err(Failure { code: 2, error: anyhow!("TEMPO_WORKERS / --workers must be ≥ 1") });
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| Failure { code: 1, error: e.into() })?;

    let rows: Vec<SummaryRow> = pool.install(|| {
        values
            .par_iter()
            .map(|&value| {
                let dir = out.join(format!("{}_{value}", param.key()));
                let outcome = cfg.with_param(param, value).map_err(anyhow::Error::from).and_then(|c| execute(&c, &dir, false));
                match outcome {
                    Ok(run) => {
                        let gamma = fit.and_then(|col| match run.trajectory.observable(col) {
                            Some(y) => match fit_exponential(&run.trajectory.times, y, None) {
                                Ok(f) => Some(f.gamma),
                                Err(e) => {
                                    eprintln!("{}={value}: fit of `{col}` failed: {e}", param.key());
                                    None
                                }
                            },
                            None => {
                                eprintln!("{}={value}: no observable `{col}`", param.key());
                                None
                            }
                        });
                        eprintln!("{}={value}: done in {:.2}s", param.key(), run.seconds);
                        SummaryRow {
                            value,
                            gamma,
                            n_tot: Some(run.trajectory.stats.peak_n_tot()),
                            bond_max: Some(run.trajectory.stats.peak_bond()),
                            seconds: Some(run.seconds),
                            status: "ok".into(),
                        }
                    }
                    Err(e) => {
                        let f = classify(e);
                        eprintln!("{}={value}: {:#}", param.key(), f.error);
                        let status = match f.code {
                            2 => "config_error",
                            3 => "numerical_failure",
                            _ => "failed",
                        };
                        SummaryRow { value, gamma: None, n_tot: None, bond_max: None, seconds: None, status: status.into() }
                    }
                }
            })
            .collect()
    });

    let bytes = summary_csv(&rows).map_err(classify)?;
    write_atomic(&out.join("summary.csv"), &bytes).map_err(classify)?;
    let failed = rows.iter().filter(|r| r.status != "ok").count();
    if failed > 0 {
        eprintln!("{failed} of {} runs failed", rows.len());
        return Ok(4);
    }
    Ok(0)
}

#[derive(Serialize)]
struct FitRecord<'a> {
    input: &'a Path,
    column: &'a str,
    #[serde(flatten)]
    fit: DecayFit,
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => write_json(path, value),
        None => {
            println!("{}", serde_json::to_string_pretty(value)?);
            Ok(())
        }
    }
}

fn parse_window(s: &str) -> std::result::Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(',').ok_or("expected `t_lo,t_hi`")?;
    let parse = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}"));
    Ok((parse(lo)?, parse(hi)?))
}

fn cmd_fit(input: &Path, column: Option<&str>, window: Option<(f64, f64)>, out: Option<&Path>) -> CmdResult {
    let table = read_table(input).map_err(classify)?;
    let schema = |reason: String| classify(SchemaError { path: input.into(), reason }.into());
    let times = table.column("time").ok_or_else(|| schema("missing column `time`".into()))?;
    let name = match column {
        Some(c) => c.to_string(),
        None => table
            .header
            .iter()
            .find(|h| !matches!(h.as_str(), "step" | "time" | "trace_error" | "bond_max" | "n_tot"))
            .cloned()
            .ok_or_else(|| schema("no observable column".into()))?,
    };
    let values = table.column(&name).ok_or_else(|| schema(format!("missing column `{name}`")))?;
    let fit = fit_exponential(times, values, window).map_err(|e| classify(e.into()))?;
    emit(&FitRecord { input, column: &name, fit }, out).map_err(classify)?;
    Ok(0)
}

fn cmd_extrapolate(input: &Path, refined: Option<&Path>, out: Option<&Path>) -> CmdResult {
    let points = read_gamma_points(input).map_err(classify)?;
    let result = match refined {
        Some(other) => {
            let other = read_gamma_points(other).map_err(classify)?;
            extrapolate_with_sensitivity(&points, &other)
        }
        None => extrapolate_gamma(&points),
    }
    .map_err(|e| classify(e.into()))?;
    emit(&result, out).map_err(classify)?;
    Ok(0)
}
