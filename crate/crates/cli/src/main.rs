//! Experiment driver for the coupled-equation laboratory: linear regime
//! analysis, travelling-front profiles, direct simulation, invasion-speed
//! measurement, comparison-bound certification and parameter sweeps, all
//! from reproducible JSON configs with machine-readable CSV/JSON output.
//!
//! Exit codes: 0 success (and certificate PASS), 1 certificate FAIL,
//! 2 invalid input, 3 runtime failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anomalkpp_core::bounds::certify::CertifyConfig;
use anomalkpp_core::Params;
use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;

use commands::{Axis, CliError, Ctx, SpeedArgs};
use config::{Component, ExperimentConfig};

#[derive(Parser)]
#[command(name = "anomalkpp", version, about = "Numerical laboratory for anomalous invasion speeds in a coupled reaction-diffusion pair")]
struct Cli {
    /// JSON experiment config (simulate, speed, measure, sweep; optional
    /// overrides for certify)
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Output directory for artifacts [default: $ANOMALKPP_OUT or .]
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker threads for sweep fan-out [default: all cores]
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Regime classification, candidate speeds and branch collisions
    Analyze {
        #[arg(long)]
        d: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
    },
    /// Tabulate regimes and candidate speeds over a (d, alpha) grid
    RegimeMap {
        #[arg(long)]
        d_min: f64,
        #[arg(long)]
        d_max: f64,
        #[arg(long)]
        alpha_min: f64,
        #[arg(long)]
        alpha_max: f64,
        /// Points per axis
        #[arg(long, default_value_t = 50)]
        resolution: usize,
    },
    /// Solve a travelling front and dump its profile
    Front {
        #[arg(long)]
        d: f64,
        #[arg(long)]
        alpha: f64,
        /// Frame speed (must exceed 2 sqrt(d alpha))
        #[arg(long)]
        s: f64,
        #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
        y_min: f64,
        #[arg(long, default_value_t = 40.0)]
        y_max: f64,
        #[arg(long, default_value_t = 0.05)]
        dy: f64,
    },
    /// Integrate the coupled system, writing timestamped snapshots
    Simulate,
    /// Invasion-point trajectories and speed fits, inline or from snapshots
    Speed {
        /// Directory holding `snapshot-*.csv` files from a previous run
        #[arg(long, value_name = "DIR", conflicts_with = "config")]
        from: Option<PathBuf>,
        #[arg(long)]
        component: Option<Component>,
        #[arg(long)]
        level: Option<f64>,
        /// Fit window [T0, T1]; defaults to the second half of the data
        #[arg(long, num_args = 2, value_names = ["T0", "T1"])]
        fit_window: Option<Vec<f64>>,
    },
    /// Measure an invasion speed and compare it to the linear prediction
    Measure,
    /// Construct and verify the comparison bounds end to end
    Certify {
        #[arg(long)]
        d: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        /// Scalar front speed being certified from below
        #[arg(long)]
        s: Option<f64>,
        /// Co-moving frame speed
        #[arg(long)]
        sigma: Option<f64>,
        /// Frame speed of the travelling upper bound
        #[arg(long)]
        super_speed: Option<f64>,
    },
    /// Rerun a measurement along one parameter axis (parallel across runs)
    Sweep {
        #[arg(long, value_enum)]
        axis: Axis,
        /// Comma-separated values; empty produces an empty table
        #[arg(long, default_value = "")]
        values: String,
    },
}

fn load_json<T: DeserializeOwned>(path: &PathBuf) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

fn required_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    match &cli.config {
        Some(path) => load_json(path),
        None => Err(CliError::Usage(
            "this subcommand needs --config <file>".into(),
        )),
    }
}

fn run(cli: &Cli, ctx: &Ctx) -> Result<ExitCode, CliError> {
    match &cli.cmd {
        Cmd::Analyze { d, alpha, beta } => commands::analyze(ctx, *d, *alpha, *beta)?,
        Cmd::RegimeMap {
            d_min,
            d_max,
            alpha_min,
            alpha_max,
            resolution,
        } => commands::regime_map(
            ctx,
            (*d_min, *d_max),
            (*alpha_min, *alpha_max),
            *resolution,
        )?,
        Cmd::Front {
            d,
            alpha,
            s,
            y_min,
            y_max,
            dy,
        } => commands::front(ctx, *d, *alpha, *s, (*y_min, *y_max), *dy)?,
        Cmd::Simulate => commands::simulate(ctx, &required_config(cli)?)?,
        Cmd::Speed {
            from,
            component,
            level,
            fit_window,
        } => {
            let cfg = match from {
                Some(_) => None,
                None => Some(required_config(cli)?),
            };
            let args = SpeedArgs {
                from: from.clone(),
                component: *component,
                level: *level,
                fit_window: fit_window.as_ref().map(|w| (w[0], w[1])),
            };
            commands::speed(ctx, cfg.as_ref(), &args)?;
        }
        Cmd::Measure => commands::measure(ctx, &required_config(cli)?)?,
        Cmd::Certify {
            d,
            alpha,
            beta,
            s,
            sigma,
            super_speed,
        } => {
            let p = Params::new(*d, *alpha, *beta)?;
            let mut cfg: CertifyConfig = match &cli.config {
                Some(path) => load_json(path)?,
                None => CertifyConfig::default(),
            };
            if let Some(s) = s {
                cfg.s = *s;
            }
            if let Some(sigma) = sigma {
                cfg.sigma = *sigma;
            }
            if let Some(sp) = super_speed {
                cfg.super_speed = *sp;
            }
            let cert = commands::certify(ctx, p, &cfg)?;
            if !cert.pass {
                return Ok(ExitCode::from(1));
            }
        }
        Cmd::Sweep { axis, values } => {
            let values = parse_values(values)?;
            commands::sweep(ctx, &required_config(cli)?, *axis, &values)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_values(list: &str) -> Result<Vec<f64>, CliError> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| CliError::Usage(format!("bad value in --values: {s:?}")))
        })
        .collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        // Only sweeps fan out; a failure to size the pool (e.g. set twice in
        // tests) is not worth dying over.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let out = cli
        .out
        .clone()
        .or_else(|| std::env::var_os("ANOMALKPP_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let ctx = Ctx { out };
    match run(&cli, &ctx) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
