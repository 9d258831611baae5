mod config;
mod svg;

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fhnburst::burst::{
    analyze_with, count_spikes, estimate_on_trajectory, simulate_standard, BurstError, Protocol,
    DEFAULT_F_BURST,
};
use fhnburst::geometry::{classify_region, fold_thresholds, folded_equilibria};
use fhnburst::manifold::{solve_expansion, theta_at_lower_bound, VALIDITY_WINDOW};
use fhnburst::model::{derived_constants, wrap_phase};
use fhnburst::sweep::contour::{
    cell_size, detect_cusps, extract_boundaries, l2_levelsets, DEFAULT_CUSP_ANGLE_DEG,
    DEFAULT_CUSP_WINDOW, DEFAULT_L2_LEVELS,
};
use fhnburst::sweep::{run_sweep, write_atomic, AxisRange, Metric, RunOptions, SweepError, SweepSpec};
use fhnburst::{Branch, Forcing, IntegratorConfig, ModelParams, SweepGrid};
use serde_json::{json, Value};

use config::SweepFile;

/// Spike-adding analysis of the periodically forced FitzHugh-Nagumo model.
#[derive(Parser)]
#[command(name = "fhnburst", version)]
struct Cli {
    #[command(flatten)]
    model: ModelArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ModelArgs {
    /// Model parameter a [default: 0.875].
    #[arg(long, global = true)]
    a: Option<f64>,
    /// Model parameter b [default: 0.8].
    #[arg(long, global = true)]
    b: Option<f64>,
    /// Timescale ratio eps [default: 0.08].
    #[arg(long, global = true)]
    eps: Option<f64>,
    /// Integrator relative tolerance [default: 1e-8].
    #[arg(long, global = true)]
    rel_tol: Option<f64>,
    /// Integrator absolute tolerance [default: 1e-10].
    #[arg(long, global = true)]
    abs_tol: Option<f64>,
}

#[derive(Args, Clone, Copy)]
struct ForcingArgs {
    /// Forcing amplitude.
    #[arg(long = "E", allow_negative_numbers = true)]
    amplitude: f64,
    /// Forcing angular frequency.
    #[arg(long, allow_negative_numbers = true)]
    omega: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one parameter point and print burst metrics as JSON.
    Simulate {
        #[command(flatten)]
        forcing: ForcingArgs,
        /// Measured forcing periods.
        #[arg(long, default_value_t = 2)]
        periods: u32,
        /// Discarded forcing periods before measuring.
        #[arg(long, default_value_t = 2)]
        burn_in: u32,
        /// Firing-rate constant of the spike estimate.
        #[arg(long, default_value_t = DEFAULT_F_BURST)]
        f_burst: f64,
        /// Write the measured time series (t,x,y,theta) as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write x against the forcing phase as SVG.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Print the folded equilibria, their eigenpairs and the region as JSON.
    Equilibria {
        #[command(flatten)]
        forcing: ForcingArgs,
    },
    /// Print the region label and the four fold thresholds.
    Regions {
        #[command(flatten)]
        forcing: ForcingArgs,
    },
    /// Solve the quintic series of a saddle manifold and print it as JSON.
    Manifold {
        #[command(flatten)]
        forcing: ForcingArgs,
        #[arg(long, value_enum)]
        branch: BranchArg,
        /// Write a sampled (theta,u,x) polyline as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Samples across the validity window.
        #[arg(long, default_value_t = 201)]
        samples: usize,
    },
    /// Run a parameter sweep over (omega, E).
    Sweep(SweepArgs),
    /// Compare the phase-gap estimate with the simulated spike count.
    Estimate {
        #[command(flatten)]
        forcing: ForcingArgs,
        #[arg(long, default_value_t = DEFAULT_F_BURST)]
        f_burst: f64,
    },
    /// Extract spike-count boundaries, L2 level sets and cusps from a grid CSV.
    Contours {
        /// Grid CSV written by `sweep`.
        #[arg(long)]
        grid: PathBuf,
        /// Write the JSON here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Number of L2 level sets.
        #[arg(long, default_value_t = DEFAULT_L2_LEVELS)]
        levels: usize,
        /// Vertices on each side of a cusp candidate.
        #[arg(long, default_value_t = DEFAULT_CUSP_WINDOW)]
        cusp_window: usize,
        /// Largest opening angle counted as a cusp, in degrees.
        #[arg(long, default_value_t = DEFAULT_CUSP_ANGLE_DEG)]
        cusp_angle: f64,
        /// Write the (omega, E) diagram as SVG.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SweepArgs {
    /// `key = value` sweep file; flags override its entries.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Omega axis as `lo:hi:n` or `lo:hi@step`.
    #[arg(long)]
    omega: Option<String>,
    /// Amplitude axis as `lo:hi:n` or `lo:hi@step`.
    #[arg(long = "E")]
    amplitude: Option<String>,
    /// Comma-separated subset of spike_count, l2, est_count, region.
    #[arg(long)]
    metrics: Option<String>,
    #[arg(long)]
    workers: Option<usize>,
    /// Cells per checkpoint flush.
    #[arg(long)]
    checkpoint_every: Option<usize>,
    #[arg(long)]
    f_burst: Option<f64>,
    /// Grid CSV path [default: grid.csv].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Checkpoint log; an existing log for the same spec is resumed.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Stop after this many new cells (needs --checkpoint).
    #[arg(long, requires = "checkpoint")]
    halt_after: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BranchArg {
    Stable,
    Unstable,
}

impl From<BranchArg> for Branch {
    fn from(b: BranchArg) -> Self {
        match b {
            BranchArg::Stable => Branch::Stable,
            BranchArg::Unstable => Branch::Unstable,
        }
    }
}

enum Failure {
    Usage(String),
    Compute { kind: &'static str, message: String },
}

fn compute(kind: &'static str) -> impl Fn(String) -> Failure {
    move |message| Failure::Compute { kind, message }
}

fn burst_err(e: BurstError) -> Failure {
    let kind = match e {
        BurstError::Integration(_) => "integration",
        BurstError::Geometry(_) | BurstError::NoEquilibrium(_) => "geometry",
        BurstError::Manifold(_) => "manifold",
        _ => "analysis",
    };
    Failure::Compute { kind, message: e.to_string() }
}

fn sweep_err(e: SweepError) -> Failure {
    let kind = match e {
        SweepError::InvalidSpec(_) => return Failure::Usage(e.to_string()),
        SweepError::Io { .. } => "io",
        SweepError::CheckpointMismatch { .. } | SweepError::CorruptCheckpoint { .. } => "checkpoint",
        SweepError::Halted { .. } => "halted",
        SweepError::IncompleteGrid(_) | SweepError::MalformedCsv { .. } => "grid",
    };
    Failure::Compute { kind, message: e.to_string() }
}

fn io_failure(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::Compute {
        kind: "io",
        message: format!("{}: {e}", path.display()),
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    write_atomic(path, text.as_bytes()).map_err(sweep_err)
}

fn model(args: &ModelArgs, file: Option<&SweepFile>) -> Result<(ModelParams, IntegratorConfig), Failure> {
    let from_file = |key: &str| -> Result<Option<f64>, Failure> {
        file.map_or(Ok(None), |f| f.get(key)).map_err(Failure::Usage)
    };
    let d = ModelParams::default();
    let params = ModelParams {
        a: args.a.or(from_file("a")?).unwrap_or(d.a),
        b: args.b.or(from_file("b")?).unwrap_or(d.b),
        eps: args.eps.or(from_file("eps")?).unwrap_or(d.eps),
    };
    params.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let c = IntegratorConfig::default();
    let config = IntegratorConfig {
        rel_tol: args.rel_tol.or(from_file("rel_tol")?).unwrap_or(c.rel_tol),
        abs_tol: args.abs_tol.or(from_file("abs_tol")?).unwrap_or(c.abs_tol),
        ..c
    };
    config.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok((params, config))
}

fn forcing(args: ForcingArgs) -> Result<Forcing, Failure> {
    Forcing::new(args.amplitude, args.omega).map_err(|e| Failure::Usage(e.to_string()))
}

/// Writes to standard output; a closed pipe is not an error.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn print_json(v: &Value) {
    emit(&format!("{}\n", serde_json::to_string_pretty(v).expect("JSON values always serialize")));
}

fn run(cli: Cli) -> Result<(), Failure> {
    let sweep_file = match &cli.command {
        Command::Sweep(SweepArgs { spec: Some(path), .. }) => {
            let text = fs::read_to_string(path).map_err(io_failure(path))?;
            Some(SweepFile::parse(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?)
        }
        _ => None,
    };
    let (params, config) = model(&cli.model, sweep_file.as_ref())?;

    match cli.command {
        Command::Simulate { forcing: f, periods, burn_in, f_burst, out, svg } => {
            let f = forcing(f)?;
            if periods == 0 {
                return Err(Failure::Usage("--periods must be positive".into()));
            }
            let protocol = Protocol { burn_in_periods: burn_in, measure_periods: periods };
            let (traj, metrics) = analyze_with(&params, &f, &config, protocol, f_burst).map_err(burst_err)?;
            let theta: Vec<f64> = traj.times.iter().map(|t| wrap_phase(f.omega * t)).collect();
            if let Some(path) = out {
                let mut text = String::from("t,x,y,theta\n");
                for ((t, s), th) in traj.times.iter().zip(&traj.states).zip(&theta) {
                    let _ = writeln!(text, "{t:.16e},{:.16e},{:.16e},{th:.16e}", s[0], s[1]);
                }
                write_file(&path, &text)?;
            }
            if let Some(path) = svg {
                let x: Vec<f64> = traj.states.iter().map(|s| s[0]).collect();
                write_file(&path, &svg::trajectory(&theta, &x))?;
            }
            let mut v = serde_json::to_value(&metrics).map_err(|e| compute("serialize")(e.to_string()))?;
            v["region"] = json!(classify_region(&params, &f).as_str());
            v["steps"] = json!(traj.len());
            print_json(&v);
        }
        Command::Equilibria { forcing: f } => {
            let f = forcing(f)?;
            let eq = folded_equilibria(&params, &f).map_err(|e| compute("geometry")(e.to_string()))?;
            let delta = f.delta(&params);
            print_json(&json!({
                "E": f.amplitude,
                "omega": f.omega,
                "delta": delta,
                "region": classify_region(&params, &f).as_str(),
                "derived": derived_constants(&params, &f),
                "thresholds": fold_thresholds(&params, delta),
                "equilibria": eq,
            }));
        }
        Command::Regions { forcing: f } => {
            let f = forcing(f)?;
            let th = fold_thresholds(&params, f.delta(&params));
            emit(&format!(
                "{}\ne_star_left = {}\ne_2star_left = {}\ne_star_right = {}\ne_2star_right = {}\n",
                classify_region(&params, &f),
                th.e_star_left,
                th.e_2star_left,
                th.e_star_right,
                th.e_2star_right
            ));
        }
        Command::Manifold { forcing: f, branch, out, samples } => {
            let f = forcing(f)?;
            if samples < 2 {
                return Err(Failure::Usage("--samples must be at least 2".into()));
            }
            let exp = solve_expansion(branch.into(), &params, &f).map_err(|e| compute("manifold")(e.to_string()))?;
            let mut v = serde_json::to_value(exp).map_err(|e| compute("serialize")(e.to_string()))?;
            if let Ok(c) = theta_at_lower_bound(&exp) {
                v["lower_bound_crossing"] = json!(c);
            }
            if let Some(path) = out {
                let mut text = String::from("theta,u,x\n");
                for i in 0..samples {
                    let th = -VALIDITY_WINDOW + 2.0 * VALIDITY_WINDOW * i as f64 / (samples - 1) as f64;
                    let u = exp.eval_offset(th);
                    let _ = writeln!(
                        text,
                        "{:.16e},{u:.16e},{:.16e}",
                        wrap_phase(exp.theta_base + th),
                        u - 1.0
                    );
                }
                write_file(&path, &text)?;
            }
            print_json(&v);
        }
        Command::Sweep(args) => sweep(args, sweep_file.unwrap_or_default(), &params, &config)?,
        Command::Estimate { forcing: f, f_burst } => {
            let f = forcing(f)?;
            let traj = simulate_standard(&params, &f, &config).map_err(burst_err)?;
            let simulated = count_spikes(&traj, Protocol::default().measure_periods);
            let mut v = json!({ "E": f.amplitude, "omega": f.omega, "simulated": simulated });
            match estimate_on_trajectory(&traj, &params, &f, f_burst) {
                Ok(est) => {
                    v["estimated"] = json!(est.estimate);
                    v["detail"] = json!(est);
                }
                Err(BurstError::NoFirstSpike) => v["estimated"] = json!(0),
                Err(e) => return Err(burst_err(e)),
            }
            print_json(&v);
        }
        Command::Contours { grid, out, levels, cusp_window, cusp_angle, svg } => {
            let text = fs::read_to_string(&grid).map_err(io_failure(&grid))?;
            let g = SweepGrid::from_csv(&text).map_err(sweep_err)?;
            let boundaries = extract_boundaries(&g).map_err(sweep_err)?;
            let levelsets = l2_levelsets(&g, levels).map_err(sweep_err)?;
            let cusps = detect_cusps(&boundaries, cell_size(&g), cusp_window, cusp_angle);
            if let Some(path) = svg {
                write_file(&path, &svg::diagram(&g, &boundaries, &levelsets, &cusps))?;
            }
            let v = json!({ "boundaries": boundaries, "levelsets": levelsets, "cusps": cusps });
            match out {
                Some(path) => write_file(&path, &serde_json::to_string_pretty(&v).expect("serializable"))?,
                None => print_json(&v),
            }
        }
    }
    Ok(())
}

fn sweep(args: SweepArgs, file: SweepFile, params: &ModelParams, config: &IntegratorConfig) -> Result<(), Failure> {
    let usage = Failure::Usage;
    let axis = |flag: Option<&String>, key: &str| -> Result<AxisRange, Failure> {
        match flag {
            Some(s) => config::parse_axis(s).map_err(|e| usage(format!("--{key}: {e}"))),
            None => file
                .axis(key)
                .map_err(usage)?
                .ok_or_else(|| usage(format!("missing {key} axis (flag or spec file)"))),
        }
    };
    let mut spec = SweepSpec::new(axis(args.omega.as_ref(), "omega")?, axis(args.amplitude.as_ref(), "E")?);
    spec.metrics = match args.metrics {
        Some(m) => config::parse_metrics(&m).map_err(usage)?,
        None => file.metrics().map_err(usage)?.unwrap_or_else(|| Metric::ALL.to_vec()),
    };
    if let Some(w) = args.workers.or(file.get("workers").map_err(usage)?) {
        spec.workers = w;
    }
    if let Some(k) = args.checkpoint_every.or(file.get("checkpoint_every").map_err(usage)?) {
        spec.checkpoint_every = k;
    }
    if let Some(fb) = args.f_burst.or(file.get("f_burst").map_err(usage)?) {
        spec.f_burst = fb;
    }
    spec.validate().map_err(sweep_err)?;
    let out = args
        .out
        .or(file.raw("out").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("grid.csv"));
    let options = RunOptions {
        checkpoint: args.checkpoint.or(file.raw("checkpoint").map(PathBuf::from)),
        halt_after: args.halt_after,
    };
    let grid = run_sweep(&spec, params, config, &options).map_err(sweep_err)?;
    grid.write_files(&out).map_err(sweep_err)?;
    let failed = grid.cells.iter().filter(|c| !c.is_ok()).count();
    print_json(&json!({
        "out": out,
        "cells": grid.cells.len(),
        "failed": failed,
        "spec_hash": grid.meta.spec_hash,
    }));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (code, kind, message) = match f {
                Failure::Usage(m) => (2, "usage", m),
                Failure::Compute { kind, message } => (1, kind, message),
            };
            eprintln!("{}", json!({ "error": kind, "message": message }));
            ExitCode::from(code)
        }
    }
}
