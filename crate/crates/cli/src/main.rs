//! `mhd`: command-line front end for the channel MHD toolkit.
//!
//! Subcommands:
//! - `run` — a single simulation from a TOML config file; writes the run
//!   record (JSON), the diagnostic series (CSV), and any checkpoints.
//! - `sweep` — a dissipation ladder against a shared zero-dissipation
//!   reference, with error/dissipation/pressure tables and a rate report.
//! - `audit` — energy-balance audit of a stored run record.
//! - `profile` — boundary-layer extraction from a paired pair of
//!   checkpoints (dissipative run vs reference).
//! - `norms` — norm and regularity diagnostics of one checkpoint.
//!
//! On success every command exits 0. On failure one JSON object
//! `{"category": ..., "message": ...}` is printed to stderr and the exit
//! code encodes the category: 2 configuration, 3 usage, 4 numerical,
//! 5 i/o. The `MHD_WORKERS` environment variable bounds the sweep worker
//! pool (default: available parallelism).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mhd_core::harness::{self, RateFit};
use mhd_core::norms;
use mhd_core::records::{self, CheckpointMeta, RunRecord};
use mhd_core::solver::{self, SimConfig, Variant};
use mhd_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "mhd",
    version,
    about = "Incompressible MHD in a periodic channel: runs, sweeps, audits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation from a config file and persist its outputs.
    Run(RunArgs),
    /// Run a dissipation ladder and fit error-decay rates.
    Sweep(SweepArgs),
    /// Check the energy balance of a stored run record.
    Audit(AuditArgs),
    /// Extract the wall-layer profile from a paired checkpoint pair.
    Profile(ProfileArgs),
    /// Print norm and regularity diagnostics of a checkpoint.
    Norms(NormsArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file (fields mirror the run configuration).
    config: PathBuf,
    /// Output directory for record.json, series.csv, and checkpoints.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// TOML configuration of the base run (dissipative variant; its
    /// dissipation value is overridden by the ladder).
    config: PathBuf,
    /// Output directory for the CSV tables and the rate report.
    #[arg(long, default_value = "sweep-out")]
    out: PathBuf,
    /// Comma-separated dissipation ladder (default: built-in five-value
    /// ladder 1e-2 .. 6.25e-4).
    #[arg(long, value_delimiter = ',')]
    epsilons: Vec<f64>,
    /// Comma-separated comparison times (default: 0.5).
    #[arg(long, value_delimiter = ',')]
    times: Vec<f64>,
}

#[derive(Args)]
struct AuditArgs {
    /// Run record JSON file produced by `run`.
    record: PathBuf,
    /// Dissipation coefficient to audit against (default: the record's).
    #[arg(long)]
    epsilon: Option<f64>,
    /// Friction coefficient (default: the record's).
    #[arg(long)]
    zeta: Option<f64>,
    /// Optional CSV output of the per-sample residual series.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProfileArgs {
    /// Checkpoint of the dissipative run.
    dissipative: PathBuf,
    /// Checkpoint of the zero-dissipation reference at the same time.
    reference: PathBuf,
    /// Which field to profile.
    #[arg(long, default_value = "v", value_parser = ["v", "h"])]
    field: String,
    /// Optional CSV output of the full wall-distance profile.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct NormsArgs {
    /// Checkpoint file.
    checkpoint: PathBuf,
    /// Sobolev exponents for the first-order norms (comma separated,
    /// each in [2, infinity)).
    #[arg(long, value_delimiter = ',', default_value = "4")]
    exponents: Vec<f64>,
    /// Order of the regularity functional (1..=4).
    #[arg(long, default_value_t = 2)]
    order: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Audit(args) => cmd_audit(&args),
        Command::Profile(args) => cmd_profile(&args),
        Command::Norms(args) => cmd_norms(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let payload = serde_json::json!({
                "category": e.category(),
                "message": e.to_string(),
            });
            eprintln!("{payload}");
            ExitCode::from(match e.category() {
                "config" => 2u8,
                "usage" => 3,
                "numerical" => 4,
                _ => 5,
            })
        }
    }
}

/// Read a TOML config file into a run configuration.
fn load_config(path: &Path) -> Result<SimConfig> {
    let text = fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| Error::Config {
        field: path.display().to_string(),
        message: e.to_string(),
    })
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let cfg = load_config(&args.config)?;
    let output = solver::run(&cfg)?;
    let mut record = output.record;

    fs::create_dir_all(&args.out)?;
    let meta = CheckpointMeta {
        epsilon: cfg.epsilon,
        zeta: cfg.zeta,
    };
    for (snap, reference) in output.snapshots.iter().zip(record.checkpoints.iter_mut()) {
        let name = format!("checkpoint_{:06}.snap", reference.step);
        records::write_checkpoint(&args.out.join(&name), snap, meta)?;
        reference.path = Some(name);
    }
    let record_path = args.out.join("record.json");
    record.save(&record_path)?;
    harness::write_series_csv(&args.out.join("series.csv"), &record)?;

    let s = &record.series;
    let last = s.len() - 1;
    println!(
        "run complete: {} steps to t = {}, energy {:.6e} -> {:.6e}",
        cfg.n_steps(),
        s.t[last],
        s.energy[0],
        s.energy[last]
    );
    println!(
        "wrote {} and series.csv ({} checkpoints)",
        record_path.display(),
        record.checkpoints.len()
    );
    Ok(())
}

/// One fitted column of the sweep rate report.
#[derive(serde::Serialize)]
struct RateRow {
    time: f64,
    norm: String,
    field: String,
    fit: RateFit,
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let base = load_config(&args.config)?;
    let epsilons: Vec<f64> = if args.epsilons.is_empty() {
        harness::DEFAULT_EPSILONS.to_vec()
    } else {
        args.epsilons.clone()
    };
    let times: Vec<f64> = if args.times.is_empty() {
        vec![harness::DEFAULT_COMPARE_TIME]
    } else {
        args.times.clone()
    };

    fs::create_dir_all(&args.out)?;
    let result = harness::epsilon_sweep(&base, &epsilons, &times, Some(&args.out))?;
    for msg in harness::monotonicity_violations(&result.rows) {
        eprintln!("warning: {msg}");
    }

    // Rate report: one log-log fit per (time, norm, field) column.
    let mut report = Vec::new();
    for &t in &times {
        for norm in harness::SWEEP_NORMS {
            for field in ["v", "h"] {
                let points: Vec<(f64, f64)> = result
                    .rows
                    .iter()
                    .filter(|r| r.norm == norm && (r.time - t).abs() <= 0.5 * base.dt)
                    .map(|r| {
                        (
                            r.epsilon,
                            if field == "v" { r.v_error } else { r.h_error },
                        )
                    })
                    .collect();
                match harness::fit_rate(&points) {
                    Ok(fit) => report.push(RateRow {
                        time: t,
                        norm: norm.to_string(),
                        field: field.to_string(),
                        fit,
                    }),
                    Err(e) => eprintln!("warning: no {norm} {field} fit at t={t}: {e}"),
                }
            }
        }
    }
    let report_path = args.out.join("rates.json");
    fs::write(&report_path, serde_json::to_string_pretty(&report)?)?;

    println!("sweep complete: {} runs, {} error rows", epsilons.len(), result.rows.len());
    println!("time     norm   field  slope    r^2");
    for row in &report {
        println!(
            "{:<8} {:<6} {:<6} {:>7.4}  {:.6}",
            row.time, row.norm, row.field, row.fit.slope, row.fit.r_squared
        );
    }
    println!(
        "wrote sweep_errors.csv, sweep_dissipation.csv, sweep_pressure.csv, rates.json in {}",
        args.out.display()
    );
    Ok(())
}

fn cmd_audit(args: &AuditArgs) -> Result<()> {
    let record = RunRecord::load(&args.record)?;
    let epsilon = args.epsilon.unwrap_or(match record.config.variant {
        Variant::Viscous => record.config.epsilon,
        Variant::Ideal => 0.0,
    });
    let zeta = args.zeta.unwrap_or(record.config.zeta);
    let audit = harness::energy_audit(&record, epsilon, zeta)?;
    if let Some(out) = &args.out {
        harness::write_audit_csv(out, &audit)?;
    }
    println!(
        "audit of {} samples at epsilon={epsilon} zeta={zeta}:",
        record.series.len()
    );
    println!(
        "max_residual={:.6e} rms_residual={:.6e} scale={:.6e}",
        audit.max_residual, audit.rms_residual, audit.scale
    );
    Ok(())
}

fn cmd_profile(args: &ProfileArgs) -> Result<()> {
    let (dissipative, meta) = records::read_checkpoint(&args.dissipative)?;
    let (reference, _) = records::read_checkpoint(&args.reference)?;
    if (dissipative.t - reference.t).abs() > 1e-9 {
        return Err(Error::Usage(format!(
            "checkpoints are not paired: times {} and {} differ",
            dissipative.t, reference.t
        )));
    }
    let (a, b) = if args.field == "v" {
        (&dissipative.v, &reference.v)
    } else {
        (&dissipative.h, &reference.h)
    };
    let profile = norms::boundary_layer_profile(a, b, meta.epsilon)?;
    if let Some(out) = &args.out {
        harness::write_profile_points(out, std::slice::from_ref(&profile))?;
    }
    println!(
        "layer profile of {} at t={} epsilon={}:",
        args.field, dissipative.t, meta.epsilon
    );
    println!(
        "amplitude={:.6e} width={:.6e} scaled_amplitude={:.6e} scaled_width={:.6e}",
        profile.amplitude, profile.width, profile.scaled_amplitude, profile.scaled_width
    );
    Ok(())
}

fn cmd_norms(args: &NormsArgs) -> Result<()> {
    let (state, meta) = records::read_checkpoint(&args.checkpoint)?;
    let v_table = norms::norm_table(&state.v, &args.exponents)?;
    let h_table = norms::norm_table(&state.h, &args.exponents)?;
    let budget = norms::regularity_budget(&state.v, &state.h, args.order)?;
    let payload = serde_json::json!({
        "t": state.t,
        "epsilon": meta.epsilon,
        "zeta": meta.zeta,
        "v": v_table,
        "h": h_table,
        "regularity": {
            "order": args.order,
            "total": budget.total(),
            "parts": budget,
        },
    });
    println!("{}", serde_json::to_string_pretty(&payload)?);
    Ok(())
}
