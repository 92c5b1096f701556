//! `spc`: coherence traces, pulse-interval sweeps and diagnostics for a
//! two-level system dephased by a boson bath under periodic π pulses.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 numerical failure.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use serde::Serialize;
use spc_core::oracle::{random_cross_check, CrossCheckReport};
use spc_core::{coherence, interaction_mode_report, optimize_interval, sweep, Error};

use config::{usage, Settings, UsageError};

#[derive(Debug, Parser)]
#[command(
    name = "spc",
    version,
    about = "Pulse-controlled dephasing of a two-level system"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Coherence intensity I(t) on a uniform grid (CSV).
    Trace(Settings),
    /// Asymptotic peak value P over a range of pulse intervals (CSV).
    Sweep(Settings),
    /// Pulse interval maximizing P inside a bracket (JSON).
    Optimize(Settings),
    /// Randomized discrete-mode cross-checks of the closed forms (JSON).
    Check(Settings),
    /// Interaction-mode and correlation diagnostics (JSON).
    Report(Settings),
}

fn open_output(settings: &Settings) -> anyhow::Result<Box<dyn Write>> {
    Ok(match &settings.output {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(settings: &Settings, value: &T) -> anyhow::Result<()> {
    let mut out = open_output(settings)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn cmd_trace(s: Settings) -> anyhow::Result<()> {
    let sd = s.spectral_density()?;
    let cfg = s.quadrature()?;
    let method = s.method(&sd)?;
    let t_grid = coherence::time_grid(
        s.scaled_time(s.t_max.unwrap_or(60.0)),
        s.scaled_time(s.dt.unwrap_or(0.01)),
    )?;
    let (tau, max_pulses) = match (s.tau_s, s.n_pulses) {
        (_, Some(0)) | (None, _) => (f64::INFINITY, 0),
        (Some(tau), n) => (s.scaled_time(tau), n.unwrap_or(usize::MAX)),
    };
    let trace = coherence::trace(&sd, tau, max_pulses, &t_grid, &cfg, method)?;
    for p in trace.unconverged() {
        eprintln!(
            "warning: t = {} not converged (exponent {} ± {})",
            p.t, p.exponent, p.error
        );
    }
    let mut out = open_output(&s)?;
    trace.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

fn cmd_sweep(s: Settings) -> anyhow::Result<()> {
    let sd = s.spectral_density()?;
    let cfg = s.quadrature()?;
    let opts = s.peak_options()?;
    let grid = s.tau_grid()?;
    let result = sweep(&sd, &grid, &opts, &cfg)?;
    let unconverged = result.points.iter().filter(|p| !p.converged).count();
    if unconverged > 0 {
        eprintln!(
            "warning: {unconverged} of {} intervals did not settle within n_max = {}",
            result.points.len(),
            opts.n_max
        );
    }
    for m in &result.maxima {
        eprintln!(
            "local maximum: tau_s = {:.6}, P = {:.6}, prominence = {:.3e}",
            m.tau_s, m.p, m.prominence
        );
    }
    let mut out = open_output(&s)?;
    result.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

fn cmd_optimize(s: Settings) -> anyhow::Result<()> {
    let sd = s.spectral_density()?;
    let cfg = s.quadrature()?;
    let opts = s.peak_options()?;
    let bracket = s.bracket()?;
    let best = optimize_interval(&sd, bracket, &opts, &cfg)?;
    write_json(&s, &best)
}

#[derive(Serialize)]
struct CheckSummary {
    seed: u64,
    count: usize,
    modes: usize,
    tolerance: f64,
    passed: usize,
    failed: usize,
    worst_amplitude_discrepancy: f64,
    reports: Vec<CrossCheckReport>,
}

/// Failure of the oracle suite; reported with exit code 2.
#[derive(Debug)]
struct CheckFailed(usize);

impl std::fmt::Display for CheckFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} cross-check(s) failed", self.0)
    }
}

impl std::error::Error for CheckFailed {}

const CHECK_TOLERANCE: f64 = 1e-10;

fn cmd_check(s: Settings) -> anyhow::Result<()> {
    let cfg = s.quadrature()?;
    let seed = s.seed.unwrap_or(42);
    let modes = s.modes.unwrap_or(64);
    let count = s.count.unwrap_or(200);
    if count == 0 {
        return Err(usage("--count must be ≥ 1".into()).into());
    }
    let reports = random_cross_check(seed, count, modes, CHECK_TOLERANCE, &cfg)?;
    let failed = reports.iter().filter(|r| !r.passed).count();
    let summary = CheckSummary {
        seed,
        count,
        modes,
        tolerance: CHECK_TOLERANCE,
        passed: count - failed,
        failed,
        worst_amplitude_discrepancy: reports
            .iter()
            .map(|r| r.max_amplitude_discrepancy)
            .fold(0.0, f64::max),
        reports,
    };
    write_json(&s, &summary)?;
    eprintln!(
        "check: {} passed, {} failed (seed {seed}, {modes} modes, worst discrepancy {:.2e})",
        summary.passed, summary.failed, summary.worst_amplitude_discrepancy
    );
    if failed > 0 {
        return Err(CheckFailed(failed).into());
    }
    Ok(())
}

fn cmd_report(s: Settings) -> anyhow::Result<()> {
    let sd = s.spectral_density()?;
    let cfg = s.quadrature()?;
    let report = interaction_mode_report(&sd, &cfg)?;
    write_json(&s, &report)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 1;
    }
    if err.downcast_ref::<CheckFailed>().is_some() {
        return 2;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::Convergence { .. } | Error::FlatBracket { .. }) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let run = |s: Settings, f: fn(Settings) -> anyhow::Result<()>| s.resolve().and_then(f);
    let result = match cli.command {
        Command::Trace(s) => run(s, cmd_trace),
        Command::Sweep(s) => run(s, cmd_sweep),
        Command::Optimize(s) => run(s, cmd_optimize),
        Command::Check(s) => run(s, cmd_check),
        Command::Report(s) => run(s, cmd_report),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
