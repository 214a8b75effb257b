use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use drnash_core::equilibrium;
use drnash_core::scenario::replica_scenario;
use drnash_core::SolveOptions;

use crate::artifacts::{self, RunArtifacts};
use crate::error::{Error, Result, EXIT_NOT_EQUILIBRIUM};
use crate::scenario_file::{load_scenario, save_scenario, scenario_to_json};

#[derive(Debug, Parser)]
#[command(
    name = "drnash",
    version,
    about = "Demand-response allocation equilibrium among strategic PV prosumers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a scenario file and report the first violated rule.
    Validate {
        /// Scenario JSON file.
        file: PathBuf,
    },
    /// Solve a scenario and write CSV/JSON artifacts.
    Run {
        /// Scenario JSON file.
        file: PathBuf,
        /// Directory for the artifacts; created if missing.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        solver: SolverFlags,
    },
    /// Re-check a completed run with a unilateral-deviation scan.
    Verify {
        /// Scenario JSON file the run was made from.
        file: PathBuf,
        /// Directory holding a previous run's artifacts.
        #[arg(long)]
        out: PathBuf,
        /// Regularizer in the inconvenience coupling.
        #[arg(long, default_value_t = SolveOptions::default().eps_reg)]
        eps_reg: f64,
        /// Largest acceptable improvement, $.
        #[arg(long, default_value_t = SolveOptions::default().eps2)]
        eps2: f64,
        /// Deviation grid points per prosumer-hour.
        #[arg(long, default_value_t = SolveOptions::default().deviation_grid)]
        grid: usize,
    },
    /// Print (or write) the built-in replica scenario as JSON.
    Replica {
        /// Write to this path instead of stdout.
        #[arg(long)]
        write: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct SolverFlags {
    /// Outer price-update iterations before giving up.
    #[arg(long, default_value_t = SolveOptions::default().max_outer)]
    pub max_outer: usize,
    /// Best-response sweeps per outer iteration.
    #[arg(long, default_value_t = SolveOptions::default().max_inner)]
    pub max_inner: usize,
    /// Weight of the new best response in each inner sweep.
    #[arg(long, default_value_t = SolveOptions::default().damping)]
    pub damping: f64,
    /// Convergence tolerance on DR, kW.
    #[arg(long, default_value_t = SolveOptions::default().eps1)]
    pub eps1: f64,
    /// Convergence tolerance on provider profit, $.
    #[arg(long, default_value_t = SolveOptions::default().eps2)]
    pub eps2: f64,
    /// Convergence tolerance on utility profit, $.
    #[arg(long, default_value_t = SolveOptions::default().eps3)]
    pub eps3: f64,
    /// Regularizer in the inconvenience coupling.
    #[arg(long, default_value_t = SolveOptions::default().eps_reg)]
    pub eps_reg: f64,
    /// Inner-game stopping tolerance on DR, kW.
    #[arg(long, default_value_t = SolveOptions::default().inner_tol)]
    pub inner_tol: f64,
    /// One inner sweep per outer iteration instead of a fixed point.
    #[arg(long)]
    pub single_sweep: bool,
    /// Test convergence on daily totals instead of per hour.
    #[arg(long)]
    pub aggregate_convergence: bool,
}

impl Default for SolverFlags {
    fn default() -> Self {
        let o = SolveOptions::default();
        Self {
            max_outer: o.max_outer,
            max_inner: o.max_inner,
            damping: o.damping,
            eps1: o.eps1,
            eps2: o.eps2,
            eps3: o.eps3,
            eps_reg: o.eps_reg,
            inner_tol: o.inner_tol,
            single_sweep: o.single_sweep,
            aggregate_convergence: o.aggregate_convergence,
        }
    }
}

impl From<&SolverFlags> for SolveOptions {
    fn from(f: &SolverFlags) -> Self {
        SolveOptions {
            eps_reg: f.eps_reg,
            damping: f.damping,
            eps1: f.eps1,
            eps2: f.eps2,
            eps3: f.eps3,
            max_outer: f.max_outer,
            max_inner: f.max_inner,
            inner_tol: f.inner_tol,
            single_sweep: f.single_sweep,
            aggregate_convergence: f.aggregate_convergence,
            ..SolveOptions::default()
        }
    }
}

/// Runs one command, writing human-readable progress to `out`, and returns
/// the process exit status for non-error outcomes.
pub fn execute(cmd: &Command, out: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Validate { file } => cmd_validate(file, out),
        Command::Run {
            file,
            out: dir,
            solver,
        } => cmd_run(file, dir, &SolveOptions::from(solver), out),
        Command::Verify {
            file,
            out: dir,
            eps_reg,
            eps2,
            grid,
        } => {
            let opts = SolveOptions {
                eps_reg: *eps_reg,
                eps2: *eps2,
                deviation_grid: *grid,
                ..SolveOptions::default()
            };
            cmd_verify(file, dir, &opts, out)
        }
        Command::Replica { write } => {
            let s = replica_scenario();
            match write {
                Some(path) => save_scenario(&s, path)?,
                None => out
                    .write_all(scenario_to_json(&s).as_bytes())
                    .map_err(|e| Error::io("<stdout>", e))?,
            }
            Ok(0)
        }
    }
}

fn say(out: &mut dyn Write, line: &str) -> Result<()> {
    writeln!(out, "{line}").map_err(|e| Error::io("<stdout>", e))
}

pub fn cmd_validate(path: &Path, out: &mut dyn Write) -> Result<i32> {
    let s = load_scenario(path)?;
    say(out, "OK")?;
    say(
        out,
        &format!(
            "horizon {} h, {} prosumers, {} event hours",
            s.horizon(),
            s.prosumers().len(),
            s.event_hours().len()
        ),
    )?;
    for p in s.prosumers() {
        say(
            out,
            &format!(
                "  {}: alpha {}, peak load {} kW, PV peak {} kW, DR cap {:.6} kW",
                p.id,
                p.alpha,
                p.baseline_load.peak(),
                p.pv_generation.peak(),
                p.dr_cap()
            ),
        )?;
    }
    Ok(0)
}

pub fn cmd_run(
    path: &Path,
    out_dir: &Path,
    opts: &SolveOptions,
    out: &mut dyn Write,
) -> Result<i32> {
    let s = load_scenario(path)?;
    let result = equilibrium::run(&s, opts)?;
    let arts = RunArtifacts::build(&s, &result, opts)?;
    arts.write(out_dir)?;
    say(
        out,
        &format!(
            "{} after {} outer iterations; provider profit {:.6} $, utility profit {:.6} $, max deviation gain {:.6} $",
            if result.converged { "converged" } else { "NOT converged" },
            result.iterations.len(),
            arts.summary.provider_profit,
            arts.summary.utility_profit,
            arts.summary.max_nash_improvement,
        ),
    )?;
    say(out, &format!("artifacts written to {}", out_dir.display()))?;
    Ok(if result.converged {
        0
    } else {
        EXIT_NOT_EQUILIBRIUM
    })
}

pub fn cmd_verify(
    path: &Path,
    out_dir: &Path,
    opts: &SolveOptions,
    out: &mut dyn Write,
) -> Result<i32> {
    opts.validate()?;
    let s = load_scenario(path)?;
    let states = artifacts::read_states(out_dir, &s, opts.eps_reg)?;
    let report = equilibrium::verify_states(&s, &states, opts)?;
    let dest = out_dir.join(artifacts::NASH_REPORT);
    artifacts::write_nash_report(&dest, &s, &report)?;
    for (i, p) in s.prosumers().iter().enumerate() {
        say(
            out,
            &format!(
                "{}: max unilateral improvement {:.6e} $",
                p.id,
                report.max_improvement_for(i)
            ),
        )?;
    }
    let worst = report.max_improvement();
    if worst <= opts.eps2 {
        say(
            out,
            &format!("Nash check passed (max {worst:.6e} <= {:e})", opts.eps2),
        )?;
        Ok(0)
    } else {
        say(
            out,
            &format!("Nash check FAILED (max {worst:.6e} > {:e})", opts.eps2),
        )?;
        Ok(EXIT_NOT_EQUILIBRIUM)
    }
}
