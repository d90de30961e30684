//! `ncbmo`: verification harness for semigroup BMO, Markov metrics and
//! Calderon-Zygmund estimates.

mod commands;
mod config;
mod report;
mod suites;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use crate::config::SuiteParams;
use crate::report::{CheckReport, Status};
use crate::suites::Suite;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
}

#[derive(Parser, Debug)]
#[command(name = "ncbmo", version, about = "Numerical verification of semigroup BMO and Calderon-Zygmund estimates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write the JSON report to this file instead of stdout
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Worker threads (default: logical cores); never changes report content
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Include wall-clock seconds in the report
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a named verification suite
    Verify {
        suite: Suite,
        /// JSON config file `{"output": ..., "params": {...}}`; flags override it
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        params: SuiteParams,
    },
    /// Semigroup BMO norm of a matrix
    Bmo {
        /// Matrix JSON `{"n": n, "re": [[...]], "im": [[...]]}`
        #[arg(long)]
        input: PathBuf,
        /// poisson, heat, sinc-heat, inline JSON, or a JSON file
        #[arg(long)]
        semigroup: String,
        /// column, row or max
        #[arg(long, default_value = "max")]
        side: String,
        #[arg(long)]
        t_grid: Option<String>,
        /// Drop the per-sample table
        #[arg(long)]
        terse: bool,
    },
    /// Operations on a twisted Fourier series
    Qtorus {
        op: commands::QtOp,
        /// Series JSON `{"n": n, "theta_upper": [...], "coeffs": [{"xi": [...], "re": x, "im": y}]}`
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        t: Option<f64>,
        /// GNS box side
        #[arg(long = "box")]
        gns_box: Option<usize>,
        #[arg(long)]
        t_grid: Option<String>,
    },
    /// Transference checks on a finite group
    Transfer {
        /// Z<N>, S3, D4, Q8, or a group-table JSON file
        #[arg(long)]
        group: String,
        #[arg(long, default_value_t = 200)]
        kernels: usize,
        #[arg(long, default_value_t = 9)]
        seed: u64,
    },
}

fn run_verify(
    suite: Suite,
    config: Option<PathBuf>,
    params: SuiteParams,
    output: &mut Option<PathBuf>,
) -> Result<CheckReport, CliError> {
    let file = config.as_deref().map(config::load).transpose()?.unwrap_or_default();
    if output.is_none() {
        *output = file.output;
    }
    let params = params.over(file.params);
    let plan = suites::plan(suite, &params)?;
    let checks = plan.tasks.into_par_iter().map(|t| t()).collect::<Vec<_>>().concat();
    Ok(CheckReport::new(&suite.name(), plan.params, checks, None))
}

fn run(cli: Cli) -> Result<(CheckReport, Option<PathBuf>), CliError> {
    let mut output = cli.output;
    let report = match cli.command {
        Command::Verify { suite, config, params } => run_verify(suite, config, params, &mut output)?,
        Command::Bmo { input, semigroup, side, t_grid, terse } => {
            commands::bmo(&input, &semigroup, &side, t_grid.as_deref(), terse)?
        }
        Command::Qtorus { op, input, t, gns_box, t_grid } => commands::qtorus(op, &input, t, gns_box, t_grid.as_deref())?,
        Command::Transfer { group, kernels, seed } => commands::transfer(&group, kernels, seed)?,
    };
    Ok((report, output))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be positive");
            return ExitCode::from(2);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .expect("thread pool is configured once");
    }
    let timing = cli.timing;
    let start = Instant::now();
    let (mut report, output) = match run(cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if timing {
        report.wall_clock_seconds = Some(start.elapsed().as_secs_f64());
    }
    let text = report.to_json();
    match output {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, &text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{text}"),
    }
    for c in report.checks.iter().filter(|c| c.status != Status::Pass) {
        eprintln!("{:?}: {} measured {} bound {:?}", c.status, c.name, c.measured, c.bound);
    }
    if report.status == Status::Fail {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}
