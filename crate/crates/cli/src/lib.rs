//! Command-line front end: run, validate, corpus and sweep.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use semistab_core::scenario::{
    builtin_corpus, run_corpus, run_scenario, sweep_scenario, validate_scenario, write_outputs,
    write_sweep, Check, Scenario, ScenarioError,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "semistab", version, about = "Delay-consensus integration and verification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one scenario and write its trajectory and report.
    Run {
        file: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check network structure, delay bounds and history coverage.
    Validate { file: PathBuf },
    /// Run the built-in scenarios and write a summary table.
    Corpus {
        #[arg(long)]
        out: PathBuf,
        /// Override the step; declared tolerances are relaxed 10x.
        #[arg(long)]
        step: Option<f64>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Integrate from seeded random constant histories.
    Sweep {
        file: PathBuf,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        amplitude: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

pub fn exit_code(err: &ScenarioError) -> i32 {
    match err {
        ScenarioError::Read { .. } | ScenarioError::Parse(_) | ScenarioError::Invalid { .. } => EXIT_INPUT,
        ScenarioError::Numeric(_) => EXIT_NUMERIC,
        ScenarioError::Io { .. } => EXIT_IO,
    }
}

fn print_checks(checks: &[Check]) {
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    for c in checks {
        let status = if c.pass { "pass" } else { "FAIL" };
        println!("{:width$}  {status}  {}", c.name, c.detail);
    }
}

fn cmd_run(file: &Path, out: &Path) -> Result<i32, ScenarioError> {
    let sc = Scenario::from_path(file)?;
    let outcome = run_scenario(&sc)?;
    let dir = write_outputs(&sc, &outcome, out)?;
    print!("{}", outcome.report.to_text(&sc.name, &[]));
    print_checks(&outcome.checks);
    println!("outputs: {}", dir.display());
    Ok(if outcome.passed() { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn cmd_validate(file: &Path) -> Result<i32, ScenarioError> {
    let sc = Scenario::from_path(file)?;
    let checks = validate_scenario(&sc)?;
    print_checks(&checks);
    Ok(if checks.iter().all(|c| c.pass) {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    })
}

fn cmd_corpus(out: &Path, step: Option<f64>, jobs: usize) -> Result<i32, ScenarioError> {
    let mut corpus = builtin_corpus();
    if let Some(step) = step {
        if !(step.is_finite() && step > 0.0) {
            return Err(ScenarioError::Invalid {
                field: "--step".into(),
                message: format!("must be positive, got {step}"),
            });
        }
        corpus = corpus.iter().map(|s| s.with_step(step)).collect();
    }
    let summary = run_corpus(&corpus, out, jobs)?;
    for row in &summary.rows {
        let status = if row.passed { "pass" } else { "FAIL" };
        match &row.error {
            Some(e) => println!("{status}  {}  {e}", row.name),
            None => println!(
                "{status}  {}  alpha_observed={} gap={}",
                row.name,
                row.alpha_observed.map_or("none".into(), |v| format!("{v:.8}")),
                row.gap().map_or("none".into(), |v| format!("{v:.2e}")),
            ),
        }
    }
    println!("summary: {}", out.join("summary.csv").display());
    Ok(if summary.all_passed() {
        EXIT_OK
    } else if summary.rows.iter().any(|r| r.numeric_failure) {
        EXIT_NUMERIC
    } else {
        EXIT_CHECK_FAILED
    })
}

fn cmd_sweep(file: &Path, count: usize, amplitude: f64, seed: u64, out: &Path) -> Result<i32, ScenarioError> {
    let sc = Scenario::from_path(file)?;
    let report = sweep_scenario(&sc, count, amplitude, seed)?;
    let dir = write_sweep(&sc.name, &report, out)?;
    println!(
        "runs {} converged {} failed {} distinct limits {}",
        report.runs.len(),
        report.converged_count,
        report.failed_count,
        report.distinct_limits
    );
    println!("outputs: {}", dir.display());
    Ok(if report.failed_count > 0 {
        EXIT_NUMERIC
    } else if report.converged_count < report.runs.len() {
        EXIT_CHECK_FAILED
    } else {
        EXIT_OK
    })
}

pub fn execute(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Run { file, out } => cmd_run(&file, &out),
        Command::Validate { file } => cmd_validate(&file),
        Command::Corpus { out, step, jobs } => cmd_corpus(&out, step, jobs),
        Command::Sweep {
            file,
            count,
            amplitude,
            seed,
            out,
        } => cmd_sweep(&file, count, amplitude, seed, &out),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        exit_code(&e)
    })
}
