//! Batch front door: load operators, witnesses and representations from
//! JSON, run the certification pipelines, and emit machine-auditable
//! reports (deterministic bytes for fixed inputs, seed, budget and version)
//! plus a human-readable table.
//!
//! Exit codes: 0 on success, 2 on schema/input errors, 3 on refused
//! certificates or exhausted budgets.

mod jobs;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use jobs::{JobConfig, JobError};
use report::Report;

#[derive(Parser)]
#[command(
    name = "gamma-factor",
    version,
    about = "Certified bounds on tensor norms and Hilbert-space factorization constants"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Args)]
struct Common {
    /// Input JSON file.
    #[arg(long)]
    input: Option<PathBuf>,
    /// RNG seed; reports are byte-identical for identical (input, seed, budget).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Search budget (restart/candidate count).
    #[arg(long, default_value_t = 200)]
    budget: usize,
    /// Relative PSD tolerance for domination checks.
    #[arg(long = "tol-psd")]
    tol_psd: Option<f64>,
    /// Norm-comparison tolerance for demo checks.
    #[arg(long = "tol-norm")]
    tol_norm: Option<f64>,
    /// Report file; stdout rendering is controlled by --format.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Stdout rendering: the deterministic JSON or a summary table.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Subcommand)]
enum Cmd {
    /// Crossnorm bounds (injective, projective, Hilbert) of a dense tensor.
    Norms(Common),
    /// Check a witness and certify a Γ interval for an operator.
    Certify(Common),
    /// Search for the best domination witness of an operator.
    SearchWitness(Common),
    /// γ tensor-norm bounds from a representation or a raw tensor.
    Gamma(Common),
    /// Polynomial Γ interval, plus a witness certificate when supplied.
    Poly(Common),
    /// Run a named demo scenario and report pass/fail per inequality.
    Demo {
        /// Preset name (e.g. inner-product, sandwich, duality).
        preset: String,
        #[command(flatten)]
        common: Common,
    },
}

fn read_input(common: &Common) -> Result<(String, String), JobError> {
    let path = common
        .input
        .as_ref()
        .ok_or_else(|| JobError::Input("--input is required for this command".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| JobError::Input(format!("{}: {e}", path.display())))?;
    Ok((path.display().to_string(), text))
}

fn config(common: &Common) -> JobConfig {
    JobConfig {
        seed: common.seed,
        budget: common.budget.max(1),
        tol_psd: common
            .tol_psd
            .unwrap_or(gamma_factor::certificates::PSD_TOL_DEFAULT),
        tol_norm: common.tol_norm.unwrap_or(1e-6),
    }
}

fn print_table(report: &Report, wall: std::time::Duration) {
    println!("command    : {}", report.command);
    println!("status     : {}", report.status);
    println!("seed       : {}", report.seed);
    println!("budget     : {}", report.budget);
    println!("wall time  : {wall:.2?}");
    if !report.checks.is_empty() {
        println!("checks     :");
        for c in &report.checks {
            println!(
                "  [{}] {}",
                if c.passed { "pass" } else { "FAIL" },
                c.name
            );
        }
    }
}

fn emit(report: &Report, common: &Common, wall: std::time::Duration) -> Result<(), JobError> {
    let rendered = report.render();
    if let Some(path) = &common.output {
        let mut file = std::fs::File::create(path)
            .map_err(|e| JobError::Input(format!("{}: {e}", path.display())))?;
        file.write_all(rendered.as_bytes())
            .map_err(|e| JobError::Input(format!("{}: {e}", path.display())))?;
    }
    match common.format {
        Format::Json => print!("{rendered}"),
        Format::Table => print_table(report, wall),
    }
    Ok(())
}

fn parse_thread_cap() -> Result<usize, JobError> {
    match std::env::var("GAMMA_FACTOR_THREADS") {
        Err(_) => Ok(1),
        Ok(raw) => raw
            .parse::<usize>()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| {
                JobError::Input(format!(
                    "GAMMA_FACTOR_THREADS must be a positive integer, got {raw:?}"
                ))
            }),
    }
}

fn run() -> Result<(), JobError> {
    let cli = Cli::parse();
    // Searches execute restarts sequentially for bit-determinism; the cap
    // is validated and bounds any future parallel execution.
    let _thread_cap = parse_thread_cap()?;
    let start = Instant::now();

    let (report, common) = match &cli.command {
        Cmd::Norms(common) => {
            let (path, text) = read_input(common)?;
            (jobs::run_norms(&path, &text, &config(common))?, common)
        }
        Cmd::Certify(common) => {
            let (path, text) = read_input(common)?;
            (jobs::run_certify(&path, &text, &config(common))?, common)
        }
        Cmd::SearchWitness(common) => {
            let (path, text) = read_input(common)?;
            (
                jobs::run_search_witness(&path, &text, &config(common))?,
                common,
            )
        }
        Cmd::Gamma(common) => {
            let (path, text) = read_input(common)?;
            (jobs::run_gamma(&path, &text, &config(common))?, common)
        }
        Cmd::Poly(common) => {
            let (path, text) = read_input(common)?;
            (jobs::run_poly(&path, &text, &config(common))?, common)
        }
        Cmd::Demo { preset, common } => {
            (jobs::run_demo(preset, &config(common))?, common)
        }
    };

    let wall = start.elapsed();
    emit(&report, common, wall)?;
    if report.status != "ok" {
        return Err(JobError::Certificate(format!(
            "{} checks failed",
            report.checks.iter().filter(|c| !c.passed).count()
        )));
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.exit_code())
        }
    }
}
