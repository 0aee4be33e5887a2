//! Command-line front end: argument parsing, dispatch and report formatting.
//!
//! Exit codes: 0 success or feasible, 1 infeasible or a failed check,
//! 2 usage or configuration error.

pub mod lemmas;
pub mod lmi_cmd;
pub mod reproduce;

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use kse_core::field::FieldError;
use kse_core::inequalities::{halanay_sigma, HalanayParams, InequalityError};
use kse_core::lmi::LmiError;
use kse_core::sim::{self, ConfigError, SimConfig, SimError};

/// Environment variable naming the directory `simulate` writes into.
pub const OUT_DIR_ENV: &str = "KSE_OUT_DIR";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Lmi(#[from] LmiError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Inequality(#[from] InequalityError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Parser)]
#[command(name = "kse", version, about = "Sampled-data control certificates and closed-loop simulation for the 2D KSE")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decay rate sigma of the Halanay inequality.
    Halanay {
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        delta1: f64,
        #[arg(long)]
        h: f64,
    },
    /// Assemble and solve one of the LMI conditions.
    Lmi {
        #[command(subcommand)]
        command: LmiCommand,
    },
    /// Run a closed-loop simulation from a config file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to $KSE_OUT_DIR, then the working directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the functional inequalities on seeded random fields.
    VerifyLemmas {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        count: usize,
        /// Grid intervals per side.
        #[arg(long, default_value_t = 64)]
        m: usize,
        /// Use the zero field instead of random fields.
        #[arg(long)]
        zero: bool,
    },
    /// Reproduce the reference example: both h bounds and two closed-loop runs.
    #[command(name = "reproduce-sec5")]
    Reproduce {
        /// Simulations at m = 32 instead of 64.
        #[arg(long)]
        quick: bool,
        /// Override the decay rate of the averaged-measurement stage.
        #[arg(long)]
        delta: Option<f64>,
    },
}

#[derive(Debug, Subcommand)]
pub enum LmiCommand {
    /// Continuous averaged measurements.
    Prop1(LmiArgs),
    /// Continuous point measurements.
    Prop2(LmiArgs),
    /// Sampled averaged measurements.
    Thm1(LmiArgs),
    /// Sampled point measurements.
    Thm2(LmiArgs),
    /// Largest sampling period with a verified certificate.
    MaxH(MaxHArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SampledProblem {
    Thm1,
    Thm2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ThetaBarArg {
    Corrected,
    Verbatim,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Lambda2Arg {
    Free,
    Nonnegative,
}

#[derive(Debug, Clone, Args)]
pub struct LmiArgs {
    #[arg(long, default_value_t = 0.95)]
    pub mu: f64,
    /// Decay rate; 0.1 by default, 0.2 for thm2.
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    #[arg(long, default_value_t = 0.15)]
    pub delta1: f64,
    #[arg(long, default_value_t = -0.5, allow_hyphen_values = true)]
    pub kappa: f64,
    #[arg(long, default_value_t = 0.25)]
    pub delta_bar: f64,
    #[arg(long, default_value_t = 0.35)]
    pub h: f64,
    #[arg(long, default_value_t = 2.0)]
    pub c_bound: f64,
    #[arg(long, default_value_t = kse_core::lmi::DEFAULT_EPS)]
    pub eps: f64,
    #[arg(long, value_enum, default_value_t = ThetaBarArg::Corrected)]
    pub theta_bar: ThetaBarArg,
    #[arg(long, value_enum, default_value_t = Lambda2Arg::Free)]
    pub lambda2: Lambda2Arg,
    /// Treat the gain as a decision variable (prop1 only).
    #[arg(long)]
    pub mu_free: bool,
}

impl Default for LmiArgs {
    fn default() -> Self {
        Self {
            mu: 0.95,
            delta: None,
            delta1: 0.15,
            kappa: -0.5,
            delta_bar: 0.25,
            h: 0.35,
            c_bound: 2.0,
            eps: kse_core::lmi::DEFAULT_EPS,
            theta_bar: ThetaBarArg::Corrected,
            lambda2: Lambda2Arg::Free,
            mu_free: false,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct MaxHArgs {
    #[arg(long, value_enum)]
    pub problem: SampledProblem,
    #[arg(long, default_value_t = 0.3)]
    pub h_lo: f64,
    #[arg(long, default_value_t = 0.5)]
    pub h_hi: f64,
    #[arg(long, default_value_t = 0.005)]
    pub tol: f64,
    /// Skip the uniform monotonicity scan.
    #[arg(long)]
    pub no_scan: bool,
    #[command(flatten)]
    pub params: LmiArgs,
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn dispatch<I, T>(args: I, out: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

pub fn run(command: Command, out: &mut dyn Write) -> Result<u8, CliError> {
    match command {
        Command::Halanay { delta, delta1, h } => {
            let p = HalanayParams::new(delta, delta1, h)?;
            writeln!(out, "{:.12}", halanay_sigma(&p))?;
            Ok(0)
        }
        Command::Lmi { command } => lmi_cmd::run(command, out),
        Command::Simulate { config, out: dir } => simulate(config, dir, out),
        Command::VerifyLemmas { seed, count, m, zero } => {
            let report = lemmas::verify_lemmas(seed, count, m, zero)?;
            report.write(out)?;
            Ok(if report.passed() { 0 } else { 1 })
        }
        Command::Reproduce { quick, delta } => {
            let opts = reproduce::ReproduceOptions { quick, delta };
            let report = reproduce::reproduce(&opts, out)?;
            report.write_table(out)?;
            if let Some(stage) = report.first_failure() {
                writeln!(out, "failed stage: {}", stage.name)?;
                return Ok(1);
            }
            Ok(0)
        }
    }
}

fn simulate(config: PathBuf, dir: Option<PathBuf>, out: &mut dyn Write) -> Result<u8, CliError> {
    let text = std::fs::read_to_string(&config)?;
    let cfg = SimConfig::parse(&text)?;
    let dir = dir
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let result = sim::run(&cfg)?;
    result.write_to_dir(&dir)?;
    let first = result.series.first().expect("at least the initial row");
    let last = result.series.last().expect("at least the initial row");
    writeln!(
        out,
        "{} rows, {} snapshots -> {}",
        result.series.rows.len(),
        result.snapshots.len(),
        dir.display()
    )?;
    writeln!(
        out,
        "V1({:.6}) = {:.12e}, V1({:.6}) = {:.12e}, c0 = {:.12e} -> {:.12e}, blowup = {}",
        first.t, first.v1, last.t, last.v1, first.c0, last.c0, result.blowup
    )?;
    Ok(0)
}
