//! `mod1`: denoise, unwrap and sweep experiments on modulo-1 samples.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "mod1", about = "Denoising and unwrapping of modulo-1 samples", disable_version_flag = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Ols,
    Qcqp,
    Iqcqp,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum UnwrapArg {
    Qt,
    Ols,
}

#[derive(Debug, clap::Args)]
pub struct DenoiseArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub lambda: f64,
    /// uniform, gaussian or bernoulli_uniform
    #[arg(long)]
    pub noise: String,
    /// gamma, sigma or p, depending on --noise
    #[arg(long)]
    pub param: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = MethodArg::Qcqp)]
    pub method: MethodArg,
    #[arg(long, default_value_t = mod1_core::unwrap::DEFAULT_ZETA)]
    pub zeta: f64,
    /// Passes for iqcqp
    #[arg(long, default_value_t = mod1_core::denoise::DEFAULT_ITERATIONS)]
    pub iterations: usize,
    #[arg(long, default_value = "f1")]
    pub function: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct UnwrapArgs {
    /// CSV with a header row, or one residue per line
    #[arg(long)]
    pub input: PathBuf,
    /// Column holding the residues when the input has a header
    #[arg(long, default_value = "y")]
    pub column: String,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, value_enum, default_value_t = UnwrapArg::Ols)]
    pub method: UnwrapArg,
    #[arg(long, default_value_t = mod1_core::unwrap::DEFAULT_ZETA)]
    pub zeta: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct ConfigArgs {
    pub config: PathBuf,
    /// Overrides the config's output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Denoise one synthetic instance and unwrap it
    Denoise(DenoiseArgs),
    /// Unwrap residues read from a file
    Unwrap(UnwrapArgs),
    /// Run a parameter sweep from a JSON config
    Sweep(ConfigArgs),
    /// Evaluate the correlation bounds on every trial of a JSON config
    CheckBounds(ConfigArgs),
    /// Print the version
    Version,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Err(e) = commands::configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(e.exit_code());
    }
    let res = match cli.command {
        Command::Denoise(a) => commands::denoise(&a),
        Command::Unwrap(a) => commands::unwrap(&a),
        Command::Sweep(a) => commands::sweep(&a),
        Command::CheckBounds(a) => commands::check_bounds(&a),
        Command::Version => {
            println!("mod1 {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
