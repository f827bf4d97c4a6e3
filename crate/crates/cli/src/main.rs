use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod report;

use report::Format;

#[derive(Parser, Debug)]
#[command(name = "qcorr", version, about = "Statevector simulation of quantum cross-correlation and EMML")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate every lag of the cyclic cross-correlation of two arrays.
    Crosscorr(CrosscorrArgs),
    /// Run EMML image alignment over a directory of N×N arrays.
    Emml(EmmlArgs),
    /// Sweep readout precision over M or alpha values.
    Sweep(SweepArgs),
    /// Check the simulator kernels against dense unitary matrices.
    Selftest(SelftestArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Exact,
    Sampling,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Algorithm {
    Crosscorr,
    Emml,
}

#[derive(Args, Debug, Clone)]
pub struct Readout {
    /// Expected array length (1D) or side (2D); inputs must match.
    #[arg(long)]
    pub n: Option<usize>,
    /// Readout dimension, a power of two ≥ 4. Overrides --alpha.
    #[arg(long)]
    pub m: Option<usize>,
    /// Precision factor: M is the smallest power of two ≥ alpha·√N (1D) or alpha·N (EMML).
    #[arg(long, default_value_t = qcorr::qae::DEFAULT_ALPHA)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    pub mode: Mode,
    /// Measurement shots in sampling mode.
    #[arg(long, default_value_t = 1024)]
    pub shots: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone)]
pub struct Output {
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Add a timestamp and wall time to the report (breaks byte-identical output).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Args, Debug)]
pub struct CrosscorrArgs {
    /// First array (CSV or JSON).
    #[arg(long = "a", value_name = "PATH")]
    pub a: PathBuf,
    /// Second array (CSV or JSON).
    #[arg(long = "b", value_name = "PATH")]
    pub b: PathBuf,
    #[command(flatten)]
    pub readout: Readout,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct EmmlArgs {
    /// Directory of N×N arrays (*.csv, *.json), read in file-name order.
    #[arg(long, value_name = "DIR")]
    pub input: PathBuf,
    #[command(flatten)]
    pub readout: Readout,
    #[arg(long, default_value_t = 10)]
    pub iterations: usize,
    /// Stop once the largest per-pixel change falls below this.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long, value_enum, default_value_t = Algorithm::Crosscorr)]
    pub algorithm: Algorithm,
    /// Readout dimensions to sweep, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "alpha_list", required_unless_present = "alpha_list")]
    pub m_list: Option<Vec<usize>>,
    /// Precision factors to sweep, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub alpha_list: Option<Vec<f64>>,
    /// Sizes of random instances, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "4")]
    pub n_list: Vec<usize>,
    /// Random instances per (N, M) point, seeded from --seed upward.
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct SelftestArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random layouts per operation.
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    #[command(flatten)]
    pub output: Output,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Crosscorr(args) => commands::crosscorr(&args),
        Command::Emml(args) => commands::emml(&args),
        Command::Sweep(args) => commands::sweep(&args),
        Command::Selftest(args) => commands::selftest(&args),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
