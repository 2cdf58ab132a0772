use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use disperkit_cli::{compare, sweep, trace, verify, CliError, Exit, GridSpec, LoadedConfig, OutputOptions};

#[derive(Parser)]
#[command(name = "disperkit", version, about = "Guided-wave dispersion curves with adaptive mode tracking")]
struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Adaptive sweep; writes CSV, JSON diagnostics and optionally SVG.
    Trace {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: bool,
    },
    /// Uniform sweep on an explicit grid `start:end:step`.
    Sweep {
        config: PathBuf,
        /// `start:end:step`, endpoints inclusive.
        #[arg(long)]
        grid: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: bool,
    },
    /// Derivative, Taylor-fit and Hellmann-Feynman checks at sampled k.
    Verify {
        config: PathBuf,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Grid sizes, label agreement and max |Δω| between two datasets.
    Compare { a: PathBuf, b: PathBuf },
}

fn run(cli: Cli) -> Result<Exit, CliError> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Trace { config, out: dir, svg } => trace(&LoadedConfig::load(config)?, &OutputOptions { out: dir, svg }, &mut out),
        Command::Sweep { config, grid, out: dir, svg } => {
            let grid: GridSpec = grid.parse()?;
            sweep(&LoadedConfig::load(config)?, &grid, &OutputOptions { out: dir, svg }, &mut out)
        }
        Command::Verify { config, samples } => verify(&LoadedConfig::load(config)?, samples, &mut out),
        Command::Compare { a, b } => compare(&a, &b, &mut out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DISPERKIT_LOG", "warn")).init();
    // Exit 2 means "flagged", so argument errors use 1 like every other error.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        builder = builder.num_threads(n.max(1));
    }
    let result = match builder.build() {
        Ok(pool) => pool.install(|| run(cli)),
        Err(e) => Err(CliError::Usage(format!("--threads: {e}"))),
    };
    let code = match result {
        Ok(exit) => exit.code(),
        Err(e) => {
            let _ = std::io::stdout().flush();
            eprintln!("error: {e}");
            1
        }
    };
    ExitCode::from(code as u8)
}
