mod commands;
mod config;
mod error;
mod format;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Globals;
use error::{CliError, CliResult};

/// Robust coherent H-infinity controller synthesis for degenerate OPO plants.
#[derive(Parser)]
#[command(name = "qsyn", version)]
struct Cli {
    /// Run configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `[output] directory`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Tolerance: PR check tolerance for `check`, norm tolerance for `sweep`.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Worker threads for parallel grids.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a controller and its physically realizable form.
    Synthesize,
    /// Tabulate the admissible epsilon interval over a gamma grid.
    Feasibility {
        #[arg(long)]
        gamma_lo: f64,
        #[arg(long)]
        gamma_hi: f64,
        #[arg(long, default_value_t = 200)]
        n: usize,
        /// Comma separated uncertainty bounds.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        rho: Vec<f64>,
    },
    /// Closed-loop H-infinity norm over the phase grid for each controller file.
    Sweep { controllers: Vec<PathBuf> },
    /// Physical realizability check of a realized controller file.
    Check { file: PathBuf },
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot configure thread pool: {e}")))?;
    }
    let g = Globals { config: cli.config, out: cli.out, tol: cli.tol };
    match cli.command {
        Command::Synthesize => commands::synthesize_cmd(&g),
        Command::Feasibility { gamma_lo, gamma_hi, n, rho } => commands::feasibility_cmd(&g, gamma_lo, gamma_hi, n, &rho),
        Command::Sweep { controllers } => commands::sweep_cmd(&g, &controllers),
        Command::Check { file } => commands::check_cmd(&g, &file),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qsyn: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
