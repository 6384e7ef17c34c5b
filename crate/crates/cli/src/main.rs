use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use isac_cli::config::parse_scheme;
use isac_cli::validate::{self, DEFAULT_SEED, DEFAULT_TRIALS};
use isac_cli::{init_threads, run_sweep, CliError, SweepFlags};
use isac_core::Scheme;

#[derive(Parser)]
#[command(name = "isac", version, about = "Rate, reliability and detection trade-offs of DPC-based ISAC")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize every configured scheme over the (eps_u, pd_min) grid.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Run a single scheme instead of the configured list.
        #[arg(long, value_parser = scheme_arg)]
        scheme: Option<Scheme>,
        /// Points per coding-parameter axis.
        #[arg(long)]
        grid: Option<usize>,
        /// Search all six coefficients jointly.
        #[arg(long)]
        joint_search: bool,
    },
    /// Run the Monte Carlo oracle suite.
    Validate {
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
}

fn scheme_arg(s: &str) -> Result<Scheme, String> {
    parse_scheme(s).ok_or_else(|| format!("unknown scheme `{s}`"))
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("isac: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        return fail(e);
    }
    match cli.command {
        Command::Sweep {
            config,
            out,
            scheme,
            grid,
            joint_search,
        } => {
            let flags = SweepFlags {
                scheme,
                grid,
                joint_search,
            };
            match run_sweep(&config, &out, &flags) {
                Ok(o) => {
                    eprintln!("wrote {} rows to {} (config {})", o.rows.len(), out.display(), o.manifest.config_digest);
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::Validate { trials, seed } => match validate::run(trials, seed) {
            Ok(report) => {
                print!("{}", report.table());
                if report.passed() {
                    ExitCode::SUCCESS
                } else {
                    for c in report.checks.iter().filter(|c| !c.pass) {
                        eprintln!(
                            "isac: {} failed: measured {:e}, expected {:e} within {:e}",
                            c.name, c.measured, c.expected, c.tolerance
                        );
                    }
                    ExitCode::from(1)
                }
            }
            Err(e) => fail(e),
        },
    }
}
