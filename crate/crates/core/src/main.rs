use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cheblcu::catalog::FunctionSpec;
use cheblcu::harness::{self, ApplyOptions, StateInput};
use cheblcu::report::Report;
use cheblcu::verify::Suite;
use cheblcu::Result;

/// Applies functions of sparse Hermitian matrices through a simulated
/// Chebyshev-walk LCU circuit and checks the result against exact numerics.
#[derive(Parser)]
#[command(name = "cheblcu", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Target {
    /// Matrix file (JSON, one-based entries).
    #[arg(long)]
    matrix: PathBuf,
    /// Function: exp, exp_neg, identity, monomial:K, polynomial:C0,C1,...
    #[arg(long)]
    function: String,
    /// Target accuracy for non-polynomial functions, in (0, 1/2].
    #[arg(long)]
    eps: Option<f64>,
    /// Also write the report to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Plan only: truncation order, weights and probability bounds.
    Analyze(Target),
    /// Run the LCU on a state and compare with the exact result.
    Apply {
        #[command(flatten)]
        target: Target,
        /// `uniform` or a JSON file of [re, im] pairs.
        #[arg(long, default_value = "uniform")]
        state: String,
        /// Amplify the success probability.
        #[arg(long)]
        amplify: bool,
        /// Also simulate the full circuit (N <= 8, L <= 8).
        #[arg(long)]
        full: bool,
    },
    /// Run a seeded property suite: cheb, walk, lcu, amplify or all.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(Report, Option<PathBuf>)> {
    match cli.command {
        Command::Analyze(t) => {
            let a = harness::load_matrix(&t.matrix)?;
            let spec: FunctionSpec = t.function.parse()?;
            Ok((harness::cmd_analyze(&a, &spec, t.eps)?, t.out))
        }
        Command::Apply {
            target: t,
            state,
            amplify,
            full,
        } => {
            let a = harness::load_matrix(&t.matrix)?;
            let spec: FunctionSpec = t.function.parse()?;
            let psi = StateInput::from_arg(&state)?;
            let report = harness::cmd_apply(&a, &spec, t.eps, &psi, ApplyOptions { amplify, full })?;
            Ok((report, t.out))
        }
        Command::Verify { suite, seed, out } => {
            let suite: Suite = suite.parse()?;
            Ok((harness::cmd_verify(suite, seed)?, out))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok((report, out)) => {
            let text = report.render();
            print!("{text}");
            if let Some(path) = out {
                if let Err(e) = std::fs::write(&path, &text) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(harness::EXIT_INPUT as u8);
                }
            }
            ExitCode::from(harness::report_exit_code(&report) as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(harness::exit_code(&e) as u8)
        }
    }
}
