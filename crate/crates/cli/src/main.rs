use std::path::PathBuf;
use std::process;

use clap::{Args, Parser, Subcommand};
use semicontrol_cli::{diff_artifacts, run, thread_cap_from_env, Command, ExperimentConfig, Failure, Outcome};

#[derive(Parser)]
#[command(name = "semicontrol", version, about = "Optimal control of semilinear parabolic and elliptic equations")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (INI).
    config: PathBuf,
    /// Overrides `[run] output_dir`.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Sub {
    /// Run the command named in `[run] command`.
    Run(RunArgs),
    /// Solve the state equation for `[problem] u`.
    State(RunArgs),
    /// Solve state and adjoint equations for `[problem] u`.
    Adjoint(RunArgs),
    /// Minimize the tracking functional from `[optimize] u0`.
    Optimize(RunArgs),
    /// Optimize, then solve the box-truncated problems for every `M_schedule` level.
    Homotopy(RunArgs),
    /// Evaluate the unbounded-state counterexample series.
    Counterexample(RunArgs),
    /// Integrability exponents for `[exponents] n, r`.
    Exponents(RunArgs),
    /// Recompute the gradient at a stored control and check it against `grad_tol`.
    Verify(RunArgs),
    /// Compare two field or report files.
    Diff {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        tol: f64,
    },
}

fn execute(cli: Cli) -> Result<Outcome, Failure> {
    let (args, command) = match cli.command {
        Sub::Diff { a, b, tol } => return diff_artifacts(&a, &b, tol),
        Sub::Run(a) => (a, None),
        Sub::State(a) => (a, Some(Command::State)),
        Sub::Adjoint(a) => (a, Some(Command::Adjoint)),
        Sub::Optimize(a) => (a, Some(Command::Optimize)),
        Sub::Homotopy(a) => (a, Some(Command::Homotopy)),
        Sub::Counterexample(a) => (a, Some(Command::Counterexample)),
        Sub::Exponents(a) => (a, Some(Command::Exponents)),
        Sub::Verify(a) => (a, Some(Command::Verify)),
    };
    let threads = thread_cap_from_env()?;
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(dir) = args.output_dir {
        config.run.output_dir = dir;
    }
    run(&config, command, threads)
}

fn main() {
    let code = match execute(Cli::parse()) {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            outcome.code.code()
        }
        Err(failure) => {
            eprintln!("error: {failure}");
            failure.code.code()
        }
    };
    process::exit(code);
}
