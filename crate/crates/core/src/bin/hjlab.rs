use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hjlab::runner::{self, ExperimentKind, RunConfig, RunOutcome, EXIT_INTERNAL, EXIT_OK};
use hjlab::LabError;

/// Viscous Hamilton-Jacobi / mean field game laboratory.
///
/// Outputs go to $HJLAB_OUTPUT_ROOT (default ./hjlab-output).
/// Exit codes: 0 success (blow-ups are recorded, not errors), 1 invalid
/// configuration, 2 internal error or failed self-test.
#[derive(Parser)]
#[command(name = "hjlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate and execute one experiment config.
    Run { config: PathBuf },
    /// Print the exponent book, classification and warnings for a config.
    Validate { config: PathBuf },
    /// Run the function-space property suite with default settings.
    VerifySpaces {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        members: usize,
    },
    /// List the experiment kinds a config can name.
    ListExperiments,
}

fn fail(e: &LabError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(runner::exit_code(e) as u8)
}

fn report(out: &RunOutcome) {
    for v in &out.manifest.verdicts {
        let tag = match (v.asserted, v.passed) {
            (false, _) => "NOTE",
            (true, true) => "PASS",
            (true, false) => "FAIL",
        };
        println!("{tag} {} measured={:.6e} tolerance={:.6e}", v.name, v.measured, v.tolerance);
    }
    for n in &out.manifest.notes {
        println!("note: {n}");
    }
    println!("wrote {}", out.dir.display());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config } => {
            let cfg = match RunConfig::load(&config) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            match runner::run(&cfg, &runner::output_root()) {
                Ok(out) => {
                    report(&out);
                    ExitCode::from(EXIT_OK as u8)
                }
                Err(e) => fail(&e),
            }
        }
        Command::Validate { config } => {
            let rep = RunConfig::load(&config).and_then(|c| runner::validate(&c));
            match rep {
                Ok(rep) => {
                    println!("{}", serde_json::to_string_pretty(&rep).expect("report serializes"));
                    for w in &rep.warnings {
                        eprintln!("warning: {w}");
                    }
                    ExitCode::from(EXIT_OK as u8)
                }
                Err(e) => fail(&e),
            }
        }
        Command::VerifySpaces { seed, members } => {
            let mut cfg = RunConfig::for_kind(ExperimentKind::VerifySpaces);
            cfg.seed = seed;
            cfg.tolerances.ensemble_members = members;
            match runner::run(&cfg, &runner::output_root()) {
                Ok(out) => {
                    report(&out);
                    let code = if out.passed() { EXIT_OK } else { EXIT_INTERNAL };
                    ExitCode::from(code as u8)
                }
                Err(e) => fail(&e),
            }
        }
        Command::ListExperiments => {
            for (name, summary) in runner::list_experiments() {
                println!("{name:<14} {summary}");
            }
            ExitCode::from(EXIT_OK as u8)
        }
    }
}
