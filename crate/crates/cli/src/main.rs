use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cli::{cmd_ablate, cmd_eval, cmd_gen_env, cmd_train, output_root, CliResult, ExperimentSpec, Variant};

/// Navigation experiment harness.
#[derive(Parser)]
#[command(name = "nav", version, about)]
struct Cli {
    /// experiment spec (TOML)
    #[arg(long, global = true, default_value = "experiment.toml")]
    spec: PathBuf,
    /// output root (overrides NAV_OUTPUT_ROOT; default ./runs)
    #[arg(long, global = true)]
    output_root: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the graph and episode dataset for a spec.
    GenEnv,
    /// Train one model on a previously generated dataset.
    Train {
        /// override the spec's component switches (baseline, regret-only,
        /// marker-only, full)
        #[arg(long)]
        variant: Option<Variant>,
    },
    /// Evaluate a saved checkpoint on the held-out splits.
    Eval {
        /// checkpoint file written by `train` or `ablate`
        #[arg(long)]
        checkpoint: PathBuf,
        /// instruction-noise level applied to the evaluation episodes
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
    },
    /// Train and evaluate the full component matrix across seeds.
    Ablate,
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    let spec = ExperimentSpec::load(&cli.spec)?;
    let root = output_root(cli.output_root.clone());
    match &cli.command {
        Command::GenEnv => {
            cmd_gen_env(&spec, &root)?;
        }
        Command::Train { variant } => {
            cmd_train(&spec, &root, *variant)?;
        }
        Command::Eval { checkpoint, noise } => {
            if !(0.0..=1.0).contains(noise) {
                return Err(cli::CliError::Config(anyhow::anyhow!(
                    "noise must be in [0, 1], got {noise}"
                )));
            }
            cmd_eval(&spec, &root, checkpoint, *noise)?;
        }
        Command::Ablate => {
            cmd_ablate(&spec, &root)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
