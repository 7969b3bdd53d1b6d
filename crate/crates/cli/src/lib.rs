//! Experiment harness: declarative TOML specs, deterministic environment
//! generation, training and evaluation runs, and the consolidated ablation
//! matrix, all laid out under a shared output root.

pub mod report;
pub mod run;
pub mod spec;

pub use report::{render_table, EpisodeRecord, SummaryRow};
pub use run::{
    cmd_ablate, cmd_eval, cmd_gen_env, cmd_train, load_dataset, output_root, run_dir, CliError,
    CliResult,
};
pub use spec::{AblationSpec, ExperimentSpec, ModelSpec, Variant};
