//! Command implementations: environment generation, training, evaluation,
//! and the consolidated ablation matrix.

use std::path::{Path, PathBuf};

use agent::Model;
use anyhow::{bail, Context, Result};
use navmetrics::MetricSummary;
use navsim::rng::stream_seed;
use navsim::{generate_dataset, renoise_episode, Dataset, Episode, Split};
use trainer::{evaluate_episodes, train, TrainConfig, TrainOutput};

use crate::report::{episode_records, render_table, to_jsonl, SummaryRow};
use crate::spec::{ExperimentSpec, Variant};

/// Failure taxonomy mapped to process exit codes: configuration / IO
/// problems exit 1, numerical failures (non-finite loss) exit 2.
#[derive(Debug)]
pub enum CliError {
    Config(anyhow::Error),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "configuration error: {e:#}"),
            CliError::Numerical(msg) => write!(f, "numerical failure: {msg}"),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Config(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Output root: explicit flag, then the NAV_OUTPUT_ROOT environment
/// variable, then ./runs.
pub fn output_root(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("NAV_OUTPUT_ROOT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"))
}

pub fn run_dir(root: &Path, spec: &ExperimentSpec) -> PathBuf {
    root.join(&spec.name)
}

/// Writes `content`, refusing to change existing outputs: an identical file
/// is left untouched, a differing one is an error (no in-place mutation).
pub fn write_fresh(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))?;
    }
    if path.exists() {
        let existing = std::fs::read_to_string(path)
            .with_context(|| format!("reading existing {}", path.display()))?;
        if existing == content {
            return Ok(());
        }
        bail!(
            "{} already exists with different content; outputs are never rewritten in place",
            path.display()
        );
    }
    std::fs::write(path, content).with_context(|| format!("writing {}", path.display()))
}

// ── gen-env ─────────────────────────────────────────────────────────

pub fn cmd_gen_env(spec: &ExperimentSpec, root: &Path) -> CliResult<PathBuf> {
    let dir = run_dir(root, spec);
    let dataset = generate_dataset(spec.seed, &spec.env)
        .map_err(|e| CliError::Config(anyhow::Error::new(e)))?;
    write_fresh(&dir.join("spec.toml"), &spec.to_toml())?;
    let json = serde_json::to_string(&dataset).expect("dataset serialization cannot fail");
    write_fresh(&dir.join("dataset.json"), &json)?;
    println!(
        "dataset: {} train graphs + {} unseen, {} / {} / {} episodes (train / seen-eval / unseen-eval)",
        spec.env.train_graphs,
        spec.env.unseen_graphs,
        dataset.train.len(),
        dataset.seen_eval.len(),
        dataset.unseen_eval.len(),
    );
    Ok(dir)
}

pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let path = dir.join("dataset.json");
    let text = std::fs::read_to_string(&path)
        .with_context(|| format!("reading dataset {} (run gen-env first)", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

// ── train ───────────────────────────────────────────────────────────

/// Re-noises training instructions for the noisy-training regime.
fn noisy_train_dataset(dataset: &Dataset, seed: u64, noise: f64) -> Dataset {
    let mut out = dataset.clone();
    out.train = dataset
        .train
        .iter()
        .enumerate()
        .map(|(i, ep)| {
            renoise_episode(
                &dataset.graphs[ep.graph],
                ep,
                stream_seed(seed, &format!("train-noise/{i}")),
                noise,
            )
        })
        .collect();
    out
}

pub struct TrainedRun {
    pub output: TrainOutput,
    pub curves_jsonl: String,
}

/// One deterministic training run of `variant` under master seed `seed`.
pub fn train_run(
    spec: &ExperimentSpec,
    dataset: &Dataset,
    variant: Variant,
    seed: u64,
    train_noise: f64,
) -> CliResult<TrainedRun> {
    let model_cfg = spec.model.with_variant(variant).build(spec.env.graph.feature_dim())?;
    let model = Model::new(model_cfg, stream_seed(seed, "model-init"));
    let cfg = TrainConfig { seed, ..spec.train.clone() };
    let noisy;
    let data = if train_noise > 0.0 {
        noisy = noisy_train_dataset(dataset, seed, train_noise);
        &noisy
    } else {
        dataset
    };
    let output = train(model, data, &cfg, |_| {});
    if output.skipped_updates > 0 {
        return Err(CliError::Numerical(format!(
            "{} optimizer updates skipped on non-finite gradients",
            output.skipped_updates
        )));
    }
    if let Some(bad) = output.curves.iter().find(|r| !r.mean_loss.is_finite()) {
        return Err(CliError::Numerical(format!(
            "non-finite loss at epoch {}",
            bad.epoch
        )));
    }
    let curves_jsonl = to_jsonl(&output.curves);
    Ok(TrainedRun { output, curves_jsonl })
}

fn train_dir(dir: &Path, variant: Variant, seed: u64, noisy: bool) -> PathBuf {
    let regime = if noisy { "noisy" } else { "clean" };
    dir.join("train").join(format!("{}-{}-s{}", variant.slug(), regime, seed))
}

/// Persists a training run; returns the checkpoint path.
pub fn save_run(
    dir: &Path,
    variant: Variant,
    seed: u64,
    noisy: bool,
    run: &TrainedRun,
) -> Result<PathBuf> {
    let tdir = train_dir(dir, variant, seed, noisy);
    write_fresh(&tdir.join("curves.jsonl"), &run.curves_jsonl)?;
    write_fresh(&tdir.join("checkpoint.json"), &run.output.best_model.to_json())?;
    write_fresh(&tdir.join("final.json"), &run.output.final_model.to_json())?;
    Ok(tdir.join("checkpoint.json"))
}

pub fn cmd_train(
    spec: &ExperimentSpec,
    root: &Path,
    variant: Option<Variant>,
) -> CliResult<PathBuf> {
    let dir = run_dir(root, spec);
    let dataset = load_dataset(&dir)?;
    let variant = variant.unwrap_or(match (spec.model.regret, spec.model.marker) {
        (false, false) => Variant::Baseline,
        (true, false) => Variant::RegretOnly,
        (false, true) => Variant::MarkerOnly,
        (true, true) => Variant::Full,
    });
    let run = train_run(spec, &dataset, variant, spec.seed, 0.0)?;
    let best = run.output.curves[run.output.best_epoch].unseen.sr;
    let path = save_run(&dir, variant, spec.seed, false, &run)?;
    println!(
        "trained {} for {} epochs; best unseen SR {:.3} at epoch {}",
        variant.slug(),
        run.output.curves.len(),
        best,
        run.output.best_epoch,
    );
    Ok(path)
}

// ── eval ────────────────────────────────────────────────────────────

/// Instruction-noised copies of an episode list (identity at noise 0).
pub fn noised_episodes(dataset: &Dataset, episodes: &[Episode], seed: u64, noise: f64) -> Vec<Episode> {
    episodes
        .iter()
        .enumerate()
        .map(|(i, ep)| {
            renoise_episode(
                &dataset.graphs[ep.graph],
                ep,
                stream_seed(seed, &format!("eval-noise/{i}")),
                noise,
            )
        })
        .collect()
}

pub struct SplitReport {
    pub summary: MetricSummary,
    pub jsonl: String,
}

pub fn eval_split(
    model: &mut Model,
    dataset: &Dataset,
    split: Split,
    label: &str,
    noise: f64,
    seed: u64,
    threshold: f64,
) -> SplitReport {
    let episodes: Vec<Episode> = if noise > 0.0 {
        noised_episodes(dataset, dataset.split(split), seed, noise)
    } else {
        dataset.split(split).to_vec()
    };
    let (summary, results) = evaluate_episodes(model, &dataset.graphs, &episodes, threshold);
    let records = episode_records(label, &dataset.graphs, &results, threshold);
    SplitReport { summary, jsonl: to_jsonl(&records) }
}

pub fn cmd_eval(
    spec: &ExperimentSpec,
    root: &Path,
    checkpoint: &Path,
    noise: f64,
) -> CliResult<Vec<SummaryRow>> {
    let dir = run_dir(root, spec);
    let dataset = load_dataset(&dir)?;
    let mut model = Model::load(checkpoint)?;
    let threshold = spec.train.success_radius;
    let stem = checkpoint
        .parent()
        .and_then(|p| p.file_name())
        .and_then(|n| n.to_str())
        .unwrap_or("checkpoint")
        .to_string();
    let tag = if noise > 0.0 { format!("{stem}-noise") } else { stem };

    let mut rows = Vec::new();
    let mut jsonl = String::new();
    for (split, label) in [(Split::SeenEval, "seen"), (Split::UnseenEval, "unseen")] {
        let rep = eval_split(&mut model, &dataset, split, label, noise, spec.seed, threshold);
        jsonl.push_str(&rep.jsonl);
        rows.push(SummaryRow { label: format!("{tag}/{label}"), metrics: rep.summary });
    }
    let table = render_table(&rows);
    let edir = dir.join("eval");
    write_fresh(&edir.join(format!("{tag}.jsonl")), &jsonl)?;
    write_fresh(&edir.join(format!("{tag}.txt")), &table)?;
    print!("{table}");
    Ok(rows)
}

// ── ablate ──────────────────────────────────────────────────────────

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn median_summary(label: &str, group: &[&MetricSummary]) -> SummaryRow {
    let pick = |f: &dyn Fn(&MetricSummary) -> f64| median(group.iter().map(|m| f(m)).collect());
    SummaryRow {
        label: label.to_string(),
        metrics: MetricSummary {
            episodes: group.first().map(|m| m.episodes).unwrap_or(0),
            ne: pick(&|m| m.ne),
            sr: pick(&|m| m.sr),
            osr: pick(&|m| m.osr),
            spl: pick(&|m| m.spl),
            one: pick(&|m| m.one),
            rollback: navmetrics::RollbackStats {
                failure_rollback_fraction: pick(&|m| m.rollback.failure_rollback_fraction),
                success_rollback_fraction: pick(&|m| m.rollback.success_rollback_fraction),
                per_step_rate: pick(&|m| m.rollback.per_step_rate),
            },
        },
    }
}

/// Trains and evaluates the component matrix: the four variants on clean
/// instructions, rollback-blocked inference of the full model, noisy-
/// instruction evaluation of the clean-trained baseline and full models,
/// and (optionally) the noisy-training regime. Emits per-run records and a
/// median table.
pub fn cmd_ablate(spec: &ExperimentSpec, root: &Path) -> CliResult<Vec<SummaryRow>> {
    let dir = run_dir(root, spec);
    let dataset = load_dataset(&dir)?;
    let threshold = spec.train.success_radius;
    let mut rows: Vec<SummaryRow> = Vec::new();

    for &seed in &spec.ablation.seeds {
        for variant in Variant::ALL {
            let run = train_run(spec, &dataset, variant, seed, 0.0)?;
            save_run(&dir, variant, seed, false, &run)?;
            let mut model = run.output.best_model;
            let rep =
                eval_split(&mut model, &dataset, Split::UnseenEval, "unseen", 0.0, seed, threshold);
            rows.push(SummaryRow {
                label: format!("clean/{}/s{seed}", variant.slug()),
                metrics: rep.summary,
            });

            if variant == Variant::Full {
                let mut blocked = model.clone();
                blocked.config.rollback_block = true;
                let rep = eval_split(
                    &mut blocked,
                    &dataset,
                    Split::UnseenEval,
                    "unseen",
                    0.0,
                    seed,
                    threshold,
                );
                rows.push(SummaryRow {
                    label: format!("clean/full+blocked/s{seed}"),
                    metrics: rep.summary,
                });
            }
            if matches!(variant, Variant::Baseline | Variant::Full) {
                let rep = eval_split(
                    &mut model,
                    &dataset,
                    Split::UnseenEval,
                    "unseen",
                    spec.ablation.eval_noise,
                    seed,
                    threshold,
                );
                rows.push(SummaryRow {
                    label: format!("clean/{}+noisy-eval/s{seed}", variant.slug()),
                    metrics: rep.summary,
                });
            }
        }

        if spec.ablation.noisy_regime {
            for variant in [Variant::Baseline, Variant::Full] {
                let run =
                    train_run(spec, &dataset, variant, seed, spec.ablation.train_noise)?;
                save_run(&dir, variant, seed, true, &run)?;
                let mut model = run.output.best_model;
                for (noise, tag) in [(0.0, ""), (spec.ablation.eval_noise, "+noisy-eval")] {
                    let rep = eval_split(
                        &mut model,
                        &dataset,
                        Split::UnseenEval,
                        "unseen",
                        noise,
                        seed,
                        threshold,
                    );
                    rows.push(SummaryRow {
                        label: format!("noisy/{}{tag}/s{seed}", variant.slug()),
                        metrics: rep.summary,
                    });
                }
            }
        }
    }

    // medians across seeds, grouped by the label prefix before "/s<seed>"
    let mut groups: Vec<(String, Vec<&MetricSummary>)> = Vec::new();
    for row in &rows {
        let key = row.label.rsplit_once("/s").map(|(p, _)| p.to_string()).unwrap();
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(&row.metrics),
            None => groups.push((key, vec![&row.metrics])),
        }
    }
    let medians: Vec<SummaryRow> = groups
        .iter()
        .map(|(k, g)| median_summary(&format!("{k}/median"), g))
        .collect();

    let adir = dir.join("ablation");
    write_fresh(&adir.join("records.jsonl"), &to_jsonl(&rows))?;
    let mut table = render_table(&medians);
    table.push('\n');
    table.push_str(&render_table(&rows));
    write_fresh(&adir.join("table.txt"), &table)?;
    print!("{}", render_table(&medians));
    Ok(rows)
}
