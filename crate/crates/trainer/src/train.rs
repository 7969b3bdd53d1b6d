//! The training schedule: batched sampled rollouts, composite loss,
//! optimizer updates, per-epoch evaluation, and best-checkpoint tracking.

use agent::Model;
use navmetrics::{summarize, MetricSummary, TrajectoryResult};
use navsim::rng::stream;
use navsim::{Dataset, Split};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::loss::loss;
use crate::optim::Adam;
use crate::rollout::{rollout, RolloutMode};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// balance between action cross-entropy and progress MSE
    pub lambda: f64,
    /// entropy bonus weight
    pub beta: f64,
    pub lr: f64,
    pub epochs: usize,
    /// episodes per optimizer update
    pub batch_size: usize,
    pub seed: u64,
    /// epochs without a seen-eval success improvement before stopping
    pub patience: usize,
    pub max_grad_norm: f64,
    pub success_radius: f64,
    /// roll out along the ground-truth actions instead of sampling
    /// (diagnostic; sampling is the default regime)
    #[serde(default)]
    pub teacher_forcing: bool,
    /// initial epochs rolled out along ground-truth actions before
    /// switching to sampled rollouts; from-scratch features need this
    /// warm-up for sampling to make progress
    #[serde(default)]
    pub bootstrap_epochs: usize,
    /// after the bootstrap, the per-episode probability of still forcing
    /// the ground-truth action; softens the switch to sampled rollouts
    #[serde(default)]
    pub forced_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda: 0.5,
            beta: 0.01,
            lr: 3e-3,
            epochs: 40,
            batch_size: 8,
            seed: 0,
            patience: 50,
            max_grad_norm: 5.0,
            success_radius: 3.0,
            teacher_forcing: false,
            bootstrap_epochs: 8,
            forced_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mean_loss: f64,
    pub seen: MetricSummary,
    pub unseen: MetricSummary,
}

pub struct TrainOutput {
    /// weights at the last epoch
    pub final_model: Model,
    /// weights at the best seen-eval success rate (model selection never
    /// looks at the unseen split)
    pub best_model: Model,
    pub best_epoch: usize,
    pub curves: Vec<EpochRecord>,
    pub skipped_updates: usize,
}

/// Greedy evaluation of an arbitrary episode list against its graphs.
pub fn evaluate_episodes(
    model: &mut Model,
    graphs: &[navsim::NavGraph],
    episodes: &[navsim::Episode],
    threshold: f64,
) -> (MetricSummary, Vec<TrajectoryResult>) {
    let mut rng = ChaCha8Rng::seed_from_u64(0); // inert: no sampling or dropout at eval
    let results: Vec<TrajectoryResult> = episodes
        .iter()
        .map(|ep| {
            rollout(model, &graphs[ep.graph], ep.graph, ep, RolloutMode::Greedy, false, &mut rng)
                .result
        })
        .collect();
    let summary = summarize(graphs, &results, threshold);
    (summary, results)
}

/// Greedy evaluation of one split.
pub fn evaluate(
    model: &mut Model,
    dataset: &Dataset,
    split: Split,
    threshold: f64,
) -> (MetricSummary, Vec<TrajectoryResult>) {
    evaluate_episodes(model, &dataset.graphs, dataset.split(split), threshold)
}

/// Runs the full schedule. `sink` receives each epoch record as it is
/// produced (for live reporting); the records are also returned. The same
/// config, dataset, and starting model give bit-identical curves.
pub fn train(
    mut model: Model,
    dataset: &Dataset,
    cfg: &TrainConfig,
    mut sink: impl FnMut(&EpochRecord),
) -> TrainOutput {
    assert!((0.0..=1.0).contains(&cfg.lambda) && cfg.beta >= 0.0, "bad loss weights");
    assert!(cfg.batch_size > 0, "batch size must be positive");

    let mut best_model = model.clone();
    let mut best_epoch = 0;
    let mut best_sr = f64::NEG_INFINITY;
    let mut curves = Vec::new();
    let mut opt = Adam::new(cfg.lr, cfg.max_grad_norm);
    let mut since_best = 0usize;

    for epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..dataset.train.len()).collect();
        let mut shuffle_rng = stream(cfg.seed, &format!("train/order/{epoch}"));
        order.shuffle(&mut shuffle_rng);
        let mut rollout_rng = stream(cfg.seed, &format!("train/rollout/{epoch}"));
        let mut mix_rng = stream(cfg.seed, &format!("train/mix/{epoch}"));

        let mut loss_total = 0.0;
        let mut loss_count = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            model.params.zero_grads();
            for &idx in batch {
                let ep = &dataset.train[idx];
                let mut run = rollout(
                    &mut model,
                    &dataset.graphs[ep.graph],
                    ep.graph,
                    ep,
                    if cfg.teacher_forcing
                        || epoch < cfg.bootstrap_epochs
                        || mix_rng.random::<f64>() < cfg.forced_fraction
                    {
                        RolloutMode::ForceGroundTruth
                    } else {
                        RolloutMode::Sample
                    },
                    true,
                    &mut rollout_rng,
                );
                let l = loss(&mut run.tape, &run.buffer, cfg.lambda, cfg.beta);
                let l = run.tape.scale(l, 1.0 / batch.len() as f64);
                loss_total += run.tape.value(l).item() * batch.len() as f64;
                loss_count += 1;
                let grads = run.tape.backward(l);
                run.binding.accumulate(&grads, &mut model.params);
            }
            opt.step(&mut model.params);
        }

        let (seen, _) = evaluate(&mut model, dataset, Split::SeenEval, cfg.success_radius);
        let (unseen, _) = evaluate(&mut model, dataset, Split::UnseenEval, cfg.success_radius);
        let record = EpochRecord {
            epoch,
            mean_loss: if loss_count == 0 { 0.0 } else { loss_total / loss_count as f64 },
            seen,
            unseen,
        };
        sink(&record);

        // warm-up epochs are excluded from selection: models trained only
        // under forced rollouts haven't exercised the sampled-action paths
        if epoch >= cfg.bootstrap_epochs && record.seen.sr > best_sr {
            best_sr = record.seen.sr;
            best_model = model.clone();
            best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
        }
        curves.push(record);
        if since_best >= cfg.patience {
            break;
        }
    }

    TrainOutput {
        final_model: model,
        best_model,
        best_epoch,
        curves,
        skipped_updates: opt.skipped,
    }
}
