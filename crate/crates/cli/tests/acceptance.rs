//! End-to-end acceptance checks for the navigation stack. Each test covers
//! one criterion and prints a single PASS/FAIL verdict line (visible with
//! `--nocapture`; a FAIL also panics with the details).

use std::collections::BTreeMap;
use std::sync::OnceLock;
use std::time::Instant;

use agent::{
    init_state, marker_lookup, marker_update, step, Mode, Model, ModelConfig, StepDecision,
};
use navmetrics::MetricSummary;
use navsim::rng::stream_seed;
use navsim::{
    generate_dataset, generate_graph, observe, renoise_episode, Dataset, EnvConfig, Episode,
    GraphParams, LandmarkLatents, NavGraph, Split,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tapegrad::{grad_check, ParameterSet, Tape, TapeBinding, Var};
use trainer::{evaluate_episodes, loss, rollout, train, RolloutMode, TrainConfig};

fn verdict(criterion: &str, ok: bool, detail: &str) {
    println!("acceptance [{}]: {} ({detail})", criterion, if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{criterion}: {detail}");
}

const TOKENS: &[usize] = &[3, 11, 25, 9, 17];

fn small_cfg(hidden: usize, regret: bool, marker: bool) -> ModelConfig {
    ModelConfig {
        vocab_size: navsim::vocab::VOCAB_SIZE,
        embed_dim: 6,
        hidden,
        proj: 10,
        feature_dim: 6,
        l_max: 8,
        marker_tile: 3,
        max_steps: 8,
        dropout: 0.0,
        regret,
        marker,
        rollback_block: false,
        pair_block: false,
    }
}

/// Small graph whose feature dim matches `small_cfg` (2 + 4*1 = 6).
fn small_graph(seed: u64) -> NavGraph {
    let params = GraphParams {
        min_side: 4,
        max_side: 4,
        d_app: 2,
        t_orient: 1,
        ..GraphParams::default()
    };
    let latents = LandmarkLatents::generate(seed, params.d_app);
    generate_graph(seed, &params, &latents).unwrap()
}

struct Run {
    // the tape owns the values the decisions reference; kept alive with them
    _tape: Tape,
    _binding: TapeBinding,
    decisions: Vec<StepDecision>,
    state: agent::AgentState,
}

fn run_episode(model: &mut Model, graph: &NavGraph, start: usize, modes: &[Mode]) -> Run {
    let mut tape = Tape::new();
    let binding = TapeBinding::bind(&mut tape, &model.params);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let ctx =
        agent::encode_instruction(&mut tape, &binding, &model.config, TOKENS, true, &mut rng);
    let mut state = init_state(&mut tape, &model.config, start);
    let mut decisions = Vec::new();
    for &mode in modes {
        let obs = observe(graph, state.viewpoint).unwrap();
        let d = step(
            &mut tape,
            &binding,
            &model.config,
            &mut model.bn,
            &ctx,
            &obs,
            &mut state,
            mode,
            true,
            &mut rng,
        );
        let stop = d.target.is_none();
        decisions.push(d);
        if stop {
            break;
        }
    }
    Run { _tape: tape, _binding: binding, decisions, state }
}

// ── criterion 1: analytic gradients of the full agent ────────────────

/// A forced out-and-back episode engages every module (encoder, grounding,
/// decoder, progress head, gate, markers, fused projection); the composite
/// objective then reaches every parameter tensor.
#[test]
fn gradients_of_the_full_agent_match_finite_differences() {
    let started = Instant::now();
    let cfg = small_cfg(16, true, true);
    let graph = small_graph(41);
    let mut model = Model::new(cfg.clone(), 4100);
    let bn = model.bn.clone();
    let forward = |params: &ParameterSet| -> (f64, Option<(Tape, TapeBinding, Var)>) {
        let mut bn = bn.clone();
        let mut tape = Tape::new();
        let b = TapeBinding::bind(&mut tape, params);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let ctx = agent::encode_instruction(&mut tape, &b, &cfg, TOKENS, true, &mut rng);
        let mut state = init_state(&mut tape, &cfg, 0);
        let mut total: Option<Var> = None;
        // out, roll back, out along another slot, stop
        for (i, force) in [1usize, 1, 2, 0].into_iter().enumerate() {
            let obs = observe(&graph, state.viewpoint).unwrap();
            let slot = force.min(obs.num_candidates() - 1);
            let d = step(
                &mut tape, &b, &cfg, &mut bn, &ctx, &obs, &mut state,
                Mode::Forced(slot), true, &mut rng,
            );
            // action term against a fixed reference slot, progress term
            // against a fixed target, entropy term over the distribution
            let gt = (slot + 1) % d.probs.len();
            if d.probs[gt] > 0.0 {
                let p_gt = tape.select(d.probs_var, gt);
                let lp = tape.ln(p_gt);
                let ce = tape.scale(lp, -1.0);
                total = Some(match total {
                    None => ce,
                    Some(t) => tape.add(t, ce),
                });
            }
            let target = tape.scalar(0.2 * (i as f64 + 1.0));
            let diff = tape.sub(d.p_pm, target);
            let mse = tape.mul(diff, diff);
            total = Some(match total {
                None => mse,
                Some(t) => tape.add(t, mse),
            });
            if d.target.is_none() {
                break;
            }
        }
        let l = total.unwrap();
        (tape.value(l).item(), Some((tape, b, l)))
    };

    model.params.zero_grads();
    let (_, handle) = forward(&model.params);
    let (tape, b, l) = handle.unwrap();
    let grads = tape.backward(l);
    b.accumulate(&grads, &mut model.params);

    // every tensor must actually participate before the comparison means much
    let untouched: Vec<&str> = model
        .params
        .iter()
        .filter(|(_, p)| p.trainable && p.grad.iter().all(|g| *g == 0.0))
        .map(|(n, _)| n)
        .collect();
    assert!(untouched.is_empty(), "tensors with no gradient path: {untouched:?}");

    let report = grad_check(&mut model.params, |p| forward(p).0, 1e-5, 1e-4);
    let elapsed = started.elapsed();
    verdict(
        "1 gradient correctness",
        report.passed() && elapsed.as_secs() < 120,
        &format!(
            "max rel err {:.2e} over {} tensors in {:.1?}{}",
            report.max_rel_err,
            report.per_param.len(),
            elapsed,
            if report.passed() {
                String::new()
            } else {
                format!("; failures {:?}", report.failures().collect::<Vec<_>>())
            }
        ),
    );
}

// ── criterion 2: the progress head is detached from the action loss ──

#[test]
fn action_loss_without_mse_leaves_progress_weights_untouched() {
    let cfg = small_cfg(8, true, true);
    let mut model = Model::new(cfg.clone(), 2200);
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let mut steps_checked = 0usize;
    let mut episode = 0u64;
    while steps_checked < 100 {
        let graph = small_graph(50 + episode % 7);
        let ep = synthetic_episode(&graph, episode);
        episode += 1;
        model.params.zero_grads();
        let mut run = rollout(
            &mut model, &graph, 0, &ep, RolloutMode::Sample, true, &mut rng,
        );
        // the real objective with the progress MSE term removed
        let l = loss(&mut run.tape, &run.buffer, 1.0, 0.01);
        let grads = run.tape.backward(l);
        run.binding.accumulate(&grads, &mut model.params);
        for name in ["w_h", "w_pm"] {
            assert!(
                model.params.get(name).grad.iter().all(|g| *g == 0.0),
                "{name} picked up gradient from the action-only loss"
            );
        }
        steps_checked += run.buffer.steps.len();
    }
    verdict(
        "2 detach contract",
        true,
        &format!("zero w_h/w_pm gradient across {steps_checked} random steps"),
    );
}

/// A plausible episode on `graph` for rollouts that need ground truth.
fn synthetic_episode(graph: &NavGraph, salt: u64) -> Episode {
    let start = (salt as usize * 3) % graph.len();
    let mut path = vec![start];
    let mut cur = start;
    for k in 0..3 {
        let nbrs = &graph.neighbors[cur];
        let next = nbrs[(salt as usize + k) % nbrs.len()];
        if Some(&next) == path.get(path.len().wrapping_sub(2)) {
            break;
        }
        path.push(next);
        cur = next;
    }
    Episode {
        graph: 0,
        instruction: TOKENS.to_vec(),
        start,
        goal: cur,
        path,
        split: Split::Train,
    }
}

// ── criterion 3: progress-marker memory semantics ─────────────────────

#[test]
fn marker_memory_follows_the_visit_history() {
    let cfg = small_cfg(8, true, true);
    let mut checked_steps = 0usize;
    let mut revisits = 0usize;
    for seed in 0..20u64 {
        let graph = small_graph(80 + seed % 5);
        let mut model = Model::new(cfg.clone(), 300 + seed);
        let run = run_episode(&mut model, &graph, 0, &[Mode::TrainSample; 8]);
        // replay the episode against an independent marker map
        let mut shadow: BTreeMap<usize, f64> = BTreeMap::new();
        let mut viewpoint = 0usize;
        for d in &run.decisions {
            let p = d.p_pm_value;
            assert!((-1.0..=1.0).contains(&p), "progress estimate outside [-1, 1]");
            let obs = observe(&graph, viewpoint).unwrap();
            for cand in &obs.candidates {
                let marker = marker_lookup(&shadow, cand.target);
                assert!((-1.0..=1.0).contains(&marker), "marker outside [-1, 1]");
                let delta = p - marker;
                match cand.target {
                    None => assert_eq!(marker, 0.0, "stop marker must be 0"),
                    Some(v) => match shadow.get(&v) {
                        // visited: the difference steps off the stored estimate
                        Some(stored) => {
                            assert_eq!(delta, p - stored);
                            revisits += 1;
                        }
                        // unvisited: the difference is against full progress
                        None => {
                            assert_eq!(marker, 1.0);
                            assert_eq!(delta, p - 1.0);
                        }
                    },
                }
            }
            marker_update(&mut shadow, viewpoint, p);
            checked_steps += 1;
            match d.target {
                Some(t) => viewpoint = t,
                None => break,
            }
        }
        assert_eq!(
            run.state.marker, shadow,
            "agent marker memory diverged from the replayed visit history"
        );
    }
    verdict(
        "3 marker semantics",
        revisits > 0,
        &format!("{checked_steps} steps replayed, {revisits} visited-candidate lookups"),
    );
}

// ── criterion 4: oscillation blocking after a rollback ───────────────

#[test]
fn rollback_is_unrepeatable_for_exactly_one_step() {
    let cfg = small_cfg(8, true, true);
    let mut rollbacks_observed = 0usize;
    for trial in 0..1000u64 {
        let graph = small_graph(120 + trial % 10);
        let mut model = Model::new(cfg.clone(), 9000 + trial % 17);
        let mut tape = Tape::new();
        let binding = TapeBinding::bind(&mut tape, &model.params);
        let mut rng = ChaCha8Rng::seed_from_u64(trial);
        let ctx = agent::encode_instruction(
            &mut tape, &binding, &model.config, TOKENS, true, &mut rng,
        );
        let start = (trial as usize) % graph.len();
        let mut state = init_state(&mut tape, &model.config, start);
        let mut pending: Option<(usize, usize)> = None; // (rolled back to, came from)
        for _ in 0..cfg.max_steps {
            let before = state.viewpoint;
            let obs = observe(&graph, before).unwrap();
            let d = step(
                &mut tape, &binding, &model.config, &mut model.bn, &ctx, &obs,
                &mut state, Mode::TrainSample, false, &mut rng,
            );
            if let Some((returned_to, came_from)) = pending.take() {
                assert_eq!(before, returned_to);
                let slot = obs.slot_of(came_from).expect("rollback origin stays adjacent");
                assert!(!d.mask[slot], "immediate re-entry must be masked");
                assert_eq!(d.probs[slot], 0.0, "masked slot must carry zero probability");
                // consumed: nothing remains armed two steps after the rollback
                assert_eq!(state.osc_block, None, "the block must lift after one step");
            }
            if d.is_rollback {
                rollbacks_observed += 1;
                pending = Some((d.target.unwrap(), before));
            }
            if d.target.is_none() {
                break;
            }
        }
    }
    verdict(
        "4 oscillation blocking",
        rollbacks_observed >= 100,
        &format!("{rollbacks_observed} rollbacks across 1000 seeded rollouts"),
    );
}

// ── criterion 5: metrics against a brute-force oracle ────────────────

fn euclid(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Brute-force single-source distances: repeated relaxation to a fixpoint,
/// independent of the library's shortest-path implementation.
fn oracle_distances(graph: &NavGraph, source: usize) -> Vec<f64> {
    let n = graph.len();
    let mut dist = vec![f64::INFINITY; n];
    dist[source] = 0.0;
    loop {
        let mut changed = false;
        for u in 0..n {
            if !dist[u].is_finite() {
                continue;
            }
            for &v in &graph.neighbors[u] {
                let w = euclid(&graph.viewpoints[u].position, &graph.viewpoints[v].position);
                let cand = dist[u] + w;
                if cand < dist[v] {
                    dist[v] = cand;
                    changed = true;
                }
            }
        }
        if !changed {
            return dist;
        }
    }
}

#[test]
fn metrics_match_brute_force_recomputation() {
    let mut env = EnvConfig::default();
    env.train_graphs = 2;
    env.unseen_graphs = 2;
    env.train_episodes_per_graph = 1;
    env.seen_eval_episodes_per_graph = 1;
    env.unseen_eval_episodes_per_graph = 25;
    env.graph.min_side = 4;
    env.graph.max_side = 5;
    env.graph.d_app = 8;
    env.graph.t_orient = 2;
    let dataset = generate_dataset(5050, &env).unwrap();
    let episodes = dataset.split(Split::UnseenEval);
    assert_eq!(episodes.len(), 50);

    let mut model = Model::new(
        ModelConfig {
            hidden: 12,
            proj: 12,
            embed_dim: 8,
            marker_tile: 2,
            max_steps: 10,
            dropout: 0.0,
            ..ModelConfig::desk(env.graph.feature_dim())
        },
        55,
    );
    let threshold = env.success_radius;
    let (summary, results) = evaluate_episodes(&mut model, &dataset.graphs, episodes, threshold);

    // independent recomputation of every metric from raw trajectories
    let n = results.len() as f64;
    let (mut ne_s, mut sr_s, mut osr_s, mut spl_s, mut one_s) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for r in &results {
        let g = &dataset.graphs[r.graph];
        let stop = *r.visited.last().unwrap();
        let ne = oracle_distances(g, stop)[r.episode.goal];
        let one = r
            .visited
            .iter()
            .map(|&v| oracle_distances(g, v)[r.episode.goal])
            .fold(f64::INFINITY, f64::min);
        let sr = if ne < threshold { 1.0 } else { 0.0 };
        let osr = if one < threshold { 1.0 } else { 0.0 };
        let shortest = oracle_distances(g, r.episode.start)[r.episode.goal];
        let walked: f64 = r
            .visited
            .windows(2)
            .map(|w| euclid(&g.viewpoints[w[0]].position, &g.viewpoints[w[1]].position))
            .sum();
        assert_eq!(walked, r.trajectory_length, "trajectory length mismatch");
        ne_s += ne;
        sr_s += sr;
        osr_s += osr;
        one_s += one;
        spl_s += sr * shortest / walked.max(shortest);
        assert!(one <= ne + 1e-12, "oracle error above final error");
    }
    let exact = summary.ne == ne_s / n
        && summary.sr == sr_s / n
        && summary.osr == osr_s / n
        && summary.one == one_s / n;
    let spl_ok = (summary.spl - spl_s / n).abs() < 1e-9;
    let invariants = summary.one <= summary.ne && summary.spl <= summary.sr + 1e-12;
    verdict(
        "5 metric oracle equivalence",
        exact && spl_ok && invariants,
        &format!(
            "50 episodes: NE {:.6} SR {:.3} OSR {:.3} SPL {:.6} ONE {:.6}",
            summary.ne, summary.sr, summary.osr, summary.spl, summary.one
        ),
    );
}

// ── criterion 6: both components off reduces to the plain scorer ──────

#[test]
fn disabled_components_reduce_to_the_baseline_scoring_rule() {
    let cfg = small_cfg(8, false, false);
    let mut checked = 0usize;
    let mut max_diff = 0.0f64;
    let mut trial = 0u64;
    while checked < 100 {
        let graph = small_graph(200 + trial % 6);
        let mut model = Model::new(cfg.clone(), 600 + trial);
        trial += 1;
        let w_a = model.params.get("w_a").data.clone();
        let run = run_episode(&mut model, &graph, 0, &[Mode::TrainSample; 6]);
        for d in &run.decisions {
            // the baseline rule: softmax over s_k = g_k . (W_a [h; x_hat])
            let hx: Vec<f64> =
                d.h_value.iter().chain(d.x_hat_value.iter()).copied().collect();
            let out = w_a.shape[0];
            let inn = w_a.shape[1];
            assert_eq!(inn, hx.len());
            let m: Vec<f64> = (0..out)
                .map(|i| (0..inn).map(|j| w_a.values[i * inn + j] * hx[j]).sum())
                .collect();
            let scores: Vec<f64> = d
                .g_values
                .iter()
                .map(|g| g.iter().zip(&m).map(|(a, b)| a * b).sum())
                .collect();
            let hi = scores
                .iter()
                .zip(&d.mask)
                .filter(|(_, keep)| **keep)
                .map(|(s, _)| *s)
                .fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = scores
                .iter()
                .zip(&d.mask)
                .map(|(s, keep)| if *keep { (s - hi).exp() } else { 0.0 })
                .collect();
            let z: f64 = exps.iter().sum();
            for (k, e) in exps.iter().enumerate() {
                max_diff = max_diff.max((e / z - d.probs[k]).abs());
            }
            checked += 1;
        }
    }
    verdict(
        "6 baseline reduction",
        max_diff < 1e-9,
        &format!("max probability deviation {max_diff:.2e} over {checked} steps"),
    );
}

// ── criteria 7 and 8: the desk-scale benchmark ────────────────────────

struct MatrixRun {
    regret: bool,
    marker: bool,
    seed: u64,
    best: MetricSummary,
    blocked: Option<MetricSummary>,
    noisy: Option<MetricSummary>,
    train_secs: f64,
}

struct Matrix {
    runs: Vec<MatrixRun>,
    elapsed_secs: f64,
}

static MATRIX: OnceLock<Matrix> = OnceLock::new();

fn noisy_unseen(dataset: &Dataset, seed: u64, noise: f64) -> Vec<Episode> {
    dataset
        .split(Split::UnseenEval)
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

/// Trains baseline, regret-only, and full models over five seeds on the
/// default benchmark. Criteria 7 and 8 read from the same matrix.
fn matrix() -> &'static Matrix {
    MATRIX.get_or_init(|| {
        let started = Instant::now();
        let env = EnvConfig::default();
        let dataset = generate_dataset(42, &env).unwrap();
        let threshold = env.success_radius;
        let mut runs = Vec::new();
        for seed in 0..5u64 {
            for (regret, marker) in [(false, false), (true, false), (true, true)] {
                let mut cfg = ModelConfig::desk(env.graph.feature_dim());
                cfg.regret = regret;
                cfg.marker = marker;
                let model = Model::new(cfg, stream_seed(seed, "model-init"));
                let tc = TrainConfig { seed, ..TrainConfig::default() };
                let run_started = Instant::now();
                let out = train(model, &dataset, &tc, |_| {});
                let train_secs = run_started.elapsed().as_secs_f64();
                let mut best = out.best_model;
                let (summary, _) = evaluate_episodes(
                    &mut best,
                    &dataset.graphs,
                    dataset.split(Split::UnseenEval),
                    threshold,
                );
                let blocked = if regret && marker {
                    let mut b = best.clone();
                    b.config.rollback_block = true;
                    let (s, _) = evaluate_episodes(
                        &mut b,
                        &dataset.graphs,
                        dataset.split(Split::UnseenEval),
                        threshold,
                    );
                    Some(s)
                } else {
                    None
                };
                let noisy = if (regret && marker) || (!regret && !marker) {
                    let eps = noisy_unseen(&dataset, seed, 0.6);
                    let (s, _) =
                        evaluate_episodes(&mut best, &dataset.graphs, &eps, threshold);
                    Some(s)
                } else {
                    None
                };
                runs.push(MatrixRun {
                    regret,
                    marker,
                    seed,
                    best: summary,
                    blocked,
                    noisy,
                    train_secs,
                });
            }
        }
        Matrix { runs, elapsed_secs: started.elapsed().as_secs_f64() }
    })
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn pick<'a>(
    m: &'a Matrix,
    regret: bool,
    marker: bool,
) -> impl Iterator<Item = &'a MatrixRun> + 'a {
    m.runs.iter().filter(move |r| r.regret == regret && r.marker == marker)
}

#[test]
fn desk_scale_learning_shows_the_component_ordering() {
    let m = matrix();
    let sr = |regret, marker| median(pick(m, regret, marker).map(|r| r.best.sr).collect());
    let full = sr(true, true);
    let regret_only = sr(true, false);
    let baseline = sr(false, false);
    let ordering = full >= regret_only && regret_only >= baseline;

    let block_drop = median(
        pick(m, true, true)
            .map(|r| r.best.sr - r.blocked.as_ref().unwrap().sr)
            .collect(),
    );
    let blocking_hurts = block_drop >= 0.02;

    let full_rb_fail = median(
        pick(m, true, true).map(|r| r.best.rollback.failure_rollback_fraction).collect(),
    );
    let regret_rb_fail = median(
        pick(m, true, false).map(|r| r.best.rollback.failure_rollback_fraction).collect(),
    );
    let cleaner_failures = full_rb_fail < regret_rb_fail;

    // "15 minutes" budgets a single training run on the benchmark; the
    // medians need fifteen of them
    let slowest = m.runs.iter().map(|r| r.train_secs).fold(0.0, f64::max);
    let in_budget = slowest <= 900.0;
    verdict(
        "7 desk-scale learning",
        ordering && blocking_hurts && cleaner_failures && in_budget,
        &format!(
            "median unseen SR full {full:.3} / regret-only {regret_only:.3} / baseline {baseline:.3}; \
             blocking costs {block_drop:+.3}; rollback-in-failure full {full_rb_fail:.3} vs \
             regret-only {regret_rb_fail:.3}; slowest run {slowest:.0}s, {:.0}s total",
            m.elapsed_secs
        ),
    );
}

#[test]
fn noisy_instructions_transfer_better_with_the_full_model() {
    let m = matrix();
    let deltas: Vec<f64> = (0..5)
        .map(|seed| {
            let full = pick(m, true, true)
                .find(|r| r.seed == seed)
                .and_then(|r| r.noisy.as_ref())
                .unwrap()
                .osr;
            let base = pick(m, false, false)
                .find(|r| r.seed == seed)
                .and_then(|r| r.noisy.as_ref())
                .unwrap()
                .osr;
            full - base
        })
        .collect();
    let med = median(deltas);
    verdict(
        "8 noisy-instruction transfer",
        med > 0.0,
        &format!("median unseen OSR advantage {med:+.3} under instruction noise"),
    );
}

// ── criterion 9: end-to-end determinism ───────────────────────────────

#[test]
fn identical_specs_produce_byte_identical_artifacts() {
    let mut spec = cli::ExperimentSpec::default();
    spec.name = "repro".into();
    spec.seed = 7;
    spec.env.train_graphs = 3;
    spec.env.unseen_graphs = 1;
    spec.env.train_episodes_per_graph = 4;
    spec.env.seen_eval_episodes_per_graph = 2;
    spec.env.unseen_eval_episodes_per_graph = 4;
    spec.env.min_path_edges = 2;
    spec.env.max_path_edges = 4;
    spec.env.graph.min_side = 4;
    spec.env.graph.max_side = 4;
    spec.model.hidden = Some(8);
    spec.model.proj = Some(8);
    spec.model.embed_dim = Some(8);
    spec.model.marker_tile = Some(2);
    spec.model.max_steps = Some(8);
    spec.model.dropout = Some(0.1);
    spec.train.epochs = 3;
    spec.train.bootstrap_epochs = 1;

    let tmp = tempfile::tempdir().unwrap();
    let mut digests = Vec::new();
    for side in ["a", "b"] {
        let root = tmp.path().join(side);
        cli::cmd_gen_env(&spec, &root).unwrap();
        let ckpt = cli::cmd_train(&spec, &root, Some(cli::Variant::Full)).unwrap();
        cli::cmd_eval(&spec, &root, &ckpt, 0.0).unwrap();
        let dir = root.join("repro");
        digests.push(
            [
                "dataset.json",
                "train/full-clean-s7/curves.jsonl",
                "train/full-clean-s7/checkpoint.json",
                "train/full-clean-s7/final.json",
                "eval/full-clean-s7.jsonl",
                "eval/full-clean-s7.txt",
            ]
            .map(|f| std::fs::read(dir.join(f)).unwrap()),
        );
    }
    let same = digests[0] == digests[1];
    verdict(
        "9 determinism",
        same,
        "dataset, curves, checkpoints, and reports byte-identical across reruns",
    );
}
