//! Running one episode end to end, recording the supervision the loss
//! needs and the trajectory the metrics need.

use agent::{encode_instruction, init_state, step, Mode, Model};
use navmetrics::TrajectoryResult;
use navsim::{ground_truth_action, progress_target, Episode, NavGraph};
use rand::Rng;
use tapegrad::{Tape, TapeBinding, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RolloutMode {
    /// categorical sampling (training)
    Sample,
    /// argmax (inference)
    Greedy,
    /// always take the shortest-path action (oracle behavior and tests)
    ForceGroundTruth,
}

/// One decision with its supervision, tied to the rollout's tape.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub viewpoint: usize,
    pub probs: Vec<f64>,
    pub probs_var: Var,
    pub chosen: usize,
    /// shortest-path slot at this viewpoint
    pub gt_slot: usize,
    pub p_pm: Var,
    pub p_pm_value: f64,
    /// progress target at this viewpoint
    pub y_pm: f64,
    pub mask: Vec<bool>,
    pub is_rollback: bool,
}

#[derive(Debug, Clone, Default)]
pub struct RolloutBuffer {
    pub steps: Vec<StepRecord>,
}

/// A finished episode: the loss inputs, the scored trajectory, and the tape
/// holding the computation (kept alive for the backward pass).
pub struct Rollout {
    pub buffer: RolloutBuffer,
    pub result: TrajectoryResult,
    pub tape: Tape,
    pub binding: TapeBinding,
}

pub fn rollout<R: Rng + ?Sized>(
    model: &mut Model,
    graph: &NavGraph,
    graph_index: usize,
    episode: &Episode,
    mode: RolloutMode,
    training: bool,
    rng: &mut R,
) -> Rollout {
    let mut tape = Tape::new();
    let binding = TapeBinding::bind(&mut tape, &model.params);
    let cfg = model.config.clone();
    let ctx = encode_instruction(
        &mut tape,
        &binding,
        &cfg,
        &episode.instruction,
        training,
        rng,
    );
    let mut state = init_state(&mut tape, &cfg, episode.start);
    let mut buffer = RolloutBuffer::default();
    let mut visited = vec![episode.start];
    let mut rollback_steps = 0usize;

    loop {
        let obs = navsim::observe(graph, state.viewpoint).expect("viewpoint exists");
        let gt_slot = ground_truth_action(graph, episode, state.viewpoint);
        let y_pm = progress_target(graph, episode, state.viewpoint);
        let step_mode = match mode {
            RolloutMode::Sample => Mode::TrainSample,
            RolloutMode::Greedy => Mode::Greedy,
            RolloutMode::ForceGroundTruth => Mode::Forced(gt_slot),
        };
        let viewpoint = state.viewpoint;
        let d = step(
            &mut tape,
            &binding,
            &cfg,
            &mut model.bn,
            &ctx,
            &obs,
            &mut state,
            step_mode,
            training,
            rng,
        );
        rollback_steps += d.is_rollback as usize;
        buffer.steps.push(StepRecord {
            viewpoint,
            probs: d.probs.clone(),
            probs_var: d.probs_var,
            chosen: d.chosen,
            gt_slot,
            p_pm: d.p_pm,
            p_pm_value: d.p_pm_value,
            y_pm,
            mask: d.mask.clone(),
            is_rollback: d.is_rollback,
        });
        match d.target {
            Some(v) => visited.push(v),
            None => break,
        }
    }

    let decision_steps = buffer.steps.len();
    let progress_estimates = buffer.steps.iter().map(|s| s.p_pm_value).collect();
    let result = TrajectoryResult::from_visits(
        graph,
        graph_index,
        episode,
        visited,
        rollback_steps > 0,
        rollback_steps,
        decision_steps,
        progress_estimates,
    );
    Rollout { buffer, result, tape, binding }
}
