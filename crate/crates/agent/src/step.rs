//! One full decision step: grounding, decoding, progress estimation, the
//! forward/rollback gate, visit markers, masking, and action choice.

use std::collections::BTreeMap;

use navsim::PanoramaObservation;
use rand::Rng;
use tapegrad::{Data, Tape, TapeBinding, Var};

use crate::config::ModelConfig;
use crate::forward::{
    action_select, co_ground, decode_step, progress_monitor, project_candidates, regret_gate,
};
use crate::model::BnStats;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// categorical sampling from the action distribution
    TrainSample,
    /// argmax
    Greedy,
    /// externally imposed slot (teacher forcing and tests)
    Forced(usize),
}

#[derive(Debug, Clone)]
pub struct AgentState {
    pub h: Var,
    pub c: Var,
    /// projected feature of the last chosen direction; zero before the
    /// first step and after stopping
    pub a_prev: Var,
    pub viewpoint: usize,
    pub prev_viewpoint: Option<usize>,
    /// latest progress estimate per visited viewpoint
    pub marker: BTreeMap<usize, f64>,
    pub last_progress: f64,
    pub t: usize,
    /// (anchor viewpoint, blocked target): while at the anchor, the move to
    /// the blocked target is masked. Set by a rollback, lifted one step
    /// later (or on leaving the anchor when `pair_block` is on).
    pub osc_block: Option<(usize, usize)>,
}

/// Fresh state at the episode start; h, c, and the previous-action
/// embedding begin as zero vectors on the episode's tape.
pub fn init_state(tape: &mut Tape, cfg: &ModelConfig, start: usize) -> AgentState {
    AgentState {
        h: tape.leaf(Data::zeros(&[cfg.hidden])),
        c: tape.leaf(Data::zeros(&[cfg.hidden])),
        a_prev: tape.leaf(Data::zeros(&[cfg.proj])),
        viewpoint: start,
        prev_viewpoint: None,
        marker: BTreeMap::new(),
        last_progress: 0.0,
        t: 0,
        osc_block: None,
    }
}

/// Everything recorded about one decision, including the tape handles the
/// loss needs and the raw values the evaluation layer inspects.
#[derive(Debug, Clone)]
pub struct StepDecision {
    pub probs: Vec<f64>,
    pub probs_var: Var,
    pub chosen: usize,
    /// viewpoint moved to; None for stop
    pub target: Option<usize>,
    /// chosen action returns to the previous viewpoint
    pub is_rollback: bool,
    /// step limit reached, stop imposed regardless of the distribution
    pub forced_stop: bool,
    pub p_pm: Var,
    pub p_pm_value: f64,
    /// textual attention weights
    pub alpha: Vec<f64>,
    /// forward/rollback gate weights
    pub alpha_fr: [f64; 2],
    pub mask: Vec<bool>,
    // raw values for external re-scoring and diagnostics
    pub h_value: Vec<f64>,
    pub x_hat_value: Vec<f64>,
    pub g_values: Vec<Vec<f64>>,
    pub logits: Vec<f64>,
}

/// Overwrite (or create) the marker for a viewpoint.
pub fn marker_update(marker: &mut BTreeMap<usize, f64>, viewpoint: usize, progress: f64) {
    marker.insert(viewpoint, progress);
}

/// Marker value for one candidate slot: 0 for stop, the stored estimate for
/// a visited target, 1 for an unvisited target.
pub fn marker_lookup(marker: &BTreeMap<usize, f64>, target: Option<usize>) -> f64 {
    match target {
        None => 0.0,
        Some(v) => marker.get(&v).copied().unwrap_or(1.0),
    }
}

fn categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let draw: f64 = rng.random_range(0.0..1.0);
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if draw < acc {
            return i;
        }
    }
    probs.len() - 1
}

fn argmax(probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, p) in probs.iter().enumerate() {
        if *p > probs[best] {
            best = i;
        }
    }
    best
}

#[allow(clippy::too_many_arguments)]
pub fn step<R: Rng + ?Sized>(
    tape: &mut Tape,
    b: &TapeBinding,
    cfg: &ModelConfig,
    bn: &mut BnStats,
    ctx: &[Var],
    obs: &PanoramaObservation,
    state: &mut AgentState,
    mode: Mode,
    training: bool,
    rng: &mut R,
) -> StepDecision {
    assert_eq!(obs.viewpoint, state.viewpoint, "observation is for a different viewpoint");
    assert_eq!(state.prev_viewpoint.is_none(), state.t == 0);

    let g_rows = project_candidates(tape, b, cfg, bn, obs, training, rng);
    let (x_hat, v_hat, alpha) = co_ground(tape, b, state.h, ctx, &g_rows);
    let (h_t, c_t) = decode_step(tape, b, x_hat, v_hat, state.a_prev, state.h, state.c);
    let p_pm = progress_monitor(tape, b, cfg, state.h, v_hat, c_t, alpha);
    let p_val = tape.value(p_pm).item();

    // forward embedding, optionally blended with the rollback direction
    let hx = tape.concat(&[h_t, x_hat]);
    let m_f = tape.matvec(b.var("w_a"), hx);
    let rollback_slot = state.prev_viewpoint.and_then(|pv| obs.slot_of(pv));
    let (m, alpha_fr) = if cfg.regret {
        let rollback = rollback_slot.map(|slot| g_rows[slot]);
        regret_gate(tape, b, m_f, rollback, p_val - state.last_progress)
    } else {
        (m_f, [1.0, 0.0])
    };

    // markers: stamp the current viewpoint first, then difference against
    // every candidate (values enter the tape as constants)
    let marker_deltas: Option<Vec<f64>> = if cfg.marker {
        marker_update(&mut state.marker, state.viewpoint, p_val);
        Some(
            obs.candidates
                .iter()
                .map(|c| p_val - marker_lookup(&state.marker, c.target))
                .collect(),
        )
    } else {
        None
    };

    let mut mask = vec![true; obs.num_candidates()];
    if let Some((anchor, blocked)) = state.osc_block {
        if anchor == state.viewpoint {
            for (i, c) in obs.candidates.iter().enumerate() {
                if c.target == Some(blocked) {
                    mask[i] = false;
                }
            }
        }
    }
    if cfg.rollback_block && obs.num_candidates() > 2 {
        if let Some(pv) = state.prev_viewpoint {
            for (i, c) in obs.candidates.iter().enumerate() {
                if c.target == Some(pv) {
                    mask[i] = false;
                }
            }
        }
    }

    let (probs_var, logits_var) =
        action_select(tape, b, cfg, m, &g_rows, marker_deltas.as_deref(), &mask);
    let probs = tape.value(probs_var).values.clone();
    let logits = tape.value(logits_var).values.clone();

    let forced_stop = state.t >= cfg.max_steps;
    let chosen = if forced_stop {
        0
    } else {
        match mode {
            Mode::Greedy => argmax(&probs),
            Mode::TrainSample => categorical(&probs, rng),
            Mode::Forced(slot) => {
                assert!(slot < obs.num_candidates(), "forced slot out of range");
                slot
            }
        }
    };
    let target = obs.candidates[chosen].target;
    let is_rollback = target.is_some() && target == state.prev_viewpoint;

    let decision = StepDecision {
        probs,
        probs_var,
        chosen,
        target,
        is_rollback,
        forced_stop,
        p_pm,
        p_pm_value: p_val,
        alpha: tape.value(alpha).values.clone(),
        alpha_fr,
        mask,
        h_value: tape.value(h_t).values.clone(),
        x_hat_value: tape.value(x_hat).values.clone(),
        g_values: g_rows.iter().map(|g| tape.value(*g).values.clone()).collect(),
        logits,
    };

    // the block only exists alongside the rollback mechanism itself; the
    // plain scorer has no gate and gets no mask
    state.osc_block = if cfg.regret && is_rollback {
        Some((target.unwrap(), state.viewpoint))
    } else if cfg.pair_block {
        state.osc_block.filter(|(anchor, _)| target == Some(*anchor))
    } else {
        None
    };
    state.h = h_t;
    state.c = c_t;
    state.last_progress = p_val;
    if let Some(tgt) = target {
        state.a_prev = g_rows[chosen];
        state.prev_viewpoint = Some(state.viewpoint);
        state.viewpoint = tgt;
        state.t += 1;
    }

    decision
}
