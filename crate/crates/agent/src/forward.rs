//! Forward-pass building blocks. Every function records onto the caller's
//! tape through a [`TapeBinding`], so one episode is one tape.

use navsim::PanoramaObservation;
use rand::Rng;
use tapegrad::{lstm_cell, Data, Tape, TapeBinding, Var};

use crate::config::ModelConfig;
use crate::model::BnStats;

/// Embeds the instruction tokens (with dropout while training) and runs
/// them through the encoder LSTM, returning one context vector per token.
pub fn encode_instruction<R: Rng + ?Sized>(
    tape: &mut Tape,
    b: &TapeBinding,
    cfg: &ModelConfig,
    tokens: &[usize],
    training: bool,
    rng: &mut R,
) -> Vec<Var> {
    assert!(!tokens.is_empty(), "cannot encode an empty instruction");
    let table = b.var("embed");
    let embedded = tape.embedding(table, tokens);
    let embedded = tape.dropout(embedded, cfg.dropout, training, rng);
    let w = b.var("enc.w");
    let bias = b.var("enc.b");
    let mut h = tape.leaf(Data::zeros(&[cfg.hidden]));
    let mut c = tape.leaf(Data::zeros(&[cfg.hidden]));
    let mut ctx = Vec::with_capacity(tokens.len());
    for l in 0..tokens.len() {
        let x = tape.row(embedded, l);
        let (h2, c2) = lstm_cell(tape, x, h, c, w, bias);
        ctx.push(h2);
        h = h2;
        c = c2;
    }
    ctx
}

/// Projects every candidate feature (stop slot included) through
/// standardize -> linear -> standardize -> dropout -> relu, returning one
/// projected vector per candidate slot.
pub fn project_candidates<R: Rng + ?Sized>(
    tape: &mut Tape,
    b: &TapeBinding,
    cfg: &ModelConfig,
    bn: &mut BnStats,
    obs: &PanoramaObservation,
    training: bool,
    rng: &mut R,
) -> Vec<Var> {
    let rows: Vec<Var> = obs
        .candidates
        .iter()
        .map(|c| {
            assert_eq!(c.feature.len(), cfg.feature_dim, "candidate feature dim mismatch");
            tape.leaf(Data::vector(c.feature.clone()))
        })
        .collect();
    let x = tape.stack(&rows);

    let mut st_in = bn.input.to_state();
    let gamma_in = b.var("g.bn_in.gamma");
    let beta_in = b.var("g.bn_in.beta");
    let x = tape.batch_norm(x, gamma_in, beta_in, &mut st_in, training);
    bn.input.store(&st_in);

    let w = b.var("g.fc.w");
    let bias = b.var("g.fc.b");
    let mut projected = Vec::with_capacity(obs.num_candidates());
    for k in 0..obs.num_candidates() {
        let r = tape.row(x, k);
        let y = tape.matvec(w, r);
        let y = tape.add(y, bias);
        projected.push(y);
    }
    let y = tape.stack(&projected);

    let mut st_out = bn.output.to_state();
    let gamma_out = b.var("g.bn_out.gamma");
    let beta_out = b.var("g.bn_out.beta");
    let y = tape.batch_norm(y, gamma_out, beta_out, &mut st_out, training);
    bn.output.store(&st_out);

    let y = tape.dropout(y, cfg.dropout, training, rng);
    let y = tape.relu(y);
    (0..obs.num_candidates()).map(|k| tape.row(y, k)).collect()
}

/// Sum of `rows` weighted by the entries of the distribution `weights`.
fn weighted_sum(tape: &mut Tape, weights: Var, rows: &[Var]) -> Var {
    let mut acc: Option<Var> = None;
    for (i, r) in rows.iter().enumerate() {
        let w = tape.select(weights, i);
        let term = tape.mul_scalar(*r, w);
        acc = Some(match acc {
            None => term,
            Some(a) => tape.add(a, term),
        });
    }
    acc.expect("weighted_sum over zero rows")
}

/// Soft attention over the instruction context and the projected candidate
/// features, queried by the previous decoder hidden state. Returns the
/// grounded text vector, grounded visual vector, and textual weights.
pub fn co_ground(
    tape: &mut Tape,
    b: &TapeBinding,
    h_prev: Var,
    ctx: &[Var],
    g_rows: &[Var],
) -> (Var, Var, Var) {
    assert!(!ctx.is_empty() && !g_rows.is_empty(), "co_ground needs context and candidates");
    let qx = tape.matvec(b.var("w_x"), h_prev);
    let mut scores = Vec::with_capacity(ctx.len());
    for x in ctx {
        scores.push(tape.inner(qx, *x));
    }
    let z = tape.concat(&scores);
    let alpha = tape.softmax(z);
    let x_hat = weighted_sum(tape, alpha, ctx);

    let qv = tape.matvec(b.var("w_v"), h_prev);
    let mut vscores = Vec::with_capacity(g_rows.len());
    for g in g_rows {
        vscores.push(tape.inner(qv, *g));
    }
    let zv = tape.concat(&vscores);
    let beta = tape.softmax(zv);
    let v_hat = weighted_sum(tape, beta, g_rows);

    (x_hat, v_hat, alpha)
}

/// One decoder LSTM step on the concatenated grounded inputs and the
/// previous action embedding.
pub fn decode_step(
    tape: &mut Tape,
    b: &TapeBinding,
    x_hat: Var,
    v_hat: Var,
    a_prev: Var,
    h_prev: Var,
    c_prev: Var,
) -> (Var, Var) {
    let x = tape.concat(&[x_hat, v_hat, a_prev]);
    let w = b.var("dec.w");
    let bias = b.var("dec.b");
    lstm_cell(tape, x, h_prev, c_prev, w, bias)
}

/// Scalar estimate in (-1, 1) of how much of the instruction is complete:
/// gated cell state combined with the textual attention weights, padded to
/// a fixed width.
pub fn progress_monitor(
    tape: &mut Tape,
    b: &TapeBinding,
    cfg: &ModelConfig,
    h_prev: Var,
    v_hat: Var,
    c_t: Var,
    alpha: Var,
) -> Var {
    let hv = tape.concat(&[h_prev, v_hat]);
    let lin = tape.matvec(b.var("w_h"), hv);
    let gate = tape.sigmoid(lin);
    let tc = tape.tanh(c_t);
    let h_pm = tape.mul(gate, tc);

    let l = tape.value(alpha).len();
    let alpha_fixed = if l == cfg.l_max {
        alpha
    } else if l > cfg.l_max {
        tape.slice(alpha, 0, cfg.l_max)
    } else {
        let pad = tape.leaf(Data::zeros(&[cfg.l_max - l]));
        tape.concat(&[alpha, pad])
    };
    let joined = tape.concat(&[alpha_fixed, h_pm]);
    let out = tape.matvec(b.var("w_pm"), joined);
    let squashed = tape.tanh(out);
    tape.select(squashed, 0)
}

/// Blends the forward embedding with the rollback candidate's projection,
/// gated by the change in (detached) progress. `rollback` is the projected
/// feature of the direction back to the previous viewpoint; `None` forces
/// pure forward (first step, or the gate disabled). Returns the blended
/// embedding and the gate weights.
pub fn regret_gate(
    tape: &mut Tape,
    b: &TapeBinding,
    m_f: Var,
    rollback: Option<Var>,
    progress_delta: f64,
) -> (Var, [f64; 2]) {
    let Some(m_r) = rollback else {
        return (m_f, [1.0, 0.0]);
    };
    // the delta enters as a plain number: gradients never reach the
    // progress monitor through this path
    let dp = tape.leaf(Data::vector(vec![progress_delta]));
    let lin = tape.matvec(b.var("w_r.w"), dp);
    let logits = tape.add(lin, b.var("w_r.b"));
    let gate = tape.softmax(logits);
    let g0 = tape.select(gate, 0);
    let g1 = tape.select(gate, 1);
    let fwd = tape.mul_scalar(m_f, g0);
    let back = tape.mul_scalar(m_r, g1);
    let blended = tape.add(fwd, back);
    let gv = tape.value(gate);
    let weights = [gv.values[0], gv.values[1]];
    (blended, weights)
}

/// Scores every candidate slot against the (optionally fused-projected)
/// action embedding and returns (probabilities, raw logits). When marker
/// deltas are supplied, each is tiled `marker_tile` times and appended to
/// the candidate's projected feature before scoring.
pub fn action_select(
    tape: &mut Tape,
    b: &TapeBinding,
    cfg: &ModelConfig,
    m: Var,
    g_rows: &[Var],
    marker_deltas: Option<&[f64]>,
    mask: &[bool],
) -> (Var, Var) {
    assert_eq!(mask.len(), g_rows.len(), "mask length mismatch");
    assert_eq!(cfg.marker, marker_deltas.is_some(), "marker deltas iff marker enabled");
    let query = if cfg.uses_fused_projection() {
        tape.matvec(b.var("w_fr"), m)
    } else {
        m
    };
    let mut scores = Vec::with_capacity(g_rows.len());
    for (k, g) in g_rows.iter().enumerate() {
        let v = match marker_deltas {
            Some(deltas) => {
                let tile = tape.leaf(Data::vector(vec![deltas[k]; cfg.marker_tile]));
                tape.concat(&[*g, tile])
            }
            None => *g,
        };
        scores.push(tape.inner(query, v));
    }
    let logits = tape.concat(&scores);
    let probs = tape.softmax_masked(logits, mask);
    (probs, logits)
}
