//! The composite training objective: action cross-entropy, progress MSE,
//! and an exploration entropy bonus, balanced by lambda and beta.

use tapegrad::{Tape, Var};

use crate::rollout::RolloutBuffer;

/// L = lambda * sum_t CE(p_t, gt_t)
///   + (1 - lambda) * sum_t (y_t - p^pm_t)^2
///   - beta * sum_t H(p_t)
///
/// Steps whose ground-truth slot is masked (probability exactly zero)
/// contribute no cross-entropy. Entropy sums -p ln p over the valid slots
/// only; masked slots carry exactly zero probability and contribute
/// nothing.
pub fn loss(tape: &mut Tape, buffer: &RolloutBuffer, lambda: f64, beta: f64) -> Var {
    assert!(!buffer.steps.is_empty(), "loss over an empty rollout");
    assert!((0.0..=1.0).contains(&lambda), "lambda {lambda} outside [0, 1]");
    assert!(beta >= 0.0, "beta {beta} must be non-negative");

    let mut total: Option<Var> = None;
    let mut push = |tape: &mut Tape, term: Var, weight: f64| {
        let scaled = tape.scale(term, weight);
        total = Some(match total {
            None => scaled,
            Some(t) => tape.add(t, scaled),
        });
    };

    for s in &buffer.steps {
        if s.probs[s.gt_slot] > 0.0 {
            let p_gt = tape.select(s.probs_var, s.gt_slot);
            let lp = tape.ln(p_gt);
            push(tape, lp, -lambda);
        }
        let target = tape.scalar(s.y_pm);
        let diff = tape.sub(s.p_pm, target);
        let sq = tape.mul(diff, diff);
        push(tape, sq, 1.0 - lambda);

        if beta > 0.0 {
            // -H = sum p ln p; masked entries are exactly 0 and the ln
            // floor keeps 0 * ln(0) at zero
            let lnp = tape.ln(s.probs_var);
            let plogp = tape.mul(s.probs_var, lnp);
            let neg_h = tape.sum(plogp);
            push(tape, neg_h, beta);
        }
    }
    total.expect("at least one loss term")
}
