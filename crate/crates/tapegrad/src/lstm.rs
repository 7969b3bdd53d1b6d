//! Gated LSTM cell with concatenated gate weights.

use crate::tape::{Tape, Var};

/// One LSTM step. `w` holds the four gate weight blocks stacked as
/// [4H, in+H] in gate order (input, forget, candidate, output); `b` is the
/// matching [4H] bias. Returns (h, c).
pub fn lstm_cell(tape: &mut Tape, x: Var, h_prev: Var, c_prev: Var, w: Var, b: Var) -> (Var, Var) {
    let hidden = tape.value(h_prev).len();
    let in_dim = tape.value(x).len();
    let wd = tape.value(w);
    assert!(
        wd.shape == [4 * hidden, in_dim + hidden],
        "lstm_cell weight shape {:?} vs expected [{}, {}]",
        wd.shape,
        4 * hidden,
        in_dim + hidden
    );
    assert_eq!(
        tape.value(c_prev).len(),
        hidden,
        "lstm_cell cell-state length mismatch"
    );

    let xh = tape.concat(&[x, h_prev]);
    let lin = tape.matvec(w, xh);
    let gates = tape.add(lin, b);

    let i_pre = tape.slice(gates, 0, hidden);
    let f_pre = tape.slice(gates, hidden, hidden);
    let g_pre = tape.slice(gates, 2 * hidden, hidden);
    let o_pre = tape.slice(gates, 3 * hidden, hidden);

    let i = tape.sigmoid(i_pre);
    let f = tape.sigmoid(f_pre);
    let g = tape.tanh(g_pre);
    let o = tape.sigmoid(o_pre);

    let fc = tape.mul(f, c_prev);
    let ig = tape.mul(i, g);
    let c = tape.add(fc, ig);
    let c_act = tape.tanh(c);
    let h = tape.mul(o, c_act);
    (h, c)
}
