//! Reverse-mode automatic differentiation over dense tensors.
//!
//! Forward kernels record onto a [`Tape`]; [`Tape::backward`] walks it once
//! in reverse. One tape per episode; tapes share no mutable state, so
//! episodes may run on separate threads with gradient accumulation as an
//! explicit reduction ([`TapeBinding::accumulate`]).

mod data;
mod gradcheck;
mod lstm;
mod params;
mod tape;

pub use data::Data;
pub use gradcheck::{grad_check, GradCheckReport, ParamCheck};
pub use lstm::lstm_cell;
pub use params::{Param, ParameterSet, TapeBinding};
pub use tape::{BnState, Grads, Tape, Var};
