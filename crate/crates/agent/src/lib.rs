//! The navigation policy network: instruction encoding, visual-textual
//! co-grounding, a progress-estimating head, a learned forward/rollback
//! gate, visit-memory markers, and masked action selection.

mod config;
mod forward;
mod model;
mod step;

pub use config::ModelConfig;
pub use forward::{
    action_select, co_ground, decode_step, encode_instruction, progress_monitor,
    project_candidates, regret_gate,
};
pub use model::{BnSnapshot, BnStats, Model};
pub use step::{init_state, marker_lookup, marker_update, step, AgentState, Mode, StepDecision};
