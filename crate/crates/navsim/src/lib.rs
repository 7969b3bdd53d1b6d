//! Procedural generator and simulator of navigation episodes: graphs with
//! landmark-conditioned appearance features, templated instructions,
//! shortest-path oracles, and per-step supervision.

mod dataset;
mod episode;
mod error;
mod graph;
mod observe;
pub mod rng;
pub mod vocab;

pub use dataset::{generate_dataset, Dataset, EnvConfig};
pub use episode::{
    apply_noise, ground_truth_action, instruction_for_path, make_episode, progress_target,
    renoise_episode, Episode, Split,
};
pub use error::NavError;
pub use graph::{generate_graph, GraphParams, LandmarkLatents, NavGraph, Viewpoint};
pub use observe::{observe, Candidate, PanoramaObservation};
