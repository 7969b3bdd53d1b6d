//! Dataset assembly: training graphs with train + held-out episodes, and
//! held-out graphs for unseen evaluation.

use serde::{Deserialize, Serialize};

use crate::episode::{make_episode, Episode, Split};
use crate::error::NavError;
use crate::graph::{generate_graph, GraphParams, LandmarkLatents, NavGraph};
use crate::rng::stream_seed;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConfig {
    pub graph: GraphParams,
    pub train_graphs: usize,
    pub unseen_graphs: usize,
    pub train_episodes_per_graph: usize,
    pub seen_eval_episodes_per_graph: usize,
    pub unseen_eval_episodes_per_graph: usize,
    /// instruction noise for training episodes (0 = clean templates)
    pub train_noise: f64,
    /// instruction noise for evaluation episodes
    pub eval_noise: f64,
    pub min_path_edges: usize,
    pub max_path_edges: usize,
    /// success radius in meters
    pub success_radius: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            graph: GraphParams::default(),
            train_graphs: 40,
            unseen_graphs: 8,
            train_episodes_per_graph: 20,
            seen_eval_episodes_per_graph: 2,
            unseen_eval_episodes_per_graph: 25,
            train_noise: 0.0,
            eval_noise: 0.0,
            min_path_edges: 2,
            max_path_edges: 5,
            success_radius: 3.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dataset {
    pub config: EnvConfig,
    pub seed: u64,
    /// training graphs first, then unseen graphs
    pub graphs: Vec<NavGraph>,
    pub train: Vec<Episode>,
    pub seen_eval: Vec<Episode>,
    pub unseen_eval: Vec<Episode>,
}

impl Dataset {
    pub fn split(&self, split: Split) -> &[Episode] {
        match split {
            Split::Train => &self.train,
            Split::SeenEval => &self.seen_eval,
            Split::UnseenEval => &self.unseen_eval,
        }
    }
}

/// Deterministic dataset generation from a master seed. Unseen-eval
/// episodes reference graphs disjoint from the training graphs.
pub fn generate_dataset(seed: u64, config: &EnvConfig) -> Result<Dataset, NavError> {
    config.graph.validate()?;
    if config.train_graphs == 0 || config.unseen_graphs == 0 {
        return Err(NavError::BadParams("need at least one graph per split".into()));
    }
    let latents = LandmarkLatents::generate(seed, config.graph.d_app);
    let total = config.train_graphs + config.unseen_graphs;
    let mut graphs = Vec::with_capacity(total);
    for g in 0..total {
        graphs.push(generate_graph(
            stream_seed(seed, &format!("graph/{g}")),
            &config.graph,
            &latents,
        )?);
    }

    let edge_range = (config.min_path_edges, config.max_path_edges);
    let mut train = Vec::new();
    let mut seen_eval = Vec::new();
    for g in 0..config.train_graphs {
        for e in 0..config.train_episodes_per_graph {
            train.push(make_episode(
                &graphs[g],
                g,
                stream_seed(seed, &format!("ep/train/{g}/{e}")),
                config.train_noise,
                edge_range,
                Split::Train,
            ));
        }
        for e in 0..config.seen_eval_episodes_per_graph {
            seen_eval.push(make_episode(
                &graphs[g],
                g,
                stream_seed(seed, &format!("ep/seen/{g}/{e}")),
                config.eval_noise,
                edge_range,
                Split::SeenEval,
            ));
        }
    }
    let mut unseen_eval = Vec::new();
    for u in 0..config.unseen_graphs {
        let g = config.train_graphs + u;
        for e in 0..config.unseen_eval_episodes_per_graph {
            unseen_eval.push(make_episode(
                &graphs[g],
                g,
                stream_seed(seed, &format!("ep/unseen/{u}/{e}")),
                config.eval_noise,
                edge_range,
                Split::UnseenEval,
            ));
        }
    }

    Ok(Dataset { config: config.clone(), seed, graphs, train, seen_eval, unseen_eval })
}
