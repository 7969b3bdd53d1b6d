//! Episodes: templated instructions over ground-truth shortest paths, plus
//! the per-step supervision signals (progress target, next-hop action).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::graph::NavGraph;
use crate::rng::stream;
use crate::vocab;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Split {
    Train,
    SeenEval,
    UnseenEval,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Episode {
    /// index into the dataset's graph list
    pub graph: usize,
    pub instruction: Vec<usize>,
    pub start: usize,
    pub goal: usize,
    /// shortest path from start to goal
    pub path: Vec<usize>,
    pub split: Split,
}

/// Relative turn between two consecutive headings, bucketed into the four
/// direction words.
fn turn_word(prev_heading: f64, next_heading: f64) -> usize {
    use std::f64::consts::PI;
    let mut delta = next_heading - prev_heading;
    while delta > PI {
        delta -= 2.0 * PI;
    }
    while delta <= -PI {
        delta += 2.0 * PI;
    }
    let word = if delta.abs() <= PI / 8.0 {
        "straight"
    } else if delta.abs() >= 7.0 * PI / 8.0 {
        "around"
    } else if delta > 0.0 {
        "left"
    } else {
        "right"
    };
    vocab::token_id(word)
}

/// Clean templated instruction for a path: one movement clause per edge
/// ("go to <landmark>" / "turn <dir> to <landmark>") and a stop clause.
pub fn instruction_for_path(graph: &NavGraph, path: &[usize]) -> Vec<usize> {
    assert!(path.len() >= 2, "instruction needs a path with at least one edge");
    let mut tokens = Vec::new();
    let mut prev_heading = None;
    for w in path.windows(2) {
        let (u, v) = (w[0], w[1]);
        let (heading, _) = graph.heading_elevation(u, v);
        match prev_heading {
            None => {
                tokens.push(vocab::token_id("go"));
                tokens.push(vocab::token_id("to"));
            }
            Some(prev) => {
                tokens.push(vocab::token_id("turn"));
                tokens.push(turn_word(prev, heading));
                tokens.push(vocab::token_id("to"));
            }
        }
        tokens.push(vocab::landmark_token(graph.viewpoints[v].landmark));
        prev_heading = Some(heading);
    }
    tokens.push(vocab::token_id("stop"));
    tokens.push(vocab::token_id("at"));
    tokens.push(vocab::landmark_token(
        graph.viewpoints[*path.last().unwrap()].landmark,
    ));
    tokens
}

/// Token dropout and synonym substitution at strength `noise` in [0, 1].
/// Zero noise is the identity; the result always keeps at least one token.
pub fn apply_noise<R: Rng + ?Sized>(tokens: &[usize], noise: f64, rng: &mut R) -> Vec<usize> {
    if noise <= 0.0 {
        return tokens.to_vec();
    }
    let p_drop = 0.12 * noise;
    let p_syn = 0.3 * noise;
    let mut out = Vec::with_capacity(tokens.len());
    for &t in tokens {
        if rng.random_range(0.0..1.0) < p_drop {
            continue;
        }
        let syns = vocab::synonyms_of(t);
        if !syns.is_empty() && rng.random_range(0.0..1.0) < p_syn {
            out.push(syns[rng.random_range(0..syns.len())]);
        } else {
            out.push(t);
        }
    }
    if out.is_empty() {
        out.push(tokens[0]);
    }
    out
}

/// Samples an episode whose ground-truth path has a hop count within
/// `edge_range` when the graph admits one (shorter paths otherwise).
pub fn make_episode(
    graph: &NavGraph,
    graph_index: usize,
    seed: u64,
    noise: f64,
    edge_range: (usize, usize),
    split: Split,
) -> Episode {
    let mut rng = stream(seed, "episode");
    let n = graph.len();
    let (min_e, max_e) = edge_range;
    // widen the hop window until some (start, goal) pair qualifies
    for slack in 0..n {
        for _ in 0..64 {
            let start = rng.random_range(0..n);
            let goal = rng.random_range(0..n);
            if start == goal {
                continue;
            }
            let (path, _) = graph
                .shortest_path(start, goal)
                .expect("generator guarantees connectivity");
            let hops = path.len() - 1;
            if hops + slack >= min_e && hops <= max_e + slack {
                let clean = instruction_for_path(graph, &path);
                let instruction = apply_noise(&clean, noise, &mut rng);
                return Episode { graph: graph_index, instruction, start, goal, path, split };
            }
        }
    }
    unreachable!("connected graph with >= 2 nodes always admits an episode");
}

/// Re-derives the instruction of an existing episode at a different noise
/// level (used for clean-train / noisy-eval transfer).
pub fn renoise_episode(graph: &NavGraph, episode: &Episode, seed: u64, noise: f64) -> Episode {
    let mut rng = stream(seed, "renoise");
    let clean = instruction_for_path(graph, &episode.path);
    Episode { instruction: apply_noise(&clean, noise, &mut rng), ..episode.clone() }
}

/// Normalized progress toward the goal: 1 at the goal, 0 at the start,
/// negative when farther from the goal than the start was.
pub fn progress_target(graph: &NavGraph, episode: &Episode, viewpoint: usize) -> f64 {
    let d0 = graph.shortest_distance(episode.start, episode.goal);
    assert!(d0 > 0.0, "episode start and goal coincide");
    let dt = graph.shortest_distance(viewpoint, episode.goal);
    (d0 - dt) / d0
}

/// Supervision for action selection, recomputed from the agent's actual
/// viewpoint: candidate slot 0 (stop) at the goal, otherwise the slot of
/// the neighbor that starts the current shortest path to the goal.
pub fn ground_truth_action(graph: &NavGraph, episode: &Episode, viewpoint: usize) -> usize {
    if viewpoint == episode.goal {
        return 0;
    }
    let (path, _) = graph
        .shortest_path(viewpoint, episode.goal)
        .expect("generator guarantees connectivity");
    let next = path[1];
    let slot = graph.neighbors[viewpoint]
        .iter()
        .position(|&v| v == next)
        .expect("next hop must be a neighbor");
    1 + slot
}
