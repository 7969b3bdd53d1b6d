//! Trajectory scoring for navigation episodes: navigation error, success
//! rate, oracle variants, path-length-weighted success, and rollback usage.

use navsim::{Episode, NavGraph};
use serde::{Deserialize, Serialize};

/// Everything the metrics need from one finished rollout.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryResult {
    /// index of the episode's graph in the dataset
    pub graph: usize,
    pub episode: Episode,
    /// viewpoints in visit order, starting at the episode start
    pub visited: Vec<usize>,
    /// meters traversed (stop contributes nothing)
    pub trajectory_length: f64,
    pub contains_rollback: bool,
    /// number of rollback actions taken
    pub rollback_steps: usize,
    /// total movement decisions (denominator for per-step rollback rate)
    pub decision_steps: usize,
    pub progress_estimates: Vec<f64>,
}

impl TrajectoryResult {
    /// Builds a result from a visited sequence, deriving the length from
    /// traversed edges. Panics if the sequence doesn't start at the start.
    pub fn from_visits(
        graph: &NavGraph,
        graph_index: usize,
        episode: &Episode,
        visited: Vec<usize>,
        contains_rollback: bool,
        rollback_steps: usize,
        decision_steps: usize,
        progress_estimates: Vec<f64>,
    ) -> Self {
        assert_eq!(visited.first(), Some(&episode.start), "trajectory must start at the start");
        let trajectory_length = visited
            .windows(2)
            .map(|w| graph.edge_length(w[0], w[1]))
            .sum();
        TrajectoryResult {
            graph: graph_index,
            episode: episode.clone(),
            visited,
            trajectory_length,
            contains_rollback,
            rollback_steps,
            decision_steps,
            progress_estimates,
        }
    }

    pub fn final_viewpoint(&self) -> usize {
        *self.visited.last().expect("trajectory is never empty")
    }
}

/// Shortest-path distance from the final position to the goal, in meters.
pub fn navigation_error(graph: &NavGraph, result: &TrajectoryResult) -> f64 {
    graph.shortest_distance(result.final_viewpoint(), result.episode.goal)
}

/// 1 iff the final position is strictly closer than `threshold` meters.
pub fn success(graph: &NavGraph, result: &TrajectoryResult, threshold: f64) -> f64 {
    assert!(threshold > 0.0, "success threshold must be positive");
    if navigation_error(graph, result) < threshold {
        1.0
    } else {
        0.0
    }
}

/// Navigation error if the agent had stopped at its closest visited
/// viewpoint instead of where it actually stopped.
pub fn oracle_navigation_error(graph: &NavGraph, result: &TrajectoryResult) -> f64 {
    result
        .visited
        .iter()
        .map(|&v| graph.shortest_distance(v, result.episode.goal))
        .fold(f64::INFINITY, f64::min)
}

pub fn oracle_success(graph: &NavGraph, result: &TrajectoryResult, threshold: f64) -> f64 {
    assert!(threshold > 0.0, "success threshold must be positive");
    if oracle_navigation_error(graph, result) < threshold {
        1.0
    } else {
        0.0
    }
}

/// Success weighted by normalized inverse path length:
/// (1/N) Σ S_i · l_i / max(p_i, l_i).
pub fn spl(graphs: &[NavGraph], results: &[TrajectoryResult], threshold: f64) -> f64 {
    assert!(!results.is_empty(), "spl needs at least one result");
    let total: f64 = results
        .iter()
        .map(|r| {
            let g = &graphs[r.graph];
            let l = g.shortest_distance(r.episode.start, r.episode.goal);
            assert!(l > 0.0, "episode shortest distance must be positive");
            success(g, r, threshold) * l / r.trajectory_length.max(l)
        })
        .sum();
    total / results.len() as f64
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RollbackStats {
    /// fraction of unsuccessful episodes containing at least one rollback
    pub failure_rollback_fraction: f64,
    /// fraction of successful episodes containing at least one rollback
    pub success_rollback_fraction: f64,
    /// rollback actions per movement decision, over all episodes
    pub per_step_rate: f64,
}

pub fn rollback_stats(
    graphs: &[NavGraph],
    results: &[TrajectoryResult],
    threshold: f64,
) -> RollbackStats {
    let mut failures = 0usize;
    let mut failures_with_rb = 0usize;
    let mut successes = 0usize;
    let mut successes_with_rb = 0usize;
    let mut rb_steps = 0usize;
    let mut steps = 0usize;
    for r in results {
        let ok = success(&graphs[r.graph], r, threshold) > 0.0;
        if ok {
            successes += 1;
            successes_with_rb += r.contains_rollback as usize;
        } else {
            failures += 1;
            failures_with_rb += r.contains_rollback as usize;
        }
        rb_steps += r.rollback_steps;
        steps += r.decision_steps;
    }
    let frac = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    RollbackStats {
        failure_rollback_fraction: frac(failures_with_rb, failures),
        success_rollback_fraction: frac(successes_with_rb, successes),
        per_step_rate: frac(rb_steps, steps),
    }
}

/// Aggregate metric block for one evaluation split.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricSummary {
    pub episodes: usize,
    pub ne: f64,
    pub sr: f64,
    pub osr: f64,
    pub spl: f64,
    pub one: f64,
    pub rollback: RollbackStats,
}

pub fn summarize(
    graphs: &[NavGraph],
    results: &[TrajectoryResult],
    threshold: f64,
) -> MetricSummary {
    assert!(!results.is_empty(), "cannot summarize an empty batch");
    let n = results.len() as f64;
    let mean = |f: &dyn Fn(&TrajectoryResult) -> f64| -> f64 {
        results.iter().map(|r| f(r)).sum::<f64>() / n
    };
    MetricSummary {
        episodes: results.len(),
        ne: mean(&|r| navigation_error(&graphs[r.graph], r)),
        sr: mean(&|r| success(&graphs[r.graph], r, threshold)),
        osr: mean(&|r| oracle_success(&graphs[r.graph], r, threshold)),
        spl: spl(graphs, results, threshold),
        one: mean(&|r| oracle_navigation_error(&graphs[r.graph], r)),
        rollback: rollback_stats(graphs, results, threshold),
    }
}
