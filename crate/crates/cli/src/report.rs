//! Report emission: line-delimited records for machines, aligned tables for
//! humans. Everything is a pure function of the evaluation results, so the
//! same inputs always produce byte-identical output.

use navmetrics::{
    navigation_error, oracle_navigation_error, oracle_success, success, MetricSummary,
    TrajectoryResult,
};
use navsim::NavGraph;
use serde::{Deserialize, Serialize};

/// One evaluated episode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub split: String,
    pub graph: usize,
    pub start: usize,
    pub goal: usize,
    pub ne: f64,
    pub success: bool,
    pub oracle_ne: f64,
    pub oracle_success: bool,
    pub trajectory_length: f64,
    pub shortest_length: f64,
    pub rollback_steps: usize,
    pub visited: Vec<usize>,
}

pub fn episode_records(
    split: &str,
    graphs: &[NavGraph],
    results: &[TrajectoryResult],
    threshold: f64,
) -> Vec<EpisodeRecord> {
    results
        .iter()
        .map(|r| {
            let g = &graphs[r.graph];
            EpisodeRecord {
                split: split.to_string(),
                graph: r.graph,
                start: r.episode.path[0],
                goal: *r.episode.path.last().unwrap(),
                ne: navigation_error(g, r),
                success: success(g, r, threshold) == 1.0,
                oracle_ne: oracle_navigation_error(g, r),
                oracle_success: oracle_success(g, r, threshold) == 1.0,
                trajectory_length: r.trajectory_length,
                shortest_length: g.shortest_distance(r.episode.path[0], *r.episode.path.last().unwrap()),
                rollback_steps: r.rollback_steps,
                visited: r.visited.clone(),
            }
        })
        .collect()
}

/// Serializes records as one JSON object per line.
pub fn to_jsonl<T: Serialize>(records: &[T]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serialization cannot fail"));
        out.push('\n');
    }
    out
}

/// One row of a summary table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryRow {
    pub label: String,
    #[serde(flatten)]
    pub metrics: MetricSummary,
}

/// Renders rows as an aligned table with the paper-style metric columns.
pub fn render_table(rows: &[SummaryRow]) -> String {
    let label_w = rows.iter().map(|r| r.label.len()).max().unwrap_or(5).max(5);
    let mut out = format!(
        "{:<label_w$}  {:>4}  {:>6}  {:>6}  {:>6}  {:>6}  {:>6}  {:>7}  {:>7}\n",
        "run", "eps", "NE", "SR", "OSR", "SPL", "ONE", "rb-fail", "rb-rate"
    );
    for r in rows {
        let m = &r.metrics;
        out.push_str(&format!(
            "{:<label_w$}  {:>4}  {:>6.2}  {:>6.3}  {:>6.3}  {:>6.3}  {:>6.2}  {:>7.3}  {:>7.3}\n",
            r.label,
            m.episodes,
            m.ne,
            m.sr,
            m.osr,
            m.spl,
            m.one,
            m.rollback.failure_rollback_fraction,
            m.rollback.per_step_rate,
        ));
    }
    out
}
