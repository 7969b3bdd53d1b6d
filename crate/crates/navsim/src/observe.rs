//! Panoramic observations: per-viewpoint candidate features.

use crate::error::NavError;
use crate::graph::NavGraph;

/// One action candidate at a viewpoint. Slot 0 is always the stop
/// candidate (no target, all-zero feature).
#[derive(Debug, Clone)]
pub struct Candidate {
    pub target: Option<usize>,
    pub feature: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct PanoramaObservation {
    pub viewpoint: usize,
    pub candidates: Vec<Candidate>,
}

impl PanoramaObservation {
    pub fn num_candidates(&self) -> usize {
        self.candidates.len()
    }

    /// Candidate slot whose target is `v`, if the edge exists.
    pub fn slot_of(&self, v: usize) -> Option<usize> {
        self.candidates.iter().position(|c| c.target == Some(v))
    }
}

/// Assembles the candidate list at `viewpoint`: the all-zero stop slot,
/// then one slot per neighbor in sorted id order. Each movement feature is
/// the stored appearance vector concatenated with the orientation block
/// [sin phi, cos phi, sin theta, cos theta] tiled `t_orient` times.
pub fn observe(graph: &NavGraph, viewpoint: usize) -> Result<PanoramaObservation, NavError> {
    if viewpoint >= graph.len() {
        return Err(NavError::UnknownViewpoint(viewpoint));
    }
    let dim = graph.feature_dim();
    let mut candidates = vec![Candidate { target: None, feature: vec![0.0; dim] }];
    for (slot, &v) in graph.neighbors[viewpoint].iter().enumerate() {
        let mut feature = graph.features[viewpoint][slot].clone();
        let (phi, theta) = graph.heading_elevation(viewpoint, v);
        let block = [phi.sin(), phi.cos(), theta.sin(), theta.cos()];
        for _ in 0..graph.t_orient {
            feature.extend_from_slice(&block);
        }
        debug_assert_eq!(feature.len(), dim);
        candidates.push(Candidate { target: Some(v), feature });
    }
    Ok(PanoramaObservation { viewpoint, candidates })
}
