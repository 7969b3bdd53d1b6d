//! Navigation graphs: grid-with-shortcuts layouts, landmark-conditioned
//! appearance features, and a shortest-path oracle with deterministic
//! tie-breaking.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::NavError;
use crate::rng::stream;
use crate::vocab::N_LANDMARKS;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphParams {
    /// grid side lengths sampled uniformly from this range (inclusive)
    pub min_side: usize,
    pub max_side: usize,
    /// explicit (width, height) instead of sampled sides
    #[serde(default)]
    pub fixed_dims: Option<(usize, usize)>,
    /// grid spacing in meters, sampled per graph
    pub spacing_min: f64,
    pub spacing_max: f64,
    /// probability of each diagonal shortcut edge entering the candidate set
    pub shortcut_prob: f64,
    /// probability of keeping a candidate edge outside the spanning tree;
    /// low values give corridor-and-dead-end layouts, 1.0 gives the full grid
    pub loop_prob: f64,
    /// maximum neighbors per viewpoint
    pub k_max: usize,
    /// appearance feature dimension
    pub d_app: usize,
    /// orientation block tiling count: feature dim = d_app + 4 * t_orient
    pub t_orient: usize,
    /// per-direction Gaussian noise on appearance features
    pub feature_noise: f64,
    /// per-graph perturbation of the shared landmark latents
    pub graph_latent_sigma: f64,
    /// probability that a viewpoint copies a sibling's landmark, making the
    /// two branches of its shared junction indistinguishable on sight
    pub alias_prob: f64,
    /// vertical jitter of viewpoint positions, meters
    pub elevation_jitter: f64,
}

impl Default for GraphParams {
    fn default() -> Self {
        GraphParams {
            min_side: 4,
            max_side: 6,
            fixed_dims: None,
            spacing_min: 2.0,
            spacing_max: 3.5,
            shortcut_prob: 0.18,
            loop_prob: 0.15,
            k_max: 6,
            d_app: 32,
            t_orient: 8,
            feature_noise: 0.1,
            graph_latent_sigma: 0.3,
            alias_prob: 0.5,
            elevation_jitter: 0.3,
        }
    }
}

impl GraphParams {
    pub fn feature_dim(&self) -> usize {
        self.d_app + 4 * self.t_orient
    }

    pub fn validate(&self) -> Result<(), NavError> {
        if self.min_side == 0 || self.max_side < self.min_side {
            return Err(NavError::BadParams(format!(
                "degenerate grid sides {}..={}",
                self.min_side, self.max_side
            )));
        }
        let min_nodes = match self.fixed_dims {
            Some((w, h)) => w * h,
            None => self.min_side * self.min_side,
        };
        if min_nodes < 2 {
            return Err(NavError::BadParams("graph needs at least 2 nodes".into()));
        }
        if self.spacing_min <= 0.0 || self.spacing_max < self.spacing_min {
            return Err(NavError::BadParams("bad spacing range".into()));
        }
        if self.k_max < 1 || self.d_app == 0 || self.t_orient == 0 {
            return Err(NavError::BadParams("bad feature params".into()));
        }
        if !(0.0..=1.0).contains(&self.loop_prob)
            || !(0.0..=1.0).contains(&self.shortcut_prob)
            || !(0.0..=1.0).contains(&self.alias_prob)
        {
            return Err(NavError::BadParams("edge probabilities must be in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Shared per-landmark appearance latents, drawn once per experiment so
/// landmark identity carries the same signal across every graph.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LandmarkLatents {
    pub vectors: Vec<Vec<f64>>,
}

impl LandmarkLatents {
    pub fn generate(master_seed: u64, d_app: usize) -> Self {
        let mut rng = stream(master_seed, "landmark-latents");
        let vectors = (0..N_LANDMARKS)
            .map(|_| (0..d_app).map(|_| gauss(&mut rng)).collect())
            .collect();
        LandmarkLatents { vectors }
    }
}

fn gauss<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // Box-Muller; two uniforms per draw keeps the stream layout simple
    let u1: f64 = rng.random_range(f64::EPSILON..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Viewpoint {
    pub position: [f64; 3],
    pub landmark: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NavGraph {
    pub viewpoints: Vec<Viewpoint>,
    /// sorted neighbor ids per viewpoint; symmetric
    pub neighbors: Vec<Vec<usize>>,
    /// appearance feature per (viewpoint, neighbor slot), aligned with `neighbors`
    pub features: Vec<Vec<Vec<f64>>>,
    pub d_app: usize,
    pub t_orient: usize,
}

impl NavGraph {
    pub fn len(&self) -> usize {
        self.viewpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.viewpoints.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.d_app + 4 * self.t_orient
    }

    pub fn edge_length(&self, u: usize, v: usize) -> f64 {
        let (a, b) = (&self.viewpoints[u].position, &self.viewpoints[v].position);
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
    }

    /// Heading and elevation of the direction u -> v.
    pub fn heading_elevation(&self, u: usize, v: usize) -> (f64, f64) {
        let (a, b) = (&self.viewpoints[u].position, &self.viewpoints[v].position);
        let (dx, dy, dz) = (b[0] - a[0], b[1] - a[1], b[2] - a[2]);
        (dy.atan2(dx), dz.atan2(dx.hypot(dy)))
    }

    pub fn average_branching_factor(&self) -> f64 {
        let total: usize = self.neighbors.iter().map(Vec::len).sum();
        total as f64 / self.len() as f64
    }

    /// Minimal-total-edge-length path from `u` to `v`. Ties broken by the
    /// lexicographically smallest viewpoint-id sequence.
    pub fn shortest_path(&self, u: usize, v: usize) -> Result<(Vec<usize>, f64), NavError> {
        if u >= self.len() || v >= self.len() {
            return Err(NavError::UnknownViewpoint(u.max(v)));
        }
        if u == v {
            return Ok((vec![u], 0.0));
        }
        // Iterative relaxation on (distance, path); graphs are small.
        let n = self.len();
        let mut best: Vec<Option<(f64, Vec<usize>)>> = vec![None; n];
        best[u] = Some((0.0, vec![u]));
        let mut changed = true;
        while changed {
            changed = false;
            for a in 0..n {
                let Some((da, pa)) = best[a].clone() else { continue };
                for &b in &self.neighbors[a] {
                    let cand_d = da + self.edge_length(a, b);
                    let mut cand_p = pa.clone();
                    cand_p.push(b);
                    let better = match &best[b] {
                        None => true,
                        Some((db, pb)) => cand_d < *db || (cand_d == *db && cand_p < *pb),
                    };
                    if better {
                        best[b] = Some((cand_d, cand_p));
                        changed = true;
                    }
                }
            }
        }
        best[v]
            .clone()
            .map(|(d, p)| (p, d))
            .ok_or(NavError::Disconnected(u, v))
    }

    pub fn shortest_distance(&self, u: usize, v: usize) -> f64 {
        self.shortest_path(u, v).expect("generator guarantees connectivity").1
    }
}

/// Deterministic graph generation: same (seed, params, latents) give a
/// bit-identical graph.
pub fn generate_graph(
    seed: u64,
    params: &GraphParams,
    latents: &LandmarkLatents,
) -> Result<NavGraph, NavError> {
    params.validate()?;
    assert_eq!(
        latents.vectors[0].len(),
        params.d_app,
        "latent dim {} vs d_app {}",
        latents.vectors[0].len(),
        params.d_app
    );
    let mut rng = stream(seed, "graph-layout");

    let (width, height) = params.fixed_dims.unwrap_or_else(|| {
        (
            rng.random_range(params.min_side..=params.max_side),
            rng.random_range(params.min_side..=params.max_side),
        )
    });
    let n = width * height;
    let spacing = rng.random_range(params.spacing_min..=params.spacing_max);
    let at = |x: usize, y: usize| y * width + x;

    let mut positions = Vec::with_capacity(n);
    for y in 0..height {
        for x in 0..width {
            let jitter = spacing * 0.15;
            positions.push([
                x as f64 * spacing + rng.random_range(-jitter..=jitter),
                y as f64 * spacing + rng.random_range(-jitter..=jitter),
                rng.random_range(-params.elevation_jitter..=params.elevation_jitter),
            ]);
        }
    }

    // candidate edges: the orthogonal grid plus sampled diagonals
    let mut candidates: Vec<(usize, usize)> = Vec::new();
    for y in 0..height {
        for x in 0..width {
            if x + 1 < width {
                candidates.push((at(x, y), at(x + 1, y)));
            }
            if y + 1 < height {
                candidates.push((at(x, y), at(x, y + 1)));
            }
        }
    }
    for y in 0..height.saturating_sub(1) {
        for x in 0..width.saturating_sub(1) {
            for (a, b) in [(at(x, y), at(x + 1, y + 1)), (at(x + 1, y), at(x, y + 1))] {
                if rng.random_range(0.0..1.0) < params.shortcut_prob {
                    candidates.push((a, b));
                }
            }
        }
    }

    // a random spanning tree (shuffled Kruskal) keeps the graph connected;
    // each remaining candidate survives with loop_prob, capped by k_max.
    // The tree skeleton yields corridors and dead ends, so a wrong turn
    // usually has to be undone rather than routed around.
    candidates.shuffle(&mut rng);
    let mut root: Vec<usize> = (0..n).collect();
    fn find(root: &mut Vec<usize>, mut a: usize) -> usize {
        while root[a] != a {
            root[a] = root[root[a]];
            a = root[a];
        }
        a
    }
    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut rejected: Vec<(usize, usize)> = Vec::new();
    for (a, b) in candidates {
        let (ra, rb) = (find(&mut root, a), find(&mut root, b));
        if ra != rb {
            root[ra] = rb;
            neighbors[a].push(b);
            neighbors[b].push(a);
        } else {
            rejected.push((a, b));
        }
    }
    for (a, b) in rejected {
        if rng.random_range(0.0..1.0) < params.loop_prob
            && neighbors[a].len() < params.k_max
            && neighbors[b].len() < params.k_max
        {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
    }
    for nb in &mut neighbors {
        nb.sort_unstable();
    }

    // landmark assignment: by default the 2-hop neighborhood stays distinct
    // so "go to <landmark>" disambiguates among a viewpoint's candidates;
    // with alias_prob a viewpoint instead copies one of its siblings, so two
    // branches of the shared junction look identical until entered
    let mut landmarks = vec![usize::MAX; n];
    for v in 0..n {
        let mut direct: Vec<usize> = Vec::new();
        let mut siblings: Vec<usize> = Vec::new();
        for &a in &neighbors[v] {
            if landmarks[a] != usize::MAX {
                direct.push(landmarks[a]);
            }
            for &b in &neighbors[a] {
                if b != v && landmarks[b] != usize::MAX {
                    siblings.push(landmarks[b]);
                }
            }
        }
        let alias_choices: Vec<usize> =
            siblings.iter().copied().filter(|l| !direct.contains(l)).collect();
        if !alias_choices.is_empty() && rng.random_range(0.0..1.0) < params.alias_prob {
            landmarks[v] = alias_choices[rng.random_range(0..alias_choices.len())];
            continue;
        }
        let mut taken = direct;
        taken.extend(siblings);
        let free: Vec<usize> = (0..N_LANDMARKS).filter(|l| !taken.contains(l)).collect();
        landmarks[v] = if free.is_empty() {
            rng.random_range(0..N_LANDMARKS)
        } else {
            free[rng.random_range(0..free.len())]
        };
    }

    // per-graph latent shift, then per-direction noise
    let mut feat_rng = stream(seed, "graph-features");
    let graph_latents: Vec<Vec<f64>> = latents
        .vectors
        .iter()
        .map(|base| {
            base.iter()
                .map(|v| v + params.graph_latent_sigma * gauss(&mut feat_rng))
                .collect()
        })
        .collect();
    let features: Vec<Vec<Vec<f64>>> = (0..n)
        .map(|u| {
            neighbors[u]
                .iter()
                .map(|&v| {
                    graph_latents[landmarks[v]]
                        .iter()
                        .map(|base| base + params.feature_noise * gauss(&mut feat_rng))
                        .collect()
                })
                .collect()
        })
        .collect();

    let viewpoints = positions
        .into_iter()
        .zip(&landmarks)
        .map(|(position, &landmark)| Viewpoint { position, landmark })
        .collect();

    Ok(NavGraph {
        viewpoints,
        neighbors,
        features,
        d_app: params.d_app,
        t_orient: params.t_orient,
    })
}
