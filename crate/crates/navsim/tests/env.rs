use navsim::{
    generate_dataset, generate_graph, ground_truth_action, instruction_for_path, make_episode,
    observe, progress_target, vocab, EnvConfig, Episode, GraphParams, LandmarkLatents, NavGraph,
    Split, Viewpoint,
};

fn small_params(w: usize, h: usize) -> GraphParams {
    GraphParams { fixed_dims: Some((w, h)), d_app: 8, t_orient: 2, ..GraphParams::default() }
}

fn gen(seed: u64, params: &GraphParams) -> NavGraph {
    let latents = LandmarkLatents::generate(seed, params.d_app);
    generate_graph(seed, params, &latents).unwrap()
}

/// Straight-line graph with the given edge lengths, landmarks 0, 1, 2, ...
fn line_graph(edge_lengths: &[f64]) -> NavGraph {
    let n = edge_lengths.len() + 1;
    let mut x = 0.0;
    let mut viewpoints = Vec::new();
    for i in 0..n {
        viewpoints.push(Viewpoint { position: [x, 0.0, 0.0], landmark: i % vocab::N_LANDMARKS });
        if i < edge_lengths.len() {
            x += edge_lengths[i];
        }
    }
    let neighbors: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let mut nb = Vec::new();
            if i > 0 {
                nb.push(i - 1);
            }
            if i + 1 < n {
                nb.push(i + 1);
            }
            nb
        })
        .collect();
    let features = neighbors
        .iter()
        .map(|nb| nb.iter().map(|_| vec![0.5; 8]).collect())
        .collect();
    NavGraph { viewpoints, neighbors, features, d_app: 8, t_orient: 2 }
}

// ── graph generation ────────────────────────────────────────────────

#[test]
fn generation_is_deterministic() {
    let params = GraphParams { d_app: 8, ..GraphParams::default() };
    let a = serde_json::to_string(&gen(5, &params)).unwrap();
    let b = serde_json::to_string(&gen(5, &params)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn two_node_graph_has_single_direction_plus_stop() {
    let g = gen(1, &small_params(2, 1));
    assert_eq!(g.len(), 2);
    for v in 0..2 {
        assert_eq!(g.neighbors[v].len(), 1);
        let obs = observe(&g, v).unwrap();
        assert_eq!(obs.num_candidates(), 2);
    }
}

#[test]
fn zero_node_params_rejected() {
    let params = GraphParams { fixed_dims: Some((0, 5)), ..GraphParams::default() };
    assert!(generate_graph(0, &params, &LandmarkLatents::generate(0, 64)).is_err());
}

#[test]
fn default_params_average_branching_factor_in_range() {
    let params = GraphParams::default();
    let latents = LandmarkLatents::generate(0, params.d_app);
    let mut total = 0.0;
    for seed in 0..100 {
        let g = generate_graph(seed, &params, &latents).unwrap();
        let lo = params.min_side * params.min_side;
        let hi = params.max_side * params.max_side;
        assert!(g.len() >= lo && g.len() <= hi);
        for nb in &g.neighbors {
            assert!(nb.len() <= params.k_max);
        }
        total += g.average_branching_factor();
    }
    let avg = total / 100.0;
    // spanning tree plus sparse loop edges: a touch above 2(n-1)/n
    assert!((1.9..=2.8).contains(&avg), "average branching factor {avg}");
}

// ── shortest path ───────────────────────────────────────────────────

#[test]
fn shortest_path_trivial_cases() {
    let g = line_graph(&[2.0, 2.0]);
    assert_eq!(g.shortest_path(1, 1).unwrap(), (vec![1], 0.0));
    let (path, dist) = g.shortest_path(0, 2).unwrap();
    assert_eq!(path, vec![0, 1, 2]);
    assert!((dist - 4.0).abs() < 1e-12);
}

/// All simple paths by DFS, keeping the minimal (distance, sequence).
fn brute_force_shortest(g: &NavGraph, u: usize, v: usize) -> (Vec<usize>, f64) {
    fn dfs(
        g: &NavGraph,
        cur: usize,
        v: usize,
        dist: f64,
        path: &mut Vec<usize>,
        visited: &mut Vec<bool>,
        best: &mut Option<(f64, Vec<usize>)>,
    ) {
        if cur == v {
            let better = match best {
                None => true,
                Some((bd, bp)) => dist < *bd || (dist == *bd && path < bp),
            };
            if better {
                *best = Some((dist, path.clone()));
            }
            return;
        }
        for &next in &g.neighbors[cur] {
            if !visited[next] {
                visited[next] = true;
                path.push(next);
                dfs(g, next, v, dist + g.edge_length(cur, next), path, visited, best);
                path.pop();
                visited[next] = false;
            }
        }
    }
    let mut visited = vec![false; g.len()];
    visited[u] = true;
    let mut path = vec![u];
    let mut best = None;
    dfs(g, u, v, 0.0, &mut path, &mut visited, &mut best);
    let (d, p) = best.expect("connected");
    (p, d)
}

#[test]
fn shortest_path_matches_exhaustive_enumeration() {
    for seed in 0..5 {
        let g = gen(seed, &small_params(5, 2));
        for u in 0..g.len() {
            for v in 0..g.len() {
                let (path, dist) = g.shortest_path(u, v).unwrap();
                let (bpath, bdist) = brute_force_shortest(&g, u, v);
                assert!((dist - bdist).abs() < 1e-9, "seed {seed} {u}->{v}");
                assert_eq!(path, bpath, "seed {seed} {u}->{v}");
            }
        }
    }
}

// ── episodes and instructions ───────────────────────────────────────

#[test]
fn episodes_are_deterministic() {
    let g = gen(3, &small_params(5, 5));
    let a = make_episode(&g, 0, 11, 0.0, (3, 7), Split::Train);
    let b = make_episode(&g, 0, 11, 0.0, (3, 7), Split::Train);
    assert_eq!(a.instruction, b.instruction);
    assert_eq!(a.path, b.path);
    let noisy1 = make_episode(&g, 0, 11, 1.0, (3, 7), Split::Train);
    let noisy2 = make_episode(&g, 0, 11, 1.0, (3, 7), Split::Train);
    assert_eq!(noisy1.instruction, noisy2.instruction);
}

#[test]
fn one_edge_path_has_single_movement_clause() {
    let g = line_graph(&[2.5]);
    let tokens = instruction_for_path(&g, &[0, 1]);
    // go to <landmark> stop at <landmark>
    assert_eq!(tokens.len(), 6);
    assert_eq!(tokens[0], vocab::token_id("go"));
    assert_eq!(tokens[3], vocab::token_id("stop"));
    assert!(vocab::is_landmark_token(tokens[2]));
    assert_eq!(tokens[2], tokens[5]);
}

#[test]
fn landmark_vocabulary_is_covered() {
    let params = GraphParams { d_app: 8, ..GraphParams::default() };
    let latents = LandmarkLatents::generate(0, params.d_app);
    let mut seen = vec![false; vocab::N_LANDMARKS];
    let mut count = 0;
    'outer: for gseed in 0..25 {
        let g = generate_graph(gseed, &params, &latents).unwrap();
        for e in 0..20 {
            let ep = make_episode(&g, 0, gseed * 100 + e, 0.0, (3, 7), Split::Train);
            for t in &ep.instruction {
                if vocab::is_landmark_token(*t) {
                    seen[*t - vocab::landmark_token(0)] = true;
                }
            }
            count += 1;
            if count >= 500 {
                break 'outer;
            }
        }
    }
    assert_eq!(count, 500);
    let missing: Vec<usize> =
        (0..vocab::N_LANDMARKS).filter(|l| !seen[*l]).collect();
    assert!(missing.is_empty(), "landmarks never mentioned: {missing:?}");
}

// ── observations ────────────────────────────────────────────────────

#[test]
fn stop_slot_is_all_zero() {
    let g = gen(2, &small_params(3, 3));
    let obs = observe(&g, 4).unwrap();
    assert!(obs.candidates[0].target.is_none());
    assert!(obs.candidates[0].feature.iter().all(|v| *v == 0.0));
}

#[test]
fn orientation_block_for_axis_aligned_neighbor() {
    // neighbor along +x at equal elevation: block = (sin 0, cos 0, sin 0, cos 0)
    let g = line_graph(&[2.0]);
    let obs = observe(&g, 0).unwrap();
    let feat = &obs.candidates[1].feature;
    let block = &feat[8..];
    assert_eq!(block.len(), 8);
    for pair in block.chunks(4) {
        assert!((pair[0] - 0.0).abs() < 1e-12);
        assert!((pair[1] - 1.0).abs() < 1e-12);
        assert!((pair[2] - 0.0).abs() < 1e-12);
        assert!((pair[3] - 1.0).abs() < 1e-12);
    }
}

#[test]
fn full_fidelity_feature_length() {
    let params = GraphParams {
        fixed_dims: Some((2, 1)),
        d_app: 2048,
        t_orient: 32,
        ..GraphParams::default()
    };
    assert_eq!(params.feature_dim(), 2176);
    let g = gen(0, &params);
    let obs = observe(&g, 0).unwrap();
    assert_eq!(obs.candidates[1].feature.len(), 2176);
}

// ── supervision ─────────────────────────────────────────────────────

fn episode_on(g: &NavGraph, start: usize, goal: usize) -> Episode {
    let (path, _) = g.shortest_path(start, goal).unwrap();
    Episode {
        graph: 0,
        instruction: instruction_for_path(g, &path),
        start,
        goal,
        path,
        split: Split::Train,
    }
}

#[test]
fn progress_target_endpoints_and_detours() {
    let g = gen(7, &small_params(5, 5));
    let ep = make_episode(&g, 0, 1, 0.0, (3, 7), Split::Train);
    assert_eq!(progress_target(&g, &ep, ep.start), 0.0);
    assert_eq!(progress_target(&g, &ep, ep.goal), 1.0);
    let d0 = g.shortest_distance(ep.start, ep.goal);
    for v in 0..g.len() {
        let dt = g.shortest_distance(v, ep.goal);
        let y = progress_target(&g, &ep, v);
        assert!((y - (d0 - dt) / d0).abs() < 1e-12);
        if dt > d0 {
            assert!(y < 0.0);
        }
    }
}

#[test]
fn progress_increases_strictly_along_shortest_path() {
    for seed in 0..10 {
        let g = gen(seed, &small_params(5, 5));
        let ep = make_episode(&g, 0, seed, 0.0, (3, 7), Split::Train);
        let mut prev = f64::NEG_INFINITY;
        for &v in &ep.path {
            let y = progress_target(&g, &ep, v);
            assert!(y > prev, "progress must strictly increase along the path");
            assert!(y <= 1.0);
            prev = y;
        }
        assert_eq!(prev, 1.0);
    }
}

#[test]
fn ground_truth_action_trivial_cases() {
    let g = line_graph(&[2.0, 2.0, 2.0]);
    let ep = episode_on(&g, 0, 3);
    assert_eq!(ground_truth_action(&g, &ep, ep.goal), 0);
    // one step from goal: the goal-adjacent slot
    let slot = ground_truth_action(&g, &ep, 2);
    let obs = observe(&g, 2).unwrap();
    assert_eq!(obs.candidates[slot].target, Some(3));
}

#[test]
fn ground_truth_action_recovers_after_deviation() {
    for seed in 0..10 {
        let g = gen(seed, &small_params(5, 5));
        let ep = make_episode(&g, 0, seed + 50, 0.0, (3, 7), Split::Train);
        for v in 0..g.len() {
            if v == ep.goal {
                continue;
            }
            let slot = ground_truth_action(&g, &ep, v);
            let obs = observe(&g, v).unwrap();
            let target = obs.candidates[slot].target.unwrap();
            let fresh = g.shortest_path(v, ep.goal).unwrap().0;
            assert_eq!(target, fresh[1]);
        }
    }
}

#[test]
fn following_ground_truth_reaches_goal_in_hop_count_steps() {
    for seed in 0..10 {
        let g = gen(seed, &small_params(5, 5));
        let ep = make_episode(&g, 0, seed + 99, 0.0, (3, 7), Split::Train);
        let hops = ep.path.len() - 1;
        let mut cur = ep.start;
        let mut steps = 0;
        loop {
            let slot = ground_truth_action(&g, &ep, cur);
            if slot == 0 {
                break;
            }
            let obs = observe(&g, cur).unwrap();
            cur = obs.candidates[slot].target.unwrap();
            steps += 1;
            assert!(steps <= hops, "detoured past the shortest hop count");
        }
        assert_eq!(cur, ep.goal);
        assert_eq!(steps, hops);
    }
}

// ── dataset ─────────────────────────────────────────────────────────

#[test]
fn dataset_generation_is_deterministic_and_split_disjoint() {
    let config = EnvConfig {
        train_graphs: 3,
        unseen_graphs: 2,
        train_episodes_per_graph: 4,
        seen_eval_episodes_per_graph: 2,
        unseen_eval_episodes_per_graph: 3,
        graph: GraphParams { d_app: 8, ..GraphParams::default() },
        ..EnvConfig::default()
    };
    let a = generate_dataset(42, &config).unwrap();
    let b = generate_dataset(42, &config).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());

    assert_eq!(a.graphs.len(), 5);
    assert_eq!(a.train.len(), 12);
    assert_eq!(a.seen_eval.len(), 6);
    assert_eq!(a.unseen_eval.len(), 6);
    for ep in &a.train {
        assert!(ep.graph < 3);
        assert!(ep.path.first() == Some(&ep.start) && ep.path.last() == Some(&ep.goal));
    }
    for ep in &a.unseen_eval {
        assert!(ep.graph >= 3, "unseen episodes must use held-out graphs");
    }
}
