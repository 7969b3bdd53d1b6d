//! Scratch benchmark for sizing the desk-scale training runs.

use agent::{Model, ModelConfig};
use navsim::{generate_dataset, EnvConfig, Split};
use trainer::{evaluate, train, TrainConfig};

fn arg<T: std::str::FromStr>(args: &[String], i: usize, default: T) -> T {
    args.get(i).and_then(|s| s.parse().ok()).unwrap_or(default)
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let epochs: usize = arg(&args, 1, 10);
    let regret = arg(&args, 2, 1u32) == 1;
    let marker = arg(&args, 3, 1u32) == 1;
    let sigma: f64 = arg(&args, 4, 0.3);
    let seed: u64 = arg(&args, 5, 0);
    let hidden: usize = arg(&args, 6, 64);
    let dropout: f64 = arg(&args, 7, 0.5);
    let lr: f64 = arg(&args, 8, 1e-3);
    let max_steps: usize = arg(&args, 9, 20);
    let proj: usize = arg(&args, 10, 64);
    let bootstrap: usize = arg(&args, 11, 0);
    let forced_fraction: f64 = arg(&args, 12, 0.0);
    let feature_noise: f64 = arg(&args, 13, 0.1);
    let min_path: usize = arg(&args, 14, 3);
    let max_path: usize = arg(&args, 15, 7);
    let min_side: usize = arg(&args, 16, 5);
    let max_side: usize = arg(&args, 17, 7);
    let alias: f64 = arg(&args, 18, 0.35);
    let loop_prob: f64 = arg(&args, 19, 0.15);
    let train_eps: usize = arg(&args, 20, 20);
    let d_app: usize = arg(&args, 21, 64);
    let tile: usize = arg(&args, 22, 16);
    let radius: f64 = arg(&args, 23, 3.0);

    let mut env = EnvConfig::default();
    env.graph.graph_latent_sigma = sigma;
    env.graph.feature_noise = feature_noise;
    env.min_path_edges = min_path;
    env.max_path_edges = max_path;
    env.graph.min_side = min_side;
    env.graph.max_side = max_side;
    env.graph.alias_prob = alias;
    env.graph.loop_prob = loop_prob;
    env.train_episodes_per_graph = train_eps;
    env.graph.d_app = d_app;
    let t0 = std::time::Instant::now();
    let dataset = generate_dataset(42, &env).unwrap();
    println!(
        "dataset: {} graphs, {} train eps ({:.1?})",
        dataset.graphs.len(),
        dataset.train.len(),
        t0.elapsed()
    );

    let mut mc = ModelConfig::desk(env.graph.feature_dim());
    mc.regret = regret;
    mc.marker = marker;
    mc.hidden = hidden;
    mc.dropout = dropout;
    mc.max_steps = max_steps;
    mc.proj = proj;
    mc.marker_tile = tile;
    let mut model = Model::new(mc, navsim::rng::stream_seed(seed, "model-init"));
    let (init_unseen, _) = evaluate(&mut model, &dataset, Split::UnseenEval, radius);
    println!("init unseen SR {:.3} NE {:.2}", init_unseen.sr, init_unseen.ne);

    let tc = TrainConfig {
        epochs,
        seed,
        lr,
        bootstrap_epochs: bootstrap,
        forced_fraction,
        success_radius: radius,
        ..TrainConfig::default()
    };
    let t1 = std::time::Instant::now();
    let out = train(model, &dataset, &tc, |r| {
        println!(
            "epoch {:2} loss {:8.3} seen SR {:.3} unseen SR {:.3} OSR {:.3} NE {:.2} rbfail {:.2} ({:.1?})",
            r.epoch,
            r.mean_loss,
            r.seen.sr,
            r.unseen.sr,
            r.unseen.osr,
            r.unseen.ne,
            r.unseen.rollback.failure_rollback_fraction,
            t1.elapsed()
        );
    });
    println!("best epoch {} total {:.1?}", out.best_epoch, t1.elapsed());

    let mut fin = out.final_model;
    let (uf, _) = evaluate(&mut fin, &dataset, Split::UnseenEval, radius);
    println!(
        "final: unseen SR {:.3} OSR {:.3} rb-in-success {:.2} rb-in-failure {:.2} rb/step {:.3}",
        uf.sr,
        uf.osr,
        uf.rollback.success_rollback_fraction,
        uf.rollback.failure_rollback_fraction,
        uf.rollback.per_step_rate
    );
    let mut best = out.best_model;
    let (u, _) = evaluate(&mut best, &dataset, Split::UnseenEval, radius);
    println!(
        "best: unseen SR {:.3} OSR {:.3} rb-in-success {:.2} rb-in-failure {:.2} rb/step {:.3}",
        u.sr,
        u.osr,
        u.rollback.success_rollback_fraction,
        u.rollback.failure_rollback_fraction,
        u.rollback.per_step_rate
    );
    {
        use navsim::rng::stream_seed;
        let noisy: Vec<_> = dataset
            .split(Split::UnseenEval)
            .iter()
            .enumerate()
            .map(|(i, ep)| {
                navsim::renoise_episode(
                    &dataset.graphs[ep.graph],
                    ep,
                    stream_seed(seed, &format!("eval-noise/{i}")),
                    0.6,
                )
            })
            .collect();
        let (un, _) = trainer::evaluate_episodes(&mut best, &dataset.graphs, &noisy, radius);
        println!("best, noisy instr: unseen SR {:.3} OSR {:.3}", un.sr, un.osr);
    }
    if args.iter().any(|a| a == "--trace") {
        let (_, results) = evaluate(&mut best, &dataset, Split::UnseenEval, radius);
        for (ep, res) in dataset.split(Split::UnseenEval).iter().zip(&results) {
            let g = &dataset.graphs[ep.graph];
            let goal = *ep.path.last().unwrap();
            let stop = *res.visited.last().unwrap();
            let ne = g.shortest_distance(stop, goal);
            if ne <= 3.0 {
                continue;
            }
            println!(
                "FAIL g{} gt {:?} walked {:?} lm {:?}",
                ep.graph,
                ep.path,
                res.visited,
                res.visited.iter().map(|&v| g.viewpoints[v].landmark).collect::<Vec<_>>()
            );
        }
    }
    if best.config.regret {
        let w = &best.params.get("w_r.w").data.values;
        let bb = &best.params.get("w_r.b").data.values;
        println!("gate w {:?} b {:?}", w, bb);
    }
    if best.config.uses_fused_projection() {
        let w = best.params.get("w_fr");
        let proj = best.config.proj;
        let rows = w.data.shape[0];
        let norms: Vec<f64> = (proj..rows)
            .map(|r| {
                w.data.values[r * proj..(r + 1) * proj].iter().map(|v| v * v).sum::<f64>().sqrt()
            })
            .collect();
        println!("w_fr marker row norms {:?}", norms);
    }
    if best.config.regret {
        best.config.rollback_block = true;
        let (ub, _) = evaluate(&mut best, &dataset, Split::UnseenEval, radius);
        println!("best, rollback blocked: unseen SR {:.3} OSR {:.3}", ub.sr, ub.osr);
        fin.config.rollback_block = true;
        let (fb, _) = evaluate(&mut fin, &dataset, Split::UnseenEval, radius);
        println!("final, rollback blocked: unseen SR {:.3} OSR {:.3}", fb.sr, fb.osr);
    }
}
