use anyhow::anyhow;
use clap::Args;
use mqpf::instance::widen_destinations;
use mqpf::oracle::{bfs_optimal_depth, exhaustive_min_cost, MAX_BFS_NODES, MAX_ENUM_DEPTH, MAX_ENUM_NODES};
use mqpf::{random_instance, sample_error_map, solve_mqpf, ErrorModel, HardwareGraph, NoiseParams, RouteConfig, TeamMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Failure, EXIT_MISMATCH};

#[derive(Args, Debug)]
pub struct CheckArgs {
    /// Largest graph to sample (at most 14).
    #[arg(long, default_value_t = 8)]
    pub nodes_max: usize,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn random_graph(rng: &mut ChaCha8Rng, max: usize) -> (String, HardwareGraph) {
    let n = rng.random_range(2..=max);
    let built = match rng.random_range(0..4) {
        0 => (format!("path{n}"), HardwareGraph::path(n)),
        1 if n >= 3 => (format!("cycle{n}"), HardwareGraph::cycle(n)),
        2 => {
            let rows = rng.random_range(1..=n.isqrt().max(1));
            let cols = (n / rows).max(2);
            (format!("grid{rows}x{cols}"), HardwareGraph::grid(rows, cols.min(max / rows)))
        }
        _ => {
            let edges: Vec<_> = (1..n).map(|v| (rng.random_range(0..v), v)).collect();
            (format!("tree{n}"), HardwareGraph::new(n, edges))
        }
    };
    (built.0, built.1.expect("sampled graphs are valid"))
}

pub fn run(args: CheckArgs) -> Result<u8, Failure> {
    if args.nodes_max < 2 || args.nodes_max > MAX_BFS_NODES {
        return Err(Failure::usage(anyhow!("--nodes-max must lie in 2..={MAX_BFS_NODES}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let modes = [TeamMode::Independent, TeamMode::Mixed, TeamMode::Single];
    let mut mismatches = 0;
    let mut cost_checks = 0;
    for i in 0..args.samples {
        let (name, g) = random_graph(&mut rng, args.nodes_max);
        let seed = rng.random::<u64>();
        let n = rng.random_range(1..=4.min(g.node_count()));
        let mut inst = random_instance(&g, n, modes[rng.random_range(0..3)], seed).map_err(Failure::runtime)?;
        if rng.random_bool(0.25) {
            inst = widen_destinations(&g, &inst, 2, seed);
        }
        let model = if rng.random_bool(0.5) { ErrorModel::Simple } else { ErrorModel::Extended };
        let map = sample_error_map(&g, &NoiseParams::heron(), seed).map_err(Failure::runtime)?;
        let cfg = RouteConfig { error_model: model, ..RouteConfig::default() };

        let sol = solve_mqpf(&g, &map, &inst, &cfg).map_err(Failure::runtime)?;
        let depth = bfs_optimal_depth(&g, &inst).map_err(Failure::runtime)?;
        if sol.depth != depth {
            mismatches += 1;
            println!("sample {i} ({name}, seed {seed}): depth {} but brute force gives {depth}", sol.depth);
            continue;
        }
        if g.node_count() <= MAX_ENUM_NODES && depth <= MAX_ENUM_DEPTH {
            cost_checks += 1;
            let best = exhaustive_min_cost(&g, &map, &inst, depth, model).map_err(Failure::runtime)?;
            match best {
                Some(c) if (c - sol.objective).abs() <= 1e-9 * c.abs().max(1.0) => {}
                other => {
                    mismatches += 1;
                    println!("sample {i} ({name}, seed {seed}, {model}): cost {} but brute force gives {other:?}", sol.objective);
                }
            }
        }
    }
    println!("{mismatches} mismatches / {} samples ({cost_checks} cost checks)", args.samples);
    Ok(if mismatches == 0 { 0 } else { EXIT_MISMATCH })
}
