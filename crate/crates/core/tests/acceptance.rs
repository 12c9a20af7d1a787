//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero on any unexpected failure.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use mqpf::instance::widen_destinations;
use mqpf::noise::{accumulated_error, error_to_cost, idle_error, split_cnot_error};
use mqpf::oracle::{bfs_optimal_depth, exhaustive_min_cost};
use mqpf::route::{lower_bound_dijkstra, validate, Presolve};
use mqpf::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

struct Case {
    graph: String,
    g: HardwareGraph,
    map: ErrorMap,
    inst: MqpfInstance,
}

fn small_graphs() -> Vec<(String, HardwareGraph)> {
    let mut out = Vec::new();
    for n in 4..=6 {
        out.push((format!("path{n}"), HardwareGraph::path(n).unwrap()));
        out.push((format!("cycle{n}"), HardwareGraph::cycle(n).unwrap()));
    }
    out.push(("grid2x2".into(), HardwareGraph::grid(2, 2).unwrap()));
    out.push(("grid2x3".into(), HardwareGraph::grid(2, 3).unwrap()));
    out
}

const MODES: [TeamMode; 3] = [TeamMode::Independent, TeamMode::Mixed, TeamMode::Single];

/// 500 instances per small graph cycling through qubit counts 1..=4, all
/// team modes, strict and flexible destinations.
fn oracle_cases() -> Vec<Case> {
    let mut cases = Vec::new();
    for (gi, (name, g)) in small_graphs().into_iter().enumerate() {
        for i in 0..500u64 {
            let seed = gi as u64 * 10_000 + i;
            let n = 1 + (i % 4) as usize;
            let mode = MODES[(i / 4 % 3) as usize];
            let mut inst = random_instance(&g, n, mode, seed).unwrap();
            if i / 12 % 2 == 1 {
                inst = widen_destinations(&g, &inst, 2, seed);
            }
            let map = sample_error_map(&g, &NoiseParams::melbourne_style(), seed).unwrap();
            cases.push(Case { graph: name.clone(), g: g.clone(), map, inst });
        }
    }
    cases
}

fn default_cfg() -> RouteConfig {
    RouteConfig::default()
}

struct Solved {
    case: usize,
    sol: RoutingSolution,
}

fn criterion_1(cases: &[Case], solved: &mut Vec<Solved>) -> Outcome {
    let mut mismatches = Vec::new();
    for (i, c) in cases.iter().enumerate() {
        let sol = solve_mqpf(&c.g, &c.map, &c.inst, &default_cfg()).unwrap();
        let oracle = bfs_optimal_depth(&c.g, &c.inst).unwrap();
        if sol.depth != oracle {
            mismatches.push(format!("{} #{i}: solver {} oracle {oracle}", c.graph, sol.depth));
        }
        solved.push(Solved { case: i, sol });
    }
    let flexible = cases.iter().filter(|c| c.inst.flexible).count();
    outcome(
        mismatches.is_empty(),
        format!(
            "{} instances on {} graphs ({flexible} flexible), {} mismatches {}",
            cases.len(),
            small_graphs().len(),
            mismatches.len(),
            mismatches.iter().take(3).cloned().collect::<Vec<_>>().join("; ")
        ),
    )
}

fn criterion_2(extra: &mut Vec<(Case, RoutingSolution)>) -> Outcome {
    let graphs = small_graphs();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut checked = [0usize; 2];
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for (m, model) in [ErrorModel::Simple, ErrorModel::Extended].into_iter().enumerate() {
        let mut attempt = 0u64;
        while checked[m] < 220 {
            attempt += 1;
            let (name, g) = &graphs[rng.random_range(0..graphs.len())];
            let n = rng.random_range(1..=4);
            let mode = MODES[rng.random_range(0..3)];
            let mut inst = random_instance(g, n, mode, attempt).unwrap();
            if rng.random_bool(0.25) {
                inst = widen_destinations(g, &inst, 2, attempt);
            }
            let map = sample_error_map(g, &NoiseParams::heron(), attempt).unwrap();
            let cfg = RouteConfig { error_model: model, ..default_cfg() };
            let sol = solve_mqpf(g, &map, &inst, &cfg).unwrap();
            if sol.depth > 3 {
                continue;
            }
            let oracle = exhaustive_min_cost(g, &map, &inst, sol.depth, model).unwrap().expect("feasible at solver depth");
            let diff = (oracle - sol.objective).abs();
            worst = worst.max(diff);
            if diff > 1e-9 {
                failures.push(format!("{name} {model} #{attempt}: solver {} oracle {oracle}", sol.objective));
            }
            checked[m] += 1;
            extra.push((Case { graph: name.clone(), g: g.clone(), map, inst }, sol));
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "{} simple + {} extended instances, max |diff| {worst:.2e} {}",
            checked[0],
            checked[1],
            failures.iter().take(3).cloned().collect::<Vec<_>>().join("; ")
        ),
    )
}

fn crossing_instance() -> MqpfInstance {
    MqpfInstance::new(vec![Team::new(vec![0], vec![3]), Team::new(vec![2, 3], vec![0, 1])], false)
}

fn criterion_3(extra: &mut Vec<(Case, RoutingSolution)>) -> Outcome {
    let inst = crossing_instance();
    let path = HardwareGraph::path(4).unwrap();
    let map = ErrorMap::uniform(&path, 0.01, 100.0, 90.0).unwrap();
    let sol = solve_mqpf(&path, &map, &inst, &default_cfg()).unwrap();
    let oracle = bfs_optimal_depth(&path, &inst).unwrap();
    let depth = sol.depth;
    extra.push((Case { graph: "path4".into(), g: path, map, inst: inst.clone() }, sol));

    let tee = HardwareGraph::new(4, [(0, 1), (1, 2), (2, 3), (1, 3)]).unwrap();
    let tee_map = ErrorMap::uniform(&tee, 0.01, 100.0, 90.0).unwrap();
    let tee_sol = solve_mqpf(&tee, &tee_map, &inst, &default_cfg()).unwrap();
    let tee_depth = tee_sol.depth;
    extra.push((Case { graph: "tee4".into(), g: tee, map: tee_map, inst }, tee_sol));

    outcome(
        depth == 3,
        format!(
            "path 0-1-2-3: solver depth {depth}, oracle depth {oracle} (expected 3); \
             T-shaped reading 0-1,1-2,2-3,1-3: depth {tee_depth}"
        ),
    )
}

fn fuzz_case(rng: &mut ChaCha8Rng, seed: u64) -> (String, HardwareGraph) {
    match rng.random_range(0..5) {
        0 => {
            let n = rng.random_range(2..=9);
            (format!("path{n}"), HardwareGraph::path(n).unwrap())
        }
        1 => {
            let n = rng.random_range(3..=9);
            (format!("cycle{n}"), HardwareGraph::cycle(n).unwrap())
        }
        2 => {
            let (r, c) = (rng.random_range(1..=3), rng.random_range(2..=4));
            (format!("grid{r}x{c}"), HardwareGraph::grid(r, c).unwrap())
        }
        3 => {
            // random spanning tree plus a few chords
            let n = rng.random_range(3..=9);
            let mut edges: Vec<(usize, usize)> = (1..n).map(|v| (rng.random_range(0..v), v)).collect();
            for _ in 0..rng.random_range(0..3) {
                let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
                if a != b && !edges.contains(&(a.min(b), a.max(b))) && !edges.contains(&(a.max(b), a.min(b))) {
                    edges.push((a, b));
                }
            }
            (format!("random{n}#{seed}"), HardwareGraph::new(n, edges).unwrap())
        }
        _ => ("melbourne15".into(), build_layout(&LayoutName::Melbourne15).unwrap()),
    }
}

fn criterion_4(all: &[(&Case, &RoutingSolution)]) -> Outcome {
    let mut bad = Vec::new();
    for (c, sol) in all {
        let v = validate(&c.g, &c.inst, sol);
        if !v.is_empty() {
            bad.push(format!("{}: {}", c.graph, v[0]));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut fuzzed = 0;
    for seed in 0..1000u64 {
        let (name, g) = fuzz_case(&mut rng, seed);
        let n = rng.random_range(1..=g.node_count().min(5));
        let mut inst = random_instance(&g, n, MODES[rng.random_range(0..3)], seed).unwrap();
        if rng.random_bool(0.3) {
            inst = widen_destinations(&g, &inst, 3, seed);
        }
        let map = sample_error_map(&g, &NoiseParams::heron(), seed).unwrap();
        let solver_mode = [SolveMode::Optimal, SolveMode::near_optimal(), SolveMode::FeasibleFirst][rng.random_range(0..3)];
        let cfg = RouteConfig {
            solver: SolverConfig::new(solver_mode),
            error_model: if rng.random_bool(0.5) { ErrorModel::Simple } else { ErrorModel::Extended },
            depth_slack: rng.random_range(0..=1),
            presolve: [Presolve::None, Presolve::Dijkstra, Presolve::SingleTeam][rng.random_range(0..3)],
            timeout: Some(Duration::from_secs(60)),
            trim: rng.random_bool(0.8),
        };
        match solve_mqpf(&g, &map, &inst, &cfg) {
            Ok(sol) => {
                fuzzed += 1;
                let v = validate(&g, &inst, &sol);
                if !v.is_empty() {
                    bad.push(format!("fuzz {name}: {}", v[0]));
                }
            }
            Err(e) => bad.push(format!("fuzz {name}: {e}")),
        }
    }
    outcome(
        bad.is_empty(),
        format!(
            "{} solutions from criteria 1-3 plus {fuzzed} fuzzed, {} violations {}",
            all.len(),
            bad.len(),
            bad.iter().take(3).cloned().collect::<Vec<_>>().join("; ")
        ),
    )
}

fn criterion_5(cases: &[Case], solved: &[Solved]) -> Outcome {
    let mut bad = Vec::new();
    for s in solved {
        let c = &cases[s.case];
        let cfg = RouteConfig { trim: false, ..default_cfg() };
        let full = solve_mqpf(&c.g, &c.map, &c.inst, &cfg).unwrap();
        if full.depth != s.sol.depth || (full.objective - s.sol.objective).abs() > 1e-9 {
            bad.push(format!("{} #{}: depth {} vs {}, cost {} vs {}", c.graph, s.case, full.depth, s.sol.depth, full.objective, s.sol.objective));
        }
    }
    outcome(bad.is_empty(), format!("{} instances, {} differences {}", solved.len(), bad.len(), bad.first().cloned().unwrap_or_default()))
}

fn criterion_6(cases: &[Case], solved: &[Solved]) -> Outcome {
    let mut bad = Vec::new();
    for s in solved {
        let c = &cases[s.case];
        for presolve in [Presolve::None, Presolve::SingleTeam] {
            let cfg = RouteConfig { presolve, ..default_cfg() };
            let d = solve_mqpf(&c.g, &c.map, &c.inst, &cfg).unwrap().depth;
            if d != s.sol.depth {
                bad.push(format!("{} #{} {presolve}: {d} vs {}", c.graph, s.case, s.sol.depth));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let graphs = [HardwareGraph::grid(3, 3).unwrap(), HardwareGraph::grid(2, 4).unwrap(), HardwareGraph::cycle(7).unwrap()];
    let mut not_monotone = 0;
    for seed in 0..200u64 {
        let g = &graphs[seed as usize % graphs.len()];
        let n = rng.random_range(2..=5);
        let indep = random_instance(g, n, TeamMode::Independent, seed).unwrap();
        let single = indep.single_team_relaxation();
        let map = sample_error_map(g, &NoiseParams::melbourne_style(), seed).unwrap();
        let a = solve_mqpf(g, &map, &indep, &default_cfg()).unwrap().depth;
        let b = solve_mqpf(g, &map, &single, &default_cfg()).unwrap().depth;
        if b > a {
            not_monotone += 1;
        }
    }
    outcome(
        bad.is_empty() && not_monotone == 0,
        format!(
            "{} instances x 3 presolve settings, {} depth differences; 200 single/independent pairs, {not_monotone} violations {}",
            solved.len(),
            bad.len(),
            bad.first().cloned().unwrap_or_default()
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_roundtrip = 0.0f64;
    let mut worst_split = 0.0f64;
    for _ in 0..10_000 {
        let e: f64 = rng.random_range(0.0..0.5);
        let (back, fidelity) = accumulated_error(error_to_cost(e));
        worst_roundtrip = worst_roundtrip.max((back - e).abs()).max((fidelity - (1.0 - e)).abs());
        let c: f64 = rng.random_range(0.0..10.0);
        let (err, _) = accumulated_error(c);
        worst_roundtrip = worst_roundtrip.max((err - (1.0 - (-c).exp())).abs());
        let v = split_cnot_error(e).unwrap();
        worst_split = worst_split.max(((1.0 - v).powi(2) - (1.0 - e)).abs());
    }
    let zero = idle_error(120.0, 80.0, 0.0);
    let mut worst_idle = 0.0f64;
    for _ in 0..1000 {
        let t1: f64 = rng.random_range(10.0..500.0);
        let t: f64 = rng.random_range(1e-9..1e-5);
        worst_idle = worst_idle.max((idle_error(t1, t1, t) - (1.0 - (-t / (t1 * 1e-6)).exp())).abs());
    }
    let pass = worst_roundtrip <= 1e-12 && worst_split <= 1e-12 && zero == 0.0 && worst_idle <= 1e-12;
    outcome(
        pass,
        format!(
            "round trip {worst_roundtrip:.1e}, split identity {worst_split:.1e} over 10^4 samples, idle(t=0) = {zero}, idle(T1=T2) {worst_idle:.1e}"
        ),
    )
}

struct ModeRun {
    opt: RoutingSolution,
    near: RoutingSolution,
    feas: RoutingSolution,
}

fn run_modes(seed: u64, g: &HardwareGraph, n: usize, mode: TeamMode) -> Option<ModeRun> {
    let inst = random_instance(g, n, mode, seed).unwrap();
    let map = sample_error_map(g, &NoiseParams::heron(), seed).unwrap();
    let run = |m: SolveMode| {
        let cfg = RouteConfig {
            solver: SolverConfig::new(m),
            error_model: ErrorModel::Extended,
            timeout: Some(Duration::from_secs(60)),
            ..default_cfg()
        };
        solve_mqpf(g, &map, &inst, &cfg).ok()
    };
    Some(ModeRun { opt: run(SolveMode::Optimal)?, near: run(SolveMode::near_optimal())?, feas: run(SolveMode::FeasibleFirst)? })
}

fn mode_graphs() -> Vec<HardwareGraph> {
    vec![HardwareGraph::grid(3, 3).unwrap(), HardwareGraph::grid(4, 4).unwrap(), HardwareGraph::grid(3, 5).unwrap()]
}

fn criterion_8() -> Outcome {
    let graphs = mode_graphs();
    let mut complete = 0;
    let mut bad = Vec::new();
    let mut worst_gap = 0.0f64;
    let mut strict_gaps = 0;
    let mut seed = 0u64;
    while complete < 100 && seed < 400 {
        let g = &graphs[seed as usize % graphs.len()];
        let n = 3 + (seed as usize % 5);
        if let Some(r) = run_modes(seed, g, n, MODES[seed as usize % 3]) {
            complete += 1;
            let (o, nr, f) = (r.opt.cost, r.near.cost, r.feas.cost);
            let depths = [r.opt.depth, r.near.depth, r.feas.depth];
            let gap = r.near.gap.unwrap_or(0.0);
            worst_gap = worst_gap.max(gap);
            if f > o + 1e-12 {
                strict_gaps += 1;
            }
            if !(o <= nr + 1e-9 && nr <= f + 1e-9) || gap > 0.08 || depths.iter().any(|&d| d != depths[0]) {
                bad.push(format!("seed {seed}: {o} / {nr} / {f}, gap {gap}"));
            }
        }
        seed += 1;
    }
    outcome(
        complete >= 100 && bad.is_empty(),
        format!(
            "{complete} instances completed in all modes, {} ordering violations, worst certified gap {:.2}%, feasible strictly worse on {strict_gaps} {}",
            bad.len(),
            worst_gap * 100.0,
            bad.first().cloned().unwrap_or_default()
        ),
    )
}

fn criterion_9() -> Outcome {
    let graphs = mode_graphs();
    let mut count = 0;
    let mut bad = 0;
    let (mut ratio_opt, mut ratio_feas, mut ratios) = (0.0, 0.0, 0);
    let mut seed = 1000u64;
    while count < 40 && seed < 1200 {
        let g = &graphs[seed as usize % graphs.len()];
        if let Some(r) = run_modes(seed, g, 4 + seed as usize % 4, TeamMode::Independent) {
            count += 1;
            if r.opt.depth != r.feas.depth || r.opt.cost > r.feas.cost + 1e-9 {
                bad += 1;
            }
            if let (Some(a), Some(b)) = (r.opt.idle_ratio, r.feas.idle_ratio) {
                ratio_opt += a;
                ratio_feas += b;
                ratios += 1;
            }
        }
        seed += 1;
    }
    let mean = |x: f64| if ratios > 0 { x / ratios as f64 } else { f64::NAN };
    outcome(
        count >= 30 && bad == 0,
        format!(
            "{count} extended-model instances, {bad} with optimal cost above feasible; mean idle ratio optimal {:.3} feasible {:.3} (informational)",
            mean(ratio_opt),
            mean(ratio_feas)
        ),
    )
}

fn criterion_10() -> Outcome {
    let g = HardwareGraph::grid(8, 8).unwrap();
    let mut within = 0;
    let mut times = Vec::new();
    for seed in 0..10u64 {
        let inst = random_instance(&g, 8, TeamMode::Independent, seed).unwrap();
        let map = sample_error_map(&g, &NoiseParams::heron(), seed).unwrap();
        let cfg = RouteConfig {
            error_model: ErrorModel::Extended,
            timeout: Some(Duration::from_secs(300)),
            ..default_cfg()
        };
        let start = Instant::now();
        let r = solve_mqpf(&g, &map, &inst, &cfg);
        let secs = start.elapsed().as_secs_f64();
        if matches!(&r, Ok(s) if s.solver_status == "optimal") && secs <= 300.0 {
            within += 1;
        }
        times.push(secs);
    }
    let max = times.iter().cloned().fold(0.0, f64::max);
    outcome(within >= 8, format!("{within}/10 instances optimal within 300 s (slowest {max:.2} s)"))
}

fn criterion_11(cases: &[Case], solved: &[Solved]) -> Outcome {
    let mut bad = Vec::new();
    let mut single_team = 0;
    for s in solved {
        let c = &cases[s.case];
        let n = c.g.node_count();
        let lb = lower_bound_dijkstra(&c.g, &c.inst);
        let mut ok = lb <= s.sol.depth && s.sol.depth <= n * n;
        if c.inst.team_count() == 1 {
            single_team += 1;
            ok &= s.sol.depth <= c.inst.qubit_count() + n - 1;
        }
        if !ok {
            bad.push(format!("{} #{}: lb {lb} depth {}", c.graph, s.case, s.sol.depth));
        }
    }
    outcome(
        bad.is_empty(),
        format!("{} instances ({single_team} single-team), {} violations {}", solved.len(), bad.len(), bad.first().cloned().unwrap_or_default()),
    )
}

/// Criteria that cannot hold as stated; they print FAIL without failing
/// the run. See README "Known deviations".
const KNOWN_UNATTAINABLE: &[usize] = &[3];

fn main() -> ExitCode {
    let started = Instant::now();
    let mut results: Vec<(usize, &str, Outcome, f64)> = Vec::new();
    let mut timed = |id: usize, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        let secs = t.elapsed().as_secs_f64();
        println!("criterion {id:>2} {:<4} {name}: {} [{secs:.1} s]", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((id, name, o, secs));
    };

    let cases = oracle_cases();
    let mut solved = Vec::new();
    let mut extra = Vec::new();
    timed(1, "oracle depth equivalence", &mut || criterion_1(&cases, &mut solved));
    timed(2, "oracle cost equivalence", &mut || criterion_2(&mut extra));
    timed(3, "two-team crossing instance depth", &mut || criterion_3(&mut extra));
    let all: Vec<(&Case, &RoutingSolution)> =
        solved.iter().map(|s| (&cases[s.case], &s.sol)).chain(extra.iter().map(|(c, s)| (c, s))).collect();
    timed(4, "schedule validity", &mut || criterion_4(&all));
    timed(5, "trimming soundness", &mut || criterion_5(&cases, &solved));
    timed(6, "presolve soundness and team monotonicity", &mut || criterion_6(&cases, &solved));
    timed(7, "error arithmetic", &mut criterion_7);
    timed(8, "mode dominance", &mut criterion_8);
    timed(9, "optimal vs feasible cost at equal depth", &mut criterion_9);
    timed(10, "8x8 grid performance", &mut criterion_10);
    timed(11, "bound sanity", &mut || criterion_11(&cases, &solved));

    println!("\nacceptance summary ({:.1} s):", started.elapsed().as_secs_f64());
    let mut unexpected = 0;
    for (id, name, o, _) in &results {
        let known = KNOWN_UNATTAINABLE.contains(id);
        let tag = match (o.pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known, documented)",
            (false, false) => "FAIL",
        };
        println!("  {id:>2}. {name}: {tag}");
        if !o.pass && !known {
            unexpected += 1;
        }
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
