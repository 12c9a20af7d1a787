use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use anyhow::anyhow;
use clap::Args;
use mqpf::route::lower_bound_dijkstra;
use mqpf::{random_instance, sample_error_map, solve_mqpf, ErrorModel, LayoutName, NoiseParams, RouteConfig};
use mqpf::{SolveMode, SolverConfig, TeamMode};
use serde::Serialize;

use crate::common::{self, parse_from_str, parse_layout};
use crate::Failure;

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long, value_parser = parse_layout)]
    pub layout: LayoutName,
    /// Qubit counts: `4..12` (inclusive), `4-12` or `4,8,12`.
    #[arg(long, value_parser = parse_qubits)]
    pub qubits: QubitList,
    /// Random instances per qubit count.
    #[arg(long, default_value_t = 10)]
    pub instances: usize,
    #[arg(long, default_value = "independent", value_parser = parse_from_str::<TeamMode>)]
    pub team_mode: TeamMode,
    /// Comma-separated solver modes.
    #[arg(long, default_value = "optimal,near-optimal,feasible", value_delimiter = ',', value_parser = parse_from_str::<SolveMode>)]
    pub modes: Vec<SolveMode>,
    #[arg(long, default_value = "simple", value_parser = parse_from_str::<ErrorModel>)]
    pub error_model: ErrorModel,
    /// Per-solve wall-clock limit in seconds.
    #[arg(long, default_value_t = 3600.0)]
    pub timeout: f64,
    /// Noise preset; defaults to the one matching the error model.
    #[arg(long)]
    pub noise_preset: Option<String>,
    /// Base seed; instance `i` with `q` qubits uses `seed + 1000 q + i`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// CSV output; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct QubitList(Vec<usize>);

fn parse_qubits(s: &str) -> Result<QubitList, String> {
    let num = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("bad qubit count `{x}`: {e}"));
    let list: Vec<usize> = if let Some((a, b)) = s.split_once("..").or_else(|| s.split_once('-')) {
        let (a, b) = (num(a)?, num(b)?);
        if a > b {
            return Err(format!("empty qubit range `{s}`"));
        }
        (a..=b).collect()
    } else {
        s.split(',').map(num).collect::<Result<_, _>>()?
    };
    if list.contains(&0) {
        return Err("qubit counts must be positive".into());
    }
    Ok(QubitList(list))
}

#[derive(Debug, Serialize)]
struct BenchRecord {
    layout: String,
    n_qubits: usize,
    team_mode: String,
    instance_seed: u64,
    noise_seed: u64,
    solver_mode: String,
    error_model: String,
    status: String,
    depth: Option<usize>,
    swap_count: Option<usize>,
    cost: Option<f64>,
    error: Option<f64>,
    fidelity: Option<f64>,
    idle_ratio: Option<f64>,
    runtime_ms: f64,
    bilp_vars: Option<usize>,
    bilp_rows: Option<usize>,
    presolve_bound: usize,
}

struct Job {
    qubits: usize,
    instance_seed: u64,
    mode: SolveMode,
}

pub fn run(args: BenchArgs) -> Result<u8, Failure> {
    let g = common::graph(&args.layout)?;
    let qubits = &args.qubits.0;
    if let Some(&q) = qubits.iter().find(|&&q| q > g.node_count()) {
        return Err(Failure::usage(anyhow!("{q} qubits do not fit on {} with {} nodes", args.layout, g.node_count())));
    }
    if !(args.timeout >= 0.0 && args.timeout.is_finite()) {
        return Err(Failure::usage(anyhow!("--timeout must be a non-negative number of seconds")));
    }
    let preset = args.noise_preset.clone().unwrap_or_else(|| common::default_preset(args.error_model).into());
    let params = NoiseParams::preset(&preset).map_err(Failure::usage)?;

    let mut jobs = Vec::new();
    for &q in qubits {
        for i in 0..args.instances as u64 {
            for &mode in &args.modes {
                jobs.push(Job { qubits: q, instance_seed: args.seed + 1000 * q as u64 + i, mode });
            }
        }
    }

    let sink: Box<dyn Write + Send> = match &args.out {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout()),
    };
    let mut writer = csv::Writer::from_writer(sink);

    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<(usize, Result<BenchRecord, Failure>)>();
    let job = |j: &Job| -> Result<BenchRecord, Failure> {
        let inst = random_instance(&g, j.qubits, args.team_mode, j.instance_seed).map_err(Failure::runtime)?;
        let map = sample_error_map(&g, &params, j.instance_seed).map_err(Failure::runtime)?;
        let cfg = RouteConfig {
            solver: SolverConfig::new(j.mode).with_seed(j.instance_seed),
            error_model: args.error_model,
            timeout: Some(Duration::from_secs_f64(args.timeout)),
            ..RouteConfig::default()
        };
        let mut rec = BenchRecord {
            layout: args.layout.to_string(),
            n_qubits: j.qubits,
            team_mode: args.team_mode.to_string(),
            instance_seed: j.instance_seed,
            noise_seed: j.instance_seed,
            solver_mode: j.mode.name().into(),
            error_model: args.error_model.to_string(),
            status: String::new(),
            depth: None,
            swap_count: None,
            cost: None,
            error: None,
            fidelity: None,
            idle_ratio: None,
            runtime_ms: 0.0,
            bilp_vars: None,
            bilp_rows: None,
            presolve_bound: lower_bound_dijkstra(&g, &inst),
        };
        let start = std::time::Instant::now();
        match solve_mqpf(&g, &map, &inst, &cfg) {
            Ok(sol) => {
                rec.status = sol.solver_status.clone();
                rec.depth = Some(sol.depth);
                rec.swap_count = Some(sol.swap_count);
                rec.cost = Some(sol.cost);
                rec.error = Some(sol.error);
                rec.fidelity = Some(sol.fidelity);
                rec.idle_ratio = sol.idle_ratio;
                rec.runtime_ms = sol.timings.total_ms;
                rec.bilp_vars = Some(sol.bilp_vars);
                rec.bilp_rows = Some(sol.bilp_rows);
            }
            Err(mqpf::Error::TimedOut { .. }) => rec.status = "timed_out".into(),
            Err(mqpf::Error::InfeasibleUpToCap { .. }) => rec.status = "infeasible_up_to_cap".into(),
            Err(e) => return Err(Failure::runtime(e)),
        }
        if rec.runtime_ms == 0.0 {
            rec.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
        }
        Ok(rec)
    };

    let mut first_err = None;
    thread::scope(|s| {
        for _ in 0..args.jobs.max(1) {
            let tx = tx.clone();
            let (next, jobs, job) = (&next, &jobs, &job);
            s.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= jobs.len() || tx.send((i, job(&jobs[i]))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        // rows are written in job order whatever the completion order
        let mut pending: Vec<Option<Result<BenchRecord, Failure>>> = (0..jobs.len()).map(|_| None).collect();
        let mut emitted = 0;
        for (i, r) in rx {
            pending[i] = Some(r);
            while emitted < jobs.len() {
                let Some(r) = pending[emitted].take() else { break };
                emitted += 1;
                match r {
                    Ok(rec) if first_err.is_none() => {
                        if let Err(e) = writer.serialize(&rec).and_then(|_| writer.flush().map_err(Into::into)) {
                            first_err = Some(Failure::runtime(e));
                            next.store(jobs.len(), Ordering::Relaxed);
                        }
                    }
                    Ok(_) => {}
                    Err(e) => {
                        first_err.get_or_insert(e);
                        next.store(jobs.len(), Ordering::Relaxed);
                    }
                }
            }
        }
    });
    match first_err {
        Some(e) => Err(e),
        None => Ok(0),
    }
}
