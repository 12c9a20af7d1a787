use std::fs;
use std::path::PathBuf;
use std::time::Duration;

use anyhow::Context;
use clap::Args;
use mqpf::instance::{load_instance, widen_destinations};
use mqpf::route::{lower_bound_dijkstra, model_at_depth};
use mqpf::{export_lp, random_instance, solve_mqpf, ErrorModel, LayoutName, MqpfInstance, Presolve, RouteConfig};
use mqpf::{SolveMode, SolverConfig, TeamMode};

use crate::common::{self, parse_from_str, parse_layout};
use crate::{Failure, EXIT_INFEASIBLE, EXIT_TIMED_OUT};

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["instance", "random"]))]
pub struct SolveArgs {
    /// Hardware layout, e.g. `grid:8x8`, `melbourne15`, `paris27`.
    #[arg(long, value_parser = parse_layout)]
    pub layout: LayoutName,
    /// Instance file (`teams`, `team <k> sources .. dests ..`, `flexible`).
    #[arg(long)]
    pub instance: Option<PathBuf>,
    /// Generate a random instance with this many abstract qubits.
    #[arg(long)]
    pub random: Option<usize>,
    #[arg(long, default_value = "independent", value_parser = parse_from_str::<TeamMode>)]
    pub team_mode: TeamMode,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Noise preset (`heron`, `melbourne-style`) or error-map file. Defaults
    /// to the preset matching the error model.
    #[arg(long)]
    pub noise: Option<String>,
    /// Seed for sampling a noise preset; defaults to `--seed`.
    #[arg(long)]
    pub noise_seed: Option<u64>,
    #[arg(long, default_value = "optimal", value_parser = parse_from_str::<SolveMode>)]
    pub mode: SolveMode,
    #[arg(long, default_value = "simple", value_parser = parse_from_str::<ErrorModel>)]
    pub error_model: ErrorModel,
    #[arg(long, default_value_t = 0)]
    pub depth_slack: usize,
    #[arg(long, default_value = "dijkstra", value_parser = parse_from_str::<Presolve>)]
    pub presolve: Presolve,
    /// Whole-instance wall-clock limit in seconds.
    #[arg(long)]
    pub timeout: Option<f64>,
    /// Let teams end on any subset of their destinations. With `--random`,
    /// each team also gets up to `--extra-dests` additional destinations.
    #[arg(long)]
    pub flexible: bool,
    #[arg(long, default_value_t = 2)]
    pub extra_dests: usize,
    /// Keep variables that cannot lie on any source-to-destination path.
    #[arg(long)]
    pub no_trim: bool,
    /// Write the program in LP format.
    #[arg(long)]
    pub export_lp: Option<PathBuf>,
    /// Only build (and export) the program at `--depth`; skip solving.
    #[arg(long)]
    pub no_solve: bool,
    /// Depth for `--no-solve`; defaults to the shortest-path lower bound.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Solution file (JSON).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn instance(args: &SolveArgs, g: &mqpf::HardwareGraph) -> Result<MqpfInstance, Failure> {
    let mut inst = match (&args.instance, args.random) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(Failure::runtime)?;
            load_instance(&text).map_err(Failure::usage)?
        }
        (None, Some(n)) => {
            let inst = random_instance(g, n, args.team_mode, args.seed).map_err(Failure::usage)?;
            if args.flexible {
                widen_destinations(g, &inst, args.extra_dests, args.seed)
            } else {
                inst
            }
        }
        (None, None) => unreachable!("clap requires a source"),
    };
    inst.flexible |= args.flexible;
    inst.check(g).map_err(Failure::usage)?;
    Ok(inst)
}

pub fn run(args: SolveArgs) -> Result<u8, Failure> {
    let g = common::graph(&args.layout)?;
    let inst = instance(&args, &g)?;
    let noise = args.noise.clone().unwrap_or_else(|| common::default_preset(args.error_model).to_string());
    let map = common::noise(&noise, &g, args.noise_seed.unwrap_or(args.seed))?;
    if let Some(t) = args.timeout {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Failure::usage(anyhow::anyhow!("--timeout must be a non-negative number of seconds")));
        }
    }
    let cfg = RouteConfig {
        solver: SolverConfig::new(args.mode).with_seed(args.seed),
        error_model: args.error_model,
        depth_slack: args.depth_slack,
        presolve: args.presolve,
        timeout: args.timeout.map(Duration::from_secs_f64),
        trim: !args.no_trim,
    };

    if args.no_solve {
        let depth = args.depth.unwrap_or_else(|| lower_bound_dijkstra(&g, &inst));
        let model = model_at_depth(&g, &map, &inst, depth, &cfg).map_err(Failure::runtime)?;
        if let Some(path) = &args.export_lp {
            fs::write(path, export_lp(&model))?;
        }
        println!("status=not_solved depth={depth} {}", model.stats());
        return Ok(0);
    }

    let sol = match solve_mqpf(&g, &map, &inst, &cfg) {
        Ok(sol) => sol,
        Err(e @ mqpf::Error::TimedOut { .. }) => {
            println!("status=timed_out");
            eprintln!("{e}");
            return Ok(EXIT_TIMED_OUT);
        }
        Err(e @ mqpf::Error::InfeasibleUpToCap { .. }) => {
            println!("status=infeasible_up_to_cap");
            eprintln!("{e}");
            return Ok(EXIT_INFEASIBLE);
        }
        Err(e) => return Err(Failure::runtime(e)),
    };
    if let Some(path) = &args.export_lp {
        let model = model_at_depth(&g, &map, &inst, sol.depth, &cfg).map_err(Failure::runtime)?;
        fs::write(path, export_lp(&model))?;
    }
    if let Some(path) = &args.out {
        fs::write(path, sol.to_json().map_err(Failure::runtime)?)?;
    }
    println!(
        "status={} depth={} optimal_depth={} swaps={} cost={:.9} error={:.9} fidelity={:.9} idle_ratio={} vars={} rows={} runtime_ms={:.1}",
        sol.solver_status,
        sol.depth,
        sol.optimal_depth,
        sol.swap_count,
        sol.cost,
        sol.error,
        sol.fidelity,
        sol.idle_ratio.map_or("-".to_string(), |r| format!("{r:.6}")),
        sol.bilp_vars,
        sol.bilp_rows,
        sol.timings.total_ms
    );
    Ok(0)
}
