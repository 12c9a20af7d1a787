//! Iterative deepening over the SWAP depth, path decoding, schedule
//! validation and error metrics.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::bilp::{build_model, BilpModel, VarKind};
use crate::error::{Error, Result};
use crate::graph::HardwareGraph;
use crate::instance::MqpfInstance;
use crate::noise::{accumulated_error, movement_costs, CostTable, ErrorMap, ErrorModel};
use crate::solver::{solve, SolveMode, SolveResult, SolveStatus, SolverConfig};
use crate::texpand::{expand, trim, TimeExpandedGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Presolve {
    None,
    Dijkstra,
    SingleTeam,
}

impl FromStr for Presolve {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "none" => Ok(Presolve::None),
            "dijkstra" => Ok(Presolve::Dijkstra),
            "single_team" | "single" => Ok(Presolve::SingleTeam),
            other => Err(Error::InvalidArgument(format!("unknown presolve `{other}`"))),
        }
    }
}

impl fmt::Display for Presolve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Presolve::None => "none",
            Presolve::Dijkstra => "dijkstra",
            Presolve::SingleTeam => "single_team",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouteConfig {
    pub solver: SolverConfig,
    pub error_model: ErrorModel,
    /// Extra timesteps beyond the optimal depth for the final solve.
    pub depth_slack: usize,
    pub presolve: Presolve,
    /// Wall-clock budget for the whole instance, all depths included.
    pub timeout: Option<Duration>,
    /// Drop unreachable time-expanded variables before building.
    pub trim: bool,
}

impl Default for RouteConfig {
    fn default() -> Self {
        RouteConfig {
            solver: SolverConfig::default(),
            error_model: ErrorModel::Simple,
            depth_slack: 0,
            presolve: Presolve::Dijkstra,
            timeout: None,
            trim: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub presolve_ms: f64,
    pub build_ms: f64,
    pub solve_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingSolution {
    pub depth: usize,
    /// Smallest feasible depth; differs from `depth` only with slack.
    pub optimal_depth: usize,
    pub lower_bound: usize,
    pub error_model: ErrorModel,
    /// Team of each abstract qubit; qubits are ordered team by team and by
    /// source node within a team.
    pub teams: Vec<usize>,
    /// `paths[a][t]` is the node of qubit `a` after `t` timesteps.
    pub paths: Vec<Vec<usize>>,
    /// Swapped edges `(lo, hi)` per timestep.
    pub schedule: Vec<Vec<(usize, usize)>>,
    pub objective: f64,
    pub cost: f64,
    pub error: f64,
    pub fidelity: f64,
    pub swap_count: usize,
    pub swap_cost: f64,
    pub idle_cost: f64,
    pub idle_ratio: Option<f64>,
    pub sum_of_arrival_times: usize,
    pub solver_status: String,
    pub gap: Option<f64>,
    pub bilp_vars: usize,
    pub bilp_rows: usize,
    pub iterations: usize,
    pub timings: Timings,
}

impl RoutingSolution {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub swap_cost: f64,
    pub idle_cost: f64,
    pub cost: f64,
    pub error: f64,
    pub fidelity: f64,
    pub swap_error: f64,
    pub idle_error: f64,
    /// Absent for the simple model and when no SWAP error accrues.
    pub idle_ratio: Option<f64>,
    pub swap_count: usize,
    pub sum_of_arrival_times: usize,
}

/// Largest hop distance from any qubit to the nearest destination of its
/// own team. Never exceeds the optimal depth.
pub fn lower_bound_dijkstra(g: &HardwareGraph, inst: &MqpfInstance) -> usize {
    inst.teams
        .iter()
        .flat_map(|team| {
            let dist = g.multi_source_distances(&team.dests);
            team.sources.iter().map(move |&s| dist[s].unwrap_or(usize::MAX)).collect::<Vec<_>>()
        })
        .max()
        .unwrap_or(0)
}

/// Optimal depth when every qubit joins a single team owning all sources
/// and destinations. Never exceeds the optimal depth of `inst`.
pub fn lower_bound_single_team(g: &HardwareGraph, inst: &MqpfInstance, cfg: &RouteConfig) -> Result<usize> {
    inst.check(g)?;
    let deadline = cfg.timeout.map(|t| Instant::now() + t);
    single_team_depth(g, inst, cfg.trim, deadline, &mut Timings::default())
}

fn zero_costs(g: &HardwareGraph) -> Result<CostTable> {
    CostTable::from_parts(ErrorModel::Simple, g.edges().to_vec(), vec![[0.0; 2]; g.edges().len()], vec![0.0; g.node_count()])
}

fn single_team_depth(
    g: &HardwareGraph,
    inst: &MqpfInstance,
    trimmed: bool,
    deadline: Option<Instant>,
    timings: &mut Timings,
) -> Result<usize> {
    let relaxed = inst.single_team_relaxation();
    let costs = zero_costs(g)?;
    let solver = SolverConfig::new(SolveMode::FeasibleFirst);
    let start = lower_bound_dijkstra(g, &relaxed);
    let cap = depth_cap(g);
    let started = Instant::now();
    for depth in start..=cap {
        if attempt(g, &costs, &relaxed, depth, trimmed, &solver, deadline, timings, started)?.is_some() {
            return Ok(depth);
        }
    }
    Err(Error::InfeasibleUpToCap { cap })
}

fn depth_cap(g: &HardwareGraph) -> usize {
    g.node_count() * g.node_count()
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

struct Attempt {
    teg: TimeExpandedGraph,
    model: BilpModel,
    result: SolveResult,
}

/// Builds and solves at `depth`. `Ok(None)` means infeasible.
#[allow(clippy::too_many_arguments)]
fn attempt(
    g: &HardwareGraph,
    costs: &CostTable,
    inst: &MqpfInstance,
    depth: usize,
    trimmed: bool,
    solver: &SolverConfig,
    deadline: Option<Instant>,
    timings: &mut Timings,
    clock: Instant,
) -> Result<Option<Attempt>> {
    let timed_out = |start: &Instant| Error::TimedOut { depth, elapsed_ms: start.elapsed().as_millis() };
    let remaining = match deadline {
        Some(d) => {
            let now = Instant::now();
            if now >= d {
                return Err(timed_out(&clock));
            }
            Some(d - now)
        }
        None => None,
    };
    let t0 = Instant::now();
    let teg = expand(g, inst, depth);
    let teg = if trimmed { trim(teg, g, inst) } else { teg };
    let model = build_model(&teg, inst, costs, inst.flexible)?;
    timings.build_ms += ms(t0.elapsed());
    let t1 = Instant::now();
    let cfg = solver.clone().with_deadline(match (remaining, solver.deadline) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    });
    let result = solve(&model, &cfg);
    timings.solve_ms += ms(t1.elapsed());
    match result.status {
        SolveStatus::DeadlineExceeded => Err(timed_out(&clock)),
        SolveStatus::Infeasible => Ok(None),
        _ => Ok(Some(Attempt { teg, model, result })),
    }
}

/// The program `solve_mqpf` builds at `depth`, e.g. for LP export.
pub fn model_at_depth(
    g: &HardwareGraph,
    map: &ErrorMap,
    inst: &MqpfInstance,
    depth: usize,
    cfg: &RouteConfig,
) -> Result<BilpModel> {
    inst.check(g)?;
    map.check_matches(g)?;
    let costs = movement_costs(map, cfg.error_model)?;
    let teg = expand(g, inst, depth);
    let teg = if cfg.trim { trim(teg, g, inst) } else { teg };
    build_model(&teg, inst, &costs, inst.flexible)
}

/// Finds the optimal SWAP depth by iterative deepening from the selected
/// lower bound, then returns the cheapest schedule at that depth plus
/// `depth_slack`.
pub fn solve_mqpf(g: &HardwareGraph, map: &ErrorMap, inst: &MqpfInstance, cfg: &RouteConfig) -> Result<RoutingSolution> {
    let start = Instant::now();
    inst.check(g)?;
    map.check_matches(g)?;
    let costs = movement_costs(map, cfg.error_model)?;
    let deadline = cfg.timeout.map(|t| start + t);
    let mut timings = Timings::default();
    
    let lower_bound = match cfg.presolve {
        Presolve::None => 0,
        Presolve::Dijkstra => lower_bound_dijkstra(g, inst),
        Presolve::SingleTeam => single_team_depth(g, inst, cfg.trim, deadline, &mut timings)?,
    };
    timings.presolve_ms = ms(start.elapsed());
    timings.build_ms = 0.0;
    timings.solve_ms = 0.0;

    let cap = depth_cap(g);
    let mut depth = lower_bound;
    let mut iterations = 0;
    let found = loop {
        if depth > cap {
            return Err(Error::InfeasibleUpToCap { cap });
        }
        iterations += 1;
        if let Some(a) = attempt(g, &costs, inst, depth, cfg.trim, &cfg.solver, deadline, &mut timings, start)? {
            break a;
        }
        depth += 1;
    };
    let optimal_depth = depth;
    let found = if cfg.depth_slack > 0 {
        iterations += 1;
        let slack = depth + cfg.depth_slack;
        attempt(g, &costs, inst, slack, cfg.trim, &cfg.solver, deadline, &mut timings, start)?
            .ok_or_else(|| Error::FlowDecode(format!("depth {slack} infeasible although {depth} is feasible")))?
    } else {
        found
    };

    let x = found.result.assignment.as_ref().expect("feasible result carries an assignment");
    let paths = extract_paths(x, &found.model, &found.teg, inst)?;
    let teams = qubit_teams(inst);
    let m = path_metrics(&paths, &costs)?;
    let stats = found.model.stats();
    timings.total_ms = ms(start.elapsed());
    let sol = RoutingSolution {
        depth: found.teg.depth(),
        optimal_depth,
        lower_bound,
        error_model: cfg.error_model,
        teams,
        schedule: schedule_of(&paths),
        paths,
        objective: found.result.objective.unwrap_or(0.0),
        cost: m.cost,
        error: m.error,
        fidelity: m.fidelity,
        swap_count: m.swap_count,
        swap_cost: m.swap_cost,
        idle_cost: m.idle_cost,
        idle_ratio: m.idle_ratio,
        sum_of_arrival_times: m.sum_of_arrival_times,
        solver_status: found.result.status.as_str().to_string(),
        gap: match found.result.status {
            SolveStatus::Feasible { gap } => Some(gap),
            _ => Some(0.0),
        },
        bilp_vars: stats.vars,
        bilp_rows: stats.rows,
        iterations,
        timings,
    };
    Ok(sol)
}

fn qubit_teams(inst: &MqpfInstance) -> Vec<usize> {
    inst.teams.iter().enumerate().flat_map(|(k, t)| std::iter::repeat_n(k, t.size())).collect()
}

/// Follows each team's unit flows from its sources, in ascending source
/// order, through the movement variables set in `x`.
pub fn extract_paths(x: &[bool], model: &BilpModel, teg: &TimeExpandedGraph, inst: &MqpfInstance) -> Result<Vec<Vec<usize>>> {
    if x.len() != model.var_count() {
        return Err(Error::FlowDecode(format!("assignment has {} entries, model {}", x.len(), model.var_count())));
    }
    let on = |kind: VarKind| model.ordinal(&kind).is_some_and(|v| x[v]);
    let mut by_origin: Vec<Vec<usize>> = vec![Vec::new(); teg.node_count()];
    for &(a, b) in teg.moves() {
        by_origin[a].push(b);
    }
    let mut paths = Vec::with_capacity(inst.qubit_count());
    for (k, team) in inst.teams.iter().enumerate() {
        for &s in &team.sources {
            if !on(VarKind::Source { team: k, node: s }) {
                return Err(Error::FlowDecode(format!("team {k} source {s} carries no flow")));
            }
            let mut path = vec![s];
            let mut cur = s;
            for t in 1..=teg.depth() {
                let next: Vec<usize> = by_origin[cur]
                    .iter()
                    .copied()
                    .filter(|&to| on(VarKind::Movement { team: k, t, from: cur, to }))
                    .collect();
                match next.as_slice() {
                    [to] => cur = *to,
                    _ => {
                        return Err(Error::FlowDecode(format!(
                            "team {k} leaves node {cur} at step {t} along {} movements",
                            next.len()
                        )))
                    }
                }
                path.push(cur);
            }
            if !on(VarKind::Dest { team: k, node: cur }) {
                return Err(Error::FlowDecode(format!("team {k} ends at {cur} without a destination")));
            }
            paths.push(path);
        }
    }
    Ok(paths)
}

fn schedule_of(paths: &[Vec<usize>]) -> Vec<Vec<(usize, usize)>> {
    let depth = paths.first().map_or(0, |p| p.len().saturating_sub(1));
    (1..=depth)
        .map(|t| {
            paths
                .iter()
                .filter(|p| p[t - 1] != p[t])
                .map(|p| (p[t - 1].min(p[t]), p[t - 1].max(p[t])))
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PathViolation {
    QubitCount { expected: usize, found: usize },
    PathLength { qubit: usize, expected: usize, found: usize },
    NodeOutOfRange { qubit: usize, t: usize, node: usize },
    NotAdjacent { qubit: usize, t: usize, from: usize, to: usize },
    Collision { t: usize, node: usize },
    NotASwap { qubit: usize, t: usize },
    WrongStart { team: usize },
    WrongEnd { team: usize },
}

impl fmt::Display for PathViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathViolation::QubitCount { expected, found } => write!(f, "expected {expected} paths, found {found}"),
            PathViolation::PathLength { qubit, expected, found } => {
                write!(f, "qubit {qubit}: path has {found} positions, expected {expected}")
            }
            PathViolation::NodeOutOfRange { qubit, t, node } => write!(f, "qubit {qubit} at t={t}: no node {node}"),
            PathViolation::NotAdjacent { qubit, t, from, to } => {
                write!(f, "qubit {qubit} jumps {from} -> {to} at step {t}")
            }
            PathViolation::Collision { t, node } => write!(f, "two qubits on node {node} at t={t}"),
            PathViolation::NotASwap { qubit, t } => write!(f, "move of qubit {qubit} at step {t} is not a SWAP"),
            PathViolation::WrongStart { team } => write!(f, "team {team} does not start on its sources"),
            PathViolation::WrongEnd { team } => write!(f, "team {team} does not end on its destinations"),
        }
    }
}

/// Checks a routing solution against the problem definition.
pub fn validate(g: &HardwareGraph, inst: &MqpfInstance, sol: &RoutingSolution) -> Vec<PathViolation> {
    validate_paths(g, inst, &sol.paths, sol.depth)
}

/// Checks adjacency-or-equal steps, exclusivity, swap-based movement and the
/// start and end conditions at every timestep.
pub fn validate_paths(g: &HardwareGraph, inst: &MqpfInstance, paths: &[Vec<usize>], depth: usize) -> Vec<PathViolation> {
    let mut out = Vec::new();
    let n = g.node_count();
    if paths.len() != inst.qubit_count() {
        out.push(PathViolation::QubitCount { expected: inst.qubit_count(), found: paths.len() });
        return out;
    }
    for (a, p) in paths.iter().enumerate() {
        if p.len() != depth + 1 {
            out.push(PathViolation::PathLength { qubit: a, expected: depth + 1, found: p.len() });
        }
        for (t, &v) in p.iter().enumerate() {
            if v >= n {
                out.push(PathViolation::NodeOutOfRange { qubit: a, t, node: v });
            }
        }
    }
    if !out.is_empty() {
        return out;
    }
    for t in 0..=depth {
        let mut seen = vec![false; n];
        let mut reported = vec![false; n];
        for p in paths {
            if seen[p[t]] && !reported[p[t]] {
                out.push(PathViolation::Collision { t, node: p[t] });
                reported[p[t]] = true;
            }
            seen[p[t]] = true;
        }
    }
    for t in 1..=depth {
        let mut occupant = vec![None; n];
        for (a, p) in paths.iter().enumerate() {
            occupant[p[t - 1]] = Some(a);
        }
        // nodes touched by a SWAP this step, with the partner node
        let mut partner: Vec<Option<usize>> = vec![None; n];
        for (a, p) in paths.iter().enumerate() {
            let (i, j) = (p[t - 1], p[t]);
            if i == j {
                continue;
            }
            if !g.has_edge(i, j) {
                out.push(PathViolation::NotAdjacent { qubit: a, t, from: i, to: j });
                continue;
            }
            let clash = |node: usize, other: usize| partner[node].is_some_and(|q| q != other);
            let displaced_ok = occupant[j].is_none_or(|b| paths[b][t] == i);
            if clash(i, j) || clash(j, i) || !displaced_ok {
                out.push(PathViolation::NotASwap { qubit: a, t });
            }
            partner[i] = Some(j);
            partner[j] = Some(i);
        }
    }
    let mut offset = 0;
    for (k, team) in inst.teams.iter().enumerate() {
        let members = &paths[offset..offset + team.size()];
        offset += team.size();
        let start: BTreeSet<usize> = members.iter().map(|p| p[0]).collect();
        if start != team.sources.iter().copied().collect() {
            out.push(PathViolation::WrongStart { team: k });
        }
        let end: Vec<usize> = members.iter().map(|p| p[depth]).collect();
        let end_ok = if inst.flexible {
            end.iter().all(|v| team.dests.binary_search(v).is_ok())
        } else {
            end.iter().copied().collect::<BTreeSet<_>>() == team.dests.iter().copied().collect()
        };
        if !end_ok {
            out.push(PathViolation::WrongEnd { team: k });
        }
    }
    out
}

fn path_metrics(paths: &[Vec<usize>], costs: &CostTable) -> Result<Metrics> {
    let mut swap_cost = 0.0;
    let mut idle_cost = 0.0;
    for p in paths {
        for w in p.windows(2) {
            let c = costs.movement(w[0], w[1]).ok_or(Error::MissingCost { from: w[0], to: w[1] })?;
            if w[0] == w[1] {
                idle_cost += c;
            } else {
                swap_cost += c;
            }
        }
    }
    let cost = swap_cost + idle_cost;
    let (error, _) = accumulated_error(cost);
    let (swap_error, _) = accumulated_error(swap_cost);
    let (idle_error, _) = accumulated_error(idle_cost);
    let idle_ratio = match costs.model {
        ErrorModel::Extended if swap_error > 0.0 => Some(idle_error / swap_error),
        _ => None,
    };
    let sum_of_arrival_times = paths
        .iter()
        .map(|p| {
            let last = *p.last().expect("paths are non-empty");
            p.iter().rposition(|&v| v != last).map_or(0, |i| i + 1)
        })
        .sum();
    Ok(Metrics {
        swap_cost,
        idle_cost,
        cost,
        error,
        fidelity: (-cost).exp(),
        swap_error,
        idle_error,
        idle_ratio,
        swap_count: schedule_of(paths).iter().map(Vec::len).sum(),
        sum_of_arrival_times,
    })
}

/// Recomputes the cost split and error figures from the paths alone.
pub fn metrics(sol: &RoutingSolution, map: &ErrorMap, error_model: ErrorModel) -> Result<Metrics> {
    let costs = movement_costs(map, error_model)?;
    path_metrics(&sol.paths, &costs)
}
