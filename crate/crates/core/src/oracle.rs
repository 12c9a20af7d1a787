//! Brute-force ground truth for tiny instances.
//!
//! A configuration records which team (or nobody) occupies each node. One
//! timestep applies a matching of the hardware graph as simultaneous SWAPs;
//! the empty matching is the all-idle step. Nothing here touches the time
//! expansion or the integer program.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::graph::HardwareGraph;
use crate::instance::MqpfInstance;
use crate::noise::{movement_costs, CostTable, ErrorMap, ErrorModel};

/// Hard limit on the node count for configuration search.
pub const MAX_BFS_NODES: usize = 14;
/// Hard limits for exhaustive schedule enumeration.
pub const MAX_ENUM_NODES: usize = 8;
pub const MAX_ENUM_DEPTH: usize = 4;

const EMPTY: u64 = 0;
const BITS: usize = 4;

/// Every matching of `g` including the empty one, edges in canonical order.
pub fn matchings(g: &HardwareGraph) -> Vec<Vec<(usize, usize)>> {
    fn rec(edges: &[(usize, usize)], from: usize, used: &mut [bool], cur: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        for i in from..edges.len() {
            let (a, b) = edges[i];
            if used[a] || used[b] {
                continue;
            }
            used[a] = true;
            used[b] = true;
            cur.push((a, b));
            out.push(cur.clone());
            rec(edges, i + 1, used, cur, out);
            cur.pop();
            used[a] = false;
            used[b] = false;
        }
    }
    let mut out = vec![Vec::new()];
    rec(g.edges(), 0, &mut vec![false; g.node_count()], &mut Vec::new(), &mut out);
    out
}

fn get(state: u64, v: usize) -> u64 {
    (state >> (BITS * v)) & 0xF
}

fn swap(state: u64, a: usize, b: usize) -> u64 {
    let (x, y) = (get(state, a), get(state, b));
    let cleared = state & !(0xF << (BITS * a)) & !(0xF << (BITS * b));
    cleared | (y << (BITS * a)) | (x << (BITS * b))
}

struct Setup {
    start: u64,
    /// Per node, bitmask of teams accepting it as a destination.
    accepts: Vec<u32>,
    nodes: usize,
}

impl Setup {
    fn new(g: &HardwareGraph, inst: &MqpfInstance, limit: usize) -> Result<Self> {
        if g.node_count() > limit {
            return Err(Error::OracleGuard(format!("{} nodes exceed the limit of {limit}", g.node_count())));
        }
        if inst.team_count() >= 15 {
            return Err(Error::OracleGuard(format!("{} teams exceed the limit of 14", inst.team_count())));
        }
        inst.check(g)?;
        let mut start = EMPTY;
        let mut accepts = vec![0u32; g.node_count()];
        for (k, team) in inst.teams.iter().enumerate() {
            for &s in &team.sources {
                start |= (k as u64 + 1) << (BITS * s);
            }
            for &d in &team.dests {
                accepts[d] |= 1 << k;
            }
        }
        Ok(Setup { start, accepts, nodes: g.node_count() })
    }

    /// Every team token sits on one of its team's destinations. Counts then
    /// match automatically in strict mode, where `|D_k| = |S_k|`.
    fn is_goal(&self, state: u64) -> bool {
        (0..self.nodes).all(|v| {
            let c = get(state, v);
            c == EMPTY || self.accepts[v] >> (c - 1) & 1 == 1
        })
    }
}

/// Minimum number of parallel-SWAP steps, by breadth-first search over
/// team-coloured configurations.
pub fn bfs_optimal_depth(g: &HardwareGraph, inst: &MqpfInstance) -> Result<usize> {
    let setup = Setup::new(g, inst, MAX_BFS_NODES)?;
    let moves = matchings(g);
    let mut seen = HashSet::from([setup.start]);
    let mut frontier = vec![setup.start];
    let mut depth = 0;
    loop {
        if frontier.iter().any(|&s| setup.is_goal(s)) {
            return Ok(depth);
        }
        let mut next = Vec::new();
        for &s in &frontier {
            for m in &moves[1..] {
                let t = m.iter().fold(s, |acc, &(a, b)| swap(acc, a, b));
                if seen.insert(t) {
                    next.push(t);
                }
            }
        }
        if next.is_empty() {
            return Err(Error::OracleGuard("goal unreachable from the start configuration".into()));
        }
        frontier = next;
        depth += 1;
    }
}

/// Minimum accumulated cost over all `depth`-step matching sequences that
/// end in a goal configuration; `None` when no such sequence exists.
pub fn exhaustive_min_cost(
    g: &HardwareGraph,
    map: &ErrorMap,
    inst: &MqpfInstance,
    depth: usize,
    error_model: ErrorModel,
) -> Result<Option<f64>> {
    if depth > MAX_ENUM_DEPTH {
        return Err(Error::OracleGuard(format!("depth {depth} exceeds the limit of {MAX_ENUM_DEPTH}")));
    }
    let setup = Setup::new(g, inst, MAX_ENUM_NODES)?;
    map.check_matches(g)?;
    let costs = movement_costs(map, error_model)?;
    let moves = matchings(g);
    let mut memo = HashMap::new();
    Ok(best_from(&setup, &costs, &moves, setup.start, depth, &mut memo))
}

fn step_cost(costs: &CostTable, state: u64, m: &[(usize, usize)], nodes: usize) -> f64 {
    let mut moved = 0u32;
    let mut total = 0.0;
    for &(a, b) in m {
        moved |= 1 << a | 1 << b;
        if get(state, a) != EMPTY {
            total += costs.movement(a, b).expect("matching edge has a cost");
        }
        if get(state, b) != EMPTY {
            total += costs.movement(b, a).expect("matching edge has a cost");
        }
    }
    for v in 0..nodes {
        if moved >> v & 1 == 0 && get(state, v) != EMPTY {
            total += costs.idle(v);
        }
    }
    total
}

fn best_from(
    setup: &Setup,
    costs: &CostTable,
    moves: &[Vec<(usize, usize)>],
    state: u64,
    left: usize,
    memo: &mut HashMap<(u64, usize), Option<f64>>,
) -> Option<f64> {
    if left == 0 {
        return setup.is_goal(state).then_some(0.0);
    }
    if let Some(&v) = memo.get(&(state, left)) {
        return v;
    }
    let mut best: Option<f64> = None;
    for m in moves {
        let next = m.iter().fold(state, |acc, &(a, b)| swap(acc, a, b));
        if let Some(rest) = best_from(setup, costs, moves, next, left - 1, memo) {
            let c = step_cost(costs, state, m, setup.nodes) + rest;
            if best.is_none_or(|b| c < b) {
                best = Some(c);
            }
        }
    }
    memo.insert((state, left), best);
    best
}
