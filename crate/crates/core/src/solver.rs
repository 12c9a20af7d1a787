//! Built-in branch-and-bound backend and LP-format export.
//!
//! The search is a deterministic depth-first branch-and-bound over binary
//! variables. Every node propagates the unit-coefficient rows to a fixpoint
//! before bounding. For models generated from a time expansion, the bound
//! is the sum over teams of a min-cost flow through the team's own layered
//! network (node capacity one per layer), which drops only the cross-team
//! and swap rows and therefore never exceeds the subproblem optimum. Branching
//! picks a variable carried by the relaxed flow inside the first violated row.
//! Hand-built models without that structure fall back to the cost of the
//! variables already fixed to one.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use crate::bilp::{BilpModel, Relation, VarKind};

const PRUNE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolveMode {
    Optimal,
    NearOptimal { rel_gap: f64, abs_gap: f64 },
    FeasibleFirst,
}

impl SolveMode {
    pub fn near_optimal() -> Self {
        SolveMode::NearOptimal { rel_gap: 0.08, abs_gap: 0.08 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SolveMode::Optimal => "optimal",
            SolveMode::NearOptimal { .. } => "near-optimal",
            SolveMode::FeasibleFirst => "feasible",
        }
    }
}

impl std::str::FromStr for SolveMode {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "optimal" => Ok(SolveMode::Optimal),
            "near-optimal" | "near" => Ok(SolveMode::near_optimal()),
            "feasible" | "feasible-first" => Ok(SolveMode::FeasibleFirst),
            other => Err(crate::Error::InvalidArgument(format!("unknown solver mode `{other}`"))),
        }
    }
}

impl fmt::Display for SolveMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub mode: SolveMode,
    /// Wall-clock budget for one call; `None` runs to completion.
    pub deadline: Option<Duration>,
    /// Accepted for interface stability; the search is deterministic.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { mode: SolveMode::Optimal, deadline: None, seed: 0 }
    }
}

impl SolverConfig {
    pub fn new(mode: SolveMode) -> Self {
        SolverConfig { mode, ..Default::default() }
    }

    pub fn with_deadline(mut self, deadline: Option<Duration>) -> Self {
        self.deadline = deadline;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolveStatus {
    Optimal,
    Feasible { gap: f64 },
    Infeasible,
    DeadlineExceeded,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Feasible { .. } => "feasible",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::DeadlineExceeded => "deadline_exceeded",
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub assignment: Option<Vec<bool>>,
    pub objective: Option<f64>,
    /// Proven lower bound; `+inf` when infeasible.
    pub best_bound: f64,
    pub nodes: u64,
    pub runtime: Duration,
}

impl SolveResult {
    /// Relative gap between the incumbent and the proven bound.
    pub fn gap(&self) -> Option<f64> {
        self.objective.map(|o| ((o - self.best_bound) / o.max(1e-12)).max(0.0))
    }
}

pub fn solve(model: &BilpModel, cfg: &SolverConfig) -> SolveResult {
    let start = Instant::now();
    let mut search = Search::new(model, cfg, start);
    let mut result = search.run();
    result.runtime = start.elapsed();
    result
}

#[derive(PartialEq)]
struct HeapItem(f64, u32);

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const NO_VAR: u32 = u32::MAX;

/// One team's layered network. Nodes are numbered in topological order:
/// team source, layer 0, then `in`/`out` copies for inner layers, the last
/// layer, and finally the team sink.
struct TeamNet {
    node_count: usize,
    from: Vec<u32>,
    to: Vec<u32>,
    var: Vec<u32>,
    cost: Vec<f64>,
    out: Vec<Vec<u32>>,
    inc: Vec<Vec<u32>>,
    demand: usize,
    big_m: f64,
    vars: Vec<usize>,
}

#[derive(Clone)]
struct TeamFlow {
    feasible: bool,
    cost: f64,
    used: Vec<usize>,
}

#[derive(Default)]
struct FlowScratch {
    pi: Vec<f64>,
    dist: Vec<f64>,
    pred: Vec<u32>,
    done: Vec<bool>,
    flow: Vec<bool>,
    heap: BinaryHeap<HeapItem>,
}

impl TeamNet {
    fn usable(&self, a: usize, val: &[i8]) -> bool {
        let v = self.var[a];
        v == NO_VAR || val[v as usize] != 0
    }

    fn arc_cost(&self, a: usize, val: &[i8]) -> f64 {
        let v = self.var[a];
        if v != NO_VAR && val[v as usize] == 1 {
            self.cost[a] - self.big_m
        } else {
            self.cost[a]
        }
    }

    /// Min-cost flow of `demand` units honoring fixings; forced arcs carry
    /// a large negative cost and are checked afterwards.
    fn solve(&self, val: &[i8], s: &mut FlowScratch) -> TeamFlow {
        let n = self.node_count;
        let sink = n - 1;
        let infeasible = TeamFlow { feasible: false, cost: f64::INFINITY, used: Vec::new() };
        s.pi.clear();
        s.pi.resize(n, f64::INFINITY);
        s.pred.clear();
        s.pred.resize(n, NO_VAR);
        s.flow.clear();
        s.flow.resize(self.from.len(), false);
        s.pi[0] = 0.0;
        for u in 0..n {
            let du = s.pi[u];
            if du == f64::INFINITY {
                continue;
            }
            for &a in &self.out[u] {
                let a = a as usize;
                if !self.usable(a, val) {
                    continue;
                }
                let w = self.to[a] as usize;
                let nd = du + self.arc_cost(a, val);
                if nd < s.pi[w] {
                    s.pi[w] = nd;
                    s.pred[w] = a as u32;
                }
            }
        }
        if self.demand > 0 {
            if s.pi[sink] == f64::INFINITY {
                return infeasible;
            }
            self.augment(s);
        }
        for _ in 1..self.demand {
            if !self.dijkstra(val, s) {
                return infeasible;
            }
            self.augment(s);
        }
        let mut cost = 0.0;
        let mut used = Vec::new();
        for a in 0..self.from.len() {
            let v = self.var[a];
            if v == NO_VAR {
                continue;
            }
            if s.flow[a] {
                cost += self.cost[a];
                used.push(v as usize);
            } else if val[v as usize] == 1 {
                return infeasible;
            }
        }
        used.sort_unstable();
        TeamFlow { feasible: true, cost, used }
    }

    fn augment(&self, s: &mut FlowScratch) {
        let mut w = self.node_count - 1;
        while w != 0 {
            let a = s.pred[w] as usize;
            if self.to[a] as usize == w {
                s.flow[a] = true;
                w = self.from[a] as usize;
            } else {
                s.flow[a] = false;
                w = self.to[a] as usize;
            }
        }
    }

    /// Shortest augmenting path under reduced costs; updates potentials.
    fn dijkstra(&self, val: &[i8], s: &mut FlowScratch) -> bool {
        let n = self.node_count;
        let sink = n - 1;
        s.dist.clear();
        s.dist.resize(n, f64::INFINITY);
        s.done.clear();
        s.done.resize(n, false);
        s.heap.clear();
        s.dist[0] = 0.0;
        s.heap.push(HeapItem(0.0, 0));
        while let Some(HeapItem(d, u)) = s.heap.pop() {
            let u = u as usize;
            if s.done[u] {
                continue;
            }
            s.done[u] = true;
            if u == sink {
                break;
            }
            for &a in &self.out[u] {
                let a = a as usize;
                if s.flow[a] || !self.usable(a, val) {
                    continue;
                }
                let w = self.to[a] as usize;
                if s.pi[w] == f64::INFINITY || s.done[w] {
                    continue;
                }
                let nd = d + (self.arc_cost(a, val) + s.pi[u] - s.pi[w]).max(0.0);
                if nd < s.dist[w] {
                    s.dist[w] = nd;
                    s.pred[w] = a as u32;
                    s.heap.push(HeapItem(nd, w as u32));
                }
            }
            for &a in &self.inc[u] {
                let a = a as usize;
                if !s.flow[a] {
                    continue;
                }
                let w = self.from[a] as usize;
                if s.done[w] {
                    continue;
                }
                let nd = d + (-self.arc_cost(a, val) + s.pi[u] - s.pi[w]).max(0.0);
                if nd < s.dist[w] {
                    s.dist[w] = nd;
                    s.pred[w] = a as u32;
                    s.heap.push(HeapItem(nd, w as u32));
                }
            }
        }
        let dt = s.dist[sink];
        if dt == f64::INFINITY {
            return false;
        }
        for v in 0..n {
            if s.pi[v] != f64::INFINITY {
                s.pi[v] += s.dist[v].min(dt);
            }
        }
        true
    }
}

fn build_nets(model: &BilpModel) -> Option<(Vec<TeamNet>, Vec<(u32, u32)>)> {
    let shape = model.shape()?;
    let (depth, n, teams) = (shape.depth, shape.node_count, shape.team_count);
    let node = |t: usize, v: usize, out_side: bool| -> usize {
        if t == 0 {
            1 + v
        } else {
            let base = 1 + n + (t - 1) * 2 * n;
            if t < depth && out_side {
                base + n + v
            } else {
                base + v
            }
        }
    };
    let node_count = if depth == 0 { 2 + n } else { 2 + n + (depth - 1) * 2 * n + n };
    let mut nets: Vec<TeamNet> = (0..teams)
        .map(|_| TeamNet {
            node_count,
            from: Vec::new(),
            to: Vec::new(),
            var: Vec::new(),
            cost: Vec::new(),
            out: vec![Vec::new(); node_count],
            inc: vec![Vec::new(); node_count],
            demand: 0,
            big_m: 1.0,
            vars: Vec::new(),
        })
        .collect();
    let mut var_arc = vec![(0u32, 0u32); model.var_count()];
    let push = |net: &mut TeamNet, a: usize, b: usize, var: u32, cost: f64| -> u32 {
        let id = net.from.len() as u32;
        net.from.push(a as u32);
        net.to.push(b as u32);
        net.var.push(var);
        net.cost.push(cost);
        net.out[a].push(id);
        net.inc[b].push(id);
        id
    };
    for net in nets.iter_mut() {
        for t in 1..depth {
            for v in 0..n {
                push(net, node(t, v, false), node(t, v, true), NO_VAR, 0.0);
            }
        }
    }
    let sink = node_count - 1;
    for (ord, kind) in model.kinds().iter().enumerate() {
        let k = kind.team();
        let net = &mut nets[k];
        let (a, b) = match *kind {
            VarKind::Source { node: v, .. } => {
                net.demand += 1;
                (0, node(0, v, true))
            }
            VarKind::Movement { t, from, to, .. } => (node(t - 1, from, true), node(t, to, false)),
            VarKind::Dest { node: v, .. } => (node(depth, v, true), sink),
        };
        let c = model.costs()[ord];
        net.big_m += c;
        net.vars.push(ord);
        var_arc[ord] = (k as u32, push(net, a, b, ord as u32, c));
    }
    Some((nets, var_arc))
}

struct Search<'a> {
    model: &'a BilpModel,
    mode: SolveMode,
    deadline: Option<Instant>,
    col: Vec<Vec<(u32, i8)>>,
    row_weight: Vec<usize>,
    val: Vec<i8>,
    p1: Vec<i32>,
    pf: Vec<i32>,
    n1: Vec<i32>,
    nf: Vec<i32>,
    trail: Vec<usize>,
    queue: Vec<usize>,
    queued: Vec<bool>,
    // flow bound state
    nets: Vec<TeamNet>,
    var_team: Vec<u32>,
    flows: Vec<TeamFlow>,
    in_flow: Vec<bool>,
    dirty: Vec<bool>,
    flow_trail: Vec<(usize, TeamFlow)>,
    scratch: FlowScratch,
    act: Vec<i32>,
    touched: Vec<bool>,
    // incumbent
    best: Option<(f64, Vec<bool>)>,
    gap_pruned: f64,
    nodes: u64,
    timed_out: bool,
}

struct Frame {
    trail: usize,
    flow_trail: usize,
    var: usize,
    other: Option<(bool, f64)>,
}

impl<'a> Search<'a> {
    fn new(model: &'a BilpModel, cfg: &SolverConfig, start: Instant) -> Self {
        let nv = model.var_count();
        let nr = model.rows().len();
        let mut col = vec![Vec::new(); nv];
        let (mut pf, mut nf) = (vec![0; nr], vec![0; nr]);
        for (r, row) in model.rows().iter().enumerate() {
            for &(v, c) in &row.terms {
                col[v].push((r as u32, c));
                if c > 0 {
                    pf[r] += 1;
                } else {
                    nf[r] += 1;
                }
            }
        }
        let row_weight = col.iter().map(|c| c.len()).collect();
        let (nets, var_arc) = build_nets(model).unwrap_or_default();
        let flows = nets.iter().map(|_| TeamFlow { feasible: true, cost: 0.0, used: Vec::new() }).collect();
        Search {
            model,
            mode: cfg.mode,
            deadline: cfg.deadline.map(|d| start + d),
            col,
            row_weight,
            val: vec![-1; nv],
            p1: vec![0; nr],
            pf,
            n1: vec![0; nr],
            nf,
            trail: Vec::new(),
            queue: Vec::new(),
            queued: vec![false; nr],
            dirty: vec![true; nets.len()],
            var_team: var_arc.iter().map(|&(k, _)| k).collect(),
            nets,
            flows,
            in_flow: vec![false; nv],
            flow_trail: Vec::new(),
            scratch: FlowScratch::default(),
            act: vec![0; nr],
            touched: vec![false; nr],
            best: None,
            gap_pruned: f64::INFINITY,
            nodes: 0,
            timed_out: false,
        }
    }

    fn has_flow(&self) -> bool {
        !self.nets.is_empty()
    }

    fn assign(&mut self, v: usize, b: bool) {
        debug_assert_eq!(self.val[v], -1);
        self.val[v] = b as i8;
        self.trail.push(v);
        for &(r, c) in &self.col[v] {
            let r = r as usize;
            if c > 0 {
                self.pf[r] -= 1;
                self.p1[r] += b as i32;
            } else {
                self.nf[r] -= 1;
                self.n1[r] += b as i32;
            }
            if !self.queued[r] {
                self.queued[r] = true;
                self.queue.push(r);
            }
        }
        if self.has_flow() && self.in_flow[v] != b {
            self.dirty[self.var_team[v] as usize] = true;
        }
    }

    fn undo(&mut self, trail_mark: usize, flow_mark: usize) {
        while self.trail.len() > trail_mark {
            let v = self.trail.pop().expect("trail");
            let b = self.val[v] == 1;
            self.val[v] = -1;
            for &(r, c) in &self.col[v] {
                let r = r as usize;
                if c > 0 {
                    self.pf[r] += 1;
                    self.p1[r] -= b as i32;
                } else {
                    self.nf[r] += 1;
                    self.n1[r] -= b as i32;
                }
            }
        }
        while self.flow_trail.len() > flow_mark {
            let (k, old) = self.flow_trail.pop().expect("flow trail");
            self.set_flow(k, old);
        }
        for q in self.queue.drain(..) {
            self.queued[q] = false;
        }
        self.dirty.iter_mut().for_each(|d| *d = false);
    }

    /// Runs the queue to a fixpoint; `false` on conflict.
    fn propagate(&mut self) -> bool {
        let model = self.model;
        let mut head = 0;
        let mut ok = true;
        while head < self.queue.len() {
            let r = self.queue[head];
            head += 1;
            self.queued[r] = false;
            let row = &model.rows()[r];
            let min = self.p1[r] - self.n1[r] - self.nf[r];
            let max = self.p1[r] + self.pf[r] - self.n1[r];
            let free = self.pf[r] + self.nf[r];
            if min > row.rhs || (row.relation == Relation::Eq && max < row.rhs) {
                ok = false;
                break;
            }
            if free == 0 {
                continue;
            }
            // at the upper limit: positives off, negatives on
            let fix = if min == row.rhs {
                Some(false)
            } else if row.relation == Relation::Eq && max == row.rhs {
                Some(true)
            } else {
                None
            };
            if let Some(pos_value) = fix {
                for &(v, c) in &row.terms {
                    if self.val[v] == -1 {
                        self.assign(v, if c > 0 { pos_value } else { !pos_value });
                    }
                }
            }
        }
        for i in head..self.queue.len() {
            self.queued[self.queue[i]] = false;
        }
        self.queue.clear();
        ok
    }

    fn set_flow(&mut self, k: usize, flow: TeamFlow) {
        for &v in &self.flows[k].used {
            self.in_flow[v] = false;
        }
        for &v in &flow.used {
            self.in_flow[v] = true;
        }
        self.flows[k] = flow;
    }

    fn bound(&mut self) -> f64 {
        if !self.has_flow() {
            return self
                .model
                .costs()
                .iter()
                .zip(&self.val)
                .filter(|(_, &b)| b == 1)
                .map(|(c, _)| c)
                .sum();
        }
        for k in 0..self.nets.len() {
            if !self.dirty[k] {
                continue;
            }
            self.dirty[k] = false;
            let flow = self.nets[k].solve(&self.val, &mut self.scratch);
            let old = self.flows[k].clone();
            self.flow_trail.push((k, old));
            self.set_flow(k, flow);
        }
        let mut total = 0.0;
        for f in &self.flows {
            if !f.feasible {
                return f64::INFINITY;
            }
            total += f.cost;
        }
        total
    }

    fn relaxed(&self) -> Vec<bool> {
        if self.has_flow() {
            self.in_flow.clone()
        } else {
            self.val.iter().map(|&b| b == 1).collect()
        }
    }

    /// First violated row of the relaxed assignment.
    fn violated_row(&mut self) -> Option<usize> {
        let rows = self.model.rows();
        if self.has_flow() {
            let mut touched = Vec::new();
            for f in &self.flows {
                for &v in &f.used {
                    for &(r, c) in &self.col[v] {
                        let r = r as usize;
                        if !self.touched[r] {
                            self.touched[r] = true;
                            touched.push(r);
                        }
                        self.act[r] += c as i32;
                    }
                }
            }
            let mut best: Option<usize> = None;
            for &r in &touched {
                let activity = self.act[r];
                self.act[r] = 0;
                self.touched[r] = false;
                let row = &rows[r];
                let bad = match row.relation {
                    Relation::Le => activity > row.rhs,
                    Relation::Eq => activity != row.rhs,
                };
                if bad && best.is_none_or(|b| r < b) {
                    best = Some(r);
                }
            }
            if best.is_some() {
                return best;
            }
        }
        let x = self.relaxed();
        (0..rows.len()).find(|&r| !rows[r].satisfied(&x))
    }

    fn branch_var(&self, r: usize) -> Option<usize> {
        let terms = &self.model.rows()[r].terms;
        let pick = |flow_only: bool| {
            terms
                .iter()
                .map(|&(v, _)| v)
                .filter(|&v| self.val[v] == -1 && (!flow_only || self.in_flow[v]))
                .max_by(|&a, &b| self.row_weight[a].cmp(&self.row_weight[b]).then(b.cmp(&a)))
        };
        if self.has_flow() {
            pick(true).or_else(|| pick(false))
        } else {
            pick(false)
        }
    }

    fn prune_margin(&self, incumbent: f64) -> f64 {
        match self.mode {
            SolveMode::NearOptimal { rel_gap, abs_gap } => (rel_gap * incumbent).min(abs_gap).max(PRUNE_EPS),
            _ => PRUNE_EPS,
        }
    }

    /// Whether a subtree with lower bound `b` can be skipped.
    fn prunes(&mut self, b: f64) -> bool {
        let Some((inc, _)) = self.best else { return b == f64::INFINITY };
        if b >= inc - PRUNE_EPS {
            return true;
        }
        if b >= inc - self.prune_margin(inc) {
            self.gap_pruned = self.gap_pruned.min(b);
            return true;
        }
        false
    }

    /// Applies `var = b`, propagates and bounds. On failure the state is
    /// left dirty and the caller must undo.
    fn try_child(&mut self, var: usize, b: bool) -> Option<f64> {
        self.assign(var, b);
        if !self.propagate() {
            return None;
        }
        let bound = self.bound();
        (bound < f64::INFINITY).then_some(bound)
    }

    fn out_of_time(&mut self) -> bool {
        if let Some(d) = self.deadline {
            if Instant::now() >= d {
                self.timed_out = true;
            }
        }
        self.timed_out
    }

    fn run(&mut self) -> SolveResult {
        let nr = self.model.rows().len();
        for r in 0..nr {
            self.queued[r] = true;
            self.queue.push(r);
        }
        let mut root_bound = f64::INFINITY;
        let mut stack: Vec<Frame> = Vec::new();
        let mut at_node = false;
        if self.propagate() {
            root_bound = self.bound();
            at_node = root_bound < f64::INFINITY;
        }
        'search: loop {
            if at_node {
                if self.out_of_time() {
                    break 'search;
                }
                self.nodes += 1;
                match self.violated_row() {
                    None => {
                        let x = self.relaxed();
                        debug_assert!(self.model.is_feasible(&x));
                        let obj = self.model.objective(&x);
                        if self.best.as_ref().is_none_or(|(b, _)| obj < *b) {
                            self.best = Some((obj, x));
                        }
                        if self.mode == SolveMode::FeasibleFirst {
                            break 'search;
                        }
                        at_node = false;
                    }
                    Some(r) => match self.branch_var(r) {
                        None => at_node = false,
                        Some(var) => {
                            let (tm, fm) = (self.trail.len(), self.flow_trail.len());
                            let one = self.try_child(var, true);
                            self.undo(tm, fm);
                            let zero = self.try_child(var, false);
                            let one = one.filter(|&b| !self.prunes(b));
                            let zero_ok = zero.filter(|&b| !self.prunes(b));
                            match (zero_ok, one) {
                                (Some(b0), Some(b1)) if b0 <= b1 => {
                                    stack.push(Frame { trail: tm, flow_trail: fm, var, other: Some((true, b1)) });
                                }
                                (Some(b0), None) => {
                                    let _ = b0;
                                    stack.push(Frame { trail: tm, flow_trail: fm, var, other: None });
                                }
                                (zero_ok, Some(_)) => {
                                    self.undo(tm, fm);
                                    let again = self.try_child(var, true);
                                    debug_assert!(again.is_some());
                                    stack.push(Frame { trail: tm, flow_trail: fm, var, other: zero_ok.map(|b| (false, b)) });
                                }
                                (None, None) => {
                                    self.undo(tm, fm);
                                    at_node = false;
                                }
                            }
                        }
                    },
                }
                continue;
            }
            // backtrack
            let Some(frame) = stack.last_mut() else { break 'search };
            let (tm, fm, var, other) = (frame.trail, frame.flow_trail, frame.var, frame.other.take());
            self.undo(tm, fm);
            match other {
                Some((b, bound)) if !self.prunes(bound) => {
                    let ok = self.try_child(var, b);
                    debug_assert!(ok.is_some());
                    at_node = ok.is_some();
                    if !at_node {
                        self.undo(tm, fm);
                    }
                }
                _ => {
                    stack.pop();
                }
            }
        }

        let nodes = self.nodes;
        let best = self.best.take();
        if self.timed_out {
            let (objective, assignment) = best.map_or((None, None), |(o, x)| (Some(o), Some(x)));
            return SolveResult {
                status: SolveStatus::DeadlineExceeded,
                assignment,
                objective,
                best_bound: root_bound,
                nodes,
                runtime: Duration::ZERO,
            };
        }
        let Some((obj, x)) = best else {
            return SolveResult {
                status: SolveStatus::Infeasible,
                assignment: None,
                objective: None,
                best_bound: f64::INFINITY,
                nodes,
                runtime: Duration::ZERO,
            };
        };
        let best_bound = match self.mode {
            SolveMode::Optimal => obj,
            SolveMode::NearOptimal { .. } => self.gap_pruned.min(obj),
            SolveMode::FeasibleFirst if stack.is_empty() => obj,
            SolveMode::FeasibleFirst => root_bound.min(obj),
        };
        let gap = ((obj - best_bound) / obj.max(1e-12)).max(0.0);
        let status = if obj - best_bound <= 1e-9 { SolveStatus::Optimal } else { SolveStatus::Feasible { gap } };
        SolveResult {
            status,
            assignment: Some(x),
            objective: Some(obj),
            best_bound: if status == SolveStatus::Optimal { obj } else { best_bound },
            nodes,
            runtime: Duration::ZERO,
        }
    }
}

/// LP-format text accepted by common MILP solvers.
pub fn export_lp(model: &BilpModel) -> String {
    let names: Vec<String> = model.kinds().iter().map(VarKind::name).collect();
    let mut s = String::from("\\ binary program, ");
    let _ = writeln!(s, "{}", model.stats());
    s.push_str("Minimize\n obj:");
    if names.is_empty() {
        s.push_str(" 0");
    }
    for (i, (name, c)) in names.iter().zip(model.costs()).enumerate() {
        if i > 0 && i % 6 == 0 {
            s.push_str("\n     ");
        }
        if i == 0 {
            let _ = write!(s, " {c} {name}");
        } else {
            let _ = write!(s, " + {c} {name}");
        }
    }
    s.push_str("\nSubject To\n");
    for row in model.rows() {
        let _ = write!(s, " {}:", row.name);
        if row.terms.is_empty() {
            match names.first() {
                Some(n) => {
                    let _ = write!(s, " 0 {n}");
                }
                None => s.push_str(" 0"),
            }
        }
        for (i, &(v, c)) in row.terms.iter().enumerate() {
            if i > 0 && i % 8 == 0 {
                s.push_str("\n    ");
            }
            let sign = if c > 0 { "+" } else { "-" };
            if i == 0 && c > 0 {
                let _ = write!(s, " {}", names[v]);
            } else {
                let _ = write!(s, " {sign} {}", names[v]);
            }
        }
        let rel = match row.relation {
            Relation::Eq => "=",
            Relation::Le => "<=",
        };
        let _ = writeln!(s, " {rel} {}", row.rhs);
    }
    s.push_str("Binary\n");
    for n in &names {
        let _ = writeln!(s, " {n}");
    }
    s.push_str("End\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bilp::{build_model, RowFamily};
    use crate::graph::HardwareGraph;
    use crate::instance::{random_instance, MqpfInstance, Team, TeamMode};
    use crate::noise::{movement_costs, ErrorMap, ErrorModel};
    use crate::texpand::{expand, trim};

    fn src(node: usize) -> VarKind {
        VarKind::Source { team: 0, node }
    }

    fn brute_force(model: &BilpModel) -> Option<f64> {
        let n = model.var_count();
        assert!(n <= 20);
        let mut best: Option<f64> = None;
        for bits in 0u32..(1 << n) {
            let x: Vec<bool> = (0..n).map(|i| bits >> i & 1 == 1).collect();
            if model.is_feasible(&x) {
                let o = model.objective(&x);
                best = Some(best.map_or(o, |b: f64| b.min(o)));
            }
        }
        best
    }

    #[test]
    fn forced_single_variable() {
        let mut m = BilpModel::new();
        let v = m.add_var(src(0), 0.3).unwrap();
        m.add_row("r", RowFamily::Custom, vec![(v, 1)], Relation::Eq, 1).unwrap();
        let r = solve(&m, &SolverConfig::default());
        assert_eq!(r.status, SolveStatus::Optimal);
        assert_eq!(r.objective, Some(0.3));
        assert_eq!(r.best_bound, 0.3);
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let mut m = BilpModel::new();
        let v = m.add_var(src(0), 0.0).unwrap();
        m.add_row("one", RowFamily::Custom, vec![(v, 1)], Relation::Eq, 1).unwrap();
        m.add_row("zero", RowFamily::Custom, vec![(v, 1)], Relation::Eq, 0).unwrap();
        let r = solve(&m, &SolverConfig::default());
        assert_eq!(r.status, SolveStatus::Infeasible);
        assert!(r.assignment.is_none());
    }

    #[test]
    fn one_swap_model() {
        let g = HardwareGraph::path(2).unwrap();
        let map = ErrorMap::uniform(&g, 0.001, 100.0, 90.0).unwrap();
        let costs = movement_costs(&map, ErrorModel::Simple).unwrap();
        let inst = MqpfInstance::new(vec![Team::new(vec![0], vec![1])], false);
        let model = build_model(&expand(&g, &inst, 1), &inst, &costs, false).unwrap();
        let r = solve(&model, &SolverConfig::default());
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective.unwrap() - (-3.0 * (0.999f64).ln())).abs() < 1e-15);
        let x = r.assignment.unwrap();
        assert!(x[model.ordinal(&VarKind::Movement { team: 0, t: 1, from: 0, to: 1 }).unwrap()]);
    }

    #[test]
    fn generic_models_match_enumeration() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let mut m = BilpModel::new();
            let nv = rng.random_range(1..=10);
            for i in 0..nv {
                m.add_var(src(i), rng.random_range(0.0..1.0)).unwrap();
            }
            for r in 0..rng.random_range(0..6) {
                let mut terms: Vec<(usize, i8)> = Vec::new();
                for v in 0..nv {
                    if rng.random_bool(0.4) {
                        terms.push((v, if rng.random_bool(0.7) { 1 } else { -1 }));
                    }
                }
                let rel = if rng.random_bool(0.5) { Relation::Eq } else { Relation::Le };
                m.add_row(format!("r{r}"), RowFamily::Custom, terms, rel, rng.random_range(0..=2)).unwrap();
            }
            let r = solve(&m, &SolverConfig::default());
            match brute_force(&m) {
                None => assert_eq!(r.status, SolveStatus::Infeasible),
                Some(o) => {
                    assert_eq!(r.status, SolveStatus::Optimal);
                    assert!((r.objective.unwrap() - o).abs() < 1e-9);
                    assert!(m.is_feasible(r.assignment.as_ref().unwrap()));
                }
            }
        }
    }

    fn flow_model(seed: u64, depth: usize, model: ErrorModel) -> BilpModel {
        let g = HardwareGraph::path(4).unwrap();
        let map = crate::noise::sample_error_map(&g, &crate::noise::NoiseParams::heron(), seed).unwrap();
        let costs = movement_costs(&map, model).unwrap();
        let inst = random_instance(&g, 2, TeamMode::Independent, seed).unwrap();
        build_model(&trim(expand(&g, &inst, depth), &g, &inst), &inst, &costs, false).unwrap()
    }

    #[test]
    fn flow_models_match_enumeration() {
        let mut checked = 0;
        for seed in 0..60 {
            for depth in 0..3 {
                let m = flow_model(seed, depth, ErrorModel::Extended);
                if m.var_count() > 20 {
                    continue;
                }
                checked += 1;
                let r = solve(&m, &SolverConfig::default());
                match brute_force(&m) {
                    None => assert_eq!(r.status, SolveStatus::Infeasible, "seed {seed} depth {depth}"),
                    Some(o) => {
                        assert_eq!(r.status, SolveStatus::Optimal);
                        assert!((r.objective.unwrap() - o).abs() < 1e-9, "seed {seed} depth {depth}");
                    }
                }
            }
        }
        assert!(checked > 50);
    }

    #[test]
    fn modes_are_ordered_and_deterministic() {
        for seed in 0..30 {
            let m = flow_model(seed, 3, ErrorModel::Extended);
            let opt = solve(&m, &SolverConfig::new(SolveMode::Optimal));
            let near = solve(&m, &SolverConfig::new(SolveMode::near_optimal()));
            let feas = solve(&m, &SolverConfig::new(SolveMode::FeasibleFirst));
            if opt.status == SolveStatus::Infeasible {
                assert_eq!((near.status, feas.status), (SolveStatus::Infeasible, SolveStatus::Infeasible));
                continue;
            }
            let (o, n, f) = (opt.objective.unwrap(), near.objective.unwrap(), feas.objective.unwrap());
            assert!(o <= n + 1e-12 && n <= f + 1e-12);
            assert!(near.gap().unwrap() <= 0.08 + 1e-12);
            assert!(near.best_bound <= o + 1e-9);
            let again = solve(&m, &SolverConfig::new(SolveMode::near_optimal()));
            assert_eq!((again.status, again.assignment, again.nodes), (near.status, near.assignment, near.nodes));
        }
    }

    #[test]
    fn zero_deadline_reports_exceeded() {
        let m = flow_model(1, 3, ErrorModel::Simple);
        let r = solve(&m, &SolverConfig::default().with_deadline(Some(Duration::ZERO)));
        assert_eq!(r.status, SolveStatus::DeadlineExceeded);
        assert_eq!(r.status.as_str(), "deadline_exceeded");
    }

    #[test]
    fn lp_export_lists_every_variable() {
        let mut m = BilpModel::new();
        let v = m.add_var(src(0), 0.3).unwrap();
        m.add_row("r", RowFamily::Custom, vec![(v, 1)], Relation::Eq, 1).unwrap();
        let text = export_lp(&m);
        assert!(text.contains("Binary") && text.contains("Subject To") && text.ends_with("End\n"));
        assert_eq!(text.matches("s_k0_0").count(), 3);

        let big = flow_model(2, 2, ErrorModel::Simple);
        let text = export_lp(&big);
        let binary = text.split("Binary\n").nth(1).unwrap().trim_end_matches("End\n");
        assert_eq!(binary.lines().count(), big.var_count());
        assert_eq!(text, export_lp(&big));
    }
}
