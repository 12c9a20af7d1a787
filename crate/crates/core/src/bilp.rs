//! Binary integer program over a trimmed time expansion.
//!
//! One binary variable per live `(team, timestep, movement)` plus one per
//! team source and destination attachment. Constraint families:
//!
//! 1. flow conservation per team, layer and node,
//! 2. at most one qubit per directed movement,
//! 3. every source attachment (and, for strict instances, destination
//!    attachment) carries exactly one qubit,
//! 5. at most one qubit arriving at a node per timestep,
//! 6. a qubit entering `j` from `i` forces whatever sits on `j` to go to `i`.
//!
//! (Family 4 is the binary domain itself.) Rows are emitted in family order,
//! then by timestep, then by node or movement, then by team, so two builds of
//! the same input are identical.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::instance::MqpfInstance;
use crate::noise::CostTable;
use crate::texpand::TimeExpandedGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKind {
    /// Team `team` moves `from → to` between layers `t - 1` and `t`.
    Movement { team: usize, t: usize, from: usize, to: usize },
    /// Edge from the team's virtual source to `node` in layer 0.
    Source { team: usize, node: usize },
    /// Edge from `node` in the last layer to the team's virtual sink.
    Dest { team: usize, node: usize },
}

impl VarKind {
    pub fn team(&self) -> usize {
        match *self {
            VarKind::Movement { team, .. } | VarKind::Source { team, .. } | VarKind::Dest { team, .. } => team,
        }
    }

    /// LP-format variable name.
    pub fn name(&self) -> String {
        match *self {
            VarKind::Movement { team, t, from, to } => format!("x_k{team}_t{t}_{from}_{to}"),
            VarKind::Source { team, node } => format!("s_k{team}_{node}"),
            VarKind::Dest { team, node } => format!("d_k{team}_{node}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Eq,
    Le,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RowFamily {
    Conservation,
    EdgeCapacity,
    SourceDemand,
    DestDemand,
    Exclusivity,
    SwapMovement,
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: String,
    pub family: RowFamily,
    /// `(ordinal, ±1)`.
    pub terms: Vec<(usize, i8)>,
    pub relation: Relation,
    pub rhs: i32,
}

impl Row {
    pub fn activity(&self, x: &[bool]) -> i32 {
        self.terms.iter().map(|&(v, c)| if x[v] { c as i32 } else { 0 }).sum()
    }

    pub fn satisfied(&self, x: &[bool]) -> bool {
        let a = self.activity(x);
        match self.relation {
            Relation::Eq => a == self.rhs,
            Relation::Le => a <= self.rhs,
        }
    }
}

/// Dimensions of the time expansion a model was generated from. The solver
/// uses it to decompose the model into per-team flow networks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlowShape {
    pub depth: usize,
    pub node_count: usize,
    pub team_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelStats {
    pub vars: usize,
    pub rows: usize,
    pub nonzeros: usize,
}

impl fmt::Display for ModelStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} vars, {} rows, {} nonzeros", self.vars, self.rows, self.nonzeros)
    }
}

#[derive(Debug, Clone, Default)]
pub struct BilpModel {
    kinds: Vec<VarKind>,
    costs: Vec<f64>,
    rows: Vec<Row>,
    lookup: HashMap<VarKind, usize>,
    shape: Option<FlowShape>,
}

impl BilpModel {
    /// Empty model with no flow structure, for hand-built programs.
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, kind: VarKind, cost: f64) -> Result<usize> {
        if !(cost >= 0.0) || !cost.is_finite() {
            return Err(Error::InvalidArgument(format!("cost {cost} of {} must be finite and >= 0", kind.name())));
        }
        if self.lookup.contains_key(&kind) {
            return Err(Error::InvalidArgument(format!("variable {} declared twice", kind.name())));
        }
        let id = self.kinds.len();
        self.kinds.push(kind);
        self.costs.push(cost);
        self.lookup.insert(kind, id);
        Ok(id)
    }

    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        family: RowFamily,
        terms: Vec<(usize, i8)>,
        relation: Relation,
        rhs: i32,
    ) -> Result<()> {
        let name = name.into();
        if let Some(&(v, c)) = terms.iter().find(|&&(v, c)| v >= self.kinds.len() || (c != 1 && c != -1)) {
            return Err(Error::InvalidArgument(format!("row {name}: bad term ({v}, {c})")));
        }
        self.rows.push(Row { name, family, terms, relation, rhs });
        Ok(())
    }

    pub fn var_count(&self) -> usize {
        self.kinds.len()
    }

    pub fn kinds(&self) -> &[VarKind] {
        &self.kinds
    }

    pub fn kind(&self, ordinal: usize) -> VarKind {
        self.kinds[ordinal]
    }

    pub fn ordinal(&self, kind: &VarKind) -> Option<usize> {
        self.lookup.get(kind).copied()
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn shape(&self) -> Option<FlowShape> {
        self.shape
    }

    pub fn objective(&self, x: &[bool]) -> f64 {
        self.costs.iter().zip(x).filter(|(_, &b)| b).map(|(c, _)| c).sum()
    }

    pub fn violated_rows(&self, x: &[bool]) -> Vec<usize> {
        (0..self.rows.len()).filter(|&r| !self.rows[r].satisfied(x)).collect()
    }

    pub fn is_feasible(&self, x: &[bool]) -> bool {
        x.len() == self.var_count() && self.rows.iter().all(|r| r.satisfied(x))
    }

    pub fn stats(&self) -> ModelStats {
        ModelStats {
            vars: self.kinds.len(),
            rows: self.rows.len(),
            nonzeros: self.rows.iter().map(|r| r.terms.len()).sum(),
        }
    }
}

pub fn count_stats(model: &BilpModel) -> ModelStats {
    model.stats()
}

/// Emits the program for `teg`. With `flexible`, destination attachments
/// are left free and flow conservation alone routes each qubit to some
/// destination of its team.
pub fn build_model(teg: &TimeExpandedGraph, inst: &MqpfInstance, costs: &CostTable, flexible: bool) -> Result<BilpModel> {
    let depth = teg.depth();
    let n = teg.node_count();
    let teams = inst.team_count();
    if teg.team_count() != teams {
        return Err(Error::InvalidArgument("time expansion and instance disagree on team count".into()));
    }
    let moves = teg.moves();
    let mut model = BilpModel::new();

    // Ordinals: source attachments, movements by (t, team, move), destination attachments.
    for k in 0..teams {
        for &v in teg.source_attachments(k) {
            model.add_var(VarKind::Source { team: k, node: v }, 0.0)?;
        }
    }
    // movement[(t-1) * teams + k][m] -> ordinal
    let mut movement: Vec<Vec<Option<usize>>> = vec![vec![None; moves.len()]; depth * teams];
    for t in 1..=depth {
        for k in 0..teams {
            for (m, &(from, to)) in moves.iter().enumerate() {
                if !teg.is_live(k, t, m) {
                    continue;
                }
                let cost = costs.movement(from, to).ok_or(Error::MissingCost { from, to })?;
                movement[(t - 1) * teams + k][m] = Some(model.add_var(VarKind::Movement { team: k, t, from, to }, cost)?);
            }
        }
    }
    for k in 0..teams {
        for &v in teg.dest_attachments(k) {
            model.add_var(VarKind::Dest { team: k, node: v }, 0.0)?;
        }
    }

    let mv = |t: usize, k: usize, m: usize| movement[(t - 1) * teams + k][m];
    let mut out_moves: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut in_moves: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (m, &(a, b)) in moves.iter().enumerate() {
        out_moves[a].push(m);
        in_moves[b].push(m);
    }

    // (1) conservation: inflow to (layer, node) equals outflow from it.
    for layer in 0..=depth {
        for v in 0..n {
            for k in 0..teams {
                let mut terms = Vec::new();
                if layer == 0 {
                    if let Some(s) = model.ordinal(&VarKind::Source { team: k, node: v }) {
                        terms.push((s, 1));
                    }
                } else {
                    terms.extend(in_moves[v].iter().filter_map(|&m| mv(layer, k, m)).map(|x| (x, 1)));
                }
                if layer == depth {
                    if let Some(d) = model.ordinal(&VarKind::Dest { team: k, node: v }) {
                        terms.push((d, -1));
                    }
                } else {
                    terms.extend(out_moves[v].iter().filter_map(|&m| mv(layer + 1, k, m)).map(|x| (x, -1)));
                }
                if !terms.is_empty() {
                    model.add_row(format!("flow_k{k}_t{layer}_n{v}"), RowFamily::Conservation, terms, Relation::Eq, 0)?;
                }
            }
        }
    }

    // (2) one qubit per directed movement.
    for t in 1..=depth {
        for (m, &(a, b)) in moves.iter().enumerate() {
            let terms: Vec<_> = (0..teams).filter_map(|k| mv(t, k, m)).map(|x| (x, 1)).collect();
            if terms.len() >= 2 {
                model.add_row(format!("cap_t{t}_{a}_{b}"), RowFamily::EdgeCapacity, terms, Relation::Le, 1)?;
            }
        }
    }

    // (3) attachments at full flow.
    for k in 0..teams {
        for &v in teg.source_attachments(k) {
            let s = model.ordinal(&VarKind::Source { team: k, node: v }).expect("declared above");
            model.add_row(format!("src_k{k}_{v}"), RowFamily::SourceDemand, vec![(s, 1)], Relation::Eq, 1)?;
        }
    }
    if !flexible {
        for k in 0..teams {
            for &v in teg.dest_attachments(k) {
                let d = model.ordinal(&VarKind::Dest { team: k, node: v }).expect("declared above");
                model.add_row(format!("dst_k{k}_{v}"), RowFamily::DestDemand, vec![(d, 1)], Relation::Eq, 1)?;
            }
        }
    }

    // (5) one arrival per node and timestep.
    for t in 1..=depth {
        for v in 0..n {
            let terms: Vec<_> = (0..teams)
                .flat_map(|k| in_moves[v].iter().filter_map(move |&m| mv(t, k, m)))
                .map(|x| (x, 1))
                .collect();
            if terms.len() >= 2 {
                model.add_row(format!("excl_t{t}_n{v}"), RowFamily::Exclusivity, terms, Relation::Le, 1)?;
            }
        }
    }

    // (6) swap semantics for every ordered pair of a hardware edge.
    for t in 1..=depth {
        for (m, &(i, j)) in moves.iter().enumerate() {
            if i == j {
                continue;
            }
            let mut terms: Vec<_> = (0..teams).filter_map(|k| mv(t, k, m)).map(|x| (x, 1)).collect();
            if terms.is_empty() {
                continue;
            }
            for k in 0..teams {
                for &m2 in &out_moves[j] {
                    if moves[m2].1 != i {
                        if let Some(x) = mv(t, k, m2) {
                            terms.push((x, 1));
                        }
                    }
                }
            }
            if terms.len() >= 2 {
                model.add_row(format!("swap_t{t}_{i}_{j}"), RowFamily::SwapMovement, terms, Relation::Le, 1)?;
            }
        }
    }

    model.shape = Some(FlowShape { depth, node_count: n, team_count: teams });
    Ok(model)
}
