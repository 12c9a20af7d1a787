//! Time expansion of a hardware graph.
//!
//! Layer `t` (for `t` in `0..=T`) holds one copy of every physical qubit.
//! Between consecutive layers a qubit either idles (`i → i`) or swaps along a
//! hardware edge (`i → j`). Each team gets a virtual source node attached to
//! its sources in layer 0 and a virtual sink attached to its destinations in
//! layer `T`. Per-team masks record which movements survive trimming.

use std::fmt::Write as _;

use crate::graph::HardwareGraph;
use crate::instance::MqpfInstance;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeExpandedGraph {
    depth: usize,
    node_count: usize,
    /// Directed movements sorted by `(from, to)`; idles are `(i, i)`.
    moves: Vec<(usize, usize)>,
    sources: Vec<Vec<usize>>,
    dests: Vec<Vec<usize>>,
    /// Indexed `[team][t - 1][move]`, flattened.
    live: Vec<bool>,
}

impl TimeExpandedGraph {
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn team_count(&self) -> usize {
        self.sources.len()
    }

    pub fn moves(&self) -> &[(usize, usize)] {
        &self.moves
    }

    pub fn source_attachments(&self, team: usize) -> &[usize] {
        &self.sources[team]
    }

    pub fn dest_attachments(&self, team: usize) -> &[usize] {
        &self.dests[team]
    }

    /// Virtual index of the source node `I_k`.
    pub fn team_source_node(&self, team: usize) -> usize {
        self.node_count + team
    }

    /// Virtual index of the sink node `F_k`.
    pub fn team_sink_node(&self, team: usize) -> usize {
        self.node_count + self.team_count() + team
    }

    fn slot(&self, team: usize, t: usize, mv: usize) -> usize {
        debug_assert!(t >= 1 && t <= self.depth);
        (team * self.depth + (t - 1)) * self.moves.len() + mv
    }

    /// Whether movement `mv` at timestep `t` (1-based) is available to `team`.
    pub fn is_live(&self, team: usize, t: usize, mv: usize) -> bool {
        self.live[self.slot(team, t, mv)]
    }

    /// Movement edges per timestep before trimming, `2|E| + |V|`.
    pub fn moves_per_step(&self) -> usize {
        self.moves.len()
    }

    /// Total movement edges over all timesteps, ignoring teams.
    pub fn movement_edge_count(&self) -> usize {
        self.depth * self.moves.len()
    }

    /// Surviving `(team, t, move)` triples.
    pub fn live_count(&self) -> usize {
        self.live.iter().filter(|&&b| b).count()
    }

    /// Graphviz rendering; trimmed movements are drawn grey and dashed.
    /// Debug aid only, the output format is not stable.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph teg {\n  rankdir=LR;\n");
        for t in 0..=self.depth {
            for v in 0..self.node_count {
                let _ = writeln!(s, "  \"{t}:{v}\" [label=\"q{v}@t{t}\"];");
            }
        }
        for k in 0..self.team_count() {
            let _ = writeln!(s, "  \"I{k}\" [shape=box];\n  \"F{k}\" [shape=box];");
            for v in &self.sources[k] {
                let _ = writeln!(s, "  \"I{k}\" -> \"0:{v}\";");
            }
            for v in &self.dests[k] {
                let _ = writeln!(s, "  \"{}:{v}\" -> \"F{k}\";", self.depth);
            }
        }
        for t in 1..=self.depth {
            for (m, &(a, b)) in self.moves.iter().enumerate() {
                let any = (0..self.team_count()).any(|k| self.is_live(k, t, m));
                let style = if any { "" } else { " [color=gray, style=dashed]" };
                let _ = writeln!(s, "  \"{}:{a}\" -> \"{t}:{b}\"{style};", t - 1);
            }
        }
        s.push_str("}\n");
        s
    }
}

/// Full time expansion to depth `depth` with every movement live.
pub fn expand(g: &HardwareGraph, inst: &MqpfInstance, depth: usize) -> TimeExpandedGraph {
    let mut moves = Vec::with_capacity(2 * g.edges().len() + g.node_count());
    for v in 0..g.node_count() {
        moves.push((v, v));
    }
    for &(a, b) in g.edges() {
        moves.push((a, b));
        moves.push((b, a));
    }
    moves.sort_unstable();
    let teams = inst.team_count();
    TimeExpandedGraph {
        depth,
        node_count: g.node_count(),
        live: vec![true; teams * depth * moves.len()],
        moves,
        sources: inst.teams.iter().map(|t| t.sources.clone()).collect(),
        dests: inst.teams.iter().map(|t| t.dests.clone()).collect(),
    }
}

/// Removes movements a team can never use: the origin must be within `t - 1`
/// hops of one of the team's sources and the target within `T - t` hops of
/// one of its destinations. Hop balls ignore other qubits, so no feasible
/// schedule loses an edge.
pub fn trim(mut teg: TimeExpandedGraph, g: &HardwareGraph, inst: &MqpfInstance) -> TimeExpandedGraph {
    let depth = teg.depth;
    for (k, team) in inst.teams.iter().enumerate() {
        let from_src = g.multi_source_distances(&team.sources);
        let to_dst = g.multi_source_distances(&team.dests);
        for t in 1..=depth {
            for m in 0..teg.moves.len() {
                let (a, b) = teg.moves[m];
                let forward = from_src[a].is_some_and(|d| d < t);
                let backward = to_dst[b].is_some_and(|d| d <= depth - t);
                let slot = teg.slot(k, t, m);
                teg.live[slot] &= forward && backward;
            }
        }
    }
    teg
}
