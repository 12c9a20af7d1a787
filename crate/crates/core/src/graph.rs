//! Hardware coupling graphs.
//!
//! Nodes are physical qubits indexed densely `0..n`, edges are unordered
//! pairs of qubits that can run a two-qubit gate. Every graph handed out by
//! this module is simple and connected.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

const MELBOURNE15: &str = include_str!("../data/melbourne15.graph");
const POUGHKEEPSIE20: &str = include_str!("../data/poughkeepsie20.graph");
const ACORN20: &str = include_str!("../data/acorn20.graph");
const PARIS27: &str = include_str!("../data/paris27.graph");
const ROCHESTER53: &str = include_str!("../data/rochester53.graph");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HardwareGraph {
    node_count: usize,
    /// Sorted, each pair stored as `(lo, hi)`.
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
    labels: Option<Vec<String>>,
}

impl HardwareGraph {
    /// Builds a graph, rejecting self-loops, duplicate edges, out-of-range
    /// endpoints and disconnected layouts.
    pub fn new(node_count: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut normalized = Vec::new();
        for (a, b) in edges {
            for v in [a, b] {
                if v >= node_count {
                    return Err(Error::NodeOutOfRange { node: v, count: node_count });
                }
            }
            if a == b {
                return Err(Error::SelfLoop(a));
            }
            normalized.push((a.min(b), a.max(b)));
        }
        normalized.sort_unstable();
        if let Some(w) = normalized.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateEdge(w[0].0, w[0].1));
        }
        let mut adjacency = vec![Vec::new(); node_count];
        for &(a, b) in &normalized {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
        }
        let graph = HardwareGraph { node_count, edges: normalized, adjacency, labels: None };
        if graph.bfs(0).iter().any(|d| d.is_none()) {
            return Err(Error::Disconnected);
        }
        Ok(graph)
    }

    /// `rows × cols` lattice with 4-neighbour coupling, row-major numbering.
    pub fn grid(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 || rows * cols < 2 {
            return Err(Error::InvalidArgument(format!("grid {rows}x{cols} needs at least two nodes")));
        }
        let mut edges = Vec::with_capacity(2 * rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let v = r * cols + c;
                if c + 1 < cols {
                    edges.push((v, v + 1));
                }
                if r + 1 < rows {
                    edges.push((v, v + cols));
                }
            }
        }
        Self::new(rows * cols, edges)
    }

    pub fn path(n: usize) -> Result<Self> {
        Self::grid(1, n)
    }

    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidArgument(format!("cycle needs at least 3 nodes, got {n}")));
        }
        Self::new(n, (0..n).map(|i| (i, (i + 1) % n)))
    }

    pub fn from_layout(name: &LayoutName) -> Result<Self> {
        match name {
            LayoutName::Melbourne15 => load_graph(MELBOURNE15),
            LayoutName::Poughkeepsie20 => load_graph(POUGHKEEPSIE20),
            LayoutName::Acorn20 => load_graph(ACORN20),
            LayoutName::Paris27 => load_graph(PARIS27),
            LayoutName::Rochester53 => load_graph(ROCHESTER53),
            LayoutName::Grid { rows, cols } => Self::grid(*rows, *cols),
        }
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.node_count {
            return Err(Error::InvalidArgument(format!(
                "{} labels for {} nodes",
                labels.len(),
                self.node_count
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Drops a node (e.g. an offline qubit) and renumbers the rest densely.
    /// Fails if the remaining graph falls apart.
    pub fn without_node(&self, node: usize) -> Result<Self> {
        self.check_node(node)?;
        let remap = |v: usize| if v > node { v - 1 } else { v };
        let edges = self
            .edges
            .iter()
            .filter(|&&(a, b)| a != node && b != node)
            .map(|&(a, b)| (remap(a), remap(b)));
        let mut g = Self::new(self.node_count - 1, edges)?;
        if let Some(labels) = &self.labels {
            let kept = labels.iter().enumerate().filter(|&(i, _)| i != node).map(|(_, l)| l.clone()).collect();
            g = g.with_labels(kept)?;
        }
        Ok(g)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        a < self.node_count && self.adjacency[a].binary_search(&b).is_ok()
    }

    /// Position of the unordered edge `{a, b}` in [`Self::edges`].
    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        self.edges.binary_search(&(a.min(b), a.max(b))).ok()
    }

    pub fn check_node(&self, v: usize) -> Result<()> {
        if v < self.node_count {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange { node: v, count: self.node_count })
        }
    }

    /// Unweighted hop distances from `from`.
    pub fn shortest_distances(&self, from: usize) -> Result<Vec<usize>> {
        self.check_node(from)?;
        // connected by construction
        Ok(self.bfs(from).into_iter().map(|d| d.expect("graph is connected")).collect())
    }

    /// All-pairs hop distances, `n` BFS sweeps.
    pub fn distance_matrix(&self) -> Vec<Vec<usize>> {
        (0..self.node_count).map(|v| self.shortest_distances(v).expect("valid node")).collect()
    }

    /// Hop distance from each node to the nearest member of `set`.
    pub fn multi_source_distances(&self, set: &[usize]) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.node_count];
        let mut queue = VecDeque::new();
        for &s in set {
            if dist[s].is_none() {
                dist[s] = Some(0);
                queue.push_back(s);
            }
        }
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap();
            for &w in &self.adjacency[u] {
                if dist[w].is_none() {
                    dist[w] = Some(du + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    fn bfs(&self, from: usize) -> Vec<Option<usize>> {
        self.multi_source_distances(&[from])
    }
}

/// Loads the line-oriented graph format: `nodes <n>` followed by
/// `edge <i> <j>` lines, `#` starts a comment.
pub fn load_graph(text: &str) -> Result<HardwareGraph> {
    let mut node_count = None;
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let parse = |s: &str| {
            s.parse::<usize>().map_err(|_| Error::Parse { line: line_no, msg: format!("expected an integer, got '{s}'") })
        };
        match fields.as_slice() {
            ["nodes", n] => {
                if node_count.is_some() {
                    return Err(Error::Parse { line: line_no, msg: "duplicate 'nodes' header".into() });
                }
                node_count = Some(parse(n)?);
            }
            ["edge", a, b] => {
                if node_count.is_none() {
                    return Err(Error::Parse { line: line_no, msg: "'edge' before 'nodes' header".into() });
                }
                edges.push((parse(a)?, parse(b)?));
            }
            _ => return Err(Error::Parse { line: line_no, msg: format!("unrecognized line '{line}'") }),
        }
    }
    let n = node_count.ok_or(Error::Parse { line: 0, msg: "missing 'nodes' header".into() })?;
    HardwareGraph::new(n, edges)
}

pub fn save_graph(g: &HardwareGraph) -> String {
    let mut out = format!("nodes {}\n", g.node_count);
    for &(a, b) in &g.edges {
        out.push_str(&format!("edge {a} {b}\n"));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LayoutName {
    Melbourne15,
    Poughkeepsie20,
    Acorn20,
    Paris27,
    Rochester53,
    Grid { rows: usize, cols: usize },
}

impl FromStr for LayoutName {
    type Err = Error;

    /// Accepts the named devices plus `grid:RxC`, `grid(R,C)` or `gridRxC`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let named = match lower.as_str() {
            "melbourne15" | "melbourne" => Some(LayoutName::Melbourne15),
            "poughkeepsie20" | "poughkeepsie" => Some(LayoutName::Poughkeepsie20),
            "acorn20" | "acorn" => Some(LayoutName::Acorn20),
            "paris27" | "paris" => Some(LayoutName::Paris27),
            "rochester53" | "rochester" => Some(LayoutName::Rochester53),
            _ => None,
        };
        if let Some(n) = named {
            return Ok(n);
        }
        let dims = lower
            .strip_prefix("grid:")
            .or_else(|| lower.strip_prefix("grid(").and_then(|r| r.strip_suffix(')')))
            .or_else(|| lower.strip_prefix("grid"))
            .ok_or_else(|| Error::UnknownLayout(s.to_string()))?;
        let mut parts = dims.split(|c| c == 'x' || c == ',');
        let (Some(r), Some(c), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::UnknownLayout(s.to_string()));
        };
        let rows: usize = r.trim().parse().map_err(|_| Error::UnknownLayout(s.to_string()))?;
        let cols: usize = c.trim().parse().map_err(|_| Error::UnknownLayout(s.to_string()))?;
        if rows == 0 || cols == 0 || rows * cols < 2 {
            return Err(Error::UnknownLayout(s.to_string()));
        }
        Ok(LayoutName::Grid { rows, cols })
    }
}

impl fmt::Display for LayoutName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LayoutName::Melbourne15 => f.write_str("melbourne15"),
            LayoutName::Poughkeepsie20 => f.write_str("poughkeepsie20"),
            LayoutName::Acorn20 => f.write_str("acorn20"),
            LayoutName::Paris27 => f.write_str("paris27"),
            LayoutName::Rochester53 => f.write_str("rochester53"),
            LayoutName::Grid { rows, cols } => write!(f, "grid:{rows}x{cols}"),
        }
    }
}

pub fn build_layout(name: &LayoutName) -> Result<HardwareGraph> {
    HardwareGraph::from_layout(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL_NAMED: [LayoutName; 5] = [
        LayoutName::Melbourne15,
        LayoutName::Poughkeepsie20,
        LayoutName::Acorn20,
        LayoutName::Paris27,
        LayoutName::Rochester53,
    ];

    #[test]
    fn grid_sizes() {
        let g = HardwareGraph::grid(8, 8).unwrap();
        assert_eq!(g.node_count(), 64);
        // 8 rows of 7 horizontal links plus 8 columns of 7 vertical links
        assert_eq!(g.edges().len(), 2 * 8 * 7);
        let g = HardwareGraph::grid(1, 2).unwrap();
        assert_eq!((g.node_count(), g.edges().len()), (2, 1));
        assert!(HardwareGraph::grid(1, 1).is_err());
        assert!(HardwareGraph::grid(0, 4).is_err());
    }

    #[test]
    fn named_layouts_have_expected_sizes() {
        let sizes: Vec<usize> = ALL_NAMED.iter().map(|n| build_layout(n).unwrap().node_count()).collect();
        assert_eq!(sizes, vec![15, 20, 20, 27, 53]);
    }

    #[test]
    fn grid_degrees() {
        let g = HardwareGraph::grid(4, 5).unwrap();
        for v in 0..g.node_count() {
            assert!((2..=4).contains(&g.degree(v)));
        }
        for corner in [0, 4, 15, 19] {
            assert_eq!(g.degree(corner), 2);
        }
    }

    #[test]
    fn acorn_offline_qubit_keeps_connectivity() {
        let g = build_layout(&LayoutName::Acorn20).unwrap();
        let g19 = g.without_node(3).unwrap();
        assert_eq!(g19.node_count(), 19);
        assert_eq!(g19.edges().len(), g.edges().len() - 2);
        // removing the only neighbour of a leaf must fail
        let p = HardwareGraph::path(3).unwrap();
        assert!(matches!(p.without_node(1), Err(Error::Disconnected)));
    }

    #[test]
    fn round_trip_and_errors() {
        let g = HardwareGraph::grid(1, 2).unwrap();
        assert_eq!(load_graph(&save_graph(&g)).unwrap(), g);
        assert!(matches!(load_graph("nodes 2\nedge 0 0\n"), Err(Error::SelfLoop(0))));
        assert!(matches!(load_graph("nodes 4\nedge 0 1\nedge 2 3\n"), Err(Error::Disconnected)));
        assert!(matches!(load_graph("nodes 2\nedge 0 1\nedge 1 0\n"), Err(Error::DuplicateEdge(0, 1))));
        assert!(matches!(load_graph("nodes 2\nedge 0 5\n"), Err(Error::NodeOutOfRange { .. })));
        assert!(matches!(load_graph("edge 0 1\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(load_graph("nodes 2\nfoo\n"), Err(Error::Parse { line: 2, .. })));
        let commented = "# a pair\nnodes 2 # two qubits\n\nedge 1 0\n";
        assert_eq!(load_graph(commented).unwrap(), g);
    }

    #[test]
    fn bfs_distances() {
        let g = HardwareGraph::grid(1, 3).unwrap();
        assert_eq!(g.shortest_distances(0).unwrap(), vec![0, 1, 2]);
        let sq = HardwareGraph::grid(2, 2).unwrap();
        assert_eq!(sq.shortest_distances(0).unwrap()[3], 2);
        assert!(g.shortest_distances(3).is_err());
        for name in ALL_NAMED {
            let g = build_layout(&name).unwrap();
            for v in 0..g.node_count() {
                let d = g.shortest_distances(v).unwrap();
                assert_eq!(d[v], 0);
                for &(a, b) in g.edges() {
                    assert!(d[a].abs_diff(d[b]) <= 1);
                }
            }
        }
    }

    #[test]
    fn layout_names_parse() {
        assert_eq!("grid:1x2".parse::<LayoutName>().unwrap(), LayoutName::Grid { rows: 1, cols: 2 });
        assert_eq!("grid(8,8)".parse::<LayoutName>().unwrap(), LayoutName::Grid { rows: 8, cols: 8 });
        assert_eq!("Paris27".parse::<LayoutName>().unwrap(), LayoutName::Paris27);
        assert!("grid:1x1".parse::<LayoutName>().is_err());
        assert!("tokyo".parse::<LayoutName>().is_err());
        for name in ALL_NAMED {
            assert_eq!(name.to_string().parse::<LayoutName>().unwrap(), name);
        }
    }
}
