//! Undirected communication graphs, vertex connectivity, and the partition
//! machinery used by both impossibility constructions.

use alloc::collections::{BTreeSet, VecDeque};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// Dense node identifier, `0..n`.
pub type NodeId = u16;

pub type NodeSet = BTreeSet<NodeId>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphError {
    Empty,
    TooManyNodes(usize),
    SelfLoop(NodeId),
    DuplicateEdge(NodeId, NodeId),
    UnknownNode(NodeId),
    FaultBound { f: usize, n: usize },
    TooManyForPartition { n: usize, f: usize },
    NotACut,
    SetTooLarge { len: usize, f: usize },
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::Empty => write!(f, "graph must have at least one node"),
            GraphError::TooManyNodes(n) => write!(f, "{n} nodes exceeds the supported maximum"),
            GraphError::SelfLoop(u) => write!(f, "self-loop on node {u}"),
            GraphError::DuplicateEdge(u, v) => write!(f, "duplicate edge {u}-{v}"),
            GraphError::UnknownNode(u) => write!(f, "unknown node {u}"),
            GraphError::FaultBound { f: faults, n } => {
                write!(f, "fault bound f={faults} must satisfy 0 < f < n={n}")
            }
            GraphError::TooManyForPartition { n, f: faults } => {
                write!(f, "n={n} > 3f={}: no partition into three sets of size at most f", 3 * faults)
            }
            GraphError::NotACut => write!(f, "removing the given set leaves the graph connected"),
            GraphError::SetTooLarge { len, f: faults } => {
                write!(f, "set of size {len} cannot be split into two sets of size at most {faults}")
            }
        }
    }
}

/// Simple undirected graph over nodes `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<NodeSet>,
}

impl Graph {
    pub const MAX_NODES: usize = 1 << 15;

    pub fn new(n: usize, edges: impl IntoIterator<Item = (NodeId, NodeId)>) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        if n > Self::MAX_NODES {
            return Err(GraphError::TooManyNodes(n));
        }
        let mut g = Graph { adj: vec![NodeSet::new(); n] };
        for (u, v) in edges {
            g.insert_edge(u, v)?;
        }
        Ok(g)
    }

    pub fn complete(n: usize) -> Self {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                edges.push((u as NodeId, v as NodeId));
            }
        }
        Graph::new(n, edges).expect("complete graph is valid")
    }

    /// Cycle `0-1-...-(n-1)-0`; requires `n >= 3`.
    pub fn cycle(n: usize) -> Self {
        let edges = (0..n).map(|i| (i as NodeId, ((i + 1) % n) as NodeId));
        Graph::new(n, edges).expect("cycle is valid")
    }

    fn insert_edge(&mut self, u: NodeId, v: NodeId) -> Result<(), GraphError> {
        let n = self.adj.len();
        for w in [u, v] {
            if w as usize >= n {
                return Err(GraphError::UnknownNode(w));
            }
        }
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        if !self.adj[u as usize].insert(v) {
            return Err(GraphError::DuplicateEdge(u, v));
        }
        self.adj[v as usize].insert(u);
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.adj.len()).map(|u| u as NodeId)
    }

    pub fn neighbors(&self, u: NodeId) -> &NodeSet {
        &self.adj[u as usize]
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.adj.get(u as usize).is_some_and(|s| s.contains(&v))
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::new();
        for (u, nbrs) in self.adj.iter().enumerate() {
            for &v in nbrs.range((u as NodeId + 1)..) {
                out.push((u as NodeId, v));
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    pub fn is_complete(&self) -> bool {
        let n = self.adj.len();
        self.adj.iter().all(|s| s.len() == n - 1)
    }

    /// The complete graph on the same node set.
    pub fn completion(&self) -> Graph {
        Graph::complete(self.node_count())
    }

    /// Connected components of the subgraph induced by nodes outside `removed`,
    /// each sorted, ordered by smallest member.
    pub fn components_without(&self, removed: &NodeSet) -> Vec<NodeSet> {
        let n = self.adj.len();
        let mut seen = vec![false; n];
        let mut comps = Vec::new();
        for start in 0..n {
            if seen[start] || removed.contains(&(start as NodeId)) {
                continue;
            }
            let mut comp = NodeSet::new();
            let mut queue = VecDeque::from([start]);
            seen[start] = true;
            while let Some(u) = queue.pop_front() {
                comp.insert(u as NodeId);
                for &v in &self.adj[u] {
                    let vi = v as usize;
                    if !seen[vi] && !removed.contains(&v) {
                        seen[vi] = true;
                        queue.push_back(vi);
                    }
                }
            }
            comps.push(comp);
        }
        comps
    }

    pub fn is_connected(&self) -> bool {
        self.components_without(&NodeSet::new()).len() == 1
    }
}

/// Maximum number of Byzantine nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaultModel {
    pub f: usize,
}

impl FaultModel {
    pub fn new(f: usize, g: &Graph) -> Result<Self, GraphError> {
        let n = g.node_count();
        if f == 0 || f >= n {
            return Err(GraphError::FaultBound { f, n });
        }
        Ok(FaultModel { f })
    }
}

/// `(A, B, C)` with every part of size at most `f` and `A`, `B` non-empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThreePartition {
    pub a: NodeSet,
    pub b: NodeSet,
    pub c: NodeSet,
}

/// `(A, B, C1, C2)` where `C1 ∪ C2` separates `A` from `B`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutPartition {
    pub a: NodeSet,
    pub b: NodeSet,
    pub c1: NodeSet,
    pub c2: NodeSet,
}

impl ThreePartition {
    pub fn validate(&self, g: &Graph, f: usize) -> Result<(), &'static str> {
        if self.a.is_empty() || self.b.is_empty() {
            return Err("A and B must be non-empty");
        }
        if self.a.len() > f || self.b.len() > f || self.c.len() > f {
            return Err("every part must have at most f nodes");
        }
        check_cover(g, &[&self.a, &self.b, &self.c])
    }
}

impl CutPartition {
    pub fn validate(&self, g: &Graph, f: usize) -> Result<(), &'static str> {
        if self.a.is_empty() || self.b.is_empty() {
            return Err("A and B must be non-empty");
        }
        if self.c1.len() > f || self.c2.len() > f {
            return Err("C1 and C2 must have at most f nodes");
        }
        check_cover(g, &[&self.a, &self.b, &self.c1, &self.c2])?;
        if self.a.iter().any(|&u| g.neighbors(u).iter().any(|v| self.b.contains(v))) {
            return Err("an edge joins A and B");
        }
        Ok(())
    }

    pub fn cut(&self) -> NodeSet {
        self.c1.union(&self.c2).copied().collect()
    }
}

fn check_cover(g: &Graph, parts: &[&NodeSet]) -> Result<(), &'static str> {
    let mut seen = NodeSet::new();
    for part in parts {
        for &u in part.iter() {
            if u as usize >= g.node_count() {
                return Err("partition names a node outside the graph");
            }
            if !seen.insert(u) {
                return Err("partition parts overlap");
            }
        }
    }
    if seen.len() != g.node_count() {
        return Err("partition does not cover every node");
    }
    Ok(())
}

/// Unit-capacity flow network obtained by splitting every node `v` into
/// `v_in = 2v` and `v_out = 2v + 1` joined by an arc of capacity one.
struct SplitNetwork {
    // arc list: (head, residual capacity); arc i and i^1 are paired
    heads: Vec<usize>,
    caps: Vec<u32>,
    out: Vec<Vec<usize>>,
}

impl SplitNetwork {
    fn new(g: &Graph) -> Self {
        let n = g.node_count();
        let mut net = SplitNetwork { heads: Vec::new(), caps: Vec::new(), out: vec![Vec::new(); 2 * n] };
        let big = n as u32 + 1;
        for v in 0..n {
            net.add_arc(2 * v, 2 * v + 1, 1);
        }
        for (u, v) in g.edges() {
            let (u, v) = (u as usize, v as usize);
            net.add_arc(2 * u + 1, 2 * v, big);
            net.add_arc(2 * v + 1, 2 * u, big);
        }
        net
    }

    fn add_arc(&mut self, from: usize, to: usize, cap: u32) {
        self.out[from].push(self.heads.len());
        self.heads.push(to);
        self.caps.push(cap);
        self.out[to].push(self.heads.len());
        self.heads.push(from);
        self.caps.push(0);
    }

    /// Max flow from `s_out` to `t_in` by BFS augmentation; stops early once
    /// the flow exceeds `limit`.
    fn max_flow(&mut self, source: usize, sink: usize, limit: u32) -> u32 {
        let mut flow = 0;
        while flow <= limit {
            let mut pred: Vec<Option<usize>> = vec![None; self.out.len()];
            let mut queue = VecDeque::from([source]);
            let mut reached = false;
            while let Some(x) = queue.pop_front() {
                if x == sink {
                    reached = true;
                    break;
                }
                for &arc in &self.out[x] {
                    let y = self.heads[arc];
                    if self.caps[arc] > 0 && y != source && pred[y].is_none() {
                        pred[y] = Some(arc);
                        queue.push_back(y);
                    }
                }
            }
            if !reached {
                break;
            }
            let mut y = sink;
            while let Some(arc) = pred[y] {
                self.caps[arc] -= 1;
                self.caps[arc ^ 1] += 1;
                y = self.heads[arc ^ 1];
            }
            flow += 1;
        }
        flow
    }

    fn residual_reachable(&self, source: usize) -> Vec<bool> {
        let mut seen = vec![false; self.out.len()];
        seen[source] = true;
        let mut queue = VecDeque::from([source]);
        while let Some(x) = queue.pop_front() {
            for &arc in &self.out[x] {
                let y = self.heads[arc];
                if self.caps[arc] > 0 && !seen[y] {
                    seen[y] = true;
                    queue.push_back(y);
                }
            }
        }
        seen
    }
}

/// Minimum vertex cut separating non-adjacent `s` and `t`.
fn min_st_cut(g: &Graph, s: NodeId, t: NodeId) -> NodeSet {
    let mut net = SplitNetwork::new(g);
    let source = 2 * s as usize + 1;
    let sink = 2 * t as usize;
    net.max_flow(source, sink, u32::MAX - 1);
    let reach = net.residual_reachable(source);
    g.nodes().filter(|&v| v != s && v != t).filter(|&v| reach[2 * v as usize] && !reach[2 * v as usize + 1]).collect()
}

fn local_connectivity(g: &Graph, s: NodeId, t: NodeId, limit: u32) -> u32 {
    let mut net = SplitNetwork::new(g);
    net.max_flow(2 * s as usize + 1, 2 * t as usize, limit)
}

/// Minimum number of node removals that disconnect `g`; `n - 1` for a
/// complete graph and `0` for a disconnected one.
pub fn vertex_connectivity(g: &Graph) -> usize {
    let n = g.node_count();
    if g.is_complete() {
        return n - 1;
    }
    let mut best = (n - 2) as u32;
    for s in g.nodes() {
        for t in g.nodes().filter(|&t| t > s && !g.has_edge(s, t)) {
            best = best.min(local_connectivity(g, s, t, best));
            if best == 0 {
                return 0;
            }
        }
    }
    best as usize
}

/// Some vertex cut of size at most `k`, if one exists. The cut is a minimum
/// cut for the first (lexicographic) non-adjacent pair achieving the global
/// minimum, taken on the source side of the residual network.
pub fn find_vertex_cut(g: &Graph, k: usize) -> Option<NodeSet> {
    if g.is_complete() {
        return None;
    }
    let mut best: Option<(u32, NodeId, NodeId)> = None;
    for s in g.nodes() {
        for t in g.nodes().filter(|&t| t > s && !g.has_edge(s, t)) {
            let limit = best.map_or(u32::MAX - 1, |(b, _, _)| b);
            let value = local_connectivity(g, s, t, limit);
            if best.is_none_or(|(b, _, _)| value < b) {
                best = Some((value, s, t));
            }
        }
    }
    let (value, s, t) = best?;
    if value as usize > k {
        return None;
    }
    Some(min_st_cut(g, s, t))
}

/// Splits `g - cut` into the component holding the smallest remaining node
/// and the union of all other components.
pub fn bipartition_around_cut(g: &Graph, cut: &NodeSet) -> Result<(NodeSet, NodeSet), GraphError> {
    if let Some(&u) = cut.iter().find(|&&u| u as usize >= g.node_count()) {
        return Err(GraphError::UnknownNode(u));
    }
    let mut comps = g.components_without(cut).into_iter();
    let a = comps.next().ok_or(GraphError::NotACut)?;
    let b: NodeSet = comps.flatten().collect();
    if b.is_empty() {
        return Err(GraphError::NotACut);
    }
    Ok((a, b))
}

/// Lowest-id-first split of `s` into two sets of size at most `f`.
pub fn split_set(s: &NodeSet, f: usize) -> Result<(NodeSet, NodeSet), GraphError> {
    if s.len() > 2 * f {
        return Err(GraphError::SetTooLarge { len: s.len(), f });
    }
    let first = s.iter().take(f).copied().collect();
    let second = s.iter().skip(f).copied().collect();
    Ok((first, second))
}

/// Lowest-id-first partition of the node set into `(A, B, C)`, each of size
/// at most `f`.
pub fn three_partition(g: &Graph, f: usize) -> Result<ThreePartition, GraphError> {
    let n = g.node_count();
    if f == 0 || f >= n {
        return Err(GraphError::FaultBound { f, n });
    }
    if n > 3 * f {
        return Err(GraphError::TooManyForPartition { n, f });
    }
    let mut ids = g.nodes();
    let a = ids.by_ref().take(f).collect();
    let b = ids.by_ref().take(f).collect();
    let c = ids.collect();
    Ok(ThreePartition { a, b, c })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeasibilityReport {
    pub n: usize,
    pub f: usize,
    pub connectivity: usize,
    /// `n >= 3f + 1`.
    pub enough_nodes: bool,
    /// `κ >= 2f + 1`.
    pub enough_connectivity: bool,
    pub partition_witness: Option<ThreePartition>,
    pub cut_witness: Option<CutPartition>,
}

impl FeasibilityReport {
    pub fn feasible(&self) -> bool {
        self.enough_nodes && self.enough_connectivity
    }
}

/// Builds the `(A, B, C1, C2)` witness for a graph with a cut of size `<= 2f`.
pub fn cut_partition(g: &Graph, f: usize) -> Option<CutPartition> {
    let cut = find_vertex_cut(g, 2 * f)?;
    let (a, b) = bipartition_around_cut(g, &cut).ok()?;
    let (c1, c2) = split_set(&cut, f).ok()?;
    Some(CutPartition { a, b, c1, c2 })
}

pub fn check_feasibility(g: &Graph, f: usize) -> Result<FeasibilityReport, GraphError> {
    FaultModel::new(f, g)?;
    let n = g.node_count();
    let connectivity = vertex_connectivity(g);
    let enough_nodes = n > 3 * f;
    let enough_connectivity = connectivity > 2 * f;
    let partition_witness = if enough_nodes { None } else { three_partition(g, f).ok() };
    let cut_witness = if enough_connectivity { None } else { cut_partition(g, f) };
    Ok(FeasibilityReport { n, f, connectivity, enough_nodes, enough_connectivity, partition_witness, cut_witness })
}
