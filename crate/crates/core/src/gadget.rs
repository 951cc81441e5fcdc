//! Simulation networks that hold several copies of some nodes, used to run
//! several executions of a graph at once.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use crate::graph::{CutPartition, Graph, NodeId, NodeSet, ThreePartition};
use crate::protocols::ProtocolConfig;
use crate::sim::{Algorithm, Behavior, CopyId, RunConfig, Schedule, SimError, StartMode, Tag, Topology};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    /// Crash/slow construction on a complete graph. `mirror` gives the slow
    /// copies input `L` instead of `U`.
    ThreeWay { partition: ThreePartition, mirror: bool },
    /// Construction around a vertex cut `C1 ∪ C2`.
    Cut { partition: CutPartition },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GadgetGraph {
    pub source: Graph,
    pub provenance: Provenance,
    pub topology: Topology,
    pub inputs: BTreeMap<CopyId, f64>,
    pub start_modes: BTreeMap<CopyId, StartMode>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GadgetError {
    NotComplete,
    Partition(&'static str),
    Topology(SimError),
}

impl fmt::Display for GadgetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GadgetError::NotComplete => write!(f, "the crash/slow construction needs a complete graph"),
            GadgetError::Partition(why) => write!(f, "invalid partition: {why}"),
            GadgetError::Topology(e) => write!(f, "{e}"),
        }
    }
}

impl From<SimError> for GadgetError {
    fn from(e: SimError) -> Self {
        GadgetError::Topology(e)
    }
}

/// Accumulates copies and edges by copy id.
struct Builder {
    copies: Vec<CopyId>,
    undirected: Vec<(CopyId, CopyId)>,
    directed: Vec<(CopyId, CopyId)>,
    inputs: BTreeMap<CopyId, f64>,
    modes: BTreeMap<CopyId, StartMode>,
}

impl Builder {
    fn new() -> Self {
        Builder {
            copies: Vec::new(),
            undirected: Vec::new(),
            directed: Vec::new(),
            inputs: BTreeMap::new(),
            modes: BTreeMap::new(),
        }
    }

    fn copy(&mut self, u: NodeId, tag: Tag, input: f64, mode: StartMode) {
        let c = CopyId::new(u, tag);
        self.copies.push(c);
        self.inputs.insert(c, input);
        self.modes.insert(c, mode);
    }

    fn edge(&mut self, u: NodeId, ut: Tag, v: NodeId, vt: Tag) {
        self.undirected.push((CopyId::new(u, ut), CopyId::new(v, vt)));
    }

    fn arc(&mut self, from: NodeId, ft: Tag, to: NodeId, tt: Tag) {
        self.directed.push((CopyId::new(from, ft), CopyId::new(to, tt)));
    }

    fn finish(self, source: &Graph, provenance: Provenance) -> Result<GadgetGraph, GadgetError> {
        let index: BTreeMap<CopyId, usize> = self.copies.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let at = |c: &CopyId| index[c];
        let und: Vec<_> = self.undirected.iter().map(|(a, b)| (at(a), at(b))).collect();
        let dir: Vec<_> = self.directed.iter().map(|(a, b)| (at(a), at(b))).collect();
        let topology = Topology::new(self.copies, und, dir)?;
        Ok(GadgetGraph { source: source.clone(), provenance, topology, inputs: self.inputs, start_modes: self.modes })
    }
}

/// Crash/slow network: one copy per node of `A ∪ B`, a crashed and a slow
/// copy per node of `C`. Slow copies start at step `delta`.
pub fn build_theorem1_gadget(
    g: &Graph,
    p: &ThreePartition,
    cfg: &ProtocolConfig,
    delta: u64,
    mirror: bool,
) -> Result<GadgetGraph, GadgetError> {
    if !g.is_complete() {
        return Err(GadgetError::NotComplete);
    }
    p.validate(g, cfg.f).map_err(GadgetError::Partition)?;
    let (lo, hi) = (cfg.lower, cfg.upper);
    let mut b = Builder::new();
    for u in g.nodes() {
        if p.c.contains(&u) {
            b.copy(u, Tag::Crash, hi, StartMode::Crashed);
            b.copy(u, Tag::Slow, if mirror { lo } else { hi }, StartMode::DelayedUntil(delta));
        } else {
            b.copy(u, Tag::Sole, if p.a.contains(&u) { lo } else { hi }, StartMode::Normal);
        }
    }
    for (u, v) in g.edges() {
        match (p.c.contains(&u), p.c.contains(&v)) {
            (false, false) => b.edge(u, Tag::Sole, v, Tag::Sole),
            (false, true) => b.edge(u, Tag::Sole, v, Tag::Slow),
            (true, false) => b.edge(u, Tag::Slow, v, Tag::Sole),
            (true, true) => {
                b.edge(u, Tag::Crash, v, Tag::Crash);
                b.edge(u, Tag::Slow, v, Tag::Slow);
            }
        }
    }
    b.finish(g, Provenance::ThreeWay { partition: p.clone(), mirror })
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    A,
    B,
    C1,
    C2,
}

fn side(p: &CutPartition, u: NodeId) -> Side {
    if p.a.contains(&u) {
        Side::A
    } else if p.b.contains(&u) {
        Side::B
    } else if p.c1.contains(&u) {
        Side::C1
    } else {
        Side::C2
    }
}

/// Cut network: `Lo`/`Hi` copies of `A`, `B` and `C1`, a crashed copy of
/// `C1`, and one copy of `C2`. The `C1` `Lo`/`Hi` copies start at `delta`.
pub fn build_theorem2_gadget(
    g: &Graph,
    p: &CutPartition,
    cfg: &ProtocolConfig,
    delta: u64,
) -> Result<GadgetGraph, GadgetError> {
    p.validate(g, cfg.f).map_err(GadgetError::Partition)?;
    let (lo, hi) = (cfg.lower, cfg.upper);
    let mut b = Builder::new();
    for u in g.nodes() {
        match side(p, u) {
            Side::A | Side::B => {
                b.copy(u, Tag::Lo, lo, StartMode::Normal);
                b.copy(u, Tag::Hi, hi, StartMode::Normal);
            }
            Side::C1 => {
                b.copy(u, Tag::Crash, hi, StartMode::Crashed);
                b.copy(u, Tag::Lo, lo, StartMode::DelayedUntil(delta));
                b.copy(u, Tag::Hi, hi, StartMode::DelayedUntil(delta));
            }
            Side::C2 => b.copy(u, Tag::Sole, hi, StartMode::Normal),
        }
    }
    for (x, y) in g.edges() {
        // order each edge so that the rule lookup below is exhaustive
        let (u, v) = if side(p, x) as u8 <= side(p, y) as u8 { (x, y) } else { (y, x) };
        match (side(p, u), side(p, v)) {
            (Side::A, Side::A) | (Side::B, Side::B) | (Side::A, Side::C1) | (Side::B, Side::C1) => {
                b.edge(u, Tag::Lo, v, Tag::Lo);
                b.edge(u, Tag::Hi, v, Tag::Hi);
            }
            (Side::C1, Side::C1) => {
                b.edge(u, Tag::Lo, v, Tag::Lo);
                b.edge(u, Tag::Hi, v, Tag::Hi);
                b.edge(u, Tag::Crash, v, Tag::Crash);
            }
            (Side::C2, Side::C2) => b.edge(u, Tag::Sole, v, Tag::Sole),
            (Side::C1, Side::C2) | (Side::B, Side::C2) => {
                b.edge(u, Tag::Hi, v, Tag::Sole);
                b.arc(v, Tag::Sole, u, Tag::Lo);
            }
            (Side::A, Side::C2) => {
                b.edge(u, Tag::Lo, v, Tag::Sole);
                b.arc(v, Tag::Sole, u, Tag::Hi);
            }
            (Side::A, Side::B) => return Err(GadgetError::Partition("A and B must not be adjacent")),
            _ => unreachable!("edge endpoints are ordered by side"),
        }
    }
    b.finish(g, Provenance::Cut { partition: p.clone() })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GadgetViolation {
    /// `copy` hears from `count` copies of `source`.
    AmbiguousSender { copy: CopyId, source: NodeId, count: usize },
    /// A gadget edge whose endpoints are not adjacent in the source graph.
    NotProjectable { from: CopyId, to: CopyId },
}

impl fmt::Display for GadgetViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GadgetViolation::AmbiguousSender { copy, source, count } => {
                write!(f, "copy {copy} hears from {count} copies of node {source}")
            }
            GadgetViolation::NotProjectable { from, to } => {
                write!(f, "edge {from} -> {to} has no counterpart in the source graph")
            }
        }
    }
}

/// Every copy must hear from at most one copy of each original node, and
/// every edge must project onto an edge of the source graph.
pub fn validate_gadget(gg: &GadgetGraph) -> Vec<GadgetViolation> {
    let t = &gg.topology;
    let copies = t.copies();
    let mut out = Vec::new();
    for (x, &cx) in copies.iter().enumerate() {
        let mut per_source: BTreeMap<NodeId, usize> = BTreeMap::new();
        for &y in t.in_indices(x) {
            let cy = copies[y];
            *per_source.entry(cy.original).or_default() += 1;
            if !gg.source.has_edge(cy.original, cx.original) {
                out.push(GadgetViolation::NotProjectable { from: cy, to: cx });
            }
        }
        for (source, count) in per_source {
            if count > 1 {
                out.push(GadgetViolation::AmbiguousSender { copy: cx, source, count });
            }
        }
    }
    out
}

/// One fresh instance of the node's algorithm per copy, in topology order.
pub fn lift_behaviors(gg: &GadgetGraph, algo: &dyn Algorithm) -> Vec<Box<dyn Behavior>> {
    gg.topology.copies().iter().map(|c| algo.spawn(c.original)).collect()
}

impl GadgetGraph {
    pub fn copies_of(&self, u: NodeId) -> Vec<CopyId> {
        self.topology.copies().iter().copied().filter(|c| c.original == u).collect()
    }

    pub fn input_vec(&self) -> Vec<f64> {
        self.topology.copies().iter().map(|c| self.inputs[c]).collect()
    }

    pub fn mode_vec(&self) -> Vec<StartMode> {
        self.topology.copies().iter().map(|c| self.start_modes[c]).collect()
    }

    /// Nodes of the source graph in the given part of the provenance.
    pub fn part(&self, name: &str) -> Option<&NodeSet> {
        match (&self.provenance, name) {
            (Provenance::ThreeWay { partition, .. }, "A") => Some(&partition.a),
            (Provenance::ThreeWay { partition, .. }, "B") => Some(&partition.b),
            (Provenance::ThreeWay { partition, .. }, "C") => Some(&partition.c),
            (Provenance::Cut { partition }, "A") => Some(&partition.a),
            (Provenance::Cut { partition }, "B") => Some(&partition.b),
            (Provenance::Cut { partition }, "C1") => Some(&partition.c1),
            (Provenance::Cut { partition }, "C2") => Some(&partition.c2),
            _ => None,
        }
    }

    pub fn run_config(&self, algo: &dyn Algorithm, seed: u64, max_steps: u64, schedule: Schedule) -> RunConfig {
        RunConfig {
            topology: self.topology.clone(),
            behaviors: lift_behaviors(self, algo),
            inputs: self.input_vec(),
            start_modes: self.mode_vec(),
            seed,
            max_steps,
            schedule,
        }
    }
}
