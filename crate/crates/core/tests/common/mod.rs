//! Independent oracles shared by integration tests. Nothing here calls the
//! code it is used to check.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use lbforge_core::graph::{CutPartition, Graph, NodeId, NodeSet, ThreePartition};
use lbforge_core::rng::SplitMix64;
use lbforge_core::sim::{Action, Behavior, CopyId, RunConfig, Schedule, StartMode, Tag, Topology};

pub fn connected_without(n: usize, edges: &[(NodeId, NodeId)], removed: &BTreeSet<NodeId>) -> bool {
    let alive: Vec<NodeId> = (0..n as NodeId).filter(|u| !removed.contains(u)).collect();
    let Some(&start) = alive.first() else { return true };
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        for &(x, y) in edges {
            let next = if x == u {
                y
            } else if y == u {
                x
            } else {
                continue;
            };
            if !removed.contains(&next) && seen.insert(next) {
                queue.push_back(next);
            }
        }
    }
    seen.len() == alive.len()
}

/// Smallest removal set that disconnects the graph, by subset enumeration;
/// `n - 1` when no such set exists.
pub fn brute_connectivity(n: usize, edges: &[(NodeId, NodeId)]) -> usize {
    let mut best = n.saturating_sub(1);
    for mask in 0u32..(1 << n) {
        let size = mask.count_ones() as usize;
        if size >= best || n - size < 2 {
            continue;
        }
        let removed: BTreeSet<NodeId> = (0..n as NodeId).filter(|&u| mask >> u & 1 == 1).collect();
        if !connected_without(n, edges, &removed) {
            best = size;
        }
    }
    best
}

pub fn random_edges(rng: &mut SplitMix64, n: usize, p: f64) -> Vec<(NodeId, NodeId)> {
    let mut edges = Vec::new();
    for u in 0..n as NodeId {
        for v in u + 1..n as NodeId {
            if rng.unit_f64() < p {
                edges.push((u, v));
            }
        }
    }
    edges
}

pub fn random_connected_graph(rng: &mut SplitMix64, n: usize, p: f64) -> Graph {
    loop {
        let edges = random_edges(rng, n, p);
        if connected_without(n, &edges, &BTreeSet::new()) {
            return Graph::new(n, edges).unwrap();
        }
    }
}

fn shuffled(rng: &mut SplitMix64, n: usize) -> Vec<NodeId> {
    let mut ids: Vec<NodeId> = (0..n as NodeId).collect();
    for i in (1..n).rev() {
        ids.swap(i, rng.below(i + 1));
    }
    ids
}

/// Random `(A, B, C)` with every part of size at most `f`; needs `2 <= n <= 3f`.
pub fn random_three_partition(rng: &mut SplitMix64, n: usize, f: usize) -> ThreePartition {
    let ids = shuffled(rng, n);
    let min_a = n.saturating_sub(2 * f).max(1);
    let a_len = min_a + rng.below(f.min(n - 1) - min_a + 1);
    let rest = n - a_len;
    let min_b = rest.saturating_sub(f).max(1);
    let b_len = min_b + rng.below(f.min(rest) - min_b + 1);
    ThreePartition {
        a: ids[..a_len].iter().copied().collect(),
        b: ids[a_len..a_len + b_len].iter().copied().collect(),
        c: ids[a_len + b_len..].iter().copied().collect(),
    }
}

/// Random connected graph built around a planted cut, with its partition.
pub fn random_cut_instance(rng: &mut SplitMix64, f: usize) -> (Graph, CutPartition) {
    let a_len = 1 + rng.below(3);
    let b_len = 1 + rng.below(3);
    let c1_len = rng.below(f + 1);
    let c2_len = (rng.below(f + 1)).max(usize::from(c1_len == 0));
    let n = a_len + b_len + c1_len + c2_len;
    let ids = shuffled(rng, n);
    let take = |from: usize, len: usize| -> NodeSet { ids[from..from + len].iter().copied().collect() };
    let p = CutPartition {
        a: take(0, a_len),
        b: take(a_len, b_len),
        c1: take(a_len + b_len, c1_len),
        c2: take(a_len + b_len + c1_len, c2_len),
    };
    let cut: Vec<NodeId> = p.c1.iter().chain(p.c2.iter()).copied().collect();
    loop {
        let mut edges = Vec::new();
        for u in 0..n as NodeId {
            for v in u + 1..n as NodeId {
                let crosses = (p.a.contains(&u) && p.b.contains(&v)) || (p.b.contains(&u) && p.a.contains(&v));
                if !crosses && rng.unit_f64() < 0.5 {
                    edges.push((u, v));
                }
            }
        }
        // every side node touches the cut, so both sides hang off it
        for &u in p.a.iter().chain(p.b.iter()) {
            let c = cut[rng.below(cut.len())];
            if !edges.contains(&(u.min(c), u.max(c))) {
                edges.push((u.min(c), u.max(c)));
            }
        }
        if connected_without(n, &edges, &BTreeSet::new()) {
            return (Graph::new(n, edges).unwrap(), p);
        }
    }
}

pub type EdgeSets = (BTreeSet<(CopyId, CopyId)>, BTreeSet<(CopyId, CopyId)>);

fn undirected(set: &mut BTreeSet<(CopyId, CopyId)>, x: CopyId, y: CopyId) {
    set.insert((x.min(y), x.max(y)));
}

/// Crash/slow network edges, straight from the three edge rules.
pub fn crash_slow_edges(g: &Graph, p: &ThreePartition) -> EdgeSets {
    let mut und = BTreeSet::new();
    let in_c = |u: NodeId| p.c.contains(&u);
    for (u, v) in g.edges() {
        match (in_c(u), in_c(v)) {
            (false, false) => undirected(&mut und, CopyId::sole(u), CopyId::sole(v)),
            (false, true) => undirected(&mut und, CopyId::sole(u), CopyId::new(v, Tag::Slow)),
            (true, false) => undirected(&mut und, CopyId::new(u, Tag::Slow), CopyId::sole(v)),
            (true, true) => {
                undirected(&mut und, CopyId::new(u, Tag::Crash), CopyId::new(v, Tag::Crash));
                undirected(&mut und, CopyId::new(u, Tag::Slow), CopyId::new(v, Tag::Slow));
            }
        }
    }
    (und, BTreeSet::new())
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
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

/// Cut network edges, straight from the eight edge rules.
pub fn cut_edges(g: &Graph, p: &CutPartition) -> EdgeSets {
    let (mut und, mut dir) = (BTreeSet::new(), BTreeSet::new());
    let lo = |u| CopyId::new(u, Tag::Lo);
    let hi = |u| CopyId::new(u, Tag::Hi);
    for (x, y) in g.edges() {
        for (u, v) in [(x, y), (y, x)] {
            match (side(p, u), side(p, v)) {
                (Side::A, Side::A) | (Side::B, Side::B) => {
                    undirected(&mut und, lo(u), lo(v));
                    undirected(&mut und, hi(u), hi(v));
                }
                (Side::C1, Side::C1) => {
                    undirected(&mut und, lo(u), lo(v));
                    undirected(&mut und, hi(u), hi(v));
                    undirected(&mut und, CopyId::new(u, Tag::Crash), CopyId::new(v, Tag::Crash));
                }
                (Side::C2, Side::C2) => undirected(&mut und, CopyId::sole(u), CopyId::sole(v)),
                (Side::C1, Side::C2) => {
                    undirected(&mut und, hi(u), CopyId::sole(v));
                    dir.insert((CopyId::sole(v), lo(u)));
                }
                (Side::A, Side::C1) | (Side::B, Side::C1) => {
                    undirected(&mut und, lo(u), lo(v));
                    undirected(&mut und, hi(u), hi(v));
                }
                (Side::A, Side::C2) => {
                    undirected(&mut und, lo(u), CopyId::sole(v));
                    dir.insert((CopyId::sole(v), hi(u)));
                }
                (Side::B, Side::C2) => {
                    undirected(&mut und, hi(u), CopyId::sole(v));
                    dir.insert((CopyId::sole(v), lo(u)));
                }
                _ => {}
            }
        }
    }
    (und, dir)
}

/// Expected inputs and start modes of the crash/slow network.
pub fn crash_slow_setup(
    p: &ThreePartition,
    lower: f64,
    upper: f64,
    wake: u64,
    mirror: bool,
) -> (BTreeMap<CopyId, f64>, BTreeMap<CopyId, StartMode>) {
    let mut inputs = BTreeMap::new();
    let mut modes = BTreeMap::new();
    for &u in &p.a {
        inputs.insert(CopyId::sole(u), lower);
        modes.insert(CopyId::sole(u), StartMode::Normal);
    }
    for &u in &p.b {
        inputs.insert(CopyId::sole(u), upper);
        modes.insert(CopyId::sole(u), StartMode::Normal);
    }
    for &u in &p.c {
        inputs.insert(CopyId::new(u, Tag::Crash), upper);
        modes.insert(CopyId::new(u, Tag::Crash), StartMode::Crashed);
        inputs.insert(CopyId::new(u, Tag::Slow), if mirror { lower } else { upper });
        modes.insert(CopyId::new(u, Tag::Slow), StartMode::DelayedUntil(wake));
    }
    (inputs, modes)
}

/// Expected inputs and start modes of the cut network.
pub fn cut_setup(
    p: &CutPartition,
    lower: f64,
    upper: f64,
    wake: u64,
) -> (BTreeMap<CopyId, f64>, BTreeMap<CopyId, StartMode>) {
    let mut inputs = BTreeMap::new();
    let mut modes = BTreeMap::new();
    for &u in p.a.iter().chain(p.b.iter()) {
        inputs.insert(CopyId::new(u, Tag::Lo), lower);
        inputs.insert(CopyId::new(u, Tag::Hi), upper);
        modes.insert(CopyId::new(u, Tag::Lo), StartMode::Normal);
        modes.insert(CopyId::new(u, Tag::Hi), StartMode::Normal);
    }
    for &u in &p.c1 {
        inputs.insert(CopyId::new(u, Tag::Crash), upper);
        modes.insert(CopyId::new(u, Tag::Crash), StartMode::Crashed);
        inputs.insert(CopyId::new(u, Tag::Lo), lower);
        modes.insert(CopyId::new(u, Tag::Lo), StartMode::DelayedUntil(wake));
        inputs.insert(CopyId::new(u, Tag::Hi), upper);
        modes.insert(CopyId::new(u, Tag::Hi), StartMode::DelayedUntil(wake));
    }
    for &u in &p.c2 {
        inputs.insert(CopyId::sole(u), upper);
        modes.insert(CopyId::sole(u), StartMode::Normal);
    }
    (inputs, modes)
}

/// Test behavior driven by a small per-node program: sends a tagged message
/// at start and on some receptions, decides and halts after fixed counts.
pub struct Chatter {
    me: NodeId,
    seen: u32,
    budget: u32,
    decide_at: u32,
    halt_at: Option<u32>,
}

impl Behavior for Chatter {
    fn on_init(&mut self, input: f64) -> Vec<Action> {
        let mut out = vec![Action::Broadcast(vec![self.me as u8, 0, input.to_bits() as u8])];
        if self.decide_at == 0 {
            out.push(Action::Decide(input));
        }
        if self.halt_at == Some(0) {
            out.push(Action::Halt);
        }
        out
    }

    fn on_message(&mut self, sender: NodeId, payload: &[u8]) -> Vec<Action> {
        self.seen += 1;
        let mut out = Vec::new();
        let mix = payload.iter().fold(sender as u32, |h, &b| h.wrapping_mul(31).wrapping_add(b as u32));
        if self.budget > 0 && mix % 3 != 0 {
            self.budget -= 1;
            out.push(Action::Broadcast(vec![self.me as u8, self.seen as u8, mix as u8]));
        }
        if self.seen == self.decide_at {
            out.push(Action::Decide(mix as f64));
        }
        if Some(self.seen) == self.halt_at {
            out.push(Action::Halt);
        }
        out
    }
}

/// Random network (undirected plus some directed links), random start modes
/// and random [`Chatter`] programs, all derived from `seed`.
pub fn random_run(seed: u64, schedule_seed: u64) -> RunConfig {
    let mut rng = SplitMix64::new(seed);
    let m = 2 + rng.below(7);
    let copies: Vec<CopyId> = (0..m as NodeId).map(CopyId::sole).collect();
    let mut und = Vec::new();
    let mut dir = Vec::new();
    for u in 0..m {
        for v in u + 1..m {
            match rng.below(6) {
                0..=2 => und.push((u, v)),
                3 => dir.push((u, v)),
                4 => dir.push((v, u)),
                _ => {}
            }
        }
    }
    let topology = Topology::new(copies, und, dir).unwrap();
    let behaviors = (0..m as NodeId)
        .map(|me| {
            let b: Box<dyn Behavior> = Box::new(Chatter {
                me,
                seen: 0,
                budget: rng.below(8) as u32,
                decide_at: rng.below(5) as u32,
                halt_at: (rng.below(4) != 0).then(|| rng.below(12) as u32),
            });
            b
        })
        .collect();
    let inputs = (0..m).map(|_| rng.unit_f64()).collect();
    let start_modes = (0..m)
        .map(|_| match rng.below(8) {
            0 => StartMode::Crashed,
            1 | 2 => StartMode::DelayedUntil(rng.below(20) as u64),
            _ => StartMode::Normal,
        })
        .collect();
    RunConfig {
        topology,
        behaviors,
        inputs,
        start_modes,
        seed: schedule_seed,
        max_steps: 10_000,
        schedule: Schedule::Random,
    }
}
