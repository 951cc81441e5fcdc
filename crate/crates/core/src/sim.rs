//! Deterministic asynchronous execution of node state machines under local
//! broadcast.
//!
//! Logical time counts deliveries: every delivery advances the clock by one
//! and the actions it triggers are stamped with the same step. Nodes in
//! [`StartMode::DelayedUntil`] wake once the clock reaches their step; if
//! nothing else can happen the clock jumps forward to the next wake-up.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::graph::{Graph, NodeId};
use crate::rng::SplitMix64;

pub type Payload = Arc<[u8]>;

/// Role of a node copy inside a simulation network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tag {
    Sole,
    Crash,
    Slow,
    Lo,
    Hi,
}

impl Tag {
    pub fn as_str(self) -> &'static str {
        match self {
            Tag::Sole => "sole",
            Tag::Crash => "crash",
            Tag::Slow => "slow",
            Tag::Lo => "lo",
            Tag::Hi => "hi",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CopyId {
    pub original: NodeId,
    pub tag: Tag,
}

impl CopyId {
    pub const fn new(original: NodeId, tag: Tag) -> Self {
        CopyId { original, tag }
    }

    pub const fn sole(original: NodeId) -> Self {
        CopyId { original, tag: Tag::Sole }
    }
}

impl fmt::Display for CopyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.tag {
            Tag::Sole => write!(f, "{}", self.original),
            tag => write!(f, "{}:{}", self.original, tag.as_str()),
        }
    }
}

impl FromStr for CopyId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (id, tag) = match s.split_once(':') {
            Some((id, tag)) => {
                let tag = match tag {
                    "sole" => Tag::Sole,
                    "crash" => Tag::Crash,
                    "slow" => Tag::Slow,
                    "lo" => Tag::Lo,
                    "hi" => Tag::Hi,
                    other => return Err(alloc::format!("unknown copy tag `{other}`")),
                };
                (id, tag)
            }
            None => (s, Tag::Sole),
        };
        let original = id.parse().map_err(|_| alloc::format!("bad node id `{id}`"))?;
        Ok(CopyId { original, tag })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Broadcast(Vec<u8>),
    Decide(f64),
    Halt,
}

/// Per-node state machine. The engine passes the original node id of the
/// sender, so a behavior written for a graph runs unchanged on any copy.
pub trait Behavior {
    fn on_init(&mut self, input: f64) -> Vec<Action>;
    fn on_message(&mut self, sender: NodeId, payload: &[u8]) -> Vec<Action>;
}

/// A distributed algorithm: one fresh behavior per node (or copy of a node).
pub trait Algorithm {
    fn spawn(&self, node: NodeId) -> Box<dyn Behavior>;
}

impl<F> Algorithm for F
where
    F: Fn(NodeId) -> Box<dyn Behavior>,
{
    fn spawn(&self, node: NodeId) -> Box<dyn Behavior> {
        self(node)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartMode {
    Normal,
    Crashed,
    DelayedUntil(u64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SimError {
    UnknownCopy(CopyId),
    DuplicateCopy(CopyId),
    BadEdge(usize, usize),
    ConflictingEdge(usize, usize),
    CoverageMismatch { copies: usize, behaviors: usize, inputs: usize, modes: usize },
    ZeroStepBudget,
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::UnknownCopy(c) => write!(f, "unknown copy {c}"),
            SimError::DuplicateCopy(c) => write!(f, "copy {c} listed twice"),
            SimError::BadEdge(u, v) => write!(f, "edge {u}-{v} is a self-loop or names a missing copy"),
            SimError::ConflictingEdge(u, v) => write!(f, "pair {u}-{v} appears more than once"),
            SimError::CoverageMismatch { copies, behaviors, inputs, modes } => {
                write!(f, "{copies} copies but {behaviors} behaviors, {inputs} inputs, {modes} start modes")
            }
            SimError::ZeroStepBudget => write!(f, "max_steps must be positive"),
        }
    }
}

/// Network over copies, with undirected and directed edges. A directed edge
/// `u -> v` carries `u`'s broadcasts to `v` but not the reverse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    copies: Vec<CopyId>,
    index: BTreeMap<CopyId, usize>,
    undirected: BTreeSet<(usize, usize)>,
    directed: BTreeSet<(usize, usize)>,
    out: Vec<Vec<usize>>,
    inn: Vec<Vec<usize>>,
}

impl Topology {
    pub fn new(
        copies: Vec<CopyId>,
        undirected: impl IntoIterator<Item = (usize, usize)>,
        directed: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, SimError> {
        let mut index = BTreeMap::new();
        for (i, &c) in copies.iter().enumerate() {
            if index.insert(c, i).is_some() {
                return Err(SimError::DuplicateCopy(c));
            }
        }
        let m = copies.len();
        let mut pairs = BTreeSet::new();
        let mut und = BTreeSet::new();
        let mut dir = BTreeSet::new();
        let mut check = |u: usize, v: usize| -> Result<(), SimError> {
            if u == v || u >= m || v >= m {
                return Err(SimError::BadEdge(u, v));
            }
            if !pairs.insert((u.min(v), u.max(v))) {
                return Err(SimError::ConflictingEdge(u, v));
            }
            Ok(())
        };
        for (u, v) in undirected {
            check(u, v)?;
            und.insert((u.min(v), u.max(v)));
        }
        for (u, v) in directed {
            check(u, v)?;
            dir.insert((u, v));
        }
        let mut out = vec![Vec::new(); m];
        let mut inn = vec![Vec::new(); m];
        for &(u, v) in &und {
            out[u].push(v);
            out[v].push(u);
            inn[u].push(v);
            inn[v].push(u);
        }
        for &(u, v) in &dir {
            out[u].push(v);
            inn[v].push(u);
        }
        for list in out.iter_mut().chain(inn.iter_mut()) {
            list.sort_unstable();
        }
        Ok(Topology { copies, index, undirected: und, directed: dir, out, inn })
    }

    /// A plain graph: one `Sole` copy per node, every edge undirected.
    pub fn from_graph(g: &Graph) -> Self {
        let copies = g.nodes().map(CopyId::sole).collect();
        let edges = g.edges().into_iter().map(|(u, v)| (u as usize, v as usize));
        Topology::new(copies, edges, []).expect("graph edges are valid")
    }

    pub fn len(&self) -> usize {
        self.copies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.copies.is_empty()
    }

    pub fn copies(&self) -> &[CopyId] {
        &self.copies
    }

    pub fn index_of(&self, c: CopyId) -> Option<usize> {
        self.index.get(&c).copied()
    }

    pub fn undirected_edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.undirected
    }

    pub fn directed_edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.directed
    }

    pub fn out_indices(&self, u: usize) -> &[usize] {
        &self.out[u]
    }

    /// Copies whose broadcasts reach `u`.
    pub fn in_indices(&self, u: usize) -> &[usize] {
        &self.inn[u]
    }

    pub fn out_neighbors(&self, u: CopyId) -> Result<BTreeSet<CopyId>, SimError> {
        let i = self.index_of(u).ok_or(SimError::UnknownCopy(u))?;
        Ok(self.out[i].iter().map(|&j| self.copies[j]).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    /// The node takes its first step; carries its input.
    Activate {
        node: usize,
        input: f64,
    },
    Send {
        sender: usize,
        payload: Payload,
    },
    Deliver {
        sender: usize,
        receiver: usize,
        payload: Payload,
    },
    Decide {
        node: usize,
        value: f64,
    },
    Halt {
        node: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub step: u64,
    pub kind: EventKind,
}

/// How an execution ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// Every non-crashed node halted.
    Quiescent,
    /// Live nodes remain but nothing can be delivered and nobody will wake.
    Stalled,
    /// The delivery budget ran out with live nodes.
    StepLimit,
    /// A guided run delivered its whole script and stopped there.
    GuideExhausted,
    /// The guide asked for a delivery that was not available.
    GuideDiverged { position: usize },
}

impl Outcome {
    pub fn is_clean(self) -> bool {
        self == Outcome::Quiescent
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Quiescent => write!(f, "quiescent"),
            Outcome::Stalled => write!(f, "stalled"),
            Outcome::StepLimit => write!(f, "step-limit"),
            Outcome::GuideExhausted => write!(f, "guide-exhausted"),
            Outcome::GuideDiverged { position } => write!(f, "guide-diverged@{position}"),
        }
    }
}

impl FromStr for Outcome {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "quiescent" => Outcome::Quiescent,
            "stalled" => Outcome::Stalled,
            "step-limit" => Outcome::StepLimit,
            "guide-exhausted" => Outcome::GuideExhausted,
            other => {
                let pos = other
                    .strip_prefix("guide-diverged@")
                    .and_then(|p| p.parse().ok())
                    .ok_or_else(|| alloc::format!("unknown outcome `{other}`"))?;
                Outcome::GuideDiverged { position: pos }
            }
        })
    }
}

/// Totally ordered record of one execution.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub labels: Vec<CopyId>,
    pub events: Vec<Event>,
    pub outcome: Outcome,
}

impl Trace {
    pub fn index_of(&self, c: CopyId) -> Option<usize> {
        self.labels.iter().position(|&l| l == c)
    }

    /// First decision of every copy that decided.
    pub fn decisions(&self) -> BTreeMap<CopyId, f64> {
        let mut out = BTreeMap::new();
        for e in &self.events {
            if let EventKind::Decide { node, value } = e.kind {
                out.entry(self.labels[node]).or_insert(value);
            }
        }
        out
    }

    pub fn halted(&self) -> BTreeSet<CopyId> {
        self.events
            .iter()
            .filter_map(|e| match e.kind {
                EventKind::Halt { node } => Some(self.labels[node]),
                _ => None,
            })
            .collect()
    }

    /// Step of the last halt, or 0 when nobody halted.
    pub fn last_halt_step(&self) -> u64 {
        self.events.iter().filter(|e| matches!(e.kind, EventKind::Halt { .. })).map(|e| e.step).max().unwrap_or(0)
    }

    /// Payloads sent by `c`, in order.
    pub fn sends_of(&self, c: CopyId) -> Vec<Payload> {
        let Some(i) = self.index_of(c) else { return Vec::new() };
        self.events
            .iter()
            .filter_map(|e| match &e.kind {
                EventKind::Send { sender, payload } if *sender == i => Some(payload.clone()),
                _ => None,
            })
            .collect()
    }

    /// Ordered `(sender, receiver)` index pairs of every delivery.
    pub fn deliveries(&self) -> Vec<(usize, usize)> {
        self.events
            .iter()
            .filter_map(|e| match e.kind {
                EventKind::Deliver { sender, receiver, .. } => Some((sender, receiver)),
                _ => None,
            })
            .collect()
    }
}

/// Delivery order policy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Schedule {
    /// Uniform choice among deliverable link heads, ordered by
    /// `(sender, receiver)` index, drawn from `SplitMix64::new(seed)`.
    Random,
    /// Deliver the head of each listed `(sender, receiver)` link in order;
    /// afterwards continue randomly or stop.
    Guided { order: Vec<(usize, usize)>, continue_randomly: bool },
}

pub struct RunConfig {
    pub topology: Topology,
    pub behaviors: Vec<Box<dyn Behavior>>,
    pub inputs: Vec<f64>,
    pub start_modes: Vec<StartMode>,
    pub seed: u64,
    pub max_steps: u64,
    pub schedule: Schedule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NodeState {
    Pending(u64),
    Crashed,
    Active,
    Halted,
}

struct Engine {
    labels: Vec<CopyId>,
    out: Vec<Vec<usize>>,
    behaviors: Vec<Box<dyn Behavior>>,
    inputs: Vec<f64>,
    states: Vec<NodeState>,
    queues: BTreeMap<(usize, usize), VecDeque<Payload>>,
    events: Vec<Event>,
    clock: u64,
}

impl Engine {
    fn record(&mut self, kind: EventKind) {
        self.events.push(Event { step: self.clock, kind });
    }

    fn activate(&mut self, node: usize) {
        self.states[node] = NodeState::Active;
        let input = self.inputs[node];
        self.record(EventKind::Activate { node, input });
        let actions = self.behaviors[node].on_init(input);
        self.apply(node, actions);
    }

    fn apply(&mut self, node: usize, actions: Vec<Action>) {
        for action in actions {
            match action {
                Action::Broadcast(bytes) => {
                    let payload: Payload = bytes.into();
                    self.record(EventKind::Send { sender: node, payload: payload.clone() });
                    for &r in &self.out[node] {
                        if matches!(self.states[r], NodeState::Active | NodeState::Pending(_)) {
                            self.queues.entry((node, r)).or_default().push_back(payload.clone());
                        }
                    }
                }
                Action::Decide(value) => self.record(EventKind::Decide { node, value }),
                Action::Halt => {
                    self.record(EventKind::Halt { node });
                    self.states[node] = NodeState::Halted;
                    self.queues.retain(|&(_, r), _| r != node);
                    return;
                }
            }
        }
    }

    fn deliver(&mut self, sender: usize, receiver: usize) {
        let payload = self
            .queues
            .get_mut(&(sender, receiver))
            .and_then(VecDeque::pop_front)
            .expect("delivery from a non-empty link");
        if self.queues.get(&(sender, receiver)).is_some_and(VecDeque::is_empty) {
            self.queues.remove(&(sender, receiver));
        }
        self.clock += 1;
        self.record(EventKind::Deliver { sender, receiver, payload: payload.clone() });
        let from = self.labels[sender].original;
        let actions = self.behaviors[receiver].on_message(from, &payload);
        self.apply(receiver, actions);
    }

    fn deliverable(&self) -> Vec<(usize, usize)> {
        self.queues
            .iter()
            .filter(|(&(_, r), q)| self.states[r] == NodeState::Active && !q.is_empty())
            .map(|(&link, _)| link)
            .collect()
    }

    fn wake_due(&mut self) {
        for node in 0..self.states.len() {
            if let NodeState::Pending(at) = self.states[node] {
                if at <= self.clock {
                    self.activate(node);
                }
            }
        }
    }

    fn next_wake(&self) -> Option<u64> {
        self.states
            .iter()
            .filter_map(|s| match s {
                NodeState::Pending(at) => Some(*at),
                _ => None,
            })
            .min()
    }

    fn all_done(&self) -> bool {
        self.states.iter().all(|s| matches!(s, NodeState::Crashed | NodeState::Halted))
    }
}

/// Random-schedule run of `alg` on a plain graph, every node starting normally.
pub fn run_on_graph(
    g: &Graph,
    alg: &dyn Algorithm,
    inputs: &[f64],
    seed: u64,
    max_steps: u64,
) -> Result<Trace, SimError> {
    let n = g.node_count();
    run(RunConfig {
        topology: Topology::from_graph(g),
        behaviors: (0..n as NodeId).map(|u| alg.spawn(u)).collect(),
        inputs: inputs.to_vec(),
        start_modes: vec![StartMode::Normal; n],
        seed,
        max_steps,
        schedule: Schedule::Random,
    })
}

/// Executes one run to completion, stall, or budget exhaustion.
pub fn run(config: RunConfig) -> Result<Trace, SimError> {
    let RunConfig { topology, behaviors, inputs, start_modes, seed, max_steps, schedule } = config;
    let m = topology.len();
    if behaviors.len() != m || inputs.len() != m || start_modes.len() != m {
        return Err(SimError::CoverageMismatch {
            copies: m,
            behaviors: behaviors.len(),
            inputs: inputs.len(),
            modes: start_modes.len(),
        });
    }
    if max_steps == 0 {
        return Err(SimError::ZeroStepBudget);
    }
    let states = start_modes
        .iter()
        .map(|mode| match mode {
            StartMode::Normal => NodeState::Pending(0),
            StartMode::Crashed => NodeState::Crashed,
            StartMode::DelayedUntil(at) => NodeState::Pending(*at),
        })
        .collect();
    let mut engine = Engine {
        labels: topology.copies.clone(),
        out: topology.out.clone(),
        behaviors,
        inputs,
        states,
        queues: BTreeMap::new(),
        events: Vec::new(),
        clock: 0,
    };
    let mut rng = SplitMix64::new(seed);
    let (guide, continue_randomly) = match schedule {
        Schedule::Random => (Vec::new(), true),
        Schedule::Guided { order, continue_randomly } => (order, continue_randomly),
    };
    let mut guide_pos = 0;
    let mut delivered = 0u64;

    let outcome = loop {
        engine.wake_due();
        if engine.all_done() {
            break Outcome::Quiescent;
        }
        if guide_pos < guide.len() {
            if delivered >= max_steps {
                break Outcome::StepLimit;
            }
            let (s, r) = guide[guide_pos];
            let ready = s < m
                && r < m
                && engine.states[r] == NodeState::Active
                && engine.queues.get(&(s, r)).is_some_and(|q| !q.is_empty());
            if !ready {
                if let Some(NodeState::Pending(at)) = engine.states.get(r).copied() {
                    engine.clock = engine.clock.max(at);
                    continue;
                }
                break Outcome::GuideDiverged { position: guide_pos };
            }
            guide_pos += 1;
            delivered += 1;
            engine.deliver(s, r);
            continue;
        }
        if !continue_randomly {
            break Outcome::GuideExhausted;
        }
        let choices = engine.deliverable();
        if choices.is_empty() {
            match engine.next_wake() {
                Some(at) => {
                    engine.clock = engine.clock.max(at);
                    continue;
                }
                None => break Outcome::Stalled,
            }
        }
        if delivered >= max_steps {
            break Outcome::StepLimit;
        }
        let (s, r) = choices[rng.below(choices.len())];
        delivered += 1;
        engine.deliver(s, r);
    };

    Ok(Trace { labels: topology.copies, events: engine.events, outcome })
}

/// One entry of a node's local view.
#[derive(Debug, Clone, PartialEq)]
pub enum ViewEntry {
    Receive { sender: NodeId, payload: Payload },
    Decide(f64),
    Halt,
}

/// What a single node observes: its input, then receptions and its own
/// decide/halt in order. A node that never ran has an empty view.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LocalView {
    pub input: Option<f64>,
    /// `(step, entry)` pairs.
    pub entries: Vec<(u64, ViewEntry)>,
}

impl LocalView {
    pub fn is_empty(&self) -> bool {
        self.input.is_none() && self.entries.is_empty()
    }

    pub fn received(&self) -> impl Iterator<Item = (NodeId, &Payload)> {
        self.entries.iter().filter_map(|(_, e)| match e {
            ViewEntry::Receive { sender, payload } => Some((*sender, payload)),
            _ => None,
        })
    }
}

pub fn local_view(trace: &Trace, node: CopyId) -> Result<LocalView, SimError> {
    let idx = trace.index_of(node).ok_or(SimError::UnknownCopy(node))?;
    let mut view = LocalView::default();
    for e in &trace.events {
        match &e.kind {
            EventKind::Activate { node, input } if *node == idx => view.input = Some(*input),
            EventKind::Deliver { sender, receiver, payload } if *receiver == idx => view.entries.push((
                e.step,
                ViewEntry::Receive { sender: trace.labels[*sender].original, payload: payload.clone() },
            )),
            EventKind::Decide { node, value } if *node == idx => view.entries.push((e.step, ViewEntry::Decide(*value))),
            EventKind::Halt { node } if *node == idx => view.entries.push((e.step, ViewEntry::Halt)),
            _ => {}
        }
    }
    Ok(view)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    LabelMismatch,
    NodeOutOfRange { event: usize },
    StepRegression { event: usize },
    NotAnEdge { event: usize, sender: usize, receiver: usize },
    DeliverWithoutSend { event: usize },
    DuplicateDelivery { event: usize },
    FifoOrder { event: usize },
    PayloadMismatch { event: usize },
    InactiveNode { event: usize, node: usize },
    EventAfterHalt { event: usize, node: usize },
    DoubleActivation { event: usize, node: usize },
    Undelivered { sender: usize, receiver: usize, missing: usize },
    NotHalted { node: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::LabelMismatch => write!(f, "trace copies differ from the topology"),
            Violation::NodeOutOfRange { event } => write!(f, "event {event} names a missing node"),
            Violation::StepRegression { event } => write!(f, "event {event} has a smaller step than its predecessor"),
            Violation::NotAnEdge { event, sender, receiver } => {
                write!(f, "event {event}: no link {sender}->{receiver}")
            }
            Violation::DeliverWithoutSend { event } => write!(f, "event {event}: delivery without a matching send"),
            Violation::DuplicateDelivery { event } => write!(f, "event {event}: message delivered twice"),
            Violation::FifoOrder { event } => write!(f, "event {event}: delivery out of FIFO order"),
            Violation::PayloadMismatch { event } => write!(f, "event {event}: delivered payload differs from the send"),
            Violation::InactiveNode { event, node } => write!(f, "event {event}: node {node} acts before activation"),
            Violation::EventAfterHalt { event, node } => write!(f, "event {event}: node {node} involved after halting"),
            Violation::DoubleActivation { event, node } => write!(f, "event {event}: node {node} activated twice"),
            Violation::Undelivered { sender, receiver, missing } => {
                write!(f, "{missing} message(s) {sender}->{receiver} never delivered to a live node")
            }
            Violation::NotHalted { node } => write!(f, "node {node} never halted in a quiescent run"),
        }
    }
}

/// Checks FIFO links, identical delivery, send-before-deliver, halted
/// silence, and (for runs that ended without pending work) fairness.
pub fn check_trace_wellformed(trace: &Trace, topology: &Topology) -> Vec<Violation> {
    let mut violations = Vec::new();
    if trace.labels != topology.copies {
        violations.push(Violation::LabelMismatch);
        return violations;
    }
    let m = topology.len();
    let links: BTreeSet<(usize, usize)> = (0..m).flat_map(|u| topology.out[u].iter().map(move |&v| (u, v))).collect();
    let mut active = vec![false; m];
    let mut halted = vec![false; m];
    // per sender: every payload sent so far
    let mut sent: Vec<Vec<Payload>> = vec![Vec::new(); m];
    // per link: number of deliveries so far
    let mut delivered: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut last_step = 0;

    for (i, e) in trace.events.iter().enumerate() {
        if e.step < last_step {
            violations.push(Violation::StepRegression { event: i });
        }
        last_step = e.step;
        let acting = match &e.kind {
            EventKind::Activate { node, .. }
            | EventKind::Send { sender: node, .. }
            | EventKind::Decide { node, .. }
            | EventKind::Halt { node } => *node,
            EventKind::Deliver { receiver, sender, .. } => {
                if *sender >= m {
                    violations.push(Violation::NodeOutOfRange { event: i });
                    continue;
                }
                *receiver
            }
        };
        if acting >= m {
            violations.push(Violation::NodeOutOfRange { event: i });
            continue;
        }
        if halted[acting] {
            violations.push(Violation::EventAfterHalt { event: i, node: acting });
            continue;
        }
        match &e.kind {
            EventKind::Activate { node, .. } => {
                if active[*node] {
                    violations.push(Violation::DoubleActivation { event: i, node: *node });
                }
                active[*node] = true;
                continue;
            }
            _ if !active[acting] => {
                violations.push(Violation::InactiveNode { event: i, node: acting });
                continue;
            }
            _ => {}
        }
        match &e.kind {
            EventKind::Send { sender, payload } => sent[*sender].push(payload.clone()),
            EventKind::Deliver { sender, receiver, payload } => {
                if !links.contains(&(*sender, *receiver)) {
                    violations.push(Violation::NotAnEdge { event: i, sender: *sender, receiver: *receiver });
                    continue;
                }
                let k = delivered.entry((*sender, *receiver)).or_insert(0);
                let history = &sent[*sender];
                if *k >= history.len() {
                    if history[..*k].iter().any(|p| p == payload) {
                        violations.push(Violation::DuplicateDelivery { event: i });
                    } else {
                        violations.push(Violation::DeliverWithoutSend { event: i });
                    }
                } else if history[*k] != *payload {
                    if history[*k..].iter().any(|p| p == payload) {
                        violations.push(Violation::FifoOrder { event: i });
                    } else if history[..*k].iter().any(|p| p == payload) {
                        violations.push(Violation::DuplicateDelivery { event: i });
                    } else {
                        violations.push(Violation::PayloadMismatch { event: i });
                    }
                }
                *k += 1;
            }
            EventKind::Halt { node } => halted[*node] = true,
            _ => {}
        }
    }

    let settled = matches!(trace.outcome, Outcome::Quiescent | Outcome::Stalled);
    if settled && violations.is_empty() {
        for r in 0..m {
            if !active[r] || halted[r] {
                continue;
            }
            if trace.outcome == Outcome::Quiescent {
                violations.push(Violation::NotHalted { node: r });
            }
            for &s in &topology.inn[r] {
                let got = delivered.get(&(s, r)).copied().unwrap_or(0);
                let total = sent[s].len();
                if got < total {
                    violations.push(Violation::Undelivered { sender: s, receiver: r, missing: total - got });
                }
            }
        }
    }
    violations
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    /// Decides its input and halts immediately.
    struct Instant;

    impl Behavior for Instant {
        fn on_init(&mut self, input: f64) -> Vec<Action> {
            vec![Action::Decide(input), Action::Halt]
        }
        fn on_message(&mut self, _: NodeId, _: &[u8]) -> Vec<Action> {
            Vec::new()
        }
    }

    /// Broadcasts one message, halts after receiving `wait` messages.
    struct PingOnce {
        wait: usize,
        seen: usize,
    }

    impl Behavior for PingOnce {
        fn on_init(&mut self, _: f64) -> Vec<Action> {
            let mut out = vec![Action::Broadcast(vec![0xAB, 0xCD])];
            if self.wait == 0 {
                out.push(Action::Halt);
            }
            out
        }
        fn on_message(&mut self, _: NodeId, _: &[u8]) -> Vec<Action> {
            self.seen += 1;
            if self.seen >= self.wait {
                vec![Action::Decide(self.seen as f64), Action::Halt]
            } else {
                Vec::new()
            }
        }
    }

    fn config(topology: Topology, behaviors: Vec<Box<dyn Behavior>>, seed: u64) -> RunConfig {
        let m = topology.len();
        RunConfig {
            topology,
            behaviors,
            inputs: vec![0.5; m],
            start_modes: vec![StartMode::Normal; m],
            seed,
            max_steps: 1000,
            schedule: Schedule::Random,
        }
    }

    #[test]
    fn single_node_decides_and_halts() {
        let topo = Topology::from_graph(&Graph::new(1, []).unwrap());
        let trace = run(config(topo.clone(), vec![Box::new(Instant)], 1)).unwrap();
        let kinds: Vec<_> = trace.events.iter().map(|e| e.kind.clone()).collect();
        assert_eq!(
            kinds,
            vec![
                EventKind::Activate { node: 0, input: 0.5 },
                EventKind::Decide { node: 0, value: 0.5 },
                EventKind::Halt { node: 0 }
            ]
        );
        assert_eq!(trace.outcome, Outcome::Quiescent);
        let view = local_view(&trace, CopyId::sole(0)).unwrap();
        assert_eq!(view.input, Some(0.5));
        assert_eq!(view.entries.len(), 2);
        assert!(check_trace_wellformed(&trace, &topo).is_empty());
    }

    #[test]
    fn two_node_exchange_delivers_each_send_once() {
        let topo = Topology::from_graph(&Graph::complete(2));
        let behaviors: Vec<Box<dyn Behavior>> =
            vec![Box::new(PingOnce { wait: 1, seen: 0 }), Box::new(PingOnce { wait: 1, seen: 0 })];
        let trace = run(config(topo.clone(), behaviors, 3)).unwrap();
        assert_eq!(trace.outcome, Outcome::Quiescent);
        assert_eq!(trace.deliveries().len(), 2);
        assert_eq!(trace.halted().len(), 2);
        for c in [CopyId::sole(0), CopyId::sole(1)] {
            assert_eq!(local_view(&trace, c).unwrap().received().count(), 1);
        }
        assert!(check_trace_wellformed(&trace, &topo).is_empty());
    }

    #[test]
    fn broadcast_reaches_every_neighbor_identically() {
        let g = Graph::new(3, [(0, 1), (0, 2)]).unwrap();
        let topo = Topology::from_graph(&g);
        let behaviors: Vec<Box<dyn Behavior>> = vec![
            Box::new(PingOnce { wait: 0, seen: 0 }),
            Box::new(PingOnce { wait: 1, seen: 0 }),
            Box::new(PingOnce { wait: 1, seen: 0 }),
        ];
        let trace = run(config(topo, behaviors, 11)).unwrap();
        let p1: Vec<_> = local_view(&trace, CopyId::sole(1)).unwrap().received().map(|(s, p)| (s, p.clone())).collect();
        let p2: Vec<_> = local_view(&trace, CopyId::sole(2)).unwrap().received().map(|(s, p)| (s, p.clone())).collect();
        assert_eq!(p1, p2);
        assert_eq!(&*p1[0].1, &[0xAB, 0xCD]);
    }

    #[test]
    fn out_neighbors_follow_edge_direction() {
        let u = CopyId::sole(0);
        let v = CopyId::sole(1);
        let t = Topology::new(vec![u, v], [(0, 1)], []).unwrap();
        assert_eq!(t.out_neighbors(u).unwrap(), [v].into());
        assert_eq!(t.out_neighbors(v).unwrap(), [u].into());

        let t = Topology::new(vec![u, v], [], [(1, 0)]).unwrap();
        assert_eq!(t.out_neighbors(v).unwrap(), [u].into());
        assert!(t.out_neighbors(u).unwrap().is_empty());

        let (w, x) = (CopyId::sole(2), CopyId::new(3, Tag::Lo));
        let t = Topology::new(vec![u, w, x], [(0, 1)], [(0, 2)]).unwrap();
        assert_eq!(t.out_neighbors(u).unwrap(), [w, x].into());
        assert_eq!(t.out_neighbors(CopyId::sole(9)), Err(SimError::UnknownCopy(CopyId::sole(9))));
    }

    #[test]
    fn topology_rejects_conflicting_pairs() {
        let copies = vec![CopyId::sole(0), CopyId::sole(1)];
        assert_eq!(Topology::new(copies.clone(), [(0, 1)], [(1, 0)]), Err(SimError::ConflictingEdge(1, 0)));
        assert_eq!(Topology::new(copies, [(0, 0)], []), Err(SimError::BadEdge(0, 0)));
    }

    #[test]
    fn crashed_nodes_have_empty_views_and_receive_nothing() {
        let topo = Topology::from_graph(&Graph::complete(2));
        let mut cfg = config(
            topo.clone(),
            vec![Box::new(PingOnce { wait: 0, seen: 0 }), Box::new(PingOnce { wait: 1, seen: 0 })],
            5,
        );
        cfg.start_modes[1] = StartMode::Crashed;
        let trace = run(cfg).unwrap();
        assert!(local_view(&trace, CopyId::sole(1)).unwrap().is_empty());
        assert!(trace.deliveries().is_empty());
        assert_eq!(trace.outcome, Outcome::Quiescent);
        assert!(check_trace_wellformed(&trace, &topo).is_empty());
    }

    #[test]
    fn delayed_nodes_receive_queued_messages_after_waking() {
        let topo = Topology::from_graph(&Graph::complete(2));
        let mut cfg = config(
            topo.clone(),
            vec![Box::new(PingOnce { wait: 0, seen: 0 }), Box::new(PingOnce { wait: 1, seen: 0 })],
            5,
        );
        cfg.start_modes[1] = StartMode::DelayedUntil(7);
        let trace = run(cfg).unwrap();
        let view = local_view(&trace, CopyId::sole(1)).unwrap();
        assert_eq!(view.received().count(), 1);
        assert!(view.entries.iter().all(|(step, _)| *step >= 7));
        assert!(check_trace_wellformed(&trace, &topo).is_empty());
    }

    #[test]
    fn stalled_and_step_limited_runs_are_reported() {
        let topo = Topology::from_graph(&Graph::complete(2));
        let cfg =
            config(topo, vec![Box::new(PingOnce { wait: 2, seen: 0 }), Box::new(PingOnce { wait: 2, seen: 0 })], 5);
        assert_eq!(run(cfg).unwrap().outcome, Outcome::Stalled);
    }

    #[test]
    fn rejects_bad_configs() {
        let topo = Topology::from_graph(&Graph::complete(2));
        let mut cfg = config(topo.clone(), vec![Box::new(Instant)], 1);
        assert!(matches!(run(cfg), Err(SimError::CoverageMismatch { .. })));
        cfg = config(topo, vec![Box::new(Instant), Box::new(Instant)], 1);
        cfg.max_steps = 0;
        assert!(matches!(run(cfg), Err(SimError::ZeroStepBudget)));
    }

    fn hand_trace(events: Vec<EventKind>) -> (Trace, Topology) {
        let topo = Topology::from_graph(&Graph::complete(2));
        let events = events.into_iter().enumerate().map(|(i, kind)| Event { step: i as u64, kind }).collect();
        (Trace { labels: topo.copies().to_vec(), events, outcome: Outcome::StepLimit }, topo)
    }

    fn p(bytes: &[u8]) -> Payload {
        bytes.to_vec().into()
    }

    #[test]
    fn checker_flags_duplicate_delivery() {
        let (trace, topo) = hand_trace(vec![
            EventKind::Activate { node: 0, input: 0.0 },
            EventKind::Activate { node: 1, input: 0.0 },
            EventKind::Send { sender: 0, payload: p(&[1]) },
            EventKind::Deliver { sender: 0, receiver: 1, payload: p(&[1]) },
            EventKind::Deliver { sender: 0, receiver: 1, payload: p(&[1]) },
        ]);
        assert_eq!(check_trace_wellformed(&trace, &topo), vec![Violation::DuplicateDelivery { event: 4 }]);
    }

    #[test]
    fn checker_flags_swapped_link_order() {
        let (trace, topo) = hand_trace(vec![
            EventKind::Activate { node: 0, input: 0.0 },
            EventKind::Activate { node: 1, input: 0.0 },
            EventKind::Send { sender: 0, payload: p(&[1]) },
            EventKind::Send { sender: 0, payload: p(&[2]) },
            EventKind::Deliver { sender: 0, receiver: 1, payload: p(&[2]) },
            EventKind::Deliver { sender: 0, receiver: 1, payload: p(&[1]) },
        ]);
        let v = check_trace_wellformed(&trace, &topo);
        assert!(v.contains(&Violation::FifoOrder { event: 4 }), "{v:?}");
    }

    #[test]
    fn checker_flags_post_halt_activity_and_phantom_delivery() {
        let (trace, topo) = hand_trace(vec![
            EventKind::Activate { node: 0, input: 0.0 },
            EventKind::Activate { node: 1, input: 0.0 },
            EventKind::Deliver { sender: 0, receiver: 1, payload: p(&[9]) },
            EventKind::Halt { node: 0 },
            EventKind::Send { sender: 0, payload: p(&[1]) },
        ]);
        assert_eq!(
            check_trace_wellformed(&trace, &topo),
            vec![Violation::DeliverWithoutSend { event: 2 }, Violation::EventAfterHalt { event: 4, node: 0 }]
        );
    }

    #[test]
    fn copy_labels_round_trip() {
        for c in [CopyId::sole(3), CopyId::new(2, Tag::Crash), CopyId::new(11, Tag::Hi)] {
            assert_eq!(c.to_string().parse::<CopyId>().unwrap(), c);
        }
        assert!("3:bogus".parse::<CopyId>().is_err());
    }
}
