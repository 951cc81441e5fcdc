//! Mechanical refutation of candidate algorithms on graphs that are too
//! small or too sparsely connected.
//!
//! A forge run measures Δ on a crash execution `E1` of the graph, runs the
//! candidate on a gadget network (execution ℰ) whose prefix replays `E1`,
//! re-runs the later executions directly on the graph with faulty nodes
//! replaying their ℰ transmissions, and checks that every non-faulty node's
//! local view matches its designated gadget copy. The verdict is computed by
//! [`assess`], which works from traces alone so a saved report can be
//! re-checked.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::conditions::{check_conditions, ConditionFailure, TOLERANCE};
use crate::gadget::{build_theorem1_gadget, build_theorem2_gadget, GadgetError, GadgetGraph};
use crate::graph::{cut_partition, three_partition, vertex_connectivity, Graph, GraphError, NodeId, NodeSet};
use crate::protocols::{crash_behavior, eager_replay_behavior, ProtocolConfig, ProtocolError};
use crate::sim::{
    local_view, run, Algorithm, Behavior, CopyId, LocalView, Outcome, Payload, RunConfig, Schedule, SimError,
    StartMode, Tag, Topology, Trace, ViewEntry,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Theorem {
    /// Too few nodes: `n <= 3f`.
    NodeCount,
    /// Too little connectivity: `κ <= 2f`.
    Connectivity,
}

impl Theorem {
    pub fn number(self) -> u8 {
        match self {
            Theorem::NodeCount => 1,
            Theorem::Connectivity => 2,
        }
    }

    pub fn from_number(k: u8) -> Option<Self> {
        match k {
            1 => Some(Theorem::NodeCount),
            2 => Some(Theorem::Connectivity),
            _ => None,
        }
    }
}

/// Which side the node-count construction makes faulty in `E2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `A` faulty, `B` expected to output `U`.
    Base,
    /// `B` faulty, slow copies get input `L`, `A` expected to output `L`.
    Mirror,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Base => "base",
            Branch::Mirror => "mirror",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultKind {
    Crash,
    Replay,
}

impl FaultKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FaultKind::Crash => "crash",
            FaultKind::Replay => "replay",
        }
    }
}

/// One execution of the source graph modelled by part of the gadget run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionSpec {
    pub name: String,
    pub faulty: NodeSet,
    pub fault_kind: FaultKind,
    /// Input of every node, faulty ones included (theirs is unused).
    pub inputs: BTreeMap<NodeId, f64>,
    /// Gadget copy that models each non-faulty node.
    pub view_map: BTreeMap<NodeId, CopyId>,
    /// Gadget copy whose transmissions each replaying faulty node repeats.
    pub script_map: BTreeMap<NodeId, CopyId>,
    /// Non-faulty nodes whose decisions the verdict inspects.
    pub checked: NodeSet,
    /// Views are compared up to this step only.
    pub horizon: Option<u64>,
}

impl ExecutionSpec {
    fn honest_inputs(&self) -> BTreeMap<NodeId, f64> {
        self.inputs.iter().filter(|(u, _)| !self.faulty.contains(u)).map(|(&u, &x)| (u, x)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Execution {
    pub spec: ExecutionSpec,
    pub trace: Trace,
}

/// First point where two local views differ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Divergence {
    /// Entry index, or `None` when the inputs differ.
    pub index: Option<usize>,
    /// Byte offset inside the payload when both entries are receptions.
    pub byte_offset: Option<usize>,
    pub detail: String,
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.index, self.byte_offset) {
            (None, _) => write!(f, "input: {}", self.detail),
            (Some(i), None) => write!(f, "entry {i}: {}", self.detail),
            (Some(i), Some(b)) => write!(f, "entry {i}, byte {b}: {}", self.detail),
        }
    }
}

/// Per-node view comparison between a graph run and the gadget run.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub execution: String,
    pub node: NodeId,
    pub copy: CopyId,
    pub divergence: Option<Divergence>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    ViolatedValidity { execution: String, node: NodeId, output: f64, lower: f64, upper: f64 },
    ViolatedAgreement { execution: String, a: NodeId, a_output: f64, b: NodeId, b_output: f64, epsilon: f64 },
    VictimDidNotTerminate { execution: String, nodes: Vec<NodeId>, outcome: Outcome },
    VictimSurvived { explanation: String },
}

impl Verdict {
    pub fn kind(&self) -> &'static str {
        match self {
            Verdict::ViolatedValidity { .. } => "violated-validity",
            Verdict::ViolatedAgreement { .. } => "violated-agreement",
            Verdict::VictimDidNotTerminate { .. } => "victim-did-not-terminate",
            Verdict::VictimSurvived { .. } => "victim-survived",
        }
    }

    /// True for the verdicts that refute the victim.
    pub fn refutes(&self) -> bool {
        !matches!(self, Verdict::VictimSurvived { .. })
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::ViolatedValidity { execution, node, output, lower, upper } => write!(
                f,
                "validity violated in {execution}: node {node} output {output} outside [{lower}, {upper}]"
            ),
            Verdict::ViolatedAgreement { execution, a, a_output, b, b_output, epsilon } => write!(
                f,
                "agreement violated in {execution}: node {a} output {a_output}, node {b} output {b_output}, epsilon {epsilon}"
            ),
            Verdict::VictimDidNotTerminate { execution, nodes, outcome } => {
                write!(f, "victim did not terminate in {execution} ({outcome}); unfinished nodes {nodes:?}")
            }
            Verdict::VictimSurvived { explanation } => write!(f, "victim survived: {explanation}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForgeReport {
    pub theorem: Theorem,
    pub branch: Option<Branch>,
    pub cfg: ProtocolConfig,
    pub seed: u64,
    /// Step of the last halt in `E1`; absent when `E1` did not terminate.
    pub delta: Option<u64>,
    pub gadget: Option<GadgetGraph>,
    pub gadget_trace: Option<Trace>,
    /// `E1` first, then the executions built from the gadget run.
    pub executions: Vec<Execution>,
    pub certificates: Vec<Certificate>,
    pub verdict: Verdict,
}

impl ForgeReport {
    pub fn execution(&self, name: &str) -> Option<&Execution> {
        self.executions.iter().find(|e| e.spec.name == name)
    }

    /// Recomputes the verdict from the embedded traces.
    pub fn recheck(&self) -> (Vec<Certificate>, Verdict) {
        assess(&self.cfg, self.gadget_trace.as_ref(), &self.executions)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ForgeError {
    Inapplicable(String),
    Config(ProtocolError),
    Graph(GraphError),
    Gadget(GadgetError),
    Sim(SimError),
}

impl fmt::Display for ForgeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ForgeError::Inapplicable(why) => write!(f, "construction inapplicable: {why}"),
            ForgeError::Config(e) => write!(f, "configuration: {e}"),
            ForgeError::Graph(e) => write!(f, "graph: {e}"),
            ForgeError::Gadget(e) => write!(f, "gadget: {e}"),
            ForgeError::Sim(e) => write!(f, "simulation: {e}"),
        }
    }
}

impl From<SimError> for ForgeError {
    fn from(e: SimError) -> Self {
        ForgeError::Sim(e)
    }
}

impl From<GadgetError> for ForgeError {
    fn from(e: GadgetError) -> Self {
        ForgeError::Gadget(e)
    }
}

impl From<ProtocolError> for ForgeError {
    fn from(e: ProtocolError) -> Self {
        ForgeError::Config(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForgeOptions {
    pub cfg: ProtocolConfig,
    pub seed: u64,
    pub max_steps: u64,
    /// Pick the node-count branch from `E1`'s outputs; otherwise always base.
    pub mirror_auto: bool,
}

/// Runs `E1` on `g` with `crash_set` crashed from the start. Returns Δ (the
/// step of the last halt) when every other node halted, plus the trace.
pub fn measure_delta(
    g: &Graph,
    crash_set: &NodeSet,
    inputs: &BTreeMap<NodeId, f64>,
    victim: &dyn Algorithm,
    seed: u64,
    max_steps: u64,
) -> Result<(Option<u64>, Trace), SimError> {
    let n = g.node_count();
    let behaviors =
        (0..n as NodeId).map(|u| if crash_set.contains(&u) { crash_behavior() } else { victim.spawn(u) }).collect();
    let start_modes =
        (0..n as NodeId).map(|u| if crash_set.contains(&u) { StartMode::Crashed } else { StartMode::Normal }).collect();
    let trace = run(RunConfig {
        topology: Topology::from_graph(g),
        behaviors,
        inputs: full_inputs(n, inputs),
        start_modes,
        seed,
        max_steps,
        schedule: Schedule::Random,
    })?;
    let delta = (trace.outcome == Outcome::Quiescent).then(|| trace.last_halt_step());
    Ok((delta, trace))
}

fn full_inputs(n: usize, inputs: &BTreeMap<NodeId, f64>) -> Vec<f64> {
    (0..n as NodeId).map(|u| inputs.get(&u).copied().unwrap_or(0.0)).collect()
}

/// Ordered send payloads of each listed copy, keyed by original node.
pub fn run_script_extraction(
    gadget_trace: &Trace,
    copies: impl IntoIterator<Item = CopyId>,
) -> BTreeMap<NodeId, Vec<Payload>> {
    copies.into_iter().map(|c| (c.original, gadget_trace.sends_of(c))).collect()
}

/// Compares two views entry by entry, senders by original id, ignoring
/// steps. Entries after `horizon` are dropped from both sides.
pub fn check_indistinguishable(
    view_g: &LocalView,
    view_gadget: &LocalView,
    horizon: Option<u64>,
) -> Result<(), Divergence> {
    if view_g.input.map(f64::to_bits) != view_gadget.input.map(f64::to_bits) {
        return Err(Divergence {
            index: None,
            byte_offset: None,
            detail: format!("{:?} vs {:?}", view_g.input, view_gadget.input),
        });
    }
    let cut = |v: &LocalView| -> Vec<ViewEntry> {
        v.entries.iter().filter(|(s, _)| horizon.is_none_or(|h| *s <= h)).map(|(_, e)| e.clone()).collect()
    };
    let (left, right) = (cut(view_g), cut(view_gadget));
    for i in 0..left.len().max(right.len()) {
        let (l, r) = match (left.get(i), right.get(i)) {
            (Some(l), Some(r)) => (l, r),
            (Some(l), None) => {
                return Err(Divergence { index: Some(i), byte_offset: None, detail: format!("{l:?} vs end of view") })
            }
            (None, Some(r)) => {
                return Err(Divergence { index: Some(i), byte_offset: None, detail: format!("end of view vs {r:?}") })
            }
            (None, None) => unreachable!(),
        };
        if let Err(d) = compare_entries(l, r) {
            return Err(Divergence { index: Some(i), ..d });
        }
    }
    Ok(())
}

fn compare_entries(l: &ViewEntry, r: &ViewEntry) -> Result<(), Divergence> {
    let fail = |byte_offset, detail| Err(Divergence { index: None, byte_offset, detail });
    match (l, r) {
        (ViewEntry::Receive { sender: s1, payload: p1 }, ViewEntry::Receive { sender: s2, payload: p2 }) => {
            if s1 != s2 {
                return fail(None, format!("sender {s1} vs {s2}"));
            }
            if let Some(k) = (0..p1.len().min(p2.len())).find(|&k| p1[k] != p2[k]) {
                return fail(Some(k), format!("payload byte {:#04x} vs {:#04x}", p1[k], p2[k]));
            }
            if p1.len() != p2.len() {
                return fail(Some(p1.len().min(p2.len())), format!("payload length {} vs {}", p1.len(), p2.len()));
            }
            Ok(())
        }
        (ViewEntry::Decide(a), ViewEntry::Decide(b)) if a.to_bits() == b.to_bits() => Ok(()),
        (ViewEntry::Halt, ViewEntry::Halt) => Ok(()),
        _ => fail(None, format!("{l:?} vs {r:?}")),
    }
}

/// Computes the certificates and the verdict. Checks run in a fixed order:
/// `E1` termination, agreement and validity; view certificates and replay
/// scripts of every later execution; then validity of the checked nodes in
/// the later executions.
pub fn assess(
    cfg: &ProtocolConfig,
    gadget_trace: Option<&Trace>,
    executions: &[Execution],
) -> (Vec<Certificate>, Verdict) {
    let Some(e1) = executions.first() else {
        return (Vec::new(), Verdict::VictimSurvived { explanation: "no executions to assess".into() });
    };
    let name = e1.spec.name.clone();
    let report = check_conditions(&e1.trace, &e1.spec.faulty, &e1.spec.honest_inputs(), cfg.epsilon);
    let unfinished: Vec<NodeId> = {
        let decided = e1.trace.decisions();
        let halted = e1.trace.halted();
        (0..e1.trace.labels.len() as NodeId)
            .filter(|u| !e1.spec.faulty.contains(u))
            .filter(|&u| !(decided.contains_key(&CopyId::sole(u)) && halted.contains(&CopyId::sole(u))))
            .collect()
    };
    if e1.trace.outcome != Outcome::Quiescent || !unfinished.is_empty() {
        let verdict = Verdict::VictimDidNotTerminate { execution: name, nodes: unfinished, outcome: e1.trace.outcome };
        return (Vec::new(), verdict);
    }
    if let Some(ConditionFailure::Agreement { a, a_value, b, b_value }) = report.agreement {
        let verdict = Verdict::ViolatedAgreement {
            execution: name,
            a,
            a_output: a_value,
            b,
            b_output: b_value,
            epsilon: cfg.epsilon,
        };
        return (Vec::new(), verdict);
    }
    if let Some(ConditionFailure::Validity { node, value, min, max }) = report.validity {
        let verdict = Verdict::ViolatedValidity { execution: name, node, output: value, lower: min, upper: max };
        return (Vec::new(), verdict);
    }

    let Some(gt) = gadget_trace else {
        return (Vec::new(), Verdict::VictimSurvived { explanation: "no gadget run to compare against".into() });
    };
    let mut certificates = Vec::new();
    let mut first_problem: Option<String> = None;
    for ex in executions {
        if let Outcome::GuideDiverged { position } = ex.trace.outcome {
            first_problem.get_or_insert_with(|| {
                format!(
                    "{}: schedule taken from the gadget run could not be followed at delivery {position}",
                    ex.spec.name
                )
            });
        }
        for (&node, &copy) in &ex.spec.view_map {
            let divergence = match (local_view(&ex.trace, CopyId::sole(node)), local_view(gt, copy)) {
                (Ok(vg), Ok(vc)) => check_indistinguishable(&vg, &vc, ex.spec.horizon).err(),
                (Err(e), _) | (_, Err(e)) => {
                    Some(Divergence { index: None, byte_offset: None, detail: format!("{e}") })
                }
            };
            if let Some(d) = &divergence {
                first_problem.get_or_insert_with(|| {
                    format!("{}: view of node {node} differs from copy {copy} at {d}", ex.spec.name)
                });
            }
            certificates.push(Certificate { execution: ex.spec.name.clone(), node, copy, divergence });
        }
        for (&node, &copy) in &ex.spec.script_map {
            if ex.trace.sends_of(CopyId::sole(node)) != gt.sends_of(copy) {
                first_problem.get_or_insert_with(|| {
                    format!("{}: faulty node {node} did not repeat the transmissions of copy {copy}", ex.spec.name)
                });
            }
        }
    }
    if let Some(explanation) = first_problem {
        return (certificates, Verdict::VictimSurvived { explanation });
    }

    for ex in &executions[1..] {
        let honest = ex.spec.honest_inputs();
        let Some(lower) = honest.values().copied().reduce(f64::min) else { continue };
        let upper = honest.values().copied().fold(lower, f64::max);
        let decisions = ex.trace.decisions();
        for &node in &ex.spec.checked {
            if let Some(&output) = decisions.get(&CopyId::sole(node)) {
                if output < lower - TOLERANCE || output > upper + TOLERANCE {
                    let verdict =
                        Verdict::ViolatedValidity { execution: ex.spec.name.clone(), node, output, lower, upper };
                    return (certificates, verdict);
                }
            }
        }
    }
    let explanation = "every view certificate holds and every checked output respects validity; \
        this construction with this seed does not refute the victim"
        .into();
    (certificates, Verdict::VictimSurvived { explanation })
}

fn uniform(nodes: impl IntoIterator<Item = NodeId>, value: f64) -> BTreeMap<NodeId, f64> {
    nodes.into_iter().map(|u| (u, value)).collect()
}

fn map_to(nodes: &NodeSet, tag: Tag) -> BTreeMap<NodeId, CopyId> {
    nodes.iter().map(|&u| (u, CopyId::new(u, tag))).collect()
}

fn union(sets: &[&NodeSet]) -> NodeSet {
    sets.iter().flat_map(|s| s.iter().copied()).collect()
}

fn check_options(g: &Graph, opts: &ForgeOptions) -> Result<(), ForgeError> {
    opts.cfg.validate()?;
    if opts.cfg.n != g.node_count() {
        return Err(ForgeError::Config(ProtocolError::NodeCount { config: opts.cfg.n, graph: g.node_count() }));
    }
    Ok(())
}

/// Gadget run ℰ: `E1`'s deliveries mapped onto the copies that model `E1`,
/// then a random continuation.
fn run_gadget(
    gg: &GadgetGraph,
    e1: &Execution,
    victim: &dyn Algorithm,
    opts: &ForgeOptions,
) -> Result<Trace, ForgeError> {
    let topo = &gg.topology;
    let index = |u: usize| -> Result<usize, SimError> {
        let c = e1.spec.view_map.get(&(u as NodeId)).copied().unwrap_or(CopyId::sole(u as NodeId));
        topo.index_of(c).ok_or(SimError::UnknownCopy(c))
    };
    let order = e1
        .trace
        .deliveries()
        .into_iter()
        .map(|(s, r)| Ok((index(s)?, index(r)?)))
        .collect::<Result<Vec<_>, SimError>>()?;
    let schedule = Schedule::Guided { order, continue_randomly: true };
    Ok(run(gg.run_config(victim, opts.seed, opts.max_steps, schedule))?)
}

/// Runs `spec` on `g`: replaying nodes repeat their copy's ℰ sends, the
/// schedule is ℰ's deliveries into the modelling copies.
fn run_projected(
    g: &Graph,
    gg: &GadgetGraph,
    gadget_trace: &Trace,
    spec: ExecutionSpec,
    victim: &dyn Algorithm,
    opts: &ForgeOptions,
) -> Result<Execution, ForgeError> {
    let n = g.node_count();
    let scripts = run_script_extraction(gadget_trace, spec.script_map.values().copied());
    let behaviors: Vec<Box<dyn Behavior>> = (0..n as NodeId)
        .map(|u| match scripts.get(&u) {
            Some(script) if spec.faulty.contains(&u) => eager_replay_behavior(script.clone()),
            _ if spec.faulty.contains(&u) => crash_behavior(),
            _ => victim.spawn(u),
        })
        .collect();
    let modelled: BTreeMap<CopyId, NodeId> =
        spec.view_map.iter().chain(spec.script_map.iter()).map(|(&u, &c)| (c, u)).collect();
    let labels = gg.topology.copies();
    let order = gadget_trace
        .deliveries()
        .into_iter()
        .filter(|&(_, r)| spec.view_map.values().any(|&c| c == labels[r]))
        .filter_map(|(s, r)| Some((*modelled.get(&labels[s])? as usize, labels[r].original as usize)))
        .collect();
    let trace = run(RunConfig {
        topology: Topology::from_graph(g),
        behaviors,
        inputs: full_inputs(n, &spec.inputs),
        start_modes: vec![StartMode::Normal; n],
        seed: opts.seed,
        max_steps: opts.max_steps,
        schedule: Schedule::Guided { order, continue_randomly: false },
    })?;
    Ok(Execution { spec, trace })
}

fn finish(
    theorem: Theorem,
    branch: Option<Branch>,
    opts: &ForgeOptions,
    delta: Option<u64>,
    gadget: Option<(GadgetGraph, Trace)>,
    executions: Vec<Execution>,
) -> ForgeReport {
    let (gadget, gadget_trace) = match gadget {
        Some((g, t)) => (Some(g), Some(t)),
        None => (None, None),
    };
    let (certificates, verdict) = assess(&opts.cfg, gadget_trace.as_ref(), &executions);
    ForgeReport {
        theorem,
        branch,
        cfg: opts.cfg,
        seed: opts.seed,
        delta,
        gadget,
        gadget_trace,
        executions,
        certificates,
        verdict,
    }
}

/// Node-count construction. Non-complete graphs are completed first, since
/// an algorithm for a sparser graph also runs on the complete one.
pub fn verify_theorem1(g: &Graph, victim: &dyn Algorithm, opts: &ForgeOptions) -> Result<ForgeReport, ForgeError> {
    check_options(g, opts)?;
    let cfg = opts.cfg;
    let (n, f) = (g.node_count(), cfg.f);
    if n > 3 * f {
        return Err(ForgeError::Inapplicable(format!("n = {n} exceeds 3f = {}", 3 * f)));
    }
    let g = &g.completion();
    let p = three_partition(g, f).map_err(ForgeError::Graph)?;
    let (lo, hi) = (cfg.lower, cfg.upper);

    let mut e1_inputs = uniform(g.nodes(), hi);
    e1_inputs.extend(uniform(p.a.iter().copied(), lo));
    let (delta, e1_trace) = measure_delta(g, &p.c, &e1_inputs, victim, opts.seed, opts.max_steps)?;
    let e1 = Execution {
        spec: ExecutionSpec {
            name: "E1".into(),
            faulty: p.c.clone(),
            fault_kind: FaultKind::Crash,
            inputs: e1_inputs,
            view_map: map_to(&union(&[&p.a, &p.b]), Tag::Sole),
            script_map: BTreeMap::new(),
            checked: union(&[&p.a, &p.b]),
            horizon: delta,
        },
        trace: e1_trace,
    };
    let Some(delta) = delta else {
        return Ok(finish(Theorem::NodeCount, None, opts, None, None, vec![e1]));
    };

    let decisions = e1.trace.decisions();
    let b_not_upper = p.b.iter().any(|&u| decisions.get(&CopyId::sole(u)).is_some_and(|&d| (d - hi).abs() > TOLERANCE));
    let branch = if b_not_upper || !opts.mirror_auto { Branch::Base } else { Branch::Mirror };
    let mirror = branch == Branch::Mirror;

    let gg = build_theorem1_gadget(g, &p, &cfg, delta + 1, mirror)?;
    let gadget_trace = run_gadget(&gg, &e1, victim, opts)?;

    let (faulty, honest, value) = if mirror { (&p.b, &p.a, lo) } else { (&p.a, &p.b, hi) };
    let mut inputs = uniform(g.nodes(), value);
    inputs.extend(uniform(faulty.iter().copied(), if mirror { hi } else { lo }));
    let mut view_map = map_to(honest, Tag::Sole);
    view_map.extend(map_to(&p.c, Tag::Slow));
    let e2_spec = ExecutionSpec {
        name: "E2".into(),
        faulty: faulty.clone(),
        fault_kind: FaultKind::Replay,
        inputs,
        view_map,
        script_map: map_to(faulty, Tag::Sole),
        checked: honest.clone(),
        horizon: None,
    };
    let e2 = run_projected(g, &gg, &gadget_trace, e2_spec, victim, opts)?;
    Ok(finish(Theorem::NodeCount, Some(branch), opts, Some(delta), Some((gg, gadget_trace)), vec![e1, e2]))
}

/// Vertex-cut construction.
pub fn verify_theorem2(g: &Graph, victim: &dyn Algorithm, opts: &ForgeOptions) -> Result<ForgeReport, ForgeError> {
    check_options(g, opts)?;
    let cfg = opts.cfg;
    let f = cfg.f;
    let kappa = vertex_connectivity(g);
    if kappa > 2 * f {
        return Err(ForgeError::Inapplicable(format!("connectivity {kappa} exceeds 2f = {}", 2 * f)));
    }
    let p = cut_partition(g, f)
        .ok_or_else(|| ForgeError::Inapplicable("the graph has no vertex cut (complete graph)".into()))?;
    let (lo, hi) = (cfg.lower, cfg.upper);

    let mut e1_inputs = uniform(g.nodes(), hi);
    e1_inputs.extend(uniform(p.a.iter().copied(), lo));
    let mut e1_map = map_to(&p.a, Tag::Lo);
    e1_map.extend(map_to(&p.b, Tag::Hi));
    e1_map.extend(map_to(&p.c2, Tag::Sole));
    let (delta, e1_trace) = measure_delta(g, &p.c1, &e1_inputs, victim, opts.seed, opts.max_steps)?;
    let e1 = Execution {
        spec: ExecutionSpec {
            name: "E1".into(),
            faulty: p.c1.clone(),
            fault_kind: FaultKind::Crash,
            inputs: e1_inputs,
            view_map: e1_map,
            script_map: BTreeMap::new(),
            checked: union(&[&p.a, &p.b, &p.c2]),
            horizon: delta,
        },
        trace: e1_trace,
    };
    let Some(delta) = delta else {
        return Ok(finish(Theorem::Connectivity, None, opts, None, None, vec![e1]));
    };

    let gg = build_theorem2_gadget(g, &p, &cfg, delta + 1)?;
    let gadget_trace = run_gadget(&gg, &e1, victim, opts)?;

    let honest = union(&[&p.a, &p.b, &p.c1]);
    let mut executions = vec![e1];
    for (name, value, tag) in [("E2", lo, Tag::Lo), ("E3", hi, Tag::Hi)] {
        let spec = ExecutionSpec {
            name: name.into(),
            faulty: p.c2.clone(),
            fault_kind: FaultKind::Replay,
            inputs: uniform(g.nodes(), value),
            view_map: map_to(&honest, tag),
            script_map: map_to(&p.c2, Tag::Sole),
            checked: honest.clone(),
            horizon: None,
        };
        executions.push(run_projected(g, &gg, &gadget_trace, spec, victim, opts)?);
    }
    Ok(finish(Theorem::Connectivity, None, opts, Some(delta), Some((gg, gadget_trace)), executions))
}
