//! Asynchronous approximate consensus for graphs with `n >= 3f + 1` and
//! connectivity at least `2f + 1`.
//!
//! Round `r` works as follows:
//!
//! 1. disseminate the current value through the relay layer;
//! 2. once `n - f` round-`r` values are accepted, disseminate a report naming
//!    their origins;
//! 3. wait until `n - f` reports (own included) name only origins whose value
//!    this node has also accepted;
//! 4. drop the `f` lowest and `f` highest accepted round-`r` values and move
//!    to the midpoint of what is left.
//!
//! Any two non-faulty nodes share a non-faulty witness, so their round-`r`
//! multisets share `n - f` values, which bounds the next interval by half of
//! the current one. After the last round a node decides, disseminates its
//! decision as a final value, tells its neighbors it is ready once it has
//! accepted `n - f` finals, and halts when all but `f` neighbors are ready.
//! A node that is still behind adopts the `(f + 1)`-th smallest of any
//! `2f + 1` finals it accepts.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::ToString;
use alloc::vec::Vec;

use super::fixed::Fixed;
use super::relay::RelayLayer;
use super::wire::{Stream, WireMessage};
use super::{ProtocolConfig, ProtocolError, MAX_PROTOCOL_NODES};
use crate::graph::{check_feasibility, Graph, NodeId, NodeSet};
use crate::sim::{Action, Algorithm, Behavior};

#[derive(Debug, Clone)]
pub struct ApproxBehavior {
    me: NodeId,
    n: usize,
    f: usize,
    rounds: u16,
    lower: Fixed,
    relay: RelayLayer,
    round: u16,
    reported: bool,
    values: BTreeMap<u16, BTreeMap<NodeId, Fixed>>,
    reports: BTreeMap<u16, BTreeMap<NodeId, u64>>,
    decided: bool,
    ready: bool,
    ready_neighbors: NodeSet,
    ready_needed: usize,
    halted: bool,
}

/// Checks feasibility of `g` for `cfg.f` and builds the behavior of `self_id`.
pub fn approx_consensus_behavior(
    cfg: ProtocolConfig,
    g: &Graph,
    self_id: NodeId,
) -> Result<ApproxBehavior, ProtocolError> {
    let alg = ApproxAlgorithm::new(cfg, g)?;
    if self_id as usize >= g.node_count() {
        return Err(crate::graph::GraphError::UnknownNode(self_id).into());
    }
    Ok(alg.behavior(self_id))
}

/// Validated configuration shared by all nodes of one run.
#[derive(Debug, Clone)]
pub struct ApproxAlgorithm {
    cfg: ProtocolConfig,
    complete: bool,
    degrees: Vec<usize>,
    corrupt_relays: Vec<NodeId>,
}

impl ApproxAlgorithm {
    pub fn new(cfg: ProtocolConfig, g: &Graph) -> Result<Self, ProtocolError> {
        cfg.validate()?;
        let n = g.node_count();
        if cfg.n != n {
            return Err(ProtocolError::NodeCount { config: cfg.n, graph: n });
        }
        if n > MAX_PROTOCOL_NODES {
            return Err(ProtocolError::TooManyNodes(n));
        }
        let report = check_feasibility(g, cfg.f)?;
        if !report.feasible() {
            return Err(ProtocolError::Infeasible { n, f: cfg.f, connectivity: report.connectivity });
        }
        let degrees = g.nodes().map(|u| g.neighbors(u).len()).collect();
        Ok(ApproxAlgorithm { cfg, complete: g.is_complete(), degrees, corrupt_relays: Vec::new() })
    }

    /// Nodes that run the protocol honestly except for rewriting everything
    /// they forward.
    pub fn with_corrupt_relays(mut self, nodes: &[NodeId]) -> Self {
        self.corrupt_relays = nodes.to_vec();
        self
    }

    pub fn config(&self) -> ProtocolConfig {
        self.cfg
    }

    pub fn behavior(&self, me: NodeId) -> ApproxBehavior {
        let mut relay = RelayLayer::new(me, self.cfg.n, self.cfg.f, !self.complete);
        if self.corrupt_relays.contains(&me) {
            relay = relay.corrupting();
        }
        ApproxBehavior {
            me,
            n: self.cfg.n,
            f: self.cfg.f,
            rounds: self.cfg.rounds(),
            lower: Fixed::from_f64(self.cfg.lower).unwrap_or(Fixed::ZERO),
            relay,
            round: 1,
            reported: false,
            values: BTreeMap::new(),
            reports: BTreeMap::new(),
            decided: false,
            ready: false,
            ready_neighbors: NodeSet::new(),
            ready_needed: self.degrees[me as usize].saturating_sub(self.cfg.f),
            halted: false,
        }
    }
}

impl Algorithm for ApproxAlgorithm {
    fn spawn(&self, node: NodeId) -> Box<dyn Behavior> {
        Box::new(self.behavior(node))
    }
}

impl ApproxBehavior {
    fn quorum(&self) -> usize {
        self.n - self.f
    }

    fn final_round(&self) -> u16 {
        self.rounds + 1
    }

    fn originate_value(&mut self, round: u16, v: Fixed, out: &mut Vec<Action>) {
        self.values.entry(round).or_default().insert(self.me, v);
        let msg = self.relay.originate(Stream::Value, round, v.to_string());
        out.push(Action::Broadcast(msg.encode()));
    }

    fn mask(&self, round: u16) -> u64 {
        self.values.get(&round).map_or(0, |m| m.keys().fold(0, |acc, &o| acc | 1u64 << o))
    }

    fn witnesses(&self, round: u16) -> usize {
        let mine = self.mask(round);
        let quorum = self.quorum() as u32;
        self.reports
            .get(&round)
            .map_or(0, |reps| reps.values().filter(|&&m| m & !mine == 0 && m.count_ones() >= quorum).count())
    }

    fn trimmed_midpoint(&self, round: u16) -> Fixed {
        let mut vals: Vec<Fixed> = self.values[&round].values().copied().collect();
        vals.sort_unstable();
        let kept = &vals[self.f..vals.len() - self.f];
        Fixed::midpoint(kept[0], kept[kept.len() - 1])
    }

    fn record(&mut self, stream: Stream, origin: NodeId, round: u16, raw: &str) {
        match stream {
            Stream::Value if (1..=self.final_round()).contains(&round) => {
                if let Ok(v) = raw.parse::<Fixed>() {
                    self.values.entry(round).or_default().entry(origin).or_insert(v);
                }
            }
            Stream::Report if (1..=self.rounds).contains(&round) => {
                if let Ok(m) = raw.parse::<u64>() {
                    self.reports.entry(round).or_default().entry(origin).or_insert(m);
                }
            }
            _ => {}
        }
    }

    fn decide(&mut self, v: Fixed, out: &mut Vec<Action>) {
        self.decided = true;
        out.push(Action::Decide(v.to_f64()));
        let last = self.final_round();
        self.originate_value(last, v, out);
    }

    fn advance(&mut self, out: &mut Vec<Action>) {
        while !self.decided {
            let r = self.round;
            let accepted = self.values.get(&r).map_or(0, BTreeMap::len);
            if !self.reported {
                if accepted < self.quorum() {
                    break;
                }
                self.reported = true;
                let mask = self.mask(r);
                self.reports.entry(r).or_default().insert(self.me, mask);
                let msg = self.relay.originate(Stream::Report, r, mask.to_string());
                out.push(Action::Broadcast(msg.encode()));
            }
            if self.witnesses(r) < self.quorum() {
                break;
            }
            let next = self.trimmed_midpoint(r);
            if r == self.rounds {
                self.decide(next, out);
            } else {
                self.round += 1;
                self.reported = false;
                self.originate_value(r + 1, next, out);
            }
        }
        let last = self.final_round();
        let finals: Vec<Fixed> = self.values.get(&last).map(|m| m.values().copied().collect()).unwrap_or_default();
        if !self.decided && finals.len() > 2 * self.f {
            let mut sorted = finals.clone();
            sorted.sort_unstable();
            self.decide(sorted[self.f], out);
        }
        // Readiness is a final-round report sent to neighbors only, never
        // relayed. A node halts once all but f neighbors are ready, so relays
        // stay up while most of the neighborhood still collects finals.
        let finals = self.values.get(&last).map_or(0, BTreeMap::len);
        if self.decided && !self.ready && finals >= self.quorum() {
            self.ready = true;
            out.push(Action::Broadcast(WireMessage::report(self.me, last, self.mask(last)).encode()));
        }
        if self.ready && self.ready_neighbors.len() >= self.ready_needed {
            self.halted = true;
            out.push(Action::Halt);
        }
    }
}

impl Behavior for ApproxBehavior {
    fn on_init(&mut self, input: f64) -> Vec<Action> {
        let mut out = Vec::new();
        let v = Fixed::from_f64(input).unwrap_or(self.lower);
        self.originate_value(1, v, &mut out);
        self.advance(&mut out);
        out
    }

    fn on_message(&mut self, sender: NodeId, payload: &[u8]) -> Vec<Action> {
        let mut out = Vec::new();
        if self.halted {
            return out;
        }
        let Some(msg) = WireMessage::decode(payload) else {
            return out;
        };
        if msg.kind.stream() == Stream::Report && msg.round == self.final_round() {
            if !msg.kind.is_relay() && msg.origin == sender && msg.path.is_empty() {
                self.ready_neighbors.insert(sender);
                self.advance(&mut out);
            }
            return out;
        }
        let res = self.relay.receive(sender, &msg);
        out.extend(res.broadcasts.into_iter().map(|m| Action::Broadcast(m.encode())));
        if let Some(acc) = res.accepted {
            self.record(acc.stream, acc.origin, acc.round, &acc.value);
            self.advance(&mut out);
        }
        out
    }
}
