//! A plausible but incorrect victim: flood values, average whatever `n - f`
//! values show up first, repeat.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use super::fixed::Fixed;
use super::wire::{Kind, WireMessage};
use super::{ProtocolConfig, ProtocolError};
use crate::graph::{Graph, NodeId};
use crate::sim::{Action, Algorithm, Behavior};

#[derive(Debug, Clone)]
pub struct NaiveBehavior {
    me: NodeId,
    quorum: usize,
    rounds: u16,
    round: u16,
    seen: BTreeSet<(NodeId, u16)>,
    values: BTreeMap<u16, Vec<Fixed>>,
    done: bool,
}

pub fn naive_behavior(
    cfg: ProtocolConfig,
    g: &Graph,
    self_id: NodeId,
    rounds: u16,
) -> Result<NaiveBehavior, ProtocolError> {
    Ok(NaiveAlgorithm::new(cfg, g, rounds)?.behavior(self_id))
}

#[derive(Debug, Clone, Copy)]
pub struct NaiveAlgorithm {
    quorum: usize,
    rounds: u16,
}

impl NaiveAlgorithm {
    pub fn new(cfg: ProtocolConfig, g: &Graph, rounds: u16) -> Result<Self, ProtocolError> {
        cfg.validate()?;
        if cfg.n != g.node_count() {
            return Err(ProtocolError::NodeCount { config: cfg.n, graph: g.node_count() });
        }
        if rounds == 0 {
            return Err(ProtocolError::ZeroRounds);
        }
        Ok(NaiveAlgorithm { quorum: cfg.quorum().max(1), rounds })
    }

    pub fn behavior(&self, me: NodeId) -> NaiveBehavior {
        NaiveBehavior {
            me,
            quorum: self.quorum,
            rounds: self.rounds,
            round: 1,
            seen: BTreeSet::new(),
            values: BTreeMap::new(),
            done: false,
        }
    }
}

impl Algorithm for NaiveAlgorithm {
    fn spawn(&self, node: NodeId) -> Box<dyn Behavior> {
        Box::new(self.behavior(node))
    }
}

impl NaiveBehavior {
    fn start_round(&mut self, v: Fixed, out: &mut Vec<Action>) {
        self.seen.insert((self.me, self.round));
        self.values.entry(self.round).or_default().push(v);
        out.push(Action::Broadcast(WireMessage::value(self.me, self.round, v).encode()));
    }

    fn advance(&mut self, out: &mut Vec<Action>) {
        while !self.done {
            let have = self.values.get(&self.round).map_or(0, Vec::len);
            if have < self.quorum {
                return;
            }
            let avg = Fixed::mean(&self.values[&self.round]).unwrap_or(Fixed::ZERO);
            if self.round >= self.rounds {
                self.done = true;
                out.push(Action::Decide(avg.to_f64()));
                out.push(Action::Halt);
            } else {
                self.round += 1;
                self.start_round(avg, out);
            }
        }
    }
}

impl Behavior for NaiveBehavior {
    fn on_init(&mut self, input: f64) -> Vec<Action> {
        let mut out = Vec::new();
        self.start_round(Fixed::from_f64(input).unwrap_or(Fixed::ZERO), &mut out);
        self.advance(&mut out);
        out
    }

    fn on_message(&mut self, _: NodeId, payload: &[u8]) -> Vec<Action> {
        let mut out = Vec::new();
        if self.done {
            return out;
        }
        let Some(msg) = WireMessage::decode(payload) else {
            return out;
        };
        if !matches!(msg.kind, Kind::Value | Kind::ValueRelay)
            || msg.round == 0
            || msg.round > self.rounds
            || !self.seen.insert((msg.origin, msg.round))
        {
            return out;
        }
        let Some(v) = msg.fixed() else {
            return out;
        };
        self.values.entry(msg.round).or_default().push(v);
        let mut path = msg.path.clone();
        path.push(self.me);
        let relay = WireMessage { kind: Kind::ValueRelay, path, ..msg };
        out.push(Action::Broadcast(relay.encode()));
        self.advance(&mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn averages_the_first_quorum_and_relays_once() {
        let g = Graph::complete(3);
        let cfg = ProtocolConfig::new(0.01, 0.0, 1.0, 3, 1).unwrap();
        let mut b = naive_behavior(cfg, &g, 0, 1).unwrap();
        let out = b.on_init(0.0);
        assert_eq!(out, vec![Action::Broadcast(WireMessage::value(0, 1, Fixed::ZERO).encode())]);
        let one = WireMessage::value(1, 1, Fixed::from_f64(1.0).unwrap());
        let out = b.on_message(1, &one.encode());
        let relayed = WireMessage { kind: Kind::ValueRelay, path: vec![0], ..one.clone() };
        assert_eq!(out, vec![Action::Broadcast(relayed.encode()), Action::Decide(0.5), Action::Halt]);
        assert!(b.on_message(2, &one.encode()).is_empty());
    }

    #[test]
    fn zero_rounds_rejected() {
        let g = Graph::complete(3);
        let cfg = ProtocolConfig::new(0.01, 0.0, 1.0, 3, 1).unwrap();
        assert!(matches!(naive_behavior(cfg, &g, 0, 0), Err(ProtocolError::ZeroRounds)));
    }
}
