//! Reliable dissemination over incomplete graphs.
//!
//! Every `(stream, origin, round)` item is flooded along simple paths. A
//! receiver accepts a value when it hears it directly from the origin (links
//! are authenticated) or along `f + 1` paths whose relaying nodes are
//! pairwise disjoint. After accepting, a node stops forwarding paths for that
//! item and instead vouches for it with the one-hop path `[self]`; downstream
//! nodes treat the voucher as a path whose only relay is that node.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use super::wire::{Stream, WireMessage};
use crate::graph::NodeId;

pub type ItemKey = (Stream, NodeId, u16);

/// An item the layer has accepted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Accepted {
    pub stream: Stream,
    pub origin: NodeId,
    pub round: u16,
    pub value: String,
}

/// Result of handling one incoming message.
#[derive(Debug, Default, PartialEq, Eq)]
pub struct RelayOutput {
    pub broadcasts: Vec<WireMessage>,
    pub accepted: Option<Accepted>,
}

#[derive(Debug, Clone)]
pub struct RelayLayer {
    me: NodeId,
    n: usize,
    f: usize,
    forwarding: bool,
    corrupt: bool,
    /// relay sets (as bitmasks over node ids) seen per value, for items not yet accepted
    pending: BTreeMap<ItemKey, BTreeMap<String, Vec<u64>>>,
    accepted: BTreeMap<ItemKey, String>,
}

impl RelayLayer {
    /// `forwarding` is off on complete graphs where every item arrives
    /// directly. Requires `n <= 64`.
    pub fn new(me: NodeId, n: usize, f: usize, forwarding: bool) -> Self {
        assert!(n <= 64, "relay sets are 64-bit masks");
        RelayLayer { me, n, f, forwarding, corrupt: false, pending: BTreeMap::new(), accepted: BTreeMap::new() }
    }

    /// Faulty variant that rewrites the value of everything it forwards.
    pub fn corrupting(mut self) -> Self {
        self.corrupt = true;
        self
    }

    pub fn accepted(&self, key: &ItemKey) -> Option<&String> {
        self.accepted.get(key)
    }

    /// Own item: accepted immediately and broadcast directly.
    pub fn originate(&mut self, stream: Stream, round: u16, value: String) -> WireMessage {
        self.accepted.insert((stream, self.me, round), value.clone());
        WireMessage { kind: stream.direct(), origin: self.me, round, value, path: Vec::new() }
    }

    pub fn receive(&mut self, sender: NodeId, msg: &WireMessage) -> RelayOutput {
        let stream = msg.kind.stream();
        let key = (stream, msg.origin, msg.round);
        if msg.origin == self.me || self.accepted.contains_key(&key) || msg.origin as usize >= self.n {
            return RelayOutput::default();
        }
        if !msg.kind.is_relay() {
            if sender != msg.origin || !msg.path.is_empty() {
                return RelayOutput::default();
            }
            return self.accept(key, msg.value.clone());
        }
        let Some(relays) = self.relay_set(sender, msg) else {
            return RelayOutput::default();
        };
        let seen = self.pending.entry(key).or_default().entry(msg.value.clone()).or_default();
        if seen.contains(&relays) {
            return RelayOutput::default();
        }
        seen.push(relays);
        if has_disjoint(seen, self.f + 1) {
            return self.accept(key, msg.value.clone());
        }
        let mut out = RelayOutput::default();
        if self.forwarding {
            let mut path = msg.path.clone();
            path.push(self.me);
            out.broadcasts.push(self.outgoing(stream, msg.origin, msg.round, msg.value.clone(), path));
        }
        out
    }

    /// Bitmask of the relaying nodes, or `None` for a malformed path.
    fn relay_set(&self, sender: NodeId, msg: &WireMessage) -> Option<u64> {
        if msg.path.last() != Some(&sender) {
            return None;
        }
        let mut mask = 0u64;
        for &hop in &msg.path {
            if hop as usize >= self.n || hop == msg.origin || hop == self.me {
                return None;
            }
            let bit = 1u64 << hop;
            if mask & bit != 0 {
                return None;
            }
            mask |= bit;
        }
        Some(mask)
    }

    fn accept(&mut self, key: ItemKey, value: String) -> RelayOutput {
        self.pending.remove(&key);
        self.accepted.insert(key, value.clone());
        let (stream, origin, round) = key;
        let mut out = RelayOutput {
            broadcasts: Vec::new(),
            accepted: Some(Accepted { stream, origin, round, value: value.clone() }),
        };
        if self.forwarding {
            let voucher = alloc::vec![self.me];
            out.broadcasts.push(self.outgoing(stream, origin, round, value, voucher));
        }
        out
    }

    fn outgoing(&self, stream: Stream, origin: NodeId, round: u16, value: String, path: Vec<NodeId>) -> WireMessage {
        let value = if self.corrupt { corrupt_value(stream, &value) } else { value };
        WireMessage { kind: stream.relayed(), origin, round, value, path }
    }
}

fn corrupt_value(stream: Stream, value: &str) -> String {
    use alloc::string::ToString;
    match stream {
        Stream::Value => "999.000000000000".to_string(),
        Stream::Report => value.parse::<u64>().map(|m| (!m).to_string()).unwrap_or_default(),
    }
}

/// Whether `sets` contains `k` pairwise disjoint members.
pub fn has_disjoint(sets: &[u64], k: usize) -> bool {
    fn search(sets: &[u64], used: u64, need: usize) -> bool {
        if need == 0 {
            return true;
        }
        sets.iter()
            .enumerate()
            .filter(|(_, &s)| s & used == 0)
            .any(|(i, &s)| search(&sets[i + 1..], used | s, need - 1))
    }
    search(sets, 0, k)
}
