//! Payload encoding shared by every protocol behavior.
//!
//! ```text
//! tag      u8        1 value, 2 relayed value, 3 report, 4 relayed report
//! origin   u16 BE
//! round    u16 BE
//! value    u16 BE length, then ASCII decimal
//! path     u16 BE count, then count x u16 BE node ids
//! ```
//!
//! Values are [`Fixed`] decimals; a report's value is the decimal form of a
//! bitmask over origin ids. A relay path lists the relaying nodes in order,
//! the last one being the node that broadcast this copy.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::fixed::Fixed;
use crate::graph::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Kind {
    Value = 1,
    ValueRelay = 2,
    Report = 3,
    ReportRelay = 4,
}

impl Kind {
    pub fn is_relay(self) -> bool {
        matches!(self, Kind::ValueRelay | Kind::ReportRelay)
    }

    pub fn stream(self) -> Stream {
        match self {
            Kind::Value | Kind::ValueRelay => Stream::Value,
            Kind::Report | Kind::ReportRelay => Stream::Report,
        }
    }
}

/// What a message is about, independently of whether it was relayed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stream {
    Value,
    Report,
}

impl Stream {
    pub fn direct(self) -> Kind {
        match self {
            Stream::Value => Kind::Value,
            Stream::Report => Kind::Report,
        }
    }

    pub fn relayed(self) -> Kind {
        match self {
            Stream::Value => Kind::ValueRelay,
            Stream::Report => Kind::ReportRelay,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WireMessage {
    pub kind: Kind,
    pub origin: NodeId,
    pub round: u16,
    pub value: String,
    pub path: Vec<NodeId>,
}

impl WireMessage {
    pub fn value(origin: NodeId, round: u16, value: Fixed) -> Self {
        WireMessage { kind: Kind::Value, origin, round, value: value.to_string(), path: Vec::new() }
    }

    pub fn report(origin: NodeId, round: u16, mask: u64) -> Self {
        WireMessage { kind: Kind::Report, origin, round, value: mask.to_string(), path: Vec::new() }
    }

    pub fn fixed(&self) -> Option<Fixed> {
        self.value.parse().ok()
    }

    pub fn mask(&self) -> Option<u64> {
        self.value.parse().ok()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(9 + self.value.len() + 2 * self.path.len());
        out.push(self.kind as u8);
        out.extend_from_slice(&self.origin.to_be_bytes());
        out.extend_from_slice(&self.round.to_be_bytes());
        out.extend_from_slice(&(self.value.len() as u16).to_be_bytes());
        out.extend_from_slice(self.value.as_bytes());
        out.extend_from_slice(&(self.path.len() as u16).to_be_bytes());
        for id in &self.path {
            out.extend_from_slice(&id.to_be_bytes());
        }
        out
    }

    /// Strict decoding: unknown tags, non-decimal values, and trailing bytes
    /// are rejected.
    pub fn decode(bytes: &[u8]) -> Option<Self> {
        let mut rest = bytes;
        let mut take = |len: usize| -> Option<&[u8]> {
            if rest.len() < len {
                return None;
            }
            let (head, tail) = rest.split_at(len);
            rest = tail;
            Some(head)
        };
        let kind = match take(1)?[0] {
            1 => Kind::Value,
            2 => Kind::ValueRelay,
            3 => Kind::Report,
            4 => Kind::ReportRelay,
            _ => return None,
        };
        let u16_at = |b: &[u8]| u16::from_be_bytes([b[0], b[1]]);
        let origin = u16_at(take(2)?);
        let round = u16_at(take(2)?);
        let len = u16_at(take(2)?) as usize;
        let raw = take(len)?;
        if !raw.iter().all(|b| b.is_ascii_digit() || *b == b'.' || *b == b'-') {
            return None;
        }
        let value = String::from_utf8(raw.to_vec()).ok()?;
        let count = u16_at(take(2)?) as usize;
        let mut path = Vec::with_capacity(count.min(64));
        for _ in 0..count {
            path.push(u16_at(take(2)?));
        }
        if !rest.is_empty() {
            return None;
        }
        Some(WireMessage { kind, origin, round, value, path })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn encodes_the_documented_layout() {
        let m = WireMessage {
            kind: Kind::ValueRelay,
            origin: 0x0102,
            round: 3,
            value: "0.5".into(),
            path: vec![7, 0x0809],
        };
        assert_eq!(m.encode(), vec![2, 1, 2, 0, 3, 0, 3, b'0', b'.', b'5', 0, 2, 0, 7, 8, 9]);
    }

    #[test]
    fn rejects_garbage() {
        let good = WireMessage::value(1, 1, Fixed::ZERO).encode();
        let mut trailing = good.clone();
        trailing.push(0);
        assert!(WireMessage::decode(&trailing).is_none());
        assert!(WireMessage::decode(&good[..good.len() - 1]).is_none());
        let mut bad_tag = good.clone();
        bad_tag[0] = 9;
        assert!(WireMessage::decode(&bad_tag).is_none());
        assert!(WireMessage::decode(&[]).is_none());
    }

    proptest! {
        #[test]
        fn decode_inverts_encode(
            tag in 1u8..=4,
            origin: u16,
            round: u16,
            units in -10i128.pow(18)..10i128.pow(18),
            path in proptest::collection::vec(any::<u16>(), 0..8),
        ) {
            let kind = match tag { 1 => Kind::Value, 2 => Kind::ValueRelay, 3 => Kind::Report, _ => Kind::ReportRelay };
            let m = WireMessage { kind, origin, round, value: Fixed::from_units(units).to_string(), path };
            prop_assert_eq!(WireMessage::decode(&m.encode()), Some(m));
        }
    }
}
