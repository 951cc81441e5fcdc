//! Faulty behaviors for testing. Under local broadcast a faulty node cannot
//! tell different neighbors different things, so every strategy here is a
//! single stream of broadcasts.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use super::approx::ApproxAlgorithm;
use super::basic::crash_behavior;
use super::fixed::Fixed;
use super::wire::WireMessage;
use super::{ProtocolConfig, ProtocolError};
use crate::graph::{NodeId, NodeSet};
use crate::rng::SplitMix64;
use crate::sim::{Action, Algorithm, Behavior};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ByzantineStrategy {
    /// Crashed from the start.
    Silent,
    /// Announces the same value for every round, then stops.
    ConstantExtreme(f64),
    /// Announces an independent uniform value in `[L, U]` for every round.
    RandomInRange,
    /// Runs the protocol but rewrites every value it forwards.
    CorruptRelay,
}

impl ByzantineStrategy {
    pub const DEFAULT_EXTREME: f64 = 1000.0;
}

impl fmt::Display for ByzantineStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ByzantineStrategy::Silent => write!(f, "silent"),
            ByzantineStrategy::ConstantExtreme(v) if *v == Self::DEFAULT_EXTREME => write!(f, "constant-extreme"),
            ByzantineStrategy::ConstantExtreme(v) => write!(f, "constant-extreme:{v}"),
            ByzantineStrategy::RandomInRange => write!(f, "random-in-range"),
            ByzantineStrategy::CorruptRelay => write!(f, "corrupt-relay"),
        }
    }
}

impl FromStr for ByzantineStrategy {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "silent" | "crash" => Ok(ByzantineStrategy::Silent),
            "constant-extreme" => Ok(ByzantineStrategy::ConstantExtreme(Self::DEFAULT_EXTREME)),
            "random-in-range" => Ok(ByzantineStrategy::RandomInRange),
            "corrupt-relay" => Ok(ByzantineStrategy::CorruptRelay),
            _ => {
                let v = s.strip_prefix("constant-extreme:").ok_or(())?;
                let v: f64 = v.parse().map_err(|_| ())?;
                if v.is_finite() {
                    Ok(ByzantineStrategy::ConstantExtreme(v))
                } else {
                    Err(())
                }
            }
        }
    }
}

struct Announcer {
    script: Vec<Vec<u8>>,
}

impl Behavior for Announcer {
    fn on_init(&mut self, _: f64) -> Vec<Action> {
        let mut out: Vec<Action> = self.script.drain(..).map(Action::Broadcast).collect();
        out.push(Action::Halt);
        out
    }
    fn on_message(&mut self, _: NodeId, _: &[u8]) -> Vec<Action> {
        Vec::new()
    }
}

/// Behavior of faulty node `node` under a stateless strategy. Returns `None`
/// for [`ByzantineStrategy::CorruptRelay`], which needs the honest protocol.
pub fn byzantine_behavior(
    strategy: ByzantineStrategy,
    cfg: &ProtocolConfig,
    node: NodeId,
    seed: u64,
) -> Option<Box<dyn Behavior>> {
    let rounds = cfg.rounds() + 1;
    match strategy {
        ByzantineStrategy::Silent => Some(crash_behavior()),
        ByzantineStrategy::ConstantExtreme(x) => {
            let v = Fixed::from_f64(x).unwrap_or(Fixed::ZERO);
            let script = (1..=rounds).map(|r| WireMessage::value(node, r, v).encode()).collect();
            Some(Box::new(Announcer { script }))
        }
        ByzantineStrategy::RandomInRange => {
            let mut rng = SplitMix64::derive(seed, node as u64, 0);
            let script = (1..=rounds)
                .map(|r| {
                    let x = cfg.lower + rng.unit_f64() * (cfg.upper - cfg.lower);
                    WireMessage::value(node, r, Fixed::from_f64(x).unwrap_or(Fixed::ZERO)).encode()
                })
                .collect();
            Some(Box::new(Announcer { script }))
        }
        ByzantineStrategy::CorruptRelay => None,
    }
}

/// An honest algorithm with a fixed set of nodes replaced by a strategy.
pub struct StrategyAlgorithm {
    honest: Box<dyn Algorithm>,
    corrupt: Option<ApproxAlgorithm>,
    cfg: ProtocolConfig,
    faulty: NodeSet,
    strategy: ByzantineStrategy,
    seed: u64,
}

impl StrategyAlgorithm {
    /// Generic honest algorithm; `CorruptRelay` is rejected because only the
    /// approximate protocol has a relay to corrupt.
    pub fn new(
        honest: Box<dyn Algorithm>,
        cfg: ProtocolConfig,
        faulty: NodeSet,
        strategy: ByzantineStrategy,
        seed: u64,
    ) -> Result<Self, ProtocolError> {
        if strategy == ByzantineStrategy::CorruptRelay && !faulty.is_empty() {
            return Err(ProtocolError::UnsupportedStrategy);
        }
        Ok(StrategyAlgorithm { honest, corrupt: None, cfg, faulty, strategy, seed })
    }

    pub fn for_approx(alg: ApproxAlgorithm, faulty: NodeSet, strategy: ByzantineStrategy, seed: u64) -> Self {
        let members: Vec<NodeId> = faulty.iter().copied().collect();
        let corrupt = Some(alg.clone().with_corrupt_relays(&members));
        let cfg = alg.config();
        StrategyAlgorithm { honest: Box::new(alg), corrupt, cfg, faulty, strategy, seed }
    }

    pub fn faulty(&self) -> &NodeSet {
        &self.faulty
    }
}

impl Algorithm for StrategyAlgorithm {
    fn spawn(&self, node: NodeId) -> Box<dyn Behavior> {
        if !self.faulty.contains(&node) {
            return self.honest.spawn(node);
        }
        match byzantine_behavior(self.strategy, &self.cfg, node, self.seed) {
            Some(b) => b,
            None => match &self.corrupt {
                Some(alg) => alg.spawn(node),
                None => crash_behavior(),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn strategy_names_round_trip() {
        for s in [
            ByzantineStrategy::Silent,
            ByzantineStrategy::ConstantExtreme(1000.0),
            ByzantineStrategy::ConstantExtreme(-3.5),
            ByzantineStrategy::RandomInRange,
            ByzantineStrategy::CorruptRelay,
        ] {
            assert_eq!(s.to_string().parse::<ByzantineStrategy>(), Ok(s));
        }
        assert_eq!("crash".parse::<ByzantineStrategy>(), Ok(ByzantineStrategy::Silent));
        assert!("loud".parse::<ByzantineStrategy>().is_err());
    }

    #[test]
    fn constant_extreme_announces_every_round() {
        let cfg = ProtocolConfig::new(0.01, 0.0, 1.0, 4, 1).unwrap();
        let mut b = byzantine_behavior(ByzantineStrategy::ConstantExtreme(1000.0), &cfg, 3, 0).unwrap();
        let out = b.on_init(0.0);
        assert_eq!(out.len(), cfg.rounds() as usize + 2);
        let Action::Broadcast(first) = &out[0] else { panic!() };
        let msg = WireMessage::decode(first).unwrap();
        assert_eq!((msg.origin, msg.round, msg.fixed()), (3, 1, Fixed::from_f64(1000.0)));
        assert_eq!(out.last(), Some(&Action::Halt));
    }

    #[test]
    fn random_values_stay_in_range() {
        let cfg = ProtocolConfig::new(0.01, -1.0, 2.0, 4, 1).unwrap();
        let mut b = byzantine_behavior(ByzantineStrategy::RandomInRange, &cfg, 1, 42).unwrap();
        for a in b.on_init(0.0) {
            if let Action::Broadcast(p) = a {
                let v = WireMessage::decode(&p).unwrap().fixed().unwrap().to_f64();
                assert!((-1.0..=2.0).contains(&v));
            }
        }
    }
}
