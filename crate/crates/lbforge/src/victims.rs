//! Named algorithms selectable from the command line.

use std::fmt;
use std::str::FromStr;

use anyhow::{anyhow, Result};
use lbforge_core::graph::{Graph, NodeId, NodeSet};
use lbforge_core::protocols::{
    instant_behavior, max_behavior, ApproxAlgorithm, ByzantineStrategy, NaiveAlgorithm, ProtocolConfig,
    StrategyAlgorithm,
};
use lbforge_core::sim::Algorithm;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VictimKind {
    /// The approximate consensus protocol.
    Approx,
    /// Flood-and-average, no fault handling.
    Naive,
    /// Decides its own input at once.
    Instant,
    /// Decides the largest of the first `n - f` inputs it sees.
    Max,
}

impl FromStr for VictimKind {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "approx" => Ok(VictimKind::Approx),
            "naive" => Ok(VictimKind::Naive),
            "instant" => Ok(VictimKind::Instant),
            "max" => Ok(VictimKind::Max),
            other => Err(anyhow!("unknown victim `{other}` (approx, naive, instant, max)")),
        }
    }
}

impl fmt::Display for VictimKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VictimKind::Approx => "approx",
            VictimKind::Naive => "naive",
            VictimKind::Instant => "instant",
            VictimKind::Max => "max",
        })
    }
}

/// Fault-free algorithm of the given kind on `g`.
pub fn build_victim(
    kind: VictimKind,
    cfg: ProtocolConfig,
    g: &Graph,
    rounds: Option<u16>,
) -> Result<Box<dyn Algorithm>> {
    cfg.validate().map_err(|e| anyhow!("{e}"))?;
    Ok(match kind {
        VictimKind::Approx => Box::new(ApproxAlgorithm::new(cfg, g).map_err(|e| anyhow!("{e}"))?),
        VictimKind::Naive => {
            let rounds = rounds.unwrap_or_else(|| cfg.rounds());
            Box::new(NaiveAlgorithm::new(cfg, g, rounds).map_err(|e| anyhow!("{e}"))?)
        }
        VictimKind::Instant => Box::new(|_: NodeId| instant_behavior()),
        VictimKind::Max => {
            let quorum = cfg.quorum();
            Box::new(move |u: NodeId| max_behavior(u, quorum))
        }
    })
}

/// The victim with `faulty` nodes following `strategy`.
pub fn build_faulty_run(
    kind: VictimKind,
    cfg: ProtocolConfig,
    g: &Graph,
    rounds: Option<u16>,
    faulty: &NodeSet,
    strategy: ByzantineStrategy,
    seed: u64,
) -> Result<Box<dyn Algorithm>> {
    if faulty.is_empty() {
        return build_victim(kind, cfg, g, rounds);
    }
    if kind == VictimKind::Approx {
        let alg = ApproxAlgorithm::new(cfg, g).map_err(|e| anyhow!("{e}"))?;
        return Ok(Box::new(StrategyAlgorithm::for_approx(alg, faulty.clone(), strategy, seed)));
    }
    let honest = build_victim(kind, cfg, g, rounds)?;
    let alg = StrategyAlgorithm::new(honest, cfg, faulty.clone(), strategy, seed).map_err(|e| anyhow!("{e}"))?;
    Ok(Box::new(alg))
}
