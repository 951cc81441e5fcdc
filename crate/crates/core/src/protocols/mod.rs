//! Concrete behaviors: the approximate consensus protocol, the faulty
//! behaviors used by tests and the forge, and a naive victim.

use core::fmt;

use crate::graph::GraphError;

pub mod approx;
pub mod basic;
pub mod byzantine;
pub mod fixed;
pub mod naive;
pub mod relay;
pub mod wire;

pub use approx::{approx_consensus_behavior, ApproxAlgorithm, ApproxBehavior};
pub use basic::{crash_behavior, eager_replay_behavior, instant_behavior, max_behavior, replay_behavior};
pub use byzantine::{byzantine_behavior, ByzantineStrategy, StrategyAlgorithm};
pub use fixed::Fixed;
pub use naive::{naive_behavior, NaiveAlgorithm};

/// Largest network the approximate protocol supports (report masks are 64-bit).
pub const MAX_PROTOCOL_NODES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolConfig {
    pub epsilon: f64,
    pub lower: f64,
    pub upper: f64,
    pub n: usize,
    pub f: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProtocolError {
    NonFinite,
    NonPositiveEpsilon(f64),
    EmptyRange { lower: f64, upper: f64 },
    RangeNotWiderThanEpsilon { width: f64, epsilon: f64 },
    NodeCount { config: usize, graph: usize },
    TooManyNodes(usize),
    Infeasible { n: usize, f: usize, connectivity: usize },
    ZeroRounds,
    UnsupportedStrategy,
    Graph(GraphError),
}

impl fmt::Display for ProtocolError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProtocolError::NonFinite => write!(f, "epsilon and bounds must be finite"),
            ProtocolError::NonPositiveEpsilon(e) => write!(f, "epsilon must be positive, got {e}"),
            ProtocolError::EmptyRange { lower, upper } => {
                write!(f, "lower bound {lower} must be below upper bound {upper}")
            }
            ProtocolError::RangeNotWiderThanEpsilon { width, epsilon } => {
                write!(f, "range width {width} must exceed epsilon {epsilon}")
            }
            ProtocolError::NodeCount { config, graph } => {
                write!(f, "config is for {config} nodes but the graph has {graph}")
            }
            ProtocolError::TooManyNodes(n) => {
                write!(f, "{n} nodes exceeds the protocol limit of {MAX_PROTOCOL_NODES}")
            }
            ProtocolError::Infeasible { n, f: faults, connectivity } => write!(
                f,
                "approximate consensus needs n >= {} and connectivity >= {}; have n = {n}, connectivity = {connectivity}",
                3 * faults + 1,
                2 * faults + 1
            ),
            ProtocolError::ZeroRounds => write!(f, "rounds must be at least 1"),
            ProtocolError::UnsupportedStrategy => write!(f, "strategy needs the approximate consensus protocol"),
            ProtocolError::Graph(e) => write!(f, "{e}"),
        }
    }
}

impl From<GraphError> for ProtocolError {
    fn from(e: GraphError) -> Self {
        ProtocolError::Graph(e)
    }
}

impl ProtocolConfig {
    pub fn new(epsilon: f64, lower: f64, upper: f64, n: usize, f: usize) -> Result<Self, ProtocolError> {
        let cfg = ProtocolConfig { epsilon, lower, upper, n, f };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        if !(self.epsilon.is_finite() && self.lower.is_finite() && self.upper.is_finite()) {
            return Err(ProtocolError::NonFinite);
        }
        if self.epsilon <= 0.0 {
            return Err(ProtocolError::NonPositiveEpsilon(self.epsilon));
        }
        if self.lower >= self.upper {
            return Err(ProtocolError::EmptyRange { lower: self.lower, upper: self.upper });
        }
        let width = self.upper - self.lower;
        if width <= self.epsilon {
            return Err(ProtocolError::RangeNotWiderThanEpsilon { width, epsilon: self.epsilon });
        }
        Ok(())
    }

    /// `ceil(log2((U - L) / epsilon)) + 1`, computed by repeated halving so
    /// that exact powers of two are not disturbed by `log2` rounding.
    pub fn rounds(&self) -> u16 {
        let mut width = self.upper - self.lower;
        let mut halvings = 0u16;
        while width > self.epsilon && halvings < u16::MAX - 2 {
            width /= 2.0;
            halvings += 1;
        }
        halvings + 1
    }

    pub fn quorum(&self) -> usize {
        self.n.saturating_sub(self.f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounds_follow_the_log_formula() {
        let cfg = ProtocolConfig::new(0.01, 0.0, 1.0, 4, 1).unwrap();
        assert_eq!(cfg.rounds(), 8);
        // exact power of two: log2(8) = 3
        assert_eq!(ProtocolConfig::new(0.125, 0.0, 1.0, 4, 1).unwrap().rounds(), 4);
        assert_eq!(ProtocolConfig::new(0.9, 0.0, 1.0, 4, 1).unwrap().rounds(), 2);
        for (eps, lo, hi) in [(0.01, 0.0, 1.0), (0.3, -2.0, 5.0), (1e-6, 0.0, 1.0)] {
            let cfg = ProtocolConfig::new(eps, lo, hi, 4, 1).unwrap();
            let expect = libm_free_log2_ceil((hi - lo) / eps) + 1;
            assert_eq!(cfg.rounds() as u32, expect);
        }
    }

    // independent oracle: smallest k with 2^k >= x
    fn libm_free_log2_ceil(x: f64) -> u32 {
        (0..64).find(|&k| (1u64 << k) as f64 >= x).unwrap()
    }

    #[test]
    fn rejects_bad_configs() {
        assert_eq!(ProtocolConfig::new(0.0, 0.0, 1.0, 4, 1), Err(ProtocolError::NonPositiveEpsilon(0.0)));
        assert!(matches!(ProtocolConfig::new(0.1, 1.0, 1.0, 4, 1), Err(ProtocolError::EmptyRange { .. })));
        assert!(matches!(
            ProtocolConfig::new(1.0, 0.0, 1.0, 4, 1),
            Err(ProtocolError::RangeNotWiderThanEpsilon { .. })
        ));
        assert_eq!(ProtocolConfig::new(f64::NAN, 0.0, 1.0, 4, 1), Err(ProtocolError::NonFinite));
    }
}
