//! The three correctness conditions of approximate consensus, checked on a
//! finished trace.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use crate::graph::{NodeId, NodeSet};
use crate::sim::{CopyId, Trace};

/// Slack for comparisons between decisions that went through `f64`.
pub const TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum ConditionFailure {
    /// Two non-faulty decisions more than epsilon apart.
    Agreement { a: NodeId, a_value: f64, b: NodeId, b_value: f64 },
    /// A non-faulty decision outside the hull of non-faulty inputs.
    Validity { node: NodeId, value: f64, min: f64, max: f64 },
    /// A non-faulty node that did not decide or did not halt.
    Termination { node: NodeId, decided: bool, halted: bool },
}

impl ConditionFailure {
    pub fn condition(&self) -> &'static str {
        match self {
            ConditionFailure::Agreement { .. } => "agreement",
            ConditionFailure::Validity { .. } => "validity",
            ConditionFailure::Termination { .. } => "termination",
        }
    }
}

impl fmt::Display for ConditionFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConditionFailure::Agreement { a, a_value, b, b_value } => {
                write!(f, "agreement: node {a} decided {a_value} but node {b} decided {b_value}")
            }
            ConditionFailure::Validity { node, value, min, max } => {
                write!(f, "validity: node {node} decided {value} outside [{min}, {max}]")
            }
            ConditionFailure::Termination { node, decided, halted } => {
                write!(f, "termination: node {node} decided={decided} halted={halted}")
            }
        }
    }
}

/// Outcome per condition; each holds the first witness found, if any.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConditionReport {
    pub agreement: Option<ConditionFailure>,
    pub validity: Option<ConditionFailure>,
    pub termination: Option<ConditionFailure>,
}

impl ConditionReport {
    pub fn passed(&self) -> bool {
        self.failures().is_empty()
    }

    pub fn failures(&self) -> Vec<&ConditionFailure> {
        [&self.agreement, &self.validity, &self.termination].into_iter().flatten().collect()
    }
}

/// Checks a trace of a run on a plain graph (one copy per node). Nodes in
/// `faulty` are ignored; `inputs` must cover every non-faulty node.
pub fn check_conditions(
    trace: &Trace,
    faulty: &NodeSet,
    inputs: &BTreeMap<NodeId, f64>,
    epsilon: f64,
) -> ConditionReport {
    let decisions: BTreeMap<NodeId, f64> = trace.decisions().into_iter().map(|(c, v)| (c.original, v)).collect();
    let halted: NodeSet = trace.halted().into_iter().map(|c| c.original).collect();
    let honest: Vec<NodeId> =
        trace.labels.iter().map(|c: &CopyId| c.original).filter(|u| !faulty.contains(u)).collect();

    let mut report = ConditionReport::default();
    let decided: Vec<(NodeId, f64)> = honest.iter().filter_map(|u| decisions.get(u).map(|&v| (*u, v))).collect();

    let lo = decided.iter().min_by(|x, y| x.1.total_cmp(&y.1));
    let hi = decided.iter().max_by(|x, y| x.1.total_cmp(&y.1));
    if let (Some(&(a, a_value)), Some(&(b, b_value))) = (lo, hi) {
        if b_value - a_value > epsilon + TOLERANCE {
            report.agreement = Some(ConditionFailure::Agreement { a, a_value, b, b_value });
        }
    }

    let hull = honest
        .iter()
        .filter_map(|u| inputs.get(u))
        .fold(None, |acc: Option<(f64, f64)>, &x| Some(acc.map_or((x, x), |(l, h)| (l.min(x), h.max(x)))));
    if let Some((min, max)) = hull {
        report.validity = decided
            .iter()
            .find(|&&(_, v)| v < min - TOLERANCE || v > max + TOLERANCE)
            .map(|&(node, value)| ConditionFailure::Validity { node, value, min, max });
    }

    report.termination = honest.iter().find_map(|&node| {
        let d = decisions.contains_key(&node);
        let h = halted.contains(&node);
        (!(d && h)).then_some(ConditionFailure::Termination { node, decided: d, halted: h })
    });
    report
}
