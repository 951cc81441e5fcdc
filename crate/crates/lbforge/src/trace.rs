//! Trace export as JSON Lines, one event per line.
//!
//! Every record has the fields `step`, `kind`, `sender`, `receiver`,
//! `payload` (hex) and `value`, in that order, with `null` where a field does
//! not apply. Activate, decide and halt records put the acting node in
//! `sender`; activate records carry the input in `value`.

use lbforge_core::sim::{CopyId, Event, EventKind, Outcome, Trace};
use serde::{Deserialize, Serialize};

use crate::formats::FormatError;

#[derive(Debug, Serialize, Deserialize, PartialEq)]
struct Record {
    step: u64,
    kind: String,
    sender: Option<usize>,
    receiver: Option<usize>,
    payload: Option<String>,
    value: Option<f64>,
}

fn record(e: &Event) -> Record {
    let (kind, sender, receiver, payload, value) = match &e.kind {
        EventKind::Activate { node, input } => ("activate", Some(*node), None, None, Some(*input)),
        EventKind::Send { sender, payload } => ("send", Some(*sender), None, Some(hex::encode(payload)), None),
        EventKind::Deliver { sender, receiver, payload } => {
            ("deliver", Some(*sender), Some(*receiver), Some(hex::encode(payload)), None)
        }
        EventKind::Decide { node, value } => ("decide", Some(*node), None, None, Some(*value)),
        EventKind::Halt { node } => ("halt", Some(*node), None, None, None),
    };
    Record { step: e.step, kind: kind.into(), sender, receiver, payload, value }
}

pub fn write_trace(trace: &Trace) -> String {
    let mut out = String::new();
    for e in &trace.events {
        out.push_str(&serde_json::to_string(&record(e)).expect("records serialize"));
        out.push('\n');
    }
    out
}

/// Rebuilds a trace from its event lines. Copy labels and the outcome are
/// not part of the event stream and must be supplied.
pub fn parse_trace(text: &str, labels: Vec<CopyId>, outcome: Outcome) -> Result<Trace, FormatError> {
    let mut events = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let bad = |message: String| FormatError { line, message };
        let r: Record = serde_json::from_str(raw).map_err(|e| bad(e.to_string()))?;
        let node = |field: Option<usize>, name: &str| -> Result<usize, FormatError> {
            let u = field.ok_or_else(|| bad(format!("`{}` record needs `{name}`", r.kind)))?;
            if u >= labels.len() {
                return Err(bad(format!("node index {u} out of range")));
            }
            Ok(u)
        };
        let payload = || -> Result<std::sync::Arc<[u8]>, FormatError> {
            let text = r.payload.as_deref().ok_or_else(|| bad(format!("`{}` record needs `payload`", r.kind)))?;
            hex::decode(text).map(Into::into).map_err(|e| bad(format!("payload: {e}")))
        };
        let value = || r.value.ok_or_else(|| bad(format!("`{}` record needs `value`", r.kind)));
        let kind = match r.kind.as_str() {
            "activate" => EventKind::Activate { node: node(r.sender, "sender")?, input: value()? },
            "send" => EventKind::Send { sender: node(r.sender, "sender")?, payload: payload()? },
            "deliver" => EventKind::Deliver {
                sender: node(r.sender, "sender")?,
                receiver: node(r.receiver, "receiver")?,
                payload: payload()?,
            },
            "decide" => EventKind::Decide { node: node(r.sender, "sender")?, value: value()? },
            "halt" => EventKind::Halt { node: node(r.sender, "sender")? },
            other => return Err(bad(format!("unknown event kind `{other}`"))),
        };
        events.push(Event { step: r.step, kind });
    }
    Ok(Trace { labels, events, outcome })
}

#[cfg(test)]
mod tests {
    use super::*;
    use lbforge_core::graph::Graph;
    use lbforge_core::protocols::{ApproxAlgorithm, ProtocolConfig};
    use lbforge_core::sim::run_on_graph;

    #[test]
    fn round_trip_and_field_order() {
        let g = Graph::complete(4);
        let alg = ApproxAlgorithm::new(ProtocolConfig::new(0.1, 0.0, 1.0, 4, 1).unwrap(), &g).unwrap();
        let trace = run_on_graph(&g, &alg, &[0.1, 0.2, 0.7, 1.0 / 3.0], 5, 100_000).unwrap();
        let text = write_trace(&trace);
        let first = text.lines().next().unwrap();
        assert_eq!(first, r#"{"step":0,"kind":"activate","sender":0,"receiver":null,"payload":null,"value":0.1}"#);
        let back = parse_trace(&text, trace.labels.clone(), trace.outcome).unwrap();
        assert_eq!(back, trace);
    }

    #[test]
    fn errors_name_the_line() {
        let labels = vec![CopyId::sole(0)];
        let text =
            "{\"step\":0,\"kind\":\"halt\",\"sender\":0,\"receiver\":null,\"payload\":null,\"value\":null}\n{oops\n";
        assert_eq!(parse_trace(text, labels.clone(), Outcome::Quiescent).unwrap_err().line, 2);
        let text = "{\"step\":0,\"kind\":\"send\",\"sender\":0,\"receiver\":null,\"payload\":\"zz\",\"value\":null}\n";
        assert_eq!(parse_trace(text, labels.clone(), Outcome::Quiescent).unwrap_err().line, 1);
        let text = "{\"step\":0,\"kind\":\"halt\",\"sender\":4,\"receiver\":null,\"payload\":null,\"value\":null}\n";
        assert!(parse_trace(text, labels, Outcome::Quiescent).is_err());
    }
}
