//! Line-oriented text formats for graphs and gadget networks.
//!
//! Graph files:
//!
//! ```text
//! # comment
//! n 4
//! e 0 2
//! e 0 3
//! ```
//!
//! Gadget files use the same `n`/`e` lines over copy ids (`3`, `2:slow`,
//! `0:lo`), plus `v <copy>` (copy order), `d <u> <v>` (directed),
//! `i <copy> <value>`, `m <copy> <mode>` and `p <part> <ids...>`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use lbforge_core::gadget::{GadgetGraph, Provenance};
use lbforge_core::graph::{Graph, NodeId, NodeSet};
use lbforge_core::sim::{CopyId, StartMode};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct FormatError {
    pub line: usize,
    pub message: String,
}

fn err<T>(line: usize, message: impl Into<String>) -> Result<T, FormatError> {
    Err(FormatError { line, message: message.into() })
}

/// Non-empty, comment-free lines with their 1-based numbers.
fn lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let body = raw.split('#').next().unwrap_or("");
        let words: Vec<&str> = body.split_whitespace().collect();
        (!words.is_empty()).then_some((i + 1, words))
    })
}

fn parse_num<T: std::str::FromStr>(line: usize, word: &str, what: &str) -> Result<T, FormatError> {
    word.parse().or_else(|_| err(line, format!("bad {what} `{word}`")))
}

pub fn parse_graph(text: &str) -> Result<Graph, FormatError> {
    let mut n: Option<usize> = None;
    let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    let mut last_line = 0;
    for (line, words) in lines(text) {
        last_line = line;
        match words.as_slice() {
            ["n", count] => {
                if n.is_some() {
                    return err(line, "node count given twice");
                }
                let count: usize = parse_num(line, count, "node count")?;
                if count == 0 || count > Graph::MAX_NODES {
                    return err(line, format!("node count must be between 1 and {}", Graph::MAX_NODES));
                }
                n = Some(count);
            }
            ["e", u, v] => {
                let Some(count) = n else { return err(line, "edge before the `n` line") };
                let u: NodeId = parse_num(line, u, "node id")?;
                let v: NodeId = parse_num(line, v, "node id")?;
                if u as usize >= count || v as usize >= count {
                    return err(line, format!("node id out of range 0..{count}"));
                }
                if u == v {
                    return err(line, format!("self-loop on node {u}"));
                }
                if !seen.insert((u.min(v), u.max(v))) {
                    return err(line, format!("duplicate edge {u}-{v}"));
                }
                edges.push((u, v));
            }
            _ => return err(line, format!("expected `n <count>` or `e <u> <v>`, got `{}`", words.join(" "))),
        }
    }
    let Some(n) = n else { return err(last_line.max(1), "missing `n <count>` line") };
    Graph::new(n, edges).or_else(|e| err(last_line, e.to_string()))
}

pub fn write_graph(g: &Graph) -> String {
    let mut out = format!("n {}\n", g.node_count());
    for (u, v) in g.edges() {
        let _ = writeln!(out, "e {u} {v}");
    }
    out
}

pub fn mode_name(mode: StartMode) -> String {
    match mode {
        StartMode::Normal => "normal".into(),
        StartMode::Crashed => "crashed".into(),
        StartMode::DelayedUntil(at) => format!("delayed:{at}"),
    }
}

pub fn parse_mode(s: &str) -> Option<StartMode> {
    match s {
        "normal" => Some(StartMode::Normal),
        "crashed" => Some(StartMode::Crashed),
        _ => s.strip_prefix("delayed:")?.parse().ok().map(StartMode::DelayedUntil),
    }
}

fn ids(set: &NodeSet) -> String {
    set.iter().map(|u| format!(" {u}")).collect()
}

pub fn write_gadget(gg: &GadgetGraph) -> String {
    let copies = gg.topology.copies();
    let mut out = format!("n {}\n", copies.len());
    match &gg.provenance {
        Provenance::ThreeWay { partition, mirror } => {
            let _ = writeln!(out, "p A{}\np B{}\np C{}", ids(&partition.a), ids(&partition.b), ids(&partition.c));
            if *mirror {
                out.push_str("p mirror\n");
            }
        }
        Provenance::Cut { partition } => {
            let _ = writeln!(
                out,
                "p A{}\np B{}\np C1{}\np C2{}",
                ids(&partition.a),
                ids(&partition.b),
                ids(&partition.c1),
                ids(&partition.c2)
            );
        }
    }
    for c in copies {
        let _ = writeln!(out, "v {c}");
    }
    for &(u, v) in gg.topology.undirected_edges() {
        let _ = writeln!(out, "e {} {}", copies[u], copies[v]);
    }
    for &(u, v) in gg.topology.directed_edges() {
        let _ = writeln!(out, "d {} {}", copies[u], copies[v]);
    }
    for c in copies {
        let _ = writeln!(out, "i {c} {}", gg.inputs[c]);
    }
    for c in copies {
        let _ = writeln!(out, "m {c} {}", mode_name(gg.start_modes[c]));
    }
    out
}

/// Parsed gadget file, before it is tied back to a source graph.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GadgetFile {
    pub copies: Vec<CopyId>,
    pub undirected: Vec<(CopyId, CopyId)>,
    pub directed: Vec<(CopyId, CopyId)>,
    pub inputs: BTreeMap<CopyId, f64>,
    pub modes: BTreeMap<CopyId, StartMode>,
    pub parts: BTreeMap<String, NodeSet>,
    pub mirror: bool,
}

pub fn parse_gadget(text: &str) -> Result<GadgetFile, FormatError> {
    let mut file = GadgetFile::default();
    let mut declared: Option<usize> = None;
    let mut last_line = 0;
    let copy = |line: usize, w: &str| -> Result<CopyId, FormatError> { w.parse::<CopyId>().or_else(|e| err(line, e)) };
    for (line, words) in lines(text) {
        last_line = line;
        let known = |file: &GadgetFile, c: CopyId| -> Result<CopyId, FormatError> {
            if file.copies.contains(&c) {
                Ok(c)
            } else {
                err(line, format!("copy {c} not declared with a `v` line"))
            }
        };
        match words.as_slice() {
            ["n", count] => declared = Some(parse_num(line, count, "copy count")?),
            ["p", "mirror"] => file.mirror = true,
            ["p", part, rest @ ..] => {
                let set = rest.iter().map(|w| parse_num(line, w, "node id")).collect::<Result<_, _>>()?;
                file.parts.insert((*part).to_string(), set);
            }
            ["v", c] => {
                let c = copy(line, c)?;
                if file.copies.contains(&c) {
                    return err(line, format!("copy {c} declared twice"));
                }
                file.copies.push(c);
            }
            ["e", u, v] => {
                let pair = (known(&file, copy(line, u)?)?, known(&file, copy(line, v)?)?);
                file.undirected.push(pair);
            }
            ["d", u, v] => {
                let pair = (known(&file, copy(line, u)?)?, known(&file, copy(line, v)?)?);
                file.directed.push(pair);
            }
            ["i", c, x] => {
                let c = known(&file, copy(line, c)?)?;
                file.inputs.insert(c, parse_num(line, x, "input")?);
            }
            ["m", c, mode] => {
                let c = known(&file, copy(line, c)?)?;
                let Some(mode) = parse_mode(mode) else { return err(line, format!("bad start mode `{mode}`")) };
                file.modes.insert(c, mode);
            }
            _ => return err(line, format!("unrecognised line `{}`", words.join(" "))),
        }
    }
    if declared != Some(file.copies.len()) {
        return err(last_line.max(1), format!("`n` line says {declared:?} copies, {} declared", file.copies.len()));
    }
    if file.inputs.len() != file.copies.len() || file.modes.len() != file.copies.len() {
        return err(last_line.max(1), "every copy needs an `i` and an `m` line");
    }
    Ok(file)
}
