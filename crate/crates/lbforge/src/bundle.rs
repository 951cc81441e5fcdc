//! Forge report bundles: a directory holding `report.json`, the graph the
//! executions ran on (`graph.txt`), the gadget network (`gadget.txt`) and one
//! JSON Lines trace per run (`e1.jsonl`, `gadget.jsonl`, `e2.jsonl`, ...).
//!
//! `report.json` names every trace file and records each run's copy labels
//! implicitly: execution traces use one copy per graph node, the gadget trace
//! uses the `v` order of `gadget.txt`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use lbforge_core::forge::{assess, Certificate, Divergence, Execution, ExecutionSpec, FaultKind, ForgeReport, Verdict};
use lbforge_core::graph::{Graph, NodeId};
use lbforge_core::protocols::ProtocolConfig;
use lbforge_core::sim::{CopyId, Outcome, Trace};
use serde::{Deserialize, Serialize};

use crate::formats::{parse_gadget, parse_graph, write_gadget, write_graph};
use crate::trace::{parse_trace, write_trace};

pub const FORMAT: &str = "lbforge-forge-report/1";

pub const SCHEDULE_NOTE: &str =
    "the gadget run replays E1's delivery order on the copies that model E1, then continues \
    randomly from the same seed; E2/E3 follow the gadget run's deliveries into their modelling copies";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDoc {
    pub format: String,
    pub theorem: u8,
    pub branch: Option<String>,
    pub victim: String,
    pub n: usize,
    pub f: usize,
    pub epsilon: f64,
    pub lower: f64,
    pub upper: f64,
    pub seed: u64,
    pub delta: Option<u64>,
    pub schedule_coupling: String,
    pub gadget: Option<GadgetDoc>,
    pub executions: Vec<ExecutionDoc>,
    pub certificates: Vec<CertificateDoc>,
    pub verdict: VerdictDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GadgetDoc {
    pub copies: usize,
    pub network: String,
    pub trace: String,
    pub outcome: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionDoc {
    pub name: String,
    pub faulty: Vec<NodeId>,
    pub fault_kind: String,
    pub inputs: BTreeMap<NodeId, f64>,
    pub view_map: BTreeMap<NodeId, String>,
    pub script_map: BTreeMap<NodeId, String>,
    pub checked: Vec<NodeId>,
    pub horizon: Option<u64>,
    pub trace: String,
    pub outcome: String,
    /// Decisions of every node in this run (informational).
    pub decisions: BTreeMap<NodeId, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateDoc {
    pub execution: String,
    pub node: NodeId,
    pub copy: String,
    pub equal: bool,
    pub divergence: Option<DivergenceDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceDoc {
    pub index: Option<usize>,
    pub byte_offset: Option<usize>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum VerdictDoc {
    ViolatedValidity { execution: String, node: NodeId, output: f64, lower: f64, upper: f64 },
    ViolatedAgreement { execution: String, a: NodeId, a_output: f64, b: NodeId, b_output: f64, epsilon: f64 },
    VictimDidNotTerminate { execution: String, nodes: Vec<NodeId>, outcome: String },
    VictimSurvived { explanation: String },
}

impl From<&Verdict> for VerdictDoc {
    fn from(v: &Verdict) -> Self {
        match v.clone() {
            Verdict::ViolatedValidity { execution, node, output, lower, upper } => {
                VerdictDoc::ViolatedValidity { execution, node, output, lower, upper }
            }
            Verdict::ViolatedAgreement { execution, a, a_output, b, b_output, epsilon } => {
                VerdictDoc::ViolatedAgreement { execution, a, a_output, b, b_output, epsilon }
            }
            Verdict::VictimDidNotTerminate { execution, nodes, outcome } => {
                VerdictDoc::VictimDidNotTerminate { execution, nodes, outcome: outcome.to_string() }
            }
            Verdict::VictimSurvived { explanation } => VerdictDoc::VictimSurvived { explanation },
        }
    }
}

impl VerdictDoc {
    pub fn kind(&self) -> &'static str {
        match self {
            VerdictDoc::ViolatedValidity { .. } => "violated-validity",
            VerdictDoc::ViolatedAgreement { .. } => "violated-agreement",
            VerdictDoc::VictimDidNotTerminate { .. } => "victim-did-not-terminate",
            VerdictDoc::VictimSurvived { .. } => "victim-survived",
        }
    }
}

fn certificate_doc(c: &Certificate) -> CertificateDoc {
    CertificateDoc {
        execution: c.execution.clone(),
        node: c.node,
        copy: c.copy.to_string(),
        equal: c.divergence.is_none(),
        divergence: c.divergence.as_ref().map(|d: &Divergence| DivergenceDoc {
            index: d.index,
            byte_offset: d.byte_offset,
            detail: d.detail.clone(),
        }),
    }
}

fn copy_map(m: &BTreeMap<NodeId, CopyId>) -> BTreeMap<NodeId, String> {
    m.iter().map(|(&u, c)| (u, c.to_string())).collect()
}

fn trace_file(name: &str) -> String {
    format!("{}.jsonl", name.to_lowercase())
}

fn decisions_by_node(t: &Trace) -> BTreeMap<NodeId, f64> {
    t.decisions().into_iter().map(|(c, v)| (c.original, v)).collect()
}

pub fn report_doc(report: &ForgeReport, victim: &str) -> ReportDoc {
    let executions = report
        .executions
        .iter()
        .map(|e| ExecutionDoc {
            name: e.spec.name.clone(),
            faulty: e.spec.faulty.iter().copied().collect(),
            fault_kind: e.spec.fault_kind.as_str().into(),
            inputs: e.spec.inputs.clone(),
            view_map: copy_map(&e.spec.view_map),
            script_map: copy_map(&e.spec.script_map),
            checked: e.spec.checked.iter().copied().collect(),
            horizon: e.spec.horizon,
            trace: trace_file(&e.spec.name),
            outcome: e.trace.outcome.to_string(),
            decisions: decisions_by_node(&e.trace),
        })
        .collect();
    ReportDoc {
        format: FORMAT.into(),
        theorem: report.theorem.number(),
        branch: report.branch.map(|b| b.as_str().into()),
        victim: victim.into(),
        n: report.cfg.n,
        f: report.cfg.f,
        epsilon: report.cfg.epsilon,
        lower: report.cfg.lower,
        upper: report.cfg.upper,
        seed: report.seed,
        delta: report.delta,
        schedule_coupling: SCHEDULE_NOTE.into(),
        gadget: report.gadget.as_ref().zip(report.gadget_trace.as_ref()).map(|(g, t)| GadgetDoc {
            copies: g.topology.len(),
            network: "gadget.txt".into(),
            trace: "gadget.jsonl".into(),
            outcome: t.outcome.to_string(),
        }),
        executions,
        certificates: report.certificates.iter().map(certificate_doc).collect(),
        verdict: (&report.verdict).into(),
    }
}

/// Writes the bundle into `dir`, creating it if needed. `g` is the graph the
/// executions ran on.
pub fn write_bundle(dir: &Path, report: &ForgeReport, g: &Graph, victim: &str) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let doc = report_doc(report, victim);
    let mut json = serde_json::to_string_pretty(&doc)?;
    json.push('\n');
    let write = |name: &str, text: &str| {
        fs::write(dir.join(name), text).with_context(|| format!("writing {}", dir.join(name).display()))
    };
    write("report.json", &json)?;
    write("graph.txt", &write_graph(g))?;
    if let (Some(gg), Some(gt)) = (&report.gadget, &report.gadget_trace) {
        write("gadget.txt", &write_gadget(gg))?;
        write("gadget.jsonl", &write_trace(gt))?;
    }
    for e in &report.executions {
        write(&trace_file(&e.spec.name), &write_trace(&e.trace))?;
    }
    Ok(())
}

/// Everything `recheck` needs, read back from disk.
pub struct LoadedBundle {
    pub doc: ReportDoc,
    pub cfg: ProtocolConfig,
    pub gadget_trace: Option<Trace>,
    pub executions: Vec<Execution>,
}

fn parse_copy(s: &str) -> Result<CopyId> {
    s.parse().map_err(|e: String| anyhow!(e))
}

fn parse_outcome(s: &str) -> Result<Outcome> {
    s.parse().map_err(|e: String| anyhow!(e))
}

/// Reads a bundle. Any missing file or malformed content is an error.
pub fn load_bundle(dir: &Path) -> Result<LoadedBundle> {
    let read = |name: &str| -> Result<String> {
        fs::read_to_string(dir.join(name)).with_context(|| format!("reading {}", dir.join(name).display()))
    };
    let doc: ReportDoc = serde_json::from_str(&read("report.json")?).context("parsing report.json")?;
    if doc.format != FORMAT {
        bail!("unsupported report format `{}`", doc.format);
    }
    let g = parse_graph(&read("graph.txt")?).context("in graph.txt")?;
    if g.node_count() != doc.n {
        bail!("graph.txt has {} nodes, report says {}", g.node_count(), doc.n);
    }
    let cfg = ProtocolConfig::new(doc.epsilon, doc.lower, doc.upper, doc.n, doc.f).map_err(|e| anyhow!("{e}"))?;
    let gadget_trace = match &doc.gadget {
        Some(gd) => {
            let file = parse_gadget(&read(&gd.network)?).with_context(|| format!("in {}", gd.network))?;
            if file.copies.len() != gd.copies {
                bail!("{} lists {} copies, report says {}", gd.network, file.copies.len(), gd.copies);
            }
            let trace = parse_trace(&read(&gd.trace)?, file.copies, parse_outcome(&gd.outcome)?)
                .with_context(|| format!("in {}", gd.trace))?;
            Some(trace)
        }
        None => None,
    };
    let labels: Vec<CopyId> = g.nodes().map(CopyId::sole).collect();
    let mut executions = Vec::new();
    for ed in &doc.executions {
        let fault_kind = match ed.fault_kind.as_str() {
            "crash" => FaultKind::Crash,
            "replay" => FaultKind::Replay,
            other => bail!("unknown fault kind `{other}`"),
        };
        let copies = |m: &BTreeMap<NodeId, String>| -> Result<BTreeMap<NodeId, CopyId>> {
            m.iter().map(|(&u, c)| Ok((u, parse_copy(c)?))).collect()
        };
        let spec = ExecutionSpec {
            name: ed.name.clone(),
            faulty: ed.faulty.iter().copied().collect(),
            fault_kind,
            inputs: ed.inputs.clone(),
            view_map: copies(&ed.view_map)?,
            script_map: copies(&ed.script_map)?,
            checked: ed.checked.iter().copied().collect(),
            horizon: ed.horizon,
        };
        let trace = parse_trace(&read(&ed.trace)?, labels.clone(), parse_outcome(&ed.outcome)?)
            .with_context(|| format!("in {}", ed.trace))?;
        executions.push(Execution { spec, trace });
    }
    Ok(LoadedBundle { doc, cfg, gadget_trace, executions })
}

/// Result of recomputing a bundle's verdict from its traces.
pub struct Recheck {
    pub verdict: VerdictDoc,
    pub certificates: Vec<CertificateDoc>,
    pub matches: bool,
}

pub fn recheck(bundle: &LoadedBundle) -> Recheck {
    let (certs, verdict) = assess(&bundle.cfg, bundle.gadget_trace.as_ref(), &bundle.executions);
    let verdict = VerdictDoc::from(&verdict);
    let certificates: Vec<CertificateDoc> = certs.iter().map(certificate_doc).collect();
    let matches = verdict == bundle.doc.verdict && certificates == bundle.doc.certificates;
    Recheck { verdict, certificates, matches }
}
