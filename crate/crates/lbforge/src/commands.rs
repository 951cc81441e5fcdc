//! The four subcommands. Each prints to `out`, reports problems on `err` and
//! returns the process exit code (0, 1 or 2).

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use lbforge_core::conditions::check_conditions;
use lbforge_core::forge::{verify_theorem1, verify_theorem2, ForgeError, ForgeOptions, ForgeReport, Theorem};
use lbforge_core::graph::{check_feasibility, vertex_connectivity, Graph, NodeId, NodeSet};
use lbforge_core::sim::run_on_graph;

use crate::bundle::{load_bundle, recheck, write_bundle};
use crate::formats::parse_graph;
use crate::scenario::ScenarioConfig;
use crate::trace::write_trace;
use crate::victims::{build_faulty_run, build_victim, VictimKind};

/// Bundle directory used by `forge` when no `--out` is given.
pub const DEFAULT_FORGE_OUT: &str = "forge-report";

fn set_str(s: &NodeSet) -> String {
    let ids: Vec<String> = s.iter().map(|u| u.to_string()).collect();
    format!("{{{}}}", ids.join(", "))
}

fn fail(err: &mut dyn Write, e: &anyhow::Error) -> i32 {
    let _ = writeln!(err, "error: {e:#}");
    2
}

fn read_graph(path: &Path) -> Result<Graph> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_graph(&text).with_context(|| format!("in {}", path.display()))
}

pub fn cmd_check(graph: &Path, f: usize, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = read_graph(graph).and_then(|g| check_feasibility(&g, f).map_err(|e| anyhow!("{e}")));
    let r = match result {
        Ok(r) => r,
        Err(e) => return fail(err, &e),
    };
    let holds = |b: bool| if b { "holds" } else { "fails" };
    let _ = writeln!(out, "n = {}, f = {}, connectivity = {}", r.n, r.f, r.connectivity);
    let _ = writeln!(out, "n >= 3f+1: {} ({} vs {})", holds(r.enough_nodes), r.n, 3 * r.f + 1);
    let _ =
        writeln!(out, "connectivity >= 2f+1: {} ({} vs {})", holds(r.enough_connectivity), r.connectivity, 2 * r.f + 1);
    if let Some(p) = &r.partition_witness {
        let _ = writeln!(out, "witness partition: A = {}, B = {}, C = {}", set_str(&p.a), set_str(&p.b), set_str(&p.c));
    }
    if let Some(p) = &r.cut_witness {
        let cut: NodeSet = p.c1.union(&p.c2).copied().collect();
        let _ = writeln!(
            out,
            "witness cut: {} (C1 = {}, C2 = {}) separating A = {} from B = {}",
            set_str(&cut),
            set_str(&p.c1),
            set_str(&p.c2),
            set_str(&p.a),
            set_str(&p.b)
        );
    }
    if r.feasible() {
        let _ = writeln!(out, "feasible");
        0
    } else {
        let _ = writeln!(out, "infeasible");
        1
    }
}

pub fn cmd_simulate(cfg: &ScenarioConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match simulate(cfg, out) {
        Ok(code) => code,
        Err(e) => fail(err, &e),
    }
}

fn simulate(cfg: &ScenarioConfig, out: &mut dyn Write) -> Result<i32> {
    let g = cfg.load_graph()?;
    let inputs = cfg.validated_inputs(&g)?;
    let pc = cfg.protocol_config(g.node_count())?;
    let kind = cfg.victim.unwrap_or(VictimKind::Approx);
    let alg = build_faulty_run(kind, pc, &g, cfg.rounds, &cfg.faulty, cfg.strategy, cfg.seed)?;
    let trace = run_on_graph(&g, alg.as_ref(), &inputs, cfg.seed, cfg.max_steps).map_err(|e| anyhow!("{e}"))?;
    if let Some(dir) = &cfg.out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join("trace.jsonl");
        fs::write(&path, write_trace(&trace)).with_context(|| format!("writing {}", path.display()))?;
        writeln!(out, "trace: {}", path.display())?;
    }
    let input_map: BTreeMap<NodeId, f64> = g.nodes().zip(inputs.iter().copied()).collect();
    let report = check_conditions(&trace, &cfg.faulty, &input_map, pc.epsilon);
    writeln!(out, "victim: {kind}, faulty: {} ({}), seed: {}", set_str(&cfg.faulty), cfg.strategy, cfg.seed)?;
    writeln!(out, "outcome: {} after {} events", trace.outcome, trace.events.len())?;
    for (name, failure) in
        [("agreement", &report.agreement), ("validity", &report.validity), ("termination", &report.termination)]
    {
        match failure {
            None => writeln!(out, "{name}: pass")?,
            Some(w) => writeln!(out, "{name}: FAIL ({w})")?,
        }
    }
    Ok(if report.passed() { 0 } else { 1 })
}

/// Theorem to use when none is given: node count first, then connectivity.
fn pick_theorem(g: &Graph, f: usize) -> Result<Theorem, String> {
    let n = g.node_count();
    if n <= 3 * f {
        return Ok(Theorem::NodeCount);
    }
    let kappa = vertex_connectivity(g);
    if kappa <= 2 * f {
        return Ok(Theorem::Connectivity);
    }
    Err(format!("n = {n} > 3f and connectivity {kappa} > 2f: the graph is feasible, neither construction applies"))
}

/// Loads the graph and runs the selected construction. Returns the graph the
/// executions ran on, the forge result and the victim kind.
pub fn run_forge(cfg: &ScenarioConfig) -> Result<(Graph, Result<ForgeReport, ForgeError>, VictimKind)> {
    let g = cfg.load_graph()?;
    let n = g.node_count();
    if cfg.f == 0 || cfg.f >= n {
        anyhow::bail!("f = {} must be between 1 and n - 1 = {}", cfg.f, n - 1);
    }
    let pc = cfg.protocol_config(n)?;
    let theorem = match cfg.theorem {
        Some(k) => Theorem::from_number(k).ok_or_else(|| anyhow!("theorem must be 1 or 2, got {k}"))?,
        None => match pick_theorem(&g, cfg.f) {
            Ok(t) => t,
            Err(why) => return Ok((g, Err(ForgeError::Inapplicable(why)), cfg.victim.unwrap_or(VictimKind::Naive))),
        },
    };
    let kind = cfg.victim.unwrap_or(VictimKind::Naive);
    let opts = ForgeOptions { cfg: pc, seed: cfg.seed, max_steps: cfg.max_steps, mirror_auto: cfg.mirror_auto };
    // The node-count construction runs on the completed graph.
    let run_graph = match theorem {
        Theorem::NodeCount => g.completion(),
        Theorem::Connectivity => g.clone(),
    };
    let victim = build_victim(kind, pc, &run_graph, cfg.rounds)?;
    let result = match theorem {
        Theorem::NodeCount => verify_theorem1(&g, victim.as_ref(), &opts),
        Theorem::Connectivity => verify_theorem2(&g, victim.as_ref(), &opts),
    };
    Ok((run_graph, result, kind))
}

pub fn cmd_forge(cfg: &ScenarioConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let (g, result, kind) = match run_forge(cfg) {
        Ok(r) => r,
        Err(e) => return fail(err, &e),
    };
    let report = match result {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return 2;
        }
    };
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_FORGE_OUT));
    if let Err(e) = write_bundle(&dir, &report, &g, &kind.to_string()) {
        return fail(err, &e);
    }
    let construction = match report.theorem {
        Theorem::NodeCount => "node-count",
        Theorem::Connectivity => "connectivity",
    };
    let _ = writeln!(out, "{construction} construction, victim {kind}, seed {}", report.seed);
    if let Some(b) = report.branch {
        let _ = writeln!(out, "branch: {}", b.as_str());
    }
    if let Some(d) = report.delta {
        let _ = writeln!(out, "delta: {d}");
    }
    for ex in &report.executions {
        let _ = writeln!(out, "{}: {} events, {}", ex.spec.name, ex.trace.events.len(), ex.trace.outcome);
    }
    let diverged: Vec<_> = report.certificates.iter().filter(|c| c.divergence.is_some()).collect();
    let _ = writeln!(
        out,
        "certificates: {} of {} views identical",
        report.certificates.len() - diverged.len(),
        report.certificates.len()
    );
    for c in &diverged {
        let d = c.divergence.as_ref().expect("filtered");
        let _ = writeln!(out, "  {} node {} vs {}: {d}", c.execution, c.node, c.copy);
    }
    let _ = writeln!(out, "verdict: {}", report.verdict);
    let _ = writeln!(out, "bundle: {}", dir.display());
    if report.verdict.refutes() {
        0
    } else {
        1
    }
}

pub fn cmd_recheck(bundle: &Path, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let loaded = match load_bundle(bundle) {
        Ok(b) => b,
        Err(e) => return fail(err, &e),
    };
    let r = recheck(&loaded);
    if r.matches {
        let _ = writeln!(out, "reproduced: {}", r.verdict.kind());
        return 0;
    }
    let _ = writeln!(out, "mismatch");
    let _ = writeln!(out, "  stored verdict:     {}", loaded.doc.verdict.kind());
    let _ = writeln!(out, "  recomputed verdict: {}", r.verdict.kind());
    for (stored, now) in loaded.doc.certificates.iter().zip(&r.certificates) {
        if stored != now {
            let detail = now.divergence.as_ref().map_or("views now identical".to_string(), |d| d.detail.clone());
            let _ = writeln!(out, "  {} node {} vs {}: {detail}", now.execution, now.node, now.copy);
        }
    }
    if loaded.doc.certificates.len() != r.certificates.len() {
        let _ = writeln!(out, "  certificate count {} vs {}", loaded.doc.certificates.len(), r.certificates.len());
    }
    1
}
