use lbforge_core::forge::{verify_theorem1, verify_theorem2, Branch, ForgeOptions, ForgeReport, Verdict};
use lbforge_core::graph::{Graph, NodeId};
use lbforge_core::protocols::{instant_behavior, max_behavior, NaiveAlgorithm, ProtocolConfig};
use lbforge_core::sim::{local_view, CopyId, ViewEntry};

fn opts(n: usize, f: usize, seed: u64) -> ForgeOptions {
    ForgeOptions {
        cfg: ProtocolConfig::new(0.01, 0.0, 1.0, n, f).unwrap(),
        seed,
        max_steps: 500_000,
        mirror_auto: true,
    }
}

fn diamond() -> Graph {
    Graph::new(4, [(0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap()
}

/// Entry lists with steps dropped; compared with `==`.
fn bare(entries: Vec<(u64, ViewEntry)>) -> Vec<ViewEntry> {
    entries.into_iter().map(|(_, e)| e).collect()
}

/// Re-derives every certificate by plain equality of the views.
fn assert_views_match(report: &ForgeReport) {
    let gt = report.gadget_trace.as_ref().unwrap();
    for ex in &report.executions {
        for (&u, &copy) in &ex.spec.view_map {
            let g_view = local_view(&ex.trace, CopyId::sole(u)).unwrap();
            let c_view = local_view(gt, copy).unwrap();
            let horizon = ex.spec.horizon.unwrap_or(u64::MAX);
            let cut = |v: Vec<(u64, ViewEntry)>| bare(v.into_iter().filter(|(s, _)| *s <= horizon).collect());
            assert_eq!(g_view.input, c_view.input, "{} node {u}", ex.spec.name);
            assert_eq!(cut(g_view.entries), cut(c_view.entries), "{} node {u} vs {copy}", ex.spec.name);
        }
        for (&u, &copy) in &ex.spec.script_map {
            assert_eq!(ex.trace.sends_of(CopyId::sole(u)), gt.sends_of(copy));
        }
    }
    assert!(report.certificates.iter().all(|c| c.divergence.is_none()));
}

#[test]
fn naive_on_three_nodes_across_seeds() {
    let g = Graph::complete(3);
    for seed in 0..20 {
        let o = opts(3, 1, seed);
        let victim = NaiveAlgorithm::new(o.cfg, &g, o.cfg.rounds()).unwrap();
        let report = verify_theorem1(&g, &victim, &o).unwrap();
        assert_views_match(&report);
        assert_eq!(report.branch, Some(Branch::Base));
        // E2 inputs of B and C are U, and B's output is far from it
        let e2 = report.execution("E2").unwrap();
        assert_eq!(e2.spec.inputs[&1], 1.0);
        assert_eq!(e2.spec.inputs[&2], 1.0);
        match &report.verdict {
            Verdict::ViolatedValidity { execution, node: 1, output, lower, upper } => {
                assert_eq!(execution, "E2");
                assert_eq!((*lower, *upper), (1.0, 1.0));
                assert_eq!(*output, e2.trace.decisions()[&CopyId::sole(1)]);
                assert!(*output < 0.99);
            }
            other => panic!("seed {seed}: {other}"),
        }
        assert_eq!(report.recheck().1, report.verdict);
    }
}

#[test]
fn naive_on_the_diamond_across_seeds() {
    let g = diamond();
    // a, b and c2 each average {0, 1, 1} every round; floor to 12 digits
    let two_thirds = 0.666_666_666_666;
    for seed in 0..20 {
        let o = opts(4, 1, seed);
        let victim = NaiveAlgorithm::new(o.cfg, &g, o.cfg.rounds()).unwrap();
        let report = verify_theorem2(&g, &victim, &o).unwrap();
        assert_views_match(&report);
        let e1 = report.execution("E1").unwrap().trace.decisions();
        for u in [0, 1, 3] {
            assert_eq!(e1[&CopyId::sole(u)], two_thirds, "seed {seed} node {u}");
        }
        match &report.verdict {
            Verdict::ViolatedValidity { execution, output, .. } => {
                assert_eq!(execution, "E2");
                assert_eq!(*output, two_thirds);
            }
            other => panic!("seed {seed}: {other}"),
        }
        assert_eq!(report.recheck().1, report.verdict);
    }
}

#[test]
fn both_branches_are_reachable() {
    let g = Graph::complete(3);
    let max = |u: NodeId| max_behavior(u, 2);
    for seed in 0..10 {
        let report = verify_theorem1(&g, &max, &opts(3, 1, seed)).unwrap();
        assert_views_match(&report);
        assert_eq!(report.branch, Some(Branch::Mirror));
        let e2 = report.execution("E2").unwrap();
        assert_eq!((e2.spec.inputs[&0], e2.spec.inputs[&2]), (0.0, 0.0));
        assert!(matches!(&report.verdict, Verdict::ViolatedValidity { node: 0, output, .. } if *output == 1.0));
    }
}

#[test]
fn instant_victim_is_caught_in_e1() {
    let instant = |_: NodeId| instant_behavior();
    let report = verify_theorem1(&Graph::complete(3), &instant, &opts(3, 1, 0)).unwrap();
    assert_eq!(
        report.verdict,
        Verdict::ViolatedAgreement { execution: "E1".into(), a: 0, a_output: 0.0, b: 1, b_output: 1.0, epsilon: 0.01 }
    );
    let report = verify_theorem2(&diamond(), &instant, &opts(4, 1, 0)).unwrap();
    assert!(matches!(report.verdict, Verdict::ViolatedAgreement { a: 0, a_output: 0.0, b_output: 1.0, .. }));
}

#[test]
fn larger_fault_bounds() {
    // n = 6 <= 3f with f = 2, on a non-complete graph (completed first)
    let mut edges: Vec<(NodeId, NodeId)> = (0..6).flat_map(|u| (u + 1..6).map(move |v| (u, v))).collect();
    edges.retain(|&e| e != (0, 5));
    let g = Graph::new(6, edges).unwrap();
    let o = opts(6, 2, 4);
    let victim = NaiveAlgorithm::new(o.cfg, &g.completion(), o.cfg.rounds()).unwrap();
    let report = verify_theorem1(&g, &victim, &o).unwrap();
    assert_views_match(&report);
    assert!(report.verdict.refutes(), "{}", report.verdict);

    // a 6-cycle has connectivity 2 <= 2f
    let g = Graph::cycle(6);
    let o = opts(6, 1, 2);
    let victim = NaiveAlgorithm::new(o.cfg, &g, o.cfg.rounds()).unwrap();
    let report = verify_theorem2(&g, &victim, &o).unwrap();
    assert_views_match(&report);
    assert!(report.verdict.refutes(), "{}", report.verdict);
}
