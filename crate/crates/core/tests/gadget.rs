mod common;

use std::collections::BTreeSet;

use lbforge_core::gadget::{build_theorem1_gadget, build_theorem2_gadget, validate_gadget, GadgetGraph};
use lbforge_core::graph::{cut_partition, Graph};
use lbforge_core::protocols::ProtocolConfig;
use lbforge_core::rng::SplitMix64;
use lbforge_core::sim::CopyId;
use proptest::prelude::*;

use common::*;

fn cfg(n: usize, f: usize) -> ProtocolConfig {
    ProtocolConfig::new(0.01, -1.0, 2.0, n, f).unwrap()
}

fn edge_sets(gg: &GadgetGraph) -> EdgeSets {
    let labels = gg.topology.copies();
    let und: BTreeSet<(CopyId, CopyId)> = gg
        .topology
        .undirected_edges()
        .iter()
        .map(|&(x, y)| (labels[x].min(labels[y]), labels[x].max(labels[y])))
        .collect();
    let dir = gg.topology.directed_edges().iter().map(|&(x, y)| (labels[x], labels[y])).collect();
    (und, dir)
}

/// No edge joins two copies of one node, and every edge projects onto an
/// edge of the source graph.
fn assert_projects(gg: &GadgetGraph) {
    let (und, dir) = edge_sets(gg);
    for (x, y) in und.iter().chain(dir.iter()) {
        assert_ne!(x.original, y.original, "{x} - {y}");
        assert!(gg.source.has_edge(x.original, y.original), "{x} - {y}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn crash_slow_network_matches_the_rules(seed in any::<u64>(), n in 2usize..10, extra in 0usize..3, mirror: bool, wake in 1u64..50) {
        let mut rng = SplitMix64::new(seed);
        let f = (n.div_ceil(3) + extra).min(n - 1).max(1);
        let p = random_three_partition(&mut rng, n, f);
        let g = Graph::complete(n);
        let c = cfg(n, f);
        let gg = build_theorem1_gadget(&g, &p, &c, wake, mirror).unwrap();
        prop_assert!(validate_gadget(&gg).is_empty());
        prop_assert_eq!(gg.topology.len(), n + p.c.len());
        prop_assert_eq!(edge_sets(&gg), crash_slow_edges(&g, &p));
        let (inputs, modes) = crash_slow_setup(&p, c.lower, c.upper, wake, mirror);
        prop_assert_eq!(&gg.inputs, &inputs);
        prop_assert_eq!(&gg.start_modes, &modes);
        assert_projects(&gg);
    }

    #[test]
    fn cut_network_matches_the_rules(seed in any::<u64>(), f in 1usize..3, wake in 1u64..50) {
        let mut rng = SplitMix64::new(seed);
        let (g, p) = random_cut_instance(&mut rng, f);
        let n = g.node_count();
        let c = cfg(n, f);
        let gg = build_theorem2_gadget(&g, &p, &c, wake).unwrap();
        prop_assert!(validate_gadget(&gg).is_empty());
        prop_assert_eq!(gg.topology.len(), 2 * p.a.len() + 2 * p.b.len() + 3 * p.c1.len() + p.c2.len());
        prop_assert_eq!(edge_sets(&gg), cut_edges(&g, &p));
        let (inputs, modes) = cut_setup(&p, c.lower, c.upper, wake);
        prop_assert_eq!(&gg.inputs, &inputs);
        prop_assert_eq!(&gg.start_modes, &modes);
        assert_projects(&gg);
    }

    #[test]
    fn cut_network_on_found_cuts(seed in any::<u64>(), n in 4usize..9, f in 1usize..3) {
        let mut rng = SplitMix64::new(seed);
        let g = random_connected_graph(&mut rng, n, 0.4);
        prop_assume!(f < n);
        if let Some(p) = cut_partition(&g, f) {
            let gg = build_theorem2_gadget(&g, &p, &cfg(n, f), 7).unwrap();
            prop_assert!(validate_gadget(&gg).is_empty());
            prop_assert_eq!(edge_sets(&gg), cut_edges(&g, &p));
        }
    }
}
