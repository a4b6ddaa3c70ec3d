use proptest::prelude::*;

use msgnn::coarsening::{build_hierarchy_from, CoarsenPlan, Policy};
use msgnn::datasets::{gen_sbm, SbmSpec};
use msgnn::graph::{graph_power_with_budget, induced_subgraph, NodeSelection, SparseGraph};

fn graph_strategy() -> impl Strategy<Value = SparseGraph> {
    (2usize..14).prop_flat_map(|n| {
        proptest::collection::vec(any::<bool>(), n * (n - 1) / 2).prop_map(move |bits| {
            let mut edges = Vec::new();
            let mut k = 0;
            for i in 0..n {
                for j in i + 1..n {
                    if bits[k] {
                        edges.push((i, j));
                    }
                    k += 1;
                }
            }
            SparseGraph::from_edges(n, &edges).unwrap()
        })
    })
}

fn dense_power(g: &SparseGraph, p: usize) -> Vec<Vec<bool>> {
    let n = g.num_nodes();
    let a: Vec<Vec<u128>> = g.to_dense().iter().map(|r| r.iter().map(|&v| v as u128).collect()).collect();
    let mut acc = a.clone();
    for _ in 1..p {
        let mut next = vec![vec![0u128; n]; n];
        for i in 0..n {
            for k in 0..n {
                if acc[i][k] != 0 {
                    for j in 0..n {
                        next[i][j] += acc[i][k] * a[k][j];
                    }
                }
            }
        }
        acc = next;
    }
    (0..n).map(|i| (0..n).map(|j| i != j && acc[i][j] != 0).collect()).collect()
}

fn subset(n: usize, bits: &[bool]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).filter(|&i| bits[i % bits.len()]).collect();
    if idx.is_empty() {
        idx.push(0);
    }
    idx
}

proptest! {
    #[test]
    fn powered_subgraph_matches_dense(g in graph_strategy(), p in 1usize..5, bits in proptest::collection::vec(any::<bool>(), 1..14)) {
        let powered = graph_power_with_budget(&g, p, usize::MAX).unwrap();
        let sel = NodeSelection::new(subset(g.num_nodes(), &bits), g.num_nodes()).unwrap();
        let sub = induced_subgraph(&powered, &sel).unwrap();
        let dense = dense_power(&g, p);
        let idx = sel.indices();
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                prop_assert_eq!(sub.has_edge(a, b), dense[i][j]);
            }
        }
    }

    #[test]
    fn powers_are_symmetric_without_self_loops(g in graph_strategy(), p in 1usize..5) {
        let powered = graph_power_with_budget(&g, p, usize::MAX).unwrap();
        for (i, j) in powered.edges() {
            prop_assert!(i != j);
            prop_assert!(powered.has_edge(j, i));
        }
    }

    #[test]
    fn induced_subgraph_never_adds_edges(g in graph_strategy(), bits in proptest::collection::vec(any::<bool>(), 1..14)) {
        let sel = NodeSelection::new(subset(g.num_nodes(), &bits), g.num_nodes()).unwrap();
        let sub = induced_subgraph(&g, &sel).unwrap();
        prop_assert!(sub.num_edges() <= g.num_edges());
        for (a, b) in sub.edges() {
            prop_assert!(g.has_edge(sel.indices()[a], sel.indices()[b]));
        }
    }

    #[test]
    fn composed_selection_indexes_the_parent(
        n in 2usize..40,
        outer_bits in proptest::collection::vec(any::<bool>(), 1..40),
        inner_bits in proptest::collection::vec(any::<bool>(), 1..40),
    ) {
        let outer = NodeSelection::new(subset(n, &outer_bits), n).unwrap();
        let inner = NodeSelection::new(subset(outer.len(), &inner_bits), outer.len()).unwrap();
        let composed = outer.compose(&inner);
        prop_assert_eq!(composed.len(), inner.len());
        for (k, &i) in inner.indices().iter().enumerate() {
            prop_assert_eq!(composed.indices()[k], outer.indices()[i]);
        }
        prop_assert!(composed.indices().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn generation_and_coarsening_are_deterministic(seed in 0u64..1000, plan_seed in 0u64..1000) {
        let spec = SbmSpec { nodes: 60, blocks: 3, p_in: 0.2, p_out: 0.02, feature_noise: 1.0, seed };
        let data = gen_sbm(&spec).unwrap();
        prop_assert_eq!(&data, &gen_sbm(&spec).unwrap());
        let mut plan = CoarsenPlan::new(3, Policy::Random);
        plan.seed = plan_seed;
        let a = build_hierarchy_from(data.clone(), &plan).unwrap();
        let b = build_hierarchy_from(data, &plan).unwrap();
        prop_assert_eq!(a, b);
    }
}
