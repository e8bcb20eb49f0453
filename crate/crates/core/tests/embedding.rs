mod common;

use common::criteria;
use common::{katz_oracle, random_graph, sensitive_apis, Plain};
use fcgprobe::embed::{
    average_centrality, closeness_centrality, concentrate_centrality, degree_centrality, harmonic_centrality,
    katz_centrality, EmbedError, KatzParams,
};
use fcgprobe::graph::{FunctionCallGraph, NodeId, NodeKind, NodeRecord, SensitiveApiIndex};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn chain() -> (FunctionCallGraph, SensitiveApiIndex) {
    let mut g = FunctionCallGraph::new();
    let a = g.add_node(NodeKind::User, "a");
    let b = g.add_node(NodeKind::User, "b");
    let c = g.add_node(NodeKind::System, "c");
    g.add_edge(a, b).unwrap();
    g.add_edge(b, c).unwrap();
    (g, SensitiveApiIndex::new(vec!["c".into()]).unwrap())
}

#[test]
fn centralities_match_brute_force_on_random_graphs() {
    let check = criteria::embedding_oracles(30, 11);
    assert!(check.passed, "{}", check.line());
}

#[test]
fn harmonic_of_chain_end_is_one_and_a_half() {
    let (g, apis) = chain();
    assert_eq!(harmonic_centrality(&g, &apis).values, vec![1.5]);
}

#[test]
fn closeness_of_chain_end_is_two_thirds() {
    let (g, apis) = chain();
    let v = closeness_centrality(&g, &apis).unwrap().values[0];
    assert!((v - 4.0 / 6.0).abs() < 1e-15);
}

#[test]
fn katz_on_single_edge_is_alpha() {
    let mut g = FunctionCallGraph::new();
    let a = g.add_node(NodeKind::User, "a");
    let b = g.add_node(NodeKind::System, "b");
    g.add_edge(a, b).unwrap();
    let apis = SensitiveApiIndex::new(vec!["b".into(), "a".into()]).unwrap();
    let params = KatzParams { alpha: 0.1, ..KatzParams::default() };
    // `a` is a user node, so it never occupies a feature slot.
    assert_eq!(katz_centrality(&g, &apis, params).unwrap().values, vec![0.1, 0.0]);
}

#[test]
fn katz_matches_series_on_random_dags() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let apis = sensitive_apis(10);
    let params = KatzParams { alpha: 0.05, tol: 1e-14, max_iter: 1000 };
    for _ in 0..100 {
        let g = random_graph(&mut rng, 30, 0.15);
        // Keep only forward edges by id so the graph is acyclic.
        let mut dag = FunctionCallGraph::new();
        for r in g.nodes() {
            dag.insert_node(r.clone()).unwrap();
        }
        for (u, v) in g.edges().filter(|(u, v)| u < v) {
            dag.add_edge(u, v).unwrap();
        }
        let plain = Plain::of(&dag);
        let series = katz_oracle(&plain, 0.05, 50);
        let got = katz_centrality(&dag, &apis, params).unwrap().values;
        for (i, api) in apis.iter().enumerate() {
            let want = plain.find_api(api).map_or(0.0, |v| series[v]);
            assert!((got[i] - want).abs() <= 1e-9, "{api}: {} vs {want}", got[i]);
        }
    }
}

#[test]
fn katz_rejects_alpha_beyond_spectral_bound() {
    let mut g = FunctionCallGraph::new();
    let ids: Vec<NodeId> = (0..6).map(|i| g.add_node(NodeKind::User, format!("u{i}"))).collect();
    for &u in &ids {
        for &v in &ids {
            if u != v {
                g.add_edge(u, v).unwrap();
            }
        }
    }
    let apis = SensitiveApiIndex::new(vec!["x".into()]).unwrap();
    let r = katz_centrality(&g, &apis, KatzParams { alpha: 0.5, ..KatzParams::default() });
    assert!(matches!(r, Err(EmbedError::AlphaTooLarge { .. })));
}

#[test]
fn average_and_concentrate_are_built_from_components() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let apis = sensitive_apis(8);
    let katz = KatzParams::default();
    for _ in 0..50 {
        let p = rng.gen_range(0.02..0.1);
        let g = random_graph(&mut rng, 40, p);
        let d = degree_centrality(&g, &apis).unwrap().values;
        let k = katz_centrality(&g, &apis, katz).unwrap().values;
        let h = harmonic_centrality(&g, &apis).values;
        let c = closeness_centrality(&g, &apis).unwrap().values;
        let avg = average_centrality(&g, &apis, katz).unwrap().values;
        for i in 0..apis.len() {
            let mean = (d[i] + k[i] + h[i] + c[i]) / 4.0;
            assert!((avg[i] - mean).abs() <= 1e-12);
        }
        let conc = concentrate_centrality(&g, &apis, katz).unwrap().values;
        assert_eq!(conc.len(), 4 * apis.len());
        assert_eq!(&conc[..apis.len()], d.as_slice());
    }
}

#[test]
fn single_node_graph_is_degenerate() {
    let mut g = FunctionCallGraph::new();
    g.add_node(NodeKind::System, "s");
    let apis = SensitiveApiIndex::new(vec!["s".into()]).unwrap();
    assert!(matches!(degree_centrality(&g, &apis), Err(EmbedError::DegenerateGraph { nodes: 1 })));
}

/// Rebuilds `g` with node ids permuted by `perm`.
fn relabel(g: &FunctionCallGraph, perm: &[u64]) -> FunctionCallGraph {
    let ids: Vec<NodeId> = g.node_ids().collect();
    let map = |id: NodeId| NodeId(perm[ids.iter().position(|&x| x == id).unwrap()] + 100);
    let mut out = FunctionCallGraph::new();
    for r in g.nodes() {
        out.insert_node(NodeRecord { id: map(r.id), kind: r.kind, label: r.label.clone() }).unwrap();
    }
    for (u, v) in g.edges() {
        out.add_edge(map(u), map(v)).unwrap();
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn embeddings_ignore_node_ids(seed in any::<u64>(), shuffle in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, 25, 0.12);
        let mut perm: Vec<u64> = (0..g.node_count() as u64).collect();
        let mut prng = ChaCha8Rng::seed_from_u64(shuffle);
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut prng);
        let h = relabel(&g, &perm);
        let apis = sensitive_apis(6);
        prop_assert_eq!(degree_centrality(&g, &apis).unwrap(), degree_centrality(&h, &apis).unwrap());
        prop_assert_eq!(harmonic_centrality(&g, &apis), harmonic_centrality(&h, &apis));
        prop_assert_eq!(closeness_centrality(&g, &apis).unwrap(), closeness_centrality(&h, &apis).unwrap());
    }

    #[test]
    fn degree_features_are_bounded(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, 30, 0.3);
        let apis = sensitive_apis(10);
        for v in degree_centrality(&g, &apis).unwrap().values {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        for v in closeness_centrality(&g, &apis).unwrap().values {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }
}
