//! Invariants over randomly generated graphs, labelings and scores.

use std::collections::HashSet;

use classlink::cluster::{kmeans_with, louvain, modularity, KMeansConfig};
use classlink::eval::{hr_at_k, mrr, rank_all, rank_positive};
use classlink::graph::{Edge, Graph, Labels};
use classlink::heuristics::{
    aa_score, class_heuristic_score, cn_score, katz_score, ra_score, ClassHeuristicParams, GammaDecayConfig,
};
use classlink::prior::ClassPriorMatrix;
use classlink::split::{sample_negatives, split_edges, SplitRatios};
use ndarray::Array2;
use proptest::prelude::*;

fn canon((u, v): Edge) -> Edge {
    (u.min(v), u.max(v))
}

/// `(n, raw edge list, class per node, n_classes)`.
fn labeled_graph(max_n: usize, max_edges: usize) -> impl Strategy<Value = (usize, Vec<Edge>, Vec<usize>, usize)> {
    (2..=max_n, 1usize..=6).prop_flat_map(move |(n, c)| {
        (
            Just(n),
            proptest::collection::vec((0..n, 0..n), 0..=max_edges),
            proptest::collection::vec(0..c, n),
            Just(c),
        )
    })
}

fn permutation(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<_>>()).prop_shuffle()
}

/// Symmetric double counting of every undirected edge.
fn brute_counts(g: &Graph, classes: &[usize], c: usize) -> Vec<Vec<u64>> {
    let mut m = vec![vec![0u64; c]; c];
    for (u, v) in g.edges() {
        m[classes[u]][classes[v]] += 1;
        m[classes[v]][classes[u]] += 1;
    }
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn csr_is_symmetric_sorted_and_loop_free((n, edges, _, _) in labeled_graph(30, 80)) {
        let g = Graph::from_edges(n, edges.clone()).unwrap();
        let off = g.offsets();
        prop_assert_eq!(off.len(), n + 1);
        prop_assert!(off.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(off[n], 2 * g.n_edges());
        let expected: HashSet<Edge> = edges.iter().filter(|(u, v)| u != v).map(|&e| canon(e)).collect();
        prop_assert_eq!(g.n_edges(), expected.len());
        for u in 0..n {
            let nb = g.neighbors(u);
            prop_assert_eq!(nb.len(), g.degree(u));
            prop_assert!(nb.windows(2).all(|w| w[0] < w[1]));
            for &v in nb {
                prop_assert!(v != u);
                prop_assert!(g.has_edge(v, u));
                prop_assert!(expected.contains(&canon((u, v))));
            }
        }
    }

    #[test]
    fn prior_matches_brute_force_counts((n, edges, classes, c) in labeled_graph(40, 120)) {
        let g = Graph::from_edges(n, edges).unwrap();
        let labels = Labels::dense(&classes);
        let k = labels.n_classes();
        let edge_list: Vec<Edge> = g.edges().collect();
        let prior = ClassPriorMatrix::from_edges(&edge_list, &labels).unwrap();
        prop_assert!(k <= c);
        prop_assert_eq!(prior.counts_rows(), brute_counts(&g, &classes, k));
        for i in 0..k {
            let s: f64 = prior.prob_row(i).iter().sum();
            if prior.row_total(i) > 0 {
                prop_assert!((s - 1.0).abs() <= 1e-9);
            } else {
                prop_assert_eq!(s, 0.0);
            }
        }
    }

    #[test]
    fn prior_ignores_node_order(
        ((n, edges, classes, _), perm) in labeled_graph(30, 80).prop_flat_map(|t| {
            let n = t.0;
            (Just(t), permutation(n))
        })
    ) {
        let g = Graph::from_edges(n, edges).unwrap().with_labels(Labels::dense(&classes)).unwrap();
        let h = g.permute_nodes(&perm).unwrap();
        let prior = |g: &Graph| {
            let e: Vec<Edge> = g.edges().collect();
            ClassPriorMatrix::from_edges(&e, g.labels().unwrap()).unwrap()
        };
        prop_assert_eq!(prior(&g).counts_rows(), prior(&h).counts_rows());
    }

    #[test]
    fn prior_follows_class_relabeling(
        ((n, edges, classes, _), perm) in labeled_graph(30, 80).prop_flat_map(|t| {
            let k = t.2.iter().max().map_or(1, |&m| m + 1);
            (Just(t), permutation(k))
        })
    ) {
        let g = Graph::from_edges(n, edges).unwrap();
        let e: Vec<Edge> = g.edges().collect();
        let labels = Labels::dense(&classes);
        let k = labels.n_classes();
        prop_assume!(k == perm.len());
        let a = ClassPriorMatrix::from_edges(&e, &labels).unwrap();
        let b = ClassPriorMatrix::from_edges(&e, &labels.permute_classes(&perm)).unwrap();
        for i in 0..k {
            for j in 0..k {
                prop_assert_eq!(a.count(i, j), b.count(perm[i], perm[j]));
            }
        }
    }

    #[test]
    fn split_partitions_edges((n, edges, _, _) in labeled_graph(40, 150), seed in any::<u64>()) {
        let g = Graph::from_edges(n, edges).unwrap();
        prop_assume!(g.n_edges() >= 10);
        let s = split_edges(&g, SplitRatios::default(), seed).unwrap();
        let m = g.n_edges();
        let (tr, va, te) = SplitRatios::default().sizes(m);
        prop_assert_eq!((s.train_edges.len(), s.valid_edges.len(), s.test_edges.len()), (tr, va, te));
        prop_assert!((tr as f64 - 0.85 * m as f64).abs() <= 1.0);
        let all: Vec<Edge> = s.train_edges.iter().chain(&s.valid_edges).chain(&s.test_edges).map(|&e| canon(e)).collect();
        let set: HashSet<Edge> = all.iter().copied().collect();
        prop_assert_eq!(set.len(), all.len());
        prop_assert_eq!(set, g.edges().map(canon).collect::<HashSet<_>>());
        let vn: HashSet<Edge> = s.valid_negatives.iter().map(|&e| canon(e)).collect();
        let tn: HashSet<Edge> = s.test_negatives.iter().map(|&e| canon(e)).collect();
        prop_assert_eq!(vn.len(), s.valid_negatives.len());
        prop_assert_eq!(tn.len(), s.test_negatives.len());
        prop_assert!(vn.is_disjoint(&tn));
        for &(u, v) in vn.iter().chain(&tn) {
            prop_assert!(u != v && !g.has_edge(u, v));
        }
    }

    #[test]
    fn negatives_are_distinct_non_edges((n, edges, _, _) in labeled_graph(30, 60), count in 0usize..20, seed in any::<u64>()) {
        let g = Graph::from_edges(n, edges).unwrap();
        let available = n * (n - 1) / 2 - g.n_edges();
        match sample_negatives(&g, count, seed, &HashSet::new()) {
            Ok(neg) => {
                prop_assert!(count <= available);
                prop_assert_eq!(neg.len(), count);
                let set: HashSet<Edge> = neg.iter().map(|&e| canon(e)).collect();
                prop_assert_eq!(set.len(), count);
                prop_assert!(neg.iter().all(|&(u, v)| u != v && !g.has_edge(u, v)));
            }
            Err(_) => prop_assert!(count > available),
        }
    }

    #[test]
    fn ranks_are_monotone_and_consistent(
        pos in proptest::collection::vec(-5i32..5, 1..20),
        neg in proptest::collection::vec(-5i32..5, 0..40),
        bump in 0i32..4,
    ) {
        // Small integer scores force ties.
        let pos: Vec<f64> = pos.into_iter().map(f64::from).collect();
        let neg: Vec<f64> = neg.into_iter().map(f64::from).collect();
        let ranks = rank_all(&pos, &neg).unwrap();
        for (&p, &r) in pos.iter().zip(&ranks) {
            prop_assert_eq!(r, rank_positive(p, &neg).unwrap());
            prop_assert!(r >= 1 && r <= neg.len() + 1);
            prop_assert!(rank_positive(p + f64::from(bump), &neg).unwrap() <= r);
        }
        let m = mrr(&ranks).unwrap();
        prop_assert!(m > 0.0 && m <= 1.0);
        let mut last = 0.0;
        for k in 1..=neg.len() + 1 {
            let h = hr_at_k(&ranks, k).unwrap();
            prop_assert!(h >= last);
            last = h;
        }
        prop_assert_eq!(last, 1.0);
    }

    #[test]
    fn heuristics_are_symmetric((n, edges, _, _) in labeled_graph(25, 70), x in 0usize..25, y in 0usize..25) {
        let g = Graph::from_edges(n, edges).unwrap();
        let (x, y) = (x % n, y % n);
        let katz = GammaDecayConfig::default();
        prop_assert_eq!(cn_score(&g, x, y), cn_score(&g, y, x));
        prop_assert_eq!(aa_score(&g, x, y), aa_score(&g, y, x));
        prop_assert_eq!(ra_score(&g, x, y), ra_score(&g, y, x));
        let (a, b) = (katz_score(&g, x, y, &katz), katz_score(&g, y, x, &katz));
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn new_common_neighbor_never_lowers_scores((n, edges, _, _) in labeled_graph(25, 70), x in 0usize..25, y in 0usize..25) {
        let g = Graph::from_edges(n, edges.clone()).unwrap();
        let (x, y) = (x % n, y % n);
        prop_assume!(x != y);
        let mut more = edges;
        more.extend([(x, n), (y, n)]);
        let h = Graph::from_edges(n + 1, more).unwrap();
        prop_assert_eq!(cn_score(&h, x, y), cn_score(&g, x, y) + 1.0);
        prop_assert!(aa_score(&h, x, y) >= aa_score(&g, x, y));
        prop_assert!(ra_score(&h, x, y) >= ra_score(&g, x, y));
    }

    #[test]
    fn katz_tail_is_bounded((n, edges, _, _) in labeled_graph(20, 50), x in 0usize..20, y in 0usize..20, max_length in 1usize..5) {
        let g = Graph::from_edges(n, edges).unwrap();
        let (x, y) = (x % n, y % n);
        let delta = g.max_degree().max(1) as f64;
        let short = GammaDecayConfig { gamma: 0.5 / delta, max_length };
        let long = GammaDecayConfig { max_length: max_length + 5, ..short };
        let gap = (katz_score(&g, x, y, &long) - katz_score(&g, x, y, &short)).abs();
        prop_assert!(gap <= short.tail_bound(delta) + 1e-12);
    }

    #[test]
    fn zero_prior_reduces_to_structural((n, edges, classes, c) in labeled_graph(25, 70), x in 0usize..25, y in 0usize..25, normalize in any::<bool>()) {
        let g = Graph::from_edges(n, edges).unwrap();
        let labels = Labels::dense(&classes);
        let k = labels.n_classes();
        prop_assert!(k <= c);
        let prior = ClassPriorMatrix::from_counts(k, vec![0; k * k]).unwrap();
        let (x, y) = (x % n, y % n);
        let params = ClassHeuristicParams { normalize_locally: normalize, ..Default::default() };
        let s = cn_score(&g, x, y);
        prop_assert_eq!(class_heuristic_score(&g, &prior, &labels, x, y, s, &params).unwrap(), s);
    }

    #[test]
    fn kmeans_ssd_never_increases(
        rows in proptest::collection::vec(proptest::collection::vec(-10.0f64..10.0, 3), 5..60),
        k in 1usize..6,
        seed in any::<u64>(),
    ) {
        prop_assume!(k <= rows.len());
        let data = Array2::from_shape_vec((rows.len(), 3), rows.concat()).unwrap();
        let fit = kmeans_with(&data, k, seed, &KMeansConfig::default()).unwrap();
        prop_assert!(fit.ssd_history.windows(2).all(|w| w[1] <= w[0] + 1e-9 * w[0].abs().max(1.0)));
        prop_assert!(fit.assignment.iter().all(|&a| a < k));
    }

    #[test]
    fn louvain_improves_on_singletons((n, edges, _, _) in labeled_graph(30, 80), seed in any::<u64>()) {
        let g = Graph::from_edges(n, edges).unwrap();
        prop_assume!(g.n_edges() > 0);
        let l = louvain(&g, seed).unwrap();
        let mut seen = vec![false; l.k];
        for &c in &l.labels {
            seen[c] = true;
        }
        prop_assert!(seen.iter().all(|&s| s));
        let singletons: Vec<usize> = (0..n).collect();
        prop_assert!(modularity(&g, &l.labels) >= modularity(&g, &singletons) - 1e-12);
    }

    #[test]
    fn graph_document_round_trips((n, edges, classes, _) in labeled_graph(20, 50)) {
        let g = Graph::from_edges(n, edges).unwrap().with_labels(Labels::dense(&classes)).unwrap();
        let back = Graph::from_document(g.to_document(Some(1))).unwrap();
        prop_assert_eq!(back, g);
    }
}
