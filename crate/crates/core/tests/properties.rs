mod common;

use std::collections::BTreeMap;

use common::*;
use pipea::decode::{greedy_decode, hungarian_assign, sinkhorn};
use pipea::encoder::builtin_encoder;
use pipea::eval::evaluate;
use pipea::kg::{normalized_adjacency, DatasetBundle, KnowledgeGraph, SeedAlignments, Triple};
use pipea::linalg::{
    row_topk_l2_normalize, spmm, threshold_sparsify_log, DenseMatrix, SparseMatrix,
};
use proptest::prelude::*;

fn matrix(rows: usize, cols: usize, lo: f64, hi: f64) -> impl Strategy<Value = DenseMatrix> {
    proptest::collection::vec(lo..hi, rows * cols)
        .prop_map(move |v| DenseMatrix::from_vec(rows, cols, v).unwrap())
}

/// Random matrix where about `1 - density` of the entries are exactly zero.
fn sparse_matrix(rows: usize, cols: usize) -> impl Strategy<Value = DenseMatrix> {
    proptest::collection::vec((0.0..1.0f64, -5.0..5.0f64), rows * cols).prop_map(move |v| {
        let values = v
            .into_iter()
            .map(|(p, x)| if p < 0.3 { x } else { 0.0 })
            .collect();
        DenseMatrix::from_vec(rows, cols, values).unwrap()
    })
}

fn naive_product(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(a.rows(), b.cols());
    for i in 0..a.rows() {
        for j in 0..b.cols() {
            let mut acc = 0.0;
            for l in 0..a.cols() {
                acc += a.get(i, l) * b.get(l, j);
            }
            out.set(i, j, acc);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn spmm_matches_naive(a in sparse_matrix(50, 50), b in matrix(50, 50, -1.0, 1.0)) {
        let got = spmm(&SparseMatrix::from_dense(&a), &b).unwrap();
        let want = naive_product(&a, &b);
        let scale = want.as_slice().iter().fold(1.0f64, |m, v| m.max(v.abs()));
        prop_assert!(got.max_abs_diff(&want) <= 1e-10 * scale);
    }

    #[test]
    fn topk_rows_are_unit_and_short(m in matrix(12, 9, 0.0, 1.0), k in 1usize..6, pin in 0usize..12) {
        let pinned = BTreeMap::from([(pin, 3usize)]);
        let out = row_topk_l2_normalize(&m, k, &pinned).unwrap();
        for i in 0..out.rows() {
            let (cols, vals) = out.row(i);
            if i == pin {
                prop_assert_eq!(cols, &[3usize][..]);
                prop_assert_eq!(vals, &[1.0][..]);
                continue;
            }
            prop_assert!(cols.len() <= k);
            if !vals.is_empty() {
                prop_assert!((out.row_norm(i) - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn threshold_keeps_only_positive(m in matrix(20, 20, 0.0, 1.0), delta in 1e-3..0.9f64) {
        let out = threshold_sparsify_log(&m, delta).unwrap();
        prop_assert!(out.values().iter().all(|&v| v > 0.0));
        for i in 0..20 {
            for j in 0..20 {
                let kept = out.get(i, j) != 0.0;
                prop_assert_eq!(kept, m.get(i, j) > delta);
            }
        }
    }

    #[test]
    fn sinkhorn_becomes_doubly_stochastic(m in matrix(30, 30, 0.0, 3.0)) {
        let s = sinkhorn(&m, 100).unwrap();
        for i in 0..30 {
            prop_assert!((s.row(i).iter().sum::<f64>() - 1.0).abs() <= 1e-6);
        }
        let t = s.transpose();
        for j in 0..30 {
            prop_assert!((t.row(j).iter().sum::<f64>() - 1.0).abs() <= 1e-6);
        }
    }

    #[test]
    fn ranking_is_scale_invariant(m in matrix(15, 15, -1.0, 1.0), c in 1e-3..1e3f64) {
        let seeds = SeedAlignments::new(vec![], (0..15).map(|i| (i, (i * 7) % 15)).collect()).unwrap();
        let a = evaluate(&m, &seeds, &[1, 5, 10]).unwrap();
        let b = evaluate(&m.scaled(c), &seeds, &[1, 5, 10]).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn assignment_never_loses_to_greedy(m in matrix(25, 25, 0.0, 1.0)) {
        let exact = hungarian_assign(&m).unwrap();
        prop_assert!(exact.is_one_to_one());
        let greedy = greedy_decode(&m);
        prop_assert!(exact.total_score(&m) >= greedy.total_score(&m) - 1e-9);
        let via_sinkhorn = greedy_decode(&sinkhorn(&m, 10).unwrap());
        prop_assert!(exact.total_score(&m) >= via_sinkhorn.total_score(&m) - 1e-9);
    }

    #[test]
    fn rectangular_assignment_is_optimal(m in matrix(4, 6, 0.0, 1.0)) {
        // brute force over every injective map of 4 rows into 6 columns
        fn best(m: &DenseMatrix, row: usize, used: &mut Vec<bool>) -> f64 {
            if row == m.rows() {
                return 0.0;
            }
            let mut top = f64::MIN;
            for j in 0..m.cols() {
                if !used[j] {
                    used[j] = true;
                    top = top.max(m.get(row, j) + best(m, row + 1, used));
                    used[j] = false;
                }
            }
            top
        }
        let want = best(&m, 0, &mut vec![false; 6]);
        let got = hungarian_assign(&m).unwrap().total_score(&m);
        prop_assert!((got - want).abs() <= 1e-9);
    }

    #[test]
    fn encoder_is_permutation_equivariant(seed in 0u64..1000, shuffle in any::<u64>()) {
        use rand::seq::SliceRandom;
        let bundle = synthetic(30, 0.15, 0.0, 0.2, seed);
        let m = bundle.target.entity_count();
        let mut pi: Vec<usize> = (0..m).collect();
        pi.shuffle(&mut rng(shuffle));

        let old = &bundle.target;
        let mut labels = vec![String::new(); m];
        for (j, label) in old.entity_labels().iter().enumerate() {
            labels[pi[j]] = label.clone();
        }
        let triples = old
            .triples()
            .iter()
            .map(|t| Triple { head: pi[t.head], relation: t.relation, tail: pi[t.tail] })
            .collect();
        let target = KnowledgeGraph::new(labels, old.relation_labels().to_vec(), triples).unwrap();
        let remap = |pairs: &[(usize, usize)]| pairs.iter().map(|&(s, t)| (s, pi[t])).collect::<Vec<_>>();
        let seeds = SeedAlignments::new(remap(bundle.seeds.train_pairs()), remap(bundle.seeds.test_pairs())).unwrap();
        let moved = DatasetBundle::new(bundle.source.clone(), target, seeds).unwrap();

        let a = builtin_encoder(&bundle, 2).unwrap().into_values();
        let b = builtin_encoder(&moved, 2).unwrap().into_values();
        for i in 0..a.rows() {
            for (j, &pj) in pi.iter().enumerate() {
                prop_assert_eq!(a.get(i, j), b.get(i, pj));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn normalized_adjacency_rows_sum_to_one(seed in 0u64..1000, p in 0.05..0.5f64) {
        let bundle = synthetic(40, p, 0.2, 0.1, seed);
        for g in [&bundle.source, &bundle.target] {
            let na = normalized_adjacency(g);
            for i in 0..g.entity_count() {
                if g.degree(i) > 0 {
                    prop_assert!((na.row_sum(i) - 1.0).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn unperturbed_pair_is_a_relabeling(seed in 0u64..1000) {
        let bundle = synthetic(40, 0.1, 0.0, 0.1, seed);
        let mut pi = vec![usize::MAX; bundle.source.entity_count()];
        for &(s, t) in bundle.seeds.train_pairs().iter().chain(bundle.seeds.test_pairs()) {
            pi[s] = t;
        }
        let (a_s, a_t) = (bundle.source.adjacency(), bundle.target.adjacency());
        prop_assert_eq!(a_s.nnz(), a_t.nnz());
        for i in 0..a_s.rows() {
            for (&j, _) in a_s.row(i).0.iter().zip(a_s.row(i).1) {
                prop_assert_eq!(a_t.get(pi[i], pi[j]), 1.0);
            }
        }
    }

    #[test]
    fn encoder_reaches_counterparts(seed in 0u64..1000) {
        let bundle = synthetic(40, 0.08, 0.0, 0.1, seed);
        let w = builtin_encoder(&bundle, 2).unwrap().into_values();
        // breadth-first distance to the nearest seed in the source graph
        let a = bundle.source.adjacency();
        let mut dist = vec![usize::MAX; a.rows()];
        let mut frontier: Vec<usize> = bundle.seeds.train_pairs().iter().map(|&(s, _)| s).collect();
        frontier.iter().for_each(|&s| dist[s] = 0);
        for hop in 1..=2 {
            let mut next = Vec::new();
            for &v in &frontier {
                for &u in a.row(v).0 {
                    if dist[u] == usize::MAX {
                        dist[u] = hop;
                        next.push(u);
                    }
                }
            }
            frontier = next;
        }
        for &(s, t) in bundle.seeds.test_pairs() {
            if dist[s] <= 2 {
                prop_assert!(w.get(s, t) > 0.0, "entity {} at distance {}", s, dist[s]);
            }
        }
    }
}
