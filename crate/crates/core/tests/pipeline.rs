mod common;

use common::*;
use pipea::config::PipelineConfig;
use pipea::encoder::{builtin_encoder, Provenance, SimilarityMatrix};
use pipea::kg::{load_openea_dataset, write_openea_dataset, DatasetBundle};
use pipea::linalg::{
    numerical_rank, orthonormalize, randomized_svd, threshold_sparsify_log, DenseMatrix,
};
use pipea::operator::{build_operator, propagate_push, propagate_series};
use pipea::refine::{fuse, refine, refine_with, RefineEvent, RefinementState};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

#[test]
fn push_tracks_series_within_ten_eps() {
    let mut r = rng(11);
    for _ in 0..8 {
        let op = random_operator(&mut r, 100);
        for eps in [1e-4, 1e-6] {
            let push = propagate_push(&op, 0.7, eps).unwrap().s.to_dense();
            let series = propagate_series(&op, 0.7, 60).unwrap().s.to_dense();
            let gap = push.max_abs_diff(&series);
            assert!(gap <= 10.0 * eps, "eps {eps}: gap {gap:e}");
        }
    }
}

#[test]
fn series_tail_bound_for_substochastic_operators() {
    // with one candidate per row every operator row sums to at most 1
    let mut r = rng(12);
    for _ in 0..10 {
        let bundle = synthetic(r.random_range(5..50), 0.2, 0.1, 0.2, r.random());
        let (n, m) = bundle.shape();
        let omega0 =
            SimilarityMatrix::new(uniform_matrix(&mut r, n, m, 0.0, 1.0), Provenance::Imported)
                .unwrap();
        let op = build_operator(&bundle, &omega0, r.random_range(0.1..0.9), 1).unwrap();
        let l = op.matrix();
        assert!((0..l.rows()).all(|i| l.row_sum(i) <= 1.0 + 1e-12));
        for l1 in [4, 8] {
            let short = propagate_series(&op, 0.7, l1).unwrap().s.to_dense();
            let long = propagate_series(&op, 0.7, 30).unwrap().s.to_dense();
            assert!(short.max_abs_diff(&long) <= 0.3f64.powi(l1 as i32) + 1e-9);
        }
    }
}

#[test]
fn operator_block_sums() {
    let mut r = rng(13);
    for _ in 0..10 {
        let bundle = synthetic(r.random_range(5..40), 0.2, 0.1, 0.2, r.random());
        let (n, m) = bundle.shape();
        let omega0 =
            SimilarityMatrix::new(uniform_matrix(&mut r, n, m, 0.0, 1.0), Provenance::Imported)
                .unwrap();
        let beta = r.random_range(0.1..0.9);
        let op = build_operator(&bundle, &omega0, beta, 2).unwrap();
        let l = op.matrix();
        let pinned_s: Vec<usize> = bundle.seeds.train_pairs().iter().map(|p| p.0).collect();
        let pinned_t: Vec<usize> = bundle.seeds.train_pairs().iter().map(|p| n + p.1).collect();
        for i in 0..n + m {
            let (cols, vals) = l.row(i);
            let (own, other): (Vec<_>, Vec<_>) = cols
                .iter()
                .zip(vals)
                .partition(|(&c, _)| (c < n) == (i < n));
            let intra: f64 = own.iter().map(|(_, &v)| v).sum();
            let degree = if i < n {
                bundle.source.degree(i)
            } else {
                bundle.target.degree(i - n)
            };
            if degree > 0 {
                assert!((intra - beta).abs() <= 1e-12);
            }
            let inter: Vec<f64> = other.iter().map(|(_, &v)| v).collect();
            if pinned_s.contains(&i) || pinned_t.contains(&i) {
                assert_eq!(inter.len(), 1);
                assert!((inter[0] - (1.0 - beta)).abs() <= 1e-12);
            } else {
                let norm = inter.iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!((norm - (1.0 - beta)).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn low_rank_products_keep_their_rank() {
    let mut r = rng(14);
    for _ in 0..20 {
        let (n, d) = (r.random_range(10..40), r.random_range(1..8));
        let gauss = |r: &mut _, rows, cols| {
            DenseMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(r))
        };
        let q = orthonormalize(&gauss(&mut r, n, d));
        let g = gauss(&mut r, n, d);
        let lambda = q.matmul_transpose(&g).unwrap();
        let gram = lambda.matmul_transpose(&lambda).unwrap();
        assert_eq!(numerical_rank(&gram, 1e-9), d);
    }
}

#[test]
fn randomized_svd_with_two_power_iterations() {
    let mut r = rng(15);
    for case in 0..10 {
        let s = uniform_matrix(&mut r, 50, 50, 0.0, 1.0);
        let sparse = threshold_sparsify_log(&s, 0.3).unwrap();
        let svd = randomized_svd(&sparse, 10, pipea::linalg::DEFAULT_OVERSAMPLE, 2, case).unwrap();
        let exact = singular_values_oracle(&sparse.to_dense());
        for (got, want) in svd.sigma.iter().zip(&exact) {
            assert!((got - want).abs() <= 1e-3 * want, "{got} vs {want}");
        }
    }
}

#[test]
fn refinement_stays_positive_and_pinned() {
    let bundle = synthetic(60, 0.1, 0.05, 0.1, 3);
    let omega0 = builtin_encoder(&bundle, 2).unwrap().into_values();
    let start = omega0.as_slice().iter().map(|v| v.max(0.0)).collect();
    let start = DenseMatrix::from_vec(omega0.rows(), omega0.cols(), start).unwrap();
    let mut pinned_ok = true;
    refine_with(
        RefinementState::new(start, 1e-5),
        bundle.source.adjacency(),
        bundle.target.adjacency(),
        &bundle.seeds,
        10,
        |event| match event {
            RefineEvent::Pinned { omega, .. } => {
                pinned_ok &= bundle
                    .seeds
                    .train_pairs()
                    .iter()
                    .all(|&(s, t)| omega.row_argmax(s) == Some(t));
            }
            RefineEvent::Completed { omega, .. } => {
                assert!(omega.as_slice().iter().all(|v| v.is_finite() && *v > 0.0));
            }
        },
    )
    .unwrap();
    assert!(pinned_ok);
}

#[test]
fn permutation_is_a_refinement_fixed_point() {
    let bundle = synthetic(40, 0.15, 0.0, 1.0, 4);
    let n = bundle.source.entity_count();
    let mut p = DenseMatrix::zeros(n, n);
    for &(s, t) in bundle.seeds.train_pairs() {
        p.set(s, t, 1.0);
    }
    for l2 in [1, 3, 8] {
        let out = refine(
            RefinementState::new(p.clone(), 1e-5),
            bundle.source.adjacency(),
            bundle.target.adjacency(),
            &bundle.seeds,
            l2,
        )
        .unwrap();
        for i in 0..n {
            assert_eq!(out.omega.row_argmax(i), p.row_argmax(i));
        }
    }
}

#[test]
fn refinement_concentrates_on_isomorphic_pairs() {
    let trials = 20;
    let mut monotone = 0;
    for seed in 0..trials {
        let bundle = synthetic(80, 0.08, 0.0, 0.05, 100 + seed);
        let out = run_builtin(&bundle, &PipelineConfig::default());
        if out
            .trace
            .windows(2)
            .all(|w| w[1].hits_at_1 >= w[0].hits_at_1)
        {
            monotone += 1;
        }
    }
    assert!(
        monotone as f64 >= 0.95 * trials as f64,
        "{monotone}/{trials} monotone traces"
    );
}

#[test]
fn report_reproduces_from_its_config() {
    let bundle = synthetic(80, 0.08, 0.05, 0.05, 5);
    let config = PipelineConfig {
        rng_seed: 17,
        beta: 0.4,
        ..Default::default()
    };
    let first = run_builtin(&bundle, &config);
    let embedded = first.report.config.clone().unwrap();
    assert_eq!(embedded, config);
    let second = run_builtin(&bundle, &embedded);
    assert_eq!(first.report, second.report);
    assert_eq!(first.alignment, second.alignment);
}

#[test]
fn ablations_skip_their_stage() {
    let bundle = synthetic(60, 0.1, 0.05, 0.1, 6);
    let base = PipelineConfig::default();
    let omega0 = builtin_encoder(&bundle, base.hops).unwrap();

    let no_prop = run_builtin(
        &bundle,
        &PipelineConfig {
            no_propagation: true,
            no_refine: true,
            ..base.clone()
        },
    );
    assert!(no_prop.embeddings.is_none());
    let clamped: Vec<f64> = omega0
        .values()
        .as_slice()
        .iter()
        .map(|v| v.max(0.0))
        .collect();
    assert_eq!(no_prop.refined.as_slice(), &clamped[..]);

    let no_refine = run_builtin(
        &bundle,
        &PipelineConfig {
            no_refine: true,
            ..base.clone()
        },
    );
    assert!(no_refine.trace.is_empty());
    let emb = no_refine.embeddings.as_ref().unwrap();
    let prime = pipea::operator::global_similarity(&emb.x_s, &emb.x_t).unwrap();
    assert_eq!(no_refine.refined, fuse(&omega0, &prime).unwrap());

    let no_initial = run_builtin(
        &bundle,
        &PipelineConfig {
            no_initial: true,
            no_refine: true,
            ..base.clone()
        },
    );
    let prime_only: Vec<f64> = prime
        .values()
        .as_slice()
        .iter()
        .map(|v| v.max(0.0))
        .collect();
    assert_eq!(no_initial.refined.as_slice(), &prime_only[..]);

    let full = run_builtin(&bundle, &base);
    assert_eq!(full.trace.len(), base.l2);
}

fn labelled_triples(g: &pipea::kg::KnowledgeGraph) -> Vec<(String, String, String)> {
    let (e, r) = (g.entity_labels(), g.relation_labels());
    let mut out: Vec<_> = g
        .triples()
        .iter()
        .map(|t| (e[t.head].clone(), r[t.relation].clone(), e[t.tail].clone()))
        .collect();
    out.sort();
    out
}

fn labelled_links(b: &DatasetBundle) -> Vec<(String, String)> {
    let (s, t) = (b.source.entity_labels(), b.target.entity_labels());
    let mut out: Vec<_> = b
        .seeds
        .train_pairs()
        .iter()
        .chain(b.seeds.test_pairs())
        .map(|&(i, j)| (s[i].clone(), t[j].clone()))
        .collect();
    out.sort();
    out
}

#[test]
fn openea_round_trip() {
    for seed in 0..4 {
        let bundle = synthetic(50, 0.1, 0.1, 0.1, seed);
        let dir = tempfile::tempdir().unwrap();
        write_openea_dataset(&bundle, dir.path()).unwrap();
        let back = load_openea_dataset(dir.path(), 0.1, seed).unwrap();
        assert_eq!(
            labelled_triples(&bundle.source),
            labelled_triples(&back.source)
        );
        assert_eq!(
            labelled_triples(&bundle.target),
            labelled_triples(&back.target)
        );
        assert_eq!(labelled_links(&bundle), labelled_links(&back));
        assert_eq!(
            bundle.seeds.train_pairs().len(),
            back.seeds.train_pairs().len()
        );
        assert_eq!(bundle.source.edge_count(), back.source.edge_count());
    }
}

#[test]
fn imported_similarity_matches_builtin() {
    let bundle = synthetic(30, 0.15, 0.0, 0.2, 8);
    let w = builtin_encoder(&bundle, 2).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("omega.tsv");
    pipea::io::write_matrix(&path, w.values()).unwrap();
    let back = pipea::encoder::import_similarity(&path, &bundle).unwrap();
    assert!(back.values().max_abs_diff(w.values()) <= 1e-12);
    assert_eq!(back.provenance(), Provenance::Imported);

    let small = dir.path().join("small.f32");
    pipea::io::write_matrix(&small, &DenseMatrix::identity(2)).unwrap();
    let err = pipea::encoder::import_similarity(&small, &bundle).unwrap_err();
    assert!(matches!(err, pipea::Error::Integrity { .. }), "{err}");
}
