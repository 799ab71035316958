#![allow(dead_code)]

use pipea::config::PipelineConfig;
use pipea::encoder::{Provenance, SimilarityMatrix};
use pipea::kg::{generate_synthetic_pair, DatasetBundle, SyntheticParams};
use pipea::linalg::DenseMatrix;
use pipea::operator::{build_operator, PipOperator};
use pipea::pipeline::{initial_similarity, run, PipelineOutput, SimilaritySource};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn synthetic(
    nodes: usize,
    edge_prob: f64,
    perturb: f64,
    seed_ratio: f64,
    rng_seed: u64,
) -> DatasetBundle {
    generate_synthetic_pair(&SyntheticParams {
        nodes,
        edge_prob,
        perturb,
        seed_ratio,
        rng_seed,
    })
    .unwrap()
}

/// Runs the whole pipeline with the built-in encoder.
pub fn run_builtin(bundle: &DatasetBundle, config: &PipelineConfig) -> PipelineOutput {
    let omega0 = initial_similarity(bundle, &SimilaritySource::Builtin, config).unwrap();
    run(bundle, &omega0, config).unwrap()
}

pub fn uniform_matrix(
    r: &mut ChaCha8Rng,
    rows: usize,
    cols: usize,
    lo: f64,
    hi: f64,
) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| r.random_range(lo..hi))
}

/// Operator over a random synthetic pair with a random positive initial similarity.
pub fn random_operator(r: &mut ChaCha8Rng, max_nodes: usize) -> PipOperator {
    let nodes = r.random_range(4..=max_nodes);
    let bundle = synthetic(nodes, r.random_range(0.1..0.4), 0.1, 0.2, r.random());
    let (n, m) = bundle.shape();
    let omega0 =
        SimilarityMatrix::new(uniform_matrix(r, n, m, 0.0, 1.0), Provenance::Imported).unwrap();
    let beta = r.random_range(0.2..0.8);
    let k = r.random_range(1..=3usize).min(m);
    build_operator(&bundle, &omega0, beta, k).unwrap()
}

/// Singular values by an independent route: eigenvalues of the Gram matrix
/// computed with a symmetric eigensolver, sorted descending.
pub fn singular_values_oracle(m: &DenseMatrix) -> Vec<f64> {
    let a = nalgebra::DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice());
    let gram = a.transpose() * &a;
    let mut s: Vec<f64> = gram
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .map(|&l| l.max(0.0).sqrt())
        .collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

/// Eigen-decomposition of a symmetric matrix, eigenpairs ordered by descending |λ|.
pub fn symmetric_eigen_by_magnitude(m: &DenseMatrix) -> (Vec<f64>, DenseMatrix) {
    let a = nalgebra::DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice());
    let eig = a.symmetric_eigen();
    let mut order: Vec<usize> = (0..m.rows()).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .abs()
            .partial_cmp(&eig.eigenvalues[i].abs())
            .unwrap()
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DenseMatrix::from_fn(m.rows(), m.cols(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}
