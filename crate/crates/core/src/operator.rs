//! Cross-graph propagation operator, random-walk propagation and the
//! factorization of propagated proximity into entity embeddings.
//!
//! The operator is the `(n + m) x (n + m)` block matrix
//!
//! ```text
//! | beta * Ds^-1 As              (1 - beta) * N(Omega0)   |
//! | (1 - beta) * N(Omega0^T)     beta * Dt^-1 At          |
//! ```
//!
//! where `N` keeps the top `k` entries of every row and rescales them to unit
//! Euclidean norm, except that seed rows are replaced by the one-hot indicator
//! of their counterpart.

use std::collections::{BTreeMap, VecDeque};

use rayon::prelude::*;

use crate::encoder::{Provenance, SimilarityMatrix};
use crate::error::{Error, Result};
use crate::kg::{normalized_adjacency, DatasetBundle};
use crate::linalg::{
    randomized_svd, row_topk_l2_normalize, spmm, threshold_sparsify_log,
    threshold_sparsify_log_sparse, DenseMatrix, SparseMatrix, DEFAULT_OVERSAMPLE,
    DEFAULT_POWER_ITERS,
};

#[derive(Debug, Clone, PartialEq)]
pub struct PipOperator {
    matrix: SparseMatrix,
    n: usize,
    m: usize,
    beta: f64,
}

impl PipOperator {
    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    /// Source and target block sizes.
    pub fn blocks(&self) -> (usize, usize) {
        (self.n, self.m)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn dim(&self) -> usize {
        self.n + self.m
    }

    /// Dense `(L + L^T) / 2`.
    pub fn symmetrized(&self) -> DenseMatrix {
        let d = self.matrix.to_dense();
        let t = d.transpose();
        DenseMatrix::from_fn(d.rows(), d.cols(), |i, j| 0.5 * (d.get(i, j) + t.get(i, j)))
    }

    /// Wraps an arbitrary square matrix, mainly for tests and experiments.
    pub fn from_matrix(matrix: SparseMatrix, n: usize, beta: f64) -> Result<Self> {
        if matrix.rows() != matrix.cols() || n > matrix.rows() {
            return Err(Error::shape(format!(
                "operator must be square with n <= size, got {:?} and n = {n}",
                matrix.shape()
            )));
        }
        let m = matrix.rows() - n;
        Ok(PipOperator { matrix, n, m, beta })
    }
}

pub fn build_operator(
    bundle: &DatasetBundle,
    omega0: &SimilarityMatrix,
    beta: f64,
    k: usize,
) -> Result<PipOperator> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::param(format!("beta must lie in [0, 1], got {beta}")));
    }
    let (n, m) = bundle.shape();
    if omega0.shape() != (n, m) {
        return Err(Error::shape(format!(
            "similarity is {:?} but graphs are {n} x {m}",
            omega0.shape()
        )));
    }
    let pins_st: BTreeMap<usize, usize> = bundle.seeds.train_pairs().iter().copied().collect();
    let pins_ts: BTreeMap<usize, usize> = bundle
        .seeds
        .train_pairs()
        .iter()
        .map(|&(s, t)| (t, s))
        .collect();

    let intra_s = normalized_adjacency(&bundle.source).scaled(beta);
    let intra_t = normalized_adjacency(&bundle.target).scaled(beta);
    let inter_st = row_topk_l2_normalize(omega0.values(), k, &pins_st)?.scaled(1.0 - beta);
    let inter_ts =
        row_topk_l2_normalize(&omega0.values().transpose(), k, &pins_ts)?.scaled(1.0 - beta);

    let matrix = SparseMatrix::block2x2(&intra_s, &inter_st, &inter_ts, &intra_t)?;
    Ok(PipOperator { matrix, n, m, beta })
}

/// Propagated proximity, dense or sparse depending on how it was computed.
#[derive(Debug, Clone, PartialEq)]
pub enum Proximity {
    Dense(DenseMatrix),
    Sparse(SparseMatrix),
}

impl Proximity {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            Proximity::Dense(d) => d.get(i, j),
            Proximity::Sparse(s) => s.get(i, j),
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            Proximity::Dense(d) => d.clone(),
            Proximity::Sparse(s) => s.to_dense(),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            Proximity::Dense(d) => d.shape(),
            Proximity::Sparse(s) => s.shape(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PropagationResult {
    pub s: Proximity,
    /// Series terms summed, or push operations performed.
    pub iterations_used: usize,
    /// `(1 - alpha)^iterations` for the series; for push, the largest
    /// residual mass left behind by any source.
    pub tail_bound: f64,
    n: usize,
    m: usize,
}

impl PropagationResult {
    pub fn blocks(&self) -> (usize, usize) {
        (self.n, self.m)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::param(format!(
            "alpha must lie in (0, 1], got {alpha}"
        )));
    }
    Ok(())
}

/// Truncated random-walk series `sum_{l < l1} alpha (1 - alpha)^l L^l`,
/// evaluated with the residual recurrence `S += alpha R; R = (1 - alpha) L R`.
pub fn propagate_series(op: &PipOperator, alpha: f64, l1: usize) -> Result<PropagationResult> {
    check_alpha(alpha)?;
    if l1 == 0 {
        return Err(Error::param(
            "the propagation series needs at least one term",
        ));
    }
    let dim = op.dim();
    let mut s = DenseMatrix::zeros(dim, dim);
    let mut r = DenseMatrix::identity(dim);
    for it in 0..l1 {
        s.axpy(alpha, &r)?;
        if it + 1 < l1 {
            r = spmm(op.matrix(), &r)?;
            r.scale(1.0 - alpha);
        }
    }
    Ok(PropagationResult {
        s: Proximity::Dense(s),
        iterations_used: l1,
        tail_bound: (1.0 - alpha).powi(l1 as i32),
        n: op.n,
        m: op.m,
    })
}

const MAX_PUSHES_PER_SOURCE: usize = 50_000_000;

struct PushScratch {
    reserve: Vec<f64>,
    residual: Vec<f64>,
    queued: Vec<bool>,
    touched: Vec<usize>,
    queue: VecDeque<usize>,
}

impl PushScratch {
    fn new(dim: usize) -> Self {
        PushScratch {
            reserve: vec![0.0; dim],
            residual: vec![0.0; dim],
            queued: vec![false; dim],
            touched: Vec::new(),
            queue: VecDeque::new(),
        }
    }

    fn touch(&mut self, v: usize) {
        if self.reserve[v] == 0.0 && self.residual[v] == 0.0 {
            self.touched.push(v);
        }
    }
}

/// Forward-push approximation of the same series, one source row at a time.
///
/// Each source starts with unit residual. Any node whose residual exceeds
/// `residual_eps` in magnitude moves `alpha` of it into its reserve and
/// spreads the remaining `1 - alpha` along its operator row. Leftover
/// residual is credited at the `alpha` rate when the queue drains, which is
/// the first term of the remaining series.
/// One source's proximity row, its push count and its leftover residual.
type PushedRow = (Vec<(usize, f64)>, usize, f64);

pub fn propagate_push(
    op: &PipOperator,
    alpha: f64,
    residual_eps: f64,
) -> Result<PropagationResult> {
    check_alpha(alpha)?;
    if !(residual_eps > 0.0 && residual_eps.is_finite()) {
        return Err(Error::param(format!(
            "residual threshold must be positive, got {residual_eps}"
        )));
    }
    let dim = op.dim();
    let lam = op.matrix();
    let rows: Result<Vec<PushedRow>> = (0..dim)
        .into_par_iter()
        .map_init(
            || PushScratch::new(dim),
            |sc, source| {
                sc.touch(source);
                sc.residual[source] = 1.0;
                if residual_eps < 1.0 {
                    sc.queue.push_back(source);
                    sc.queued[source] = true;
                }
                let mut pushes = 0usize;
                while let Some(u) = sc.queue.pop_front() {
                    sc.queued[u] = false;
                    let r = sc.residual[u];
                    if r.abs() <= residual_eps {
                        continue;
                    }
                    pushes += 1;
                    if pushes > MAX_PUSHES_PER_SOURCE {
                        return Err(Error::Degenerate(format!(
                            "forward push from source {source} did not settle; \
                             the operator may be too expansive for alpha = {alpha}"
                        )));
                    }
                    sc.residual[u] = 0.0;
                    sc.reserve[u] += alpha * r;
                    let share = (1.0 - alpha) * r;
                    for (v, w) in lam.row_entries(u) {
                        sc.touch(v);
                        sc.residual[v] += share * w;
                        if !sc.queued[v] && sc.residual[v].abs() > residual_eps {
                            sc.queued[v] = true;
                            sc.queue.push_back(v);
                        }
                    }
                }
                let mut row = Vec::with_capacity(sc.touched.len());
                let mut leftover = 0.0;
                for &v in &sc.touched {
                    leftover += sc.residual[v].abs();
                    let val = sc.reserve[v] + alpha * sc.residual[v];
                    if val != 0.0 {
                        row.push((v, val));
                    }
                    sc.reserve[v] = 0.0;
                    sc.residual[v] = 0.0;
                }
                sc.touched.clear();
                Ok((row, pushes, leftover))
            },
        )
        .collect();
    let rows = rows?;
    let pushes = rows.iter().map(|r| r.1).sum();
    let leftover = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    let s = SparseMatrix::from_row_lists(dim, dim, rows.into_iter().map(|r| r.0).collect());
    Ok(PropagationResult {
        s: Proximity::Sparse(s),
        iterations_used: pushes,
        tail_bound: leftover,
        n: op.n,
        m: op.m,
    })
}

/// Source and target embeddings from the factorized proximity.
#[derive(Debug, Clone)]
pub struct Embeddings {
    pub x_s: DenseMatrix,
    pub x_t: DenseMatrix,
    pub sigma: Vec<f64>,
    /// `log(S / delta)` restricted to entries above `delta`.
    pub sparsified: SparseMatrix,
}

/// Thresholds and log-transforms the proximity, takes a rank-`d` randomized
/// SVD and returns `X = U sqrt(Sigma)` split into source and target rows.
pub fn factorize_embed(
    prop: &PropagationResult,
    delta: f64,
    d: usize,
    rng_seed: u64,
) -> Result<Embeddings> {
    let (n, m) = prop.blocks();
    if d == 0 || d > n + m {
        return Err(Error::param(format!(
            "embedding rank {d} must lie in 1..={}",
            n + m
        )));
    }
    let sparsified = match &prop.s {
        Proximity::Dense(s) => threshold_sparsify_log(s, delta)?,
        Proximity::Sparse(s) => threshold_sparsify_log_sparse(s, delta)?,
    };
    if sparsified.nnz() == 0 {
        return Err(Error::Degenerate(format!(
            "no proximity entry exceeds delta = {delta}; lower delta"
        )));
    }
    log::debug!(
        "sparsified proximity keeps {} of {} entries",
        sparsified.nnz(),
        (n + m) * (n + m)
    );
    let svd = randomized_svd(
        &sparsified,
        d,
        DEFAULT_OVERSAMPLE,
        DEFAULT_POWER_ITERS,
        rng_seed,
    )?;
    let roots: Vec<f64> = svd.sigma.iter().map(|s| s.sqrt()).collect();
    let mut x = svd.u;
    for i in 0..x.rows() {
        for (v, r) in x.row_mut(i).iter_mut().zip(&roots) {
            *v *= r;
        }
    }
    let x_s = x.sub_matrix(0..n, 0..d);
    let x_t = x.sub_matrix(n..n + m, 0..d);
    Ok(Embeddings {
        x_s,
        x_t,
        sigma: svd.sigma,
        sparsified,
    })
}

/// `X_s X_t^T`.
pub fn global_similarity(x_s: &DenseMatrix, x_t: &DenseMatrix) -> Result<SimilarityMatrix> {
    SimilarityMatrix::new(x_s.matmul_transpose(x_t)?, Provenance::Propagated)
}
