//! Randomized truncated SVD and subspace iteration.
//!
//! The range finder follows the usual Gaussian-sketch-plus-power-iteration
//! scheme: sketch the column space with `d + oversample` random probes,
//! sharpen it with a few rounds of re-orthonormalized subspace iteration, then
//! take the exact SVD of the small projected matrix.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::dense::DenseMatrix;
use super::sparse::{spmm, SparseMatrix};
use crate::error::{Error, Result};

pub const DEFAULT_OVERSAMPLE: usize = 20;
pub const DEFAULT_POWER_ITERS: usize = 4;

/// Truncated factorization `U diag(sigma) V^T`.
#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    /// rows x d, orthonormal columns
    pub u: DenseMatrix,
    /// non-negative, non-increasing
    pub sigma: Vec<f64>,
    /// cols x d, orthonormal columns
    pub v: DenseMatrix,
}

impl TruncatedSvd {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        let mut us = self.u.clone();
        for i in 0..us.rows() {
            for (x, s) in us.row_mut(i).iter_mut().zip(&self.sigma) {
                *x *= s;
            }
        }
        us.matmul_transpose(&self.v).expect("factor shapes agree")
    }
}

pub fn randomized_svd(
    s: &SparseMatrix,
    d: usize,
    oversample: usize,
    power_iters: usize,
    rng_seed: u64,
) -> Result<TruncatedSvd> {
    let (rows, cols) = s.shape();
    let max_rank = rows.min(cols);
    if d == 0 || d > max_rank {
        return Err(Error::param(format!(
            "rank {d} must lie in 1..={max_rank} for a {rows}x{cols} matrix"
        )));
    }
    let samples = (d + oversample).min(max_rank);
    let st = s.transpose();

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let probes = DenseMatrix::from_fn(cols, samples, |_, _| StandardNormal.sample(&mut rng));

    let mut q = orthonormalize(&spmm(s, &probes)?);
    for _ in 0..power_iters {
        let z = orthonormalize(&spmm(&st, &q)?);
        q = orthonormalize(&spmm(s, &z)?);
    }

    // B^T = S^T Q is cols x samples; the SVD of B^T swaps the roles of U and V
    let bt = spmm(&st, &q)?.to_nalgebra();
    let svd = bt.svd(true, true);
    let (Some(w), Some(zt)) = (svd.u, svd.v_t) else {
        return Err(Error::Degenerate(
            "small SVD did not produce factors".into(),
        ));
    };
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    order.truncate(d);

    let sigma: Vec<f64> = order
        .iter()
        .map(|&k| svd.singular_values[k].max(0.0))
        .collect();
    // B = Z Sigma W^T, so left factor of S is Q Z and right factor is W
    let z = DenseMatrix::from_fn(samples, d, |i, c| zt[(order[c], i)]);
    let v = DenseMatrix::from_fn(cols, d, |i, c| w[(i, order[c])]);
    let u = q.matmul(&z)?;
    Ok(TruncatedSvd { u, sigma, v })
}

/// Thin QR orthonormal factor of `m`.
pub fn orthonormalize(m: &DenseMatrix) -> DenseMatrix {
    let qr = m.to_nalgebra().qr();
    DenseMatrix::from_nalgebra(&qr.q())
}

/// Runs `iters` rounds of orthonormalized subspace iteration `Q <- orth(M Q)`
/// from a seeded Gaussian start, calling `observe(iteration, &Q)` after each
/// round. Returns the final basis.
pub fn subspace_iteration(
    m: &DenseMatrix,
    d: usize,
    iters: usize,
    rng_seed: u64,
    mut observe: impl FnMut(usize, &DenseMatrix) -> bool,
) -> Result<DenseMatrix> {
    if m.rows() != m.cols() {
        return Err(Error::shape(format!(
            "subspace iteration needs a square matrix, got {:?}",
            m.shape()
        )));
    }
    if d == 0 || d > m.rows() {
        return Err(Error::param(format!("subspace dimension {d} out of range")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let start = DenseMatrix::from_fn(m.rows(), d, |_, _| StandardNormal.sample(&mut rng));
    let mut q = orthonormalize(&start);
    for it in 1..=iters {
        q = orthonormalize(&m.matmul(&q)?);
        if !observe(it, &q) {
            break;
        }
    }
    Ok(q)
}

/// Number of singular values above `tol * sigma_max`.
pub fn numerical_rank(m: &DenseMatrix, tol: f64) -> usize {
    if m.rows() == 0 || m.cols() == 0 {
        return 0;
    }
    let sv = m.to_nalgebra().singular_values();
    let top = sv.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&x| x > tol * top).count()
}

/// Sine of the largest principal angle between the column spans of two
/// matrices with orthonormal columns.
pub fn max_principal_sine(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    let a = a.to_nalgebra();
    let b = b.to_nalgebra();
    // residual of b after projecting onto span(a)
    let resid: DMatrix<f64> = &b - &a * (a.transpose() * &b);
    resid
        .singular_values()
        .iter()
        .copied()
        .fold(0.0, f64::max)
        .min(1.0)
}
