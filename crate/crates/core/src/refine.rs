//! Fusion of local and global similarity and seeded matched-neighborhood
//! consistency refinement.

use crate::encoder::SimilarityMatrix;
use crate::error::{Error, Result};
use crate::kg::SeedAlignments;
use crate::linalg::{dense_spmm, hadamard, row_col_normalize, spmm, DenseMatrix, SparseMatrix};

pub const DEFAULT_EPSILON: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementState {
    pub omega: DenseMatrix,
    pub iteration: usize,
    /// Token match score added to every entry per iteration.
    pub epsilon: f64,
}

impl RefinementState {
    pub fn new(omega: DenseMatrix, epsilon: f64) -> Self {
        RefinementState {
            omega,
            iteration: 0,
            epsilon,
        }
    }
}

/// Hadamard product of the two similarities, clamped at zero from below.
pub fn fuse(omega0: &SimilarityMatrix, omega_prime: &SimilarityMatrix) -> Result<DenseMatrix> {
    let mut fused = hadamard(omega0.values(), omega_prime.values())?;
    fused
        .as_mut_slice()
        .iter_mut()
        .for_each(|v| *v = v.max(0.0));
    Ok(fused)
}

/// `A_s * omega * A_t`.
pub fn mnc_approx(
    a_s: &SparseMatrix,
    omega: &DenseMatrix,
    a_t: &SparseMatrix,
) -> Result<DenseMatrix> {
    dense_spmm(&spmm(a_s, omega)?, a_t)
}

/// Hook points inside [`refine_with`].
#[derive(Debug)]
pub enum RefineEvent<'a> {
    /// Seed rows were just pinned; the update for `iteration` is next.
    Pinned {
        iteration: usize,
        omega: &'a DenseMatrix,
    },
    /// Iteration finished (update and normalization applied).
    Completed {
        iteration: usize,
        omega: &'a DenseMatrix,
    },
}

fn pin_seeds(omega: &mut DenseMatrix, seeds: &SeedAlignments) {
    for &(s, t) in seeds.train_pairs() {
        let row = omega.row_mut(s);
        row.iter_mut().for_each(|v| *v = 0.0);
        row[t] = 1.0;
    }
}

pub fn refine(
    state: RefinementState,
    a_s: &SparseMatrix,
    a_t: &SparseMatrix,
    seeds: &SeedAlignments,
    l2: usize,
) -> Result<RefinementState> {
    refine_with(state, a_s, a_t, seeds, l2, |_| {})
}

/// Runs `l2` refinement iterations. Each one pins the seed rows to their
/// one-hot counterparts, applies `omega <- omega o (A_s omega A_t) + eps`,
/// then normalizes by row and then by column.
pub fn refine_with(
    mut state: RefinementState,
    a_s: &SparseMatrix,
    a_t: &SparseMatrix,
    seeds: &SeedAlignments,
    l2: usize,
    mut observe: impl FnMut(RefineEvent<'_>),
) -> Result<RefinementState> {
    let (n, m) = state.omega.shape();
    if a_s.shape() != (n, n) || a_t.shape() != (m, m) {
        return Err(Error::shape(format!(
            "refinement of a {n}x{m} matrix with adjacencies {:?} and {:?}",
            a_s.shape(),
            a_t.shape()
        )));
    }
    if let Some(&(s, t)) = seeds.train_pairs().iter().find(|(s, t)| *s >= n || *t >= m) {
        return Err(Error::param(format!(
            "seed ({s}, {t}) outside a {n}x{m} matrix"
        )));
    }
    for _ in 0..l2 {
        let iteration = state.iteration + 1;
        pin_seeds(&mut state.omega, seeds);
        observe(RefineEvent::Pinned {
            iteration,
            omega: &state.omega,
        });
        let mnc = mnc_approx(a_s, &state.omega, a_t)?;
        let mut next = hadamard(&state.omega, &mnc)?;
        next.as_mut_slice()
            .iter_mut()
            .for_each(|v| *v += state.epsilon);
        state.omega = row_col_normalize(&next)?;
        state.iteration = iteration;
        observe(RefineEvent::Completed {
            iteration,
            omega: &state.omega,
        });
    }
    Ok(state)
}
