use std::collections::BTreeMap;

use rayon::prelude::*;

use super::dense::DenseMatrix;
use super::sparse::SparseMatrix;
use crate::error::{Error, Result};

/// Element-wise product of two equally shaped matrices.
pub fn hadamard(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.shape() != b.shape() {
        return Err(Error::shape(format!(
            "hadamard of {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let data = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| x * y)
        .collect();
    DenseMatrix::from_vec(a.rows(), a.cols(), data)
}

/// Keeps the `k` largest entries of every row and rescales them to unit
/// Euclidean norm. Rows listed in `pinned` become the one-hot indicator of
/// their pinned column instead.
///
/// Ties are broken toward the smaller column index. A row whose kept entries
/// are all zero stays empty.
pub fn row_topk_l2_normalize(
    m: &DenseMatrix,
    k: usize,
    pinned: &BTreeMap<usize, usize>,
) -> Result<SparseMatrix> {
    if k == 0 {
        return Err(Error::param("top-k needs k >= 1"));
    }
    for (&r, &c) in pinned {
        if r >= m.rows() || c >= m.cols() {
            return Err(Error::param(format!(
                "pinned entry ({r}, {c}) outside a {}x{} matrix",
                m.rows(),
                m.cols()
            )));
        }
    }
    let per_row: Vec<Vec<(usize, f64)>> = (0..m.rows())
        .into_par_iter()
        .map(|i| {
            if let Some(&c) = pinned.get(&i) {
                return vec![(c, 1.0)];
            }
            let kept = top_k_indices(m.row(i), k);
            let norm = kept
                .iter()
                .map(|&j| m.get(i, j).powi(2))
                .sum::<f64>()
                .sqrt();
            if norm == 0.0 {
                return Vec::new();
            }
            kept.into_iter().map(|j| (j, m.get(i, j) / norm)).collect()
        })
        .collect();
    Ok(SparseMatrix::from_row_lists(m.rows(), m.cols(), per_row))
}

/// Indices of the `k` largest values, larger first, ties toward smaller index.
pub(crate) fn top_k_indices(row: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..row.len()).collect();
    let cmp = |a: &usize, b: &usize| row[*b].total_cmp(&row[*a]).then(a.cmp(b));
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, cmp);
        idx.truncate(k);
    }
    idx.sort_unstable_by(cmp);
    idx
}

/// Drops every entry `<= delta` and maps the survivors to `ln(s / delta)`.
pub fn threshold_sparsify_log(s: &DenseMatrix, delta: f64) -> Result<SparseMatrix> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::param(format!(
            "threshold must be positive, got {delta}"
        )));
    }
    let per_row: Result<Vec<Vec<(usize, f64)>>> = (0..s.rows())
        .into_par_iter()
        .map(|i| {
            let mut out = Vec::new();
            for (j, &v) in s.row(i).iter().enumerate() {
                if v < 0.0 || v.is_nan() {
                    return Err(Error::Domain(format!(
                        "propagation entry ({i}, {j}) = {v} is negative"
                    )));
                }
                if v > delta {
                    out.push((j, (v / delta).ln()));
                }
            }
            Ok(out)
        })
        .collect();
    Ok(SparseMatrix::from_row_lists(s.rows(), s.cols(), per_row?))
}

/// Same as [`threshold_sparsify_log`] for an already sparse input.
pub fn threshold_sparsify_log_sparse(s: &SparseMatrix, delta: f64) -> Result<SparseMatrix> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::param(format!(
            "threshold must be positive, got {delta}"
        )));
    }
    if let Some(v) = s.values().iter().find(|v| **v < 0.0 || v.is_nan()) {
        return Err(Error::Domain(format!("propagation entry {v} is negative")));
    }
    Ok(s.map_values(|v| if v > delta { (v / delta).ln() } else { 0.0 }))
}

/// Divides each row by its sum, then each column of the result by its sum.
/// All-zero rows and columns pass through unchanged.
pub fn row_col_normalize(m: &DenseMatrix) -> Result<DenseMatrix> {
    if let Some(v) = m.as_slice().iter().find(|v| **v < 0.0 || v.is_nan()) {
        return Err(Error::Domain(format!(
            "row/column normalization needs non-negative entries, found {v}"
        )));
    }
    let mut out = m.clone();
    out.par_rows_mut().for_each(|row| {
        let sum: f64 = row.iter().sum();
        if sum > 0.0 {
            row.iter_mut().for_each(|v| *v /= sum);
        }
    });
    let mut col_sums = vec![0.0; out.cols()];
    for row in out.row_iter() {
        for (s, v) in col_sums.iter_mut().zip(row) {
            *s += v;
        }
    }
    let inv: Vec<f64> = col_sums
        .iter()
        .map(|&s| if s > 0.0 { 1.0 / s } else { 1.0 })
        .collect();
    out.par_rows_mut().for_each(|row| {
        for (v, c) in row.iter_mut().zip(&inv) {
            *v *= c;
        }
    });
    Ok(out)
}
