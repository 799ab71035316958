use rayon::prelude::*;

use super::dense::DenseMatrix;
use crate::error::{Error, Result};

/// Compressed sparse row matrix.
///
/// Column indices are strictly increasing within each row and explicit zeros
/// are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        SparseMatrix {
            rows,
            cols,
            indptr: vec![0; rows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            rows: n,
            cols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Builds from `(row, col, value)` triplets. Duplicates are summed and
    /// entries that end up exactly zero are dropped.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); rows];
        for (i, j, v) in triplets {
            if i >= rows || j >= cols {
                return Err(Error::shape(format!(
                    "entry ({i}, {j}) outside a {rows}x{cols} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(Error::Domain(format!("non-finite entry at ({i}, {j})")));
            }
            per_row[i].push((j, v));
        }
        Ok(Self::from_row_lists(rows, cols, per_row))
    }

    /// Builds from per-row entry lists, sorting and merging each row.
    pub(crate) fn from_row_lists(
        rows: usize,
        cols: usize,
        per_row: Vec<Vec<(usize, f64)>>,
    ) -> Self {
        debug_assert_eq!(per_row.len(), rows);
        let mut indptr = Vec::with_capacity(rows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for mut row in per_row {
            row.sort_unstable_by_key(|&(j, _)| j);
            let mut iter = row.into_iter().peekable();
            while let Some((j, mut v)) = iter.next() {
                while let Some(&(j2, v2)) = iter.peek() {
                    if j2 != j {
                        break;
                    }
                    v += v2;
                    iter.next();
                }
                if v != 0.0 {
                    indices.push(j);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        SparseMatrix {
            rows,
            cols,
            indptr,
            indices,
            values,
        }
    }

    pub fn from_dense(m: &DenseMatrix) -> Self {
        let per_row = m
            .row_iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(j, v)| (j, *v))
                    .collect()
            })
            .collect();
        Self::from_row_lists(m.rows(), m.cols(), per_row)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    pub fn row_entries(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (idx, val) = self.row(i);
        idx.iter().copied().zip(val.iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (idx, val) = self.row(i);
        match idx.binary_search(&j) {
            Ok(p) => val[p],
            Err(_) => 0.0,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.row(i).1.iter().sum()
    }

    pub fn row_norm(&self, i: usize) -> f64 {
        self.row(i).1.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for (j, v) in self.row_entries(i) {
                out.set(i, j, v);
            }
        }
        out
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.cols + 1];
        for &j in &self.indices {
            counts[j + 1] += 1;
        }
        for j in 0..self.cols {
            counts[j + 1] += counts[j];
        }
        let indptr = counts.clone();
        let mut next = counts;
        let mut indices = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        // rows are visited in order, so each transposed row stays sorted
        for i in 0..self.rows {
            for (j, v) in self.row_entries(i) {
                let p = next[j];
                indices[p] = i;
                values[p] = v;
                next[j] += 1;
            }
        }
        SparseMatrix {
            rows: self.cols,
            cols: self.rows,
            indptr,
            indices,
            values,
        }
    }

    pub fn scaled(&self, c: f64) -> SparseMatrix {
        if c == 0.0 {
            return SparseMatrix::zeros(self.rows, self.cols);
        }
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out
    }

    /// Applies `f` to every stored value, dropping results that are zero.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> SparseMatrix {
        let per_row = (0..self.rows)
            .map(|i| self.row_entries(i).map(|(j, v)| (j, f(v))).collect())
            .collect();
        Self::from_row_lists(self.rows, self.cols, per_row)
    }

    /// Assembles a block matrix `[[a, b], [c, d]]`.
    pub fn block2x2(
        a: &SparseMatrix,
        b: &SparseMatrix,
        c: &SparseMatrix,
        d: &SparseMatrix,
    ) -> Result<SparseMatrix> {
        if a.rows != b.rows || c.rows != d.rows || a.cols != c.cols || b.cols != d.cols {
            return Err(Error::shape(format!(
                "incompatible blocks {:?} {:?} / {:?} {:?}",
                a.shape(),
                b.shape(),
                c.shape(),
                d.shape()
            )));
        }
        let rows = a.rows + c.rows;
        let cols = a.cols + b.cols;
        let mut indptr = Vec::with_capacity(rows + 1);
        let mut indices = Vec::with_capacity(a.nnz() + b.nnz() + c.nnz() + d.nnz());
        let mut values = Vec::with_capacity(indices.capacity());
        indptr.push(0);
        for (left, right) in [(a, b), (c, d)] {
            for i in 0..left.rows {
                for (j, v) in left.row_entries(i) {
                    indices.push(j);
                    values.push(v);
                }
                for (j, v) in right.row_entries(i) {
                    indices.push(left.cols + j);
                    values.push(v);
                }
                indptr.push(indices.len());
            }
        }
        Ok(SparseMatrix {
            rows,
            cols,
            indptr,
            indices,
            values,
        })
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols && *self == self.transpose()
    }
}

/// Sparse-times-dense product `a * b`.
pub fn spmm(a: &SparseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.cols() != b.rows() {
        return Err(Error::shape(format!(
            "spmm {}x{} by {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let mut out = DenseMatrix::zeros(a.rows(), b.cols());
    if b.cols() == 0 {
        return Ok(out);
    }
    out.par_rows_mut().enumerate().for_each(|(i, out_row)| {
        for (k, v) in a.row_entries(i) {
            for (o, &x) in out_row.iter_mut().zip(b.row(k)) {
                *o += v * x;
            }
        }
    });
    Ok(out)
}

/// Dense-times-sparse product `a * b`.
pub fn dense_spmm(a: &DenseMatrix, b: &SparseMatrix) -> Result<DenseMatrix> {
    if a.cols() != b.rows() {
        return Err(Error::shape(format!(
            "dense by sparse {}x{} by {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let mut out = DenseMatrix::zeros(a.rows(), b.cols());
    if b.cols() == 0 {
        return Ok(out);
    }
    out.par_rows_mut().enumerate().for_each(|(i, out_row)| {
        for (k, &x) in a.row(i).iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for (j, v) in b.row_entries(k) {
                out_row[j] += x * v;
            }
        }
    });
    Ok(out)
}

/// `a^T * b` for sparse `a` without materializing the transpose.
pub fn spmm_transpose(a: &SparseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    spmm(&a.transpose(), b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_merge_and_drop_zeros() {
        let m = SparseMatrix::from_triplets(
            2,
            3,
            vec![
                (0, 2, 1.0),
                (0, 0, 2.0),
                (0, 2, -1.0),
                (1, 1, 3.0),
                (1, 1, 1.0),
            ],
        )
        .unwrap();
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.row(0), (&[0usize][..], &[2.0][..]));
        assert_eq!(m.get(1, 1), 4.0);
        assert_eq!(m.get(0, 2), 0.0);
    }

    #[test]
    fn out_of_range_triplet() {
        assert!(SparseMatrix::from_triplets(2, 2, vec![(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn swap_permutation_product() {
        let p = SparseMatrix::from_triplets(2, 2, vec![(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let b = DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]);
        let c = spmm(&p, &b).unwrap();
        assert_eq!(c, DenseMatrix::from_rows(&[[3.0, 4.0], [1.0, 2.0]]));
    }

    #[test]
    fn identity_product_is_noop() {
        let b = DenseMatrix::from_fn(4, 3, |i, j| (i * 3 + j) as f64 - 2.5);
        assert_eq!(spmm(&SparseMatrix::identity(4), &b).unwrap(), b);
        assert_eq!(dense_spmm(&b, &SparseMatrix::identity(3)).unwrap(), b);
    }

    #[test]
    fn empty_rows_product() {
        let a = SparseMatrix::zeros(0, 3);
        let b = DenseMatrix::zeros(3, 2);
        let c = spmm(&a, &b).unwrap();
        assert_eq!(c.shape(), (0, 2));
    }

    #[test]
    fn dimension_mismatch() {
        let a = SparseMatrix::zeros(2, 3);
        assert!(spmm(&a, &DenseMatrix::zeros(2, 2)).is_err());
        assert!(dense_spmm(&DenseMatrix::zeros(2, 2), &a.transpose()).is_err());
    }

    #[test]
    fn transpose_roundtrip() {
        let m = SparseMatrix::from_triplets(3, 2, vec![(0, 1, 1.5), (2, 0, -2.0), (1, 1, 4.0)])
            .unwrap();
        let t = m.transpose();
        assert_eq!(t.shape(), (2, 3));
        assert_eq!(t.get(1, 0), 1.5);
        assert_eq!(t.get(0, 2), -2.0);
        assert_eq!(t.transpose(), m);
    }

    #[test]
    fn block_assembly() {
        let a = SparseMatrix::identity(2);
        let b = SparseMatrix::from_triplets(2, 1, vec![(1, 0, 5.0)]).unwrap();
        let c = SparseMatrix::zeros(1, 2);
        let d = SparseMatrix::identity(1);
        let m = SparseMatrix::block2x2(&a, &b, &c, &d).unwrap();
        assert_eq!(
            m.to_dense(),
            DenseMatrix::from_rows(&[[1.0, 0.0, 0.0], [0.0, 1.0, 5.0], [0.0, 0.0, 1.0]])
        );
    }
}
