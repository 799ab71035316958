//! Initial similarity matrices: imported from disk or produced by a small
//! structure-only propagation encoder.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::read_matrix;
use crate::kg::DatasetBundle;
use crate::linalg::{dot, DenseMatrix, SparseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Imported,
    Builtin,
    Propagated,
}

/// Dense source-by-target similarity.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    values: DenseMatrix,
    provenance: Provenance,
}

impl SimilarityMatrix {
    pub fn new(values: DenseMatrix, provenance: Provenance) -> Result<Self> {
        if !values.all_finite() {
            return Err(Error::Domain(
                "similarity matrix holds a non-finite entry".into(),
            ));
        }
        Ok(SimilarityMatrix { values, provenance })
    }

    pub fn values(&self) -> &DenseMatrix {
        &self.values
    }

    pub fn into_values(self) -> DenseMatrix {
        self.values
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.shape()
    }
}

/// Loads an externally computed `n x m` similarity matrix (`.tsv` or `.f32`).
pub fn import_similarity(path: &Path, bundle: &DatasetBundle) -> Result<SimilarityMatrix> {
    let m = read_matrix(path)?;
    let expected = bundle.shape();
    if m.shape() != expected {
        return Err(Error::Integrity {
            path: path.to_path_buf(),
            line: m.rows().min(expected.0) + 1,
            message: format!(
                "matrix is {}x{}, dataset needs {}x{}",
                m.rows(),
                m.cols(),
                expected.0,
                expected.1
            ),
        });
    }
    if let Some(pos) = m.as_slice().iter().position(|v| !v.is_finite()) {
        return Err(Error::Domain(format!(
            "{}: non-finite similarity at ({}, {})",
            path.display(),
            pos / m.cols(),
            pos % m.cols()
        )));
    }
    SimilarityMatrix::new(m, Provenance::Imported)
}

/// Untrained anchor-feature encoder.
///
/// Every seed pair owns one shared feature dimension. Both graphs start from
/// one-hot seed indicators and run `hops` rounds of damped mean pooling
/// `F <- (F + D^-1 A F) / 2`; the similarity of two entities is the cosine of
/// their feature rows (zero when either row vanishes).
pub fn builtin_encoder(bundle: &DatasetBundle, hops: usize) -> Result<SimilarityMatrix> {
    let seeds = bundle.seeds.train_pairs();
    if seeds.is_empty() {
        return Err(Error::param(
            "the built-in encoder needs at least one seed pair",
        ));
    }
    let (n, m) = bundle.shape();
    let dims = seeds.len();
    let mut fs = DenseMatrix::zeros(n, dims);
    let mut ft = DenseMatrix::zeros(m, dims);
    for (k, &(s, t)) in seeds.iter().enumerate() {
        fs.set(s, k, 1.0);
        ft.set(t, k, 1.0);
    }
    for _ in 0..hops {
        fs = mean_pool_step(bundle.source.adjacency(), &fs);
        ft = mean_pool_step(bundle.target.adjacency(), &ft);
    }
    SimilarityMatrix::new(cosine_similarity(&fs, &ft)?, Provenance::Builtin)
}

/// One damped mean-pooling round. Neighbour values are summed in sorted
/// order so the result does not depend on how entities are numbered.
fn mean_pool_step(adj: &SparseMatrix, f: &DenseMatrix) -> DenseMatrix {
    let mut next = f.clone();
    next.par_rows_mut().enumerate().for_each(|(i, row)| {
        let neighbours = adj.row(i).0;
        if neighbours.is_empty() {
            row.iter_mut().for_each(|v| *v *= 0.5);
            return;
        }
        let mut vals = Vec::with_capacity(neighbours.len());
        for (k, out) in row.iter_mut().enumerate() {
            vals.clear();
            vals.extend(neighbours.iter().map(|&j| f.get(j, k)));
            vals.sort_by(f64::total_cmp);
            let mean = vals.iter().sum::<f64>() / neighbours.len() as f64;
            *out = 0.5 * (*out + mean);
        }
    });
    next
}

/// Row-wise cosine similarity between two feature matrices.
pub fn cosine_similarity(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.cols() != b.cols() {
        return Err(Error::shape(format!(
            "cosine between widths {} and {}",
            a.cols(),
            b.cols()
        )));
    }
    let unit = |x: &DenseMatrix| {
        let mut u = x.clone();
        u.par_rows_mut().for_each(|row| {
            let norm = dot(row, row).sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|v| *v /= norm);
            }
        });
        u
    };
    unit(a).matmul_transpose(&unit(b))
}
