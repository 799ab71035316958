use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::kg::SeedAlignments;
use crate::linalg::DenseMatrix;

/// Hits@k and mean reciprocal rank over the held-out pairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    /// k -> fraction of test pairs ranked within the top k
    pub hits: BTreeMap<usize, f64>,
    pub mrr: f64,
    pub num_test: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<PipelineConfig>,
}

impl EvalReport {
    pub fn hits_at(&self, k: usize) -> Option<f64> {
        self.hits.get(&k).copied()
    }
}

/// 1-based rank of column `target` in `row`: one plus the number of strictly
/// larger entries plus the number of equal entries at smaller columns.
pub fn rank_of(row: &[f64], target: usize) -> usize {
    let x = row[target];
    let above = row.iter().filter(|&&v| v > x).count();
    let tied_before = row[..target].iter().filter(|&&v| v == x).count();
    1 + above + tied_before
}

pub fn evaluate(omega: &DenseMatrix, seeds: &SeedAlignments, ks: &[usize]) -> Result<EvalReport> {
    evaluate_pairs(omega, seeds.test_pairs(), ks)
}

pub fn evaluate_pairs(
    omega: &DenseMatrix,
    pairs: &[(usize, usize)],
    ks: &[usize],
) -> Result<EvalReport> {
    if pairs.is_empty() {
        return Err(Error::param("evaluation needs at least one test pair"));
    }
    if ks.is_empty() || ks.windows(2).any(|w| w[0] >= w[1]) || ks[0] == 0 {
        return Err(Error::param(format!(
            "hit cutoffs must be positive and ascending, got {ks:?}"
        )));
    }
    let (n, m) = omega.shape();
    if let Some(&(s, t)) = pairs.iter().find(|(s, t)| *s >= n || *t >= m) {
        return Err(Error::param(format!(
            "test pair ({s}, {t}) outside a {n}x{m} matrix"
        )));
    }
    let ranks: Vec<usize> = pairs
        .par_iter()
        .map(|&(s, t)| rank_of(omega.row(s), t))
        .collect();
    let total = ranks.len() as f64;
    let hits = ks
        .iter()
        .map(|&k| (k, ranks.iter().filter(|&&r| r <= k).count() as f64 / total))
        .collect();
    let mrr = ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / total;
    Ok(EvalReport {
        hits,
        mrr,
        num_test: ranks.len(),
        config: None,
    })
}

/// Fraction of pairs whose source row has its argmax at the true target.
pub fn hits_at_1(omega: &DenseMatrix, pairs: &[(usize, usize)]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    let hit = pairs
        .iter()
        .filter(|&&(s, t)| rank_of(omega.row(s), t) == 1)
        .count();
    hit as f64 / pairs.len() as f64
}

/// Fraction of `truth` pairs that appear in `predicted`.
pub fn pair_accuracy(predicted: &[(usize, usize)], truth: &[(usize, usize)]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let set: std::collections::HashSet<_> = predicted.iter().collect();
    truth.iter().filter(|p| set.contains(p)).count() as f64 / truth.len() as f64
}
