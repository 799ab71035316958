//! One-to-one alignment decoding.

use std::collections::VecDeque;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

pub const DEFAULT_SINKHORN_ITERS: usize = 10;
/// Largest side accepted by [`hungarian_assign`].
pub const HUNGARIAN_MAX_SIDE: usize = 2_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeMethod {
    Greedy,
    SinkhornGreedy,
    Hungarian,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentResult {
    pub predicted_pairs: Vec<(usize, usize)>,
    pub method: DecodeMethod,
}

impl AlignmentResult {
    /// Sum of `omega` over the predicted pairs.
    pub fn total_score(&self, omega: &DenseMatrix) -> f64 {
        self.predicted_pairs
            .iter()
            .map(|&(i, j)| omega.get(i, j))
            .sum()
    }

    pub fn is_one_to_one(&self) -> bool {
        let mut rows = std::collections::HashSet::new();
        let mut cols = std::collections::HashSet::new();
        self.predicted_pairs
            .iter()
            .all(|&(i, j)| rows.insert(i) && cols.insert(j))
    }
}

/// Sinkhorn normalization of a square score matrix.
///
/// Starts from `exp(omega - rowmax)` and applies `q` rounds of row then column
/// normalization. The row shift cancels in the first row normalization.
pub fn sinkhorn(omega: &DenseMatrix, q: usize) -> Result<DenseMatrix> {
    if omega.rows() != omega.cols() {
        return Err(Error::shape(format!(
            "sinkhorn needs a square matrix, got {:?}; pad it first",
            omega.shape()
        )));
    }
    if q == 0 {
        return Err(Error::param("sinkhorn needs at least one iteration"));
    }
    let n = omega.rows();
    let mut s = omega.clone();
    for i in 0..n {
        let row = s.row_mut(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.iter_mut().for_each(|v| *v = (*v - max).exp());
    }
    let mut col_sums = vec![0.0; n];
    for _ in 0..q {
        for i in 0..n {
            let row = s.row_mut(i);
            let sum: f64 = row.iter().sum();
            if sum > 0.0 {
                row.iter_mut().for_each(|v| *v /= sum);
            }
        }
        col_sums.iter_mut().for_each(|c| *c = 0.0);
        for row in s.row_iter() {
            for (c, v) in col_sums.iter_mut().zip(row) {
                *c += v;
            }
        }
        for i in 0..n {
            for (v, c) in s.row_mut(i).iter_mut().zip(&col_sums) {
                if *c > 0.0 {
                    *v /= c;
                }
            }
        }
    }
    Ok(s)
}

/// Pads a rectangular matrix to square with `min(omega) - 1`.
pub fn pad_square(omega: &DenseMatrix) -> DenseMatrix {
    let (n, m) = omega.shape();
    if n == m {
        return omega.clone();
    }
    let side = n.max(m);
    let fill = if n * m == 0 {
        0.0
    } else {
        omega.min_value() - 1.0
    };
    DenseMatrix::from_fn(side, side, |i, j| {
        if i < n && j < m {
            omega.get(i, j)
        } else {
            fill
        }
    })
}

/// Sinkhorn on the padded square matrix, cropped back to `n x m`.
pub fn sinkhorn_rect(omega: &DenseMatrix, q: usize) -> Result<DenseMatrix> {
    let (n, m) = omega.shape();
    let s = sinkhorn(&pad_square(omega), q)?;
    Ok(s.sub_matrix(0..n, 0..m))
}

/// Repeatedly takes the largest remaining entry and retires its row and
/// column. Ties go to the lexicographically smaller `(row, col)`.
pub fn greedy_decode(omega: &DenseMatrix) -> AlignmentResult {
    let (n, m) = omega.shape();
    let mut order: Vec<(u32, u32)> = (0..n)
        .flat_map(|i| (0..m).map(move |j| (i as u32, j as u32)))
        .collect();
    order.sort_unstable_by(|a, b| {
        let va = omega.get(a.0 as usize, a.1 as usize);
        let vb = omega.get(b.0 as usize, b.1 as usize);
        vb.total_cmp(&va).then(a.cmp(b))
    });
    let mut row_used = vec![false; n];
    let mut col_used = vec![false; m];
    let mut pairs = Vec::with_capacity(n.min(m));
    for (i, j) in order {
        let (i, j) = (i as usize, j as usize);
        if row_used[i] || col_used[j] {
            continue;
        }
        row_used[i] = true;
        col_used[j] = true;
        pairs.push((i, j));
        if pairs.len() == n.min(m) {
            break;
        }
    }
    pairs.sort_unstable();
    AlignmentResult {
        predicted_pairs: pairs,
        method: DecodeMethod::Greedy,
    }
}

/// Exact maximum-weight one-to-one assignment.
///
/// Rectangular inputs yield `min(n, m)` pairs. Among optimal assignments the
/// lexicographically smallest (by row, then column) is returned.
pub fn hungarian_assign(omega: &DenseMatrix) -> Result<AlignmentResult> {
    let (n, m) = omega.shape();
    if n > HUNGARIAN_MAX_SIDE || m > HUNGARIAN_MAX_SIDE {
        return Err(Error::param(format!(
            "exact assignment is limited to {HUNGARIAN_MAX_SIDE} per side, got {n}x{m}; \
             decode with sinkhorn and greedy instead"
        )));
    }
    if !omega.all_finite() {
        return Err(Error::Domain("assignment scores must be finite".into()));
    }
    if n == 0 || m == 0 {
        return Ok(AlignmentResult {
            predicted_pairs: Vec::new(),
            method: DecodeMethod::Hungarian,
        });
    }
    let side = n.max(m);
    // minimize cost = max - omega; padding costs zero everywhere
    let top = omega.max_value();
    let cost = DenseMatrix::from_fn(side, side, |i, j| {
        if i < n && j < m {
            top - omega.get(i, j)
        } else {
            0.0
        }
    });
    let (mut assign, u, v) = solve_min_cost(&cost);
    let scale = cost.max_value().max(1.0);
    let original = assign.clone();
    lexicographic_optimum(&cost, &u, &v, &mut assign, 1e-9 * scale);
    let total = |a: &[usize]| -> f64 { (0..side).map(|i| cost.get(i, a[i])).sum() };
    if total(&assign) > total(&original) + 1e-9 * scale {
        assign = original;
    }
    let pairs = (0..n)
        .filter(|&i| assign[i] < m)
        .map(|i| (i, assign[i]))
        .collect();
    Ok(AlignmentResult {
        predicted_pairs: pairs,
        method: DecodeMethod::Hungarian,
    })
}

/// Shortest augmenting path solver with row/column potentials.
/// Returns the column of each row plus the final potentials.
fn solve_min_cost(cost: &DenseMatrix) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    let n = cost.rows();
    // 1-based indexing; column 0 is the virtual source
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost.get(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0usize; n];
    for j in 1..=n {
        assign[row_of[j] - 1] = j - 1;
    }
    (assign, u[1..].to_vec(), v[1..].to_vec())
}

/// Rewrites `assign` into the lexicographically smallest perfect matching of
/// the tight-edge graph defined by the optimal potentials. Every such
/// matching is optimal.
fn lexicographic_optimum(cost: &DenseMatrix, u: &[f64], v: &[f64], assign: &mut [usize], tol: f64) {
    let n = assign.len();
    let tight = |i: usize, j: usize| (cost.get(i, j) - u[i] - v[j]).abs() <= tol;
    let mut row_of = vec![0usize; n];
    for (i, &j) in assign.iter().enumerate() {
        row_of[j] = i;
    }
    for i in 0..n {
        for j in 0..n {
            if j == assign[i] {
                break;
            }
            if !tight(i, j) || row_of[j] < i {
                continue;
            }
            // look for an alternating path from row_of[j] back to assign[i]
            // through rows that are still free to move
            let goal = assign[i];
            let start = row_of[j];
            let mut prev_row = vec![usize::MAX; n];
            let mut visited_col = vec![false; n];
            visited_col[j] = true;
            let mut queue = VecDeque::from([start]);
            let mut found = None;
            'bfs: while let Some(r) = queue.pop_front() {
                for c in 0..n {
                    if visited_col[c] || c == assign[r] || !tight(r, c) {
                        continue;
                    }
                    visited_col[c] = true;
                    prev_row[c] = r;
                    if c == goal {
                        found = Some(c);
                        break 'bfs;
                    }
                    let next = row_of[c];
                    if next > i {
                        queue.push_back(next);
                    }
                }
            }
            if let Some(mut c) = found {
                // shift every row on the path to its new column
                loop {
                    let r = prev_row[c];
                    let old = assign[r];
                    assign[r] = c;
                    row_of[c] = r;
                    if r == start {
                        break;
                    }
                    c = old;
                }
                assign[i] = j;
                row_of[j] = i;
                break;
            }
        }
    }
}
