use std::collections::{HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::openea::train_count;
use super::{DatasetBundle, KnowledgeGraph, SeedAlignments, Triple};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticParams {
    pub nodes: usize,
    pub edge_prob: f64,
    pub perturb: f64,
    pub seed_ratio: f64,
    pub rng_seed: u64,
}

/// Generates an Erdős–Rényi source graph (largest connected component only)
/// and a relabeled, optionally perturbed copy as target.
///
/// Perturbation deletes each edge independently with probability `perturb`
/// and then inserts as many random non-edges as were deleted. Every entity is
/// aligned; `ceil(seed_ratio * n)` random pairs become training seeds.
pub fn generate_synthetic_pair(p: &SyntheticParams) -> Result<DatasetBundle> {
    if p.nodes < 2 {
        return Err(Error::param(format!(
            "synthetic graphs need n >= 2, got {}",
            p.nodes
        )));
    }
    if !(0.0..=1.0).contains(&p.edge_prob) {
        return Err(Error::param(format!(
            "edge probability {} outside [0, 1]",
            p.edge_prob
        )));
    }
    if !(0.0..1.0).contains(&p.perturb) {
        return Err(Error::param(format!(
            "perturbation {} outside [0, 1)",
            p.perturb
        )));
    }
    if !(p.seed_ratio > 0.0 && p.seed_ratio <= 1.0) {
        return Err(Error::param(format!(
            "seed ratio {} outside (0, 1]",
            p.seed_ratio
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.rng_seed);

    let mut adj = vec![Vec::new(); p.nodes];
    for i in 0..p.nodes {
        for j in i + 1..p.nodes {
            if rng.random::<f64>() < p.edge_prob {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    let keep = largest_component(&adj);
    let n = keep.len();
    let mut new_id = vec![usize::MAX; p.nodes];
    for (k, &v) in keep.iter().enumerate() {
        new_id[v] = k;
    }
    let mut source_edges: Vec<(usize, usize)> = Vec::new();
    for &v in &keep {
        for &w in &adj[v] {
            if v < w {
                source_edges.push((new_id[v], new_id[w]));
            }
        }
    }
    source_edges.sort_unstable();

    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);

    let mut target_edges: Vec<(usize, usize)> = source_edges
        .iter()
        .map(|&(u, v)| ordered(perm[u], perm[v]))
        .collect();
    target_edges.sort_unstable();
    if p.perturb > 0.0 {
        let original: HashSet<(usize, usize)> = target_edges.iter().copied().collect();
        let before = target_edges.len();
        target_edges.retain(|_| rng.random::<f64>() >= p.perturb);
        let deleted = before - target_edges.len();
        let capacity = n * (n - 1) / 2 - original.len();
        let mut added = HashSet::new();
        while added.len() < deleted.min(capacity) {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            if a == b {
                continue;
            }
            let e = ordered(a, b);
            if !original.contains(&e) && added.insert(e) {
                target_edges.push(e);
            }
        }
        target_edges.sort_unstable();
    }

    let source = graph_from_edges("s", n, &source_edges)?;
    let target = graph_from_edges("t", n, &target_edges)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let pairs: Vec<(usize, usize)> = order.into_iter().map(|v| (v, perm[v])).collect();
    let n_train = train_count(p.seed_ratio, n);
    let seeds = SeedAlignments::new(pairs[..n_train].to_vec(), pairs[n_train..].to_vec())?;
    DatasetBundle::new(source, target, seeds)
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Vertices of the largest connected component, ascending. Ties go to the
/// component containing the smallest vertex.
fn largest_component(adj: &[Vec<usize>]) -> Vec<usize> {
    let mut comp = vec![usize::MAX; adj.len()];
    let mut best: Vec<usize> = Vec::new();
    for start in 0..adj.len() {
        if comp[start] != usize::MAX {
            continue;
        }
        let mut members = vec![start];
        comp[start] = start;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if comp[w] == usize::MAX {
                    comp[w] = start;
                    members.push(w);
                    queue.push_back(w);
                }
            }
        }
        if members.len() > best.len() {
            best = members;
        }
    }
    best.sort_unstable();
    best
}

/// Entities that end up isolated get a self-loop triple so they survive a
/// round trip through the triple-file format; self-loops never enter the
/// adjacency.
fn graph_from_edges(prefix: &str, n: usize, edges: &[(usize, usize)]) -> Result<KnowledgeGraph> {
    let mut triples: Vec<Triple> = edges
        .iter()
        .map(|&(h, t)| Triple {
            head: h,
            relation: 0,
            tail: t,
        })
        .collect();
    let mut touched = vec![false; n];
    for &(h, t) in edges {
        touched[h] = true;
        touched[t] = true;
    }
    for (v, _) in touched.iter().enumerate().filter(|(_, t)| !**t) {
        triples.push(Triple {
            head: v,
            relation: 0,
            tail: v,
        });
    }
    KnowledgeGraph::new(
        (0..n).map(|i| format!("{prefix}{i}")).collect(),
        vec!["linked_to".to_owned()],
        triples,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize, p: f64, perturb: f64, ratio: f64, seed: u64) -> SyntheticParams {
        SyntheticParams {
            nodes: n,
            edge_prob: p,
            perturb,
            seed_ratio: ratio,
            rng_seed: seed,
        }
    }

    #[test]
    fn unperturbed_target_is_permuted_source() {
        let b = generate_synthetic_pair(&params(60, 0.1, 0.0, 0.1, 3)).unwrap();
        let n = b.source.entity_count();
        let mut perm = vec![usize::MAX; n];
        for &(s, t) in b.seeds.train_pairs().iter().chain(b.seeds.test_pairs()) {
            perm[s] = t;
        }
        assert!(perm.iter().all(|&t| t < n));
        let (a_s, a_t) = (b.source.adjacency(), b.target.adjacency());
        for i in 0..n {
            for j in 0..n {
                assert_eq!(a_s.get(i, j), a_t.get(perm[i], perm[j]));
            }
        }
    }

    #[test]
    fn seed_split_counts() {
        let b = generate_synthetic_pair(&params(100, 0.1, 0.0, 0.05, 11)).unwrap();
        assert_eq!(b.source.entity_count(), 100);
        assert_eq!(b.seeds.train_pairs().len(), 5);
        assert_eq!(b.seeds.test_pairs().len(), 95);
    }

    #[test]
    fn deterministic() {
        let a = generate_synthetic_pair(&params(80, 0.08, 0.1, 0.1, 5)).unwrap();
        let b = generate_synthetic_pair(&params(80, 0.08, 0.1, 0.1, 5)).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic_pair(&params(80, 0.08, 0.1, 0.1, 6)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn perturbation_keeps_edge_count() {
        let b = generate_synthetic_pair(&params(120, 0.06, 0.2, 0.1, 9)).unwrap();
        assert_eq!(b.source.edge_count(), b.target.edge_count());
        assert_ne!(b.source.adjacency().nnz(), 0);
    }

    #[test]
    fn keeps_only_largest_component() {
        // sparse enough that some vertices fall outside the giant component
        let b = generate_synthetic_pair(&params(200, 0.008, 0.0, 0.1, 2)).unwrap();
        let n = b.source.entity_count();
        assert!(n < 200);
        let a = b.source.adjacency();
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for (w, _) in a.row_entries(v) {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(generate_synthetic_pair(&params(1, 0.5, 0.0, 0.5, 0)).is_err());
        assert!(generate_synthetic_pair(&params(10, 0.5, 1.0, 0.5, 0)).is_err());
        assert!(generate_synthetic_pair(&params(10, 0.5, 0.0, 0.0, 0)).is_err());
    }
}
