//! Knowledge graphs, seed alignments and dataset bundles.

mod openea;
mod synthetic;

use std::collections::{HashMap, HashSet};

pub use openea::{load_openea_dataset, write_openea_dataset};
pub use synthetic::{generate_synthetic_pair, SyntheticParams};

use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub head: usize,
    pub relation: usize,
    pub tail: usize,
}

/// One knowledge graph with its undirected 0/1 adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeGraph {
    entity_labels: Vec<String>,
    relation_labels: Vec<String>,
    triples: Vec<Triple>,
    adjacency: SparseMatrix,
}

impl KnowledgeGraph {
    pub fn new(
        entity_labels: Vec<String>,
        relation_labels: Vec<String>,
        triples: Vec<Triple>,
    ) -> Result<Self> {
        let n = entity_labels.len();
        let mut seen = HashSet::with_capacity(n);
        for label in &entity_labels {
            if !seen.insert(label.as_str()) {
                return Err(Error::param(format!("duplicate entity label {label:?}")));
            }
        }
        let mut edges = Vec::with_capacity(2 * triples.len());
        for t in &triples {
            if t.head >= n || t.tail >= n || t.relation >= relation_labels.len() {
                return Err(Error::param(format!(
                    "triple {t:?} references an unknown id"
                )));
            }
            if t.head != t.tail {
                edges.push((t.head, t.tail));
                edges.push((t.tail, t.head));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        let adjacency =
            SparseMatrix::from_triplets(n, n, edges.into_iter().map(|(i, j)| (i, j, 1.0)))?;
        Ok(KnowledgeGraph {
            entity_labels,
            relation_labels,
            triples,
            adjacency,
        })
    }

    pub fn entity_count(&self) -> usize {
        self.entity_labels.len()
    }

    pub fn entity_labels(&self) -> &[String] {
        &self.entity_labels
    }

    pub fn relation_labels(&self) -> &[String] {
        &self.relation_labels
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    /// Symmetric 0/1 adjacency with an empty diagonal.
    pub fn adjacency(&self) -> &SparseMatrix {
        &self.adjacency
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency.row(i).0.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.nnz() / 2
    }
}

/// Row-stochastic transition matrix `D^-1 A`; isolated entities get a zero row.
pub fn normalized_adjacency(g: &KnowledgeGraph) -> SparseMatrix {
    let a = g.adjacency();
    let per_row = (0..a.rows())
        .map(|i| {
            let deg = a.row_sum(i);
            a.row_entries(i).map(|(j, v)| (j, v / deg)).collect()
        })
        .collect();
    SparseMatrix::from_row_lists(a.rows(), a.cols(), per_row)
}

/// Labeled training pairs plus held-out test pairs, as `(source, target)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SeedAlignments {
    train: Vec<(usize, usize)>,
    test: Vec<(usize, usize)>,
}

impl SeedAlignments {
    pub fn new(train: Vec<(usize, usize)>, test: Vec<(usize, usize)>) -> Result<Self> {
        let mut src = HashSet::new();
        let mut tgt = HashSet::new();
        for &(s, t) in &train {
            if !src.insert(s) || !tgt.insert(t) {
                return Err(Error::param(format!(
                    "train pair ({s}, {t}) breaks one-to-one"
                )));
            }
        }
        for &(s, t) in &test {
            if src.contains(&s) || tgt.contains(&t) {
                return Err(Error::param(format!(
                    "test pair ({s}, {t}) overlaps the training pairs"
                )));
            }
        }
        Ok(SeedAlignments { train, test })
    }

    pub fn train_pairs(&self) -> &[(usize, usize)] {
        &self.train
    }

    pub fn test_pairs(&self) -> &[(usize, usize)] {
        &self.test
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBundle {
    pub source: KnowledgeGraph,
    pub target: KnowledgeGraph,
    pub seeds: SeedAlignments,
}

impl DatasetBundle {
    pub fn new(
        source: KnowledgeGraph,
        target: KnowledgeGraph,
        seeds: SeedAlignments,
    ) -> Result<Self> {
        let (n, m) = (source.entity_count(), target.entity_count());
        for &(s, t) in seeds.train_pairs().iter().chain(seeds.test_pairs()) {
            if s >= n || t >= m {
                return Err(Error::param(format!(
                    "pair ({s}, {t}) outside graphs of size {n} and {m}"
                )));
            }
        }
        Ok(DatasetBundle {
            source,
            target,
            seeds,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.source.entity_count(), self.target.entity_count())
    }
}

/// Interns entity and relation labels in first-appearance order.
#[derive(Debug, Default)]
pub(crate) struct GraphBuilder {
    entities: Vec<String>,
    entity_ids: HashMap<String, usize>,
    relations: Vec<String>,
    relation_ids: HashMap<String, usize>,
    triples: Vec<Triple>,
}

impl GraphBuilder {
    fn intern(labels: &mut Vec<String>, ids: &mut HashMap<String, usize>, label: &str) -> usize {
        if let Some(&id) = ids.get(label) {
            return id;
        }
        let id = labels.len();
        labels.push(label.to_owned());
        ids.insert(label.to_owned(), id);
        id
    }

    pub fn add(&mut self, head: &str, relation: &str, tail: &str) {
        let head = Self::intern(&mut self.entities, &mut self.entity_ids, head);
        let relation = Self::intern(&mut self.relations, &mut self.relation_ids, relation);
        let tail = Self::intern(&mut self.entities, &mut self.entity_ids, tail);
        self.triples.push(Triple {
            head,
            relation,
            tail,
        });
    }

    pub fn entity_id(&self, label: &str) -> Option<usize> {
        self.entity_ids.get(label).copied()
    }

    pub fn build(self) -> Result<KnowledgeGraph> {
        KnowledgeGraph::new(self.entities, self.relations, self.triples)
    }
}
