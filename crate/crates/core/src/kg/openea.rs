use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{DatasetBundle, GraphBuilder, KnowledgeGraph, SeedAlignments};
use crate::error::{Error, Result};

const SOURCE_TRIPLES: &str = "rel_triples_1";
const TARGET_TRIPLES: &str = "rel_triples_2";
const LINKS: &str = "ent_links";

/// Reads tab-separated lines, tolerating CRLF and skipping blank lines.
/// Yields `(line_number, fields)`.
fn read_tsv_lines(path: &Path, width: usize) -> Result<Vec<(usize, Vec<String>)>> {
    let file = File::open(path).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: format!("cannot open: {e}"),
    })?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.is_empty() {
            continue;
        }
        let fields: Vec<String> = line.split('\t').map(str::to_owned).collect();
        if fields.len() != width {
            return Err(Error::Format {
                path: path.to_path_buf(),
                message: format!(
                    "line {}: expected {width} tab-separated fields, found {}",
                    i + 1,
                    fields.len()
                ),
            });
        }
        out.push((i + 1, fields));
    }
    Ok(out)
}

fn load_graph(path: &Path) -> Result<(GraphBuilder, usize)> {
    let mut builder = GraphBuilder::default();
    let lines = read_tsv_lines(path, 3)?;
    let count = lines.len();
    for (_, f) in lines {
        builder.add(&f[0], &f[1], &f[2]);
    }
    Ok((builder, count))
}

/// Number of training links for a given ratio: `ceil(ratio * total)`.
pub(crate) fn train_count(ratio: f64, total: usize) -> usize {
    // the slack absorbs products such as 0.01 * 15000 landing a hair above 150
    let raw = ratio * total as f64;
    ((raw - 1e-9).ceil().max(0.0) as usize).min(total)
}

/// Loads an OpenEA-style directory holding `rel_triples_1`, `rel_triples_2`
/// and `ent_links`.
///
/// Entity ids follow first appearance in each triple file. The links are
/// shuffled with `rng_seed` and the first `ceil(train_ratio * links)` become
/// training pairs.
pub fn load_openea_dataset(dir: &Path, train_ratio: f64, rng_seed: u64) -> Result<DatasetBundle> {
    if !(train_ratio > 0.0 && train_ratio <= 1.0) {
        return Err(Error::param(format!(
            "train ratio must lie in (0, 1], got {train_ratio}"
        )));
    }
    let (src, src_lines) = load_graph(&dir.join(SOURCE_TRIPLES))?;
    let (tgt, tgt_lines) = load_graph(&dir.join(TARGET_TRIPLES))?;
    log::debug!("read {src_lines} source and {tgt_lines} target triples");

    let links_path = dir.join(LINKS);
    let mut pairs = Vec::new();
    let mut seen_src = HashSet::new();
    let mut seen_tgt = HashSet::new();
    for (line, f) in read_tsv_lines(&links_path, 2)? {
        let integrity = |message: String| Error::Integrity {
            path: links_path.clone(),
            line,
            message,
        };
        let s = src
            .entity_id(&f[0])
            .ok_or_else(|| integrity(format!("unknown source entity {:?}", f[0])))?;
        let t = tgt
            .entity_id(&f[1])
            .ok_or_else(|| integrity(format!("unknown target entity {:?}", f[1])))?;
        if !seen_src.insert(s) {
            return Err(integrity(format!("source entity {:?} linked twice", f[0])));
        }
        if !seen_tgt.insert(t) {
            return Err(integrity(format!("target entity {:?} linked twice", f[1])));
        }
        pairs.push((s, t));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    pairs.shuffle(&mut rng);
    let n_train = train_count(train_ratio, pairs.len());
    let test = pairs.split_off(n_train);
    let seeds = SeedAlignments::new(pairs, test)?;
    DatasetBundle::new(src.build()?, tgt.build()?, seeds)
}

fn write_triples(path: &Path, g: &KnowledgeGraph) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let ents = g.entity_labels();
    let rels = g.relation_labels();
    for t in g.triples() {
        writeln!(
            w,
            "{}\t{}\t{}",
            ents[t.head], rels[t.relation], ents[t.tail]
        )
        .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes a bundle in the OpenEA layout. Training pairs are listed before
/// test pairs in `ent_links`.
///
/// Entities that appear in no triple cannot be represented in this format
/// and make the written directory unloadable.
pub fn write_openea_dataset(bundle: &DatasetBundle, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_triples(&dir.join(SOURCE_TRIPLES), &bundle.source)?;
    write_triples(&dir.join(TARGET_TRIPLES), &bundle.target)?;
    let path = dir.join(LINKS);
    let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut w = BufWriter::new(file);
    let (sl, tl) = (bundle.source.entity_labels(), bundle.target.entity_labels());
    for &(s, t) in bundle
        .seeds
        .train_pairs()
        .iter()
        .chain(bundle.seeds.test_pairs())
    {
        writeln!(w, "{}\t{}", sl[s], tl[t]).map_err(|e| Error::io(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))
}
