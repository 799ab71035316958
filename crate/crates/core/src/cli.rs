//! Command-line front end: `align`, `synth` and `sweep`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::config::{DecodeMode, PipelineConfig, PropagationMode};
use crate::error::{Error, Result};
use crate::io::write_matrix;
use crate::kg::{
    generate_synthetic_pair, load_openea_dataset, write_openea_dataset, DatasetBundle,
    SyntheticParams,
};
use crate::pipeline::{initial_similarity, run, PipelineOutput, SimilaritySource};

#[derive(Debug, Parser)]
#[command(
    name = "pipea",
    version,
    about = "Structure-only entity alignment by potential isomorphism propagation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Align two graphs and write a report, predictions and the resolved config.
    Align(AlignArgs),
    /// Generate a synthetic graph pair in OpenEA layout.
    Synth(SynthArgs),
    /// Grid-run the pipeline over hyperparameter values.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DatasetArgs {
    /// Directory with rel_triples_1, rel_triples_2 and ent_links.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Fraction of links used as seeds.
    #[arg(long)]
    pub train_ratio: Option<f64>,
    /// Initial similarity source; `none` requires --similarity.
    #[arg(long, default_value = "builtin")]
    pub encoder: String,
    /// Precomputed n x m similarity (.tsv or .f32).
    #[arg(long)]
    pub similarity: Option<PathBuf>,
    /// Flat `key = value` config file, applied before command-line flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ConfigFlags {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub topk: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub l1: Option<usize>,
    #[arg(long)]
    pub l2: Option<usize>,
    #[arg(long)]
    pub sinkhorn_q: Option<usize>,
    #[arg(long)]
    pub hops: Option<usize>,
    #[arg(long)]
    pub rng_seed: Option<u64>,
    #[arg(long)]
    pub decode: Option<DecodeMode>,
    #[arg(long)]
    pub propagation: Option<PropagationMode>,
    #[arg(long)]
    pub push_eps: Option<f64>,
    #[arg(long)]
    pub no_refine: bool,
    #[arg(long)]
    pub no_initial: bool,
    #[arg(long)]
    pub no_propagation: bool,
}

impl ConfigFlags {
    fn apply(&self, c: &mut PipelineConfig) {
        macro_rules! take {
            ($($flag:ident => $field:ident),+) => {
                $(if let Some(v) = self.$flag { c.$field = v; })+
            };
        }
        take!(alpha => alpha, beta => beta, topk => k, delta => delta, rank => d,
              epsilon => epsilon, l1 => l1, l2 => l2, sinkhorn_q => q, hops => hops,
              rng_seed => rng_seed, decode => decode, propagation => propagation,
              push_eps => push_eps);
        c.no_refine |= self.no_refine;
        c.no_initial |= self.no_initial;
        c.no_propagation |= self.no_propagation;
    }
}

#[derive(Debug, Clone, Args)]
pub struct AlignArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[command(flatten)]
    pub flags: ConfigFlags,
    /// Write the final similarity matrix here (.tsv or .f32).
    #[arg(long)]
    pub dump_similarity: Option<PathBuf>,
    /// Write the sparsified proximity and embeddings into this directory.
    #[arg(long)]
    pub dump_embeddings: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0.05)]
    pub edge_prob: f64,
    #[arg(long, default_value_t = 0.0)]
    pub perturb: f64,
    #[arg(long, default_value_t = 0.05)]
    pub seed_ratio: f64,
    #[arg(long, default_value_t = 0)]
    pub rng_seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[command(flatten)]
    pub flags: ConfigFlags,
    /// Comma-separated alpha values.
    #[arg(long, value_delimiter = ',')]
    pub alpha_values: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub beta_values: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub topk_values: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub delta_values: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Resolves defaults < config file < flags.
pub fn resolve_config(data: &DatasetArgs, flags: &ConfigFlags) -> Result<PipelineConfig> {
    let mut config = PipelineConfig::default();
    if let Some(path) = &data.config {
        config.apply_file(path)?;
    }
    if let Some(r) = data.train_ratio {
        config.train_ratio = r;
    }
    flags.apply(&mut config);
    config.validate()?;
    Ok(config)
}

fn similarity_source(data: &DatasetArgs) -> Result<SimilaritySource> {
    match (data.encoder.as_str(), &data.similarity) {
        (_, Some(path)) if data.encoder == "none" || data.encoder == "builtin" => {
            if data.encoder == "builtin" {
                log::info!("--similarity given; the built-in encoder is skipped");
            }
            Ok(SimilaritySource::Imported(path.clone()))
        }
        ("builtin", None) => Ok(SimilaritySource::Builtin),
        ("none", None) => Err(Error::param("--encoder none requires --similarity <path>")),
        (other, _) => Err(Error::param(format!(
            "unknown encoder {other:?}; use builtin or none"
        ))),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// `key = value` rendering of a config, loadable with `--config`.
pub fn render_config(c: &PipelineConfig) -> String {
    let value = serde_json::to_value(c).expect("config serializes");
    let mut out = String::new();
    if let serde_json::Value::Object(map) = value {
        for (k, v) in map {
            let v = match v {
                serde_json::Value::String(s) => s,
                other => other.to_string(),
            };
            out.push_str(&format!("{k} = {v}\n"));
        }
    }
    out
}

fn write_outputs(out: &Path, bundle: &DatasetBundle, result: &PipelineOutput) -> Result<()> {
    create_dir(out)?;
    let json = serde_json::to_string_pretty(&result.report).expect("report serializes");
    write_text(&out.join("report.json"), &(json + "\n"))?;

    let config = result
        .report
        .config
        .as_ref()
        .expect("pipeline attaches its config");
    write_text(&out.join("config.resolved"), &render_config(config))?;

    let path = out.join("predictions.tsv");
    let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut w = BufWriter::new(file);
    let (sl, tl) = (bundle.source.entity_labels(), bundle.target.entity_labels());
    for &(s, t) in &result.alignment.predicted_pairs {
        writeln!(w, "{}\t{}", sl[s], tl[t]).map_err(|e| Error::io(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    if !result.trace.is_empty() {
        let mut csv = String::from("iteration,hits_at_1\n");
        for p in &result.trace {
            csv.push_str(&format!("{},{}\n", p.iteration, p.hits_at_1));
        }
        write_text(&out.join("refine_trace.csv"), &csv)?;
    }
    Ok(())
}

pub fn cmd_align(args: &AlignArgs) -> Result<PipelineOutput> {
    let config = resolve_config(&args.data, &args.flags)?;
    let source = similarity_source(&args.data)?;
    let bundle = load_openea_dataset(&args.data.dataset, config.train_ratio, config.rng_seed)?;
    let omega0 = initial_similarity(&bundle, &source, &config)?;
    let result = run(&bundle, &omega0, &config)?;
    write_outputs(&args.out, &bundle, &result)?;
    if let Some(path) = &args.dump_similarity {
        write_matrix(path, &result.refined)?;
    }
    if let (Some(dir), Some(emb)) = (&args.dump_embeddings, &result.embeddings) {
        create_dir(dir)?;
        write_matrix(&dir.join("x_s.f32"), &emb.x_s)?;
        write_matrix(&dir.join("x_t.f32"), &emb.x_t)?;
        write_matrix(&dir.join("proximity.f32"), &emb.sparsified.to_dense())?;
    }
    Ok(result)
}

pub fn cmd_synth(args: &SynthArgs) -> Result<DatasetBundle> {
    let bundle = generate_synthetic_pair(&SyntheticParams {
        nodes: args.n,
        edge_prob: args.edge_prob,
        perturb: args.perturb,
        seed_ratio: args.seed_ratio,
        rng_seed: args.rng_seed,
    })?;
    write_openea_dataset(&bundle, &args.out)?;
    Ok(bundle)
}

/// One grid cell of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub beta: f64,
    pub k: usize,
    pub delta: f64,
    pub hits_at_1: f64,
    pub hits_at_10: f64,
    pub mrr: f64,
}

/// Cartesian product of the given values; an empty list keeps the base value.
pub fn sweep_grid(base: &PipelineConfig, args: &SweepArgs) -> Result<Vec<PipelineConfig>> {
    if args.alpha_values.is_empty()
        && args.beta_values.is_empty()
        && args.topk_values.is_empty()
        && args.delta_values.is_empty()
    {
        return Err(Error::param(
            "sweep grid is empty; pass at least one --*-values list",
        ));
    }
    fn or_base<T: Copy>(values: &[T], base: T) -> Vec<T> {
        if values.is_empty() {
            vec![base]
        } else {
            values.to_vec()
        }
    }
    let mut grid = Vec::new();
    for &alpha in &or_base(&args.alpha_values, base.alpha) {
        for &beta in &or_base(&args.beta_values, base.beta) {
            for &k in &or_base(&args.topk_values, base.k) {
                for &delta in &or_base(&args.delta_values, base.delta) {
                    let cell = PipelineConfig {
                        alpha,
                        beta,
                        k,
                        delta,
                        ..base.clone()
                    };
                    cell.validate()?;
                    grid.push(cell);
                }
            }
        }
    }
    Ok(grid)
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<Vec<SweepRow>> {
    let base = resolve_config(&args.data, &args.flags)?;
    let grid = sweep_grid(&base, args)?;
    let source = similarity_source(&args.data)?;
    let bundle = load_openea_dataset(&args.data.dataset, base.train_ratio, base.rng_seed)?;
    let omega0 = initial_similarity(&bundle, &source, &base)?;
    let rows: Result<Vec<SweepRow>> = grid
        .par_iter()
        .map(|cell| {
            let out = run(&bundle, &omega0, cell)?;
            Ok(SweepRow {
                alpha: cell.alpha,
                beta: cell.beta,
                k: cell.k,
                delta: cell.delta,
                hits_at_1: out.report.hits_at(1).unwrap_or(0.0),
                hits_at_10: out.report.hits_at(10).unwrap_or(0.0),
                mrr: out.report.mrr,
            })
        })
        .collect();
    let rows = rows?;
    create_dir(&args.out)?;
    let mut csv = String::from("alpha,beta,k,delta,hits_at_1,hits_at_10,mrr\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.alpha, r.beta, r.k, r.delta, r.hits_at_1, r.hits_at_10, r.mrr
        ));
    }
    write_text(&args.out.join("sweep.csv"), &csv)?;
    write_text(&args.out.join("config.resolved"), &render_config(&base))?;
    Ok(rows)
}

/// Dispatches a parsed command line.
pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Align(a) => {
            let out = cmd_align(a)?;
            println!(
                "H@1 {:.4}  H@10 {:.4}  MRR {:.4}  ({} test pairs) -> {}",
                out.report.hits_at(1).unwrap_or(0.0),
                out.report.hits_at(10).unwrap_or(0.0),
                out.report.mrr,
                out.report.num_test,
                a.out.display()
            );
        }
        Command::Synth(s) => {
            let b = cmd_synth(s)?;
            println!(
                "{} entities, {} / {} edges, {} seeds -> {}",
                b.source.entity_count(),
                b.source.edge_count(),
                b.target.edge_count(),
                b.seeds.train_pairs().len(),
                s.out.display()
            );
        }
        Command::Sweep(s) => {
            let rows = cmd_sweep(s)?;
            println!(
                "{} cells -> {}",
                rows.len(),
                s.out.join("sweep.csv").display()
            );
        }
    }
    Ok(())
}

/// Structured error line printed on failure.
pub fn error_json(e: &Error) -> String {
    serde_json::json!({
        "error": { "category": e.category(), "message": e.to_string() }
    })
    .to_string()
}
