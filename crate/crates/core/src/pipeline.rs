//! End-to-end alignment run: encoder, propagation, factorization, fusion,
//! refinement, decoding and evaluation.

use std::path::PathBuf;
use std::time::Instant;

use crate::config::{DecodeMode, PipelineConfig, PropagationMode};
use crate::decode::{
    greedy_decode, hungarian_assign, sinkhorn_rect, AlignmentResult, DecodeMethod,
};
use crate::encoder::{builtin_encoder, import_similarity, SimilarityMatrix};
use crate::error::Result;
use crate::eval::{evaluate, hits_at_1, EvalReport};
use crate::kg::DatasetBundle;
use crate::linalg::DenseMatrix;
use crate::operator::{
    build_operator, factorize_embed, global_similarity, propagate_push, propagate_series,
    Embeddings, PropagationResult,
};
use crate::refine::{fuse, refine_with, RefineEvent, RefinementState};

pub const HIT_CUTOFFS: [usize; 3] = [1, 5, 10];

#[derive(Debug, Clone)]
pub enum SimilaritySource {
    Builtin,
    Imported(PathBuf),
}

pub fn initial_similarity(
    bundle: &DatasetBundle,
    source: &SimilaritySource,
    config: &PipelineConfig,
) -> Result<SimilarityMatrix> {
    match source {
        SimilaritySource::Builtin => builtin_encoder(bundle, config.hops),
        SimilaritySource::Imported(path) => import_similarity(path, bundle),
    }
}

/// One `(iteration, H@1 on test pairs)` sample per refinement iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub iteration: usize,
    pub hits_at_1: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StageTimings {
    pub operator_ms: f64,
    pub propagation_ms: f64,
    pub svd_ms: f64,
    pub refinement_ms: f64,
    pub decode_ms: f64,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub report: EvalReport,
    pub alignment: AlignmentResult,
    /// Refined (or fused, without refinement) similarity.
    pub refined: DenseMatrix,
    /// The matrix that was ranked and decoded.
    pub scores: DenseMatrix,
    pub embeddings: Option<Embeddings>,
    pub trace: Vec<TracePoint>,
    /// Times a seed row's argmax differed from its pinned column at the start
    /// of a refinement iteration. Always zero unless pinning is broken.
    pub seed_pin_violations: usize,
    pub timings: StageTimings,
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn clamped(m: &DenseMatrix) -> DenseMatrix {
    let mut out = m.clone();
    out.as_mut_slice().iter_mut().for_each(|v| *v = v.max(0.0));
    out
}

fn propagate(
    op: &crate::operator::PipOperator,
    config: &PipelineConfig,
) -> Result<PropagationResult> {
    let use_push = match config.propagation {
        PropagationMode::Dense => false,
        PropagationMode::Push => true,
        PropagationMode::Auto => op.dim() > config.dense_cutoff,
    };
    if use_push {
        log::info!("forward push propagation over {} entities", op.dim());
        propagate_push(op, config.alpha, config.push_eps)
    } else {
        propagate_series(op, config.alpha, config.l1)
    }
}

/// Runs every stage after the initial similarity.
pub fn run(
    bundle: &DatasetBundle,
    omega0: &SimilarityMatrix,
    config: &PipelineConfig,
) -> Result<PipelineOutput> {
    config.validate()?;
    let (n, m) = bundle.shape();
    let mut timings = StageTimings::default();

    let mut embeddings = None;
    let fused = if config.no_propagation {
        clamped(omega0.values())
    } else {
        let t = Instant::now();
        let op = build_operator(bundle, omega0, config.beta, config.k)?;
        timings.operator_ms = ms_since(t);

        let t = Instant::now();
        let prop = propagate(&op, config)?;
        timings.propagation_ms = ms_since(t);

        let t = Instant::now();
        let rank = config.d.min(n + m);
        if rank < config.d {
            log::warn!(
                "embedding rank lowered from {} to {rank} to fit {} entities",
                config.d,
                n + m
            );
        }
        let emb = factorize_embed(&prop, config.delta, rank, config.rng_seed)?;
        let omega_prime = global_similarity(&emb.x_s, &emb.x_t)?;
        timings.svd_ms = ms_since(t);
        log::info!(
            "operator {:.1} ms, propagation {:.1} ms, factorization {:.1} ms",
            timings.operator_ms,
            timings.propagation_ms,
            timings.svd_ms
        );
        embeddings = Some(emb);
        if config.no_initial {
            clamped(omega_prime.values())
        } else {
            fuse(omega0, &omega_prime)?
        }
    };

    let mut trace = Vec::new();
    let mut seed_pin_violations = 0;
    let refined = if config.no_refine {
        fused
    } else {
        let t = Instant::now();
        let seeds = &bundle.seeds;
        let state = refine_with(
            RefinementState::new(fused, config.epsilon),
            bundle.source.adjacency(),
            bundle.target.adjacency(),
            seeds,
            config.l2,
            |event| match event {
                RefineEvent::Pinned { omega, .. } => {
                    seed_pin_violations += seeds
                        .train_pairs()
                        .iter()
                        .filter(|&&(s, t)| omega.row_argmax(s) != Some(t))
                        .count();
                }
                RefineEvent::Completed { iteration, omega } => trace.push(TracePoint {
                    iteration,
                    hits_at_1: hits_at_1(omega, seeds.test_pairs()),
                }),
            },
        )?;
        timings.refinement_ms = ms_since(t);
        log::info!(
            "refinement {:.1} ms over {} iterations",
            timings.refinement_ms,
            config.l2
        );
        state.omega
    };

    let t = Instant::now();
    let (scores, alignment) = match config.decode {
        DecodeMode::Sinkhorn => {
            let s = sinkhorn_rect(&refined, config.q)?;
            let mut a = greedy_decode(&s);
            a.method = DecodeMethod::SinkhornGreedy;
            (s, a)
        }
        DecodeMode::Raw => {
            let a = greedy_decode(&refined);
            (refined.clone(), a)
        }
        DecodeMode::Hungarian => {
            let a = hungarian_assign(&refined)?;
            (refined.clone(), a)
        }
    };
    timings.decode_ms = ms_since(t);
    log::info!("decoding {:.1} ms", timings.decode_ms);

    let mut report = evaluate(&scores, &bundle.seeds, &HIT_CUTOFFS)?;
    report.config = Some(config.clone());

    Ok(PipelineOutput {
        report,
        alignment,
        refined,
        scores,
        embeddings,
        trace,
        seed_pin_violations,
        timings,
    })
}
