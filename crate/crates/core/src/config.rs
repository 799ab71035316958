//! Pipeline hyperparameters and the flat `key = value` config file format.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeMode {
    /// Sinkhorn-normalize the refined matrix, rank it and decode greedily.
    Sinkhorn,
    /// Rank and greedily decode the refined matrix directly.
    Raw,
    /// Rank the refined matrix, decode with the exact assignment solver.
    Hungarian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropagationMode {
    /// Dense series up to `dense_cutoff` entities, forward push above.
    Auto,
    Dense,
    Push,
}

macro_rules! impl_enum_str {
    ($ty:ty { $($name:literal => $variant:path),+ $(,)? }) => {
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok($variant),)+
                    other => Err(Error::param(format!(
                        "unknown {} {other:?}", stringify!($ty)
                    ))),
                }
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let name = match self { $($variant => $name,)+ };
                f.write_str(name)
            }
        }
    };
}

impl_enum_str!(DecodeMode {
    "sinkhorn" => DecodeMode::Sinkhorn,
    "raw" => DecodeMode::Raw,
    "hungarian" => DecodeMode::Hungarian,
});

impl_enum_str!(PropagationMode {
    "auto" => PropagationMode::Auto,
    "dense" => PropagationMode::Dense,
    "push" => PropagationMode::Push,
});

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// walk stop probability
    pub alpha: f64,
    /// intra-graph share of the operator
    pub beta: f64,
    /// candidates kept per row of the inter-graph blocks
    pub k: usize,
    /// proximity sparsification threshold
    pub delta: f64,
    /// embedding rank
    pub d: usize,
    /// token match score
    pub epsilon: f64,
    /// propagation series terms
    pub l1: usize,
    /// refinement iterations
    pub l2: usize,
    /// sinkhorn iterations
    pub q: usize,
    /// built-in encoder hops
    pub hops: usize,
    pub rng_seed: u64,
    pub train_ratio: f64,
    pub decode: DecodeMode,
    pub propagation: PropagationMode,
    pub dense_cutoff: usize,
    pub push_eps: f64,
    pub no_refine: bool,
    pub no_initial: bool,
    pub no_propagation: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            alpha: 0.7,
            beta: 0.5,
            k: 2,
            delta: 1e-4,
            d: 128,
            epsilon: 1e-5,
            l1: 8,
            l2: 8,
            q: 10,
            hops: 2,
            rng_seed: 0,
            train_ratio: 0.01,
            decode: DecodeMode::Raw,
            propagation: PropagationMode::Auto,
            dense_cutoff: 20_000,
            push_eps: 1e-6,
            no_refine: false,
            no_initial: false,
            no_propagation: false,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::param(format!("cannot parse {key} = {value:?}")))
}

impl PipelineConfig {
    /// Sets one field by name. Accepts both field names and the long CLI
    /// spellings (`topk`, `rank`, `sinkhorn_q`, dashes or underscores).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        match key.as_str() {
            "alpha" => self.alpha = parse(&key, value)?,
            "beta" => self.beta = parse(&key, value)?,
            "k" | "topk" => self.k = parse(&key, value)?,
            "delta" => self.delta = parse(&key, value)?,
            "d" | "rank" => self.d = parse(&key, value)?,
            "epsilon" => self.epsilon = parse(&key, value)?,
            "l1" => self.l1 = parse(&key, value)?,
            "l2" => self.l2 = parse(&key, value)?,
            "q" | "sinkhorn_q" => self.q = parse(&key, value)?,
            "hops" => self.hops = parse(&key, value)?,
            "rng_seed" => self.rng_seed = parse(&key, value)?,
            "train_ratio" => self.train_ratio = parse(&key, value)?,
            "decode" => self.decode = value.parse()?,
            "propagation" => self.propagation = value.parse()?,
            "dense_cutoff" => self.dense_cutoff = parse(&key, value)?,
            "push_eps" => self.push_eps = parse(&key, value)?,
            "no_refine" => self.no_refine = parse(&key, value)?,
            "no_initial" => self.no_initial = parse(&key, value)?,
            "no_propagation" => self.no_propagation = parse(&key, value)?,
            other => return Err(Error::param(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Applies a flat config text: one `key = value` per line, `#` starts a
    /// comment, blank lines are ignored.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::param(format!("config line {}: expected key = value", lineno + 1))
            })?;
            self.set(key, value)
                .map_err(|e| Error::param(format!("config line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_text(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::param(msg));
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return fail(format!("alpha must lie in (0, 1], got {}", self.alpha));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return fail(format!("beta must lie in [0, 1], got {}", self.beta));
        }
        if self.k == 0 {
            return fail("k must be at least 1".into());
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return fail(format!("delta must be positive, got {}", self.delta));
        }
        if self.d == 0 {
            return fail("embedding rank must be at least 1".into());
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return fail(format!(
                "epsilon must be non-negative, got {}",
                self.epsilon
            ));
        }
        if !(self.train_ratio > 0.0 && self.train_ratio <= 1.0) {
            return fail(format!(
                "train ratio must lie in (0, 1], got {}",
                self.train_ratio
            ));
        }
        if !(self.push_eps > 0.0 && self.push_eps.is_finite()) {
            return fail(format!(
                "push threshold must be positive, got {}",
                self.push_eps
            ));
        }
        if self.no_initial && self.no_propagation {
            return fail("--no-initial and --no-propagation leave nothing to fuse".into());
        }
        if !self.no_propagation && self.l1 == 0 {
            return fail("propagation needs l1 >= 1".into());
        }
        if self.decode == DecodeMode::Sinkhorn && self.q == 0 {
            return fail("sinkhorn decoding needs q >= 1".into());
        }
        Ok(())
    }
}
