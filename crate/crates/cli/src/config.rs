use std::path::Path;

use anyhow::{bail, Context, Result};
use irvq::{KMeansBudget, TrainConfig};
use serde::Deserialize;

use crate::Method;

pub const DEFAULT_R: &[usize] = &[1, 2, 4, 8, 16, 32, 64, 128];
pub const DEFAULT_GT_DEPTH: usize = 100;

/// Values read from `--config`. Every field is optional; keys mirror the flag names.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub threads: Option<usize>,
    pub method: Option<Method>,
    #[serde(rename = "M")]
    pub m: Option<usize>,
    #[serde(rename = "K")]
    pub k: Option<usize>,
    #[serde(rename = "I")]
    pub i: Option<usize>,
    #[serde(rename = "L")]
    pub l: Option<usize>,
    pub seed: Option<u64>,
    pub round_iters: Option<usize>,
    pub final_iters: Option<usize>,
    pub tol: Option<f64>,
    pub epsilon_bits: Option<u8>,
    #[serde(rename = "R")]
    pub r: Option<Vec<usize>>,
    /// Ground-truth depth for `gt`.
    pub k_nn: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Training parameters after merging flags over the file over the defaults.
pub struct TrainSettings {
    pub method: Method,
    pub config: TrainConfig,
}

pub fn train_settings(args: &crate::TrainArgs, file: &FileConfig) -> Result<TrainSettings> {
    let base = TrainConfig::default();
    let budget = KMeansBudget::default();
    let config = TrainConfig {
        m: args.m.or(file.m).unwrap_or(base.m),
        k: args.k.or(file.k).unwrap_or(base.k),
        schedule_len: args.i.or(file.i).unwrap_or(base.schedule_len),
        beam: args.l.or(file.l).unwrap_or(base.beam),
        budget: KMeansBudget {
            round_iters: args.budget.round_iters.or(file.round_iters).unwrap_or(budget.round_iters),
            final_iters: args.budget.final_iters.or(file.final_iters).unwrap_or(budget.final_iters),
            tol: args.budget.tol.or(file.tol).unwrap_or(budget.tol),
        },
        seed: args.seed.or(file.seed).unwrap_or(base.seed),
    };
    config.validate()?;
    Ok(TrainSettings { method: args.method.or(file.method).unwrap_or(Method::Irvq), config })
}

pub fn beam(flag: Option<usize>, file: &FileConfig) -> Result<usize> {
    let l = flag.or(file.l).unwrap_or(TrainConfig::default().beam);
    if l == 0 {
        bail!("L must be at least 1");
    }
    Ok(l)
}

/// `None` means exact cross terms.
pub fn epsilon_bits(flag: Option<u8>, file: &FileConfig) -> Result<Option<u8>> {
    match flag.or(file.epsilon_bits).unwrap_or(0) {
        0 => Ok(None),
        b @ 1..=8 => Ok(Some(b)),
        b => bail!("--epsilon-bits {b} must be in 0..=8"),
    }
}

pub fn recall_depths(flag: Option<&[usize]>, file: &FileConfig) -> Result<Vec<usize>> {
    let mut r: Vec<usize> = flag.or(file.r.as_deref()).unwrap_or(DEFAULT_R).to_vec();
    if r.is_empty() || r.contains(&0) {
        bail!("--R values must be positive");
    }
    r.sort_unstable();
    r.dedup();
    Ok(r)
}
