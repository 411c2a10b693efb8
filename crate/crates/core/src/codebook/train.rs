use log::info;
use rayon::prelude::*;

use super::{CodebookSet, KMeansBudget, TrainConfig};
use crate::clustering::{kmeans, pad_and_lift, pca, project, Centroids, KMeansInit, KMeansParams};
use crate::dataset::Dataset;
use crate::diagnostics::entropy_per_stage;
use crate::encoding::{extend_batch, CandidateList};
use crate::error::{Error, Result};
use crate::linalg::{norm_sq, BLOCK_ROWS};
use crate::rng;

/// Per-stage statistics of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Mean squared training error after each stage.
    pub stage_distortion: Vec<f64>,
    /// Entropy in bits of each stage's final training codes.
    pub stage_entropy: Vec<f64>,
    /// Mean squared norm of the training vectors (the error before any stage).
    pub initial_distortion: f64,
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub codebooks: CodebookSet,
    /// Final `n × M` codes of the training vectors.
    pub codes: Vec<u8>,
    pub report: TrainReport,
}

/// `⌈d^{p/I}⌉` for `p = 1..=I`, with repeated values collapsed; always ends at `d`.
pub fn dimension_schedule(d: usize, rounds: usize) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::with_capacity(rounds);
    for p in 1..=rounds {
        let v = if p == rounds { d } else { ceil_root_power(d, p, rounds) };
        if out.last() != Some(&v) {
            out.push(v);
        }
    }
    out
}

/// Smallest integer `c` with `c^q ≥ d^p`, i.e. `⌈d^{p/q}⌉`.
fn ceil_root_power(d: usize, p: usize, q: usize) -> usize {
    let approx = ((d as f64).powf(p as f64 / q as f64)).ceil().max(1.0) as u128;
    let target = match (d as u128).checked_pow(p as u32) {
        Some(t) => t,
        None => return approx as usize,
    };
    let reaches = |c: u128| c.checked_pow(q as u32).is_none_or(|v| v >= target);
    // float error is at most one step either way
    let mut c = approx.saturating_sub(1).max(1);
    while !reaches(c) {
        c += 1;
    }
    while c > 1 && reaches(c - 1) {
        c -= 1;
    }
    c as usize
}

/// Learns one stage codebook with k-means warm-started through growing PCA subspaces.
///
/// The residuals are rotated onto their principal directions. The first round clusters the
/// leading `schedule[0]` coordinates from k-means++ seeds; each following round clusters more
/// coordinates, starting from the previous centroids padded with zeros. The last round uses
/// every coordinate and the result is rotated back to data space.
pub fn icl_stage(
    residuals: &Dataset,
    k: usize,
    rounds: usize,
    budget: &KMeansBudget,
    seed: u64,
) -> Result<Centroids> {
    if residuals.n() < k {
        return Err(Error::invalid(format!("{} residuals cannot seed {k} centroids", residuals.n())));
    }
    if rounds == 0 {
        return Err(Error::invalid("the dimension schedule needs at least one round"));
    }
    let d = residuals.d();
    let basis = pca(residuals)?;
    let rotated = project(&basis, residuals, d)?;
    let schedule = dimension_schedule(d, rounds);
    let mut centroids: Option<Centroids> = None;
    for (round, &dim) in schedule.iter().enumerate() {
        let last = round + 1 == schedule.len();
        let sub = leading_columns(&rotated, dim)?;
        let init = match centroids.take() {
            None => KMeansInit::PlusPlus { seed },
            Some(c) => KMeansInit::Warm(c.zero_pad(dim)?),
        };
        let params = KMeansParams {
            max_iters: if last { budget.final_iters } else { budget.round_iters },
            tol: budget.tol,
        };
        let res = kmeans(&sub, k, init, &params)?;
        log::debug!("icl round {round}: dim {dim}, distortion {:.6}", res.distortion);
        centroids = Some(res.centroids);
    }
    pad_and_lift(&basis, &centroids.expect("schedule is non-empty"), d)
}

fn leading_columns(ds: &Dataset, dim: usize) -> Result<Dataset> {
    if dim == ds.d() {
        return Ok(ds.clone());
    }
    let mut data = Vec::with_capacity(ds.n() * dim);
    for row in ds.rows() {
        data.extend_from_slice(&row[..dim]);
    }
    Dataset::new(ds.n(), dim, data)
}

/// Plain residual vector quantization: k-means on the residuals of the previous stages, with
/// each vector assigned to its nearest codeword.
pub fn train_rvq(train: &Dataset, cfg: &TrainConfig) -> Result<Trained> {
    cfg.validate()?;
    let (n, d, mm) = (train.n(), train.d(), cfg.m);
    let mut books = CodebookSet::empty(d, cfg.k)?;
    let mut residual = train.as_slice().to_vec();
    let mut codes = vec![0u8; n * mm];
    let initial = mean_sq(&residual, d);
    let mut stage_distortion = Vec::with_capacity(mm);
    let params = KMeansParams { max_iters: cfg.budget.final_iters, tol: cfg.budget.tol };
    for m in 0..mm {
        let points = Dataset::new(n, d, residual.clone())?;
        let res = kmeans(&points, cfg.k, KMeansInit::PlusPlus { seed: stage_seed(cfg.seed, m) }, &params)?;
        for (i, (&a, r)) in res.assignments.iter().zip(residual.chunks_exact_mut(d)).enumerate() {
            codes[i * mm + m] = a as u8;
            for (v, &c) in r.iter_mut().zip(res.centroids.row(a as usize)) {
                *v -= c;
            }
        }
        books.push_stage(res.centroids)?;
        let dist = mean_sq(&residual, d);
        info!("rvq stage {}/{mm}: distortion {dist:.6}", m + 1);
        stage_distortion.push(dist);
    }
    let stage_entropy = entropy_per_stage(&codes, mm);
    Ok(Trained {
        codebooks: books,
        codes,
        report: TrainReport { stage_distortion, stage_entropy, initial_distortion: initial },
    })
}

/// Joint training: each stage learns its codebook on the current residuals with
/// [`icl_stage`], then advances every training vector's beam of `L` partial encodings by that
/// stage. The next residuals are taken from the best candidate of each beam.
pub fn train_irvq(train: &Dataset, cfg: &TrainConfig) -> Result<Trained> {
    cfg.validate()?;
    let (n, d, mm) = (train.n(), train.d(), cfg.m);
    let mut books = CodebookSet::empty(d, cfg.k)?;
    let mut lists: Vec<CandidateList> =
        train.rows().map(|x| CandidateList::root(norm_sq(x))).collect();
    let mut residual = train.as_slice().to_vec();
    let initial = mean_sq(&residual, d);
    let mut stage_distortion = Vec::with_capacity(mm);
    for m in 0..mm {
        let points = Dataset::new(n, d, residual)?;
        let book = icl_stage(&points, cfg.k, cfg.schedule_len, &cfg.budget, stage_seed(cfg.seed, m))?;
        books.push_stage(book)?;
        extend_batch(train, &books, &mut lists, cfg.beam)?;
        residual = best_residuals(train, &books, &lists);
        let dist = mean_sq(&residual, d);
        info!("irvq stage {}/{mm}: distortion {dist:.6}", m + 1);
        stage_distortion.push(dist);
    }
    let mut codes = Vec::with_capacity(n * mm);
    for list in &lists {
        codes.extend_from_slice(list.codes(0));
    }
    let stage_entropy = entropy_per_stage(&codes, mm);
    Ok(Trained {
        codebooks: books,
        codes,
        report: TrainReport { stage_distortion, stage_entropy, initial_distortion: initial },
    })
}

fn stage_seed(seed: u64, stage: usize) -> u64 {
    rng::derive(seed, stage as u64)
}

/// `x − x̂` for the best candidate of each row.
fn best_residuals(train: &Dataset, books: &CodebookSet, lists: &[CandidateList]) -> Vec<f32> {
    let d = train.d();
    let mut out = train.as_slice().to_vec();
    out.par_chunks_mut(BLOCK_ROWS * d).zip(lists.par_chunks(BLOCK_ROWS)).for_each(|(blk, ls)| {
        for (r, list) in blk.chunks_exact_mut(d).zip(ls) {
            for (m, &c) in list.codes(0).iter().enumerate() {
                for (v, &w) in r.iter_mut().zip(books.codeword(m, c as usize)) {
                    *v -= w;
                }
            }
        }
    });
    out
}

fn mean_sq(data: &[f32], d: usize) -> f64 {
    let parts: Vec<f64> = data
        .par_chunks(BLOCK_ROWS * d)
        .map(|blk| blk.iter().map(|&v| v as f64 * v as f64).sum::<f64>())
        .collect();
    parts.iter().sum::<f64>() / (data.len() / d) as f64
}
