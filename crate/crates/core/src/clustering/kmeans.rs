use rayon::prelude::*;

use super::Centroids;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{assign_nearest, sq_dist, sq_dist_f64, BLOCK_ROWS};
use crate::rng;

/// How the first set of centroids is chosen.
#[derive(Debug, Clone)]
pub enum KMeansInit {
    /// k-means++ seeding from the given seed.
    PlusPlus { seed: u64 },
    /// Start from these centroids.
    Warm(Centroids),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansParams {
    /// Lloyd iterations after the initial assignment.
    pub max_iters: usize,
    /// Stop once the relative distortion decrease of an iteration drops below this.
    pub tol: f64,
}

impl Default for KMeansParams {
    fn default() -> Self {
        Self { max_iters: 100, tol: 1e-4 }
    }
}

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub centroids: Centroids,
    /// Nearest centroid of each point (lowest index on ties).
    pub assignments: Vec<u32>,
    /// Mean squared distance of each point to its assigned centroid.
    pub distortion: f64,
    /// Distortion after the initial assignment and after every accepted iteration.
    pub history: Vec<f64>,
}

/// Lloyd's algorithm.
///
/// Each iteration moves every centroid to the mean of its points, re-seats empty centroids on
/// the points farthest from their current centroid and reassigns. An iteration that would raise
/// the distortion is discarded and ends the run, so `history` is non-increasing.
pub fn kmeans(
    points: &Dataset,
    k: usize,
    init: KMeansInit,
    params: &KMeansParams,
) -> Result<KMeansResult> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let d = points.d();
    let mut centroids = match init {
        KMeansInit::PlusPlus { seed } => {
            if k > points.n() {
                return Err(Error::invalid(format!(
                    "k={k} exceeds the number of points {}",
                    points.n()
                )));
            }
            plus_plus(points, k, seed)
        }
        KMeansInit::Warm(c) => {
            Error::check_dim(d, c.d())?;
            if c.k() != k {
                return Err(Error::invalid(format!("warm start has {} centroids, k={k}", c.k())));
            }
            c
        }
    };

    let (mut assignments, mut dists) = assign_nearest(points.as_slice(), centroids.as_slice(), d);
    let mut distortion = mean_distortion(points, &centroids, &assignments);
    let mut history = vec![distortion];

    for _ in 0..params.max_iters {
        let next = update(points, k, &assignments, &dists, &centroids);
        let (next_asg, next_dists) = assign_nearest(points.as_slice(), next.as_slice(), d);
        let next_distortion = mean_distortion(points, &next, &next_asg);
        if next_distortion > distortion {
            break;
        }
        let rel = if distortion > 0.0 { (distortion - next_distortion) / distortion } else { 0.0 };
        centroids = next;
        assignments = next_asg;
        dists = next_dists;
        distortion = next_distortion;
        history.push(distortion);
        if rel < params.tol {
            break;
        }
    }

    Ok(KMeansResult { centroids, assignments, distortion, history })
}

fn mean_distortion(points: &Dataset, centroids: &Centroids, assignments: &[u32]) -> f64 {
    let d = points.d();
    let partial: Vec<f64> = points
        .as_slice()
        .par_chunks(BLOCK_ROWS * d)
        .zip(assignments.par_chunks(BLOCK_ROWS))
        .map(|(blk, asg)| {
            blk.chunks_exact(d)
                .zip(asg)
                .map(|(x, &a)| sq_dist_f64(x, centroids.row(a as usize)))
                .sum::<f64>()
        })
        .collect();
    partial.iter().sum::<f64>() / points.n() as f64
}

fn update(
    points: &Dataset,
    k: usize,
    assignments: &[u32],
    dists: &[f32],
    current: &Centroids,
) -> Centroids {
    let d = points.d();
    let block = 16 * BLOCK_ROWS;
    let partials: Vec<(Vec<f64>, Vec<u64>)> = points
        .as_slice()
        .par_chunks(block * d)
        .zip(assignments.par_chunks(block))
        .map(|(blk, asg)| {
            let mut sums = vec![0.0f64; k * d];
            let mut counts = vec![0u64; k];
            for (x, &a) in blk.chunks_exact(d).zip(asg) {
                let a = a as usize;
                counts[a] += 1;
                for (s, &v) in sums[a * d..(a + 1) * d].iter_mut().zip(x) {
                    *s += v as f64;
                }
            }
            (sums, counts)
        })
        .collect();
    let mut sums = vec![0.0f64; k * d];
    let mut counts = vec![0u64; k];
    for (s, c) in &partials {
        for (t, v) in sums.iter_mut().zip(s) {
            *t += v;
        }
        for (t, v) in counts.iter_mut().zip(c) {
            *t += v;
        }
    }

    let mut data = current.as_slice().to_vec();
    let mut empty = Vec::new();
    for j in 0..k {
        if counts[j] == 0 {
            empty.push(j);
            continue;
        }
        let inv = 1.0 / counts[j] as f64;
        for (dst, &s) in data[j * d..(j + 1) * d].iter_mut().zip(&sums[j * d..(j + 1) * d]) {
            *dst = (s * inv) as f32;
        }
    }
    if !empty.is_empty() {
        // farthest points first, lower index on ties
        let mut order: Vec<usize> = (0..points.n()).collect();
        let by = |a: &usize, b: &usize| dists[*b].total_cmp(&dists[*a]).then(a.cmp(b));
        let take = empty.len().min(order.len());
        if take < order.len() {
            order.select_nth_unstable_by(take - 1, by);
            order.truncate(take);
        }
        order.sort_unstable_by(by);
        for (&j, &p) in empty.iter().zip(&order) {
            data[j * d..(j + 1) * d].copy_from_slice(points.row(p));
        }
    }
    Centroids::new(k, d, data).expect("means of finite points are finite")
}

fn plus_plus(points: &Dataset, k: usize, seed: u64) -> Centroids {
    let n = points.n();
    let d = points.d();
    let mut rng = rng::seeded(seed);
    let mut chosen = Vec::with_capacity(k);
    let mut taken = vec![false; n];

    let first = rng::below(&mut rng, n as u64) as usize;
    chosen.push(first);
    taken[first] = true;
    let mut mindist: Vec<f32> = points.rows().map(|x| sq_dist(x, points.row(first))).collect();

    while chosen.len() < k {
        let total: f64 = mindist.iter().map(|&v| v as f64).sum();
        let next = if total > 0.0 {
            let target = rng::unit_f64(&mut rng) * total;
            let mut acc = 0.0f64;
            let mut pick = None;
            for (i, &w) in mindist.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                acc += w as f64;
                pick = Some(i);
                if acc > target {
                    break;
                }
            }
            pick.expect("positive total implies a positive weight")
        } else {
            // every point coincides with a chosen centroid: take a uniformly random unused row
            let free = n - chosen.len();
            let r = rng::below(&mut rng, free as u64) as usize;
            (0..n).filter(|&i| !taken[i]).nth(r).unwrap()
        };
        chosen.push(next);
        taken[next] = true;
        let c = points.row(next);
        mindist
            .par_chunks_mut(BLOCK_ROWS)
            .zip(points.as_slice().par_chunks(BLOCK_ROWS * d))
            .for_each(|(md, blk)| {
                for (m, x) in md.iter_mut().zip(blk.chunks_exact(d)) {
                    let v = sq_dist(x, c);
                    if v < *m {
                        *m = v;
                    }
                }
            });
    }

    let mut data = Vec::with_capacity(k * d);
    for &i in &chosen {
        data.extend_from_slice(points.row(i));
    }
    Centroids::new(k, d, data).expect("dataset rows are finite")
}
