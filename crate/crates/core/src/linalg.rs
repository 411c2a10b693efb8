//! Dense kernels shared by the clustering, encoding and search code.
//!
//! Matrices are row-major `&[f32]` slices with an explicit row length. The block kernels run
//! `matrixmultiply` on fixed-size row chunks, so results do not depend on the rayon schedule.

use rayon::prelude::*;

/// Rows per block in the chunked kernels.
pub const BLOCK_ROWS: usize = 256;

#[inline]
pub fn dot(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    // eight independent accumulators let the compiler vectorize
    let mut acc = [0.0f32; 8];
    let chunks = a.len() / 8;
    for c in 0..chunks {
        let (x, y) = (&a[c * 8..c * 8 + 8], &b[c * 8..c * 8 + 8]);
        for i in 0..8 {
            acc[i] += x[i] * y[i];
        }
    }
    let mut sum = acc.iter().sum::<f32>();
    for i in chunks * 8..a.len() {
        sum += a[i] * b[i];
    }
    sum
}

#[inline]
pub fn norm_sq(a: &[f32]) -> f32 {
    dot(a, a)
}

#[inline]
pub fn sq_dist(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f32; 8];
    let chunks = a.len() / 8;
    for c in 0..chunks {
        let (x, y) = (&a[c * 8..c * 8 + 8], &b[c * 8..c * 8 + 8]);
        for i in 0..8 {
            let t = x[i] - y[i];
            acc[i] += t * t;
        }
    }
    let mut sum = acc.iter().sum::<f32>();
    for i in chunks * 8..a.len() {
        let t = a[i] - b[i];
        sum += t * t;
    }
    sum
}

/// Squared distance accumulated in f64, for oracles and reported distortions.
pub fn sq_dist_f64(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| (x as f64 - y as f64).powi(2)).sum()
}

pub fn row_norms(data: &[f32], d: usize) -> Vec<f32> {
    data.chunks_exact(d).map(norm_sq).collect()
}

/// `out[i * rows_b + j] = a_i · b_j` for `a` with `rows_a` rows and `b` with `rows_b` rows.
pub fn dots_nt(a: &[f32], rows_a: usize, b: &[f32], rows_b: usize, d: usize, out: &mut [f32]) {
    assert_eq!(a.len(), rows_a * d);
    assert_eq!(b.len(), rows_b * d);
    assert_eq!(out.len(), rows_a * rows_b);
    if rows_a == 0 || rows_b == 0 {
        return;
    }
    if d == 0 {
        out.fill(0.0);
        return;
    }
    // SAFETY: the asserted slice lengths cover every index addressed by the given strides.
    unsafe {
        matrixmultiply::sgemm(
            rows_a,
            d,
            rows_b,
            1.0,
            a.as_ptr(),
            d as isize,
            1,
            b.as_ptr(),
            1,
            d as isize,
            0.0,
            out.as_mut_ptr(),
            rows_b as isize,
            1,
        );
    }
}

/// `a · bᵀ` where `a` is `rows_a × inner` and `b` is `cols × inner`; returns `rows_a × cols`.
pub fn matmul_nt(a: &[f32], rows_a: usize, b: &[f32], cols: usize, inner: usize) -> Vec<f32> {
    let mut out = vec![0.0; rows_a * cols];
    out.par_chunks_mut(BLOCK_ROWS * cols.max(1))
        .zip(a.par_chunks(BLOCK_ROWS * inner.max(1)))
        .for_each(|(o, blk)| {
            let r = blk.len() / inner.max(1);
            dots_nt(blk, r, b, cols, inner, o);
        });
    out
}

/// Nearest row of `centroids` for every row of `points`, lowest index on ties.
///
/// Returns the assignment and the squared distance (clamped at zero) of each point.
pub fn assign_nearest(points: &[f32], centroids: &[f32], d: usize) -> (Vec<u32>, Vec<f32>) {
    let n = points.len() / d;
    let k = centroids.len() / d;
    assert!(k > 0);
    let cnorms = row_norms(centroids, d);
    let mut assign = vec![0u32; n];
    let mut dist = vec![0.0f32; n];
    points
        .par_chunks(BLOCK_ROWS * d)
        .zip(assign.par_chunks_mut(BLOCK_ROWS))
        .zip(dist.par_chunks_mut(BLOCK_ROWS))
        .for_each(|((blk, asg), dst)| {
            let rows = blk.len() / d;
            let mut dots = vec![0.0f32; rows * k];
            dots_nt(blk, rows, centroids, k, d, &mut dots);
            for r in 0..rows {
                let x = &blk[r * d..(r + 1) * d];
                let xn = norm_sq(x);
                let row = &dots[r * k..(r + 1) * k];
                let mut best = f32::INFINITY;
                let mut arg = 0usize;
                for (j, (&dp, &cn)) in row.iter().zip(&cnorms).enumerate() {
                    let v = cn - 2.0 * dp;
                    if v < best {
                        best = v;
                        arg = j;
                    }
                }
                asg[r] = arg as u32;
                dst[r] = (xn + best).max(0.0);
            }
        });
    (assign, dist)
}

/// `aᵀ a` for a row-major `n × d` matrix, accumulated in f64 blocks and summed in block order.
pub fn gram_f64(data: &[f32], d: usize) -> Vec<f64> {
    let partials: Vec<Vec<f64>> = data
        .par_chunks(4 * BLOCK_ROWS * d)
        .map(|blk| {
            let rows = blk.len() / d;
            let wide: Vec<f64> = blk.iter().map(|&v| v as f64).collect();
            let mut out = vec![0.0f64; d * d];
            // SAFETY: `wide` is rows × d; out is d × d.
            unsafe {
                matrixmultiply::dgemm(
                    d,
                    rows,
                    d,
                    1.0,
                    wide.as_ptr(),
                    1,
                    d as isize,
                    wide.as_ptr(),
                    d as isize,
                    1,
                    0.0,
                    out.as_mut_ptr(),
                    d as isize,
                    1,
                );
            }
            out
        })
        .collect();
    let mut total = vec![0.0f64; d * d];
    for p in &partials {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dots(a: &[f32], b: &[f32], d: usize) -> Vec<f32> {
        let mut out = Vec::new();
        for x in a.chunks(d) {
            for y in b.chunks(d) {
                out.push(x.iter().zip(y).map(|(p, q)| p * q).sum());
            }
        }
        out
    }

    #[test]
    fn dots_match_naive() {
        let d = 13;
        let a: Vec<f32> = (0..7 * d).map(|i| ((i * 37 % 11) as f32 - 5.0) * 0.3).collect();
        let b: Vec<f32> = (0..5 * d).map(|i| ((i * 17 % 7) as f32 - 3.0) * 0.7).collect();
        let mut out = vec![0.0; 35];
        dots_nt(&a, 7, &b, 5, d, &mut out);
        for (x, y) in out.iter().zip(naive_dots(&a, &b, d)) {
            assert!((x - y).abs() < 1e-4);
        }
        let m = matmul_nt(&a, 7, &b, 5, d);
        assert_eq!(m, out);
    }

    #[test]
    fn assignment_prefers_low_index_on_ties() {
        let centroids = [1.0, 0.0, -1.0, 0.0];
        let points = [0.0, 0.0, 0.9, 0.0];
        let (asg, dist) = assign_nearest(&points, &centroids, 2);
        assert_eq!(asg, vec![0, 0]);
        assert!((dist[0] - 1.0).abs() < 1e-6);
        assert!((dist[1] - 0.01).abs() < 1e-5);
    }

    #[test]
    fn gram_matches_naive() {
        let d = 3;
        let data: Vec<f32> = (0..30).map(|i| (i as f32 * 0.37).sin()).collect();
        let g = gram_f64(&data, d);
        for i in 0..d {
            for j in 0..d {
                let s: f64 = data.chunks(d).map(|r| r[i] as f64 * r[j] as f64).sum();
                assert!((g[i * d + j] - s).abs() < 1e-9);
            }
        }
    }
}
