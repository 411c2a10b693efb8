use nalgebra::{DMatrix, SymmetricEigen};

use super::Centroids;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{gram_f64, matmul_nt};

const EIGEN_EPS: f64 = 1e-12;
const EIGEN_MAX_ITERS: usize = 10_000;

/// Orthonormal principal directions of a point set.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaBasis {
    d: usize,
    /// `d × d`, row `i` is the i-th principal direction.
    components: Vec<f32>,
    /// Eigenvalue of each row, non-increasing.
    variances: Vec<f64>,
    /// Used for the covariance estimate only; projections are not centered.
    mean: Vec<f32>,
}

impl PcaBasis {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn components(&self) -> &[f32] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &[f32] {
        &self.components[i * self.d..(i + 1) * self.d]
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn mean(&self) -> &[f32] {
        &self.mean
    }
}

/// Eigen-decomposition of the covariance matrix of `points`.
///
/// Directions with zero variance still come back as an orthonormal completion of the basis.
/// Each component's sign is fixed so its largest-magnitude coordinate is positive.
pub fn pca(points: &Dataset) -> Result<PcaBasis> {
    let (n, d) = (points.n(), points.d());
    if n < 2 {
        return Err(Error::invalid(format!("pca needs at least 2 points, got {n}")));
    }
    let mut mean = vec![0.0f64; d];
    for row in points.rows() {
        for (m, &v) in mean.iter_mut().zip(row) {
            *m += v as f64;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let gram = gram_f64(points.as_slice(), d);
    let cov = DMatrix::from_fn(d, d, |i, j| {
        (gram[i * d + j] - n as f64 * mean[i] * mean[j]) / (n - 1) as f64
    });
    let eig = SymmetricEigen::try_new(cov, EIGEN_EPS, EIGEN_MAX_ITERS)
        .ok_or_else(|| Error::invalid("covariance eigen-decomposition did not converge"))?;

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let mut components = Vec::with_capacity(d * d);
    let mut variances = Vec::with_capacity(d);
    for &c in &order {
        let col = eig.eigenvectors.column(c);
        let pivot = col.iter().copied().fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        components.extend(col.iter().map(|&v| (sign * v) as f32));
        variances.push(eig.eigenvalues[c].max(0.0));
    }
    Ok(PcaBasis { d, components, variances, mean: mean.into_iter().map(|m| m as f32).collect() })
}

/// Coordinates of `points` along the first `top` principal directions (no centering).
pub fn project(basis: &PcaBasis, points: &Dataset, top: usize) -> Result<Dataset> {
    Error::check_dim(basis.d, points.d())?;
    if top == 0 || top > basis.d {
        return Err(Error::invalid(format!("projection size {top} must be in 1..={}", basis.d)));
    }
    let out = matmul_nt(
        points.as_slice(),
        points.n(),
        &basis.components[..top * basis.d],
        top,
        basis.d,
    );
    Dataset::new(points.n(), top, out)
}

/// Zero-pads centroids given in the leading PCA coordinates and maps them back to data space.
pub fn pad_and_lift(basis: &PcaBasis, centroids: &Centroids, full_d: usize) -> Result<Centroids> {
    Error::check_dim(basis.d, full_d)?;
    let t = centroids.d();
    if t > full_d {
        return Err(Error::invalid(format!("{t}-d centroids exceed target dimension {full_d}")));
    }
    // missing coordinates are zero, so only the first t components contribute
    let mut out = vec![0.0f32; centroids.k() * full_d];
    for (dst, c) in out.chunks_exact_mut(full_d).zip(centroids.as_slice().chunks_exact(t)) {
        for (i, &coef) in c.iter().enumerate() {
            if coef == 0.0 {
                continue;
            }
            for (o, &r) in dst.iter_mut().zip(basis.component(i)) {
                *o += coef * r;
            }
        }
    }
    Centroids::new(centroids.k(), full_d, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dot, sq_dist_f64};
    use crate::rng;

    fn random(n: usize, d: usize, seed: u64) -> Dataset {
        let mut r = rng::seeded(seed);
        // correlated coordinates so the basis is not axis-aligned
        let mut data = Vec::with_capacity(n * d);
        for _ in 0..n {
            let base = rng::unit_f64(&mut r) as f32 * 4.0 - 2.0;
            for j in 0..d {
                data.push(base * (j as f32 + 1.0) * 0.5 + rng::unit_f64(&mut r) as f32 - 0.5);
            }
        }
        Dataset::new(n, d, data).unwrap()
    }

    fn assert_orthonormal(b: &PcaBasis) {
        for i in 0..b.d() {
            for j in 0..b.d() {
                let v = dot(b.component(i), b.component(j));
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((v - want).abs() <= 1e-4, "r{i}·r{j} = {v}");
            }
        }
        assert!(b.variances().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn x_axis_data() {
        let pts = Dataset::from_rows(&[[-2.0f32, 0.0, 0.0], [1.0, 0.0, 0.0], [3.0, 0.0, 0.0], [0.5, 0.0, 0.0]])
            .unwrap();
        let b = pca(&pts).unwrap();
        assert_orthonormal(&b);
        let first = b.component(0);
        assert!((first[0].abs() - 1.0).abs() < 1e-6);
        assert!(b.variances()[1].abs() < 1e-9);

        let proj = project(&b, &pts, 1).unwrap();
        for (p, x) in proj.as_slice().iter().zip(pts.rows()) {
            assert!((p.abs() - x[0].abs()).abs() < 1e-5);
        }
    }

    #[test]
    fn isotropic_data_gives_any_orthonormal_basis() {
        let pts = Dataset::from_rows(&[[1.0f32, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]).unwrap();
        let b = pca(&pts).unwrap();
        assert_orthonormal(&b);
        assert!((b.variances()[0] - b.variances()[1]).abs() < 1e-9);
    }

    #[test]
    fn three_point_set_matches_closed_form() {
        let pts = Dataset::from_rows(&[[0.0f32, 0.0], [2.0, 1.0], [4.0, 5.0]]).unwrap();
        // Oracle: sample covariance and the roots of its characteristic polynomial.
        let rows: Vec<[f64; 2]> = pts.rows().map(|r| [r[0] as f64, r[1] as f64]).collect();
        let mx = rows.iter().map(|r| r[0]).sum::<f64>() / 3.0;
        let my = rows.iter().map(|r| r[1]).sum::<f64>() / 3.0;
        let sxx = rows.iter().map(|r| (r[0] - mx).powi(2)).sum::<f64>() / 2.0;
        let syy = rows.iter().map(|r| (r[1] - my).powi(2)).sum::<f64>() / 2.0;
        let sxy = rows.iter().map(|r| (r[0] - mx) * (r[1] - my)).sum::<f64>() / 2.0;
        let tr = sxx + syy;
        let det = sxx * syy - sxy * sxy;
        let disc = (tr * tr / 4.0 - det).sqrt();
        let (l1, l2) = (tr / 2.0 + disc, tr / 2.0 - disc);
        // eigenvector of l1: (sxy, l1 - sxx)
        let (vx, vy) = (sxy, l1 - sxx);
        let norm = (vx * vx + vy * vy).sqrt();

        let b = pca(&pts).unwrap();
        assert!((b.variances()[0] - l1).abs() < 1e-9);
        assert!((b.variances()[1] - l2).abs() < 1e-9);
        let c = b.component(0);
        let cos = (c[0] as f64 * vx + c[1] as f64 * vy) / norm;
        assert!((cos.abs() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn full_rotation_preserves_distances() {
        let pts = random(200, 6, 4);
        let b = pca(&pts).unwrap();
        assert_orthonormal(&b);
        let rot = project(&b, &pts, 6).unwrap();
        for i in 0..20 {
            for j in 0..20 {
                let before = sq_dist_f64(pts.row(i), pts.row(j));
                let after = sq_dist_f64(rot.row(i), rot.row(j));
                assert!((before - after).abs() <= 1e-3 * before.max(1e-3));
            }
        }
    }

    #[test]
    fn partial_projection_matches_matmul() {
        let pts = random(30, 4, 8);
        let b = pca(&pts).unwrap();
        let proj = project(&b, &pts, 2).unwrap();
        for (i, x) in pts.rows().enumerate() {
            for t in 0..2 {
                let want: f64 =
                    (0..4).map(|j| x[j] as f64 * b.component(t)[j] as f64).sum();
                assert!((proj.row(i)[t] as f64 - want).abs() < 1e-4);
            }
        }
        assert!(project(&b, &pts, 0).is_err());
        assert!(project(&b, &pts, 5).is_err());
    }

    #[test]
    fn lift_round_trip_and_padding() {
        let pts = random(50, 3, 12);
        let b = pca(&pts).unwrap();
        let cents = Centroids::new(4, 3, pts.as_slice()[..12].to_vec()).unwrap();
        let as_ds = Dataset::new(4, 3, cents.as_slice().to_vec()).unwrap();
        let in_pca = project(&b, &as_ds, 3).unwrap();
        let lifted =
            pad_and_lift(&b, &Centroids::new(4, 3, in_pca.into_vec()).unwrap(), 3).unwrap();
        for (a, c) in lifted.as_slice().iter().zip(cents.as_slice()) {
            assert!((a - c).abs() < 1e-4);
        }

        // 2-d subspace centroids lifted through a 3-d basis: compare with explicit Aᵀ·[c; 0]
        let sub = Centroids::new(2, 2, vec![1.5, -0.5, 0.25, 2.0]).unwrap();
        let lifted = pad_and_lift(&b, &sub, 3).unwrap();
        for i in 0..2 {
            let padded = [sub.row(i)[0] as f64, sub.row(i)[1] as f64, 0.0];
            for j in 0..3 {
                let want: f64 = (0..3).map(|t| padded[t] * b.component(t)[j] as f64).sum();
                assert!((lifted.row(i)[j] as f64 - want).abs() < 1e-5);
            }
        }
        assert!(pad_and_lift(&b, &Centroids::new(1, 4, vec![0.0; 4]).unwrap(), 3).is_err());
    }

    #[test]
    fn axis_basis_zero_pads() {
        // diagonal covariance with distinct variances: the basis is exactly {e_x, e_y}
        let pts = Dataset::from_rows(&[[-3.0f32, 0.0], [3.0, 0.0], [0.0, 0.5], [0.0, -0.5]]).unwrap();
        let b = pca(&pts).unwrap();
        assert_eq!(b.component(0), &[1.0, 0.0]);
        assert_eq!(b.component(1), &[0.0, 1.0]);
        let lifted = pad_and_lift(&b, &Centroids::new(1, 1, vec![2.5]).unwrap(), 2).unwrap();
        assert_eq!(lifted.row(0), &[2.5, 0.0]);
    }

    #[test]
    fn too_few_points() {
        let pts = Dataset::from_rows(&[[1.0f32, 2.0]]).unwrap();
        assert!(pca(&pts).is_err());
    }
}
