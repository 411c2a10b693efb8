//! k-means and principal component analysis.

mod kmeans;
mod pca;

pub use kmeans::{kmeans, KMeansInit, KMeansParams, KMeansResult};
pub use pca::{pad_and_lift, pca, project, PcaBasis};

use crate::error::{Error, Result};

/// `k × d` centroid matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Centroids {
    k: usize,
    d: usize,
    data: Vec<f32>,
}

impl Centroids {
    pub fn new(k: usize, d: usize, data: Vec<f32>) -> Result<Self> {
        if k == 0 || d == 0 || data.len() != k * d {
            return Err(Error::invalid(format!(
                "centroid buffer of {} values does not form {k}x{d}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite centroid value"));
        }
        Ok(Self { k, d, data })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    /// Appends zero coordinates so every centroid has `d` dimensions.
    pub fn zero_pad(&self, d: usize) -> Result<Self> {
        if d < self.d {
            return Err(Error::invalid(format!("cannot pad {}-d centroids to {d}", self.d)));
        }
        let mut data = vec![0.0; self.k * d];
        for (dst, src) in data.chunks_exact_mut(d).zip(self.data.chunks_exact(self.d)) {
            dst[..self.d].copy_from_slice(src);
        }
        Ok(Self { k: self.k, d, data })
    }
}
