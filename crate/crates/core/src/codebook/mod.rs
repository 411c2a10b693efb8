//! Stage codebooks and the two trainers.

mod train;

pub use train::{dimension_schedule, icl_stage, train_irvq, train_rvq, Trained, TrainReport};

use crate::clustering::Centroids;
use crate::error::{Error, Result};
use crate::linalg::{dots_nt, row_norms};

/// Largest supported codebook size; codes are stored as single bytes.
pub const MAX_K: usize = 256;

/// `M` stage codebooks of `K` codewords each, plus the inner products between codewords of
/// every pair of stages.
#[derive(Debug, Clone, PartialEq)]
pub struct CodebookSet {
    d: usize,
    k: usize,
    /// `M × K × d`
    books: Vec<f32>,
    /// `M × K` squared codeword norms.
    norms: Vec<f32>,
    /// `cross[b][a]` for `a < b` is the `K × K` table `c_a(i) · c_b(j)` at `i * K + j`.
    cross: Vec<Vec<Vec<f32>>>,
}

impl CodebookSet {
    /// A set with no stages yet.
    pub fn empty(d: usize, k: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("codebook dimension must be at least 1"));
        }
        if k == 0 || k > MAX_K {
            return Err(Error::invalid(format!("K={k} must be in 1..={MAX_K}")));
        }
        Ok(Self { d, k, books: Vec::new(), norms: Vec::new(), cross: Vec::new() })
    }

    /// Builds a set from `M × K × d` codewords, computing the cross tables.
    pub fn from_books(d: usize, k: usize, books: &[f32]) -> Result<Self> {
        let mut set = Self::empty(d, k)?;
        if !books.len().is_multiple_of(k * d) {
            return Err(Error::invalid(format!(
                "{} codeword values is not a whole number of {k}x{d} books",
                books.len()
            )));
        }
        for book in books.chunks_exact(k * d) {
            set.push_stage(Centroids::new(k, d, book.to_vec())?)?;
        }
        Ok(set)
    }

    /// Reassembles a set from stored parts without recomputing anything.
    ///
    /// `cross` holds the tables in `(a, b)` lexicographic order.
    pub fn from_parts(d: usize, m: usize, k: usize, books: Vec<f32>, cross: Vec<f32>) -> Result<Self> {
        let mut set = Self::empty(d, k)?;
        let pairs = m * m.saturating_sub(1) / 2;
        if books.len() != m * k * d || cross.len() != pairs * k * k {
            return Err(Error::Format(format!(
                "codebook payload sizes ({}, {}) do not match M={m} K={k} d={d}",
                books.len(),
                cross.len()
            )));
        }
        if books.iter().chain(&cross).any(|v| !v.is_finite()) {
            return Err(Error::Format("non-finite codebook value".into()));
        }
        set.norms = row_norms(&books, d);
        set.books = books;
        set.cross = (0..m).map(|b| vec![Vec::new(); b]).collect();
        let mut tables = cross.chunks_exact(k * k);
        for a in 0..m {
            for b in a + 1..m {
                set.cross[b][a] = tables.next().unwrap().to_vec();
            }
        }
        Ok(set)
    }

    /// Appends a stage and its cross tables against all earlier stages.
    pub fn push_stage(&mut self, book: Centroids) -> Result<()> {
        Error::check_dim(self.d, book.d())?;
        if book.k() != self.k {
            return Err(Error::invalid(format!("stage has {} codewords, expected {}", book.k(), self.k)));
        }
        let (k, d) = (self.k, self.d);
        let b = self.m();
        let tables = (0..b)
            .map(|a| {
                let mut t = vec![0.0f32; k * k];
                dots_nt(self.book(a), k, book.as_slice(), k, d, &mut t);
                t
            })
            .collect();
        self.norms.extend(row_norms(book.as_slice(), d));
        self.books.extend_from_slice(book.as_slice());
        self.cross.push(tables);
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.cross.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// All codewords, `M × K × d`.
    pub fn books(&self) -> &[f32] {
        &self.books
    }

    pub fn book(&self, m: usize) -> &[f32] {
        let size = self.k * self.d;
        &self.books[m * size..(m + 1) * size]
    }

    pub fn codeword(&self, m: usize, k: usize) -> &[f32] {
        let start = (m * self.k + k) * self.d;
        &self.books[start..start + self.d]
    }

    /// Squared norms of stage `m`'s codewords.
    pub fn norms(&self, m: usize) -> &[f32] {
        &self.norms[m * self.k..(m + 1) * self.k]
    }

    /// Table of `c_a(i) · c_b(j)` at `i * K + j`, for `a < b`.
    pub fn cross(&self, a: usize, b: usize) -> &[f32] {
        assert!(a < b, "cross tables are indexed with a < b");
        &self.cross[b][a]
    }

    pub fn cross_dot(&self, a: usize, i: usize, b: usize, j: usize) -> f32 {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => self.cross(a, b)[i * self.k + j],
            std::cmp::Ordering::Greater => self.cross(b, a)[j * self.k + i],
            std::cmp::Ordering::Equal => crate::linalg::dot(self.codeword(a, i), self.codeword(a, j)),
        }
    }

    /// Cross tables in `(a, b)` lexicographic order.
    pub fn cross_tables(&self) -> impl Iterator<Item = (usize, usize, &[f32])> {
        let m = self.m();
        (0..m).flat_map(move |a| (a + 1..m).map(move |b| (a, b, self.cross(a, b))))
    }

    /// `Σ_{a≠b} c_a · c_b` over the chosen codes.
    pub fn epsilon(&self, codes: &[u8]) -> f32 {
        let mut sum = 0.0f32;
        for b in 1..codes.len() {
            for a in 0..b {
                sum += self.cross(a, b)[codes[a] as usize * self.k + codes[b] as usize];
            }
        }
        2.0 * sum
    }

    /// Writes `Σ_m c_m(codes_m)` into `out`.
    pub fn reconstruct_into(&self, codes: &[u8], out: &mut [f32]) {
        out.fill(0.0);
        for (m, &c) in codes.iter().enumerate() {
            for (o, &v) in out.iter_mut().zip(self.codeword(m, c as usize)) {
                *o += v;
            }
        }
    }

    pub fn reconstruct(&self, codes: &[u8]) -> Vec<f32> {
        let mut out = vec![0.0; self.d];
        self.reconstruct_into(codes, &mut out);
        out
    }

    /// The first `m` stages.
    pub fn truncated(&self, m: usize) -> Self {
        let m = m.min(self.m());
        Self {
            d: self.d,
            k: self.k,
            books: self.books[..m * self.k * self.d].to_vec(),
            norms: self.norms[..m * self.k].to_vec(),
            cross: self.cross[..m].to_vec(),
        }
    }
}

/// Iteration budgets for the k-means runs inside training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansBudget {
    /// Iterations for each warm-start round before the full-dimensional one.
    pub round_iters: usize,
    /// Iterations for the full-dimensional round (and for plain RVQ stages).
    pub final_iters: usize,
    pub tol: f64,
}

impl Default for KMeansBudget {
    fn default() -> Self {
        Self { round_iters: 100, final_iters: 100, tol: 1e-4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    /// Number of stages.
    pub m: usize,
    /// Codewords per stage.
    pub k: usize,
    /// Length of the PCA dimension schedule.
    pub schedule_len: usize,
    /// Beam width for multi-path encoding.
    pub beam: usize,
    pub budget: KMeansBudget,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { m: 8, k: 256, schedule_len: 10, beam: 30, budget: KMeansBudget::default(), seed: 0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::invalid("M must be at least 1"));
        }
        if self.k < 2 || self.k > MAX_K {
            return Err(Error::invalid(format!("K={} must be in 2..={MAX_K}", self.k)));
        }
        if self.schedule_len == 0 {
            return Err(Error::invalid("I must be at least 1"));
        }
        if self.beam == 0 {
            return Err(Error::invalid("L must be at least 1"));
        }
        if self.budget.tol.is_nan() || self.budget.tol < 0.0 {
            return Err(Error::invalid("k-means tolerance must be non-negative"));
        }
        Ok(())
    }
}
