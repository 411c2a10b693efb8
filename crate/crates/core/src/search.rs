//! Asymmetric distance computation over an encoded database.
//!
//! For a sum-of-codewords approximation `x̂ = Σ_m c_m` the squared distance to a query expands
//! to
//!
//! ```text
//! ‖q − x̂‖² = Σ_m ‖q − c_m‖² − (M − 1)‖q‖² + ε,    ε = Σ_{a≠b} c_a · c_b
//! ```
//!
//! The first term comes from per-query tables, ε is stored with each database vector.

use std::collections::BTreeMap;

use crate::codebook::CodebookSet;
use crate::dataset::{Dataset, GroundTruth};
use crate::encoding::encode_dataset;
use crate::error::{Error, Result};
use crate::linalg::{norm_sq, sq_dist};

/// Per-query distances to every codeword.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceTables {
    m: usize,
    k: usize,
    /// `M × K`, `‖q − c_m(k)‖²` at `m * K + k`.
    tables: Vec<f32>,
    q_norm_sq: f32,
}

impl DistanceTables {
    pub fn get(&self, m: usize, k: usize) -> f32 {
        self.tables[m * self.k + k]
    }

    pub fn stage(&self, m: usize) -> &[f32] {
        &self.tables[m * self.k..(m + 1) * self.k]
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn q_norm_sq(&self) -> f32 {
        self.q_norm_sq
    }
}

pub fn build_tables(q: &[f32], books: &CodebookSet) -> Result<DistanceTables> {
    Error::check_dim(books.d(), q.len())?;
    let (m, k) = (books.m(), books.k());
    let mut tables = Vec::with_capacity(m * k);
    for stage in 0..m {
        for j in 0..k {
            tables.push(sq_dist(q, books.codeword(stage, j)));
        }
    }
    Ok(DistanceTables { m, k, tables, q_norm_sq: norm_sq(q) })
}

/// `Σ_m tables[m][codes_m] − (M − 1)‖q‖² + ε`
#[inline]
pub fn adc_distance(tables: &DistanceTables, codes: &[u8], epsilon: f32) -> f32 {
    debug_assert_eq!(codes.len(), tables.m);
    let mut sum = 0.0f32;
    for (m, &c) in codes.iter().enumerate() {
        sum += tables.tables[m * tables.k + c as usize];
    }
    sum - (tables.m as f32 - 1.0) * tables.q_norm_sq + epsilon
}

/// ε values uniformly quantized to `bits` bits over `[min, max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedEpsilons {
    pub bits: u8,
    pub scale: f32,
    pub offset: f32,
    pub codes: Vec<u8>,
}

impl QuantizedEpsilons {
    #[inline]
    pub fn value(&self, i: usize) -> f32 {
        self.offset + self.scale * self.codes[i] as f32
    }
}

pub fn quantize_epsilons(exact: &[f32], bits: u8) -> Result<QuantizedEpsilons> {
    if !(1..=8).contains(&bits) {
        return Err(Error::invalid(format!("epsilon bits {bits} must be in 1..=8")));
    }
    if exact.is_empty() {
        return Err(Error::invalid("no epsilon values to quantize"));
    }
    if exact.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite epsilon value"));
    }
    let lo = exact.iter().copied().fold(f32::INFINITY, f32::min);
    let hi = exact.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let levels = ((1u32 << bits) - 1) as f32;
    let scale = (hi - lo) / levels;
    let codes = if scale > 0.0 {
        exact.iter().map(|&e| ((e - lo) / scale).round().clamp(0.0, levels) as u8).collect()
    } else {
        vec![0; exact.len()]
    };
    Ok(QuantizedEpsilons { bits, scale, offset: lo, codes })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Epsilons {
    Exact(Vec<f32>),
    Quantized(QuantizedEpsilons),
}

impl Epsilons {
    #[inline]
    pub fn value(&self, i: usize) -> f32 {
        match self {
            Epsilons::Exact(v) => v[i],
            Epsilons::Quantized(q) => q.value(i),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Epsilons::Exact(v) => v.len(),
            Epsilons::Quantized(q) => q.codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `n` codes of `M` bytes plus one ε per vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedDatabase {
    n: usize,
    m: usize,
    k: usize,
    codes: Vec<u8>,
    epsilons: Epsilons,
}

impl EncodedDatabase {
    pub fn new(m: usize, k: usize, codes: Vec<u8>, epsilons: Epsilons) -> Result<Self> {
        if m == 0 || k == 0 || k > 256 {
            return Err(Error::invalid(format!("invalid code shape M={m} K={k}")));
        }
        if !codes.len().is_multiple_of(m) {
            return Err(Error::invalid("code buffer is not a whole number of rows"));
        }
        let n = codes.len() / m;
        if n == 0 || epsilons.len() != n {
            return Err(Error::invalid(format!("{} epsilons for {n} codes", epsilons.len())));
        }
        if let Some(bad) = codes.iter().find(|&&c| c as usize >= k) {
            return Err(Error::invalid(format!("code {bad} out of range for K={k}")));
        }
        Ok(Self { n, m, k, codes, epsilons })
    }

    /// Encodes `data` with beam width `beam`; `epsilon_bits = None` keeps exact ε.
    pub fn encode(
        data: &Dataset,
        books: &CodebookSet,
        beam: usize,
        epsilon_bits: Option<u8>,
    ) -> Result<Self> {
        let (codes, eps) = encode_dataset(data, books, beam)?;
        let epsilons = match epsilon_bits {
            None => Epsilons::Exact(eps),
            Some(bits) => Epsilons::Quantized(quantize_epsilons(&eps, bits)?),
        };
        Self::new(books.m(), books.k(), codes, epsilons)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn codes(&self) -> &[u8] {
        &self.codes
    }

    pub fn code(&self, i: usize) -> &[u8] {
        &self.codes[i * self.m..(i + 1) * self.m]
    }

    pub fn epsilons(&self) -> &Epsilons {
        &self.epsilons
    }

    /// Same codes with ε re-quantized (or kept exact when `bits` is `None`).
    pub fn with_epsilon_bits(&self, bits: Option<u8>) -> Result<Self> {
        let exact: Vec<f32> = (0..self.n).map(|i| self.epsilons.value(i)).collect();
        let epsilons = match bits {
            None => Epsilons::Exact(exact),
            Some(b) => Epsilons::Quantized(quantize_epsilons(&exact, b)?),
        };
        Self::new(self.m, self.k, self.codes.clone(), epsilons)
    }
}

/// The `r` database entries nearest to `q` under ADC, nearest first, lower index on ties.
pub fn linear_scan(q: &[f32], db: &EncodedDatabase, books: &CodebookSet, r: usize) -> Result<Vec<u32>> {
    Ok(linear_scan_scored(q, db, books, r)?.into_iter().map(|(i, _)| i).collect())
}

/// [`linear_scan`] with the ADC distance of each hit.
pub fn linear_scan_scored(
    q: &[f32],
    db: &EncodedDatabase,
    books: &CodebookSet,
    r: usize,
) -> Result<Vec<(u32, f32)>> {
    if r == 0 || r > db.n() {
        return Err(Error::invalid(format!("R={r} must be in 1..={}", db.n())));
    }
    if db.m() != books.m() || db.k() != books.k() {
        return Err(Error::invalid(format!(
            "database codes (M={}, K={}) do not match codebooks (M={}, K={})",
            db.m(),
            db.k(),
            books.m(),
            books.k()
        )));
    }
    let tables = build_tables(q, books)?;
    let mut scored: Vec<(f32, u32)> = (0..db.n())
        .map(|i| (adc_distance(&tables, db.code(i), db.epsilons.value(i)), i as u32))
        .collect();
    let by = |a: &(f32, u32), b: &(f32, u32)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if r < scored.len() {
        scored.select_nth_unstable_by(r - 1, by);
        scored.truncate(r);
    }
    scored.sort_unstable_by(by);
    Ok(scored.into_iter().map(|(d, i)| (i, d)).collect())
}

/// Fraction of queries whose true nearest neighbor is among the first `R` results, per `R`.
pub fn recall_at_r(
    results: &[Vec<u32>],
    gt: &GroundTruth,
    r_values: &[usize],
) -> Result<BTreeMap<usize, f64>> {
    if results.len() != gt.len() {
        return Err(Error::invalid(format!(
            "{} result lists for {} ground-truth queries",
            results.len(),
            gt.len()
        )));
    }
    if results.is_empty() {
        return Err(Error::invalid("no queries"));
    }
    let depth = results.iter().map(Vec::len).min().unwrap_or(0);
    let mut out = BTreeMap::new();
    for &r in r_values {
        if r == 0 || r > depth {
            return Err(Error::invalid(format!("R={r} exceeds the retrieved depth {depth}")));
        }
        let hits = results
            .iter()
            .zip(&gt.neighbors)
            .filter(|(res, truth)| truth.first().is_some_and(|t| res[..r].contains(t)))
            .count();
        out.insert(r, hits as f64 / results.len() as f64);
    }
    Ok(out)
}
