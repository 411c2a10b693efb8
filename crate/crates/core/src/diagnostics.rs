//! Code statistics: per-stage entropy, pairwise mutual information and distortion.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::codebook::CodebookSet;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{sq_dist_f64, BLOCK_ROWS};

fn xlog2x(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

fn histogram(codes: &[u8], m: usize, stage: usize) -> [u64; 256] {
    let mut h = [0u64; 256];
    for row in codes.chunks_exact(m) {
        h[row[stage] as usize] += 1;
    }
    h
}

/// Entropy in bits of the empirical code distribution at each stage of `n × m` codes.
pub fn entropy_per_stage(codes: &[u8], m: usize) -> Vec<f64> {
    if m == 0 || codes.len() < m {
        return vec![0.0; m];
    }
    let n = (codes.len() / m) as f64;
    (0..m)
        .map(|s| {
            let h = histogram(codes, m, s);
            // + 0.0 turns a -0.0 into 0.0
            -h.iter().map(|&c| xlog2x(c as f64 / n)).sum::<f64>() + 0.0
        })
        .collect()
}

/// `m × m` matrix of empirical mutual information in bits; the diagonal holds the entropies.
pub fn mutual_information(codes: &[u8], m: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * m];
    if m == 0 || codes.len() < m {
        return out;
    }
    let n = (codes.len() / m) as f64;
    let hist: Vec<[u64; 256]> = (0..m).map(|s| histogram(codes, m, s)).collect();
    let entropy = entropy_per_stage(codes, m);
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let mut joint = vec![0u64; 256 * 256];
            for row in codes.chunks_exact(m) {
                joint[row[i] as usize * 256 + row[j] as usize] += 1;
            }
            let mut mi = 0.0;
            for (idx, &c) in joint.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                let pij = c as f64 / n;
                let pi = hist[i][idx / 256] as f64 / n;
                let pj = hist[j][idx % 256] as f64 / n;
                mi += pij * (pij / (pi * pj)).log2();
            }
            mi.max(0.0)
        })
        .collect();
    for (&(i, j), &v) in pairs.iter().zip(&values) {
        out[i * m + j] = v;
        out[j * m + i] = v;
    }
    for s in 0..m {
        out[s * m + s] = entropy[s];
    }
    out
}

fn check_codes(data: &Dataset, books: &CodebookSet, codes: &[u8]) -> Result<()> {
    Error::check_dim(books.d(), data.d())?;
    if codes.len() != data.n() * books.m() {
        return Err(Error::invalid(format!(
            "{} codes for {} vectors of {} stages",
            codes.len(),
            data.n(),
            books.m()
        )));
    }
    if codes.iter().any(|&c| c as usize >= books.k()) {
        return Err(Error::invalid("code out of range for the codebook size"));
    }
    Ok(())
}

/// Mean of `‖x − Σ_m c_m(codes_m)‖²` over the rows of `data`.
pub fn quantization_error(data: &Dataset, books: &CodebookSet, codes: &[u8]) -> Result<f64> {
    Ok(*stage_distortion(data, books, codes)?.last().unwrap_or(&mean_norm_sq(data)))
}

/// Mean squared error of the partial reconstruction after each stage.
pub fn stage_distortion(data: &Dataset, books: &CodebookSet, codes: &[u8]) -> Result<Vec<f64>> {
    check_codes(data, books, codes)?;
    let (d, m) = (data.d(), books.m());
    let partial: Vec<Vec<f64>> = data
        .as_slice()
        .par_chunks(BLOCK_ROWS * d)
        .zip(codes.par_chunks(BLOCK_ROWS * m.max(1)))
        .map(|(blk, cs)| {
            let mut sums = vec![0.0f64; m];
            let mut recon = vec![0.0f32; d];
            for (x, c) in blk.chunks_exact(d).zip(cs.chunks_exact(m.max(1))) {
                recon.fill(0.0);
                for s in 0..m {
                    for (r, &w) in recon.iter_mut().zip(books.codeword(s, c[s] as usize)) {
                        *r += w;
                    }
                    sums[s] += sq_dist_f64(x, &recon);
                }
            }
            sums
        })
        .collect();
    let mut total = vec![0.0f64; m];
    for p in &partial {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    Ok(total.into_iter().map(|v| v / data.n() as f64).collect())
}

fn mean_norm_sq(data: &Dataset) -> f64 {
    data.as_slice().iter().map(|&v| v as f64 * v as f64).sum::<f64>() / data.n() as f64
}

/// Search quality and code statistics of one evaluation run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalReport {
    pub recall_at: BTreeMap<usize, f64>,
    /// Empty when the original vectors were not available.
    pub per_stage_distortion: Vec<f64>,
    pub entropy_bits: Vec<f64>,
    /// `M × M`, row-major.
    pub mutual_info_bits: Vec<f64>,
    pub queries: usize,
    pub search_secs: f64,
}

impl EvalReport {
    pub fn stages(&self) -> usize {
        self.entropy_bits.len()
    }

    pub fn time_per_query_us(&self) -> f64 {
        if self.queries == 0 {
            0.0
        } else {
            self.search_secs * 1e6 / self.queries as f64
        }
    }

    /// Human-readable summary.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        if !self.recall_at.is_empty() {
            let _ = writeln!(s, "recall@R over {} queries:", self.queries);
            for (r, v) in &self.recall_at {
                let _ = writeln!(s, "  R={r:<5} {v:.4}");
            }
            let _ = writeln!(s, "search time: {:.1} us/query", self.time_per_query_us());
        }
        if !self.per_stage_distortion.is_empty() || !self.entropy_bits.is_empty() {
            let _ = writeln!(s, "stage  distortion      entropy(bits)");
            for m in 0..self.stages().max(self.per_stage_distortion.len()) {
                let dist = self.per_stage_distortion.get(m).map_or("-".to_string(), |v| format!("{v:.6}"));
                let ent = self.entropy_bits.get(m).map_or("-".to_string(), |v| format!("{v:.4}"));
                let _ = writeln!(s, "{:<6} {dist:<15} {ent}", m + 1);
            }
        }
        let m = self.stages();
        if m > 1 && self.mutual_info_bits.len() == m * m {
            let _ = writeln!(s, "mutual information (bits):");
            for i in 0..m {
                let row: Vec<String> = (0..m).map(|j| format!("{:.3}", self.mutual_info_bits[i * m + j])).collect();
                let _ = writeln!(s, "  {}", row.join(" "));
            }
        }
        s
    }

    /// One metric per line: `name<TAB>parameters<TAB>value`.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        for (r, v) in &self.recall_at {
            let _ = writeln!(s, "recall\tR={r}\t{v}");
        }
        for (m, v) in self.per_stage_distortion.iter().enumerate() {
            let _ = writeln!(s, "distortion\tstage={}\t{v}", m + 1);
        }
        for (m, v) in self.entropy_bits.iter().enumerate() {
            let _ = writeln!(s, "entropy_bits\tstage={}\t{v}", m + 1);
        }
        let m = self.stages();
        if self.mutual_info_bits.len() == m * m {
            for i in 0..m {
                for j in 0..m {
                    let _ = writeln!(s, "mutual_info_bits\ti={},j={}\t{}", i + 1, j + 1, self.mutual_info_bits[i * m + j]);
                }
            }
        }
        if self.queries > 0 {
            let _ = writeln!(s, "queries\t-\t{}", self.queries);
            let _ = writeln!(s, "time_per_query_us\t-\t{}", self.time_per_query_us());
        }
        s
    }
}
