//! Vector corpora: fvecs/bvecs/ivecs files, seeded splits and exact ground truth.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::sq_dist;
use crate::rng;

/// Dense row-major `n × d` matrix of finite f32 values.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    d: usize,
    data: Vec<f32>,
}

impl Dataset {
    pub fn new(n: usize, d: usize, data: Vec<f32>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::invalid(format!("dataset must be non-empty, got {n}x{d}")));
        }
        if data.len() != n * d {
            return Err(Error::invalid(format!(
                "dataset buffer has {} values, expected {n}x{d}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite value in row {}", pos / d)));
        }
        Ok(Self { n, d, data })
    }

    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * d);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != d {
                return Err(Error::invalid(format!("row {i} has length {}, expected {d}", r.len())));
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), d, data)
    }

    pub fn n(&self) -> usize {
        self.n
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

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f32> {
        self.data.chunks_exact(self.d)
    }

    /// New dataset holding the given rows, in order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(indices.len() * self.d);
        for &i in indices {
            if i >= self.n {
                return Err(Error::invalid(format!("row index {i} out of range for n={}", self.n)));
            }
            data.extend_from_slice(self.row(i));
        }
        Self::new(indices.len(), self.d, data)
    }

    /// First `n` rows.
    pub fn head(&self, n: usize) -> Result<Self> {
        let n = n.min(self.n);
        Self::new(n, self.d, self.data[..n * self.d].to_vec())
    }
}

/// Per-query nearest base indices, nearest first.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub neighbors: Vec<Vec<u32>>,
    /// Squared distances matching `neighbors`; empty when loaded from an ivecs file.
    pub distances: Vec<Vec<f32>>,
}

impl GroundTruth {
    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn depth(&self) -> usize {
        self.neighbors.iter().map(Vec::len).min().unwrap_or(0)
    }
}

fn read_all(path: &Path) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut buf)?;
    Ok(buf)
}

/// Walks `[i32 dim][dim * elem]` records, handing each payload to `visit`.
fn parse_records(
    path: &Path,
    bytes: &[u8],
    elem: usize,
    mut visit: impl FnMut(usize, u64, &[u8]) -> Result<()>,
) -> Result<(usize, usize)> {
    let mut offset = 0usize;
    let mut record = 0usize;
    let mut dim = None;
    while offset < bytes.len() {
        if bytes.len() - offset < 4 {
            return Err(Error::TruncatedRecord { path: path.into(), record, offset: offset as u64 });
        }
        let header = i32::from_le_bytes(bytes[offset..offset + 4].try_into().unwrap());
        if header <= 0 {
            return Err(Error::InvalidDimHeader {
                path: path.into(),
                record,
                offset: offset as u64,
                found: header,
            });
        }
        let found = header as usize;
        match dim {
            None => dim = Some(found),
            Some(expected) if expected != found => {
                return Err(Error::InconsistentDim {
                    path: path.into(),
                    record,
                    offset: offset as u64,
                    expected,
                    found,
                })
            }
            _ => {}
        }
        let start = offset + 4;
        let end = start + found * elem;
        if end > bytes.len() {
            return Err(Error::TruncatedRecord { path: path.into(), record, offset: offset as u64 });
        }
        visit(record, start as u64, &bytes[start..end])?;
        offset = end;
        record += 1;
    }
    match dim {
        Some(d) => Ok((record, d)),
        None => Err(Error::ZeroRecords { path: path.into() }),
    }
}

pub fn load_fvecs(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let bytes = read_all(path)?;
    let mut data = Vec::with_capacity(bytes.len() / 4);
    let (n, d) = parse_records(path, &bytes, 4, |record, start, payload| {
        for (i, chunk) in payload.chunks_exact(4).enumerate() {
            let v = f32::from_le_bytes(chunk.try_into().unwrap());
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    path: path.into(),
                    record,
                    offset: start + 4 * i as u64,
                });
            }
            data.push(v);
        }
        Ok(())
    })?;
    Dataset::new(n, d, data)
}

pub fn load_bvecs(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let bytes = read_all(path)?;
    let mut data = Vec::with_capacity(bytes.len());
    let (n, d) = parse_records(path, &bytes, 1, |_, _, payload| {
        data.extend(payload.iter().map(|&b| b as f32));
        Ok(())
    })?;
    Dataset::new(n, d, data)
}

/// Loads by extension: `.bvecs` as bytes, anything else as fvecs.
pub fn load_vectors(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some("bvecs") => load_bvecs(path),
        _ => load_fvecs(path),
    }
}

pub fn write_fvecs(path: impl AsRef<Path>, ds: &Dataset) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_fvecs_to(&mut w, ds)?;
    w.flush()?;
    Ok(())
}

pub fn write_fvecs_to<W: Write>(w: &mut W, ds: &Dataset) -> Result<()> {
    let header = (ds.d() as i32).to_le_bytes();
    for row in ds.rows() {
        w.write_all(&header)?;
        for v in row {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Writes the neighbor lists as ivecs, the usual ground-truth container.
pub fn write_ivecs(path: impl AsRef<Path>, gt: &GroundTruth) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for row in &gt.neighbors {
        w.write_all(&(row.len() as i32).to_le_bytes())?;
        for &v in row {
            w.write_all(&(v as i32).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_ivecs(path: impl AsRef<Path>) -> Result<GroundTruth> {
    let path = path.as_ref();
    let bytes = read_all(path)?;
    let mut neighbors = Vec::new();
    parse_records(path, &bytes, 4, |record, start, payload| {
        let mut row = Vec::with_capacity(payload.len() / 4);
        for (i, chunk) in payload.chunks_exact(4).enumerate() {
            let v = i32::from_le_bytes(chunk.try_into().unwrap());
            if v < 0 {
                return Err(Error::Format(format!(
                    "{}: negative index in record {record} at byte offset {}",
                    path.display(),
                    start + 4 * i as u64
                )));
            }
            row.push(v as u32);
        }
        neighbors.push(row);
        Ok(())
    })?;
    Ok(GroundTruth { neighbors, distances: Vec::new() })
}

/// Partitions the rows into `train_n` training rows and the rest.
///
/// The row order is a Fisher–Yates shuffle of `0..n` (see [`rng`]); the first `train_n`
/// shuffled rows form the training set and the remainder keeps its original relative order.
pub fn split(ds: &Dataset, train_n: usize, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train_idx, rest_idx) = split_indices(ds.n(), train_n, seed)?;
    Ok((ds.select(&train_idx)?, ds.select(&rest_idx)?))
}

pub fn split_indices(n: usize, train_n: usize, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if train_n == 0 || train_n >= n {
        return Err(Error::invalid(format!("train size {train_n} must be in 1..{n}")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    rng::shuffle(&mut rng::seeded(seed), &mut perm);
    let train = perm[..train_n].to_vec();
    let mut rest = perm[train_n..].to_vec();
    rest.sort_unstable();
    Ok((train, rest))
}

/// Brute-force k nearest base rows per query; ties go to the lower index.
pub fn exact_knn(base: &Dataset, queries: &Dataset, k: usize) -> Result<GroundTruth> {
    Error::check_dim(base.d(), queries.d())?;
    if k == 0 || k > base.n() {
        return Err(Error::invalid(format!("k={k} must be in 1..={}", base.n())));
    }
    let rows: Vec<(Vec<u32>, Vec<f32>)> = (0..queries.n())
        .into_par_iter()
        .map(|qi| {
            let q = queries.row(qi);
            let mut scored: Vec<(f32, u32)> =
                base.rows().enumerate().map(|(i, x)| (sq_dist(q, x), i as u32)).collect();
            let by = |a: &(f32, u32), b: &(f32, u32)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            if k < scored.len() {
                scored.select_nth_unstable_by(k - 1, by);
                scored.truncate(k);
            }
            scored.sort_unstable_by(by);
            scored.into_iter().map(|(d, i)| (i, d)).unzip()
        })
        .collect();
    let (neighbors, distances) = rows.into_iter().unzip();
    Ok(GroundTruth { neighbors, distances })
}
