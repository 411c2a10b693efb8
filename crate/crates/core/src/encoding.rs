//! Sequential (greedy) and multi-path (beam) encoding against a [`CodebookSet`].
//!
//! Multi-path encoding keeps the `L` best partial sums per vector. Extending a partial sum
//! `x̂` with codeword `c` is scored without touching `x̂` itself:
//!
//! ```text
//! ‖x − x̂ − c‖² = ‖x − x̂‖² + (‖c‖² − 2 x·c) + 2 c·x̂
//! ```
//!
//! where `x·c` is computed once per codeword and `c·x̂` is a sum of lookups into the
//! codebook cross tables.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::codebook::CodebookSet;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{dots_nt, norm_sq, sq_dist, BLOCK_ROWS};

/// One partial encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub codes: Vec<u8>,
    /// `‖x − Σ chosen codewords‖²`
    pub err: f32,
    /// `Σ_{a<b} c_a · c_b` over the chosen codewords.
    pub cross: f32,
}

/// The best partial encodings of one vector after the same number of stages, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateList {
    stages: usize,
    codes: Vec<u8>,
    errs: Vec<f32>,
    crosses: Vec<f32>,
}

impl CandidateList {
    /// The empty encoding, whose error is `‖x‖²`.
    pub fn root(x_norm_sq: f32) -> Self {
        Self { stages: 0, codes: Vec::new(), errs: vec![x_norm_sq], crosses: vec![0.0] }
    }

    pub fn from_candidates(cands: &[Candidate]) -> Result<Self> {
        let stages = cands.first().map_or(0, |c| c.codes.len());
        if cands.is_empty() || cands.iter().any(|c| c.codes.len() != stages) {
            return Err(Error::invalid("candidates must be non-empty and share one stage count"));
        }
        Ok(Self {
            stages,
            codes: cands.iter().flat_map(|c| c.codes.iter().copied()).collect(),
            errs: cands.iter().map(|c| c.err).collect(),
            crosses: cands.iter().map(|c| c.cross).collect(),
        })
    }

    pub fn stages(&self) -> usize {
        self.stages
    }

    pub fn len(&self) -> usize {
        self.errs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.errs.is_empty()
    }

    pub fn codes(&self, i: usize) -> &[u8] {
        &self.codes[i * self.stages..(i + 1) * self.stages]
    }

    pub fn err(&self, i: usize) -> f32 {
        self.errs[i]
    }

    pub fn get(&self, i: usize) -> Candidate {
        Candidate { codes: self.codes(i).to_vec(), err: self.errs[i], cross: self.crosses[i] }
    }

    pub fn iter(&self) -> impl Iterator<Item = Candidate> + '_ {
        (0..self.len()).map(|i| self.get(i))
    }

    pub fn best(&self) -> Encoding {
        Encoding { codes: self.codes(0).to_vec(), epsilon: 2.0 * self.crosses[0] }
    }
}

/// Final code of one vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoding {
    pub codes: Vec<u8>,
    /// `Σ_{a≠b} c_a · c_b` over the chosen codewords.
    pub epsilon: f32,
}

/// Greedy encoding: each stage takes the codeword nearest the current residual.
pub fn encode_sequential(x: &[f32], books: &CodebookSet) -> Result<Encoding> {
    Error::check_dim(books.d(), x.len())?;
    let mut residual = x.to_vec();
    let mut codes = Vec::with_capacity(books.m());
    for m in 0..books.m() {
        let mut best = f32::INFINITY;
        let mut arg = 0;
        for k in 0..books.k() {
            let v = sq_dist(&residual, books.codeword(m, k));
            if v < best {
                best = v;
                arg = k;
            }
        }
        for (r, &c) in residual.iter_mut().zip(books.codeword(m, arg)) {
            *r -= c;
        }
        codes.push(arg as u8);
    }
    let epsilon = books.epsilon(&codes);
    Ok(Encoding { codes, epsilon })
}

/// Beam-search encoding with beam width `beam`; returns the best code and the final beam.
pub fn encode_multipath(
    x: &[f32],
    books: &CodebookSet,
    beam: usize,
) -> Result<(Encoding, CandidateList)> {
    Error::check_dim(books.d(), x.len())?;
    check_beam(beam)?;
    let mut list = CandidateList::root(norm_sq(x));
    let mut delta = vec![0.0f32; books.k()];
    let mut scratch = Scratch::new(books.k());
    for m in 0..books.m() {
        stage_deltas(x, 1, books, m, &mut delta);
        list = extend_scored(&list, &delta, books, m, beam, &mut scratch);
    }
    Ok((list.best(), list))
}

/// Extends every candidate in `prev` with every codeword of stage `prev.stages()` and keeps the
/// `beam` best extensions.
///
/// Candidates in `prev` sharing a code sequence are merged first, keeping the lower error.
/// The result is ordered by error, then by code sequence.
pub fn extend_candidates(
    prev: &CandidateList,
    x: &[f32],
    books: &CodebookSet,
    beam: usize,
) -> Result<CandidateList> {
    Error::check_dim(books.d(), x.len())?;
    check_beam(beam)?;
    let m = prev.stages();
    if m >= books.m() {
        return Err(Error::invalid(format!("no stage {m} in a {}-stage codebook set", books.m())));
    }
    let prev = dedup(prev);
    let mut delta = vec![0.0f32; books.k()];
    stage_deltas(x, 1, books, m, &mut delta);
    Ok(extend_scored(&prev, &delta, books, m, beam, &mut Scratch::new(books.k())))
}

/// Advances the beams of all rows of `data` by one stage in place.
pub fn extend_batch(
    data: &Dataset,
    books: &CodebookSet,
    lists: &mut [CandidateList],
    beam: usize,
) -> Result<()> {
    Error::check_dim(books.d(), data.d())?;
    check_beam(beam)?;
    if lists.len() != data.n() {
        return Err(Error::invalid("one candidate list per row is required"));
    }
    let Some(m) = lists.first().map(CandidateList::stages) else { return Ok(()) };
    if m >= books.m() || lists.iter().any(|l| l.stages() != m) {
        return Err(Error::invalid("candidate lists must all be at one stage below M"));
    }
    let (d, k) = (books.d(), books.k());
    data.as_slice()
        .par_chunks(BLOCK_ROWS * d)
        .zip(lists.par_chunks_mut(BLOCK_ROWS))
        .for_each(|(blk, ls)| {
            let rows = blk.len() / d;
            let mut delta = vec![0.0f32; rows * k];
            stage_deltas(blk, rows, books, m, &mut delta);
            let mut scratch = Scratch::new(k);
            for (r, list) in ls.iter_mut().enumerate() {
                *list = extend_scored(list, &delta[r * k..(r + 1) * k], books, m, beam, &mut scratch);
            }
        });
    Ok(())
}

/// Encodes every row with beam width `beam`; returns `n × M` codes and the per-row ε.
pub fn encode_dataset(data: &Dataset, books: &CodebookSet, beam: usize) -> Result<(Vec<u8>, Vec<f32>)> {
    Error::check_dim(books.d(), data.d())?;
    check_beam(beam)?;
    let (d, k, mm) = (books.d(), books.k(), books.m());
    let mut codes = vec![0u8; data.n() * mm];
    let mut eps = vec![0.0f32; data.n()];
    data.as_slice()
        .par_chunks(BLOCK_ROWS * d)
        .zip(codes.par_chunks_mut(BLOCK_ROWS * mm.max(1)))
        .zip(eps.par_chunks_mut(BLOCK_ROWS))
        .for_each(|((blk, code_out), eps_out)| {
            let rows = blk.len() / d;
            let mut lists: Vec<CandidateList> =
                blk.chunks_exact(d).map(|x| CandidateList::root(norm_sq(x))).collect();
            let mut delta = vec![0.0f32; rows * k];
            let mut scratch = Scratch::new(k);
            for m in 0..mm {
                stage_deltas(blk, rows, books, m, &mut delta);
                for (r, list) in lists.iter_mut().enumerate() {
                    *list = extend_scored(list, &delta[r * k..(r + 1) * k], books, m, beam, &mut scratch);
                }
            }
            for (r, list) in lists.iter().enumerate() {
                code_out[r * mm..(r + 1) * mm].copy_from_slice(list.codes(0));
                eps_out[r] = 2.0 * list.crosses[0];
            }
        });
    Ok((codes, eps))
}

fn check_beam(beam: usize) -> Result<()> {
    if beam == 0 {
        Err(Error::invalid("beam width must be at least 1"))
    } else {
        Ok(())
    }
}

/// `‖c‖² − 2 x·c` for every codeword of stage `m` and every row of `xs`.
fn stage_deltas(xs: &[f32], rows: usize, books: &CodebookSet, m: usize, out: &mut [f32]) {
    let k = books.k();
    dots_nt(xs, rows, books.book(m), k, books.d(), out);
    let norms = books.norms(m);
    for row in out.chunks_exact_mut(k) {
        for (v, &n) in row.iter_mut().zip(norms) {
            *v = n - 2.0 * *v;
        }
    }
}

struct Scratch {
    acc: Vec<f32>,
    pool: Vec<Scored>,
}

impl Scratch {
    fn new(k: usize) -> Self {
        Self { acc: vec![0.0; k], pool: Vec::new() }
    }
}

#[derive(Clone, Copy)]
struct Scored {
    err: f32,
    cross: f32,
    parent: u32,
    code: u8,
}

fn order(prev: &CandidateList, a: &Scored, b: &Scored) -> Ordering {
    a.err
        .total_cmp(&b.err)
        .then_with(|| prev.codes(a.parent as usize).cmp(prev.codes(b.parent as usize)))
        .then(a.code.cmp(&b.code))
}

/// Keeps the `beam` best entries of the pool, returning the worst kept error.
fn shrink(pool: &mut Vec<Scored>, prev: &CandidateList, beam: usize) -> f32 {
    if pool.len() > beam {
        pool.select_nth_unstable_by(beam - 1, |a, b| order(prev, a, b));
        pool.truncate(beam);
    }
    pool.iter().map(|s| s.err).fold(f32::NEG_INFINITY, f32::max)
}

fn extend_scored(
    prev: &CandidateList,
    delta: &[f32],
    books: &CodebookSet,
    m: usize,
    beam: usize,
    scratch: &mut Scratch,
) -> CandidateList {
    let k = books.k();
    let Scratch { acc, pool } = scratch;
    pool.clear();
    let mut threshold = f32::INFINITY;
    for p in 0..prev.len() {
        // acc[j] = c_m(j) · x̂ for this parent
        acc.fill(0.0);
        for (a, &code) in prev.codes(p).iter().enumerate() {
            let row = &books.cross(a, m)[code as usize * k..(code as usize + 1) * k];
            for (s, &v) in acc.iter_mut().zip(row) {
                *s += v;
            }
        }
        let base = prev.errs[p];
        let cross = prev.crosses[p];
        for (j, (&dl, &dot)) in delta.iter().zip(acc.iter()).enumerate() {
            let err = base + dl + 2.0 * dot;
            if err <= threshold || pool.len() < beam {
                pool.push(Scored { err, cross: cross + dot, parent: p as u32, code: j as u8 });
            }
        }
        if pool.len() >= beam {
            threshold = shrink(pool, prev, beam);
        }
    }
    shrink(pool, prev, beam);
    pool.sort_unstable_by(|a, b| order(prev, a, b));

    let stages = m + 1;
    let mut out = CandidateList {
        stages,
        codes: Vec::with_capacity(pool.len() * stages),
        errs: Vec::with_capacity(pool.len()),
        crosses: Vec::with_capacity(pool.len()),
    };
    for s in pool.iter() {
        out.codes.extend_from_slice(prev.codes(s.parent as usize));
        out.codes.push(s.code);
        out.errs.push(s.err);
        out.crosses.push(s.cross);
    }
    out
}

/// Merges candidates with identical code sequences, keeping the lowest error (then the
/// earliest position).
fn dedup(list: &CandidateList) -> CandidateList {
    if list.len() < 2 {
        return list.clone();
    }
    let mut idx: Vec<usize> = (0..list.len()).collect();
    idx.sort_by(|&a, &b| {
        list.codes(a).cmp(list.codes(b)).then(list.errs[a].total_cmp(&list.errs[b])).then(a.cmp(&b))
    });
    idx.dedup_by(|b, a| list.codes(*a) == list.codes(*b));
    if idx.len() == list.len() {
        return list.clone();
    }
    idx.sort_by(|&a, &b| list.errs[a].total_cmp(&list.errs[b]).then(list.codes(a).cmp(list.codes(b))));
    CandidateList::from_candidates(&idx.iter().map(|&i| list.get(i)).collect::<Vec<_>>())
        .expect("non-empty list")
}
