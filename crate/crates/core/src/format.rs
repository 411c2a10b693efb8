//! Binary containers for trained codebooks (`RVQC`) and encoded databases (`RVQE`).
//!
//! All integers and floats are little-endian.
//!
//! ```text
//! RVQC: "RVQC" u16 version, u32 d, u32 M, u32 K,
//!       M·K·d f32 codewords (stage-major),
//!       M(M−1)/2 tables of K·K f32 cross products, pairs (a, b) with a < b in lexicographic
//!       order, entry (i, j) = c_a(i) · c_b(j) at i·K + j
//!
//! RVQE: "RVQE" u16 version, u32 n, u32 M, u32 K, u8 epsilon mode,
//!       n·M u8 codes (row-major),
//!       mode 0: n f32 exact ε
//!       mode 1: u8 bits, f32 scale, f32 offset, n u8 quantized ε
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::codebook::CodebookSet;
use crate::error::{Error, Result};
use crate::search::{EncodedDatabase, Epsilons, QuantizedEpsilons};

pub const CODEBOOK_MAGIC: &[u8; 4] = b"RVQC";
pub const ENCODED_MAGIC: &[u8; 4] = b"RVQE";
pub const VERSION: u16 = 1;

const EPS_EXACT: u8 = 0;
const EPS_QUANTIZED: u8 = 1;

fn put_f32s<W: Write>(w: &mut W, vals: &[f32]) -> Result<()> {
    let mut buf = Vec::with_capacity(vals.len() * 4);
    for v in vals {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn write_codebooks<W: Write>(w: &mut W, books: &CodebookSet) -> Result<()> {
    w.write_all(CODEBOOK_MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for v in [books.d(), books.m(), books.k()] {
        w.write_all(&(v as u32).to_le_bytes())?;
    }
    put_f32s(w, books.books())?;
    for (_, _, table) in books.cross_tables() {
        put_f32s(w, table)?;
    }
    Ok(())
}

pub fn read_codebooks<R: Read>(r: &mut R) -> Result<CodebookSet> {
    let mut src = Source::new(r);
    src.magic(CODEBOOK_MAGIC)?;
    let (d, m, k) = (src.u32()? as usize, src.u32()? as usize, src.u32()? as usize);
    if d == 0 || m == 0 || k == 0 || k > 256 {
        return Err(Error::Format(format!("invalid codebook header d={d} M={m} K={k}")));
    }
    let books = src.f32s(m * k * d)?;
    let cross = src.f32s(m * (m - 1) / 2 * k * k)?;
    src.end()?;
    CodebookSet::from_parts(d, m, k, books, cross)
}

pub fn write_encoded<W: Write>(w: &mut W, db: &EncodedDatabase) -> Result<()> {
    w.write_all(ENCODED_MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for v in [db.n(), db.m(), db.k()] {
        w.write_all(&(v as u32).to_le_bytes())?;
    }
    match db.epsilons() {
        Epsilons::Exact(eps) => {
            w.write_all(&[EPS_EXACT])?;
            w.write_all(db.codes())?;
            put_f32s(w, eps)?;
        }
        Epsilons::Quantized(q) => {
            w.write_all(&[EPS_QUANTIZED])?;
            w.write_all(db.codes())?;
            w.write_all(&[q.bits])?;
            put_f32s(w, &[q.scale, q.offset])?;
            w.write_all(&q.codes)?;
        }
    }
    Ok(())
}

pub fn read_encoded<R: Read>(r: &mut R) -> Result<EncodedDatabase> {
    let mut src = Source::new(r);
    src.magic(ENCODED_MAGIC)?;
    let (n, m, k) = (src.u32()? as usize, src.u32()? as usize, src.u32()? as usize);
    if n == 0 || m == 0 || k == 0 || k > 256 {
        return Err(Error::Format(format!("invalid encoded header n={n} M={m} K={k}")));
    }
    let mode = src.u8()?;
    let codes = src.bytes(n * m)?;
    let epsilons = match mode {
        EPS_EXACT => Epsilons::Exact(src.f32s(n)?),
        EPS_QUANTIZED => {
            let bits = src.u8()?;
            let scale = src.f32()?;
            let offset = src.f32()?;
            let codes = src.bytes(n)?;
            if !(1..=8).contains(&bits) || codes.iter().any(|&c| (c as u32) >= (1u32 << bits)) {
                return Err(Error::Format(format!("invalid quantized epsilon block ({bits} bits)")));
            }
            Epsilons::Quantized(QuantizedEpsilons { bits, scale, offset, codes })
        }
        other => return Err(Error::Format(format!("unknown epsilon mode {other}"))),
    };
    src.end()?;
    EncodedDatabase::new(m, k, codes, epsilons).map_err(|e| Error::Format(e.to_string()))
}

pub fn save_codebooks(path: impl AsRef<Path>, books: &CodebookSet) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_codebooks(&mut w, books)?;
    w.flush()?;
    Ok(())
}

pub fn load_codebooks(path: impl AsRef<Path>) -> Result<CodebookSet> {
    read_codebooks(&mut BufReader::new(File::open(path)?))
}

pub fn save_encoded(path: impl AsRef<Path>, db: &EncodedDatabase) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_encoded(&mut w, db)?;
    w.flush()?;
    Ok(())
}

pub fn load_encoded(path: impl AsRef<Path>) -> Result<EncodedDatabase> {
    read_encoded(&mut BufReader::new(File::open(path)?))
}

struct Source<'a, R: Read> {
    inner: &'a mut R,
    offset: u64,
}

impl<'a, R: Read> Source<'a, R> {
    fn new(inner: &'a mut R) -> Self {
        Self { inner, offset: 0 }
    }

    fn bytes(&mut self, len: usize) -> Result<Vec<u8>> {
        let mut buf = vec![0u8; len];
        self.inner.read_exact(&mut buf).map_err(|e| {
            if e.kind() == std::io::ErrorKind::UnexpectedEof {
                Error::Format(format!("file truncated: needed {len} bytes at offset {}", self.offset))
            } else {
                Error::Io(e)
            }
        })?;
        self.offset += len as u64;
        Ok(buf)
    }

    fn magic(&mut self, want: &[u8; 4]) -> Result<()> {
        let got = self.bytes(4)?;
        if got != want {
            return Err(Error::Format(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(&got),
                String::from_utf8_lossy(want)
            )));
        }
        let version = u16::from_le_bytes(self.bytes(2)?.try_into().unwrap());
        if version != VERSION {
            return Err(Error::Format(format!("unsupported format version {version}")));
        }
        Ok(())
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes(4)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.bytes(4)?.try_into().unwrap()))
    }

    fn f32s(&mut self, count: usize) -> Result<Vec<f32>> {
        let raw = self.bytes(count * 4)?;
        Ok(raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
    }

    fn end(&mut self) -> Result<()> {
        let mut probe = [0u8; 1];
        match self.inner.read(&mut probe)? {
            0 => Ok(()),
            _ => Err(Error::Format(format!("trailing data after offset {}", self.offset))),
        }
    }
}
