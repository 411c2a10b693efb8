//! Fixtures shared by the benchmarks.

use irvq::synthetic::{Mixture, MixtureSpec};
use irvq::{train_rvq, CodebookSet, Dataset, EncodedDatabase, KMeansBudget, TrainConfig};

/// A seeded corpus of `n` vectors in `d` dimensions.
pub fn corpus(n: usize, d: usize, seed: u64) -> Dataset {
    Mixture::new(MixtureSpec::new(d, 64, seed))
        .and_then(|m| m.sample(n, seed))
        .expect("valid mixture")
}

/// Quickly trained `m`-stage codebooks; quality is irrelevant for timing.
pub fn codebooks(train: &Dataset, m: usize, k: usize) -> CodebookSet {
    let cfg = TrainConfig {
        m,
        k,
        schedule_len: 1,
        beam: 1,
        budget: KMeansBudget { round_iters: 3, final_iters: 3, tol: 1e-3 },
        seed: 1,
    };
    train_rvq(train, &cfg).expect("training").codebooks
}

pub fn database(base: &Dataset, books: &CodebookSet, beam: usize) -> EncodedDatabase {
    EncodedDatabase::encode(base, books, beam, None).expect("encoding")
}
