//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line.
//!
//! Run with `cargo test -p irvq --test acceptance`; extra arguments select criteria by
//! substring, e.g. `cargo test -p irvq --test acceptance -- entropy`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use irvq::dataset::{write_fvecs_to, write_ivecs};
use irvq::format::{read_codebooks, read_encoded, write_codebooks, write_encoded};
use irvq::synthetic::{Mixture, MixtureSpec};
use irvq::{
    adc_distance, build_tables, encode_multipath, encode_sequential, exact_knn, linear_scan,
    load_fvecs, recall_at_r, rng, split, train_irvq, train_rvq, CodebookSet, Dataset,
    EncodedDatabase, KMeansBudget, TrainConfig,
};
use sha2::{Digest, Sha256};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

type Criterion = (&'static str, fn() -> Outcome);

const CRITERIA: &[Criterion] = &[
    ("1 adc-identity", adc_identity),
    ("2 beam-oracle", beam_oracle),
    ("3 beam-monotonicity", beam_monotonicity),
    ("4 greedy-witness", greedy_witness),
    ("5 entropy", entropy),
    ("6 distortion-monotonicity", distortion_monotonicity),
    ("7 epsilon-quantization", epsilon_quantization),
    ("8 file-round-trips", file_round_trips),
];

fn main() -> ExitCode {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in CRITERIA {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|e| {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                Outcome::new(false, format!("panicked: {msg}"))
            });
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        println!("criterion {name}: {verdict} ({:.1}s) {}", start.elapsed().as_secs_f64(), outcome.detail);
        if !outcome.pass {
            failed += 1;
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}

fn uniform(r: &mut rng::Rng, n: usize, lo: f64, hi: f64) -> Vec<f32> {
    (0..n).map(|_| (lo + (hi - lo) * rng::unit_f64(r)) as f32).collect()
}

fn direct_error(x: &[f32], books: &CodebookSet, codes: &[u8]) -> f64 {
    books
        .reconstruct(codes)
        .iter()
        .zip(x)
        .map(|(&c, &v)| (v as f64 - c as f64).powi(2))
        .sum()
}

fn mixture(d: usize, components: usize, seed: u64) -> Mixture {
    Mixture::new(MixtureSpec::new(d, components, seed)).unwrap()
}

fn adc_identity() -> Outcome {
    let start = Instant::now();
    let mut r = rng::seeded(1);
    let mut worst = 0.0f64;
    let mut pairs = 0;
    for d in [8, 64] {
        for m in [2, 8] {
            for k in [4, 256] {
                // stage scales shrink like residuals do
                let books: Vec<f32> = (0..m)
                    .flat_map(|s| uniform(&mut r, k * d, -1.0, 1.0).into_iter().map(move |v| v / (1 + s) as f32))
                    .collect();
                let set = CodebookSet::from_books(d, k, &books).unwrap();
                for _ in 0..125 {
                    let q = uniform(&mut r, d, -2.0, 2.0);
                    let codes: Vec<u8> = (0..m).map(|_| rng::below(&mut r, k as u64) as u8).collect();
                    let tables = build_tables(&q, &set).unwrap();
                    let adc = adc_distance(&tables, &codes, set.epsilon(&codes)) as f64;
                    let direct = direct_error(&q, &set, &codes);
                    worst = worst.max((adc - direct).abs() / (1.0 + direct));
                    pairs += 1;
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(
        pairs == 1000 && worst <= 1e-3 && secs < 10.0,
        format!("{pairs} pairs, worst |adc-direct|/(1+direct) = {worst:.2e}, {secs:.2}s"),
    )
}

fn beam_oracle() -> Outcome {
    let start = Instant::now();
    let mut r = rng::seeded(2);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let k = 2 + rng::below(&mut r, 15) as usize;
        let d = 1 + rng::below(&mut r, 8) as usize;
        let set = CodebookSet::from_books(d, k, &uniform(&mut r, 2 * k * d, -1.0, 1.0)).unwrap();
        let x = uniform(&mut r, d, -1.5, 1.5);
        let mut best = f64::INFINITY;
        for a in 0..k as u8 {
            for b in 0..k as u8 {
                best = best.min(direct_error(&x, &set, &[a, b]));
            }
        }
        let (enc, list) = encode_multipath(&x, &set, k).unwrap();
        let got = direct_error(&x, &set, &enc.codes);
        worst = worst.max((got - best).abs()).max((list.err(0) as f64 - best).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(worst <= 1e-4 && secs < 30.0, format!("200 instances, worst gap {worst:.2e}, {secs:.2}s"))
}

/// Plain beam search over explicit residuals in f64, independent of the library's incremental
/// scoring.
fn reference_beam(x: &[f32], books: &CodebookSet, beam: usize) -> f64 {
    let d = books.d();
    let mut beams: Vec<(f64, Vec<f64>)> = vec![(0.0, x.iter().map(|&v| v as f64).collect())];
    for m in 0..books.m() {
        let mut pool = Vec::with_capacity(beams.len() * books.k());
        for (_, r) in &beams {
            for k in 0..books.k() {
                let c = books.codeword(m, k);
                let next: Vec<f64> = (0..d).map(|j| r[j] - c[j] as f64).collect();
                pool.push((next.iter().map(|v| v * v).sum::<f64>(), next));
            }
        }
        pool.sort_by(|a, b| a.0.total_cmp(&b.0));
        pool.truncate(beam);
        beams = pool;
    }
    beams[0].0
}

fn beam_monotonicity() -> Outcome {
    let mix = mixture(32, 64, 3);
    let train = mix.sample(20_000, 1).unwrap();
    let cfg = TrainConfig {
        m: 8,
        k: 256,
        schedule_len: 10,
        beam: 10,
        budget: KMeansBudget { round_iters: 10, final_iters: 30, tol: 1e-4 },
        seed: 3,
    };
    let books = train_irvq(&train, &cfg).unwrap().codebooks;
    let probe = mix.sample(1000, 2).unwrap();
    let widths = [1, 3, 10];
    let mut means = [0.0f64; 3];
    let (mut violations, mut reproduced) = (0, 0);
    for x in probe.rows() {
        let errs: Vec<f64> =
            widths.iter().map(|&l| direct_error(x, &books, &encode_multipath(x, &books, l).unwrap().0.codes)).collect();
        for (m, e) in means.iter_mut().zip(&errs) {
            *m += e / 1000.0;
        }
        if errs[0] < errs[1] || errs[1] < errs[2] {
            violations += 1;
            let reference: Vec<f64> = widths.iter().map(|&l| reference_beam(x, &books, l)).collect();
            if reference[0] < reference[1] || reference[1] < reference[2] {
                reproduced += 1;
            }
        }
    }
    Outcome::new(
        means[0] >= means[1] && means[1] >= means[2] && violations == 0,
        format!(
            "mean error L=1 {:.5}, L=3 {:.5}, L=10 {:.5}; {violations} of 1000 vectors not monotone \
             ({reproduced} reproduced by an f64 reference beam search)",
            means[0], means[1], means[2]
        ),
    )
}

fn greedy_witness() -> Outcome {
    let set = CodebookSet::from_books(1, 2, &[0.0, 10.0, -6.0, 6.0]).unwrap();
    let x = [4.9f32];
    let greedy = encode_sequential(&x, &set).unwrap();
    let (beam, _) = encode_multipath(&x, &set, 2).unwrap();
    let (ge, be) = (direct_error(&x, &set, &greedy.codes), direct_error(&x, &set, &beam.codes));
    Outcome::new(
        greedy.codes == [0, 1] && beam.codes == [1, 0] && (ge - 1.21).abs() < 1e-5 && (be - 0.81).abs() < 1e-5,
        format!("greedy {:?} error {ge:.6}, multipath {:?} error {be:.6}", greedy.codes, beam.codes),
    )
}

fn entropy() -> Outcome {
    let corpus = mixture(128, 256, 5).sample(100_000, 1).unwrap();
    let cfg = TrainConfig {
        m: 8,
        k: 256,
        schedule_len: 10,
        beam: 10,
        budget: KMeansBudget { round_iters: 10, final_iters: 25, tol: 1e-4 },
        seed: 5,
    };
    let rvq = train_rvq(&corpus, &cfg).unwrap().report.stage_entropy;
    let irvq = train_irvq(&corpus, &cfg).unwrap().report.stage_entropy;
    let (h_rvq, h_irvq) = (rvq[7], irvq[7]);
    Outcome::new(
        h_irvq >= h_rvq + 0.5 && h_irvq >= 7.0,
        format!("stage-8 entropy irvq {h_irvq:.3} bits, rvq {h_rvq:.3} bits"),
    )
}

fn non_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] <= w[0])
}

fn distortion_monotonicity() -> Outcome {
    let corpora = [
        ("mixture-32", mixture(32, 64, 6).sample(10_000, 1).unwrap()),
        ("mixture-64", mixture(64, 128, 7).sample(8_000, 1).unwrap()),
        ("uniform-16", {
            let mut r = rng::seeded(8);
            Dataset::new(6_000, 16, uniform(&mut r, 6_000 * 16, -1.0, 1.0)).unwrap()
        }),
    ];
    let base = TrainConfig {
        m: 6,
        k: 64,
        schedule_len: 10,
        beam: 10,
        budget: KMeansBudget { round_iters: 10, final_iters: 30, tol: 1e-4 },
        seed: 6,
    };
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, data) in &corpora {
        let rvq = train_rvq(data, &base).unwrap().report.stage_distortion;
        let joint = train_irvq(data, &base).unwrap().report.stage_distortion;
        let plain = train_irvq(data, &TrainConfig { beam: 1, schedule_len: 1, ..base }).unwrap().report.stage_distortion;
        let ok = non_increasing(&rvq) && non_increasing(&joint) && non_increasing(&plain);
        let ordered = joint[base.m - 1] <= plain[base.m - 1];
        pass &= ok && ordered;
        detail.push(format!(
            "{name}: monotone={ok}, final L10/I10 {:.5} vs L1/I1 {:.5} (rvq {:.5})",
            joint[base.m - 1],
            plain[base.m - 1],
            rvq[base.m - 1]
        ));
    }
    Outcome::new(pass, detail.join("; "))
}

fn epsilon_quantization() -> Outcome {
    // light-tailed members: bounded descriptors rather than Student-t outliers
    let mix = Mixture::new(MixtureSpec { tail_dof: 0.0, ..MixtureSpec::new(32, 128, 9) }).unwrap();
    let all = mix.sample(20_000, 1).unwrap();
    let (train, base) = split(&all, 10_000, 9).unwrap();
    let queries = mix.sample(1000, 2).unwrap();
    let cfg = TrainConfig {
        m: 8,
        k: 256,
        schedule_len: 10,
        beam: 10,
        budget: KMeansBudget { round_iters: 10, final_iters: 30, tol: 1e-4 },
        seed: 9,
    };
    let books = train_irvq(&train, &cfg).unwrap().codebooks;
    let exact = EncodedDatabase::encode(&base, &books, 10, None).unwrap();
    let quantized = exact.with_epsilon_bits(Some(8)).unwrap();
    let gt = exact_knn(&base, &queries, 1).unwrap();
    let recall = |db: &EncodedDatabase| {
        let results: Vec<Vec<u32>> = queries.rows().map(|q| linear_scan(q, db, &books, 1).unwrap()).collect();
        recall_at_r(&results, &gt, &[1]).unwrap()[&1]
    };
    let (re, rq) = (recall(&exact), recall(&quantized));
    Outcome::new((re - rq).abs() <= 0.01, format!("recall@1 exact {re:.4}, 8-bit {rq:.4} on {} base vectors", base.n()))
}

fn digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn file_round_trips() -> Outcome {
    let mut r = rng::seeded(10);
    let data = Dataset::new(500, 12, uniform(&mut r, 500 * 12, -3.0, 3.0)).unwrap();
    let cfg = TrainConfig {
        m: 4,
        k: 16,
        schedule_len: 3,
        beam: 4,
        budget: KMeansBudget { round_iters: 5, final_iters: 10, tol: 1e-4 },
        seed: 10,
    };
    let books = train_irvq(&data, &cfg).unwrap().codebooks;
    let exact = EncodedDatabase::encode(&data, &books, 4, None).unwrap();
    let quantized = exact.with_epsilon_bits(Some(8)).unwrap();

    let mut checks = Vec::new();
    let mut c1 = Vec::new();
    write_codebooks(&mut c1, &books).unwrap();
    let books2 = read_codebooks(&mut c1.as_slice()).unwrap();
    let mut c2 = Vec::new();
    write_codebooks(&mut c2, &books2).unwrap();
    checks.push(("RVQC", digest(&c1) == digest(&c2) && books2 == books));

    for (name, db) in [("RVQE exact", &exact), ("RVQE 8-bit", &quantized)] {
        let mut e1 = Vec::new();
        write_encoded(&mut e1, db).unwrap();
        let db2 = read_encoded(&mut e1.as_slice()).unwrap();
        let mut e2 = Vec::new();
        write_encoded(&mut e2, &db2).unwrap();
        checks.push((name, digest(&e1) == digest(&e2) && &db2 == db));
    }

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("data.fvecs");
    let mut f1 = Vec::new();
    write_fvecs_to(&mut f1, &data).unwrap();
    std::fs::write(&path, &f1).unwrap();
    let data2 = load_fvecs(&path).unwrap();
    let mut f2 = Vec::new();
    write_fvecs_to(&mut f2, &data2).unwrap();
    checks.push(("fvecs", digest(&f1) == digest(&f2) && data2 == data));

    let gt = exact_knn(&data, &data.head(20).unwrap(), 5).unwrap();
    let gt_path = dir.path().join("gt.ivecs");
    write_ivecs(&gt_path, &gt).unwrap();
    let gt2 = irvq::dataset::load_ivecs(&gt_path).unwrap();
    let gt_path2 = dir.path().join("gt2.ivecs");
    write_ivecs(&gt_path2, &gt2).unwrap();
    let same = digest(&std::fs::read(&gt_path).unwrap()) == digest(&std::fs::read(&gt_path2).unwrap());
    checks.push(("ivecs", same && gt2.neighbors == gt.neighbors));

    let pass = checks.iter().all(|c| c.1);
    let detail: Vec<String> = checks.iter().map(|(n, ok)| format!("{n} {}", if *ok { "identical" } else { "DIFFERS" })).collect();
    Outcome::new(pass, detail.join(", "))
}
