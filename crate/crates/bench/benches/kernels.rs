use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use irvq::{build_tables, encode_multipath, kmeans, linear_scan, KMeansInit, KMeansParams};
use irvq_bench::{codebooks, corpus, database};

fn encoding(c: &mut Criterion) {
    let train = corpus(4096, 64, 1);
    let books = codebooks(&train, 8, 256);
    let probe = corpus(64, 64, 2);
    let mut group = c.benchmark_group("encode_multipath");
    group.throughput(Throughput::Elements(probe.n() as u64));
    for beam in [1, 10, 30] {
        group.bench_with_input(BenchmarkId::from_parameter(beam), &beam, |b, &beam| {
            b.iter(|| {
                for x in probe.rows() {
                    black_box(encode_multipath(x, &books, beam).unwrap());
                }
            })
        });
    }
    group.finish();
}

fn search(c: &mut Criterion) {
    let train = corpus(4096, 64, 3);
    let books = codebooks(&train, 8, 256);
    let base = corpus(20_000, 64, 4);
    let db = database(&base, &books, 1);
    let q = corpus(1, 64, 5);
    let q = q.row(0);
    c.bench_function("build_tables", |b| b.iter(|| black_box(build_tables(black_box(q), &books).unwrap())));
    let mut group = c.benchmark_group("linear_scan");
    group.throughput(Throughput::Elements(db.n() as u64));
    for r in [1, 100] {
        group.bench_with_input(BenchmarkId::from_parameter(r), &r, |b, &r| {
            b.iter(|| black_box(linear_scan(q, &db, &books, r).unwrap()))
        });
    }
    group.finish();
}

fn clustering(c: &mut Criterion) {
    let data = corpus(10_000, 32, 6);
    let params = KMeansParams { max_iters: 5, tol: 0.0 };
    let mut group = c.benchmark_group("kmeans_5_iters");
    group.sample_size(10);
    for k in [16, 256] {
        group.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, &k| {
            b.iter(|| black_box(kmeans(&data, k, KMeansInit::PlusPlus { seed: 1 }, &params).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, encoding, search, clustering);
criterion_main!(benches);
