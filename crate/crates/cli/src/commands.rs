use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use irvq::dataset::{split, write_fvecs, write_ivecs};
use irvq::diagnostics::stage_distortion;
use irvq::format::{load_codebooks, load_encoded, save_codebooks, save_encoded};
use irvq::{
    entropy_per_stage, exact_knn, linear_scan, load_vectors, mutual_information, recall_at_r,
    train_irvq, train_rvq, CodebookSet, Dataset, EncodedDatabase, EvalReport,
};
use log::info;
use rayon::prelude::*;

use crate::config::{self, FileConfig};
use crate::{Cli, Command, DiagArgs, EncodeArgs, EvalArgs, GtArgs, Method, SplitArgs, TrainArgs};

pub fn run(cli: Cli) -> Result<()> {
    let file = FileConfig::load(cli.config.as_deref())?;
    let threads = cli.threads.or(file.threads).unwrap_or(0);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("configuring the worker pool")?;
    match &cli.command {
        Command::Split(a) => cmd_split(a, &file),
        Command::Gt(a) => cmd_gt(a, &file),
        Command::Train(a) => cmd_train(a, &file),
        Command::Encode(a) => cmd_encode(a, &file),
        Command::Eval(a) => cmd_eval(a, &file),
        Command::Diag(a) => cmd_diag(a, &file),
    }
}

fn require<'a>(paths: impl IntoIterator<Item = &'a PathBuf>) -> Result<()> {
    for p in paths {
        if !p.exists() {
            bail!("input file {} does not exist", p.display());
        }
    }
    Ok(())
}

fn load(path: &Path) -> Result<Dataset> {
    let ds = load_vectors(path).with_context(|| format!("loading {}", path.display()))?;
    info!("{}: {} vectors of dimension {}", path.display(), ds.n(), ds.d());
    Ok(ds)
}

fn load_books(path: &Path) -> Result<CodebookSet> {
    let books = load_codebooks(path).with_context(|| format!("loading {}", path.display()))?;
    info!("{}: M={} K={} d={}", path.display(), books.m(), books.k(), books.d());
    Ok(books)
}

fn check_dims(books: &CodebookSet, data: &Dataset, what: &Path) -> Result<()> {
    if books.d() != data.d() {
        bail!(
            "dimension mismatch: codebooks have d={} but {} has d={}",
            books.d(),
            what.display(),
            data.d()
        );
    }
    Ok(())
}

fn emit(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?);
            w.write_all(text.as_bytes())?;
            w.flush()?;
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

fn log_text(text: &str) {
    for line in text.lines() {
        info!("{line}");
    }
}

fn cmd_split(a: &SplitArgs, file: &FileConfig) -> Result<()> {
    require([&a.input])?;
    let ds = load(&a.input)?;
    let seed = a.seed.or(file.seed).unwrap_or(0);
    let (train, base) = split(&ds, a.train_n, seed)?;
    write_fvecs(&a.train_out, &train)?;
    write_fvecs(&a.base_out, &base)?;
    info!("wrote {} training and {} base vectors", train.n(), base.n());
    Ok(())
}

fn cmd_gt(a: &GtArgs, file: &FileConfig) -> Result<()> {
    require([&a.base, &a.queries])?;
    let base = load(&a.base)?;
    let queries = load(&a.queries)?;
    let k = a.k.or(file.k_nn).unwrap_or(config::DEFAULT_GT_DEPTH).min(base.n());
    let start = Instant::now();
    let gt = exact_knn(&base, &queries, k)?;
    info!("exact {k}-NN for {} queries in {:.2}s", queries.n(), start.elapsed().as_secs_f64());
    write_ivecs(&a.out, &gt)?;
    Ok(())
}

fn cmd_train(a: &TrainArgs, file: &FileConfig) -> Result<()> {
    require([&a.data])?;
    let settings = config::train_settings(a, file)?;
    let data = load(&a.data)?;
    let cfg = &settings.config;
    info!(
        "training {:?}: M={} K={} I={} L={} seed={}",
        settings.method, cfg.m, cfg.k, cfg.schedule_len, cfg.beam, cfg.seed
    );
    let start = Instant::now();
    let trained = match settings.method {
        Method::Rvq => train_rvq(&data, cfg)?,
        Method::Irvq => train_irvq(&data, cfg)?,
    };
    info!("trained in {:.2}s", start.elapsed().as_secs_f64());
    save_codebooks(&a.out, &trained.codebooks)?;
    let report = EvalReport {
        per_stage_distortion: trained.report.stage_distortion.clone(),
        entropy_bits: trained.report.stage_entropy.clone(),
        ..Default::default()
    };
    log_text(&report.to_text());
    emit(&report.to_kv(), a.report.as_deref())
}

fn cmd_encode(a: &EncodeArgs, file: &FileConfig) -> Result<()> {
    require([&a.codebooks, &a.data])?;
    let beam = config::beam(a.l, file)?;
    let bits = config::epsilon_bits(a.epsilon_bits, file)?;
    let books = load_books(&a.codebooks)?;
    let data = load(&a.data)?;
    check_dims(&books, &data, &a.data)?;
    let start = Instant::now();
    let db = EncodedDatabase::encode(&data, &books, beam, bits)?;
    info!("encoded {} vectors with L={beam} in {:.2}s", db.n(), start.elapsed().as_secs_f64());
    save_encoded(&a.out, &db)?;
    let report = EvalReport {
        per_stage_distortion: stage_distortion(&data, &books, db.codes())?,
        entropy_bits: entropy_per_stage(db.codes(), db.m()),
        ..Default::default()
    };
    log_text(&report.to_text());
    let error = report.per_stage_distortion.last().copied().unwrap_or(0.0);
    info!("mean quantization error {error}");
    let mut kv = format!("quantization_error\t-\t{error}\n");
    kv.push_str(&report.to_kv());
    emit(&kv, a.report.as_deref())
}

fn cmd_eval(a: &EvalArgs, file: &FileConfig) -> Result<()> {
    require([&a.codebooks, &a.encoded, &a.queries].into_iter().chain(&a.gt).chain(&a.base))?;
    let r_values = config::recall_depths(a.r.as_deref(), file)?;
    let books = load_books(&a.codebooks)?;
    let mut db = load_encoded(&a.encoded).with_context(|| format!("loading {}", a.encoded.display()))?;
    if let Some(bits) = config::epsilon_bits(a.epsilon_bits, file)? {
        db = db.with_epsilon_bits(Some(bits))?;
    }
    let queries = load(&a.queries)?;
    check_dims(&books, &queries, &a.queries)?;
    let base = a.base.as_deref().map(load).transpose()?;
    if let Some(base) = &base {
        check_dims(&books, base, a.base.as_deref().unwrap())?;
        if base.n() != db.n() {
            bail!("base set has {} vectors but the encoded database has {}", base.n(), db.n());
        }
    }
    let gt = match (&a.gt, &base) {
        (Some(path), _) => irvq::dataset::load_ivecs(path)?,
        (None, Some(base)) => exact_knn(base, &queries, 1)?,
        (None, None) => bail!("eval needs --gt or --base to know the true neighbors"),
    };
    if gt.len() != queries.n() {
        bail!("ground truth covers {} queries but {} were given", gt.len(), queries.n());
    }
    let depth = *r_values.last().unwrap();
    if depth > db.n() {
        bail!("R={depth} exceeds the database size {}", db.n());
    }

    let start = Instant::now();
    let results: Vec<Vec<u32>> = queries
        .as_slice()
        .par_chunks(queries.d())
        .map(|q| linear_scan(q, &db, &books, depth))
        .collect::<irvq::Result<_>>()?;
    let search_secs = start.elapsed().as_secs_f64();

    let report = EvalReport {
        recall_at: recall_at_r(&results, &gt, &r_values)?,
        per_stage_distortion: match &base {
            Some(base) => stage_distortion(base, &books, db.codes())?,
            None => Vec::new(),
        },
        entropy_bits: entropy_per_stage(db.codes(), db.m()),
        mutual_info_bits: mutual_information(db.codes(), db.m()),
        queries: queries.n(),
        search_secs,
    };
    log_text(&report.to_text());
    emit(&report.to_kv(), a.report.as_deref())
}

fn cmd_diag(a: &DiagArgs, file: &FileConfig) -> Result<()> {
    require([&a.codebooks, &a.data].into_iter().chain(&a.encoded))?;
    let books = load_books(&a.codebooks)?;
    let data = load(&a.data)?;
    check_dims(&books, &data, &a.data)?;
    let db = match &a.encoded {
        Some(path) => {
            let db = load_encoded(path).with_context(|| format!("loading {}", path.display()))?;
            if db.n() != data.n() {
                bail!("{} holds {} codes but {} has {} vectors", path.display(), db.n(), a.data.display(), data.n());
            }
            db
        }
        None => EncodedDatabase::encode(&data, &books, config::beam(a.l, file)?, None)?,
    };
    let report = EvalReport {
        per_stage_distortion: stage_distortion(&data, &books, db.codes())?,
        entropy_bits: entropy_per_stage(db.codes(), db.m()),
        mutual_info_bits: mutual_information(db.codes(), db.m()),
        ..Default::default()
    };
    log_text(&report.to_text());
    emit(&report.to_kv(), a.report.as_deref())
}
