//! Residual vector quantization for approximate nearest neighbor search.
//!
//! The crate covers the full pipeline:
//!
//! * [`dataset`]: fvecs/bvecs ingestion, seeded train/base splits and exact ground truth.
//! * [`clustering`]: Lloyd's k-means (cold k-means++ or warm start) and PCA.
//! * [`codebook`]: plain RVQ training and the improved trainer, which learns each stage with
//!   k-means warm-started through a growing set of principal directions and re-encodes the
//!   training set with a beam search after every stage.
//! * [`encoding`]: greedy sequential encoding and multi-path (beam) encoding.
//! * [`search`]: asymmetric distance tables, the per-vector cross-term correction, linear scan
//!   and recall@R.
//! * [`diagnostics`]: per-stage code entropy, pairwise mutual information and distortion.
//! * [`format`]: the `RVQC` codebook and `RVQE` encoded-database files.
//!
//! Everything that draws random numbers takes an explicit seed; see [`rng`].

pub mod clustering;
pub mod codebook;
pub mod dataset;
pub mod diagnostics;
pub mod encoding;
mod error;
pub mod format;
pub mod linalg;
pub mod rng;
pub mod search;
pub mod synthetic;

pub use clustering::{kmeans, pad_and_lift, pca, project, Centroids, KMeansInit, KMeansParams, KMeansResult, PcaBasis};
pub use codebook::{
    dimension_schedule, icl_stage, train_irvq, train_rvq, CodebookSet, KMeansBudget, TrainConfig,
    TrainReport, Trained,
};
pub use dataset::{exact_knn, load_bvecs, load_fvecs, load_vectors, split, Dataset, GroundTruth};
pub use diagnostics::{entropy_per_stage, mutual_information, quantization_error, EvalReport};
pub use encoding::{
    encode_multipath, encode_sequential, extend_candidates, Candidate, CandidateList, Encoding,
};
pub use error::{Error, Result};
pub use search::{
    adc_distance, build_tables, linear_scan, quantize_epsilons, recall_at_r, DistanceTables,
    EncodedDatabase, Epsilons, QuantizedEpsilons,
};
