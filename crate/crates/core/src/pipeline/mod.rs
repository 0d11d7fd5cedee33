//! Seeded run configuration and on-disk artifacts.
//!
//! Stages run in the order ingest, split, cluster, prior, train, evaluate.
//! Every artifact carries the SHA-256 digest of the configuration that
//! produced it, chained through the digests of its inputs; a stage refuses
//! upstream artifacts whose digest differs from the current configuration.
//! All randomness derives from `seed` through per-stage streams, so any
//! manual sequence of stages writes the same files as `run_all`.

mod artifacts;
mod config;
mod stages;

pub use artifacts::{Layout, Manifest, ManifestEntry, Stamped};
pub use config::{
    apply_override, digest_of, file_digest, BenchConfig, DataConfig, EvalConfig, LabelConfig, LabelSource,
    RunConfig, ScorerKind, SplitConfig, TrainConfig,
};
pub use stages::Pipeline;
