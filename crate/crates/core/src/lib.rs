//! Link prediction with class-conditioned link priors.
//!
//! The crate counts how often training edges join each pair of node classes,
//! turns the counts into conditional probabilities `P(c_y | c_x)`, and feeds
//! them to classical heuristics and to a common-neighbor link predictor.
//! When class labels are missing, clustering supplies pseudo-labels.
//!
//! Module map:
//! - [`graph`], [`split`]: CSR graphs, loaders, edge splits and negatives.
//! - [`prior`]: class-link counts, the prior matrix and its exports.
//! - [`heuristics`]: CN, AA, RA, truncated Katz and the class-aware score.
//! - [`cluster`]: k-means with elbow selection, Louvain and mono labels.
//! - [`model`]: encoder, link embeddings, fusion head and training.
//! - [`eval`]: ranks, MRR, HR@K and the prior runtime benchmark.
//! - [`pipeline`]: seeded configuration and artifacts behind the CLI.

pub mod cluster;
pub mod datasets;
pub mod error;
pub mod eval;
pub mod graph;
pub mod heuristics;
pub mod io;
pub mod model;
pub mod pipeline;
pub mod prior;
pub mod rng;
pub mod split;

pub use error::{Error, Result};
pub use graph::{Edge, Graph, Labels, NodeId};
pub use prior::{build_prior_matrix, count_class_links, lookup_prior, ClassPriorMatrix};
pub use split::{split_edges, EdgeSplit, SplitRatios};
