//! Ranking evaluation against sampled negatives, and runtime benchmarks.
//!
//! A positive's rank counts the negatives scored strictly higher plus half of
//! the ties (rounded down); MRR and HR@K are averaged over positives.

mod bench;
pub mod metrics;
mod protocol;

pub use bench::{bench_prior_runtime, linear_fit, BenchReport, BenchRow};
pub use metrics::{hr_at_k, mrr, rank_all, rank_positive, MetricSpec};
pub use protocol::{
    evaluate_part, evaluate_per_edge, evaluate_split, ClassHeuristicScorer, EvalReport, FnScorer, HeuristicScorer,
    LinkScorer, NegativeMode, SplitPart,
};
