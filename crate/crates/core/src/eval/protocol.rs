use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{rank_all, rank_positive, MetricSpec};
use crate::error::{Error, Result};
use crate::graph::{Edge, Graph, Labels};
use crate::heuristics::{class_heuristic_score, ClassHeuristicParams, GammaDecayConfig, Structural};
use crate::model::LinkPredictor;
use crate::prior::ClassPriorMatrix;
use crate::rng::{self, Stage};
use crate::split::{sample_negatives, EdgeSplit};

/// Anything that assigns a score to node pairs; higher means more likely.
pub trait LinkScorer: Sync {
    fn name(&self) -> String;

    fn score_pairs(&self, pairs: &[Edge]) -> Result<Vec<f64>>;
}

/// CN, AA, RA or Katz on the training graph.
#[derive(Debug, Clone)]
pub struct HeuristicScorer {
    pub graph: Graph,
    pub kind: Structural,
    pub katz: GammaDecayConfig,
}

impl HeuristicScorer {
    pub fn new(train_graph: Graph, kind: Structural) -> Self {
        HeuristicScorer {
            graph: train_graph,
            kind,
            katz: GammaDecayConfig::default(),
        }
    }
}

fn check_pair(g: &Graph, x: usize, y: usize) -> Result<()> {
    for v in [x, y] {
        g.check_node(v).map_err(|e| Error::Scorer {
            x,
            y,
            source: Box::new(e),
        })?;
    }
    Ok(())
}

impl LinkScorer for HeuristicScorer {
    fn name(&self) -> String {
        format!("{:?}", self.kind).to_lowercase()
    }

    fn score_pairs(&self, pairs: &[Edge]) -> Result<Vec<f64>> {
        pairs
            .par_iter()
            .map(|&(x, y)| {
                check_pair(&self.graph, x, y)?;
                Ok(self.kind.score(&self.graph, x, y, &self.katz))
            })
            .collect()
    }
}

/// Structural score plus the class-prior term.
#[derive(Debug, Clone)]
pub struct ClassHeuristicScorer {
    pub base: HeuristicScorer,
    pub prior: ClassPriorMatrix,
    pub labels: Labels,
    pub params: ClassHeuristicParams,
}

impl LinkScorer for ClassHeuristicScorer {
    fn name(&self) -> String {
        format!("hc_{}", self.base.name())
    }

    fn score_pairs(&self, pairs: &[Edge]) -> Result<Vec<f64>> {
        let structural = self.base.score_pairs(pairs)?;
        pairs
            .par_iter()
            .zip(structural)
            .map(|(&(x, y), s)| {
                class_heuristic_score(&self.base.graph, &self.prior, &self.labels, x, y, s, &self.params).map_err(
                    |e| Error::Scorer {
                        x,
                        y,
                        source: Box::new(e),
                    },
                )
            })
            .collect()
    }
}

impl LinkScorer for LinkPredictor {
    fn name(&self) -> String {
        self.mode.as_str().to_string()
    }

    fn score_pairs(&self, pairs: &[Edge]) -> Result<Vec<f64>> {
        for &(x, y) in pairs {
            check_pair(&self.context().graph, x, y)?;
        }
        self.predict(pairs)
    }
}

/// A scorer backed by a closure.
pub struct FnScorer<F> {
    pub name: String,
    pub f: F,
}

impl<F> LinkScorer for FnScorer<F>
where
    F: Fn(usize, usize) -> f64 + Sync,
{
    fn name(&self) -> String {
        self.name.clone()
    }

    fn score_pairs(&self, pairs: &[Edge]) -> Result<Vec<f64>> {
        Ok(pairs.iter().map(|&(x, y)| (self.f)(x, y)).collect())
    }
}

/// Which held-out edges are ranked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitPart {
    Valid,
    #[default]
    Test,
}

/// How negatives are paired with positives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "count")]
pub enum NegativeMode {
    /// Every positive is ranked against the split's pool.
    Shared,
    /// Every positive gets its own sample of this many non-edges.
    PerEdge(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scorer: String,
    pub part: SplitPart,
    pub metric: MetricSpec,
    pub value: f64,
    /// MRR and HR@{1, 10, 20, 50, 100} on the same ranks.
    pub summary: BTreeMap<String, f64>,
    pub n_positives: usize,
    pub n_negatives: usize,
    pub seed: u64,
    pub config_digest: String,
    #[serde(skip)]
    pub ranks: Vec<usize>,
    /// Seconds per stage; kept out of the JSON so reports are reproducible.
    #[serde(skip)]
    pub timings: BTreeMap<String, f64>,
}

impl EvalReport {
    fn new(
        scorer: String,
        part: SplitPart,
        metric: MetricSpec,
        ranks: Vec<usize>,
        n_negatives: usize,
        seed: u64,
    ) -> Result<Self> {
        let value = metric.compute(&ranks)?;
        let mut summary = BTreeMap::new();
        summary.insert("mrr".to_string(), MetricSpec::Mrr.compute(&ranks)?);
        for k in [1, 10, 20, 50, 100] {
            let m = MetricSpec::HitRate(k);
            summary.insert(m.to_string(), m.compute(&ranks)?);
        }
        Ok(EvalReport {
            scorer,
            part,
            metric,
            value,
            summary,
            n_positives: ranks.len(),
            n_negatives,
            seed,
            config_digest: String::new(),
            ranks,
            timings: BTreeMap::new(),
        })
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        crate::io::write_json(path, self)
    }

    /// `edge_index,u,v,rank` rows, positives in split order.
    pub fn write_ranks_csv(&self, positives: &[Edge], path: &Path) -> Result<()> {
        let mut body = String::from("edge_index,u,v,rank\n");
        for (i, (&(u, v), r)) in positives.iter().zip(&self.ranks).enumerate() {
            writeln!(body, "{i},{u},{v},{r}").expect("writing to a String");
        }
        crate::io::write_text(path, &body)
    }

    pub fn write_timings_json(&self, path: &Path) -> Result<()> {
        crate::io::write_json(path, &self.timings)
    }
}

fn part_edges(split: &EdgeSplit, part: SplitPart) -> (&[Edge], &[Edge]) {
    match part {
        SplitPart::Valid => (&split.valid_edges, &split.valid_negatives),
        SplitPart::Test => (&split.test_edges, &split.test_negatives),
    }
}

/// Ranks every test positive against the split's shared test pool.
pub fn evaluate_split(scorer: &dyn LinkScorer, split: &EdgeSplit, metric: MetricSpec, seed: u64) -> Result<EvalReport> {
    evaluate_part(scorer, split, SplitPart::Test, metric, seed)
}

pub fn evaluate_part(
    scorer: &dyn LinkScorer,
    split: &EdgeSplit,
    part: SplitPart,
    metric: MetricSpec,
    seed: u64,
) -> Result<EvalReport> {
    let (positives, negatives) = part_edges(split, part);
    if positives.is_empty() || negatives.is_empty() {
        return Err(Error::Config(format!("{part:?} split has no positives or no negatives")));
    }
    let start = Instant::now();
    let pos = scorer.score_pairs(positives)?;
    let neg = scorer.score_pairs(negatives)?;
    let scored = start.elapsed().as_secs_f64();
    let ranks = rank_all(&pos, &neg)?;
    let mut report = EvalReport::new(scorer.name(), part, metric, ranks, negatives.len(), seed)?;
    report.timings.insert("score".into(), scored);
    report.timings.insert("total".into(), start.elapsed().as_secs_f64());
    Ok(report)
}

/// Ranks every positive against its own `per_edge` non-edges of the full
/// graph `g`, drawn from the evaluation stream of `seed`.
pub fn evaluate_per_edge(
    scorer: &dyn LinkScorer,
    g: &Graph,
    split: &EdgeSplit,
    part: SplitPart,
    per_edge: usize,
    metric: MetricSpec,
    seed: u64,
) -> Result<EvalReport> {
    let (positives, _) = part_edges(split, part);
    if positives.is_empty() || per_edge == 0 {
        return Err(Error::Config("per-edge evaluation needs positives and negatives".into()));
    }
    let start = Instant::now();
    let base = rng::stage_seed(seed, Stage::Eval);
    let pos = scorer.score_pairs(positives)?;
    let mut ranks = Vec::with_capacity(positives.len());
    for (i, &p) in pos.iter().enumerate() {
        let negatives = sample_negatives(g, per_edge, base.wrapping_add(i as u64), &HashSet::new())?;
        let neg = scorer.score_pairs(&negatives)?;
        ranks.push(rank_positive(p, &neg)?);
    }
    let mut report = EvalReport::new(scorer.name(), part, metric, ranks, per_edge, seed)?;
    report.timings.insert("total".into(), start.elapsed().as_secs_f64());
    Ok(report)
}
