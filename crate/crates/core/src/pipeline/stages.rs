use std::cell::OnceCell;
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use serde_json::{json, Value};

use super::artifacts::{check_fresh, require, Layout, Manifest, Stamped};
use super::config::{digest_of, file_digest, LabelSource, RunConfig, ScorerKind};
use crate::cluster::{
    aggregate_features, elbow_select_with, kmeans_labels, louvain, mono_label, KMeansConfig, PseudoLabeling,
};
use crate::datasets::load_linqs;
use crate::error::{Error, Result};
use crate::eval::{
    bench_prior_runtime, evaluate_part, evaluate_per_edge, BenchReport, ClassHeuristicScorer, EvalReport,
    HeuristicScorer, LinkScorer, NegativeMode, SplitPart,
};
use crate::graph::{load_graph, Graph, GraphDocument, Labels};
use crate::model::{train_in_context, Checkpoint, EpochLog, LinkPredictor, PairContext, TrainOutcome};
use crate::prior::{export_heatmap, ClassPriorMatrix, PriorCache};
use crate::rng::{self, Stage};
use crate::split::{split_edges_with_pool, EdgeSplit};

/// One configured run over one output directory. Each stage reads its
/// upstream artifacts, checks their digests against the current
/// configuration and writes its own.
pub struct Pipeline {
    pub config: RunConfig,
    pub layout: Layout,
    ingest_digest: OnceCell<String>,
}

fn info<const N: usize>(pairs: [(&str, Value); N]) -> BTreeMap<String, Value> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

impl Pipeline {
    pub fn new(config: RunConfig) -> Self {
        let layout = Layout::new(&config.out);
        Pipeline {
            config,
            layout,
            ingest_digest: OnceCell::new(),
        }
    }

    fn begin(&self) -> Result<()> {
        crate::io::write_text(&self.layout.resolved_config(), &self.config.to_toml())
    }

    // Digests chain: every stage hashes its own settings together with the
    // digests of the stages it reads.

    pub fn ingest_digest(&self) -> Result<String> {
        if let Some(d) = self.ingest_digest.get() {
            return Ok(d.clone());
        }
        self.config.check_inputs()?;
        let inputs = self
            .config
            .data
            .input_files()
            .iter()
            .map(|p| file_digest(p))
            .collect::<Result<Vec<_>>>()?;
        let seed = self.config.data.planted.as_ref().map(|_| self.config.seed);
        let d = digest_of(&json!({
            "stage": "ingest",
            "data": self.config.data,
            "inputs": inputs,
            "seed": seed,
        }));
        Ok(self.ingest_digest.get_or_init(|| d).clone())
    }

    pub fn split_digest(&self) -> Result<String> {
        Ok(digest_of(&json!({
            "stage": "split",
            "ingest": self.ingest_digest()?,
            "split": self.config.split,
            "seed": self.config.split_seed(),
        })))
    }

    pub fn labels_digest(&self) -> Result<String> {
        let labels = &self.config.labels;
        let body = if labels.source.is_clustered() {
            json!({ "stage": "cluster", "split": self.split_digest()?, "labels": labels, "seed": self.config.seed })
        } else {
            json!({ "stage": "labels", "split": self.split_digest()?, "source": labels.source })
        };
        Ok(digest_of(&body))
    }

    pub fn prior_digest(&self) -> Result<String> {
        Ok(digest_of(&json!({ "stage": "prior", "labels": self.labels_digest()? })))
    }

    pub fn train_digest(&self) -> Result<String> {
        let mode = self.config.train.mode;
        let upstream = if mode.uses_priors() {
            self.prior_digest()?
        } else {
            self.split_digest()?
        };
        Ok(digest_of(&json!({
            "stage": "train",
            "upstream": upstream,
            "mode": mode,
            "model": self.config.model,
            "seed": self.config.seed,
        })))
    }

    pub fn eval_digest(&self, kind: ScorerKind) -> Result<String> {
        let upstream = match kind {
            ScorerKind::Model => self.train_digest()?,
            ScorerKind::Hc => self.prior_digest()?,
            _ => self.split_digest()?,
        };
        let e = &self.config.eval;
        Ok(digest_of(&json!({
            "stage": "evaluate",
            "scorer": kind,
            "upstream": upstream,
            "metric": e.metric,
            "part": e.part,
            "negatives": e.negatives,
            "katz": e.katz,
            "hc": e.hc,
            "hc_base": e.hc_base,
            "seed": self.config.seed,
        })))
    }

    pub fn bench_digest(&self) -> String {
        digest_of(&json!({ "stage": "bench", "bench": self.config.bench, "seed": self.config.seed }))
    }

    /// Reads the configured input graph and writes `graph.json`.
    pub fn ingest(&self) -> Result<Graph> {
        let digest = self.ingest_digest()?;
        self.begin()?;
        let data = &self.config.data;
        let g = if let Some(dir) = &data.linqs_dir {
            load_linqs(dir, &data.linqs_name)?
        } else if let Some(edges) = &data.edges {
            load_graph(edges, data.features.as_deref(), data.labels.as_deref())?
        } else {
            let p = data.planted.as_ref().expect("checked by check_inputs");
            p.generate(self.config.seed)
        };
        let path = self.layout.graph();
        Stamped {
            config_digest: digest.clone(),
            seed: self.config.seed,
            payload: g.to_document(Some(self.config.seed)),
        }
        .save(&path)?;
        Manifest::record(
            &self.layout,
            "ingest",
            &digest,
            self.config.seed,
            &[path],
            info([
                ("n_nodes", json!(g.n_nodes())),
                ("n_edges", json!(g.n_edges())),
                ("n_features", json!(g.n_features())),
                ("n_classes", json!(g.labels().map(Labels::n_classes))),
            ]),
        )?;
        Ok(g)
    }

    pub fn load_graph(&self) -> Result<Graph> {
        let doc = Stamped::<GraphDocument>::load_fresh(&self.layout.graph(), "ingest", &self.ingest_digest()?)?;
        Graph::from_document(doc.payload)
    }

    /// Splits the ingested graph and writes `split.json`.
    pub fn split(&self) -> Result<EdgeSplit> {
        let g = self.load_graph()?;
        let digest = self.split_digest()?;
        self.begin()?;
        let seed = self.config.split_seed();
        let split = split_edges_with_pool(&g, self.config.split.ratios(), seed, self.config.split.negative_pool)?;
        let path = self.layout.split();
        Stamped {
            config_digest: digest.clone(),
            seed,
            payload: split.clone(),
        }
        .save(&path)?;
        Manifest::record(
            &self.layout,
            "split",
            &digest,
            seed,
            &[path],
            info([
                ("train", json!(split.train_edges.len())),
                ("valid", json!(split.valid_edges.len())),
                ("test", json!(split.test_edges.len())),
                ("valid_negatives", json!(split.valid_negatives.len())),
                ("test_negatives", json!(split.test_negatives.len())),
            ]),
        )?;
        Ok(split)
    }

    pub fn load_split(&self) -> Result<EdgeSplit> {
        Ok(Stamped::<EdgeSplit>::load_fresh(&self.layout.split(), "split", &self.split_digest()?)?.payload)
    }

    /// Computes pseudo-labels on the training graph and writes the labeling,
    /// a `node_id,label` CSV and, for a k-means sweep, the SSD curve.
    pub fn cluster(&self) -> Result<PseudoLabeling> {
        let labels_cfg = &self.config.labels;
        if labels_cfg.source == LabelSource::True {
            return Err(Error::Config(
                "labels.source = \"true\" uses the graph's own labels; nothing to cluster".into(),
            ));
        }
        let g = self.load_graph()?;
        let split = self.load_split()?;
        let digest = self.labels_digest()?;
        self.begin()?;
        let seed = rng::stage_seed(self.config.seed, Stage::Cluster);
        let train_graph = split.train_graph(&g)?;
        let labeling = match labels_cfg.source {
            LabelSource::Kmeans => {
                let data = aggregate_features(&train_graph, g.features())?;
                let km = KMeansConfig {
                    max_iters: labels_cfg.max_iters,
                    n_init: labels_cfg.n_init,
                    normalize_rows: labels_cfg.normalize_rows,
                };
                match labels_cfg.k {
                    Some(k) => kmeans_labels(&data, k, seed, &km)?,
                    None => elbow_select_with(&data, &labels_cfg.k_grid, seed, &km)?.labeling,
                }
            }
            LabelSource::Louvain => louvain(&train_graph, seed)?,
            LabelSource::Mono => mono_label(g.n_nodes())?,
            LabelSource::True => unreachable!("rejected above"),
        };
        let split_seed = self.config.split_seed();
        let source = labels_cfg.source;
        let path = self.layout.labels(source, split_seed);
        Stamped {
            config_digest: digest.clone(),
            seed,
            payload: labeling.clone(),
        }
        .save(&path)?;
        let csv = self.layout.labels_csv(source, split_seed);
        labeling.write_csv(g.node_names(), &csv)?;
        let mut files = vec![path, csv];
        if labeling.ssd_curve.is_some() {
            let curve = self.layout.ssd_curve(source, split_seed);
            labeling.write_ssd_csv(&curve)?;
            files.push(curve);
        }
        Manifest::record(
            &self.layout,
            &format!("cluster:{}", source.as_str()),
            &digest,
            seed,
            &files,
            info([("k", json!(labeling.k)), ("ssd_curve", json!(labeling.ssd_curve))]),
        )?;
        Ok(labeling)
    }

    /// Labels of the configured source: the graph's own, the single mono
    /// class, or the stored clustering.
    pub fn labels(&self, g: &Graph) -> Result<Labels> {
        match self.config.labels.source {
            LabelSource::True => g.labels().cloned().ok_or_else(|| {
                Error::Config("labels.source = \"true\" but the input graph has no labels".into())
            }),
            LabelSource::Mono => Ok(mono_label(g.n_nodes())?.to_labels()),
            source => {
                let path = self.layout.labels(source, self.config.split_seed());
                let s = Stamped::<PseudoLabeling>::load_fresh(&path, "cluster", &self.labels_digest()?)?;
                if s.payload.labels.len() != g.n_nodes() {
                    return Err(Error::Dimension(format!(
                        "{} labels {} nodes, graph has {}",
                        path.display(),
                        s.payload.labels.len(),
                        g.n_nodes()
                    )));
                }
                Ok(s.payload.to_labels())
            }
        }
    }

    /// Counts the class prior on training edges and writes the cache and
    /// its heatmap.
    pub fn prior(&self) -> Result<ClassPriorMatrix> {
        let g = self.load_graph()?;
        let split = self.load_split()?;
        let labels = self.labels(&g)?;
        let digest = self.prior_digest()?;
        self.begin()?;
        let prior = ClassPriorMatrix::from_edges(&split.train_edges, &labels)?;
        let (source, split_seed) = (self.config.labels.source, self.config.split_seed());
        let names = class_names(&labels, prior.n_classes());
        let path = self.layout.prior(source, split_seed);
        PriorCache::new(&prior, &names, split_seed, source.as_str(), &digest).save_json(&path)?;
        let heatmap = self.layout.heatmap(source, split_seed);
        export_heatmap(&prior, &names, &heatmap)?;
        Manifest::record(
            &self.layout,
            &format!("prior:{}", source.as_str()),
            &digest,
            split_seed,
            &[path, heatmap],
            info([
                ("n_classes", json!(prior.n_classes())),
                ("counted_pairs", json!(prior.total())),
            ]),
        )?;
        Ok(prior)
    }

    pub fn load_prior(&self) -> Result<ClassPriorMatrix> {
        let path = self.layout.prior(self.config.labels.source, self.config.split_seed());
        require(&path, "prior")?;
        let cache = PriorCache::load_json(&path)?;
        check_fresh(&path, &self.prior_digest()?, &cache.config_digest)?;
        cache.matrix()
    }

    /// Re-exports the heatmap of the stored prior.
    pub fn heatmap(&self) -> Result<PathBuf> {
        let path = self.layout.prior(self.config.labels.source, self.config.split_seed());
        require(&path, "prior")?;
        let cache = PriorCache::load_json(&path)?;
        check_fresh(&path, &self.prior_digest()?, &cache.config_digest)?;
        let out = self
            .layout
            .heatmap(self.config.labels.source, self.config.split_seed());
        export_heatmap(&cache.matrix()?, &cache.class_names, &out)?;
        Ok(out)
    }

    /// Context of the configured mode: the training graph, plus the stored
    /// prior and labels when the mode fuses priors.
    fn pair_context(&self, g: &Graph, split: &EdgeSplit) -> Result<Arc<PairContext>> {
        let prior = if self.config.train.mode.uses_priors() {
            Some((self.load_prior()?, self.labels(g)?))
        } else {
            None
        };
        let m = &self.config.model;
        Ok(Arc::new(PairContext::new(
            split.train_graph(g)?,
            g.features(),
            prior,
            m.normalize_features,
            m.prior_transform,
        )?))
    }

    /// Trains the configured mode and writes its checkpoint and epoch log.
    pub fn train(&self) -> Result<TrainOutcome> {
        let g = self.load_graph()?;
        let split = self.load_split()?;
        let ctx = self.pair_context(&g, &split)?;
        let digest = self.train_digest()?;
        self.begin()?;
        let mode = self.config.train.mode;
        let out = train_in_context(ctx, &split, mode, &self.config.model, self.config.seed)?;
        let path = self.layout.checkpoint(mode);
        Checkpoint::from_predictor(&out.predictor, &digest).save_json(&path)?;
        let log = self.layout.train_log(mode);
        EpochLog::write_csv(&out.log, &log)?;
        let mut files = vec![path, log];
        if let Some(first) = &out.completion_log {
            let p = self.layout.completion_log(mode);
            EpochLog::write_csv(first, &p)?;
            files.push(p);
        }
        Manifest::record(
            &self.layout,
            &format!("train:{}", mode.as_str()),
            &digest,
            self.config.seed,
            &files,
            info([
                ("best_epoch", json!(out.best_epoch)),
                ("best_val_mrr", json!(out.best_val_mrr)),
                ("epochs_run", json!(out.log.len())),
            ]),
        )?;
        Ok(out)
    }

    pub fn load_predictor(&self, g: &Graph, split: &EdgeSplit) -> Result<LinkPredictor> {
        let path = self.layout.checkpoint(self.config.train.mode);
        require(&path, "train")?;
        let ck = Checkpoint::load_json(&path)?;
        check_fresh(&path, &self.train_digest()?, &ck.config_digest)?;
        ck.into_predictor(self.pair_context(g, split)?)
    }

    fn scorer(&self, kind: ScorerKind, g: &Graph, split: &EdgeSplit) -> Result<Box<dyn LinkScorer>> {
        let e = &self.config.eval;
        let heuristic = |s| {
            let mut h = HeuristicScorer::new(split.train_graph(g)?, s);
            h.katz = e.katz;
            Ok::<_, Error>(h)
        };
        Ok(match kind {
            ScorerKind::Model => Box::new(self.load_predictor(g, split)?),
            ScorerKind::Hc => Box::new(ClassHeuristicScorer {
                base: heuristic(e.hc_base)?,
                prior: self.load_prior()?,
                labels: self.labels(g)?,
                params: e.hc,
            }),
            other => Box::new(heuristic(other.structural().expect("structural scorer"))?),
        })
    }

    /// Ranks held-out positives for every configured scorer and writes one
    /// report, ranks CSV and timings file per scorer.
    pub fn evaluate(&self) -> Result<Vec<EvalReport>> {
        let g = self.load_graph()?;
        let split = self.load_split()?;
        self.begin()?;
        let e = &self.config.eval;
        let positives = match e.part {
            SplitPart::Valid => &split.valid_edges,
            SplitPart::Test => &split.test_edges,
        };
        let mut reports = Vec::with_capacity(e.scorers.len());
        for &kind in &e.scorers {
            let scorer = self.scorer(kind, &g, &split)?;
            let digest = self.eval_digest(kind)?;
            let mut report = match e.negatives {
                NegativeMode::Shared => evaluate_part(scorer.as_ref(), &split, e.part, e.metric, self.config.seed)?,
                NegativeMode::PerEdge(n) => {
                    evaluate_per_edge(scorer.as_ref(), &g, &split, e.part, n, e.metric, self.config.seed)?
                }
            };
            report.config_digest = digest.clone();
            let name = scorer.name();
            let (rp, kp, tp) = (self.layout.report(&name), self.layout.ranks(&name), self.layout.timings(&name));
            report.save_json(&rp)?;
            report.write_ranks_csv(positives, &kp)?;
            report.write_timings_json(&tp)?;
            Manifest::record(
                &self.layout,
                &format!("evaluate:{name}"),
                &digest,
                self.config.seed,
                &[rp, kp],
                info([("metric", json!(report.metric)), ("value", json!(report.value))]),
            )?;
            reports.push(report);
        }
        Ok(reports)
    }

    /// Times prior construction over `bench.sizes` and writes the CSV and fit.
    pub fn bench(&self) -> Result<BenchReport> {
        self.begin()?;
        let b = &self.config.bench;
        let report = bench_prior_runtime(&b.sizes, b.n_classes, b.repeats, self.config.seed)?;
        let (csv, js) = (self.layout.bench_csv(), self.layout.bench_json());
        report.write_csv(&csv)?;
        crate::io::write_json(&js, &report)?;
        let digest = self.bench_digest();
        Manifest::record(
            &self.layout,
            "bench",
            &digest,
            self.config.seed,
            &[csv],
            info([
                ("slope", json!(report.slope)),
                ("intercept", json!(report.intercept)),
                ("r_squared", json!(report.r_squared)),
            ]),
        )?;
        Ok(report)
    }

    /// Whether any configured scorer needs the prior.
    fn needs_prior(&self) -> bool {
        self.config.eval.scorers.iter().any(|&k| {
            k == ScorerKind::Hc || (k == ScorerKind::Model && self.config.train.mode.uses_priors())
        })
    }

    /// Runs every stage the configuration needs, in order: ingest, split,
    /// cluster (for k-means or Louvain labels), prior, train, evaluate.
    pub fn run_all(&self) -> Result<Vec<EvalReport>> {
        self.ingest()?;
        self.split()?;
        if self.config.labels.source.is_clustered() {
            self.cluster()?;
        }
        if self.needs_prior() {
            self.prior()?;
        }
        if self.config.eval.scorers.contains(&ScorerKind::Model) {
            self.train()?;
        }
        self.evaluate()
    }
}

fn class_names(labels: &Labels, n_classes: usize) -> Vec<String> {
    if labels.names().len() == n_classes {
        labels.names().to_vec()
    } else {
        (0..n_classes).map(|c| c.to_string()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pipeline(dir: &std::path::Path, extra: &[&str]) -> Pipeline {
        let mut o = vec![
            format!("out = \"{}\"", dir.display()),
            "data.planted.n_nodes = 120".into(),
            "data.planted.n_edges = 400".into(),
            "data.planted.n_features = 30".into(),
            "split.negative_pool = 100".into(),
            "model.epochs = 3".into(),
            "model.hidden_dim = 8".into(),
            "model.mlp_hidden = 8".into(),
        ];
        o.extend(extra.iter().map(|s| s.to_string()));
        Pipeline::new(RunConfig::load(None, &o).unwrap())
    }

    #[test]
    fn missing_upstream_names_the_command() {
        let dir = tempfile::tempdir().unwrap();
        let p = pipeline(dir.path(), &[]);
        assert!(matches!(p.split(), Err(Error::Dependency { command: "ingest", .. })));
        p.ingest().unwrap();
        assert!(matches!(p.prior(), Err(Error::Dependency { command: "split", .. })));
        p.split().unwrap();
        assert!(matches!(p.train(), Err(Error::Dependency { command: "prior", .. })));
        let km = pipeline(dir.path(), &["labels.source = \"kmeans\""]);
        assert!(matches!(km.prior(), Err(Error::Dependency { command: "cluster", .. })));
    }

    #[test]
    fn changed_config_is_stale() {
        let dir = tempfile::tempdir().unwrap();
        let p = pipeline(dir.path(), &[]);
        p.ingest().unwrap();
        p.split().unwrap();
        let other = pipeline(dir.path(), &["split.negative_pool = 90"]);
        assert!(matches!(other.prior(), Err(Error::StaleArtifact { .. })));
    }

    #[test]
    fn run_all_writes_reports_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let p = pipeline(dir.path(), &["eval.scorers = [\"cn\", \"hc\", \"model\"]"]);
        let reports = p.run_all().unwrap();
        let names: Vec<_> = reports.iter().map(|r| r.scorer.as_str()).collect();
        assert_eq!(names, ["cn", "hc_cn", "ncn"]);
        for r in &reports {
            assert!(p.layout.report(&r.scorer).is_file());
            assert_eq!(r.config_digest.len(), 64);
        }
        let m = Manifest::load_or_default(&p.layout.manifest()).unwrap();
        for key in ["ingest", "split", "prior:true", "train:ncn", "evaluate:cn", "evaluate:hc_cn", "evaluate:ncn"] {
            assert!(m.stages.contains_key(key), "{key}");
        }
    }

    #[test]
    fn cluster_rejects_true_labels() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(pipeline(dir.path(), &[]).cluster(), Err(Error::Config(_))));
    }
}
