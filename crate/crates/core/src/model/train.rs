//! Full-batch training with early stopping on validation MRR.

use std::path::Path;
use std::sync::Arc;

use ndarray::Array2;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::link::{embed, ncn_set, ncnc_set, LinkEmbedding};
use super::network::{BackboneParams, PairBatch, PairContext, TENSOR_NAMES};
use super::{head, ModelConfig, ModelMode, Optimizer};
use crate::error::{Error, Result};
use crate::eval::metrics::{mrr, rank_all};
use crate::graph::{Edge, Graph, Labels, NodeId};
use crate::prior::ClassPriorMatrix;
use crate::rng::{self, Stage};
use crate::split::{sample_negatives, EdgeSplit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss: f64,
    /// Absent when the split has no validation edges.
    pub val_mrr: Option<f64>,
}

impl EpochLog {
    /// Writes `epoch,loss,val_mrr` rows.
    pub fn write_csv(log: &[EpochLog], path: &Path) -> Result<()> {
        crate::io::ensure_parent(path)?;
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        for row in log {
            w.serialize(row).map_err(|e| Error::csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// A trained model bound to the context it scores pairs in.
#[derive(Debug, Clone)]
pub struct LinkPredictor {
    pub mode: ModelMode,
    pub params: BackboneParams,
    pub config: ModelConfig,
    pub seed: u64,
    ctx: Arc<PairContext>,
    h: Array2<f64>,
    completion: Option<Box<LinkPredictor>>,
}

impl LinkPredictor {
    pub fn new(
        mode: ModelMode,
        params: BackboneParams,
        config: ModelConfig,
        seed: u64,
        ctx: Arc<PairContext>,
        completion: Option<LinkPredictor>,
    ) -> Result<Self> {
        if params.uses_priors() != mode.uses_priors() {
            return Err(Error::Config(format!(
                "{mode:?} parameters have head input width {}",
                params.input_dim()
            )));
        }
        if (mode == ModelMode::Ncnc) != completion.is_some() {
            return Err(Error::Config("completion scorer is required by, and only by, ncnc".into()));
        }
        params.check_shapes(&ctx)?;
        let h = params.embed_nodes(&ctx);
        Ok(LinkPredictor {
            mode,
            params,
            config,
            seed,
            ctx,
            h,
            completion: completion.map(Box::new),
        })
    }

    pub fn context(&self) -> &PairContext {
        &self.ctx
    }

    pub fn shared_context(&self) -> Arc<PairContext> {
        Arc::clone(&self.ctx)
    }

    pub fn embeddings(&self) -> &Array2<f64> {
        &self.h
    }

    pub fn completion(&self) -> Option<&LinkPredictor> {
        self.completion.as_deref()
    }

    /// Weighted aggregation set of `(x, y)` for this model's mode.
    pub fn set_of(&self, x: NodeId, y: NodeId) -> Vec<(NodeId, f64)> {
        self.set_on(&self.ctx.graph, x, y)
    }

    /// Aggregation set over the neighborhoods of `graph`; completion weights
    /// still come from the frozen scorer's own context.
    fn set_on(&self, graph: &Graph, x: NodeId, y: NodeId) -> Vec<(NodeId, f64)> {
        match &self.completion {
            Some(c) => ncnc_set(graph, |a, b| c.prob(a, b), x, y),
            None => ncn_set(graph, x, y),
        }
    }

    /// Batch of `pairs`, all with target `target`, over another context.
    fn batch_on(&self, ctx: &PairContext, pairs: Vec<Edge>, target: f64) -> Result<PairBatch> {
        let n = pairs.len();
        PairBatch::build(ctx, pairs, vec![target; n], |x, y| self.set_on(&ctx.graph, x, y))
    }

    pub fn embed_pair(&self, x: NodeId, y: NodeId) -> LinkEmbedding {
        embed(&self.h, x, y, &self.set_of(x, y))
    }

    pub fn batch(&self, pairs: Vec<Edge>, targets: Vec<f64>) -> Result<PairBatch> {
        PairBatch::build(&self.ctx, pairs, targets, |x, y| self.set_of(x, y))
    }

    /// Link probabilities for `pairs`.
    pub fn predict(&self, pairs: &[Edge]) -> Result<Vec<f64>> {
        let batch = self.batch(pairs.to_vec(), vec![0.0; pairs.len()])?;
        Ok(self.params.logits(&self.h, &batch).into_iter().map(head::sigmoid).collect())
    }

    pub fn predict_pair(&self, x: NodeId, y: NodeId) -> Result<f64> {
        Ok(self.predict(&[(x, y)])?[0])
    }

    /// Probability used as a completion weight; context labels are validated
    /// at construction, so prior lookups cannot fail here.
    fn prob(&self, x: NodeId, y: NodeId) -> f64 {
        let set = self.set_of(x, y);
        let e = embed(&self.h, x, y, &set);
        let priors = self
            .params
            .uses_priors()
            .then(|| self.ctx.prior_features(x, y).expect("validated context labels"));
        let input = head::head_input(&e, priors);
        let p = &self.params;
        head::sigmoid(head::forward(&p.wh, &p.bh, &p.wo, p.bo, &input).1)
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub predictor: LinkPredictor,
    pub log: Vec<EpochLog>,
    /// Epoch whose parameters were kept (1-based).
    pub best_epoch: usize,
    pub best_val_mrr: Option<f64>,
    /// Outcome of the first stage when `mode` is `Ncnc`.
    pub completion_log: Option<Vec<EpochLog>>,
}

/// Builds the training context of `split`: the graph without validation and
/// test edges, and the prior counted on training edges only.
pub fn training_context(
    g: &Graph,
    split: &EdgeSplit,
    labels: Option<&Labels>,
    cfg: &ModelConfig,
) -> Result<Arc<PairContext>> {
    let train_graph = split.train_graph(g)?;
    let prior = labels
        .map(|l| Ok::<_, Error>((ClassPriorMatrix::from_edges(&split.train_edges, l)?, l.clone())))
        .transpose()?;
    Ok(Arc::new(PairContext::new(
        train_graph,
        g.features(),
        prior,
        cfg.normalize_features,
        cfg.prior_transform,
    )?))
}

/// Trains a model of `mode` on `split`. Prior-fused modes need `labels`
/// (true classes or pseudo-labels). `Ncnc` first trains an `Ncn` model and
/// freezes it as the completion scorer.
pub fn train(
    g: &Graph,
    split: &EdgeSplit,
    labels: Option<&Labels>,
    mode: ModelMode,
    cfg: &ModelConfig,
    seed: u64,
) -> Result<TrainOutcome> {
    if mode.uses_priors() && labels.is_none() {
        return Err(Error::Config(format!("{mode:?} fuses class priors and needs labels")));
    }
    let ctx = training_context(g, split, labels, cfg)?;
    train_in_context(ctx, split, mode, cfg, seed)
}

pub fn train_in_context(
    ctx: Arc<PairContext>,
    split: &EdgeSplit,
    mode: ModelMode,
    cfg: &ModelConfig,
    seed: u64,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if mode.uses_priors() && ctx.prior().is_none() {
        return Err(Error::Config(format!("{mode:?} fuses class priors and needs labels")));
    }
    match mode {
        ModelMode::Ncnc => {
            let first = fit(Arc::clone(&ctx), split, ModelMode::Ncn, cfg, seed, None)?;
            let second_seed = rng::rng(seed).next_u64();
            let mut out = fit(ctx, split, ModelMode::Ncnc, cfg, second_seed, Some(first.predictor))?;
            out.completion_log = Some(first.log);
            Ok(out)
        }
        _ => fit(ctx, split, mode, cfg, seed, None),
    }
}

fn fit(
    ctx: Arc<PairContext>,
    split: &EdgeSplit,
    mode: ModelMode,
    cfg: &ModelConfig,
    seed: u64,
    completion: Option<LinkPredictor>,
) -> Result<TrainOutcome> {
    let f = ctx.input.n_features();
    let d = cfg.hidden_dim;
    let input_dim = if mode.uses_priors() { 2 * d + 2 } else { 2 * d };
    let mut params = BackboneParams::glorot(f, d, input_dim, cfg.mlp_hidden, rng::stage_seed(seed, Stage::Init));
    let mut model = LinkPredictor::new(mode, params.clone(), cfg.clone(), seed, Arc::clone(&ctx), completion)?;

    let n_pos = split.train_edges.len();
    if n_pos == 0 {
        return Err(Error::Config("split has no training edges".into()));
    }
    let unmasked_positives = if cfg.target_fraction >= 1.0 {
        Some(model.batch(split.train_edges.clone(), vec![1.0; n_pos])?)
    } else {
        None
    };
    let valid = if split.valid_edges.is_empty() || split.valid_negatives.is_empty() {
        None
    } else {
        let pairs: Vec<Edge> = split.valid_edges.iter().chain(&split.valid_negatives).copied().collect();
        let n = pairs.len();
        Some(model.batch(pairs, vec![0.0; n])?)
    };
    let negative_base = rng::stage_seed(seed, Stage::TrainNegatives);
    let mask_base = rng::stage_seed(seed, Stage::TargetMask);
    let mut optimizer = OptimizerState::new(cfg, &params);

    let mut log = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, BackboneParams)> = None;
    let mut since_best = 0;
    for epoch in 1..=cfg.epochs {
        // Targets of this epoch are removed from the message-passing graph,
        // so training pairs look like held-out pairs.
        let (epoch_ctx, positives) = match &unmasked_positives {
            Some(all) => (Arc::clone(&ctx), all.clone()),
            None => {
                let mut edges = split.train_edges.clone();
                rng::shuffle(&mut rng::rng(mask_base.wrapping_add(epoch as u64)), &mut edges);
                let n_targets = ((cfg.target_fraction * n_pos as f64).ceil() as usize).clamp(1, n_pos);
                let message = edges.split_off(n_targets);
                let masked = Arc::new(ctx.with_message_edges(message)?);
                let batch = model.batch_on(&masked, edges, 1.0)?;
                (masked, batch)
            }
        };
        let negatives = sample_negatives(
            &ctx.graph,
            positives.len(),
            negative_base.wrapping_add(epoch as u64),
            &Default::default(),
        )
        .or_else(|e| match e {
            Error::Capacity { available, .. } => {
                sample_negatives(&ctx.graph, available, negative_base.wrapping_add(epoch as u64), &Default::default())
            }
            other => Err(other),
        })?;
        let neg_batch = model.batch_on(&epoch_ctx, negatives, 0.0)?;
        let batch = concat(&positives, &neg_batch);

        let (loss, grad) = params.loss_and_grad(&epoch_ctx, &batch)?;
        if !loss.is_finite() {
            return Err(Error::Training { epoch, loss });
        }
        optimizer.step(&mut params, &grad);
        if !params.is_finite() {
            return Err(Error::Training { epoch, loss: f64::NAN });
        }

        let val_mrr = match &valid {
            Some(vb) => {
                let h = params.embed_nodes(&ctx);
                let logits = params.logits(&h, vb);
                if logits.iter().any(|l| !l.is_finite()) {
                    return Err(Error::Training { epoch, loss });
                }
                let n_pos_valid = split.valid_edges.len();
                let ranks = rank_all(&logits[..n_pos_valid], &logits[n_pos_valid..])?;
                Some(mrr(&ranks)?)
            }
            None => None,
        };
        log.push(EpochLog { epoch, loss, val_mrr });

        if let Some(v) = val_mrr {
            if best.as_ref().map_or(true, |(b, _, _)| v > *b) {
                best = Some((v, epoch, params.clone()));
                since_best = 0;
            } else {
                since_best += 1;
                if cfg.patience > 0 && since_best >= cfg.patience {
                    break;
                }
            }
        }
    }

    let (best_val_mrr, best_epoch, kept) = match best {
        Some((v, e, p)) => (Some(v), e, p),
        None => (None, log.len(), params),
    };
    let completion = model.completion.take().map(|b| *b);
    model = LinkPredictor::new(mode, kept, cfg.clone(), seed, ctx, completion)?;
    Ok(TrainOutcome {
        predictor: model,
        log,
        best_epoch,
        best_val_mrr,
        completion_log: None,
    })
}

fn concat(a: &PairBatch, b: &PairBatch) -> PairBatch {
    let mut out = a.clone();
    out.pairs.extend_from_slice(&b.pairs);
    out.targets.extend_from_slice(&b.targets);
    out.sets.extend(b.sets.iter().cloned());
    out.priors.extend_from_slice(&b.priors);
    out
}

/// Per-tensor optimizer state. Weight decay applies to weight matrices and
/// the output weights, never to biases.
struct OptimizerState {
    kind: Optimizer,
    lr: f64,
    momentum: f64,
    weight_decay: f64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
    t: i32,
}

const DECAYED: [bool; 6] = [true, true, true, false, true, false];

impl OptimizerState {
    fn new(cfg: &ModelConfig, params: &BackboneParams) -> Self {
        let zeros: Vec<Vec<f64>> = params.tensors().iter().map(|t| vec![0.0; t.len()]).collect();
        debug_assert_eq!(zeros.len(), TENSOR_NAMES.len());
        OptimizerState {
            kind: cfg.optimizer,
            lr: cfg.learning_rate,
            momentum: cfg.momentum,
            weight_decay: cfg.weight_decay,
            first: zeros.clone(),
            second: zeros,
            t: 0,
        }
    }

    fn step(&mut self, params: &mut BackboneParams, grad: &BackboneParams) {
        self.t += 1;
        let (b1, b2, eps) = (0.9, 0.999, 1e-8);
        let c1 = 1.0 - f64::powi(b1, self.t);
        let c2 = 1.0 - f64::powi(b2, self.t);
        for (i, (p, g)) in params.tensors_mut().into_iter().zip(grad.tensors()).enumerate() {
            let wd = if DECAYED[i] { self.weight_decay } else { 0.0 };
            let m = &mut self.first[i];
            let v = &mut self.second[i];
            for j in 0..p.len() {
                let gj = g[j] + wd * p[j];
                match self.kind {
                    Optimizer::Sgd => {
                        m[j] = self.momentum * m[j] + gj;
                        p[j] -= self.lr * m[j];
                    }
                    Optimizer::Adam => {
                        m[j] = b1 * m[j] + (1.0 - b1) * gj;
                        v[j] = b2 * v[j] + (1.0 - b2) * gj * gj;
                        p[j] -= self.lr * (m[j] / c1) / ((v[j] / c2).sqrt() + eps);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::PlantedPartition;
    use crate::split::{split_edges, SplitRatios};

    fn small_cfg() -> ModelConfig {
        ModelConfig {
            hidden_dim: 8,
            mlp_hidden: 8,
            epochs: 30,
            patience: 0,
            ..Default::default()
        }
    }

    #[test]
    fn training_is_deterministic() {
        let g = PlantedPartition::default().generate(3);
        let split = split_edges(&g, SplitRatios::default(), 3).unwrap();
        let labels = g.labels().unwrap();
        let a = train(&g, &split, Some(labels), ModelMode::Ncn, &small_cfg(), 5).unwrap();
        let b = train(&g, &split, Some(labels), ModelMode::Ncn, &small_cfg(), 5).unwrap();
        assert_eq!(a.predictor.params, b.predictor.params);
        assert_eq!(a.log, b.log);
        let c = train(&g, &split, Some(labels), ModelMode::Ncn, &small_cfg(), 6).unwrap();
        assert_ne!(a.predictor.params, c.predictor.params);
    }

    #[test]
    fn training_reduces_loss() {
        let g = PlantedPartition::default().generate(1);
        let split = split_edges(&g, SplitRatios::default(), 1).unwrap();
        let out = train(&g, &split, g.labels(), ModelMode::Ncn, &small_cfg(), 2).unwrap();
        let first = out.log[0].loss;
        let last = out.log.last().unwrap().loss;
        assert!(last < first, "{first} -> {last}");
        assert!(out.best_val_mrr.unwrap() > 0.0);
    }

    #[test]
    fn prior_modes_need_labels() {
        let g = PlantedPartition::default().generate(1);
        let split = split_edges(&g, SplitRatios::default(), 1).unwrap();
        assert!(matches!(
            train(&g, &split, None, ModelMode::Ncn, &small_cfg(), 0),
            Err(Error::Config(_))
        ));
        let out = train(&g, &split, None, ModelMode::BackboneOnly, &small_cfg(), 0).unwrap();
        assert_eq!(out.predictor.params.input_dim(), 16);
    }

    #[test]
    fn divergence_is_reported() {
        let g = PlantedPartition::default().generate(1);
        let split = split_edges(&g, SplitRatios::default(), 1).unwrap();
        let cfg = ModelConfig {
            learning_rate: 1e200,
            optimizer: Optimizer::Sgd,
            momentum: 0.0,
            ..small_cfg()
        };
        assert!(matches!(
            train(&g, &split, g.labels(), ModelMode::Ncn, &cfg, 0),
            Err(Error::Training { .. })
        ));
    }

    #[test]
    fn ncnc_trains_on_frozen_ncn() {
        let g = PlantedPartition::default().generate(2);
        let split = split_edges(&g, SplitRatios::default(), 2).unwrap();
        let cfg = ModelConfig {
            epochs: 5,
            ..small_cfg()
        };
        let out = train(&g, &split, g.labels(), ModelMode::Ncnc, &cfg, 1).unwrap();
        let p = &out.predictor;
        assert_eq!(p.mode, ModelMode::Ncnc);
        assert_eq!(p.completion().unwrap().mode, ModelMode::Ncn);
        assert_eq!(out.completion_log.as_ref().unwrap().len(), 5);
        let scores = p.predict(&split.test_edges).unwrap();
        assert!(scores.iter().all(|&s| s > 0.0 && s < 1.0));
    }
}
