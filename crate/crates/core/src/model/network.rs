//! Parameters, batches and the full forward/backward pass.

use ndarray::{Array1, Array2};
use rayon::prelude::*;

use super::encoder::{self, EncoderInput};
use super::head::{self, sigmoid, softplus};
use super::link::{embed, LinkEmbedding};
use super::sparse::SparseRows;
use super::PriorTransform;
use crate::error::{Error, Result};
use crate::graph::{Edge, Graph, Labels, NodeId};
use crate::prior::{lookup_prior, ClassPriorMatrix};
use crate::rng;

/// Encoder weights `W1` (`F×d`), `W2` (`d×d`) and the fusion head
/// (`Wh`: `in×h`, `bh`, `wo`: `h`, `bo`), with `in = 2d + 2` when priors
/// are fused and `2d` otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct BackboneParams {
    pub w1: Array2<f64>,
    pub w2: Array2<f64>,
    pub wh: Array2<f64>,
    pub bh: Array1<f64>,
    pub wo: Array1<f64>,
    pub bo: f64,
}

pub(crate) const TENSOR_NAMES: [&str; 6] = ["w1", "w2", "wh", "bh", "wo", "bo"];

impl BackboneParams {
    pub fn zeros(n_features: usize, d: usize, input_dim: usize, h: usize) -> Self {
        BackboneParams {
            w1: Array2::zeros((n_features, d)),
            w2: Array2::zeros((d, d)),
            wh: Array2::zeros((input_dim, h)),
            bh: Array1::zeros(h),
            wo: Array1::zeros(h),
            bo: 0.0,
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn glorot(n_features: usize, d: usize, input_dim: usize, h: usize, seed: u64) -> Self {
        let mut r = rng::rng(seed);
        let mut p = Self::zeros(n_features, d, input_dim, h);
        let mut fill = |t: &mut [f64], fan_in: usize, fan_out: usize| {
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for v in t {
                *v = (2.0 * rng::unit_f64(&mut r) - 1.0) * a;
            }
        };
        fill(p.w1.as_slice_mut().expect("standard layout"), n_features, d);
        fill(p.w2.as_slice_mut().expect("standard layout"), d, d);
        fill(p.wh.as_slice_mut().expect("standard layout"), input_dim, h);
        fill(p.wo.as_slice_mut().expect("standard layout"), h, 1);
        p
    }

    pub fn n_features(&self) -> usize {
        self.w1.nrows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w2.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.wh.nrows()
    }

    pub fn mlp_hidden(&self) -> usize {
        self.wh.ncols()
    }

    pub fn uses_priors(&self) -> bool {
        self.input_dim() == 2 * self.hidden_dim() + 2
    }

    /// Flat views in [`TENSOR_NAMES`] order.
    pub fn tensors(&self) -> [&[f64]; 6] {
        [
            self.w1.as_slice().expect("standard layout"),
            self.w2.as_slice().expect("standard layout"),
            self.wh.as_slice().expect("standard layout"),
            self.bh.as_slice().expect("standard layout"),
            self.wo.as_slice().expect("standard layout"),
            std::slice::from_ref(&self.bo),
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 6] {
        [
            self.w1.as_slice_mut().expect("standard layout"),
            self.w2.as_slice_mut().expect("standard layout"),
            self.wh.as_slice_mut().expect("standard layout"),
            self.bh.as_slice_mut().expect("standard layout"),
            self.wo.as_slice_mut().expect("standard layout"),
            std::slice::from_mut(&mut self.bo),
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    pub(crate) fn check_shapes(&self, ctx: &PairContext) -> Result<()> {
        let d = self.hidden_dim();
        let expected_in = if self.uses_priors() { 2 * d + 2 } else { 2 * d };
        if self.n_features() != ctx.input.n_features()
            || self.w1.ncols() != d
            || self.input_dim() != expected_in
            || self.bh.len() != self.mlp_hidden()
            || self.wo.len() != self.mlp_hidden()
        {
            return Err(Error::Dimension(format!(
                "parameters (W1 {:?}, W2 {:?}, Wh {:?}) do not fit {} features",
                self.w1.dim(),
                self.w2.dim(),
                self.wh.dim(),
                ctx.input.n_features()
            )));
        }
        if self.uses_priors() && ctx.prior.is_none() {
            return Err(Error::Config("prior-fused parameters need a class prior".into()));
        }
        Ok(())
    }

    /// Node embeddings on the context's training graph.
    pub fn embed_nodes(&self, ctx: &PairContext) -> Array2<f64> {
        encoder::forward(&ctx.input, &self.w1, &self.w2).h
    }

    fn head_input(&self, h: &Array2<f64>, batch: &PairBatch, i: usize) -> Vec<f64> {
        let (x, y) = batch.pairs[i];
        let e = embed(h, x, y, &batch.sets[i]);
        head::head_input(&e, self.uses_priors().then(|| batch.priors[i]))
    }

    /// Output logits for every pair of `batch`, given node embeddings `h`.
    pub fn logits(&self, h: &Array2<f64>, batch: &PairBatch) -> Vec<f64> {
        (0..batch.len())
            .into_par_iter()
            .map(|i| {
                let input = self.head_input(h, batch, i);
                head::forward(&self.wh, &self.bh, &self.wo, self.bo, &input).1
            })
            .collect()
    }

    /// Mean binary cross-entropy over `batch`.
    pub fn loss(&self, ctx: &PairContext, batch: &PairBatch) -> Result<f64> {
        self.check_shapes(ctx)?;
        let h = self.embed_nodes(ctx);
        let logits = self.logits(&h, batch);
        Ok(bce(&logits, &batch.targets))
    }

    /// Mean binary cross-entropy over `batch` and its gradient.
    pub fn loss_and_grad(&self, ctx: &PairContext, batch: &PairBatch) -> Result<(f64, BackboneParams)> {
        self.check_shapes(ctx)?;
        if batch.is_empty() {
            return Err(Error::Config("empty training batch".into()));
        }
        let d = self.hidden_dim();
        let n_hidden = self.mlp_hidden();
        let cache = encoder::forward(&ctx.input, &self.w1, &self.w2);
        let h = &cache.h;
        let scale = 1.0 / batch.len() as f64;

        let mut grad = BackboneParams::zeros(self.n_features(), d, self.input_dim(), n_hidden);
        let mut dh = Array2::<f64>::zeros(h.dim());
        let mut loss = 0.0;
        let mut d_in = vec![0.0; self.input_dim()];
        for i in 0..batch.len() {
            let input = self.head_input(h, batch, i);
            let (a, o) = head::forward(&self.wh, &self.bh, &self.wo, self.bo, &input);
            let t = batch.targets[i];
            loss += softplus(o) - t * o;

            let d_o = (sigmoid(o) - t) * scale;
            grad.bo += d_o;
            d_in.iter_mut().for_each(|v| *v = 0.0);
            for k in 0..n_hidden {
                if a[k] <= 0.0 {
                    continue;
                }
                grad.wo[k] += d_o * a[k];
                let da = d_o * self.wo[k];
                grad.bh[k] += da;
                for (j, &v) in input.iter().enumerate() {
                    grad.wh[[j, k]] += v * da;
                    d_in[j] += self.wh[[j, k]] * da;
                }
            }

            let (x, y) = batch.pairs[i];
            for k in 0..d {
                let g = d_in[k];
                let (hx, hy) = (h[[x, k]], h[[y, k]]);
                dh[[x, k]] += g * hy;
                dh[[y, k]] += g * hx;
            }
            for &(u, p) in &batch.sets[i] {
                for k in 0..d {
                    dh[[u, k]] += p * d_in[d + k];
                }
            }
        }
        let (dw1, dw2) = encoder::backward(&ctx.input, &self.w2, &cache, &dh);
        grad.w1 = dw1;
        grad.w2 = dw2;
        Ok((loss * scale, grad))
    }
}

fn bce(logits: &[f64], targets: &[f64]) -> f64 {
    let total: f64 = logits.iter().zip(targets).map(|(&o, &t)| softplus(o) - t * o).sum();
    total / logits.len() as f64
}

/// The fixed inputs a model is trained and evaluated on: the training graph,
/// its propagation operator and pre-propagated features, and the class prior
/// with the labels it was built from.
#[derive(Debug, Clone)]
pub struct PairContext {
    pub graph: Graph,
    pub(crate) input: EncoderInput,
    /// Node features after optional row normalization.
    features: SparseRows,
    prior: Option<(ClassPriorMatrix, Labels)>,
    pub transform: PriorTransform,
}

impl PairContext {
    /// `train_graph` must hold only training edges.
    pub fn new(
        train_graph: Graph,
        features: &Array2<f64>,
        prior: Option<(ClassPriorMatrix, Labels)>,
        normalize_features: bool,
        transform: PriorTransform,
    ) -> Result<Self> {
        let mut x = features.clone();
        if normalize_features {
            for mut row in x.rows_mut() {
                let s: f64 = row.sum();
                if s != 0.0 {
                    row /= s;
                }
            }
        }
        let input = EncoderInput::new(&train_graph, &x)?;
        let features = SparseRows::from_dense(&x);
        if let Some((m, labels)) = &prior {
            if let Some(v) = labels.assignment().iter().position(Option::is_none) {
                return Err(Error::MissingLabel(v));
            }
            if labels.n_nodes() != train_graph.n_nodes() {
                return Err(Error::Dimension(format!(
                    "{} labels for {} nodes",
                    labels.n_nodes(),
                    train_graph.n_nodes()
                )));
            }
            if labels.n_classes() > m.n_classes() {
                return Err(Error::Dimension(format!(
                    "{} classes but a {}x{} prior",
                    labels.n_classes(),
                    m.n_classes(),
                    m.n_classes()
                )));
            }
        }
        Ok(PairContext {
            graph: train_graph,
            input,
            features,
            prior,
            transform,
        })
    }

    /// Same features and prior over a different edge set of the same nodes.
    pub fn with_message_edges(&self, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        let graph = self.graph.with_edges(edges)?;
        let input = EncoderInput::from_sparse(&graph, &self.features);
        Ok(PairContext {
            graph,
            input,
            features: self.features.clone(),
            prior: self.prior.clone(),
            transform: self.transform,
        })
    }

    pub fn prior(&self) -> Option<&ClassPriorMatrix> {
        self.prior.as_ref().map(|(m, _)| m)
    }

    pub fn labels(&self) -> Option<&Labels> {
        self.prior.as_ref().map(|(_, l)| l)
    }

    /// Transformed `(P(c_y | c_x), P(c_x | c_y))`; `(0, 0)` without a prior.
    pub fn prior_features(&self, x: NodeId, y: NodeId) -> Result<(f64, f64)> {
        match &self.prior {
            Some((m, labels)) => {
                let (a, b) = lookup_prior(m, labels, x, y)?;
                Ok((self.transform.apply(a), self.transform.apply(b)))
            }
            None => Ok((0.0, 0.0)),
        }
    }
}

/// Pairs with targets, index sets and prior features, ready for the network.
#[derive(Debug, Clone, Default)]
pub struct PairBatch {
    pub pairs: Vec<Edge>,
    pub targets: Vec<f64>,
    /// Weighted aggregation set per pair.
    pub sets: Vec<Vec<(NodeId, f64)>>,
    pub priors: Vec<(f64, f64)>,
}

impl PairBatch {
    pub fn build<F>(ctx: &PairContext, pairs: Vec<Edge>, targets: Vec<f64>, set_of: F) -> Result<Self>
    where
        F: Fn(NodeId, NodeId) -> Vec<(NodeId, f64)> + Sync,
    {
        assert_eq!(pairs.len(), targets.len(), "one target per pair");
        let n = ctx.graph.n_nodes();
        for &(x, y) in &pairs {
            for v in [x, y] {
                if v >= n {
                    return Err(Error::Index { node: v, n_nodes: n });
                }
            }
        }
        let sets = pairs.par_iter().map(|&(x, y)| set_of(x, y)).collect();
        let priors = pairs
            .iter()
            .map(|&(x, y)| {
                ctx.prior_features(x, y).map_err(|e| Error::Scorer {
                    x,
                    y,
                    source: Box::new(e),
                })
            })
            .collect::<Result<_>>()?;
        Ok(PairBatch {
            pairs,
            targets,
            sets,
            priors,
        })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn embedding(&self, h: &Array2<f64>, i: usize) -> LinkEmbedding {
        let (x, y) = self.pairs[i];
        embed(h, x, y, &self.sets[i])
    }
}
