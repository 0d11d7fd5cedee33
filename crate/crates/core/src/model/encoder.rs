//! Two-layer degree-normalized message passing.

use ndarray::Array2;

use super::sparse::{propagation_matrix, SparseRows};
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Intermediate values of one encoder pass.
#[derive(Debug, Clone)]
pub struct EncoderCache {
    /// `S X W1`.
    pub z1: Array2<f64>,
    /// `ReLU(z1)`.
    pub h1: Array2<f64>,
    /// `S h1 W2`, the node embeddings.
    pub h: Array2<f64>,
}

/// Propagation matrix and pre-propagated features.
#[derive(Debug, Clone)]
pub(crate) struct EncoderInput {
    pub s: SparseRows,
    /// `S X`, kept sparse.
    pub sx: SparseRows,
}

impl EncoderInput {
    pub fn new(adj: &Graph, x: &Array2<f64>) -> Result<Self> {
        if x.nrows() != adj.n_nodes() {
            return Err(Error::Dimension(format!(
                "feature matrix has {} rows for {} nodes",
                x.nrows(),
                adj.n_nodes()
            )));
        }
        Ok(Self::from_sparse(adj, &SparseRows::from_dense(x)))
    }

    pub fn from_sparse(adj: &Graph, x: &SparseRows) -> Self {
        let s = propagation_matrix(adj);
        let sx = s.mul_sparse(x);
        EncoderInput { s, sx }
    }

    pub fn n_features(&self) -> usize {
        self.sx.n_cols
    }
}

pub(crate) fn forward(input: &EncoderInput, w1: &Array2<f64>, w2: &Array2<f64>) -> EncoderCache {
    let z1 = input.sx.mul_dense(w1);
    let h1 = z1.mapv(|v| v.max(0.0));
    let h = input.s.mul_dense(&h1.dot(w2));
    EncoderCache { z1, h1, h }
}

/// Gradients of `W1` and `W2` given `dL/dH`.
pub(crate) fn backward(
    input: &EncoderInput,
    w2: &Array2<f64>,
    cache: &EncoderCache,
    dh: &Array2<f64>,
) -> (Array2<f64>, Array2<f64>) {
    // S is symmetric, so Sᵀ dH = S dH.
    let dp = input.s.mul_dense(dh);
    let dw2 = cache.h1.t().dot(&dp);
    let mut dz1 = dp.dot(&w2.t());
    dz1.zip_mut_with(&cache.z1, |g, &z| {
        if z <= 0.0 {
            *g = 0.0;
        }
    });
    let dw1 = input.sx.t_mul_dense(&dz1);
    (dw1, dw2)
}

/// Node embeddings `S ReLU(S X W1) W2` with `S = D̂^{-1/2} (A + I) D̂^{-1/2}`.
pub fn mpnn_forward(adj_train: &Graph, x: &Array2<f64>, w1: &Array2<f64>, w2: &Array2<f64>) -> Result<Array2<f64>> {
    if w1.nrows() != x.ncols() || w2.nrows() != w1.ncols() {
        return Err(Error::Dimension(format!(
            "features {:?}, W1 {:?}, W2 {:?}",
            x.dim(),
            w1.dim(),
            w2.dim()
        )));
    }
    Ok(forward(&EncoderInput::new(adj_train, x)?, w1, w2).h)
}
