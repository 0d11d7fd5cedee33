//! Message-passing link predictor with class-prior fusion.
//!
//! A two-layer degree-normalized encoder produces node embeddings `H`. A pair
//! `(x, y)` is embedded as `[H[x] ⊙ H[y], Σ_u p_u H[u]]`, where the sum runs
//! over common neighbors (`p_u = 1`) or, with completion, over the neighbor
//! union weighted by the probability that `u` is a missing common neighbor.
//! The fusion head appends the two class-prior features and scores the pair
//! with a one-hidden-layer MLP and a sigmoid.
//!
//! All gradients are derived by hand; [`gradient_check`] compares them with
//! central finite differences.

mod checkpoint;
mod encoder;
mod gradcheck;
mod head;
mod link;
mod network;
pub mod sparse;
mod train;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use checkpoint::Checkpoint;
pub use encoder::{mpnn_forward, EncoderCache};
pub use gradcheck::{gradient_check, GradCheckReport};
pub use head::fuse_and_predict;
pub use link::{cnc_probability, ncn_embed, ncnc_embed, LinkEmbedding};
pub use network::{BackboneParams, PairBatch, PairContext};
pub use train::{train, train_in_context, training_context, EpochLog, LinkPredictor, TrainOutcome};

/// Which link embedding and head inputs the model uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelMode {
    /// Common-neighbor embedding plus prior features.
    Ncn,
    /// Completed common-neighbor embedding plus prior features; needs a
    /// trained `Ncn` model as the completion scorer.
    Ncnc,
    /// Common-neighbor embedding without prior features.
    #[serde(alias = "backbone-only")]
    BackboneOnly,
}

impl ModelMode {
    pub fn uses_priors(self) -> bool {
        !matches!(self, ModelMode::BackboneOnly)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModelMode::Ncn => "ncn",
            ModelMode::Ncnc => "ncnc",
            ModelMode::BackboneOnly => "backbone_only",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ncn" => Ok(ModelMode::Ncn),
            "ncnc" => Ok(ModelMode::Ncnc),
            "backbone_only" | "backbone-only" => Ok(ModelMode::BackboneOnly),
            other => Err(Error::Config(format!(
                "unknown model mode `{other}` (expected ncn, ncnc or backbone_only)"
            ))),
        }
    }
}

/// How prior probabilities enter the fusion head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorTransform {
    #[default]
    Raw,
    /// `ln(max(p, 1e-6))`.
    Log,
}

impl PriorTransform {
    pub fn apply(self, p: f64) -> f64 {
        match self {
            PriorTransform::Raw => p,
            PriorTransform::Log => p.max(1e-6).ln(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    /// Plain gradient descent, with heavy-ball momentum when `momentum > 0`.
    Sgd,
    #[default]
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Embedding width `d`.
    pub hidden_dim: usize,
    /// Fusion MLP width `h`.
    pub mlp_hidden: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    pub momentum: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    /// Epochs without a validation MRR improvement before stopping; 0 disables.
    pub patience: usize,
    /// Fraction of training edges used as positives each epoch; those edges
    /// are removed from the message-passing graph for that epoch. At 1.0
    /// every training edge is a positive and nothing is removed.
    pub target_fraction: f64,
    /// Scale feature rows to sum 1.
    pub normalize_features: bool,
    pub prior_transform: PriorTransform,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            hidden_dim: 64,
            mlp_hidden: 64,
            learning_rate: 0.01,
            optimizer: Optimizer::Adam,
            momentum: 0.9,
            weight_decay: 0.0,
            epochs: 200,
            patience: 30,
            target_fraction: 0.5,
            normalize_features: false,
            prior_transform: PriorTransform::Raw,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_dim == 0 || self.mlp_hidden == 0 {
            return Err(Error::Config("hidden_dim and mlp_hidden must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate {} must be positive", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!("momentum {} must be in [0, 1)", self.momentum)));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::Config("weight_decay must be nonnegative".into()));
        }
        if !(self.target_fraction > 0.0 && self.target_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "target_fraction {} must be in (0, 1]",
                self.target_fraction
            )));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be positive".into()));
        }
        Ok(())
    }
}
