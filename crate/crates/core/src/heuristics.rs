//! Structural link heuristics and their class-aware extension.
//!
//! The class-aware score adds a prior term to any structural score:
//!
//! ```text
//! H_C(x, y) = H(x, y) + beta * (alpha1 * P(c_y|c_x) + alpha2 * P(c_x|c_y)) / Z(x, y)
//! Z(x, y)   = sum over v in N(x) ∪ N(y), i in {x, y} of
//!             omega1_i * P(c_i|c_v) + omega2_i * P(c_v|c_i)
//! ```
//!
//! with `Z = 1` when local normalization is off. The coefficients are fixed
//! configuration values here; the learned counterpart lives in [`crate::model`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Labels, NodeId};
use crate::prior::{lookup_prior, ClassPriorMatrix};

/// Truncated geometric walk weighting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaDecayConfig {
    pub gamma: f64,
    /// Walk lengths `1..=max_length` are summed.
    pub max_length: usize,
}

impl Default for GammaDecayConfig {
    fn default() -> Self {
        GammaDecayConfig {
            gamma: 0.05,
            max_length: 4,
        }
    }
}

impl GammaDecayConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Config(format!("gamma = {} outside (0, 1)", self.gamma)));
        }
        if self.max_length == 0 {
            return Err(Error::Config("max_length must be at least 1".into()));
        }
        Ok(())
    }

    /// Bound on the omitted tail `sum_{l > L} (gamma * growth)^l`, valid when
    /// walk counts grow at most like `growth^l` and `gamma * growth < 1`.
    pub fn tail_bound(&self, growth: f64) -> f64 {
        let q = self.gamma * growth;
        if q >= 1.0 {
            f64::INFINITY
        } else {
            q.powi(self.max_length as i32 + 1) / (1.0 - q)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassHeuristicParams {
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta: f64,
    /// `(omega1_x, omega2_x, omega1_y, omega2_y)`.
    pub omega: [f64; 4],
    pub normalize_locally: bool,
}

impl Default for ClassHeuristicParams {
    fn default() -> Self {
        ClassHeuristicParams {
            alpha1: 1.0,
            alpha2: 1.0,
            beta: 1.0,
            omega: [1.0; 4],
            normalize_locally: false,
        }
    }
}

impl ClassHeuristicParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) {
            return Err(Error::Config(format!("beta = {} must be positive", self.beta)));
        }
        if self.alpha1 < 0.0 || self.alpha2 < 0.0 || self.omega.iter().any(|&w| w < 0.0) {
            return Err(Error::Config("alpha and omega must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Common neighbors: `|N(x) ∩ N(y)|`.
pub fn cn_score(g: &Graph, x: NodeId, y: NodeId) -> f64 {
    g.common_neighbor_iter(x, y).count() as f64
}

/// Adamic–Adar: `sum over common neighbors z of 1 / ln d(z)`.
pub fn aa_score(g: &Graph, x: NodeId, y: NodeId) -> f64 {
    g.common_neighbor_iter(x, y)
        .fold(0.0, |acc, z| acc + 1.0 / (g.degree(z) as f64).ln())
}

/// Resource allocation: `sum over common neighbors z of 1 / d(z)`.
pub fn ra_score(g: &Graph, x: NodeId, y: NodeId) -> f64 {
    g.common_neighbor_iter(x, y)
        .fold(0.0, |acc, z| acc + 1.0 / g.degree(z) as f64)
}

/// Truncated Katz index `sum_{l=1..L} gamma^l * walks_l(x, y)`, by repeated
/// sparse propagation of the indicator of `x`.
pub fn katz_score(g: &Graph, x: NodeId, y: NodeId, cfg: &GammaDecayConfig) -> f64 {
    let n = g.n_nodes();
    let mut walks = vec![0.0f64; n];
    let mut next = vec![0.0f64; n];
    walks[x] = 1.0;
    let mut frontier = vec![x];
    let mut score = 0.0;
    let mut weight = 1.0;
    for _ in 0..cfg.max_length {
        let mut touched = Vec::new();
        for &u in &frontier {
            let w = walks[u];
            for &v in g.neighbors(u) {
                if next[v] == 0.0 {
                    touched.push(v);
                }
                next[v] += w;
            }
        }
        for &u in &frontier {
            walks[u] = 0.0;
        }
        std::mem::swap(&mut walks, &mut next);
        touched.sort_unstable();
        frontier = touched;
        weight *= cfg.gamma;
        score += weight * walks[y];
    }
    score
}

/// Local normalizer `Z(x, y)`; `1` when normalization is off.
pub fn z_normalizer(
    g: &Graph,
    prior: &ClassPriorMatrix,
    labels: &Labels,
    x: NodeId,
    y: NodeId,
    params: &ClassHeuristicParams,
) -> Result<f64> {
    if !params.normalize_locally {
        return Ok(1.0);
    }
    let cx = labels.class_of(x)?;
    let cy = labels.class_of(y)?;
    let [w1x, w2x, w1y, w2y] = params.omega;
    let mut z = 0.0;
    for v in g.neighbor_union(x, y) {
        let cv = labels.class_of(v)?;
        z += w1x * prior.prob(cv, cx) + w2x * prior.prob(cx, cv);
        z += w1y * prior.prob(cv, cy) + w2y * prior.prob(cy, cv);
    }
    if z == 0.0 {
        return Err(Error::DegenerateNormalizer(x, y));
    }
    Ok(z)
}

/// `H_C(x, y)` on top of a precomputed structural score.
pub fn class_heuristic_score(
    g: &Graph,
    prior: &ClassPriorMatrix,
    labels: &Labels,
    x: NodeId,
    y: NodeId,
    structural: f64,
    params: &ClassHeuristicParams,
) -> Result<f64> {
    let (p_yx, p_xy) = lookup_prior(prior, labels, x, y)?;
    let class_term = params.alpha1 * p_yx + params.alpha2 * p_xy;
    // A zero numerator needs no normalizer, even a degenerate one.
    if class_term == 0.0 {
        return Ok(structural);
    }
    let z = z_normalizer(g, prior, labels, x, y, params)?;
    Ok(structural + params.beta * class_term / z)
}

/// Which structural score a heuristic scorer uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Structural {
    Cn,
    Aa,
    Ra,
    Katz,
}

impl Structural {
    pub fn score(self, g: &Graph, x: NodeId, y: NodeId, katz: &GammaDecayConfig) -> f64 {
        match self {
            Structural::Cn => cn_score(g, x, y),
            Structural::Aa => aa_score(g, x, y),
            Structural::Ra => ra_score(g, x, y),
            Structural::Katz => katz_score(g, x, y, katz),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> Graph {
        Graph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    #[test]
    fn cn_triangle_and_disconnected() {
        assert_eq!(cn_score(&triangle(), 0, 1), 1.0);
        let g = Graph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        assert_eq!(cn_score(&g, 0, 3), 0.0);
        assert_eq!(aa_score(&g, 0, 3), 0.0);
        assert_eq!(ra_score(&g, 0, 3), 0.0);
    }

    #[test]
    fn aa_ra_on_path() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        assert!((aa_score(&g, 0, 2) - 1.442_695_040_888_963_4).abs() < 1e-12);
        assert_eq!(ra_score(&g, 0, 2), 0.5);
    }

    #[test]
    fn katz_small_cases() {
        let edge = Graph::from_edges(2, [(0, 1)]).unwrap();
        let cfg = GammaDecayConfig {
            gamma: 0.5,
            max_length: 1,
        };
        assert_eq!(katz_score(&edge, 0, 1, &cfg), 0.5);
        let path = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let cfg = GammaDecayConfig {
            gamma: 0.5,
            max_length: 2,
        };
        assert_eq!(katz_score(&path, 0, 2, &cfg), 0.25);
    }

    #[test]
    fn katz_triangle_closed_form() {
        // Walks between two triangle corners: 1, 1, 3 for lengths 1..3.
        let cfg = GammaDecayConfig {
            gamma: 0.1,
            max_length: 3,
        };
        let expected = 0.1 + 0.01 + 3.0 * 0.001;
        assert!((katz_score(&triangle(), 0, 1, &cfg) - expected).abs() < 1e-15);
    }

    #[test]
    fn gamma_config_validation() {
        assert!(GammaDecayConfig { gamma: 1.0, max_length: 2 }.validate().is_err());
        assert!(GammaDecayConfig { gamma: 0.3, max_length: 0 }.validate().is_err());
        assert!(GammaDecayConfig::default().validate().is_ok());
    }

    #[test]
    fn z_is_one_without_local_normalization() {
        let g = triangle();
        let labels = Labels::dense(&[0, 1, 0]);
        let p = ClassPriorMatrix::from_edges(&g.edges().collect::<Vec<_>>(), &labels).unwrap();
        let params = ClassHeuristicParams::default();
        assert_eq!(z_normalizer(&g, &p, &labels, 0, 1, &params).unwrap(), 1.0);
    }

    #[test]
    fn z_on_mono_label_star() {
        let g = Graph::from_edges(6, [(0, 1), (0, 2), (0, 3), (0, 4), (4, 5)]).unwrap();
        let labels = Labels::dense(&[0; 6]);
        let p = ClassPriorMatrix::from_edges(&g.edges().collect::<Vec<_>>(), &labels).unwrap();
        let params = ClassHeuristicParams {
            normalize_locally: true,
            ..Default::default()
        };
        // N(0) ∪ N(5) = {1, 2, 3, 4}.
        assert_eq!(z_normalizer(&g, &p, &labels, 0, 5, &params).unwrap(), 16.0);
    }

    #[test]
    fn degenerate_z() {
        let g = Graph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        let labels = Labels::dense(&[0, 0, 1, 1]);
        let p = ClassPriorMatrix::from_edges(&[(2, 3)], &labels).unwrap();
        let params = ClassHeuristicParams {
            normalize_locally: true,
            ..Default::default()
        };
        assert!(matches!(
            z_normalizer(&g, &p, &labels, 0, 1, &params),
            Err(Error::DegenerateNormalizer(0, 1))
        ));
    }

    #[test]
    fn hand_evaluated_class_score() {
        let labels = Labels::dense(&[0, 1, 0, 0]);
        let p = ClassPriorMatrix::from_edges(&[(0, 1), (2, 3)], &labels).unwrap();
        let g = Graph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        let s = class_heuristic_score(&g, &p, &labels, 0, 1, 2.0, &ClassHeuristicParams::default())
            .unwrap();
        assert!((s - (2.0 + 1.0 / 3.0 + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn vanishing_beta() {
        let labels = Labels::dense(&[0, 1, 0, 0]);
        let p = ClassPriorMatrix::from_edges(&[(0, 1), (2, 3)], &labels).unwrap();
        let g = Graph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        let params = ClassHeuristicParams {
            beta: 1e-12,
            ..Default::default()
        };
        let s = class_heuristic_score(&g, &p, &labels, 0, 1, 5.0, &params).unwrap();
        assert!((s - 5.0).abs() <= 1e-10);
    }

    #[test]
    fn class_term_rescues_pair_without_common_neighbors() {
        // Two yellow-orange pairs are linked in training; the query pair
        // shares no neighbor but inherits the class-pair prior.
        let g = Graph::from_edges(6, [(0, 1), (2, 3)]).unwrap();
        let labels = Labels::dense(&[0, 1, 0, 1, 0, 1]);
        let p = ClassPriorMatrix::from_edges(&[(0, 1), (2, 3)], &labels).unwrap();
        assert_eq!(cn_score(&g, 4, 5), 0.0);
        let s = class_heuristic_score(&g, &p, &labels, 4, 5, 0.0, &ClassHeuristicParams::default())
            .unwrap();
        assert!(s > 0.0);
    }
}
