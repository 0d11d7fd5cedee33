//! Pair embeddings over common neighbors, with optional completion.

use ndarray::Array2;

use crate::graph::{Graph, NodeId};

/// `[H[x] ⊙ H[y], Σ_u p_u H[u]]`, length `2d`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkEmbedding(pub Vec<f64>);

impl LinkEmbedding {
    pub fn dim(&self) -> usize {
        self.0.len() / 2
    }

    pub fn hadamard(&self) -> &[f64] {
        &self.0[..self.dim()]
    }

    pub fn aggregate(&self) -> &[f64] {
        &self.0[self.dim()..]
    }
}

/// Probability that `u` is a common neighbor of `x` and `y`: 1 for an
/// observed common neighbor, `Â(x, u)` when only the `y` side is observed,
/// `Â(y, u)` when only the `x` side is observed, 0 otherwise.
pub fn cnc_probability<F>(g: &Graph, scorer: F, x: NodeId, y: NodeId, u: NodeId) -> f64
where
    F: Fn(NodeId, NodeId) -> f64,
{
    match (g.has_edge(x, u), g.has_edge(y, u)) {
        (true, true) => 1.0,
        (false, true) => scorer(x, u),
        (true, false) => scorer(y, u),
        (false, false) => 0.0,
    }
}

/// Weighted index set of the plain common-neighbor embedding.
pub(crate) fn ncn_set(g: &Graph, x: NodeId, y: NodeId) -> Vec<(NodeId, f64)> {
    g.common_neighbor_iter(x, y).map(|u| (u, 1.0)).collect()
}

/// Weighted index set of the completed embedding: `N(x) ∪ N(y)` minus the
/// endpoints themselves, weighted by [`cnc_probability`].
pub(crate) fn ncnc_set<F>(g: &Graph, scorer: F, x: NodeId, y: NodeId) -> Vec<(NodeId, f64)>
where
    F: Fn(NodeId, NodeId) -> f64,
{
    g.neighbor_union(x, y)
        .into_iter()
        .filter(|&u| u != x && u != y)
        .map(|u| (u, cnc_probability(g, &scorer, x, y, u)))
        .filter(|&(_, p)| p != 0.0)
        .collect()
}

pub(crate) fn embed(h: &Array2<f64>, x: NodeId, y: NodeId, set: &[(NodeId, f64)]) -> LinkEmbedding {
    let d = h.ncols();
    let mut out = vec![0.0; 2 * d];
    for (k, o) in out[..d].iter_mut().enumerate() {
        *o = h[[x, k]] * h[[y, k]];
    }
    for &(u, p) in set {
        for (o, &v) in out[d..].iter_mut().zip(h.row(u)) {
            *o += p * v;
        }
    }
    LinkEmbedding(out)
}

pub fn ncn_embed(g: &Graph, h: &Array2<f64>, x: NodeId, y: NodeId) -> LinkEmbedding {
    embed(h, x, y, &ncn_set(g, x, y))
}

pub fn ncnc_embed<F>(g: &Graph, h: &Array2<f64>, x: NodeId, y: NodeId, scorer: F) -> LinkEmbedding
where
    F: Fn(NodeId, NodeId) -> f64,
{
    embed(h, x, y, &ncnc_set(g, scorer, x, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::erdos_renyi;
    use crate::rng;

    #[test]
    fn probability_branches() {
        // 0-2, 1-2, 1-3, 0-4
        let g = Graph::from_edges(6, [(0, 2), (1, 2), (1, 3), (0, 4)]).unwrap();
        let scorer = |a: usize, b: usize| if (a, b) == (0, 3) { 0.73 } else { 0.11 };
        assert_eq!(cnc_probability(&g, scorer, 0, 1, 2), 1.0);
        assert_eq!(cnc_probability(&g, scorer, 0, 1, 3), 0.73);
        assert_eq!(cnc_probability(&g, scorer, 0, 1, 4), 0.11);
        assert_eq!(cnc_probability(&g, scorer, 0, 1, 5), 0.0);
    }

    #[test]
    fn empty_common_set_gives_zero_aggregate() {
        let g = Graph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        let h = ndarray::array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0], [7.0, 8.0]];
        let e = ncn_embed(&g, &h, 0, 3);
        assert_eq!(e.hadamard(), &[7.0, 16.0]);
        assert_eq!(e.aggregate(), &[0.0, 0.0]);
    }

    #[test]
    fn completion_with_full_overlap_or_zero_scorer_is_ncn() {
        let g = erdos_renyi(25, 70, 2);
        let mut r = rng::rng(3);
        let h = Array2::from_shape_fn((25, 4), |_| rng::unit_f64(&mut r));
        for x in 0..25 {
            for y in x + 1..25 {
                let zero = ncnc_embed(&g, &h, x, y, |_, _| 0.0);
                assert_eq!(zero, ncn_embed(&g, &h, x, y));
            }
        }
        let star = Graph::from_edges(4, [(0, 2), (1, 2), (0, 3), (1, 3)]).unwrap();
        let h4 = Array2::from_shape_fn((4, 3), |(i, j)| (i + 2 * j) as f64);
        assert_eq!(ncnc_embed(&star, &h4, 0, 1, |_, _| 0.9), ncn_embed(&star, &h4, 0, 1));
    }

    #[test]
    fn aggregate_matches_explicit_loop() {
        let g = erdos_renyi(20, 60, 9);
        let mut r = rng::rng(4);
        let h = Array2::from_shape_fn((20, 3), |_| rng::unit_f64(&mut r) - 0.5);
        let scorer = |a: usize, b: usize| ((a * 31 + b * 17) % 100) as f64 / 100.0;
        for (x, y) in [(0, 1), (2, 7), (5, 19), (3, 4)] {
            let e = ncnc_embed(&g, &h, x, y, scorer);
            let mut expected = [0.0; 3];
            for u in 0..20 {
                if u == x || u == y {
                    continue;
                }
                let p = cnc_probability(&g, scorer, x, y, u);
                for k in 0..3 {
                    expected[k] += p * h[[u, k]];
                }
            }
            for k in 0..3 {
                assert!((e.aggregate()[k] - expected[k]).abs() < 1e-12);
            }
        }
    }
}
