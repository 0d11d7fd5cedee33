//! Train/valid/test edge splits and negative sampling.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{canonical, Edge, Graph};
use crate::rng::{self, Stage};

/// Fractions of the undirected edge list assigned to each split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.85,
            valid: 0.05,
            test: 0.10,
        }
    }
}

impl SplitRatios {
    pub fn new(train: f64, valid: f64, test: f64) -> Self {
        SplitRatios { train, valid, test }
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.valid, self.test];
        if parts.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(Error::Config(format!("split ratios out of [0, 1]: {parts:?}")));
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("split ratios {parts:?} do not sum to 1")));
        }
        Ok(())
    }

    /// `(train, valid, test)` sizes for `n_edges` edges: valid and test are
    /// rounded to the nearest edge, train takes the remainder.
    pub fn sizes(&self, n_edges: usize) -> (usize, usize, usize) {
        let valid = (self.valid * n_edges as f64).round() as usize;
        let test = ((self.test * n_edges as f64).round() as usize).min(n_edges - valid);
        (n_edges - valid - test, valid, test)
    }
}

/// Default size of the shared negative pool per evaluation split.
pub const DEFAULT_NEGATIVE_POOL: usize = 500;

pub const SPLIT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeSplit {
    pub version: u32,
    pub seed: u64,
    pub ratios: SplitRatios,
    pub train_edges: Vec<Edge>,
    pub valid_edges: Vec<Edge>,
    pub test_edges: Vec<Edge>,
    pub valid_negatives: Vec<Edge>,
    pub test_negatives: Vec<Edge>,
}

impl EdgeSplit {
    /// The training-only graph (`Adj_train`): all nodes of `g`, kept even when
    /// isolated, with only training edges.
    pub fn train_graph(&self, g: &Graph) -> Result<Graph> {
        g.with_edges(self.train_edges.iter().copied())
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        crate::io::write_json(path, self)
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let split: EdgeSplit = crate::io::read_json(path)?;
        if split.version != SPLIT_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "split document version {} (expected {SPLIT_FORMAT_VERSION})",
                split.version
            )));
        }
        Ok(split)
    }
}

/// Seeded split with the default negative pool size.
pub fn split_edges(g: &Graph, ratios: SplitRatios, seed: u64) -> Result<EdgeSplit> {
    split_edges_with_pool(g, ratios, seed, DEFAULT_NEGATIVE_POOL)
}

/// Shuffles the undirected edge list with the split stream of `seed` and cuts
/// it into train/valid/test. Valid and test negatives are disjoint pools of up
/// to `pool` non-edges of the full graph each (fewer only when the graph has
/// fewer non-edges).
pub fn split_edges_with_pool(
    g: &Graph,
    ratios: SplitRatios,
    seed: u64,
    pool: usize,
) -> Result<EdgeSplit> {
    ratios.validate()?;
    let m = g.n_edges();
    if m < 10 {
        return Err(Error::Config(format!("graph has {m} edges; splitting needs at least 10")));
    }
    let mut edges: Vec<Edge> = g.edges().collect();
    rng::shuffle(&mut rng::rng(rng::stage_seed(seed, Stage::Split)), &mut edges);
    let (n_train, n_valid, _) = ratios.sizes(m);
    let test_edges = edges.split_off(n_train + n_valid);
    let valid_edges = edges.split_off(n_train);
    let train_edges = edges;

    let available = non_edge_count(g, &HashSet::new());
    let valid_count = pool.min(available / 2);
    let valid_negatives = sample_negatives(
        g,
        valid_count,
        rng::stage_seed(seed, Stage::ValidNegatives),
        &HashSet::new(),
    )?;
    let exclude: HashSet<Edge> = valid_negatives.iter().copied().collect();
    let test_count = pool.min(available - valid_count);
    let test_negatives = sample_negatives(
        g,
        test_count,
        rng::stage_seed(seed, Stage::TestNegatives),
        &exclude,
    )?;

    Ok(EdgeSplit {
        version: SPLIT_FORMAT_VERSION,
        seed,
        ratios,
        train_edges,
        valid_edges,
        test_edges,
        valid_negatives,
        test_negatives,
    })
}

/// Unordered pairs `u != v` that are neither edges of `g` nor in `exclude`.
fn non_edge_count(g: &Graph, exclude: &HashSet<Edge>) -> usize {
    let n = g.n_nodes();
    let pairs = n * n.saturating_sub(1) / 2;
    let excluded = exclude
        .iter()
        .filter(|&&(u, v)| u != v && u < n && v < n && !g.has_edge(u, v))
        .count();
    pairs - g.n_edges() - excluded
}

/// Uniformly samples `count` distinct non-edges `(u, v)`, `u < v`, avoiding
/// `exclude` (whose pairs may be given in either order).
///
/// Draws `u` and `v` independently and rejects self-pairs, edges, excluded and
/// already-drawn pairs. When more than half of the available non-edges are
/// requested, the candidates are enumerated and shuffled instead.
pub fn sample_negatives(
    g: &Graph,
    count: usize,
    seed: u64,
    exclude: &HashSet<Edge>,
) -> Result<Vec<Edge>> {
    let exclude: HashSet<Edge> = exclude.iter().map(|&(u, v)| canonical(u, v)).collect();
    let available = non_edge_count(g, &exclude);
    if count > available {
        return Err(Error::Capacity {
            requested: count,
            available,
        });
    }
    let n = g.n_nodes();
    let mut r = rng::rng(seed);
    if count == 0 {
        return Ok(Vec::new());
    }
    if 2 * count > available {
        let mut all = Vec::with_capacity(available);
        for u in 0..n {
            for v in u + 1..n {
                if !g.has_edge(u, v) && !exclude.contains(&(u, v)) {
                    all.push((u, v));
                }
            }
        }
        rng::shuffle(&mut r, &mut all);
        all.truncate(count);
        return Ok(all);
    }
    let mut seen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let u = rng::below(&mut r, n);
        let v = rng::below(&mut r, n);
        if u == v {
            continue;
        }
        let e = canonical(u, v);
        if g.has_edge(u, v) || exclude.contains(&e) || !seen.insert(e) {
            continue;
        }
        out.push(e);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::erdos_renyi;

    #[test]
    fn sizes_for_hundred_edges() {
        assert_eq!(SplitRatios::default().sizes(100), (85, 5, 10));
    }

    #[test]
    fn cora_sized_split_has_528_test_edges() {
        assert_eq!(SplitRatios::default().sizes(5278), (4486, 264, 528));
    }

    #[test]
    fn bad_ratios() {
        let g = erdos_renyi(30, 60, 1);
        let err = split_edges(&g, SplitRatios::new(0.8, 0.1, 0.2), 1).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn split_is_deterministic_partition() {
        let g = erdos_renyi(60, 100, 5);
        assert_eq!(g.n_edges(), 100);
        let a = split_edges(&g, SplitRatios::default(), 7).unwrap();
        let b = split_edges(&g, SplitRatios::default(), 7).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.train_edges.len(), a.valid_edges.len(), a.test_edges.len()), (85, 5, 10));
        let mut all: Vec<Edge> = a
            .train_edges
            .iter()
            .chain(&a.valid_edges)
            .chain(&a.test_edges)
            .copied()
            .collect();
        all.sort_unstable();
        let mut full: Vec<Edge> = g.edges().collect();
        full.sort_unstable();
        assert_eq!(all, full);
        let c = split_edges(&g, SplitRatios::default(), 8).unwrap();
        assert_ne!(a.train_edges, c.train_edges);
    }

    #[test]
    fn train_graph_keeps_isolated_nodes() {
        let g = erdos_renyi(60, 100, 5);
        let s = split_edges(&g, SplitRatios::default(), 7).unwrap();
        let t = s.train_graph(&g).unwrap();
        assert_eq!(t.n_nodes(), 60);
        assert_eq!(t.n_edges(), 85);
        for &(u, v) in &s.test_edges {
            assert!(!t.has_edge(u, v) && !t.has_edge(v, u));
        }
    }

    #[test]
    fn complete_graph_has_no_negatives() {
        let edges = (0..4).flat_map(|u| (u + 1..4).map(move |v| (u, v)));
        let k4 = Graph::from_edges(4, edges).unwrap();
        assert!(matches!(
            sample_negatives(&k4, 1, 0, &HashSet::new()),
            Err(Error::Capacity { requested: 1, available: 0 })
        ));
    }

    #[test]
    fn path_has_one_non_edge() {
        let path = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        for seed in 0..5 {
            assert_eq!(sample_negatives(&path, 1, seed, &HashSet::new()).unwrap(), vec![(0, 2)]);
        }
    }

    #[test]
    fn negatives_on_large_random_graph() {
        let g = erdos_renyi(1000, 3000, 11);
        let neg = sample_negatives(&g, 500, 3, &HashSet::new()).unwrap();
        assert_eq!(neg.len(), 500);
        let distinct: HashSet<_> = neg.iter().collect();
        assert_eq!(distinct.len(), 500);
        for &(u, v) in &neg {
            assert!(u < v);
            assert!(!g.neighbors(u).contains(&v));
        }
    }

    #[test]
    fn negatives_respect_exclusion() {
        let g = erdos_renyi(8, 10, 2);
        let ex: HashSet<Edge> = [(1, 0), (5, 3)].into_iter().collect();
        let avail = 28 - 10 - ex.iter().filter(|&&(u, v)| !g.has_edge(u, v)).count();
        let all = sample_negatives(&g, avail, 9, &ex).unwrap();
        assert_eq!(all.len(), avail);
        assert!(!all.contains(&(0, 1)) && !all.contains(&(3, 5)));
    }
}
