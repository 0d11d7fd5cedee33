//! Dataset readers and synthetic graph generators.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use ndarray::Array2;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{canonical, Edge, Graph, Labels};
use crate::rng::{self, Rng};

/// Reads a citation dataset in the LINQS layout: `<dir>/<name>.content` holds
/// `id feat_1 .. feat_F label` per line and `<dir>/<name>.cites` holds
/// `cited citing` pairs. Citations to ids without a content row are dropped.
pub fn load_linqs(dir: &Path, name: &str) -> Result<Graph> {
    let content = dir.join(format!("{name}.content"));
    let cites = dir.join(format!("{name}.cites"));

    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut names = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut label_ids: HashMap<String, usize> = HashMap::new();
    let mut class_names = Vec::new();
    let mut assignment = Vec::new();

    let file = fs::File::open(&content).map_err(|e| Error::io(&content, e))?;
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(&content, e))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() < 2 {
            return Err(Error::Parse {
                path: content.clone(),
                line: idx + 1,
                msg: "expected `id features.. label`".into(),
            });
        }
        let row = fields[1..fields.len() - 1]
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse {
                path: content.clone(),
                line: idx + 1,
                msg: e.to_string(),
            })?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Dimension(format!(
                    "{}:{}: {} features, expected {}",
                    content.display(),
                    idx + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        let label = fields[fields.len() - 1].to_string();
        let next = class_names.len();
        let c = *label_ids.entry(label.clone()).or_insert_with(|| {
            class_names.push(label);
            next
        });
        ids.insert(fields[0].to_string(), names.len());
        names.push(fields[0].to_string());
        rows.push(row);
        assignment.push(Some(c));
    }

    let mut edges = Vec::new();
    let file = fs::File::open(&cites).map_err(|e| Error::io(&cites, e))?;
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(&cites, e))?;
        let mut parts = line.split_whitespace();
        match (parts.next(), parts.next()) {
            (Some(a), Some(b)) => {
                if let (Some(&u), Some(&v)) = (ids.get(a), ids.get(b)) {
                    edges.push((u, v));
                }
            }
            (None, _) => continue,
            _ => {
                return Err(Error::Parse {
                    path: cites.clone(),
                    line: idx + 1,
                    msg: "expected `cited citing`".into(),
                })
            }
        }
    }

    let n = names.len();
    let width = rows.first().map_or(0, Vec::len);
    let features = Array2::from_shape_vec((n, width), rows.into_iter().flatten().collect())
        .map_err(|e| Error::Dimension(e.to_string()))?;
    Graph::from_edges(n, edges)?
        .with_features(features)?
        .with_labels(Labels::with_names(assignment, class_names)?)?
        .with_node_names(names)
}

/// Uniform random graph with exactly `m` edges.
pub fn erdos_renyi(n: usize, m: usize, seed: u64) -> Graph {
    assert!(m <= n * (n - 1) / 2, "too many edges for {n} nodes");
    let mut r = rng::rng(seed);
    let mut set = HashSet::with_capacity(m);
    while set.len() < m {
        let u = rng::below(&mut r, n);
        let v = rng::below(&mut r, n);
        if u != v {
            set.insert(canonical(u, v));
        }
    }
    let mut edges: Vec<Edge> = set.into_iter().collect();
    edges.sort_unstable();
    Graph::from_edges(n, edges).expect("ids in range")
}

/// Random edge list over `n` nodes for timing runs; may contain repeats.
pub fn random_edge_list(n: usize, m: usize, seed: u64) -> Vec<Edge> {
    let mut r = rng::rng(seed);
    (0..m)
        .map(|_| {
            let u = rng::below(&mut r, n);
            let mut v = rng::below(&mut r, n - 1);
            if v >= u {
                v += 1;
            }
            (u, v)
        })
        .collect()
}

/// Labeled graph with planted class structure and class-correlated
/// bag-of-words features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantedPartition {
    pub n_nodes: usize,
    pub n_classes: usize,
    pub n_edges: usize,
    /// Probability that an edge stays inside its source node's class.
    pub homophily: f64,
    pub n_features: usize,
    /// Active words per node.
    pub words_per_node: usize,
    /// Probability that an active word is drawn from the node's class vocabulary.
    pub feature_signal: f64,
    /// Pareto-like degree propensity exponent; 0 gives uniform propensities.
    pub degree_skew: f64,
    /// Inter-class edges go to `(c + 1) mod C` only, instead of any other class.
    pub cyclic_mixing: bool,
}

impl Default for PlantedPartition {
    fn default() -> Self {
        PlantedPartition {
            n_nodes: 300,
            n_classes: 3,
            n_edges: 900,
            homophily: 0.8,
            n_features: 60,
            words_per_node: 8,
            feature_signal: 0.7,
            degree_skew: 0.0,
            cyclic_mixing: false,
        }
    }
}

impl PlantedPartition {
    /// Approximates the size and mixing of the Cora citation graph.
    pub fn cora_like() -> Self {
        PlantedPartition {
            n_nodes: 2708,
            n_classes: 7,
            n_edges: 5278,
            homophily: 0.81,
            n_features: 1433,
            words_per_node: 18,
            feature_signal: 0.4,
            degree_skew: 1.0,
            cyclic_mixing: false,
        }
    }

    pub fn generate(&self, seed: u64) -> Graph {
        assert!(self.n_classes >= 1 && self.n_nodes >= 2 * self.n_classes);
        let mut r = rng::rng(seed);
        let n = self.n_nodes;
        let classes: Vec<usize> = (0..n).map(|v| v % self.n_classes).collect();
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); self.n_classes];
        for (v, &c) in classes.iter().enumerate() {
            members[c].push(v);
        }
        let weight: Vec<f64> = (0..n)
            .map(|_| {
                if self.degree_skew > 0.0 {
                    (1.0 - rng::unit_f64(&mut r)).powf(-1.0 / (1.0 + self.degree_skew)).min(50.0)
                } else {
                    1.0
                }
            })
            .collect();
        let all: Vec<usize> = (0..n).collect();
        let global = Sampler::new(&all, &weight);
        let per_class: Vec<Sampler> = members.iter().map(|m| Sampler::new(m, &weight)).collect();

        let mut set = HashSet::with_capacity(self.n_edges);
        let mut guard = 0usize;
        while set.len() < self.n_edges {
            guard += 1;
            assert!(guard < 100 * self.n_edges + 10_000, "cannot place edges");
            let u = global.draw(&mut r);
            let cu = classes[u];
            let cv = if self.n_classes == 1 || rng::unit_f64(&mut r) < self.homophily {
                cu
            } else if self.cyclic_mixing {
                (cu + 1) % self.n_classes
            } else {
                let other = rng::below(&mut r, self.n_classes - 1);
                if other >= cu {
                    other + 1
                } else {
                    other
                }
            };
            let v = per_class[cv].draw(&mut r);
            if u != v {
                set.insert(canonical(u, v));
            }
        }
        let mut edges: Vec<Edge> = set.into_iter().collect();
        edges.sort_unstable();

        let vocab = (self.n_features / self.n_classes).max(1);
        let mut features = Array2::zeros((n, self.n_features));
        for v in 0..n {
            for _ in 0..self.words_per_node {
                let word = if rng::unit_f64(&mut r) < self.feature_signal {
                    (classes[v] * vocab + rng::below(&mut r, vocab)) % self.n_features
                } else {
                    rng::below(&mut r, self.n_features)
                };
                features[[v, word]] = 1.0;
            }
        }

        Graph::from_edges(n, edges)
            .and_then(|g| g.with_features(features))
            .and_then(|g| g.with_labels(Labels::dense(&classes)))
            .expect("generator produces consistent shapes")
    }
}

struct Sampler {
    nodes: Vec<usize>,
    cumulative: Vec<f64>,
}

impl Sampler {
    fn new(nodes: &[usize], weight: &[f64]) -> Self {
        let mut acc = 0.0;
        let cumulative = nodes
            .iter()
            .map(|&v| {
                acc += weight[v];
                acc
            })
            .collect();
        Sampler {
            nodes: nodes.to_vec(),
            cumulative,
        }
    }

    fn draw(&self, r: &mut Rng) -> usize {
        let total = *self.cumulative.last().expect("nonempty");
        let x = rng::unit_f64(r) * total;
        let i = self.cumulative.partition_point(|&c| c <= x);
        self.nodes[i.min(self.nodes.len() - 1)]
    }
}

/// Isotropic Gaussian blobs: `per_blob` points around each center.
/// Returns the points and each point's blob index.
pub fn gaussian_blobs(
    centers: &[Vec<f64>],
    per_blob: usize,
    sigma: f64,
    seed: u64,
) -> (Array2<f64>, Vec<usize>) {
    let dim = centers[0].len();
    let normal = Normal::new(0.0, sigma).expect("sigma is finite and positive");
    let mut r = rng::rng(seed);
    let mut data = Array2::zeros((centers.len() * per_blob, dim));
    let mut truth = Vec::with_capacity(centers.len() * per_blob);
    for (b, center) in centers.iter().enumerate() {
        for i in 0..per_blob {
            let row = b * per_blob + i;
            for j in 0..dim {
                data[[row, j]] = center[j] + normal.sample(&mut r);
            }
            truth.push(b);
        }
    }
    (data, truth)
}

/// Three blob centers at the corners of an equilateral triangle with side
/// `spacing`.
pub fn triangle_centers(spacing: f64) -> Vec<Vec<f64>> {
    vec![
        vec![0.0, 0.0],
        vec![spacing, 0.0],
        vec![spacing / 2.0, spacing * 3f64.sqrt() / 2.0],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_partition_respects_sizes_and_mixing() {
        let cfg = PlantedPartition {
            homophily: 0.9,
            ..Default::default()
        };
        let g = cfg.generate(1);
        assert_eq!(g.n_edges(), 900);
        let labels = g.labels().unwrap();
        let intra = g
            .edges()
            .filter(|&(u, v)| labels.get(u) == labels.get(v))
            .count() as f64
            / 900.0;
        assert!(intra > 0.8, "intra fraction {intra}");
        assert_eq!(g, cfg.generate(1));
    }

    #[test]
    fn linqs_reader() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(
            dir.path().join("toy.content"),
            "31336\t0\t1\tNeural_Networks\n1061127\t1\t0\tRule_Learning\n99\t1\t1\tNeural_Networks\n",
        )
        .unwrap();
        fs::write(dir.path().join("toy.cites"), "31336\t1061127\n1061127\t31336\n99\t42\n").unwrap();
        let g = load_linqs(dir.path(), "toy").unwrap();
        assert_eq!(g.n_nodes(), 3);
        assert_eq!(g.n_edges(), 1);
        assert_eq!(g.n_features(), 2);
        assert_eq!(g.labels().unwrap().n_classes(), 2);
        assert_eq!(g.labels().unwrap().get(2), Some(0));
    }
}
