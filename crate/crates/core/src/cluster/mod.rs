//! Pseudo class labels for graphs without ground-truth classes.
//!
//! Node features are first smoothed over the training graph
//! (`H = (A_train + I) X`), then grouped by k-means with the cluster count
//! picked on the SSD elbow. Louvain communities and a single shared label
//! serve as alternatives.

mod elbow;
mod kmeans;
mod louvain;

use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Labels};

pub use elbow::{elbow_select, elbow_select_with, knee_index, ElbowResult};
pub use kmeans::{kmeans, kmeans_labels, kmeans_with, KMeansConfig, KMeansFit};
pub use louvain::{louvain, modularity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClusterMethod {
    Kmeans,
    Louvain,
    Mono,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoLabeling {
    /// Cluster id per node, contiguous in `0..k`.
    pub labels: Vec<usize>,
    pub k: usize,
    pub method: ClusterMethod,
    /// `(k, SSD)` pairs from an elbow sweep.
    pub ssd_curve: Option<Vec<(usize, f64)>>,
    pub seed: u64,
}

impl PseudoLabeling {
    pub fn to_labels(&self) -> Labels {
        Labels::dense(&self.labels)
    }

    /// Writes `node_id,label` rows using the graph's original node ids.
    pub fn write_csv(&self, node_names: &[String], path: &Path) -> Result<()> {
        let mut body = String::from("node_id,label\n");
        for (v, &c) in self.labels.iter().enumerate() {
            let name = node_names.get(v).map_or_else(|| v.to_string(), Clone::clone);
            writeln!(body, "{name},{c}").expect("writing to a String");
        }
        crate::io::write_text(path, &body)
    }

    /// Writes the SSD curve as `k,ssd` rows, if there is one.
    pub fn write_ssd_csv(&self, path: &Path) -> Result<()> {
        let Some(curve) = &self.ssd_curve else {
            return Ok(());
        };
        let mut body = String::from("k,ssd\n");
        for (k, ssd) in curve {
            writeln!(body, "{k},{ssd}").expect("writing to a String");
        }
        crate::io::write_text(path, &body)
    }
}

/// `H = (A_train + I) X` as one sparse-dense product.
pub fn aggregate_features(adj_train: &Graph, x: &Array2<f64>) -> Result<Array2<f64>> {
    if x.nrows() != adj_train.n_nodes() {
        return Err(Error::Dimension(format!(
            "feature matrix has {} rows for {} nodes",
            x.nrows(),
            adj_train.n_nodes()
        )));
    }
    let mut h = x.clone();
    for v in 0..adj_train.n_nodes() {
        let mut row = h.row_mut(v);
        for &u in adj_train.neighbors(v) {
            row += &x.row(u);
        }
    }
    Ok(h)
}

/// Every node in cluster 0.
pub fn mono_label(n_nodes: usize) -> Result<PseudoLabeling> {
    if n_nodes == 0 {
        return Err(Error::Config("mono labeling needs at least one node".into()));
    }
    Ok(PseudoLabeling {
        labels: vec![0; n_nodes],
        k: 1,
        method: ClusterMethod::Mono,
        ssd_curve: None,
        seed: 0,
    })
}

/// Renumbers ids so they are contiguous in order of first appearance.
pub(crate) fn compact(ids: &[usize]) -> (Vec<usize>, usize) {
    let mut map = std::collections::HashMap::new();
    let out = ids
        .iter()
        .map(|&c| {
            let next = map.len();
            *map.entry(c).or_insert(next)
        })
        .collect();
    (out, map.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prior::{lookup_prior, ClassPriorMatrix};

    #[test]
    fn aggregation_edge_cases() {
        let x = Array2::from_shape_fn((4, 3), |(i, j)| (i * 3 + j) as f64);
        let edgeless = Graph::from_edges(4, []).unwrap();
        assert_eq!(aggregate_features(&edgeless, &x).unwrap(), x);
        let g = Graph::from_edges(4, [(0, 1), (1, 2)]).unwrap();
        let h = aggregate_features(&g, &x).unwrap();
        assert_eq!(h.row(3), x.row(3));
        assert_eq!(h.row(1).to_vec(), vec![9.0, 12.0, 15.0]);
        let bad = Array2::zeros((3, 3));
        assert!(matches!(aggregate_features(&g, &bad), Err(Error::Dimension(_))));
    }

    #[test]
    fn mono_labels_collapse_prior() {
        let p = mono_label(5).unwrap();
        assert_eq!(p.labels, vec![0; 5]);
        assert_eq!(p.k, 1);
        let labels = p.to_labels();
        let m = ClassPriorMatrix::from_edges(&[(0, 1), (2, 3), (1, 4)], &labels).unwrap();
        assert_eq!(m.prob_rows(), vec![vec![1.0]]);
        assert_eq!(lookup_prior(&m, &labels, 0, 4).unwrap(), (1.0, 1.0));
        assert!(mono_label(0).is_err());
    }

    #[test]
    fn compact_is_first_seen() {
        assert_eq!(compact(&[4, 4, 1, 7, 1]), (vec![0, 0, 1, 2, 1], 3));
    }
}
