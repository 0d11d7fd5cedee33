//! Class-conditioned link probabilities.
//!
//! For classes `i` and `j`, `joint_counts[i][j]` counts training edges whose
//! endpoints fall in classes `i` and `j`. Every undirected edge is counted in
//! both directions, so the count matrix is symmetric and the grand total is
//! twice the number of training edges. `probs[i][j] = joint_counts[i][j] /
//! row_totals[i]` is then the probability that an edge leaving a node of class
//! `i` lands in class `j`. Classes with no incident training edge keep an
//! all-zero row.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Edge, Labels, NodeId};

#[derive(Debug, Clone, PartialEq)]
pub struct ClassPriorMatrix {
    n_classes: usize,
    joint_counts: Vec<u64>,
    row_totals: Vec<u64>,
    probs: Vec<f64>,
}

impl ClassPriorMatrix {
    /// Counts and normalizes in one go.
    pub fn from_edges(edges: &[Edge], labels: &Labels) -> Result<Self> {
        Ok(build_prior_matrix(count_class_links(edges, labels, labels.n_classes())?))
    }

    /// Rebuilds a matrix from joint counts, recomputing totals and probabilities.
    pub fn from_counts(n_classes: usize, joint_counts: Vec<u64>) -> Result<Self> {
        if joint_counts.len() != n_classes * n_classes {
            return Err(Error::Dimension(format!(
                "{} joint counts for {n_classes} classes",
                joint_counts.len()
            )));
        }
        let row_totals = joint_counts
            .chunks(n_classes.max(1))
            .take(n_classes)
            .map(|row| row.iter().sum())
            .collect();
        Ok(build_prior_matrix(ClassPriorMatrix {
            n_classes,
            joint_counts,
            row_totals,
            probs: vec![0.0; n_classes * n_classes],
        }))
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn count(&self, i: usize, j: usize) -> u64 {
        self.joint_counts[i * self.n_classes + j]
    }

    pub fn row_total(&self, i: usize) -> u64 {
        self.row_totals[i]
    }

    pub fn row_totals(&self) -> &[u64] {
        &self.row_totals
    }

    /// `P(c_j | c_i)`.
    #[inline]
    pub fn prob(&self, i: usize, j: usize) -> f64 {
        self.probs[i * self.n_classes + j]
    }

    pub fn prob_row(&self, i: usize) -> &[f64] {
        &self.probs[i * self.n_classes..(i + 1) * self.n_classes]
    }

    pub fn joint_counts(&self) -> &[u64] {
        &self.joint_counts
    }

    /// Sum of all joint counts (twice the number of counted edges).
    pub fn total(&self) -> u64 {
        self.row_totals.iter().sum()
    }

    pub fn counts_rows(&self) -> Vec<Vec<u64>> {
        self.joint_counts
            .chunks(self.n_classes.max(1))
            .take(self.n_classes)
            .map(<[u64]>::to_vec)
            .collect()
    }

    pub fn prob_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n_classes).map(|i| self.prob_row(i).to_vec()).collect()
    }
}

/// Single pass over `train_edges`: each edge `{u, v}` adds one to
/// `[c_u][c_v]` and one to `[c_v][c_u]`. Probabilities are left at zero.
pub fn count_class_links(
    train_edges: &[Edge],
    labels: &Labels,
    n_classes: usize,
) -> Result<ClassPriorMatrix> {
    let mut joint_counts = vec![0u64; n_classes * n_classes];
    let mut row_totals = vec![0u64; n_classes];
    let class_of = |node: NodeId| -> Result<usize> {
        let c = labels.class_of(node)?;
        if c >= n_classes {
            return Err(Error::Config(format!(
                "node {node} has class {c} but only {n_classes} classes were declared"
            )));
        }
        Ok(c)
    };
    for &(u, v) in train_edges {
        let cu = class_of(u)?;
        let cv = class_of(v)?;
        joint_counts[cu * n_classes + cv] += 1;
        joint_counts[cv * n_classes + cu] += 1;
        row_totals[cu] += 1;
        row_totals[cv] += 1;
    }
    Ok(ClassPriorMatrix {
        n_classes,
        joint_counts,
        row_totals,
        probs: vec![0.0; n_classes * n_classes],
    })
}

/// Fills `probs` by dividing each count row by its total; zero rows stay zero.
pub fn build_prior_matrix(mut counts: ClassPriorMatrix) -> ClassPriorMatrix {
    let c = counts.n_classes;
    for i in 0..c {
        let total = counts.row_totals[i];
        for j in 0..c {
            counts.probs[i * c + j] = if total == 0 {
                0.0
            } else {
                counts.joint_counts[i * c + j] as f64 / total as f64
            };
        }
    }
    counts
}

/// `(P(c_y | c_x), P(c_x | c_y))` for the pair `(x, y)`.
pub fn lookup_prior(
    prior: &ClassPriorMatrix,
    labels: &Labels,
    x: NodeId,
    y: NodeId,
) -> Result<(f64, f64)> {
    let cx = labels.class_of(x)?;
    let cy = labels.class_of(y)?;
    if cx >= prior.n_classes || cy >= prior.n_classes {
        return Err(Error::Dimension(format!(
            "class pair ({cx}, {cy}) outside a {0}x{0} prior",
            prior.n_classes
        )));
    }
    Ok((prior.prob(cx, cy), prior.prob(cy, cx)))
}

#[derive(Debug, Serialize, Deserialize)]
struct HeatmapSidecar {
    class_ids: Vec<usize>,
    class_names: Vec<String>,
    row_totals: Vec<u64>,
}

/// Sidecar path written next to a heatmap CSV.
pub fn heatmap_sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Writes `probs` as a headerless CSV (one row per source class) plus a JSON
/// sidecar with class ids, names and row totals.
pub fn export_heatmap(prior: &ClassPriorMatrix, class_names: &[String], path: &Path) -> Result<()> {
    let mut body = String::new();
    for i in 0..prior.n_classes {
        let row: Vec<String> = prior.prob_row(i).iter().map(|p| p.to_string()).collect();
        writeln!(body, "{}", row.join(",")).expect("writing to a String");
    }
    crate::io::write_text(path, &body)?;
    let names = if class_names.len() == prior.n_classes {
        class_names.to_vec()
    } else {
        (0..prior.n_classes).map(|c| c.to_string()).collect()
    };
    crate::io::write_json(
        &heatmap_sidecar_path(path),
        &HeatmapSidecar {
            class_ids: (0..prior.n_classes).collect(),
            class_names: names,
            row_totals: prior.row_totals.clone(),
        },
    )
}

/// Parses a heatmap CSV written by [`export_heatmap`].
pub fn read_heatmap(path: &Path) -> Result<Vec<Vec<f64>>> {
    let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    body.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            line.split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    msg: e.to_string(),
                })
        })
        .collect()
}

pub const PRIOR_FORMAT_VERSION: u32 = 1;

/// Cached prior. Only integer counts are stored; probabilities are recomputed
/// on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorCache {
    pub version: u32,
    pub split_seed: u64,
    pub label_source: String,
    pub config_digest: String,
    pub n_classes: usize,
    pub class_names: Vec<String>,
    pub joint_counts: Vec<Vec<u64>>,
}

impl PriorCache {
    pub fn new(
        prior: &ClassPriorMatrix,
        class_names: &[String],
        split_seed: u64,
        label_source: &str,
        config_digest: &str,
    ) -> Self {
        PriorCache {
            version: PRIOR_FORMAT_VERSION,
            split_seed,
            label_source: label_source.to_string(),
            config_digest: config_digest.to_string(),
            n_classes: prior.n_classes,
            class_names: class_names.to_vec(),
            joint_counts: prior.counts_rows(),
        }
    }

    /// Cache file name for a `(split seed, label source)` key.
    pub fn file_name(split_seed: u64, label_source: &str) -> String {
        format!("prior_{label_source}_{split_seed}.json")
    }

    pub fn matrix(&self) -> Result<ClassPriorMatrix> {
        if self.joint_counts.len() != self.n_classes
            || self.joint_counts.iter().any(|r| r.len() != self.n_classes)
        {
            return Err(Error::Dimension("prior cache rows do not match n_classes".into()));
        }
        ClassPriorMatrix::from_counts(self.n_classes, self.joint_counts.concat())
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        crate::io::write_json(path, self)
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let cache: PriorCache = crate::io::read_json(path)?;
        if cache.version != PRIOR_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "prior cache version {} (expected {PRIOR_FORMAT_VERSION})",
                cache.version
            )));
        }
        Ok(cache)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn worked_example() -> (Vec<Edge>, Labels) {
        // a=0, b=1, c=2, d=3; classes a,c,d -> 0 and b -> 1.
        (vec![(0, 1), (2, 3)], Labels::dense(&[0, 1, 0, 0]))
    }

    #[test]
    fn counts_worked_example() {
        let (edges, labels) = worked_example();
        let m = count_class_links(&edges, &labels, 2).unwrap();
        assert_eq!(m.counts_rows(), vec![vec![2, 1], vec![1, 0]]);
        assert_eq!(m.row_totals(), &[3, 1]);
        assert_eq!(m.total(), 4);
    }

    #[test]
    fn probs_worked_example() {
        let (edges, labels) = worked_example();
        let m = ClassPriorMatrix::from_edges(&edges, &labels).unwrap();
        assert_eq!(m.prob_rows(), vec![vec![2.0 / 3.0, 1.0 / 3.0], vec![1.0, 0.0]]);
        assert_eq!(lookup_prior(&m, &labels, 0, 1).unwrap(), (1.0 / 3.0, 1.0));
        let (a, b) = lookup_prior(&m, &labels, 0, 2).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, 2.0 / 3.0);
    }

    #[test]
    fn empty_and_mono() {
        let labels = Labels::dense(&[0, 0, 0, 0]);
        let m = ClassPriorMatrix::from_edges(&[], &labels).unwrap();
        assert_eq!(m.counts_rows(), vec![vec![0]]);
        assert_eq!(m.prob(0, 0), 0.0);

        let edges = vec![(0, 1), (1, 2), (2, 3)];
        let m = ClassPriorMatrix::from_edges(&edges, &labels).unwrap();
        assert_eq!(m.counts_rows(), vec![vec![6]]);
        assert_eq!(m.prob_rows(), vec![vec![1.0]]);
        assert_eq!(lookup_prior(&m, &labels, 0, 3).unwrap(), (1.0, 1.0));
    }

    #[test]
    fn class_without_edges_has_zero_row() {
        let labels = Labels::dense(&[0, 1, 0, 2]);
        let m = ClassPriorMatrix::from_edges(&[(0, 1), (1, 2)], &labels).unwrap();
        assert_eq!(m.prob_row(2), &[0.0, 0.0, 0.0]);
        assert_eq!(m.prob_row(0), &[0.0, 1.0, 0.0]);
        assert_eq!(m.prob_row(1), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn unlabeled_endpoint_is_named() {
        let labels = Labels::from_assignment(vec![Some(0), None, Some(0)]);
        assert!(matches!(
            count_class_links(&[(0, 1)], &labels, 1),
            Err(Error::MissingLabel(1))
        ));
        let m = ClassPriorMatrix::from_edges(&[(0, 2)], &labels).unwrap();
        assert!(matches!(lookup_prior(&m, &labels, 1, 2), Err(Error::MissingLabel(1))));
    }

    #[test]
    fn heatmap_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let (edges, labels) = worked_example();
        let m = ClassPriorMatrix::from_edges(&edges, &labels).unwrap();
        let path = dir.path().join("heat.csv");
        export_heatmap(&m, labels.names(), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().all(|l| l.split(',').count() == 2));
        let parsed = read_heatmap(&path).unwrap();
        for (i, row) in parsed.iter().enumerate() {
            for (j, &p) in row.iter().enumerate() {
                assert!((p - m.prob(i, j)).abs() <= 1e-12);
            }
        }
        let side: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(heatmap_sidecar_path(&path)).unwrap())
                .unwrap();
        assert_eq!(side["row_totals"], serde_json::json!([3, 1]));
    }

    #[test]
    fn cache_round_trip_recomputes_probs() {
        let dir = tempfile::tempdir().unwrap();
        let (edges, labels) = worked_example();
        let m = ClassPriorMatrix::from_edges(&edges, &labels).unwrap();
        let cache = PriorCache::new(&m, labels.names(), 7, "true", "abc");
        let path = dir.path().join(PriorCache::file_name(7, "true"));
        cache.save_json(&path).unwrap();
        let back = PriorCache::load_json(&path).unwrap();
        assert_eq!(back, cache);
        assert_eq!(back.matrix().unwrap(), m);
    }
}
