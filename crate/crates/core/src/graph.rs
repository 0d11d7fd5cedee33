//! Immutable undirected graph in compressed sparse row form.
//!
//! Every undirected edge `{u, v}` is stored twice, once in each endpoint's
//! row, and each row is sorted and duplicate-free. Node ids are dense
//! `0..n_nodes`; the original string ids from the input files are kept in
//! [`Graph::node_names`].

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = usize;

/// An undirected edge. Canonical edges keep the smaller id first.
pub type Edge = (NodeId, NodeId);

pub(crate) fn canonical(u: NodeId, v: NodeId) -> Edge {
    if u <= v {
        (u, v)
    } else {
        (v, u)
    }
}

/// Class assignment for the nodes of a graph.
///
/// Class ids are contiguous `0..n_classes`; `names[c]` is the label string
/// that was remapped to `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Labels {
    assignment: Vec<Option<usize>>,
    names: Vec<String>,
}

impl Labels {
    /// Builds labels from per-node class ids. The class count is one past the
    /// largest id present.
    pub fn from_assignment(assignment: Vec<Option<usize>>) -> Self {
        let n_classes = assignment.iter().flatten().map(|&c| c + 1).max().unwrap_or(0);
        let names = (0..n_classes).map(|c| c.to_string()).collect();
        Labels { assignment, names }
    }

    /// Every node labeled, with `ids[v]` as the class of `v`.
    pub fn dense(ids: &[usize]) -> Self {
        Self::from_assignment(ids.iter().map(|&c| Some(c)).collect())
    }

    pub fn with_names(assignment: Vec<Option<usize>>, names: Vec<String>) -> Result<Self> {
        if let Some(&bad) = assignment.iter().flatten().find(|&&c| c >= names.len()) {
            return Err(Error::Config(format!(
                "class id {bad} outside 0..{}",
                names.len()
            )));
        }
        Ok(Labels { assignment, names })
    }

    pub fn n_classes(&self) -> usize {
        self.names.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.assignment.len()
    }

    pub fn get(&self, node: NodeId) -> Option<usize> {
        self.assignment.get(node).copied().flatten()
    }

    /// Class of `node`, or a missing-label error naming it.
    pub fn class_of(&self, node: NodeId) -> Result<usize> {
        self.get(node).ok_or(Error::MissingLabel(node))
    }

    pub fn assignment(&self) -> &[Option<usize>] {
        &self.assignment
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Applies a class permutation: class `c` becomes `perm[c]`.
    pub fn permute_classes(&self, perm: &[usize]) -> Self {
        let mut names = vec![String::new(); self.names.len()];
        for (c, name) in self.names.iter().enumerate() {
            names[perm[c]] = name.clone();
        }
        Labels {
            assignment: self.assignment.iter().map(|c| c.map(|c| perm[c])).collect(),
            names,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<NodeId>,
    features: Array2<f64>,
    labels: Option<Labels>,
    node_names: Vec<String>,
}

impl Graph {
    /// Builds a graph on `n_nodes` nodes. Edges are symmetrized; self-loops and
    /// repeated edges are dropped.
    pub fn from_edges(n_nodes: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        let mut rows: Vec<Vec<NodeId>> = vec![Vec::new(); n_nodes];
        for (u, v) in edges {
            for node in [u, v] {
                if node >= n_nodes {
                    return Err(Error::Index { node, n_nodes });
                }
            }
            if u == v {
                continue;
            }
            rows[u].push(v);
            rows[v].push(u);
        }
        let mut offsets = Vec::with_capacity(n_nodes + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for row in &mut rows {
            row.sort_unstable();
            row.dedup();
            targets.extend_from_slice(row);
            offsets.push(targets.len());
        }
        Ok(Graph {
            offsets,
            targets,
            features: Array2::zeros((n_nodes, 0)),
            labels: None,
            node_names: (0..n_nodes).map(|i| i.to_string()).collect(),
        })
    }

    pub fn with_features(mut self, features: Array2<f64>) -> Result<Self> {
        if features.nrows() != self.n_nodes() {
            return Err(Error::Dimension(format!(
                "feature matrix has {} rows for {} nodes",
                features.nrows(),
                self.n_nodes()
            )));
        }
        self.features = features;
        Ok(self)
    }

    pub fn with_labels(mut self, labels: Labels) -> Result<Self> {
        if labels.n_nodes() != self.n_nodes() {
            return Err(Error::Dimension(format!(
                "{} labels for {} nodes",
                labels.n_nodes(),
                self.n_nodes()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn with_node_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_nodes() {
            return Err(Error::Dimension(format!(
                "{} node names for {} nodes",
                names.len(),
                self.n_nodes()
            )));
        }
        self.node_names = names;
        Ok(self)
    }

    /// Same nodes, features, labels and names over a different edge set.
    pub fn with_edges(&self, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        let mut g = Graph::from_edges(self.n_nodes(), edges)?;
        g.features = self.features.clone();
        g.labels = self.labels.clone();
        g.node_names = self.node_names.clone();
        Ok(g)
    }

    pub fn n_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of undirected edges.
    pub fn n_edges(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn targets(&self) -> &[NodeId] {
        &self.targets
    }

    /// Sorted neighbor list of `u`.
    #[inline]
    pub fn neighbors(&self, u: NodeId) -> &[NodeId] {
        &self.targets[self.offsets[u]..self.offsets[u + 1]]
    }

    #[inline]
    pub fn degree(&self, u: NodeId) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n_nodes()).map(|u| self.degree(u)).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        u < self.n_nodes() && v < self.n_nodes() && self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`, in CSR order.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        (0..self.n_nodes()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .filter(move |&&v| v > u)
                .map(move |&v| (u, v))
        })
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn labels(&self) -> Option<&Labels> {
        self.labels.as_ref()
    }

    pub fn node_names(&self) -> &[String] {
        &self.node_names
    }

    pub(crate) fn check_node(&self, node: NodeId) -> Result<()> {
        if node < self.n_nodes() {
            Ok(())
        } else {
            Err(Error::Index {
                node,
                n_nodes: self.n_nodes(),
            })
        }
    }

    /// `N(x) ∩ N(y)`, sorted.
    pub fn common_neighbors(&self, x: NodeId, y: NodeId) -> Result<Vec<NodeId>> {
        self.check_node(x)?;
        self.check_node(y)?;
        Ok(self.common_neighbor_iter(x, y).collect())
    }

    /// Linear merge of two sorted neighbor lists. Ids must be in range.
    pub fn common_neighbor_iter(&self, x: NodeId, y: NodeId) -> CommonNeighbors<'_> {
        CommonNeighbors {
            a: self.neighbors(x),
            b: self.neighbors(y),
        }
    }

    /// `N(x) ∪ N(y)`, sorted and deduplicated.
    pub fn neighbor_union(&self, x: NodeId, y: NodeId) -> Vec<NodeId> {
        let (a, b) = (self.neighbors(x), self.neighbors(y));
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        out
    }

    /// Relabels nodes: node `v` becomes `perm[v]`. Features, labels and names
    /// move with their nodes.
    pub fn permute_nodes(&self, perm: &[NodeId]) -> Result<Graph> {
        let n = self.n_nodes();
        if perm.len() != n {
            return Err(Error::Dimension(format!(
                "permutation of length {} for {n} nodes",
                perm.len()
            )));
        }
        let mut g = Graph::from_edges(n, self.edges().map(|(u, v)| (perm[u], perm[v])))?;
        let mut features = Array2::zeros(self.features.raw_dim());
        let mut names = vec![String::new(); n];
        for v in 0..n {
            features.row_mut(perm[v]).assign(&self.features.row(v));
            names[perm[v]] = self.node_names[v].clone();
        }
        g.features = features;
        g.node_names = names;
        if let Some(labels) = &self.labels {
            let mut assignment = vec![None; n];
            for v in 0..n {
                assignment[perm[v]] = labels.get(v);
            }
            g.labels = Some(Labels::with_names(assignment, labels.names().to_vec())?);
        }
        Ok(g)
    }
}

pub struct CommonNeighbors<'a> {
    a: &'a [NodeId],
    b: &'a [NodeId],
}

impl Iterator for CommonNeighbors<'_> {
    type Item = NodeId;

    fn next(&mut self) -> Option<NodeId> {
        while let (Some(&x), Some(&y)) = (self.a.first(), self.b.first()) {
            match x.cmp(&y) {
                std::cmp::Ordering::Less => self.a = &self.a[1..],
                std::cmp::Ordering::Greater => self.b = &self.b[1..],
                std::cmp::Ordering::Equal => {
                    self.a = &self.a[1..];
                    self.b = &self.b[1..];
                    return Some(x);
                }
            }
        }
        None
    }
}

#[derive(Default)]
struct Interner {
    ids: HashMap<String, NodeId>,
    names: Vec<String>,
}

impl Interner {
    fn intern(&mut self, name: &str) -> NodeId {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = self.names.len();
        self.ids.insert(name.to_string(), id);
        self.names.push(name.to_string());
        id
    }
}

/// Reads an edge list plus optional feature and label CSVs.
///
/// Node ids are arbitrary strings, interned in first-seen order across the
/// edge, feature and label files. Class labels are remapped to `0..|C|` in
/// first-seen order.
pub fn load_graph(
    edge_path: &Path,
    feature_path: Option<&Path>,
    label_path: Option<&Path>,
) -> Result<Graph> {
    let mut interner = Interner::default();

    let file = fs::File::open(edge_path).map_err(|e| Error::io(edge_path, e))?;
    let mut edges = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(edge_path, e))?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut parts = body.split_whitespace();
        match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), None) => {
                let u = interner.intern(a);
                let v = interner.intern(b);
                edges.push((u, v));
            }
            _ => {
                return Err(Error::Parse {
                    path: edge_path.to_path_buf(),
                    line: idx + 1,
                    msg: format!("expected `src dst`, got {body:?}"),
                })
            }
        }
    }

    let mut feature_rows: Vec<(NodeId, Vec<f64>)> = Vec::new();
    if let Some(path) = feature_path {
        let mut width = None;
        for (line_no, record) in csv_records(path)? {
            let id = interner.intern(record[0].trim());
            let row = record
                .iter()
                .skip(1)
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>();
            let row = match row {
                Ok(row) => row,
                Err(_) if line_no == 1 => {
                    // Header row.
                    interner_pop_if_new(&mut interner, id);
                    continue;
                }
                Err(e) => {
                    return Err(Error::Parse {
                        path: path.to_path_buf(),
                        line: line_no,
                        msg: e.to_string(),
                    })
                }
            };
            match width {
                None => width = Some(row.len()),
                Some(w) if w != row.len() => {
                    return Err(Error::Dimension(format!(
                        "{}:{line_no}: feature row has {} columns, expected {w}",
                        path.display(),
                        row.len()
                    )))
                }
                _ => {}
            }
            feature_rows.push((id, row));
        }
    }

    let mut label_rows: Vec<(NodeId, String)> = Vec::new();
    if let Some(path) = label_path {
        for (line_no, record) in csv_records(path)? {
            if record.len() != 2 {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: line_no,
                    msg: format!("expected `node_id,label`, got {} fields", record.len()),
                });
            }
            if line_no == 1 && record[0].trim().eq_ignore_ascii_case("node_id") {
                continue;
            }
            let id = interner.intern(record[0].trim());
            label_rows.push((id, record[1].trim().to_string()));
        }
    }

    let n = interner.names.len();
    let mut g = Graph::from_edges(n, edges)?;

    if feature_path.is_some() {
        let width = feature_rows.first().map_or(0, |(_, r)| r.len());
        let mut features = Array2::zeros((n, width));
        let mut seen = vec![false; n];
        for (id, row) in feature_rows {
            seen[id] = true;
            for (j, x) in row.into_iter().enumerate() {
                features[[id, j]] = x;
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::Dimension(format!(
                "node {:?} has no feature row",
                interner.names[missing]
            )));
        }
        g = g.with_features(features)?;
    }

    if label_path.is_some() {
        let mut class_ids: HashMap<String, usize> = HashMap::new();
        let mut names = Vec::new();
        let mut assignment = vec![None; n];
        for (id, label) in label_rows {
            let next = names.len();
            let c = *class_ids.entry(label.clone()).or_insert_with(|| {
                names.push(label);
                next
            });
            assignment[id] = Some(c);
        }
        g = g.with_labels(Labels::with_names(assignment, names)?)?;
    }

    g.with_node_names(interner.names)
}

// A header row in the feature file must not leave an interned phantom node.
fn interner_pop_if_new(interner: &mut Interner, id: NodeId) {
    if id + 1 == interner.names.len() {
        let name = interner.names.pop().expect("just interned");
        interner.ids.remove(&name);
    }
}

fn csv_records(path: &Path) -> Result<Vec<(usize, csv::StringRecord)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        out.push((line, record));
    }
    Ok(out)
}

pub const GRAPH_FORMAT_VERSION: u32 = 1;

/// On-disk JSON form of a [`Graph`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphDocument {
    pub version: u32,
    pub seed: Option<u64>,
    pub node_ids: Vec<String>,
    pub csr_offsets: Vec<usize>,
    pub csr_targets: Vec<NodeId>,
    pub n_features: usize,
    /// Row-major `n_nodes × n_features`.
    pub features: Vec<f64>,
    pub labels: Option<Labels>,
}

impl Graph {
    pub fn to_document(&self, seed: Option<u64>) -> GraphDocument {
        GraphDocument {
            version: GRAPH_FORMAT_VERSION,
            seed,
            node_ids: self.node_names.clone(),
            csr_offsets: self.offsets.clone(),
            csr_targets: self.targets.clone(),
            n_features: self.n_features(),
            features: self.features.iter().copied().collect(),
            labels: self.labels.clone(),
        }
    }

    pub fn from_document(doc: GraphDocument) -> Result<Graph> {
        if doc.version != GRAPH_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "graph document version {} (expected {GRAPH_FORMAT_VERSION})",
                doc.version
            )));
        }
        let n = doc.node_ids.len();
        if doc.csr_offsets.len() != n + 1 || doc.csr_offsets.last() != Some(&doc.csr_targets.len()) {
            return Err(Error::Dimension("inconsistent CSR offsets".into()));
        }
        let mut edges = Vec::with_capacity(doc.csr_targets.len() / 2);
        for u in 0..n {
            let (lo, hi) = (doc.csr_offsets[u], doc.csr_offsets[u + 1]);
            if lo > hi || hi > doc.csr_targets.len() {
                return Err(Error::Dimension("CSR offsets are not nondecreasing".into()));
            }
            edges.extend(doc.csr_targets[lo..hi].iter().map(|&v| (u, v)));
        }
        let g = Graph::from_edges(n, edges)?;
        if g.offsets != doc.csr_offsets || g.targets != doc.csr_targets {
            return Err(Error::Config(
                "CSR arrays are not symmetric, sorted and duplicate-free".into(),
            ));
        }
        let features = Array2::from_shape_vec((n, doc.n_features), doc.features)
            .map_err(|e| Error::Dimension(e.to_string()))?;
        let mut g = g.with_features(features)?.with_node_names(doc.node_ids)?;
        if let Some(labels) = doc.labels {
            g = g.with_labels(labels)?;
        }
        Ok(g)
    }

    pub fn save_json(&self, path: &Path, seed: Option<u64>) -> Result<()> {
        crate::io::write_json(path, &self.to_document(seed))
    }

    pub fn load_json(path: &Path) -> Result<Graph> {
        Graph::from_document(crate::io::read_json(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        fs::File::create(&p).unwrap().write_all(body.as_bytes()).unwrap();
        p
    }

    #[test]
    fn dedup_and_self_loops() {
        let dir = tempfile::tempdir().unwrap();
        let e = write(dir.path(), "e.txt", "0 1\n1 0\n2 2\n");
        let g = load_graph(&e, None, None).unwrap();
        assert_eq!(g.n_nodes(), 3);
        assert_eq!(g.n_edges(), 1);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1)]);
        assert_eq!(g.offsets(), &[0, 1, 2, 2]);
    }

    #[test]
    fn empty_edges_with_features() {
        let dir = tempfile::tempdir().unwrap();
        let e = write(dir.path(), "e.txt", "# nothing here\n");
        let f = write(dir.path(), "f.csv", "a,1,2\nb,3,4\nc,5,6\nd,7,8\n");
        let g = load_graph(&e, Some(&f), None).unwrap();
        assert_eq!(g.n_nodes(), 4);
        assert_eq!(g.n_edges(), 0);
        assert_eq!(g.features()[[3, 1]], 8.0);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let e = write(dir.path(), "e.txt", "0 1\n1 2 3\n");
        match load_graph(&e, None, None) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ragged_features_are_a_dimension_error() {
        let dir = tempfile::tempdir().unwrap();
        let e = write(dir.path(), "e.txt", "a b\n");
        let f = write(dir.path(), "f.csv", "a,1,2\nb,3\n");
        assert!(matches!(
            load_graph(&e, Some(&f), None),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn labels_are_remapped_in_first_seen_order() {
        let dir = tempfile::tempdir().unwrap();
        let e = write(dir.path(), "e.txt", "p1 p2\np2 p3\n");
        let l = write(dir.path(), "l.csv", "node_id,label\np3,Theory\np1,AI\np2,Theory\n");
        let g = load_graph(&e, None, Some(&l)).unwrap();
        let labels = g.labels().unwrap();
        assert_eq!(labels.n_classes(), 2);
        assert_eq!(labels.names(), &["Theory".to_string(), "AI".to_string()]);
        assert_eq!(labels.get(0), Some(1));
        assert_eq!(labels.get(2), Some(0));
    }

    #[test]
    fn feature_header_is_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let e = write(dir.path(), "e.txt", "a b\n");
        let f = write(dir.path(), "f.csv", "node_id,f0,f1\na,1,2\nb,3,4\n");
        let g = load_graph(&e, Some(&f), None).unwrap();
        assert_eq!(g.n_nodes(), 2);
        assert_eq!(g.n_features(), 2);
    }

    #[test]
    fn common_neighbors_triangle_and_range() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(g.common_neighbors(0, 1).unwrap(), vec![2]);
        assert!(matches!(g.common_neighbors(0, 7), Err(Error::Index { .. })));
    }

    #[test]
    fn disjoint_stars_share_nothing() {
        let g = Graph::from_edges(8, [(0, 1), (0, 2), (0, 3), (4, 5), (4, 6), (4, 7)]).unwrap();
        assert!(g.common_neighbors(0, 4).unwrap().is_empty());
        assert!(g.common_neighbors(1, 5).unwrap().is_empty());
    }

    #[test]
    fn json_round_trip_is_identical() {
        let dir = tempfile::tempdir().unwrap();
        let e = write(dir.path(), "e.txt", "x y\ny z\nz x\nz w\n");
        let f = write(dir.path(), "f.csv", "x,0.1,1e-3\ny,2,3\nz,-1,0\nw,0.3333333333333333,7\n");
        let l = write(dir.path(), "l.csv", "x,A\ny,B\nz,A\n");
        let g = load_graph(&e, Some(&f), Some(&l)).unwrap();
        let p = dir.path().join("g.json");
        g.save_json(&p, None).unwrap();
        let g2 = Graph::load_json(&p).unwrap();
        assert_eq!(g, g2);
        assert_eq!(g2.labels().unwrap().get(3), None);
    }
}
