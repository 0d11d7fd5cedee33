//! Row-compressed sparse matrices for propagation and sparse features.

use ndarray::Array2;
use rayon::prelude::*;

use crate::graph::Graph;

/// Sparse matrix stored as sorted `(column, value)` lists per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRows {
    pub rows: Vec<Vec<(usize, f64)>>,
    pub n_cols: usize,
}

impl SparseRows {
    pub fn from_dense(m: &Array2<f64>) -> Self {
        let rows = m
            .rows()
            .into_iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0.0)
                    .map(|(j, &v)| (j, v))
                    .collect()
            })
            .collect();
        SparseRows {
            rows,
            n_cols: m.ncols(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut m = Array2::zeros((self.n_rows(), self.n_cols));
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                m[[i, j]] += v;
            }
        }
        m
    }

    /// `self · m`.
    pub fn mul_dense(&self, m: &Array2<f64>) -> Array2<f64> {
        assert_eq!(self.n_cols, m.nrows(), "inner dimensions differ");
        let width = m.ncols();
        let data: Vec<f64> = self
            .rows
            .par_iter()
            .flat_map_iter(|row| {
                let mut out = vec![0.0; width];
                for &(j, v) in row {
                    for (o, &x) in out.iter_mut().zip(m.row(j)) {
                        *o += v * x;
                    }
                }
                out
            })
            .collect();
        Array2::from_shape_vec((self.n_rows(), width), data).expect("row-major result")
    }

    /// `selfᵀ · m`, accumulated row by row in index order.
    pub fn t_mul_dense(&self, m: &Array2<f64>) -> Array2<f64> {
        assert_eq!(self.n_rows(), m.nrows(), "inner dimensions differ");
        let mut out = Array2::zeros((self.n_cols, m.ncols()));
        for (i, row) in self.rows.iter().enumerate() {
            let src = m.row(i);
            for &(j, v) in row {
                for (o, &x) in out.row_mut(j).iter_mut().zip(src) {
                    *o += v * x;
                }
            }
        }
        out
    }

    /// `self · other`, both sparse.
    pub fn mul_sparse(&self, other: &SparseRows) -> SparseRows {
        assert_eq!(self.n_cols, other.n_rows(), "inner dimensions differ");
        let rows = self
            .rows
            .par_iter()
            .map(|row| {
                let mut acc: std::collections::BTreeMap<usize, f64> = Default::default();
                for &(k, a) in row {
                    for &(j, b) in &other.rows[k] {
                        *acc.entry(j).or_insert(0.0) += a * b;
                    }
                }
                acc.into_iter().filter(|&(_, v)| v != 0.0).collect()
            })
            .collect();
        SparseRows {
            rows,
            n_cols: other.n_cols,
        }
    }
}

/// Symmetric propagation matrix `S = D̂^{-1/2} (A + I) D̂^{-1/2}` with `D̂`
/// the degree matrix of `A + I`.
pub fn propagation_matrix(adj: &Graph) -> SparseRows {
    let inv_sqrt: Vec<f64> = (0..adj.n_nodes())
        .map(|v| 1.0 / ((adj.degree(v) + 1) as f64).sqrt())
        .collect();
    let rows = (0..adj.n_nodes())
        .map(|v| {
            let mut row: Vec<(usize, f64)> = adj
                .neighbors(v)
                .iter()
                .map(|&u| (u, inv_sqrt[v] * inv_sqrt[u]))
                .collect();
            let at = row.partition_point(|&(u, _)| u < v);
            row.insert(at, (v, inv_sqrt[v] * inv_sqrt[v]));
            row
        })
        .collect();
    SparseRows {
        rows,
        n_cols: adj.n_nodes(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn propagation_of_edge() {
        let g = Graph::from_edges(3, [(0, 1)]).unwrap();
        let s = propagation_matrix(&g).to_dense();
        let expected = ndarray::array![[0.5, 0.5, 0.0], [0.5, 0.5, 0.0], [0.0, 0.0, 1.0]];
        assert!((s - expected).iter().all(|d| d.abs() < 1e-15));
    }

    #[test]
    fn products_match_dense() {
        let a = ndarray::array![[1.0, 0.0, 2.0], [0.0, 0.0, 0.0], [0.0, 3.0, -1.0]];
        let b = ndarray::array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]];
        let s = SparseRows::from_dense(&a);
        assert_eq!(s.nnz(), 4);
        assert_eq!(s.mul_dense(&b), a.dot(&b));
        assert_eq!(s.t_mul_dense(&b), a.t().dot(&b));
        assert_eq!(s.mul_sparse(&SparseRows::from_dense(&b)).to_dense(), a.dot(&b));
    }
}
