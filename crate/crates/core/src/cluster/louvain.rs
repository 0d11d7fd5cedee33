//! Louvain modularity communities on the training graph.

use rand::RngCore;

use super::{compact, ClusterMethod, PseudoLabeling};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng;

const MIN_LEVEL_GAIN: f64 = 1e-7;

/// Symmetric weighted adjacency; `adj[i]` holds `(j, A_ij)` with `j != i`.
/// `self_w[i]` is `A_ii`, counting every internal edge from both ends.
struct Weighted {
    adj: Vec<Vec<(usize, f64)>>,
    self_w: Vec<f64>,
}

impl Weighted {
    fn n(&self) -> usize {
        self.adj.len()
    }

    fn strength(&self, i: usize) -> f64 {
        self.self_w[i] + self.adj[i].iter().map(|&(_, w)| w).sum::<f64>()
    }

    fn total(&self) -> f64 {
        (0..self.n()).map(|i| self.strength(i)).sum()
    }

    fn modularity(&self, comm: &[usize]) -> f64 {
        let two_m = self.total();
        let k = comm.iter().max().map_or(0, |&c| c + 1);
        let mut inside = vec![0.0; k];
        let mut tot = vec![0.0; k];
        for i in 0..self.n() {
            tot[comm[i]] += self.strength(i);
            inside[comm[i]] += self.self_w[i];
            for &(j, w) in &self.adj[i] {
                if comm[j] == comm[i] {
                    inside[comm[i]] += w;
                }
            }
        }
        (0..k)
            .map(|c| inside[c] / two_m - (tot[c] / two_m).powi(2))
            .sum()
    }

    /// Collapses each community to one node.
    fn aggregate(&self, comm: &[usize], k: usize) -> Weighted {
        let mut rows: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); k];
        let mut self_w = vec![0.0; k];
        for i in 0..self.n() {
            let ci = comm[i];
            self_w[ci] += self.self_w[i];
            for &(j, w) in &self.adj[i] {
                let cj = comm[j];
                if ci == cj {
                    self_w[ci] += w;
                } else {
                    *rows[ci].entry(cj).or_insert(0.0) += w;
                }
            }
        }
        Weighted {
            adj: rows.into_iter().map(|r| r.into_iter().collect()).collect(),
            self_w,
        }
    }
}

/// One level of local moves. Returns the community per node.
fn local_moves(w: &Weighted, seed: u64) -> Vec<usize> {
    let n = w.n();
    let two_m = w.total();
    let strength: Vec<f64> = (0..n).map(|i| w.strength(i)).collect();
    let mut comm: Vec<usize> = (0..n).collect();
    let mut tot = strength.clone();
    let mut order: Vec<usize> = (0..n).collect();
    let mut r = rng::rng(seed);
    rng::shuffle(&mut r, &mut order);

    let mut link = vec![0.0; n];
    let mut touched: Vec<usize> = Vec::new();
    loop {
        let mut moved = false;
        for &i in &order {
            let ci = comm[i];
            let ki = strength[i];
            for &(j, wij) in &w.adj[i] {
                let cj = comm[j];
                if link[cj] == 0.0 {
                    touched.push(cj);
                }
                link[cj] += wij;
            }
            tot[ci] -= ki;
            let mut best = (ci, link[ci] - tot[ci] * ki / two_m);
            for &c in &touched {
                let gain = link[c] - tot[c] * ki / two_m;
                if gain > best.1 + 1e-12 {
                    best = (c, gain);
                }
            }
            tot[best.0] += ki;
            if best.0 != ci {
                comm[i] = best.0;
                moved = true;
            }
            for &c in &touched {
                link[c] = 0.0;
            }
            link[ci] = 0.0;
            touched.clear();
        }
        if !moved {
            break;
        }
    }
    comm
}

/// Multi-level Louvain. Visit order within each level is shuffled with
/// `seed`; levels stop once modularity rises by less than `1e-7`.
pub fn louvain(g: &Graph, seed: u64) -> Result<PseudoLabeling> {
    if g.n_edges() == 0 {
        return Err(Error::Config("louvain needs at least one edge".into()));
    }
    let mut w = Weighted {
        adj: (0..g.n_nodes())
            .map(|v| g.neighbors(v).iter().map(|&u| (u, 1.0)).collect())
            .collect(),
        self_w: vec![0.0; g.n_nodes()],
    };
    let mut membership: Vec<usize> = (0..g.n_nodes()).collect();
    let mut q = w.modularity(&(0..w.n()).collect::<Vec<_>>());
    let mut level_seed = seed;
    loop {
        let moves = local_moves(&w, level_seed);
        let (comm, k) = compact(&moves);
        let next_q = w.modularity(&comm);
        if next_q - q < MIN_LEVEL_GAIN || k == w.n() {
            break;
        }
        for m in membership.iter_mut() {
            *m = comm[*m];
        }
        w = w.aggregate(&comm, k);
        q = next_q;
        level_seed = rng::rng(level_seed).next_u64();
    }
    let (labels, k) = compact(&membership);
    Ok(PseudoLabeling {
        labels,
        k,
        method: ClusterMethod::Louvain,
        ssd_curve: None,
        seed,
    })
}

/// Newman modularity of a node partition of `g`.
pub fn modularity(g: &Graph, labels: &[usize]) -> f64 {
    let m = g.n_edges() as f64;
    if m == 0.0 {
        return 0.0;
    }
    let k = labels.iter().max().map_or(0, |&c| c + 1);
    let mut internal = vec![0.0; k];
    let mut degree = vec![0.0; k];
    for v in 0..g.n_nodes() {
        degree[labels[v]] += g.degree(v) as f64;
    }
    for (u, v) in g.edges() {
        if labels[u] == labels[v] {
            internal[labels[u]] += 1.0;
        }
    }
    (0..k)
        .map(|c| internal[c] / m - (degree[c] / (2.0 * m)).powi(2))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_cliques() -> Graph {
        let mut edges = Vec::new();
        for base in [0, 5] {
            for u in 0..5 {
                for v in u + 1..5 {
                    edges.push((base + u, base + v));
                }
            }
        }
        edges.push((4, 5));
        Graph::from_edges(10, edges).unwrap()
    }

    #[test]
    fn finds_two_cliques() {
        let g = two_cliques();
        for seed in 0..5 {
            let p = louvain(&g, seed).unwrap();
            assert_eq!(p.k, 2);
            assert!(p.labels[..5].iter().all(|&c| c == p.labels[0]));
            assert!(p.labels[5..].iter().all(|&c| c == p.labels[5]));
            assert_ne!(p.labels[0], p.labels[5]);
        }
    }

    #[test]
    fn modularity_hand_value() {
        let g = two_cliques();
        let labels = [0, 0, 0, 0, 0, 1, 1, 1, 1, 1];
        // 21 edges, 10 inside each clique, each side has degree sum 21.
        let expected = 20.0 / 21.0 - 2.0 * 0.25;
        assert!((modularity(&g, &labels) - expected).abs() < 1e-12);
        assert!((modularity(&g, &[0; 10])).abs() < 1e-12);
    }

    #[test]
    fn weighted_and_plain_modularity_agree() {
        let g = two_cliques();
        let w = Weighted {
            adj: (0..10).map(|v| g.neighbors(v).iter().map(|&u| (u, 1.0)).collect()).collect(),
            self_w: vec![0.0; 10],
        };
        let labels = [0, 1, 0, 0, 1, 1, 2, 1, 1, 2];
        assert!((w.modularity(&labels) - modularity(&g, &labels)).abs() < 1e-12);
        let agg = w.aggregate(&labels, 3);
        assert!((agg.modularity(&[0, 1, 2]) - modularity(&g, &labels)).abs() < 1e-12);
    }

    #[test]
    fn edgeless_is_rejected() {
        let g = Graph::from_edges(3, []).unwrap();
        assert!(matches!(louvain(&g, 0), Err(Error::Config(_))));
    }
}
