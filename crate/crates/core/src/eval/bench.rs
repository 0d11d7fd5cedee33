//! Wall-clock scaling of prior construction.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::datasets::random_edge_list;
use crate::error::{Error, Result};
use crate::graph::Labels;
use crate::prior::{build_prior_matrix, count_class_links};
use crate::rng::{self, Stage};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub edges: usize,
    /// Median over repeats.
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub n_classes: usize,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl BenchReport {
    /// `edges,seconds` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut body = String::from("edges,seconds\n");
        for r in &self.rows {
            writeln!(body, "{},{}", r.edges, r.seconds).expect("writing to a String");
        }
        crate::io::write_text(path, &body)
    }
}

/// Ordinary least squares `y = slope·x + intercept` and its R².
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Config("a line fit needs at least two points".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Config("a line fit needs distinct x values".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok((slope, intercept, r_squared))
}

/// Times one count-and-normalize prior build per edge count, on random edge
/// lists over `max(100, |E| / 10)` nodes with uniform random labels.
pub fn bench_prior_runtime(edge_counts: &[usize], n_classes: usize, repeats: usize, seed: u64) -> Result<BenchReport> {
    if edge_counts.is_empty() || n_classes == 0 || repeats == 0 {
        return Err(Error::Config("bench needs edge counts, classes and repeats".into()));
    }
    let base = rng::stage_seed(seed, Stage::Bench);
    let mut rows = Vec::with_capacity(edge_counts.len());
    for (i, &m) in edge_counts.iter().enumerate() {
        let n = (m / 10).max(100);
        let edges = random_edge_list(n, m, base.wrapping_add(i as u64));
        let mut r = rng::rng(base ^ m as u64);
        let ids: Vec<usize> = (0..n).map(|_| rng::below(&mut r, n_classes)).collect();
        let labels = Labels::dense(&ids);
        let classes = labels.n_classes().max(n_classes);
        let mut times = Vec::with_capacity(repeats);
        for _ in 0..repeats {
            let start = Instant::now();
            let prior = build_prior_matrix(count_class_links(&edges, &labels, classes)?);
            times.push(start.elapsed().as_secs_f64());
            std::hint::black_box(prior);
        }
        times.sort_by(f64::total_cmp);
        rows.push(BenchRow {
            edges: m,
            seconds: times[times.len() / 2],
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.edges as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.seconds).collect();
    let (slope, intercept, r_squared) = if rows.len() >= 2 {
        linear_fit(&xs, &ys)?
    } else {
        (ys[0] / xs[0], 0.0, 1.0)
    };
    Ok(BenchReport {
        rows,
        n_classes,
        slope,
        intercept,
        r_squared,
    })
}
