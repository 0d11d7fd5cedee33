//! Pseudo-labels from k-means on neighbor-aggregated features, with the
//! cluster count chosen at the SSD elbow.
//!
//! cargo run --release --example pseudo_labels_elbow

use classlink::cluster::{aggregate_features, elbow_select};
use classlink::datasets::PlantedPartition;
use classlink::split::{split_edges, SplitRatios};

fn main() -> classlink::Result<()> {
    let planted = PlantedPartition {
        n_nodes: 600,
        n_classes: 4,
        n_edges: 2400,
        feature_signal: 0.8,
        ..Default::default()
    };
    let g = planted.generate(1);
    let split = split_edges(&g, SplitRatios::default(), 1)?;
    let data = aggregate_features(&split.train_graph(&g)?, g.features())?;

    let result = elbow_select(&data, &[1, 2, 3, 4, 5, 6, 8, 10], 1)?;
    for (k, ssd) in &result.curve {
        let mark = if *k == result.best_k { "  <- elbow" } else { "" };
        println!("k = {k:>2}  SSD = {ssd:10.1}{mark}");
    }

    // Purity: share of nodes whose cluster's majority class is their class.
    let truth = g.labels().expect("planted labels");
    let k = result.labeling.k;
    let mut counts = vec![vec![0usize; truth.n_classes()]; k];
    for (v, &c) in result.labeling.labels.iter().enumerate() {
        counts[c][truth.class_of(v)?] += 1;
    }
    let majority: usize = counts.iter().map(|row| row.iter().max().copied().unwrap_or(0)).sum();
    println!(
        "chose k = {} for {} planted classes; purity {:.3}",
        result.best_k,
        truth.n_classes(),
        majority as f64 / g.n_nodes() as f64
    );
    Ok(())
}
