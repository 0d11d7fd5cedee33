//! Common-neighbor completion: a trained NCN model scores the missing edge
//! of each one-sided neighbor, and NCNC weights those neighbors by it.
//!
//! cargo run --release --example ncnc_completion

use classlink::datasets::PlantedPartition;
use classlink::eval::{evaluate_split, MetricSpec};
use classlink::model::{cnc_probability, train, ModelConfig, ModelMode};
use classlink::split::{split_edges, SplitRatios};

fn main() -> classlink::Result<()> {
    let g = PlantedPartition {
        n_nodes: 400,
        n_classes: 4,
        n_edges: 1600,
        ..Default::default()
    }
    .generate(2);
    let labels = g.labels().expect("planted labels");
    let split = split_edges(&g, SplitRatios::default(), 2)?;
    let cfg = ModelConfig {
        hidden_dim: 32,
        mlp_hidden: 32,
        epochs: 80,
        ..Default::default()
    };
    let out = train(&g, &split, Some(labels), ModelMode::Ncnc, &cfg, 2)?;
    let model = &out.predictor;
    let ncn = model.completion().expect("ncnc keeps its completion model");
    println!(
        "NCN stage ran {} epochs, NCNC stage {} (best {})",
        out.completion_log.as_ref().map_or(0, Vec::len),
        out.log.len(),
        out.best_epoch
    );

    let train_graph = split.train_graph(&g)?;
    let (x, y) = split.test_edges[0];
    println!("test pair ({x}, {y}):");
    for u in train_graph.neighbor_union(x, y).into_iter().filter(|&u| u != x && u != y).take(8) {
        let p = cnc_probability(&train_graph, |a, b| ncn.predict_pair(a, b).unwrap_or(0.0), x, y, u);
        println!("  neighbor {u:>3}: completion weight {p:.3}");
    }

    let metric = MetricSpec::HitRate(20);
    println!("NCN  {metric} = {:.2}", 100.0 * evaluate_split(ncn, &split, metric, 2)?.value);
    println!("NCNC {metric} = {:.2}", 100.0 * evaluate_split(model, &split, metric, 2)?.value);
    Ok(())
}
