//! Counts the class-conditioned link prior on training edges and writes it
//! as a heatmap CSV.
//!
//! cargo run --example class_prior_heatmap -- [out.csv]

use std::path::PathBuf;

use classlink::datasets::PlantedPartition;
use classlink::prior::{export_heatmap, ClassPriorMatrix};
use classlink::split::{split_edges, SplitRatios};

fn main() -> classlink::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map_or_else(|| std::env::temp_dir().join("class_prior_heatmap.csv"), PathBuf::from);
    let g = PlantedPartition::cora_like().generate(0);
    let labels = g.labels().expect("planted labels");
    let split = split_edges(&g, SplitRatios::default(), 0)?;
    let prior = ClassPriorMatrix::from_edges(&split.train_edges, labels)?;

    println!("P(column class | row class) over {} training edges:", split.train_edges.len());
    for (i, row) in prior.prob_rows().iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|p| format!("{p:.3}")).collect();
        println!("  {i}: {}", cells.join(" "));
    }
    let diag: f64 = (0..prior.n_classes())
        .map(|i| prior.count(i, i) as f64)
        .sum::<f64>()
        / prior.total() as f64;
    println!("fraction of edge endpoints inside their own class: {diag:.3}");

    let names: Vec<String> = (0..prior.n_classes()).map(|c| format!("class_{c}")).collect();
    export_heatmap(&prior, &names, &out)?;
    println!("heatmap -> {}", out.display());
    Ok(())
}
