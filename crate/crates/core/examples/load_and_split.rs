//! Loads a graph and splits its edges 85/5/10 with shared negative pools.
//!
//! cargo run --example load_and_split -- [edges.txt [features.txt [labels.txt]]]
//!
//! Without arguments a small planted-partition graph is generated instead.

use std::path::PathBuf;

use classlink::datasets::PlantedPartition;
use classlink::graph::load_graph;
use classlink::split::{split_edges, SplitRatios};

fn main() -> classlink::Result<()> {
    let args: Vec<PathBuf> = std::env::args().skip(1).map(PathBuf::from).collect();
    let g = match args.first() {
        Some(edges) => load_graph(edges, args.get(1).map(|p| p.as_path()), args.get(2).map(|p| p.as_path()))?,
        None => PlantedPartition::default().generate(0),
    };
    println!(
        "{} nodes, {} undirected edges, {} features, max degree {}",
        g.n_nodes(),
        g.n_edges(),
        g.n_features(),
        g.max_degree()
    );

    let split = split_edges(&g, SplitRatios::default(), 7)?;
    println!(
        "train {} / valid {} / test {}; negative pools {} / {}",
        split.train_edges.len(),
        split.valid_edges.len(),
        split.test_edges.len(),
        split.valid_negatives.len(),
        split.test_negatives.len()
    );

    let train = split.train_graph(&g)?;
    let isolated = (0..train.n_nodes()).filter(|&v| train.degree(v) == 0).count();
    println!("training graph keeps all {} nodes, {isolated} of them isolated", train.n_nodes());

    let again = split_edges(&g, SplitRatios::default(), 7)?;
    assert_eq!(split, again);
    println!("same seed, same split");
    Ok(())
}
