//! Ranks held-out edges with every structural heuristic against the shared
//! negative pool and writes one report per scorer.
//!
//! cargo run --release --example evaluate_heuristics -- [cora_dir]

use std::path::PathBuf;

use classlink::datasets::{load_linqs, PlantedPartition};
use classlink::eval::{evaluate_split, HeuristicScorer, MetricSpec};
use classlink::heuristics::Structural;
use classlink::split::{split_edges, SplitRatios};

fn main() -> classlink::Result<()> {
    let g = match std::env::args().nth(1) {
        Some(dir) => load_linqs(&PathBuf::from(dir), "cora")?,
        None => PlantedPartition::cora_like().generate(0),
    };
    let split = split_edges(&g, SplitRatios::default(), 0)?;
    let train = split.train_graph(&g)?;
    let out = std::env::temp_dir().join("classlink_heuristics");
    println!("scorer  MRR     HR@20   HR@100");
    for kind in [Structural::Cn, Structural::Aa, Structural::Ra, Structural::Katz] {
        let scorer = HeuristicScorer::new(train.clone(), kind);
        let report = evaluate_split(&scorer, &split, MetricSpec::HitRate(100), 0)?;
        let s = &report.summary;
        println!(
            "{:<6}  {:.4}  {:.4}  {:.4}",
            report.scorer, s["mrr"], s["hr@20"], s["hr@100"]
        );
        report.save_json(&out.join(format!("{}.json", report.scorer)))?;
        report.write_ranks_csv(&split.test_edges, &out.join(format!("{}_ranks.csv", report.scorer)))?;
    }
    println!("reports -> {}", out.display());
    Ok(())
}
