//! Trains the common-neighbor model with and without class-prior features on
//! a planted-partition graph and compares test HR@100.
//!
//! cargo run --release --example train_ncn_with_priors -- [seeds]

use classlink::datasets::PlantedPartition;
use classlink::eval::{evaluate_split, MetricSpec};
use classlink::model::{train, ModelConfig, ModelMode};
use classlink::split::{split_edges, SplitRatios};

fn main() -> classlink::Result<()> {
    let seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let cfg = ModelConfig::default();
    let g = PlantedPartition::cora_like().generate(0);
    let labels = g.labels().expect("planted labels").clone();
    println!(
        "graph: {} nodes, {} edges, {} classes",
        g.n_nodes(),
        g.n_edges(),
        labels.n_classes()
    );
    let metric = MetricSpec::HitRate(100);
    let (mut fused_sum, mut plain_sum) = (0.0, 0.0);
    for seed in 0..seeds {
        let split = split_edges(&g, SplitRatios::default(), seed)?;
        let t = std::time::Instant::now();
        let plain = train(&g, &split, None, ModelMode::BackboneOnly, &cfg, seed)?;
        let fused = train(&g, &split, Some(&labels), ModelMode::Ncn, &cfg, seed)?;
        let p = evaluate_split(&plain.predictor, &split, metric, seed)?.value * 100.0;
        let f = evaluate_split(&fused.predictor, &split, metric, seed)?.value * 100.0;
        println!(
            "seed {seed}: backbone-only {p:.2} (epoch {}), with priors {f:.2} (epoch {}), {:.1}s",
            plain.best_epoch,
            fused.best_epoch,
            t.elapsed().as_secs_f64()
        );
        plain_sum += p;
        fused_sum += f;
    }
    let n = seeds as f64;
    println!(
        "mean HR@100: backbone-only {:.2}, with priors {:.2}, gain {:+.2}",
        plain_sum / n,
        fused_sum / n,
        (fused_sum - plain_sum) / n
    );
    Ok(())
}
