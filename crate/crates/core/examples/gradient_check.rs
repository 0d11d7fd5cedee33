//! Compares the hand-derived gradients of the fused model with central
//! finite differences, tensor by tensor.
//!
//! cargo run --example gradient_check

use std::sync::Arc;

use classlink::datasets::PlantedPartition;
use classlink::model::{gradient_check, BackboneParams, LinkPredictor, ModelConfig, ModelMode, PairContext, PriorTransform};
use classlink::prior::ClassPriorMatrix;
use classlink::split::sample_negatives;

fn main() -> classlink::Result<()> {
    let g = PlantedPartition {
        n_nodes: 30,
        n_classes: 3,
        n_edges: 70,
        n_features: 8,
        words_per_node: 3,
        ..Default::default()
    }
    .generate(5);
    let labels = g.labels().expect("planted labels").clone();
    let edges: Vec<_> = g.edges().collect();
    let prior = ClassPriorMatrix::from_edges(&edges, &labels)?;
    let ctx = Arc::new(PairContext::new(g.clone(), g.features(), Some((prior, labels)), false, PriorTransform::Raw)?);

    let (d, h) = (6, 5);
    let params = BackboneParams::glorot(8, d, 2 * d + 2, h, 5);
    let model = LinkPredictor::new(ModelMode::Ncn, params.clone(), ModelConfig::default(), 5, Arc::clone(&ctx), None)?;
    let negatives = sample_negatives(&g, 15, 5, &Default::default())?;
    let pairs: Vec<_> = edges.iter().take(15).copied().chain(negatives).collect();
    let targets = (0..30).map(|i| if i < 15 { 1.0 } else { 0.0 }).collect();
    let batch = model.batch(pairs, targets)?;

    let report = gradient_check(&params, &ctx, &batch, 1e-5)?;
    for (name, err) in &report.per_tensor {
        println!("{name:>3}: max relative error {err:.2e}");
    }
    println!("{} entries checked, overall {:.2e}", report.n_checked, report.max_rel_error);
    Ok(())
}
