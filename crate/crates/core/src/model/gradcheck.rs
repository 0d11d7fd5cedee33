//! Finite-difference verification of the hand-derived gradients.

use serde::Serialize;

use super::network::{BackboneParams, PairBatch, PairContext, TENSOR_NAMES};
use crate::error::Result;

/// Gradients below this magnitude on both sides are compared absolutely.
pub const ABSOLUTE_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    /// Largest per-entry error over all tensors.
    pub max_rel_error: f64,
    /// `(tensor, largest error)` in parameter order.
    pub per_tensor: Vec<(String, f64)>,
    pub n_checked: usize,
}

/// Per-entry error: `|a - n| / max(|a|, |n|)`, or `|a - n|` when both are
/// below [`ABSOLUTE_FLOOR`].
pub fn entry_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    if scale < ABSOLUTE_FLOOR {
        (analytic - numeric).abs()
    } else {
        (analytic - numeric).abs() / scale
    }
}

/// Compares every analytic partial derivative of the batch loss with the
/// central difference `(L(θ + ε) - L(θ - ε)) / 2ε`.
pub fn gradient_check(
    params: &BackboneParams,
    ctx: &PairContext,
    batch: &PairBatch,
    epsilon: f64,
) -> Result<GradCheckReport> {
    let (_, grad) = params.loss_and_grad(ctx, batch)?;
    let mut probe = params.clone();
    let mut per_tensor = Vec::with_capacity(TENSOR_NAMES.len());
    let mut n_checked = 0;
    for (t, name) in TENSOR_NAMES.iter().enumerate() {
        let analytic = grad.tensors()[t].to_vec();
        let mut worst: f64 = 0.0;
        for (j, &a) in analytic.iter().enumerate() {
            let original = probe.tensors()[t][j];
            probe.tensors_mut()[t][j] = original + epsilon;
            let up = probe.loss(ctx, batch)?;
            probe.tensors_mut()[t][j] = original - epsilon;
            let down = probe.loss(ctx, batch)?;
            probe.tensors_mut()[t][j] = original;
            let numeric = (up - down) / (2.0 * epsilon);
            worst = worst.max(entry_error(a, numeric));
            n_checked += 1;
        }
        per_tensor.push((name.to_string(), worst));
    }
    let max_rel_error = per_tensor.iter().map(|(_, e)| *e).fold(0.0, f64::max);
    Ok(GradCheckReport {
        max_rel_error,
        per_tensor,
        n_checked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::PlantedPartition;
    use crate::model::link::ncn_set;
    use crate::model::PriorTransform;
    use crate::prior::ClassPriorMatrix;
    use crate::split::sample_negatives;

    fn instance(seed: u64, fused: bool) -> (BackboneParams, PairContext, PairBatch) {
        let cfg = PlantedPartition {
            n_nodes: 24,
            n_classes: 2,
            n_edges: 50,
            n_features: 6,
            words_per_node: 3,
            ..Default::default()
        };
        let g = cfg.generate(seed);
        let labels = g.labels().unwrap().clone();
        let edges: Vec<_> = g.edges().collect();
        let prior = ClassPriorMatrix::from_edges(&edges, &labels).unwrap();
        let ctx = PairContext::new(g.clone(), g.features(), Some((prior, labels)), false, PriorTransform::Raw).unwrap();
        let neg = sample_negatives(&g, 12, seed, &Default::default()).unwrap();
        let pairs: Vec<_> = edges.iter().take(12).copied().chain(neg).collect();
        let targets = (0..24).map(|i| if i < 12 { 1.0 } else { 0.0 }).collect();
        let batch = PairBatch::build(&ctx, pairs, targets, |x, y| ncn_set(&ctx.graph, x, y)).unwrap();
        let input = if fused { 2 * 4 + 2 } else { 2 * 4 };
        let mut params = BackboneParams::glorot(6, 4, input, 5, seed);
        params.bh.fill(0.1);
        params.bo = -0.2;
        (params, ctx, batch)
    }

    #[test]
    fn fused_gradients_match_finite_differences() {
        for seed in 0..3 {
            let (p, ctx, batch) = instance(seed, true);
            let report = gradient_check(&p, &ctx, &batch, 1e-5).unwrap();
            assert!(report.max_rel_error <= 1e-4, "seed {seed}: {report:?}");
            assert_eq!(report.n_checked, 6 * 4 + 16 + 10 * 5 + 5 + 5 + 1);
        }
    }

    #[test]
    fn backbone_only_gradients_match() {
        let (p, ctx, batch) = instance(7, false);
        let report = gradient_check(&p, &ctx, &batch, 1e-5).unwrap();
        assert!(report.max_rel_error <= 1e-4, "{report:?}");
    }

    #[test]
    fn dead_unit_has_zero_gradient() {
        let (mut p, ctx, batch) = instance(3, true);
        // Hidden unit 0 never activates.
        p.wh.column_mut(0).fill(0.0);
        p.bh[0] = -1.0;
        let (_, grad) = p.loss_and_grad(&ctx, &batch).unwrap();
        assert_eq!(grad.wo[0], 0.0);
        assert!(grad.wh.column(0).iter().all(|&g| g == 0.0));
        let report = gradient_check(&p, &ctx, &batch, 1e-5).unwrap();
        assert!(report.max_rel_error <= 1e-4);
    }

    #[test]
    fn entry_error_rules() {
        assert_eq!(entry_error(0.0, 5e-9), 5e-9);
        assert!((entry_error(1.0, 1.0001) - 1e-4 / 1.0001).abs() < 1e-15);
    }
}
