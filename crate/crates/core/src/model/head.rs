//! Fusion MLP: one hidden ReLU layer, a linear output and a sigmoid.

use ndarray::{Array1, Array2};

use super::link::LinkEmbedding;
use super::network::BackboneParams;
use crate::error::{Error, Result};

#[inline]
pub(crate) fn sigmoid(o: f64) -> f64 {
    if o >= 0.0 {
        1.0 / (1.0 + (-o).exp())
    } else {
        let e = o.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^o)` without overflow.
#[inline]
pub(crate) fn softplus(o: f64) -> f64 {
    o.max(0.0) + (-o.abs()).exp().ln_1p()
}

/// Hidden pre-activations `a = in · Wh + bh` and the output logit.
pub(crate) fn forward(wh: &Array2<f64>, bh: &Array1<f64>, wo: &Array1<f64>, bo: f64, input: &[f64]) -> (Vec<f64>, f64) {
    let mut a = bh.to_vec();
    for (j, &v) in input.iter().enumerate() {
        if v != 0.0 {
            for (ak, &w) in a.iter_mut().zip(wh.row(j)) {
                *ak += v * w;
            }
        }
    }
    let o = bo + a.iter().zip(wo).map(|(&ak, &w)| ak.max(0.0) * w).sum::<f64>();
    (a, o)
}

/// Head input: the embedding, followed by the two prior features when present.
pub(crate) fn head_input(e: &LinkEmbedding, priors: Option<(f64, f64)>) -> Vec<f64> {
    let mut input = e.0.clone();
    if let Some((p1, p2)) = priors {
        input.push(p1);
        input.push(p2);
    }
    input
}

/// `σ(MLP(e ∥ p1 ∥ p2))`.
pub fn fuse_and_predict(e: &LinkEmbedding, priors: (f64, f64), params: &BackboneParams) -> Result<f64> {
    let input = head_input(e, Some(priors));
    predict_input(&input, params)
}

pub(crate) fn predict_input(input: &[f64], params: &BackboneParams) -> Result<f64> {
    if input.len() != params.wh.nrows() {
        return Err(Error::Dimension(format!(
            "head input has {} entries, the head expects {}",
            input.len(),
            params.wh.nrows()
        )));
    }
    if input.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite fusion input".into()));
    }
    let (_, o) = forward(&params.wh, &params.bh, &params.wo, params.bo, input);
    Ok(sigmoid(o))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_primitives() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(800.0) <= 1.0 && sigmoid(-800.0) >= 0.0);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(softplus(1000.0), 1000.0);
        assert!(softplus(-1000.0) >= 0.0);
    }

    #[test]
    fn zero_head_gives_half() {
        let p = BackboneParams::zeros(3, 2, 6, 4);
        let e = LinkEmbedding(vec![0.3, -1.0, 2.0, 0.5]);
        assert_eq!(fuse_and_predict(&e, (0.2, 0.9), &p).unwrap(), 0.5);
    }

    #[test]
    fn matches_reference_evaluation() {
        let mut p = BackboneParams::zeros(3, 2, 6, 3);
        let mut k = 0.0f64;
        p.wh.mapv_inplace(|_| {
            k += 0.37;
            k.sin()
        });
        p.bh = ndarray::array![0.1, -0.2, 0.3];
        p.wo = ndarray::array![0.5, -1.5, 0.25];
        p.bo = -0.05;
        let e = LinkEmbedding(vec![0.3, -1.0, 2.0, 0.5]);
        let input = [0.3, -1.0, 2.0, 0.5, 0.2, 0.9];
        let mut logit = p.bo;
        for h in 0..3 {
            let mut a = p.bh[h];
            for j in 0..6 {
                a += input[j] * p.wh[[j, h]];
            }
            logit += p.wo[h] * a.max(0.0);
        }
        let expected = 1.0 / (1.0 + (-logit).exp());
        let got = fuse_and_predict(&e, (0.2, 0.9), &p).unwrap();
        assert!((got - expected).abs() < 1e-12);
        assert!(got > 0.0 && got < 1.0);
    }

    #[test]
    fn rejects_bad_input() {
        let p = BackboneParams::zeros(3, 2, 6, 4);
        let e = LinkEmbedding(vec![f64::NAN, 0.0, 0.0, 0.0]);
        assert!(matches!(fuse_and_predict(&e, (0.0, 0.0), &p), Err(Error::Numeric(_))));
        let short = LinkEmbedding(vec![0.0, 0.0]);
        assert!(matches!(fuse_and_predict(&short, (0.0, 0.0), &p), Err(Error::Dimension(_))));
    }
}
