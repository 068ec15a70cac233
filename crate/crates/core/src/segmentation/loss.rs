use candle_core::{DType, Tensor};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::log_softmax_channels;

pub const ENET_C: f64 = 1.02;

/// Per-class weights `1 / ln(c + p_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassWeightScheme {
    pub c: f64,
    pub weights: Vec<f64>,
}

/// `frequencies` may be proportions or raw counts; they are normalized first.
pub fn compute_class_weights(frequencies: &[f64], c: f64) -> Result<ClassWeightScheme> {
    if frequencies.is_empty() {
        return Err(Error::InvalidInput("no classes".into()));
    }
    if let Some(k) = frequencies.iter().position(|&f| !(f > 0.0 && f.is_finite())) {
        return Err(Error::ZeroClassFrequency(k));
    }
    let total: f64 = frequencies.iter().sum();
    let weights = frequencies
        .iter()
        .map(|&f| {
            let arg = c + f / total;
            if arg > 1.0 {
                Ok(1.0 / arg.ln())
            } else {
                Err(Error::InvalidConfig(format!("c = {c} leaves ln(c + p) non-positive")))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ClassWeightScheme { c, weights })
}

/// Pixel counts per class over label buffers.
pub fn class_counts<'a>(labels: impl IntoIterator<Item = &'a [u8]>, num_classes: usize) -> Vec<f64> {
    let mut counts = vec![0.0; num_classes];
    for buf in labels {
        for &l in buf {
            if (l as usize) < num_classes {
                counts[l as usize] += 1.0;
            }
        }
    }
    counts
}

/// `(N, K, H, W)` tensor holding `weights[y]` at the true class and 0 elsewhere.
fn weighted_one_hot(
    labels: &[u8],
    dims: (usize, usize, usize, usize),
    weights: &[f64],
    dtype: DType,
    device: &candle_core::Device,
) -> Result<Tensor> {
    let (n, k, h, w) = dims;
    let mut data = vec![0f64; n * k * h * w];
    for b in 0..n {
        for p in 0..h * w {
            let y = labels[b * h * w + p] as usize;
            if y >= k {
                return Err(Error::InvalidInput(format!("label {y} out of range for {k} classes")));
            }
            data[(b * k + y) * h * w + p] = weights[y];
        }
    }
    Ok(Tensor::from_vec(data, (n, k, h, w), device)?.to_dtype(dtype)?)
}

/// Mean over pixels of `w_y * -log softmax(scores)_y`.
///
/// `scores` is `(N, K, H, W)`; `labels` holds `N*H*W` class ids in NHW order.
pub fn weighted_cross_entropy(scores: &Tensor, labels: &[u8], weights: &[f64]) -> Result<Tensor> {
    let (n, k, h, w) = scores.dims4()?;
    if labels.len() != n * h * w {
        return Err(Error::dims(n * h * w, labels.len()));
    }
    if weights.len() != k {
        return Err(Error::dims(format!("{k} class weights"), weights.len()));
    }
    let target = weighted_one_hot(labels, (n, k, h, w), weights, scores.dtype(), scores.device())?;
    let logp = log_softmax_channels(scores)?;
    Ok(((logp * target)?.sum_all()?.neg()? / (n * h * w) as f64)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use candle_core::Device;

    fn scalar(t: &Tensor) -> f64 {
        t.to_dtype(DType::F64).unwrap().to_scalar::<f64>().unwrap()
    }

    #[test]
    #[allow(clippy::approx_constant)] // w(0.98) = 1/ln 2
    fn enet_values() {
        let w = compute_class_weights(&[0.5, 0.5], ENET_C).unwrap();
        assert!((w.weights[0] - 2.3875).abs() < 1e-3);
        assert_eq!(w.weights[0], w.weights[1]);
        let w = compute_class_weights(&[0.98, 0.02], ENET_C).unwrap();
        assert!((w.weights[0] - 1.4427).abs() < 1e-3);
        assert!(w.weights[1] > w.weights[0]);
    }

    #[test]
    fn scale_free() {
        let a = compute_class_weights(&[0.5, 0.5], ENET_C).unwrap();
        let b = compute_class_weights(&[500.0, 500.0], ENET_C).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_frequency_rejected() {
        assert!(matches!(
            compute_class_weights(&[0.7, 0.0, 0.3], ENET_C),
            Err(Error::ZeroClassFrequency(1))
        ));
    }

    #[test]
    fn uniform_scores_give_mean_weight_times_ln_k() {
        let scores = Tensor::zeros((1, 3, 2, 2), DType::F64, &Device::Cpu).unwrap();
        let labels = [0u8, 1, 2, 2];
        let weights = [1.0, 2.0, 4.0];
        let loss = scalar(&weighted_cross_entropy(&scores, &labels, &weights).unwrap());
        let mean_w = (1.0 + 2.0 + 4.0 + 4.0) / 4.0;
        assert!((loss - mean_w * 3f64.ln()).abs() < 1e-12);
        let doubled = scalar(&weighted_cross_entropy(&scores, &labels, &[2.0, 4.0, 8.0]).unwrap());
        assert!((doubled - 2.0 * loss).abs() < 1e-12);
    }

    #[test]
    fn confident_correct_scores_approach_zero() {
        let labels = [1u8, 0];
        let mut v = vec![0f64; 4];
        // (1, 2 classes, 1, 2)
        v[2] = 50.0; // class 1 at pixel 0
        v[1] = 50.0; // class 0 at pixel 1
        let scores = Tensor::from_vec(v, (1, 2, 1, 2), &Device::Cpu).unwrap();
        let loss = scalar(&weighted_cross_entropy(&scores, &labels, &[1.0, 1.0]).unwrap());
        assert!((0.0..1e-12).contains(&loss));
    }

    #[test]
    fn shape_mismatch_rejected() {
        let scores = Tensor::zeros((1, 3, 2, 2), DType::F32, &Device::Cpu).unwrap();
        assert!(weighted_cross_entropy(&scores, &[0, 1, 2], &[1.0; 3]).is_err());
        assert!(weighted_cross_entropy(&scores, &[0; 4], &[1.0; 2]).is_err());
        assert!(weighted_cross_entropy(&scores, &[0, 1, 2, 3], &[1.0; 3]).is_err());
    }
}
