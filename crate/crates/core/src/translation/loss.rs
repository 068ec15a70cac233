use candle_core::Tensor;

use crate::error::{Error, Result};
use crate::nn::bce_with_logits;

fn same_shape(a: &Tensor, b: &Tensor) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::dims(format!("{:?}", a.dims()), format!("{:?}", b.dims())));
    }
    Ok(())
}

/// `mean |generated - target|`.
pub fn l1_loss(generated: &Tensor, target: &Tensor) -> Result<Tensor> {
    same_shape(generated, target)?;
    Ok((generated - target)?.abs()?.mean_all()?)
}

/// Adversarial term with fakes labelled real, plus `lambda` times L1.
pub fn generator_loss(fake_scores: &Tensor, generated: &Tensor, target: &Tensor, lambda: f64) -> Result<Tensor> {
    let adversarial = bce_with_logits(fake_scores, 1.0)?;
    let l1 = l1_loss(generated, target)?;
    Ok((adversarial + (l1 * lambda)?)?)
}

/// Half the sum of the real-as-real and fake-as-fake terms.
pub fn discriminator_loss(real_scores: &Tensor, fake_scores: &Tensor) -> Result<Tensor> {
    same_shape(real_scores, fake_scores)?;
    let real = bce_with_logits(real_scores, 1.0)?;
    let fake = bce_with_logits(fake_scores, 0.0)?;
    Ok(((real + fake)? * 0.5)?)
}

/// `(generator_loss, discriminator_loss)`.
pub fn gan_loss(
    real_scores: &Tensor,
    fake_scores: &Tensor,
    generated: &Tensor,
    target: &Tensor,
    lambda: f64,
) -> Result<(Tensor, Tensor)> {
    Ok((
        generator_loss(fake_scores, generated, target, lambda)?,
        discriminator_loss(real_scores, fake_scores)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use candle_core::Device;

    fn t(v: &[f32]) -> Tensor {
        Tensor::from_vec(v.to_vec(), (1, 1, 2, 2), &Device::Cpu).unwrap()
    }

    fn scalar(x: &Tensor) -> f64 {
        x.to_scalar::<f32>().unwrap() as f64
    }

    fn bce(logit: f64, label: f64) -> f64 {
        let p = 1.0 / (1.0 + (-logit).exp());
        -(label * p.ln() + (1.0 - label) * (1.0 - p).ln())
    }

    #[test]
    fn hand_computed_toy() {
        let real: [f64; 4] = [1.0, -0.5, 2.0, 0.0];
        let fake: [f64; 4] = [-1.0, 0.3, 0.0, -2.0];
        let gen: [f64; 4] = [0.1, 0.2, -0.3, 0.4];
        let tgt: [f64; 4] = [0.0, 0.5, -0.5, 0.4];
        let lambda = 10.0;
        let (g, d) = gan_loss(
            &t(&real.map(|v| v as f32)),
            &t(&fake.map(|v| v as f32)),
            &t(&gen.map(|v| v as f32)),
            &t(&tgt.map(|v| v as f32)),
            lambda,
        )
        .unwrap();
        let adv: f64 = fake.iter().map(|&f| bce(f, 1.0)).sum::<f64>() / 4.0;
        let l1: f64 = gen.iter().zip(&tgt).map(|(a, b)| (a - b).abs()).sum::<f64>() / 4.0;
        let d_real: f64 = real.iter().map(|&r| bce(r, 1.0)).sum::<f64>() / 4.0;
        let d_fake: f64 = fake.iter().map(|&f| bce(f, 0.0)).sum::<f64>() / 4.0;
        assert!((scalar(&g) - (adv + lambda * l1)).abs() < 1e-5);
        assert!((scalar(&d) - 0.5 * (d_real + d_fake)).abs() < 1e-5);
    }

    #[test]
    fn identical_images_zero_l1() {
        let a = t(&[0.3, -0.2, 0.9, 0.0]);
        assert_eq!(scalar(&l1_loss(&a, &a).unwrap()), 0.0);
        let scores = t(&[0.5, 0.5, -1.0, 2.0]);
        let g = generator_loss(&scores, &a, &a, 100.0).unwrap();
        let adv = bce_with_logits(&scores, 1.0).unwrap();
        assert!((scalar(&g) - scalar(&adv)).abs() < 1e-7);
    }

    #[test]
    fn zero_lambda_is_pure_adversarial() {
        let scores = t(&[0.5, 0.1, -1.0, 2.0]);
        let g = generator_loss(&scores, &t(&[1.0; 4]), &t(&[-1.0; 4]), 0.0).unwrap();
        assert_eq!(scalar(&g), scalar(&bce_with_logits(&scores, 1.0).unwrap()));
    }

    #[test]
    fn shape_mismatch_rejected() {
        let a = t(&[0.0; 4]);
        let b = Tensor::zeros((1, 1, 2, 3), candle_core::DType::F32, &Device::Cpu).unwrap();
        assert!(l1_loss(&a, &b).is_err());
        assert!(discriminator_loss(&a, &b).is_err());
    }
}
