use super::{GrayImage, MetricName, MetricValue, GRAY_LEVELS};
use crate::error::{Error, Result};

/// PSNR below this value indicates significant deterioration.
pub const PSNR_BENCHMARK_DB: f64 = 30.0;

const MAX_INTENSITY: f64 = 255.0;

/// Shannon entropy of the 256-bin intensity histogram, in bits per pixel.
///
/// Non-integer luminance values are binned to the nearest level.
pub fn entropy(image: &GrayImage) -> MetricValue {
    let mut hist = [0u64; GRAY_LEVELS];
    for &v in image.data() {
        let level = v.round().clamp(0.0, (GRAY_LEVELS - 1) as f64) as usize;
        hist[level] += 1;
    }
    let n = image.len() as f64;
    let en = hist
        .iter()
        .filter(|&&count| count > 0)
        .map(|&count| {
            let p = count as f64 / n;
            -p * p.log2()
        })
        .sum::<f64>();
    // a single occupied bin yields -1*log2(1) = -0.0
    MetricValue::new(MetricName::En, en.max(0.0))
}

/// Pearson correlation coefficient, `Cov(x,y) / sqrt(Var(x) Var(y))`.
pub fn correlation(x: &GrayImage, y: &GrayImage) -> Result<MetricValue> {
    x.check_same_dims(y)?;
    let n = x.len() as f64;
    let mean_x = x.data().iter().sum::<f64>() / n;
    let mean_y = y.data().iter().sum::<f64>() / n;
    let (mut cov, mut var_x, mut var_y) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.data().iter().zip(y.data()) {
        let dx = a - mean_x;
        let dy = b - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if var_x == 0.0 {
        return Err(Error::UndefinedCorrelation("first image"));
    }
    if var_y == 0.0 {
        return Err(Error::UndefinedCorrelation("second image"));
    }
    let cc = (cov / (var_x * var_y).sqrt()).clamp(-1.0, 1.0);
    Ok(MetricValue::new(MetricName::Cc, cc))
}

pub fn mse(x: &GrayImage, y: &GrayImage) -> Result<f64> {
    x.check_same_dims(y)?;
    let sum: f64 = x.data().iter().zip(y.data()).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sum / x.len() as f64)
}

/// Peak signal-to-noise ratio with `MAX = 255`. Identical images give `+inf`.
pub fn psnr(x: &GrayImage, y: &GrayImage) -> Result<MetricValue> {
    let err = mse(x, y)?;
    let value = if err == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (MAX_INTENSITY * MAX_INTENSITY / err).log10()
    };
    Ok(MetricValue::new(MetricName::Psnr, value))
}

/// True when a PSNR value falls below the 30 dB benchmark.
pub fn psnr_flagged(value_db: f64) -> bool {
    value_db < PSNR_BENCHMARK_DB
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gray(w: usize, h: usize, f: impl Fn(usize) -> f64) -> GrayImage {
        GrayImage::new(w, h, (0..w * h).map(f).collect()).unwrap()
    }

    #[test]
    fn entropy_reference_values() {
        assert_eq!(entropy(&gray(4, 4, |_| 9.0)).value, 0.0);
        let half = gray(4, 4, |i| if i < 8 { 0.0 } else { 255.0 });
        assert!((entropy(&half).value - 1.0).abs() < 1e-12);
        let uniform = gray(16, 16, |i| i as f64);
        assert!((entropy(&uniform).value - 8.0).abs() < 1e-12);
    }

    #[test]
    fn correlation_of_constant_is_an_error() {
        let c = gray(3, 3, |_| 4.0);
        let v = gray(3, 3, |i| i as f64);
        assert!(matches!(correlation(&c, &v), Err(Error::UndefinedCorrelation(_))));
        assert!(matches!(correlation(&v, &c), Err(Error::UndefinedCorrelation(_))));
    }

    #[test]
    fn correlation_extremes() {
        let x = gray(5, 5, |i| ((i * 37) % 251) as f64);
        let inv = gray(5, 5, |i| 255.0 - ((i * 37) % 251) as f64);
        assert_eq!(correlation(&x, &x).unwrap().value, 1.0);
        assert!((correlation(&x, &inv).unwrap().value + 1.0).abs() < 1e-12);
    }

    #[test]
    fn psnr_reference_values() {
        let x = gray(8, 8, |i| (i * 3) as f64);
        let y = gray(8, 8, |i| (i * 3 + 16) as f64);
        assert_eq!(psnr(&x, &x).unwrap().value, f64::INFINITY);
        let p = psnr(&x, &y).unwrap().value;
        assert!((p - 10.0 * (65025.0f64 / 256.0).log10()).abs() < 1e-12);
        assert!((p - 24.05).abs() < 0.01);
        assert!(psnr_flagged(p));
        assert!(!psnr_flagged(f64::INFINITY));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let a = gray(2, 3, |_| 0.0);
        let b = gray(3, 2, |_| 0.0);
        assert!(psnr(&a, &b).is_err());
        assert!(correlation(&a, &b).is_err());
    }
}
