use super::{GrayImage, MetricName, MetricValue};
use crate::error::Result;

/// Structural similarity parameters. Defaults follow the reference SSIM
/// implementation: 11x11 Gaussian window with sigma 1.5, `K1 = 0.01`,
/// `K2 = 0.03`, `c3 = c2 / 2` and unit exponents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsimParams {
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            window: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 255.0,
            alpha: 1.0,
            beta: 1.0,
            gamma: 1.0,
        }
    }
}

impl SsimParams {
    pub fn c1(&self) -> f64 {
        (self.k1 * self.dynamic_range).powi(2)
    }

    pub fn c2(&self) -> f64 {
        (self.k2 * self.dynamic_range).powi(2)
    }

    pub fn c3(&self) -> f64 {
        self.c2() / 2.0
    }

    /// Normalized 1-D Gaussian taps; the 2-D window is their outer product.
    pub fn gaussian_taps(&self) -> Vec<f64> {
        let half = (self.window as f64 - 1.0) / 2.0;
        let taps: Vec<f64> = (0..self.window)
            .map(|i| {
                let d = i as f64 - half;
                (-(d * d) / (2.0 * self.sigma * self.sigma)).exp()
            })
            .collect();
        let sum: f64 = taps.iter().sum();
        taps.into_iter().map(|t| t / sum).collect()
    }

    /// Combines local statistics into one SSIM value.
    pub fn combine(&self, mu_x: f64, mu_y: f64, var_x: f64, var_y: f64, cov: f64) -> f64 {
        let (c1, c2, c3) = (self.c1(), self.c2(), self.c3());
        if self.alpha == 1.0 && self.beta == 1.0 && self.gamma == 1.0 {
            // With c3 = c2/2 contrast * structure collapses to one ratio,
            // which keeps SSIM(x, x) exactly 1 in floating point.
            return (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)
                / ((mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2));
        }
        let sd_x = var_x.max(0.0).sqrt();
        let sd_y = var_y.max(0.0).sqrt();
        let luminance = (2.0 * mu_x * mu_y + c1) / (mu_x * mu_x + mu_y * mu_y + c1);
        let contrast = (2.0 * sd_x * sd_y + c2) / (var_x.max(0.0) + var_y.max(0.0) + c2);
        let structure = (cov + c3) / (sd_x * sd_y + c3);
        pow(luminance, self.alpha) * pow(contrast, self.beta) * pow(structure, self.gamma)
    }
}

fn pow(base: f64, exp: f64) -> f64 {
    if exp == 1.0 {
        base
    } else {
        base.powf(exp)
    }
}

/// Mean SSIM over all fully-contained Gaussian windows. Images smaller than
/// the window fall back to a single global window with uniform weights.
pub fn ssim(x: &GrayImage, y: &GrayImage, params: &SsimParams) -> Result<MetricValue> {
    Ok(MetricValue::new(MetricName::Ssim, ssim_map_mean(x, y, params)?))
}

pub fn ssim_map_mean(x: &GrayImage, y: &GrayImage, params: &SsimParams) -> Result<f64> {
    x.check_same_dims(y)?;
    let (w, h) = (x.width(), x.height());
    let win = params.window;
    if w < win || h < win {
        return Ok(global_ssim(x, y, params));
    }

    let taps = params.gaussian_taps();
    let xy: Vec<f64> = x.data().iter().zip(y.data()).map(|(a, b)| a * b).collect();
    let xx: Vec<f64> = x.data().iter().map(|a| a * a).collect();
    let yy: Vec<f64> = y.data().iter().map(|b| b * b).collect();

    let mu_x = filter_valid(x.data(), w, h, &taps);
    let mu_y = filter_valid(y.data(), w, h, &taps);
    let e_xx = filter_valid(&xx, w, h, &taps);
    let e_yy = filter_valid(&yy, w, h, &taps);
    let e_xy = filter_valid(&xy, w, h, &taps);

    let n = mu_x.len();
    let mut total = 0.0;
    for i in 0..n {
        let (mx, my) = (mu_x[i], mu_y[i]);
        total += params.combine(mx, my, e_xx[i] - mx * mx, e_yy[i] - my * my, e_xy[i] - mx * my);
    }
    Ok(total / n as f64)
}

fn global_ssim(x: &GrayImage, y: &GrayImage, params: &SsimParams) -> f64 {
    let n = x.len() as f64;
    let mx = x.data().iter().sum::<f64>() / n;
    let my = y.data().iter().sum::<f64>() / n;
    let (mut vx, mut vy, mut cov) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.data().iter().zip(y.data()) {
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
        cov += (a - mx) * (b - my);
    }
    params.combine(mx, my, vx / n, vy / n, cov / n)
}

/// Separable "valid" correlation: output is `(w-k+1) x (h-k+1)`.
fn filter_valid(src: &[f64], w: usize, h: usize, taps: &[f64]) -> Vec<f64> {
    let k = taps.len();
    let ow = w - k + 1;
    let oh = h - k + 1;
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        let line = &src[y * w..(y + 1) * w];
        for x in 0..ow {
            rows[y * ow + x] = taps.iter().zip(&line[x..x + k]).map(|(t, v)| t * v).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            let mut acc = 0.0;
            for (j, t) in taps.iter().enumerate() {
                acc += t * rows[(y + j) * ow + x];
            }
            out[y * ow + x] = acc;
        }
    }
    out
}
