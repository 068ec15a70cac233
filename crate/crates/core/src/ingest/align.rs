use serde::{Deserialize, Serialize};

use super::pairing::PairedSample;
use crate::error::{Error, Result};
use crate::image::Image;

/// 2x3 affine transform, `[x', y'] = A [x, y, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Affine2 {
    pub m: [[f64; 3]; 2],
}

impl Default for Affine2 {
    fn default() -> Self {
        Self::identity()
    }
}

impl Affine2 {
    pub const fn identity() -> Self {
        Self {
            m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
        }
    }

    /// Uniform scale `s`, rotation `theta` (radians) and translation.
    pub fn similarity(scale: f64, theta: f64, tx: f64, ty: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self {
            m: [[scale * c, -scale * s, tx], [scale * s, scale * c, ty]],
        }
    }

    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        let m = &self.m;
        (m[0][0] * x + m[0][1] * y + m[0][2], m[1][0] * x + m[1][1] * y + m[1][2])
    }

    pub fn determinant(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn is_invertible(&self) -> bool {
        self.determinant().abs() > 1e-12
    }

    pub fn inverse(&self) -> Option<Self> {
        let det = self.determinant();
        if det.abs() <= 1e-12 {
            return None;
        }
        let [[a, b, tx], [c, d, ty]] = self.m;
        let ia = d / det;
        let ib = -b / det;
        let ic = -c / det;
        let id = a / det;
        Some(Self {
            m: [[ia, ib, -(ia * tx + ib * ty)], [ic, id, -(ic * tx + id * ty)]],
        })
    }
}

/// Least-squares similarity fit between reference point sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityFit {
    pub transform: Affine2,
    pub scale: f64,
    /// Radians; positive turns +x toward +y.
    pub rotation: f64,
    pub translation: (f64, f64),
    /// Euclidean residual per reference pair, in IR pixels.
    pub residuals: Vec<f64>,
}

/// Closed-form least-squares similarity (rotation, uniform scale,
/// translation) mapping `src` points onto `dst` points.
pub fn fit_similarity(src: &[(f64, f64)], dst: &[(f64, f64)]) -> Result<SimilarityFit> {
    if src.len() != dst.len() {
        return Err(Error::ReferenceCountMismatch {
            visible: src.len(),
            ir: dst.len(),
        });
    }
    if src.len() < 2 {
        return Err(Error::InsufficientReferences(src.len()));
    }
    let n = src.len() as f64;
    let centroid = |pts: &[(f64, f64)]| {
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
        (sx / n, sy / n)
    };
    let (sx, sy) = centroid(src);
    let (dx, dy) = centroid(dst);

    let (mut norm_src, mut norm_dst, mut dot, mut cross) = (0.0, 0.0, 0.0, 0.0);
    for (s, d) in src.iter().zip(dst) {
        let (x, y) = (s.0 - sx, s.1 - sy);
        let (u, v) = (d.0 - dx, d.1 - dy);
        norm_src += x * x + y * y;
        norm_dst += u * u + v * v;
        dot += x * u + y * v;
        cross += x * v - y * u;
    }
    if norm_src <= 1e-18 || norm_dst <= 1e-18 {
        return Err(Error::DegenerateReferences);
    }
    let a = dot / norm_src;
    let b = cross / norm_src;
    let scale = a.hypot(b);
    if scale <= 1e-12 {
        return Err(Error::DegenerateReferences);
    }
    let tx = dx - (a * sx - b * sy);
    let ty = dy - (b * sx + a * sy);
    let transform = Affine2 {
        m: [[a, -b, tx], [b, a, ty]],
    };
    let residuals = src
        .iter()
        .zip(dst)
        .map(|(s, d)| {
            let (px, py) = transform.apply(s.0, s.1);
            (px - d.0).hypot(py - d.1)
        })
        .collect();
    Ok(SimilarityFit {
        transform,
        scale,
        rotation: b.atan2(a),
        translation: (tx, ty),
        residuals,
    })
}

/// Attaches the fitted visible-to-IR transform to a pair.
pub fn align_frames(
    sample: &PairedSample,
    ref_points_visible: &[(f64, f64)],
    ref_points_ir: &[(f64, f64)],
) -> Result<(PairedSample, SimilarityFit)> {
    let fit = fit_similarity(ref_points_visible, ref_points_ir)?;
    let mut aligned = sample.clone();
    aligned.alignment = fit.transform;
    Ok((aligned, fit))
}

/// Resamples `src` through `transform` (source -> destination coordinates)
/// into a `width x height` destination with bilinear interpolation; samples
/// falling outside the source are zero.
pub fn warp_affine(src: &Image, transform: &Affine2, width: usize, height: usize) -> Result<Image> {
    let inv = transform
        .inverse()
        .ok_or_else(|| Error::InvalidInput("alignment transform is not invertible".into()))?;
    let c = src.channels();
    let mut out = Image::zeros(width, height, c);
    for y in 0..height {
        for x in 0..width {
            let (sx, sy) = inv.apply(x as f64, y as f64);
            for ch in 0..c {
                out.set(x, y, ch, bilinear(src, sx, sy, ch));
            }
        }
    }
    Ok(out)
}

pub(crate) fn bilinear(src: &Image, x: f64, y: f64, ch: usize) -> u8 {
    let (w, h) = (src.width() as f64, src.height() as f64);
    if x < -0.5 || y < -0.5 || x > w - 0.5 || y > h - 0.5 {
        return 0;
    }
    let x = x.clamp(0.0, w - 1.0);
    let y = y.clamp(0.0, h - 1.0);
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = (x0 + 1).min(src.width() - 1);
    let y1 = (y0 + 1).min(src.height() - 1);
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    let p = |xx: usize, yy: usize| src.get(xx, yy, ch) as f64;
    let top = p(x0, y0) * (1.0 - fx) + p(x1, y0) * fx;
    let bottom = p(x0, y1) * (1.0 - fx) + p(x1, y1) * fx;
    (top * (1.0 - fy) + bottom * fy).round().clamp(0.0, 255.0) as u8
}
