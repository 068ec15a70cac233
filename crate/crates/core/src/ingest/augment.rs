use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::align::bilinear;
use super::pairing::PairedSample;
use crate::error::{Error, Result};
use crate::image::Image;

/// Variants produced per input sample.
pub const AUGMENTATION_FACTOR: usize = 16;

/// Fixed augmentation recipe: identity, mirror, each rotation with and
/// without mirroring, then random crops until 16 variants exist.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    pub rotations_deg: Vec<f64>,
    /// Crop side as a fraction of the source side, sampled uniformly.
    pub crop_fraction: (f64, f64),
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            rotations_deg: vec![-10.0, -5.0, 5.0, 10.0],
            crop_fraction: (0.75, 0.95),
        }
    }
}

impl AugmentConfig {
    fn validate(&self) -> Result<()> {
        let fixed = 2 + 2 * self.rotations_deg.len();
        if fixed > AUGMENTATION_FACTOR {
            return Err(Error::InvalidConfig(format!(
                "{} rotations leave no room in {AUGMENTATION_FACTOR} variants",
                self.rotations_deg.len()
            )));
        }
        let (lo, hi) = self.crop_fraction;
        if !(0.0 < lo && lo <= hi && hi <= 1.0) {
            return Err(Error::InvalidConfig(
                "crop fractions must satisfy 0 < lo <= hi <= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Geometric operation applied identically to both members of a pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum AugmentKind {
    Identity,
    Mirror,
    Rotate {
        degrees: f64,
        mirror: bool,
    },
    /// Crop rectangle in fractions of the source size, re-padded centered.
    Crop {
        x0: f64,
        y0: f64,
        w: f64,
        h: f64,
    },
}

impl AugmentKind {
    pub fn tag(&self) -> String {
        match self {
            AugmentKind::Identity => "id".into(),
            AugmentKind::Mirror => "mirror".into(),
            AugmentKind::Rotate { degrees, mirror } => {
                format!("rot{}{}", degrees, if *mirror { "m" } else { "" })
            }
            AugmentKind::Crop { .. } => "crop".into(),
        }
    }

    pub fn apply(&self, img: &Image) -> Image {
        match *self {
            AugmentKind::Identity => img.clone(),
            AugmentKind::Mirror => mirror(img),
            AugmentKind::Rotate { degrees, mirror: m } => {
                let src = if m { mirror(img) } else { img.clone() };
                rotate(&src, degrees)
            }
            AugmentKind::Crop { x0, y0, w, h } => crop_repad(img, x0, y0, w, h),
        }
    }
}

/// The 16 operations for one sample; crops are drawn from `seed`.
pub fn augmentation_plan(config: &AugmentConfig, seed: u64) -> Result<Vec<AugmentKind>> {
    config.validate()?;
    let mut plan = vec![AugmentKind::Identity, AugmentKind::Mirror];
    for &mirror in &[false, true] {
        for &degrees in &config.rotations_deg {
            plan.push(AugmentKind::Rotate { degrees, mirror });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = config.crop_fraction;
    while plan.len() < AUGMENTATION_FACTOR {
        let w = if hi > lo { rng.random_range(lo..=hi) } else { lo };
        let h = if hi > lo { rng.random_range(lo..=hi) } else { lo };
        let x0 = rng.random_range(0.0..=1.0 - w);
        let y0 = rng.random_range(0.0..=1.0 - h);
        plan.push(AugmentKind::Crop { x0, y0, w, h });
    }
    Ok(plan)
}

/// Expands one pair into 16 variants. A pure function of `(sample, seed)`.
pub fn augment(sample: &PairedSample, seed: u64) -> Result<Vec<PairedSample>> {
    augment_with(sample, seed, &AugmentConfig::default())
}

pub fn augment_with(sample: &PairedSample, seed: u64, config: &AugmentConfig) -> Result<Vec<PairedSample>> {
    if sample.visible.image.is_empty() || sample.ir.image.is_empty() {
        return Err(Error::InvalidInput("cannot augment an empty image".into()));
    }
    Ok(augmentation_plan(config, seed)?
        .iter()
        .map(|op| {
            let mut out = sample.clone();
            out.visible.image = op.apply(&sample.visible.image);
            out.ir.image = op.apply(&sample.ir.image);
            out
        })
        .collect())
}

pub fn mirror(img: &Image) -> Image {
    let w = img.width();
    Image::from_fn(w, img.height(), img.channels(), |x, y, c| img.get(w - 1 - x, y, c))
}

/// Rotation about the image center, bilinear, zero fill.
pub fn rotate(img: &Image, degrees: f64) -> Image {
    let (s, c) = degrees.to_radians().sin_cos();
    let cx = (img.width() as f64 - 1.0) / 2.0;
    let cy = (img.height() as f64 - 1.0) / 2.0;
    Image::from_fn(img.width(), img.height(), img.channels(), |x, y, ch| {
        let dx = x as f64 - cx;
        let dy = y as f64 - cy;
        // inverse mapping: rotate destination by -theta
        let sx = c * dx + s * dy + cx;
        let sy = -s * dx + c * dy + cy;
        bilinear(img, sx, sy, ch)
    })
}

fn crop_repad(img: &Image, fx: f64, fy: f64, fw: f64, fh: f64) -> Image {
    let (w, h) = img.dims();
    let cw = ((fw * w as f64).round() as usize).clamp(1, w);
    let chh = ((fh * h as f64).round() as usize).clamp(1, h);
    let x0 = ((fx * w as f64).floor() as usize).min(w - cw);
    let y0 = ((fy * h as f64).floor() as usize).min(h - chh);
    let ox = (w - cw) / 2;
    let oy = (h - chh) / 2;
    let mut out = Image::zeros(w, h, img.channels());
    for y in 0..chh {
        for x in 0..cw {
            for c in 0..img.channels() {
                out.set(ox + x, oy + y, c, img.get(x0 + x, y0 + y, c));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{Affine2, FrameRecord};

    fn sample() -> PairedSample {
        PairedSample {
            visible: FrameRecord::new(
                "vis",
                0,
                0.0,
                Image::from_fn(12, 9, 3, |x, y, c| (x * 20 + y * 3 + c) as u8),
            ),
            ir: FrameRecord::new(
                "ir",
                0,
                0.0,
                Image::from_fn(12, 9, 3, |x, y, c| (200 - x * 10 - y + c) as u8),
            ),
            time_offset: 0.0,
            alignment: Affine2::identity(),
        }
    }

    #[test]
    fn sixteen_deterministic_variants() {
        let s = sample();
        let a = augment(&s, 7).unwrap();
        let b = augment(&s, 7).unwrap();
        assert_eq!(a.len(), AUGMENTATION_FACTOR);
        assert_eq!(a, b);
        assert_ne!(augment(&s, 8).unwrap(), a);
        assert_eq!(a[0], s);
    }

    #[test]
    fn mirror_variant_flips_both_members() {
        let s = sample();
        let out = augment(&s, 1).unwrap();
        let m = &out[1];
        let w = s.visible.image.width();
        for y in 0..9 {
            for x in 0..w {
                for c in 0..3 {
                    assert_eq!(m.visible.image.get(x, y, c), s.visible.image.get(w - 1 - x, y, c));
                    assert_eq!(m.ir.image.get(x, y, c), s.ir.image.get(w - 1 - x, y, c));
                }
            }
        }
    }

    #[test]
    fn zero_rotation_is_identity() {
        let img = sample().visible.image;
        assert_eq!(rotate(&img, 0.0), img);
    }

    #[test]
    fn crops_keep_dimensions() {
        let s = sample();
        for v in augment(&s, 3).unwrap() {
            assert_eq!(v.visible.image.dims(), s.visible.image.dims());
            assert_eq!(v.ir.image.dims(), s.ir.image.dims());
        }
    }

    #[test]
    fn too_many_rotations_rejected() {
        let cfg = AugmentConfig {
            rotations_deg: vec![1.0; 8],
            ..Default::default()
        };
        assert!(augmentation_plan(&cfg, 0).is_err());
    }
}
