use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;

/// Where the reference brightness comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceMode {
    /// The real IR frame paired with the translated one.
    PairedReal,
    /// Mean real-IR RMS of the training corpus, stored in the checkpoint.
    #[default]
    CorpusMean,
}

impl std::str::FromStr for ReferenceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paired" | "paired_real" => Ok(Self::PairedReal),
            "corpus_mean" | "corpus" => Ok(Self::CorpusMean),
            other => Err(Error::InvalidConfig(format!("unknown brightness reference `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BrightnessPolicy {
    /// Intensity gap above which the artificial image is rescaled.
    pub threshold: f64,
    pub factor: f64,
    pub reference_mode: ReferenceMode,
}

impl Default for BrightnessPolicy {
    fn default() -> Self {
        Self {
            threshold: 20.0,
            factor: 1.5,
            reference_mode: ReferenceMode::CorpusMean,
        }
    }
}

impl BrightnessPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.factor > 0.0) {
            return Err(Error::InvalidConfig(
                "brightness threshold and factor must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Multiplier for an image of brightness `artificial` against `reference`,
    /// or `None` when the gap is within threshold.
    pub fn scale(&self, artificial: f64, reference: f64) -> Option<f64> {
        if artificial - reference > self.threshold {
            // Gap > threshold > 0 implies artificial > 0.
            debug_assert!(artificial > 0.0);
            Some(self.factor * reference / artificial)
        } else {
            None
        }
    }
}

/// Root-mean-square intensity over every pixel and channel, in `[0, 255]`.
pub fn rms_brightness(image: &Image) -> Result<f64> {
    if image.is_empty() {
        return Err(Error::InvalidInput("empty image".into()));
    }
    let data = image.data();
    let sum: f64 = data.iter().map(|&v| (v as f64) * (v as f64)).sum();
    Ok((sum / data.len() as f64).sqrt())
}

/// Rescales every pixel by `factor * reference / B(image)` when the image is
/// brighter than the reference by more than the threshold; otherwise returns
/// it unchanged.
pub fn adjust_brightness(image: &Image, reference_rms: f64, policy: &BrightnessPolicy) -> Result<Image> {
    policy.validate()?;
    if !(0.0..=255.0).contains(&reference_rms) {
        return Err(Error::InvalidInput(format!(
            "reference RMS {reference_rms} outside [0, 255]"
        )));
    }
    let b = rms_brightness(image)?;
    match policy.scale(b, reference_rms) {
        None => Ok(image.clone()),
        Some(s) => {
            let mut out = image.clone();
            for v in out.data_mut() {
                *v = (*v as f64 * s).round().clamp(0.0, 255.0) as u8;
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rms_examples() {
        assert_eq!(rms_brightness(&Image::filled(4, 4, 3, 77)).unwrap(), 77.0);
        assert_eq!(rms_brightness(&Image::filled(3, 2, 1, 255)).unwrap(), 255.0);
        let half = Image::from_fn(4, 2, 1, |x, _, _| if x < 2 { 0 } else { 200 });
        assert!((rms_brightness(&half).unwrap() - 20000f64.sqrt()).abs() < 1e-12);
        assert!(rms_brightness(&Image::zeros(0, 0, 1)).is_err());
    }

    #[test]
    fn triggered_branch_scales() {
        let img = Image::filled(8, 8, 3, 150);
        let out = adjust_brightness(&img, 90.0, &BrightnessPolicy::default()).unwrap();
        assert_eq!(rms_brightness(&out).unwrap(), 135.0);
    }

    #[test]
    fn small_gap_passes_through() {
        let img = Image::filled(8, 8, 3, 100);
        let out = adjust_brightness(&img, 95.0, &BrightnessPolicy::default()).unwrap();
        assert_eq!(out, img);
        let black = Image::zeros(8, 8, 1);
        assert_eq!(
            adjust_brightness(&black, 0.0, &BrightnessPolicy::default()).unwrap(),
            black
        );
    }

    #[test]
    fn invalid_policy_rejected() {
        let p = BrightnessPolicy {
            threshold: 0.0,
            ..Default::default()
        };
        assert!(adjust_brightness(&Image::filled(2, 2, 1, 9), 1.0, &p).is_err());
    }

    #[test]
    fn reference_mode_parses() {
        assert_eq!("paired".parse::<ReferenceMode>().unwrap(), ReferenceMode::PairedReal);
        assert_eq!(
            "corpus_mean".parse::<ReferenceMode>().unwrap(),
            ReferenceMode::CorpusMean
        );
        assert!("median".parse::<ReferenceMode>().is_err());
    }

    proptest! {
        #[test]
        fn dimmer_images_never_change(v in 0u8..=200, extra in 0.0f64..55.0) {
            let img = Image::filled(5, 5, 3, v);
            let reference = (v as f64 + extra).min(255.0);
            prop_assert_eq!(adjust_brightness(&img, reference, &BrightnessPolicy::default()).unwrap(), img);
        }

        #[test]
        fn idempotent_when_gap_closes(v in 120u8..=255, r in 10.0f64..38.0) {
            // factor*r - r = 0.5*r <= 20 keeps the second pass below threshold.
            let p = BrightnessPolicy::default();
            let img = Image::filled(6, 6, 3, v);
            let once = adjust_brightness(&img, r, &p).unwrap();
            let twice = adjust_brightness(&once, r, &p).unwrap();
            prop_assert_eq!(once, twice);
        }
    }
}
