//! Image-quality and mask-similarity metrics.
//!
//! Every metric is a pure function over [`GrayImage`] (or point sets for
//! Hausdorff). Multi-channel images are reduced to BT.601 luminance first.

mod hausdorff;
mod report;
mod ssim;
mod statistics;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;

pub use hausdorff::{directed_hausdorff, hausdorff};
pub use report::{evaluate_pairs, image_quality, write_quality_csv, ImagePair, ImagePairList, QualityRow};
pub use ssim::{ssim, ssim_map_mean, SsimParams};
pub use statistics::{correlation, entropy, mse, psnr, psnr_flagged, PSNR_BENCHMARK_DB};

/// Number of gray levels in an 8-bit image.
pub const GRAY_LEVELS: usize = 256;

/// Single-channel real-valued image with intensities in `[0, 255]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput("gray image must be nonempty".into()));
        }
        if data.len() != width * height {
            return Err(Error::dims(width * height, data.len()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("gray image contains non-finite values".into()));
        }
        Ok(Self { width, height, data })
    }

    pub fn from_image(img: &Image) -> Result<Self> {
        Self::new(img.width(), img.height(), img.luminance())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub(crate) fn check_same_dims(&self, other: &GrayImage) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::dims(
                format!("{}x{}", self.width, self.height),
                format!("{}x{}", other.width, other.height),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum MetricName {
    En,
    Cc,
    Psnr,
    Ssim,
    Hd,
}

impl MetricName {
    pub fn units(self) -> &'static str {
        match self {
            MetricName::En => "bits/pixel",
            MetricName::Cc | MetricName::Ssim => "dimensionless",
            MetricName::Psnr => "dB",
            MetricName::Hd => "pixels",
        }
    }
}

impl fmt::Display for MetricName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricName::En => "EN",
            MetricName::Cc => "CC",
            MetricName::Psnr => "PSNR",
            MetricName::Ssim => "SSIM",
            MetricName::Hd => "HD",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub name: MetricName,
    pub value: f64,
}

impl MetricValue {
    pub fn new(name: MetricName, value: f64) -> Self {
        Self { name, value }
    }

    pub fn units(&self) -> &'static str {
        self.name.units()
    }
}

impl fmt::Display for MetricValue {
    /// Infinite PSNR renders as `inf`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", format_metric(self.value))
    }
}

/// Formats a metric value for reports: `inf` for the identical-image PSNR
/// sentinel, otherwise six decimals.
pub fn format_metric(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.6}")
    }
}
