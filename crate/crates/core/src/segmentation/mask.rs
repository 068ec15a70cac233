use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;

/// Per-pixel class ids, row-major. Class 0 is background.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RadiationMask {
    width: usize,
    height: usize,
    labels: Vec<u8>,
    class_names: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    width: usize,
    height: usize,
    class_names: Vec<String>,
}

/// `background, zone1, zone2, ...`.
pub fn default_class_names(num_classes: usize) -> Vec<String> {
    (0..num_classes)
        .map(|k| {
            if k == 0 {
                "background".to_string()
            } else {
                format!("zone{k}")
            }
        })
        .collect()
}

impl RadiationMask {
    pub fn new(width: usize, height: usize, labels: Vec<u8>, class_names: Vec<String>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::dims(width * height, labels.len()));
        }
        if class_names.len() < 2 || class_names.len() > 256 {
            return Err(Error::InvalidInput(format!(
                "{} class names; need 2..=256",
                class_names.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l as usize >= class_names.len()) {
            return Err(Error::InvalidInput(format!(
                "label {bad} out of range for {} classes",
                class_names.len()
            )));
        }
        Ok(Self {
            width,
            height,
            labels,
            class_names,
        })
    }

    pub fn from_fn(width: usize, height: usize, num_classes: usize, f: impl Fn(usize, usize) -> u8) -> Result<Self> {
        let mut labels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                labels.push(f(x, y));
            }
        }
        Self::new(width, height, labels, default_class_names(num_classes))
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.labels[y * self.width + x]
    }

    /// True where any non-background class is present.
    pub fn foreground(&self) -> Vec<bool> {
        self.labels.iter().map(|&l| l != 0).collect()
    }

    /// Every non-background pixel as `(x, y)`.
    pub fn foreground_points(&self) -> Vec<crate::point::Point> {
        let mut out = Vec::new();
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) != 0 {
                    out.push(crate::point::Point::new(x as i64, y as i64));
                }
            }
        }
        out
    }

    pub fn from_image(image: &Image, class_names: Vec<String>) -> Result<Self> {
        if image.channels() != 1 {
            return Err(Error::InvalidInput(format!(
                "mask images are single-channel, got {} channels",
                image.channels()
            )));
        }
        Self::new(image.width(), image.height(), image.data().to_vec(), class_names)
    }

    pub fn to_image(&self) -> Image {
        Image::new(self.width, self.height, 1, self.labels.clone()).expect("mask buffer matches its dimensions")
    }

    pub fn sidecar_path(png: &Path) -> PathBuf {
        png.with_extension("json")
    }

    /// Single-channel PNG of class ids plus a JSON sidecar with class names.
    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_image().save(path)?;
        let sidecar = Sidecar {
            width: self.width,
            height: self.height,
            class_names: self.class_names.clone(),
        };
        let side = Self::sidecar_path(path);
        std::fs::write(&side, serde_json::to_string_pretty(&sidecar)? + "\n").map_err(|e| Error::io(&side, e))
    }

    /// Loads a mask PNG; without a sidecar, class names default to the
    /// smallest set covering the largest label (at least 2).
    pub fn load(path: &Path) -> Result<Self> {
        let img = Image::load(path)?;
        let side = Self::sidecar_path(path);
        let names = if side.exists() {
            let text = std::fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
            serde_json::from_str::<Sidecar>(&text)?.class_names
        } else {
            let max = img.data().iter().copied().max().unwrap_or(0) as usize;
            default_class_names((max + 1).max(2))
        };
        Self::from_image(&img, names)
    }
}
