use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Unet,
    AttentionUnet,
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unet" => Ok(Self::Unet),
            "attention" | "attention_unet" => Ok(Self::AttentionUnet),
            other => Err(Error::InvalidConfig(format!("unknown segmentation variant `{other}`"))),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Unet => "unet",
            Self::AttentionUnet => "attention_unet",
        })
    }
}

/// Encoder level `i` runs two 3x3 conv-BN-ReLU blocks with `filters[i]`
/// channels; levels are separated by 2x2 max pooling, so inputs must be
/// divisible by `2^(depth-1)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentationModelSpec {
    pub variant: Variant,
    pub filters: Vec<usize>,
    pub in_channels: usize,
    pub num_classes: usize,
}

impl Default for SegmentationModelSpec {
    fn default() -> Self {
        Self {
            variant: Variant::Unet,
            filters: vec![64, 128, 256, 512, 1024],
            in_channels: 3,
            num_classes: 4,
        }
    }
}

impl SegmentationModelSpec {
    pub fn new(variant: Variant, filters: &[usize], num_classes: usize) -> Self {
        Self {
            variant,
            filters: filters.to_vec(),
            in_channels: 3,
            num_classes,
        }
    }

    pub fn depth(&self) -> usize {
        self.filters.len()
    }

    /// Side lengths must be multiples of this.
    pub fn stride(&self) -> usize {
        1 << self.depth().saturating_sub(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.filters.len() < 2 || self.filters.contains(&0) {
            return Err(Error::InvalidConfig(
                "segmenter needs at least 2 positive filter counts".into(),
            ));
        }
        if self.num_classes < 2 {
            return Err(Error::InvalidConfig("num_classes must be >= 2".into()));
        }
        if self.in_channels == 0 {
            return Err(Error::InvalidConfig("in_channels must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegTrainConfig {
    pub lr: f64,
    /// Coupled L2 coefficient added to every gradient.
    pub weight_decay: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub early_stopping_patience: usize,
    /// ENet class-weight constant.
    pub class_weight_c: f64,
    pub betas: (f64, f64),
    pub seed: u64,
    pub max_steps: Option<usize>,
}

impl Default for SegTrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            weight_decay: 1e-5,
            batch_size: 4,
            max_epochs: 5000,
            early_stopping_patience: 50,
            class_weight_c: 1.02,
            betas: (0.9, 0.999),
            seed: 0,
            max_steps: None,
        }
    }
}

impl SegTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) || !(self.weight_decay > 0.0) {
            return Err(Error::InvalidConfig("lr and weight_decay must be positive".into()));
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::InvalidConfig("batch_size and max_epochs must be >= 1".into()));
        }
        if self.early_stopping_patience == 0 {
            return Err(Error::InvalidConfig("early_stopping_patience must be >= 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        SegmentationModelSpec::default().validate().unwrap();
        let c = SegTrainConfig::default();
        c.validate().unwrap();
        assert_eq!(
            (c.lr, c.batch_size, c.max_epochs, c.early_stopping_patience),
            (1e-4, 4, 5000, 50)
        );
    }

    #[test]
    fn invalid_rejected() {
        assert!(SegmentationModelSpec::new(Variant::Unet, &[8], 4).validate().is_err());
        assert!(SegmentationModelSpec::new(Variant::Unet, &[8, 16], 1)
            .validate()
            .is_err());
        let c = SegTrainConfig {
            early_stopping_patience: 0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn variant_parses() {
        assert_eq!("attention".parse::<Variant>().unwrap(), Variant::AttentionUnet);
        assert_eq!(Variant::Unet.to_string(), "unet");
    }
}
