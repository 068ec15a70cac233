use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// U-Net generator layout. Encoder stage `i` halves the resolution with a
/// 4x4 stride-2 convolution producing `encoder_filters[i]` channels; decoder
/// stage `j` doubles it producing `decoder_filters[j]` channels and, when
/// `skip_connections[j]` is set, concatenates the mirrored encoder output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub width: usize,
    pub height: usize,
    pub in_channels: usize,
    pub encoder_filters: Vec<usize>,
    /// Last entry is the output channel count.
    pub decoder_filters: Vec<usize>,
    /// One flag per inner decoder stage (`encoder_filters.len() - 1`).
    pub skip_connections: Vec<bool>,
}

impl Default for GeneratorSpec {
    /// Canonical 8-stage ladder on the 512x1024 canvas.
    fn default() -> Self {
        Self::mirrored(512, 1024, &[64, 128, 256, 512, 512, 512, 512, 512])
    }
}

impl GeneratorSpec {
    /// Decoder mirrors the encoder, ending in 3 output channels, all skips on.
    pub fn mirrored(width: usize, height: usize, encoder: &[usize]) -> Self {
        let n = encoder.len();
        let mut decoder: Vec<usize> = encoder[..n.saturating_sub(1)].iter().rev().copied().collect();
        decoder.push(3);
        Self {
            width,
            height,
            in_channels: 3,
            encoder_filters: encoder.to_vec(),
            decoder_filters: decoder,
            skip_connections: vec![true; n.saturating_sub(1)],
        }
    }

    pub fn depth(&self) -> usize {
        self.encoder_filters.len()
    }

    pub fn out_channels(&self) -> usize {
        *self.decoder_filters.last().unwrap_or(&0)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.depth();
        if n < 2 {
            return Err(Error::InvalidConfig("generator needs at least 2 encoder stages".into()));
        }
        if self.decoder_filters.len() != n {
            return Err(Error::InvalidConfig(format!(
                "encoder has {n} stages but decoder has {}",
                self.decoder_filters.len()
            )));
        }
        if self.skip_connections.len() != n - 1 {
            return Err(Error::InvalidConfig(format!(
                "expected {} skip flags, got {}",
                n - 1,
                self.skip_connections.len()
            )));
        }
        if self
            .encoder_filters
            .iter()
            .chain(&self.decoder_filters)
            .any(|&f| f == 0)
            || self.in_channels == 0
        {
            return Err(Error::InvalidConfig("filter counts must be positive".into()));
        }
        if self.out_channels() != 3 {
            return Err(Error::InvalidConfig("generator must emit 3 channels".into()));
        }
        let stride = 1usize << n;
        if self.width % stride != 0 || self.height % stride != 0 {
            return Err(Error::InvalidConfig(format!(
                "{}x{} is not divisible by the generator stride {stride}",
                self.width, self.height
            )));
        }
        Ok(())
    }
}

/// Patch discriminator: strided 4x4 convolutions followed by a 3x3
/// stride-1 scoring convolution emitting one logit per patch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscriminatorSpec {
    /// Channels of the conditioning image plus the candidate.
    pub in_channels: usize,
    pub filters: Vec<usize>,
    pub strides: Vec<usize>,
}

impl Default for DiscriminatorSpec {
    fn default() -> Self {
        Self::with_filters(&[64, 128, 256, 512])
    }
}

impl DiscriminatorSpec {
    pub const KERNEL: usize = 4;
    pub const SCORE_KERNEL: usize = 3;

    pub fn with_filters(filters: &[usize]) -> Self {
        Self {
            in_channels: 6,
            filters: filters.to_vec(),
            strides: vec![2; filters.len()],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.filters.is_empty() || self.filters.contains(&0) || self.in_channels == 0 {
            return Err(Error::InvalidConfig(
                "discriminator filters must be a nonempty list of positive counts".into(),
            ));
        }
        if self.strides.len() != self.filters.len() || self.strides.iter().any(|&s| s != 1 && s != 2) {
            return Err(Error::InvalidConfig(
                "one stride (1 or 2) per discriminator stage".into(),
            ));
        }
        Ok(())
    }

    pub fn total_stride(&self) -> usize {
        self.strides.iter().product()
    }

    /// Patch-score grid `(width, height)` for an input of the given size.
    pub fn grid_size(&self, width: usize, height: usize) -> (usize, usize) {
        let mut w = width;
        let mut h = height;
        for &s in &self.strides {
            // k=4, pad=1: out = floor((n + 2 - 4) / s) + 1
            w = (w + 2 - Self::KERNEL) / s + 1;
            h = (h + 2 - Self::KERNEL) / s + 1;
        }
        (w, h)
    }

    /// Input pixels seen by one patch score.
    pub fn receptive_field(&self) -> usize {
        let mut r = 1;
        r += Self::SCORE_KERNEL - 1;
        for &s in self.strides.iter().rev() {
            r = r * s + (Self::KERNEL - s);
        }
        r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TranslationTrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr_generator: f64,
    pub lr_discriminator: f64,
    /// Weight of the L1 reconstruction term.
    pub l1_weight: f64,
    pub betas: (f64, f64),
    pub seed: u64,
    /// Stop after this many optimizer steps regardless of epochs.
    pub max_steps: Option<usize>,
}

impl Default for TranslationTrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 4,
            lr_generator: 1e-5,
            lr_discriminator: 1e-4,
            l1_weight: 100.0,
            betas: (0.5, 0.999),
            seed: 0,
            max_steps: None,
        }
    }
}

impl TranslationTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
        }
        if !(self.lr_generator > 0.0 && self.lr_discriminator > 0.0) {
            return Err(Error::InvalidConfig("learning rates must be positive".into()));
        }
        if !(self.l1_weight >= 0.0) {
            return Err(Error::InvalidConfig("l1_weight must be non-negative".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_hyperparameters_are_defaults() {
        let c = TranslationTrainConfig::default();
        assert_eq!((c.epochs, c.batch_size), (100, 4));
        assert_eq!(c.lr_generator, 1e-5);
        assert_eq!(c.lr_discriminator, 1e-4);
        c.validate().unwrap();
    }

    #[test]
    fn zero_epochs_rejected() {
        let c = TranslationTrainConfig {
            epochs: 0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn default_generator_is_valid() {
        let g = GeneratorSpec::default();
        g.validate().unwrap();
        assert_eq!(g.decoder_filters, [512, 512, 512, 512, 256, 128, 64, 3]);
    }

    #[test]
    fn mismatched_depth_rejected() {
        let mut g = GeneratorSpec::default();
        g.decoder_filters.pop();
        assert!(g.validate().is_err());
    }

    #[test]
    fn discriminator_grid_and_field() {
        let d = DiscriminatorSpec::default();
        assert_eq!(d.grid_size(512, 1024), (32, 64));
        // 4 stride-2 k4 stages plus the k3 scorer
        assert_eq!(d.receptive_field(), 78);
        let classic = DiscriminatorSpec {
            strides: vec![2, 2, 2, 1],
            ..DiscriminatorSpec::default()
        };
        assert_eq!(classic.receptive_field(), 62);
    }
}
