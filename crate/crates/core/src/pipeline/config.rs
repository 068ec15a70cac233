use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::synthetic::SyntheticSceneSpec;
use crate::characterization::NozzleReference;
use crate::error::{Error, Result};
use crate::ingest::{AugmentConfig, CanvasSpec, Modality};
use crate::segmentation::{SegTrainConfig, Variant};
use crate::translation::{BrightnessPolicy, DiscriminatorSpec, GeneratorSpec, TranslationTrainConfig};

/// Whole-pipeline configuration, read from TOML with one table per stage.
/// Every key is optional; missing keys take the stage defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Translator input canvas; follows the translator checkpoint when unset.
    pub canvas: Option<CanvasSpec>,
    pub paths: PathsConfig,
    pub ingest: IngestStage,
    pub translation: TranslationStage,
    pub segmentation: SegmentationStage,
    pub characterization: CharacterizationStage,
    pub evaluation: EvaluationStage,
    pub synth: SynthStage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub out_dir: PathBuf,
    /// Frames to process; a dataset manifest.
    pub input_manifest: Option<PathBuf>,
    pub translator_checkpoint: Option<PathBuf>,
    /// One checkpoint per segmentation model to run.
    pub segmenter_checkpoints: Vec<PathBuf>,
}

impl Default for PathsConfig {
    fn default() -> Self {
        Self {
            out_dir: PathBuf::from("out"),
            input_manifest: None,
            translator_checkpoint: None,
            segmenter_checkpoints: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestStage {
    /// Pairing window in seconds; half the low-rate frame period when unset.
    pub tolerance: Option<f64>,
    /// Frame rate of the low-rate stream, used for the default tolerance.
    pub low_rate_fps: f64,
    pub low_rate: Modality,
    pub start_offset: f64,
    pub experiment: Option<String>,
    pub split_ratios: Vec<f64>,
    pub augment: AugmentConfig,
}

impl Default for IngestStage {
    fn default() -> Self {
        Self {
            tolerance: None,
            low_rate_fps: 9.0,
            low_rate: Modality::Ir,
            start_offset: 0.0,
            experiment: None,
            split_ratios: vec![0.8, 0.1, 0.1],
            augment: AugmentConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TranslationStage {
    /// Generator encoder ladder; the decoder mirrors it.
    pub encoder_filters: Vec<usize>,
    pub discriminator: DiscriminatorSpec,
    pub train: TranslationTrainConfig,
    pub brightness: BrightnessPolicy,
}

impl Default for TranslationStage {
    fn default() -> Self {
        Self {
            encoder_filters: vec![64, 128, 256, 512, 512, 512, 512, 512],
            discriminator: DiscriminatorSpec::default(),
            train: TranslationTrainConfig::default(),
            brightness: BrightnessPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentationStage {
    pub variant: Variant,
    pub filters: Vec<usize>,
    pub num_classes: usize,
    pub train: SegTrainConfig,
}

impl Default for SegmentationStage {
    fn default() -> Self {
        Self {
            variant: Variant::Unet,
            filters: vec![64, 128, 256, 512, 1024],
            num_classes: 4,
            train: SegTrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct CharacterizationStage {
    /// Nozzle in unpadded frame coordinates.
    pub nozzle: Option<NozzleReference>,
    pub pixels_per_metric: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationStage {
    /// Ground-truth CSV; without it the report holds only image-quality and
    /// Hausdorff tables.
    pub ground_truth: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthStage {
    pub frames: usize,
    pub scene: SyntheticSceneSpec,
}

impl Default for SynthStage {
    fn default() -> Self {
        Self {
            frames: 200,
            scene: SyntheticSceneSpec::default(),
        }
    }
}

impl PipelineConfig {
    /// Parses TOML; relative paths resolve against `base`.
    pub fn from_toml_str(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: PipelineConfig = toml::from_str(text)?;
        cfg.resolve_paths(base);
        cfg.propagate_seed(cfg.seed);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    /// Sets the global seed and copies it into every stage that draws
    /// random numbers.
    pub fn propagate_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.translation.train.seed = seed;
        self.segmentation.train.seed = seed;
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.paths.out_dir);
        self.paths
            .input_manifest
            .iter_mut()
            .chain(&mut self.paths.translator_checkpoint)
            .chain(&mut self.paths.segmenter_checkpoints)
            .chain(&mut self.evaluation.ground_truth)
            .for_each(fix);
    }

    /// Generator for the configured canvas, or the default 512x1024 one.
    pub fn generator_spec(&self) -> GeneratorSpec {
        let c = self.canvas.unwrap_or(CanvasSpec::translator_default());
        GeneratorSpec::mirrored(c.width, c.height, &self.translation.encoder_filters)
    }

    pub fn validate(&self) -> Result<()> {
        if self.canvas.is_some_and(|c| c.width == 0 || c.height == 0) {
            return Err(Error::InvalidConfig("canvas must be nonempty".into()));
        }
        if let Some(t) = self.ingest.tolerance {
            if !(t >= 0.0) {
                return Err(Error::InvalidConfig("ingest.tolerance must be non-negative".into()));
            }
        }
        if !(self.ingest.low_rate_fps > 0.0) {
            return Err(Error::InvalidConfig("ingest.low_rate_fps must be positive".into()));
        }
        if let Some(ppm) = self.characterization.pixels_per_metric {
            if !(ppm > 0.0 && ppm.is_finite()) {
                return Err(Error::InvalidConfig(
                    "characterization.pixels_per_metric must be positive".into(),
                ));
            }
        }
        self.translation.train.validate()?;
        self.translation.brightness.validate()?;
        self.segmentation.train.validate()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_toml_gives_defaults() {
        let cfg = PipelineConfig::from_toml_str("", Path::new("/base")).unwrap();
        assert_eq!(cfg.canvas, None);
        assert_eq!(cfg.generator_spec().width, 512);
        assert_eq!(cfg.translation.train.lr_generator, 1e-5);
        assert_eq!(cfg.segmentation.train.early_stopping_patience, 50);
        assert_eq!(cfg.paths.out_dir, PathBuf::from("/base/out"));
    }

    #[test]
    fn seed_reaches_every_stage() {
        let cfg = PipelineConfig::from_toml_str("seed = 17\n", Path::new(".")).unwrap();
        assert_eq!(cfg.translation.train.seed, 17);
        assert_eq!(cfg.segmentation.train.seed, 17);
    }

    #[test]
    fn stage_tables_parse() {
        let text = r#"
            seed = 3
            [canvas]
            width = 64
            height = 128
            [paths]
            translator_checkpoint = "ckpt/translator.safetensors"
            segmenter_checkpoints = ["/abs/unet.safetensors"]
            [translation.brightness]
            reference_mode = "corpus_mean"
            [characterization]
            nozzle = { x = 24, y = 90 }
            pixels_per_metric = 10.0
        "#;
        let cfg = PipelineConfig::from_toml_str(text, Path::new("/run")).unwrap();
        assert_eq!(cfg.canvas.map(|c| c.width), Some(64));
        assert_eq!(
            cfg.paths.translator_checkpoint.as_deref(),
            Some(Path::new("/run/ckpt/translator.safetensors"))
        );
        assert_eq!(
            cfg.paths.segmenter_checkpoints[0],
            PathBuf::from("/abs/unet.safetensors")
        );
        assert_eq!(cfg.characterization.nozzle, Some(NozzleReference::new(24, 90)));
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(PipelineConfig::from_toml_str("[translation]\nlearning_rate = 1\n", Path::new(".")).is_err());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = PipelineConfig::default();
        let text = cfg.to_toml_string().unwrap();
        let back = PipelineConfig::from_toml_str(&text, Path::new("")).unwrap();
        assert_eq!(back, cfg);
    }
}
