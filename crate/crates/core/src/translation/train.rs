use std::collections::HashMap;
use std::path::{Path, PathBuf};

use candle_core::{Device, Tensor};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::brightness::rms_brightness;
use super::discriminator::Discriminator;
use super::generator::Generator;
use super::loss::{discriminator_loss, generator_loss, l1_loss};
use super::spec::{DiscriminatorSpec, GeneratorSpec, TranslationTrainConfig};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::ingest::{DatasetManifest, ManifestEntry};
use crate::nn::{images_to_tensor, read_checkpoint, tensor_to_image, write_checkpoint, Adam};

pub const CHECKPOINT_FORMAT: &str = "flarecast-translator/1";
pub const CHECKPOINT_FILE: &str = "translator.safetensors";
pub const HISTORY_FILE: &str = "loss_history.csv";

/// One conditioning/target batch, `(N, 3, H, W)` each, in `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct PairBatch {
    pub visible: Tensor,
    pub target: Tensor,
}

impl PairBatch {
    pub fn from_images(pairs: &[(&Image, &Image)], device: &Device) -> Result<Self> {
        let vis: Vec<&Image> = pairs.iter().map(|p| p.0).collect();
        let ir: Vec<&Image> = pairs.iter().map(|p| p.1).collect();
        Ok(Self {
            visible: images_to_tensor(&vis, device)?,
            target: images_to_tensor(&ir, device)?,
        })
    }

    pub fn len(&self) -> usize {
        self.visible.dims().first().copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLosses {
    pub generator: f64,
    pub discriminator: f64,
}

/// Alternating conditional-GAN optimization: one discriminator step, then
/// one generator step, per batch.
pub struct Pix2PixTrainer {
    generator: Generator,
    discriminator: Discriminator,
    opt_g: Adam,
    opt_d: Adam,
    config: TranslationTrainConfig,
    steps: usize,
}

impl Pix2PixTrainer {
    pub fn new(
        generator_spec: &GeneratorSpec,
        discriminator_spec: &DiscriminatorSpec,
        config: &TranslationTrainConfig,
        device: &Device,
    ) -> Result<Self> {
        config.validate()?;
        if discriminator_spec.in_channels != generator_spec.in_channels + generator_spec.out_channels() {
            return Err(Error::InvalidConfig(format!(
                "discriminator expects {} channels, generator pair has {}",
                discriminator_spec.in_channels,
                generator_spec.in_channels + generator_spec.out_channels()
            )));
        }
        let generator = Generator::new(generator_spec, config.seed, device)?;
        let discriminator = Discriminator::new(discriminator_spec, config.seed.wrapping_add(0x5EED), device)?;
        let opt_g = Adam::new(
            generator.params().trainable_vars(),
            config.lr_generator,
            config.betas,
            0.0,
        )?;
        let opt_d = Adam::new(
            discriminator.params().trainable_vars(),
            config.lr_discriminator,
            config.betas,
            0.0,
        )?;
        Ok(Self {
            generator,
            discriminator,
            opt_g,
            opt_d,
            config: config.clone(),
            steps: 0,
        })
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn discriminator(&self) -> &Discriminator {
        &self.discriminator
    }

    pub fn config(&self) -> &TranslationTrainConfig {
        &self.config
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn train_step(&mut self, batch: &PairBatch) -> Result<StepLosses> {
        let step = self.steps + 1;
        let fake = self.generator.forward(&batch.visible, true)?;

        let real_scores = self.discriminator.forward(&batch.visible, &batch.target, true)?;
        let fake_scores = self.discriminator.forward(&batch.visible, &fake.detach(), true)?;
        let d_loss = discriminator_loss(&real_scores, &fake_scores)?;
        let d_value = finite(&d_loss, step, "discriminator")?;
        self.opt_d.step(&d_loss.backward()?)?;

        let fake_scores = self.discriminator.forward(&batch.visible, &fake, false)?;
        let g_loss = generator_loss(&fake_scores, &fake, &batch.target, self.config.l1_weight)?;
        let g_value = finite(&g_loss, step, "generator")?;
        self.opt_g.step(&g_loss.backward()?)?;

        self.steps = step;
        Ok(StepLosses {
            generator: g_value,
            discriminator: d_value,
        })
    }

    /// Sample-weighted mean L1 between generated and target, on the `[-1, 1]` scale.
    pub fn validation_l1(&self, batches: &[PairBatch]) -> Result<f64> {
        mean_l1(&self.generator, batches)
    }

    pub fn save(&self, path: &Path, metadata: HashMap<String, String>) -> Result<()> {
        let mut meta = metadata;
        meta.insert("format".into(), CHECKPOINT_FORMAT.into());
        meta.insert("generator_spec".into(), serde_json::to_string(self.generator.spec())?);
        meta.insert(
            "discriminator_spec".into(),
            serde_json::to_string(self.discriminator.spec())?,
        );
        meta.insert("train_config".into(), serde_json::to_string(&self.config)?);
        write_checkpoint(
            path,
            &[
                ("generator", self.generator.params()),
                ("discriminator", self.discriminator.params()),
            ],
            meta,
        )
    }
}

fn finite(loss: &Tensor, step: usize, which: &str) -> Result<f64> {
    let v = loss.to_dtype(candle_core::DType::F64)?.to_scalar::<f64>()?;
    if !v.is_finite() {
        return Err(Error::NonFiniteLoss {
            step,
            detail: format!("{which} loss is {v}"),
        });
    }
    Ok(v)
}

fn mean_l1(generator: &Generator, batches: &[PairBatch]) -> Result<f64> {
    let mut total = 0.0;
    let mut count = 0usize;
    for b in batches {
        let out = generator.forward(&b.visible, false)?;
        let l1 = l1_loss(&out, &b.target)?
            .to_dtype(candle_core::DType::F64)?
            .to_scalar::<f64>()?;
        total += l1 * b.len() as f64;
        count += b.len();
    }
    if count == 0 {
        return Err(Error::InvalidInput("no validation samples".into()));
    }
    Ok(total / count as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub gen_loss: f64,
    pub disc_loss: f64,
    pub val_l1: f64,
}

#[derive(Debug, Clone)]
pub struct TranslationRun {
    pub checkpoint: PathBuf,
    pub history_csv: PathBuf,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_l1: f64,
    pub steps: usize,
}

fn load_entry_pair(entry: &ManifestEntry, spec: &GeneratorSpec) -> Result<(Image, Image)> {
    let ir_path = entry
        .ir
        .as_ref()
        .ok_or_else(|| Error::InvalidInput(format!("entry `{}` has no IR image", entry.id)))?;
    let vis = Image::load(&entry.visible)?;
    let ir = Image::load(ir_path)?;
    for img in [&vis, &ir] {
        if img.dims() != (spec.width, spec.height) {
            return Err(Error::dims(
                format!("{}x{} (entry {})", spec.width, spec.height, entry.id),
                format!("{}x{}", img.width(), img.height()),
            ));
        }
    }
    Ok((vis, ir))
}

fn load_batch(entries: &[&ManifestEntry], spec: &GeneratorSpec, device: &Device) -> Result<(PairBatch, Vec<Image>)> {
    let pairs = entries
        .iter()
        .map(|e| load_entry_pair(e, spec))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<(&Image, &Image)> = pairs.iter().map(|(v, i)| (v, i)).collect();
    let batch = PairBatch::from_images(&refs, device)?;
    Ok((batch, pairs.into_iter().map(|p| p.1).collect()))
}

/// Trains on `train`, keeps the checkpoint with the lowest validation L1 and
/// writes the per-epoch loss history. Images must already be on the canvas
/// the generator spec describes.
pub fn train_translator(
    train: &DatasetManifest,
    val: &DatasetManifest,
    generator_spec: &GeneratorSpec,
    discriminator_spec: &DiscriminatorSpec,
    config: &TranslationTrainConfig,
    out_dir: &Path,
    device: &Device,
) -> Result<TranslationRun> {
    if train.is_empty() {
        return Err(Error::InvalidInput("training manifest is empty".into()));
    }
    if val.is_empty() {
        return Err(Error::InvalidInput("validation manifest is empty".into()));
    }
    let mut trainer = Pix2PixTrainer::new(generator_spec, discriminator_spec, config, device)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let checkpoint = out_dir.join(CHECKPOINT_FILE);
    let history_csv = out_dir.join(HISTORY_FILE);

    let val_entries: Vec<&ManifestEntry> = val.entries.iter().collect();
    let val_batches = val_entries
        .chunks(config.batch_size)
        .map(|c| load_batch(c, generator_spec, device).map(|b| b.0))
        .collect::<Result<Vec<_>>>()?;

    let manifest_hash = train.content_hash();
    let mut history = Vec::new();
    let mut best = (0usize, f64::INFINITY);
    let mut rms_sum = 0.0;
    let mut rms_n = 0usize;
    let mut order: Vec<usize> = (0..train.len()).collect();
    'epochs: for epoch in 1..=config.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ (epoch as u64).wrapping_mul(0xA24B_AED4_963E_E407));
        order.shuffle(&mut rng);
        let (mut g_sum, mut d_sum, mut n_steps) = (0.0, 0.0, 0usize);
        let mut stop = false;
        for chunk in order.chunks(config.batch_size) {
            if config.max_steps.is_some_and(|m| trainer.steps() >= m) {
                stop = true;
                break;
            }
            let entries: Vec<&ManifestEntry> = chunk.iter().map(|&i| &train.entries[i]).collect();
            let (batch, irs) = load_batch(&entries, generator_spec, device)?;
            if epoch == 1 {
                for ir in &irs {
                    rms_sum += rms_brightness(ir)?;
                    rms_n += 1;
                }
            }
            let losses = trainer.train_step(&batch)?;
            g_sum += losses.generator;
            d_sum += losses.discriminator;
            n_steps += 1;
        }
        if n_steps == 0 {
            break 'epochs;
        }
        let val_l1 = trainer.validation_l1(&val_batches)?;
        let record = EpochRecord {
            epoch,
            gen_loss: g_sum / n_steps as f64,
            disc_loss: d_sum / n_steps as f64,
            val_l1,
        };
        log::info!(
            "translation epoch {epoch}: gen {:.4} disc {:.4} val_l1 {:.4}",
            record.gen_loss,
            record.disc_loss,
            val_l1
        );
        history.push(record);
        write_history(&history_csv, &history)?;
        if val_l1 < best.1 {
            best = (epoch, val_l1);
            let mut meta = HashMap::new();
            meta.insert("manifest_hash".into(), manifest_hash.clone());
            meta.insert("corpus_rms".into(), format!("{}", rms_sum / rms_n.max(1) as f64));
            meta.insert("epoch".into(), epoch.to_string());
            meta.insert("val_l1".into(), format!("{val_l1}"));
            trainer.save(&checkpoint, meta)?;
        }
        if stop {
            break;
        }
    }
    if history.is_empty() {
        return Err(Error::InvalidConfig("max_steps allowed no training step".into()));
    }
    Ok(TranslationRun {
        checkpoint,
        history_csv,
        history,
        best_epoch: best.0,
        best_val_l1: best.1,
        steps: trainer.steps(),
    })
}

pub fn write_history(path: &Path, history: &[EpochRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in history {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Inference-only generator restored from a checkpoint.
pub struct Translator {
    generator: Generator,
    corpus_rms: Option<f64>,
    metadata: HashMap<String, String>,
    device: Device,
}

impl Translator {
    pub fn load(path: &Path, device: &Device) -> Result<Self> {
        let (tensors, metadata) = read_checkpoint(path, device)?;
        let bad = |reason: String| Error::BadCheckpoint {
            path: path.to_path_buf(),
            reason,
        };
        if metadata.get("format").map(String::as_str) != Some(CHECKPOINT_FORMAT) {
            return Err(bad("not a translator checkpoint".into()));
        }
        let spec_json = metadata
            .get("generator_spec")
            .ok_or_else(|| bad("missing generator_spec".into()))?;
        let spec: GeneratorSpec = serde_json::from_str(spec_json)?;
        let generator = Generator::new(&spec, 0, device)?;
        generator.params().load_tensors(&tensors, "generator")?;
        let corpus_rms = metadata.get("corpus_rms").and_then(|s| s.parse().ok());
        Ok(Self {
            generator,
            corpus_rms,
            metadata,
            device: device.clone(),
        })
    }

    pub fn spec(&self) -> &GeneratorSpec {
        self.generator.spec()
    }

    /// Mean real-IR brightness of the training corpus.
    pub fn corpus_rms(&self) -> Option<f64> {
        self.corpus_rms
    }

    pub fn metadata(&self) -> &HashMap<String, String> {
        &self.metadata
    }

    /// Visible canvas image to artificial IR of the same size.
    pub fn translate(&self, visible: &Image) -> Result<Image> {
        let spec = self.generator.spec();
        if visible.dims() != (spec.width, spec.height) {
            return Err(Error::dims(
                format!("{}x{}", spec.width, spec.height),
                format!("{}x{}", visible.width(), visible.height()),
            ));
        }
        let x = images_to_tensor(&[visible], &self.device)?;
        let y = self.generator.forward(&x, false)?;
        tensor_to_image(&y.get(0)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_batch(seed: u64) -> PairBatch {
        let vis = Image::from_fn(16, 16, 3, |x, y, c| {
            ((x * 13 + y * 7 + c * 50 + seed as usize * 3) % 256) as u8
        });
        let ir = Image::from_fn(16, 16, 3, |x, y, _| if (x + y) % 5 == 0 { 220 } else { 30 });
        PairBatch::from_images(&[(&vis, &ir), (&ir, &vis)], &Device::Cpu).unwrap()
    }

    fn small_trainer(seed: u64) -> Pix2PixTrainer {
        let g = GeneratorSpec::mirrored(16, 16, &[4, 8, 8]);
        let d = DiscriminatorSpec::with_filters(&[4, 8]);
        let cfg = TranslationTrainConfig {
            lr_generator: 1e-3,
            lr_discriminator: 1e-2,
            seed,
            ..Default::default()
        };
        Pix2PixTrainer::new(&g, &d, &cfg, &Device::Cpu).unwrap()
    }

    #[test]
    fn identical_seeds_identical_losses() {
        let b = toy_batch(0);
        let la = small_trainer(4).train_step(&b).unwrap();
        let lb = small_trainer(4).train_step(&b).unwrap();
        assert_eq!(la, lb);
    }

    #[test]
    fn discriminator_reacts_after_a_step() {
        let mut t = small_trainer(1);
        let b = toy_batch(0);
        t.train_step(&b).unwrap();
        let s1: Vec<f32> = t
            .discriminator()
            .forward(&b.visible, &b.target, false)
            .unwrap()
            .flatten_all()
            .unwrap()
            .to_vec1()
            .unwrap();
        let s2: Vec<f32> = t
            .discriminator()
            .forward(&b.visible, &b.visible, false)
            .unwrap()
            .flatten_all()
            .unwrap()
            .to_vec1()
            .unwrap();
        assert_ne!(s1, s2);
    }

    #[test]
    fn generator_step_descends_with_frozen_discriminator() {
        let t = small_trainer(2);
        let b = toy_batch(1);
        let gen_vars = t.generator().params().trainable_vars();
        let mut opt = Adam::new(gen_vars, 1e-4, (0.5, 0.999), 0.0).unwrap();
        let loss = |t: &Pix2PixTrainer| {
            let fake = t.generator().forward(&b.visible, false).unwrap();
            let scores = t.discriminator().forward(&b.visible, &fake, false).unwrap();
            generator_loss(&scores, &fake, &b.target, 100.0).unwrap()
        };
        let before = loss(&t);
        opt.step(&before.backward().unwrap()).unwrap();
        let after = loss(&t);
        let (b0, a0) = (before.to_scalar::<f32>().unwrap(), after.to_scalar::<f32>().unwrap());
        assert!(a0 <= b0 + 1e-4, "{a0} > {b0}");
    }

    #[test]
    fn checkpoint_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let t = small_trainer(3);
        let path = dir.path().join("t.safetensors");
        let mut meta = HashMap::new();
        meta.insert("corpus_rms".into(), "42.5".into());
        t.save(&path, meta).unwrap();
        let tr = Translator::load(&path, &Device::Cpu).unwrap();
        assert_eq!(tr.corpus_rms(), Some(42.5));
        let img = Image::from_fn(16, 16, 3, |x, y, c| (x * 9 + y * 4 + c) as u8);
        let expected = tensor_to_image(
            &t.generator()
                .forward(&images_to_tensor(&[&img], &Device::Cpu).unwrap(), false)
                .unwrap()
                .get(0)
                .unwrap(),
        )
        .unwrap();
        assert_eq!(tr.translate(&img).unwrap(), expected);
        assert!(tr.translate(&Image::zeros(8, 16, 3)).is_err());
    }

    #[test]
    fn missing_checkpoint_reported() {
        let err = Translator::load(Path::new("/nonexistent/x.safetensors"), &Device::Cpu)
            .err()
            .unwrap();
        assert!(matches!(err, Error::CheckpointNotFound(_)));
    }
}
