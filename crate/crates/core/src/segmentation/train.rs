use std::collections::HashMap;
use std::path::{Path, PathBuf};

use candle_core::{Device, Tensor};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::iou::IouCounts;
use super::loss::{class_counts, compute_class_weights, weighted_cross_entropy, ClassWeightScheme};
use super::mask::RadiationMask;
use super::model::SegmentationModel;
use super::spec::{SegTrainConfig, SegmentationModelSpec};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::ingest::{DatasetManifest, ManifestEntry};
use crate::nn::{images_to_tensor, read_checkpoint, write_checkpoint, Adam};

pub const CHECKPOINT_FORMAT: &str = "flarecast-segmenter/1";
pub const CHECKPOINT_FILE: &str = "segmenter.safetensors";
pub const HISTORY_FILE: &str = "seg_history.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Improved,
    Continue,
    Stop,
}

/// Stops once `patience` consecutive evaluations fail to improve on the best loss.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    best_epoch: usize,
    stale: usize,
    evaluations: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience: patience.max(1),
            best: f64::INFINITY,
            best_epoch: 0,
            stale: 0,
            evaluations: 0,
        }
    }

    pub fn update(&mut self, loss: f64) -> StopDecision {
        self.evaluations += 1;
        if loss < self.best {
            self.best = loss;
            self.best_epoch = self.evaluations;
            self.stale = 0;
            StopDecision::Improved
        } else {
            self.stale += 1;
            if self.stale >= self.patience {
                StopDecision::Stop
            } else {
                StopDecision::Continue
            }
        }
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations
    }
}

/// Images `(N, 3, H, W)` and their labels in NHW order.
#[derive(Debug, Clone)]
pub struct SegBatch {
    pub images: Tensor,
    pub labels: Vec<u8>,
}

impl SegBatch {
    pub fn new(samples: &[(&Image, &RadiationMask)], device: &Device) -> Result<Self> {
        let imgs: Vec<&Image> = samples.iter().map(|s| s.0).collect();
        let mut labels = Vec::new();
        for (img, mask) in samples {
            if img.dims() != (mask.width(), mask.height()) {
                return Err(Error::dims(
                    format!("{}x{} mask", img.width(), img.height()),
                    format!("{}x{}", mask.width(), mask.height()),
                ));
            }
            labels.extend_from_slice(mask.labels());
        }
        Ok(Self {
            images: images_to_tensor(&imgs, device)?,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.images.dims().first().copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegEvaluation {
    pub loss: f64,
    pub mean_iou: f64,
}

pub struct SegTrainer {
    model: SegmentationModel,
    opt: Adam,
    weights: ClassWeightScheme,
    config: SegTrainConfig,
    steps: usize,
}

impl SegTrainer {
    pub fn new(
        spec: &SegmentationModelSpec,
        config: &SegTrainConfig,
        weights: ClassWeightScheme,
        device: &Device,
    ) -> Result<Self> {
        config.validate()?;
        if weights.weights.len() != spec.num_classes {
            return Err(Error::dims(
                format!("{} class weights", spec.num_classes),
                weights.weights.len(),
            ));
        }
        let model = SegmentationModel::new(spec, config.seed, device)?;
        let opt = Adam::new(
            model.params().trainable_vars(),
            config.lr,
            config.betas,
            config.weight_decay,
        )?;
        Ok(Self {
            model,
            opt,
            weights,
            config: config.clone(),
            steps: 0,
        })
    }

    pub fn model(&self) -> &SegmentationModel {
        &self.model
    }

    pub fn class_weights(&self) -> &ClassWeightScheme {
        &self.weights
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn train_step(&mut self, batch: &SegBatch) -> Result<f64> {
        let step = self.steps + 1;
        let out = self.model.forward(&batch.images, true)?;
        let loss = weighted_cross_entropy(&out.scores, &batch.labels, &self.weights.weights)?;
        let v = loss.to_dtype(candle_core::DType::F64)?.to_scalar::<f64>()?;
        if !v.is_finite() {
            return Err(Error::NonFiniteLoss {
                step,
                detail: format!("weighted cross-entropy is {v}"),
            });
        }
        self.opt.step(&loss.backward()?)?;
        self.steps = step;
        Ok(v)
    }

    /// Sample-weighted loss and dataset-level mean IoU.
    pub fn evaluate(&self, batches: &[SegBatch]) -> Result<SegEvaluation> {
        let k = self.model.spec().num_classes;
        let mut iou = IouCounts::new(k);
        let mut total = 0.0;
        let mut count = 0usize;
        for b in batches {
            let out = self.model.forward(&b.images, false)?;
            let loss = weighted_cross_entropy(&out.scores, &b.labels, &self.weights.weights)?;
            total += loss.to_dtype(candle_core::DType::F64)?.to_scalar::<f64>()? * b.len() as f64;
            count += b.len();
            iou.add(&argmax_labels(&out.scores)?, &b.labels)?;
        }
        if count == 0 {
            return Err(Error::InvalidInput("no validation samples".into()));
        }
        Ok(SegEvaluation {
            loss: total / count as f64,
            mean_iou: iou.mean(),
        })
    }

    pub fn save(&self, path: &Path, metadata: HashMap<String, String>, class_names: &[String]) -> Result<()> {
        let mut meta = metadata;
        meta.insert("format".into(), CHECKPOINT_FORMAT.into());
        meta.insert("model_spec".into(), serde_json::to_string(self.model.spec())?);
        meta.insert("train_config".into(), serde_json::to_string(&self.config)?);
        meta.insert("class_weights".into(), serde_json::to_string(&self.weights)?);
        meta.insert("class_names".into(), serde_json::to_string(class_names)?);
        write_checkpoint(path, &[("model", self.model.params())], meta)
    }
}

/// Per-pixel argmax over the class axis of `(N, K, H, W)`, in NHW order.
pub fn argmax_labels(scores: &Tensor) -> Result<Vec<u8>> {
    let idx = scores.argmax(1)?.flatten_all()?.to_vec1::<u32>()?;
    Ok(idx.into_iter().map(|v| v as u8).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegEpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_miou: f64,
}

#[derive(Debug, Clone)]
pub struct SegmentationRun {
    pub checkpoint: PathBuf,
    pub history_csv: PathBuf,
    pub history: Vec<SegEpochRecord>,
    pub best_epoch: usize,
    pub class_weights: ClassWeightScheme,
    pub steps: usize,
}

fn load_sample(entry: &ManifestEntry) -> Result<(Image, RadiationMask)> {
    let ir = entry
        .ir
        .as_ref()
        .ok_or_else(|| Error::InvalidInput(format!("entry `{}` has no IR image", entry.id)))?;
    let mask = entry
        .mask
        .as_ref()
        .ok_or_else(|| Error::InvalidInput(format!("entry `{}` has no mask", entry.id)))?;
    Ok((Image::load(ir)?, RadiationMask::load(mask)?))
}

fn load_batches(entries: &[&ManifestEntry], batch_size: usize, device: &Device) -> Result<Vec<SegBatch>> {
    entries
        .chunks(batch_size)
        .map(|chunk| {
            let samples = chunk.iter().map(|e| load_sample(e)).collect::<Result<Vec<_>>>()?;
            let refs: Vec<(&Image, &RadiationMask)> = samples.iter().map(|(i, m)| (i, m)).collect();
            SegBatch::new(&refs, device)
        })
        .collect()
}

/// Trains on IR images and masks from `train`, evaluating on `val` after
/// every epoch. The lowest-validation-loss checkpoint is kept; training ends
/// at `max_epochs`, `max_steps`, or when early stopping fires.
pub fn train_segmenter(
    train: &DatasetManifest,
    val: &DatasetManifest,
    spec: &SegmentationModelSpec,
    config: &SegTrainConfig,
    out_dir: &Path,
    device: &Device,
) -> Result<SegmentationRun> {
    config.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::InvalidInput(
            "training and validation manifests must be nonempty".into(),
        ));
    }
    let masks = train
        .entries
        .iter()
        .map(|e| load_sample(e).map(|s| s.1))
        .collect::<Result<Vec<_>>>()?;
    let class_names = masks[0].class_names().to_vec();
    if class_names.len() != spec.num_classes {
        return Err(Error::InvalidConfig(format!(
            "masks carry {} classes, model expects {}",
            class_names.len(),
            spec.num_classes
        )));
    }
    let counts = class_counts(masks.iter().map(|m| m.labels()), spec.num_classes);
    drop(masks);
    let weights = compute_class_weights(&counts, config.class_weight_c)?;
    let mut trainer = SegTrainer::new(spec, config, weights.clone(), device)?;

    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let checkpoint = out_dir.join(CHECKPOINT_FILE);
    let history_csv = out_dir.join(HISTORY_FILE);
    let val_entries: Vec<&ManifestEntry> = val.entries.iter().collect();
    let val_batches = load_batches(&val_entries, config.batch_size, device)?;
    let manifest_hash = train.content_hash();

    let mut stopper = EarlyStopping::new(config.early_stopping_patience);
    let mut history = Vec::new();
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 1..=config.max_epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ (epoch as u64).wrapping_mul(0xD6E8_FEB8_6659_FD93));
        order.shuffle(&mut rng);
        let (mut loss_sum, mut n) = (0.0, 0usize);
        let mut budget_hit = false;
        for chunk in order.chunks(config.batch_size) {
            if config.max_steps.is_some_and(|m| trainer.steps() >= m) {
                budget_hit = true;
                break;
            }
            let entries: Vec<&ManifestEntry> = chunk.iter().map(|&i| &train.entries[i]).collect();
            let batch = load_batches(&entries, config.batch_size, device)?.remove(0);
            loss_sum += trainer.train_step(&batch)?;
            n += 1;
        }
        if n == 0 {
            break;
        }
        let eval = trainer.evaluate(&val_batches)?;
        let record = SegEpochRecord {
            epoch,
            train_loss: loss_sum / n as f64,
            val_loss: eval.loss,
            val_miou: eval.mean_iou,
        };
        log::info!(
            "segmentation epoch {epoch}: train {:.4} val {:.4} mIoU {:.4}",
            record.train_loss,
            eval.loss,
            eval.mean_iou
        );
        history.push(record);
        write_history(&history_csv, &history)?;
        let decision = stopper.update(eval.loss);
        if decision == StopDecision::Improved {
            let mut meta = HashMap::new();
            meta.insert("manifest_hash".into(), manifest_hash.clone());
            meta.insert("epoch".into(), epoch.to_string());
            meta.insert("val_loss".into(), format!("{}", eval.loss));
            meta.insert("val_miou".into(), format!("{}", eval.mean_iou));
            trainer.save(&checkpoint, meta, &class_names)?;
        }
        if decision == StopDecision::Stop || budget_hit {
            break;
        }
    }
    if history.is_empty() {
        return Err(Error::InvalidConfig("max_steps allowed no training step".into()));
    }
    let best_epoch = history[stopper.best_epoch() - 1].epoch;
    Ok(SegmentationRun {
        checkpoint,
        history_csv,
        history,
        best_epoch,
        class_weights: weights,
        steps: trainer.steps(),
    })
}

pub fn write_history(path: &Path, history: &[SegEpochRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in history {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Inference-only segmenter restored from a checkpoint.
pub struct Segmenter {
    model: SegmentationModel,
    class_names: Vec<String>,
    device: Device,
}

impl Segmenter {
    pub fn load(path: &Path, device: &Device) -> Result<Self> {
        let (tensors, metadata) = read_checkpoint(path, device)?;
        let bad = |reason: &str| Error::BadCheckpoint {
            path: path.to_path_buf(),
            reason: reason.to_string(),
        };
        if metadata.get("format").map(String::as_str) != Some(CHECKPOINT_FORMAT) {
            return Err(bad("not a segmenter checkpoint"));
        }
        let spec: SegmentationModelSpec =
            serde_json::from_str(metadata.get("model_spec").ok_or_else(|| bad("missing model_spec"))?)?;
        let class_names: Vec<String> =
            serde_json::from_str(metadata.get("class_names").ok_or_else(|| bad("missing class_names"))?)?;
        let model = SegmentationModel::new(&spec, 0, device)?;
        model.params().load_tensors(&tensors, "model")?;
        Ok(Self {
            model,
            class_names,
            device: device.clone(),
        })
    }

    pub fn spec(&self) -> &SegmentationModelSpec {
        self.model.spec()
    }

    /// Per-pixel argmax of the class scores.
    pub fn segment(&self, image: &Image) -> Result<RadiationMask> {
        let x = images_to_tensor(&[image], &self.device)?;
        let out = self.model.forward(&x, false)?;
        RadiationMask::new(
            image.width(),
            image.height(),
            argmax_labels(&out.scores)?,
            self.class_names.clone(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::super::spec::Variant;
    use super::*;

    #[test]
    fn patience_one_stops_on_second_worse_eval() {
        let mut s = EarlyStopping::new(1);
        assert_eq!(s.update(1.0), StopDecision::Improved);
        assert_eq!(s.update(2.0), StopDecision::Stop);
        assert_eq!(s.evaluations(), 2);
    }

    #[test]
    fn patience_counts_consecutive_stale_evals() {
        let mut s = EarlyStopping::new(2);
        assert_eq!(s.update(3.0), StopDecision::Improved);
        assert_eq!(s.update(4.0), StopDecision::Continue);
        assert_eq!(s.update(2.0), StopDecision::Improved);
        assert_eq!(s.update(2.0), StopDecision::Continue);
        assert_eq!(s.update(5.0), StopDecision::Stop);
        assert_eq!(s.best_epoch(), 3);
    }

    #[test]
    fn argmax_is_invariant_to_monotone_maps() {
        let scores = Tensor::randn(0f32, 1.0, (2, 4, 3, 5), &Device::Cpu).unwrap();
        let a = argmax_labels(&scores).unwrap();
        let b = argmax_labels(&((scores.exp().unwrap() * 3.0).unwrap() + 7.0).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn step_and_checkpoint_round_trip() {
        let spec = SegmentationModelSpec::new(Variant::AttentionUnet, &[4, 8], 2);
        let w = compute_class_weights(&[0.7, 0.3], 1.02).unwrap();
        let mut t = SegTrainer::new(&spec, &SegTrainConfig::default(), w, &Device::Cpu).unwrap();
        let img = Image::from_fn(8, 8, 3, |x, _, _| if x < 4 { 20 } else { 230 });
        let mask = RadiationMask::from_fn(8, 8, 2, |x, _| u8::from(x >= 4)).unwrap();
        let batch = SegBatch::new(&[(&img, &mask)], &Device::Cpu).unwrap();
        assert!(t.train_step(&batch).unwrap().is_finite());
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.safetensors");
        t.save(&p, HashMap::new(), mask.class_names()).unwrap();
        let s = Segmenter::load(&p, &Device::Cpu).unwrap();
        let predicted = s.segment(&img).unwrap();
        let out = t.model().forward(&batch.images, false).unwrap();
        assert_eq!(predicted.labels(), argmax_labels(&out.scores).unwrap().as_slice());
        assert!(predicted.labels().iter().all(|&l| l < 2));
    }
}
