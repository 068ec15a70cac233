use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use candle_core::Device;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::PipelineConfig;
use crate::characterization::{characterize, write_geometry_csv, CalibrationInfo, GeometryRow, NozzleReference};
use crate::error::{Error, Result};
use crate::evaluation::{
    aggregate_hausdorff, build_report, read_ground_truth, GeometrySet, ImageSource, MaskPair, ReportBundle, ReportInput,
};
use crate::image::Image;
use crate::ingest::{pad_to_canvas, remove_padding, CanvasSpec, DatasetManifest, ManifestEntry};
use crate::metrics::{evaluate_pairs, write_quality_csv, ImagePair, ImagePairList};
use crate::segmentation::{RadiationMask, Segmenter};
use crate::translation::{adjust_brightness, rms_brightness, BrightnessPolicy, ReferenceMode, Translator};

/// Stage names in execution order, as they appear in error diagnostics.
pub const STAGES: [&str; 6] = [
    "translate",
    "adjust_brightness",
    "remove_padding",
    "segment",
    "characterize",
    "evaluate",
];

/// One frame after translation, brightness correction and padding removal.
#[derive(Debug, Clone, PartialEq)]
pub struct TranslatedFrame {
    pub id: String,
    pub experiment: String,
    pub artificial_ir: PathBuf,
    /// Unpadded real IR, when the input had one.
    pub real_ir: Option<PathBuf>,
    pub padding: CanvasSpec,
    pub artificial_rms: f64,
    pub reference_rms: f64,
    pub brightness_scaled: bool,
}

#[derive(Debug, Clone, Serialize)]
struct BrightnessRow<'a> {
    frame_id: &'a str,
    artificial_rms: f64,
    reference_rms: f64,
    scaled: bool,
}

fn canvas_image(entry: &ManifestEntry, path: &Path, canvas: &CanvasSpec) -> Result<(Image, CanvasSpec)> {
    let img = Image::load(path)?;
    match entry.padding {
        Some(spec) => {
            if img.dims() != (canvas.width, canvas.height) || (spec.width, spec.height) != (canvas.width, canvas.height)
            {
                return Err(Error::dims(
                    format!("{}x{} canvas", canvas.width, canvas.height),
                    format!("{}x{}", img.width(), img.height()),
                ));
            }
            Ok((img, spec))
        }
        None => pad_to_canvas(&img, canvas),
    }
}

/// Runs translate, adjust_brightness and remove_padding for every entry in
/// id order. Writes `canvas/`, `translated/`, `adjusted/`, `artificial_ir/`,
/// `original_ir/` and `brightness.csv` under `out_dir`.
pub fn translate_frames(
    manifest: &DatasetManifest,
    translator: &Translator,
    policy: &BrightnessPolicy,
    out_dir: &Path,
) -> Result<Vec<TranslatedFrame>> {
    policy.validate()?;
    let spec = translator.spec();
    let canvas = CanvasSpec::new(spec.width, spec.height);
    let mut entries: Vec<&ManifestEntry> = manifest.entries.iter().collect();
    entries.sort_by(|a, b| a.id.cmp(&b.id));

    let mut frames = Vec::with_capacity(entries.len());
    for entry in entries {
        let id = entry.id.as_str();
        let png = format!("{id}.png");

        let (visible, padding) =
            canvas_image(entry, &entry.visible, &canvas).map_err(|e| e.at_stage("translate", id))?;
        let translated = translator
            .translate(&visible)
            .map_err(|e| e.at_stage("translate", id))?;
        visible.save(out_dir.join("canvas").join(&png))?;
        translated.save(out_dir.join("translated").join(&png))?;

        let real_canvas = entry
            .ir
            .as_ref()
            .map(|p| canvas_image(entry, p, &canvas).map(|r| r.0))
            .transpose()
            .map_err(|e| e.at_stage("adjust_brightness", id))?;
        let reference_rms = match policy.reference_mode {
            ReferenceMode::PairedReal => match &real_canvas {
                Some(ir) => rms_brightness(ir),
                None => Err(Error::InvalidInput(
                    "paired brightness reference needs a real IR frame".into(),
                )),
            },
            ReferenceMode::CorpusMean => translator
                .corpus_rms()
                .ok_or_else(|| Error::InvalidInput("checkpoint carries no corpus brightness".into())),
        }
        .map_err(|e| e.at_stage("adjust_brightness", id))?;
        let artificial_rms = rms_brightness(&translated).map_err(|e| e.at_stage("adjust_brightness", id))?;
        let adjusted =
            adjust_brightness(&translated, reference_rms, policy).map_err(|e| e.at_stage("adjust_brightness", id))?;
        adjusted.save(out_dir.join("adjusted").join(&png))?;

        let artificial = remove_padding(&adjusted, &padding).map_err(|e| e.at_stage("remove_padding", id))?;
        let artificial_ir = out_dir.join("artificial_ir").join(&png);
        artificial.save(&artificial_ir)?;
        let real_ir = match &real_canvas {
            Some(ir) => {
                let real = remove_padding(ir, &padding).map_err(|e| e.at_stage("remove_padding", id))?;
                let p = out_dir.join("original_ir").join(&png);
                real.save(&p)?;
                Some(p)
            }
            None => None,
        };
        frames.push(TranslatedFrame {
            id: id.to_string(),
            experiment: entry.experiment().to_string(),
            artificial_ir,
            real_ir,
            padding,
            artificial_rms,
            reference_rms,
            brightness_scaled: policy.scale(artificial_rms, reference_rms).is_some(),
        });
    }

    let csv_path = out_dir.join("brightness.csv");
    let mut w = csv::Writer::from_path(&csv_path)?;
    for f in &frames {
        w.serialize(BrightnessRow {
            frame_id: &f.id,
            artificial_rms: f.artificial_rms,
            reference_rms: f.reference_rms,
            scaled: f.brightness_scaled,
        })?;
    }
    w.flush().map_err(|e| Error::io(&csv_path, e))?;
    Ok(frames)
}

/// Segments each `(id, image)` and writes `out_dir/{id}.png` plus sidecar.
pub fn segment_images(
    segmenter: &Segmenter,
    images: &[(String, PathBuf)],
    out_dir: &Path,
) -> Result<Vec<(String, PathBuf)>> {
    images
        .iter()
        .map(|(id, path)| {
            let mask = Image::load(path)
                .and_then(|img| segmenter.segment(&img))
                .map_err(|e| e.at_stage("segment", id.as_str()))?;
            let dst = out_dir.join(format!("{id}.png"));
            mask.save(&dst)?;
            Ok((id.clone(), dst))
        })
        .collect()
}

/// Length and area for each `(id, mask)`, in input order.
pub fn characterize_masks(
    masks: &[(String, PathBuf)],
    nozzle: NozzleReference,
    cal: &CalibrationInfo,
) -> Result<Vec<GeometryRow>> {
    masks
        .iter()
        .map(|(id, path)| {
            RadiationMask::load(path)
                .and_then(|m| characterize(&m, nozzle, cal))
                .map(|g| GeometryRow::new(id.as_str(), &g))
                .map_err(|e| e.at_stage("characterize", id.as_str()))
        })
        .collect()
}

/// Mask images in a directory keyed by file stem, sorted by id.
pub fn list_masks(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) {
            let id = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            out.push((id, path));
        }
    }
    out.sort();
    Ok(out)
}

/// Geometry CSV written for one model and image source.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryOutput {
    pub model_variant: String,
    pub image_source: ImageSource,
    pub csv: PathBuf,
    pub rows: Vec<GeometryRow>,
}

#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub out_dir: PathBuf,
    pub frames: Vec<TranslatedFrame>,
    pub geometry: Vec<GeometryOutput>,
    pub quality_csv: Option<PathBuf>,
    pub report: ReportBundle,
    /// Content hashes of inputs and outputs.
    pub record: PathBuf,
}

#[derive(Debug, Serialize)]
struct RunRecord {
    seed: u64,
    config_sha256: String,
    input_manifest_hash: String,
    checkpoints: BTreeMap<String, String>,
    /// Output path relative to the run directory, to its SHA-256.
    artifacts: BTreeMap<String, String>,
}

fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn existing_checkpoint(path: Option<&Path>, stage: &str) -> Result<PathBuf> {
    match path {
        Some(p) if p.is_file() => Ok(p.to_path_buf()),
        _ => Err(Error::CheckpointNotFound(stage.to_string())),
    }
}

/// Visible frames to geometry and report: translate, adjust_brightness,
/// remove_padding, segment (generated and, when present, original IR),
/// characterize, evaluate. Every intermediate is written under
/// `config.paths.out_dir`; frames are processed in id order.
pub fn run_pipeline(config: &PipelineConfig, manifest: &DatasetManifest, device: &Device) -> Result<PipelineRun> {
    config.validate()?;
    let translator_path = existing_checkpoint(config.paths.translator_checkpoint.as_deref(), "translation")?;
    if config.paths.segmenter_checkpoints.is_empty() {
        return Err(Error::CheckpointNotFound("segmentation".into()));
    }
    let segmenter_paths = config
        .paths
        .segmenter_checkpoints
        .iter()
        .map(|p| existing_checkpoint(Some(p), "segmentation"))
        .collect::<Result<Vec<_>>>()?;
    let nozzle = config
        .characterization
        .nozzle
        .ok_or_else(|| Error::InvalidConfig("characterization.nozzle is required".into()))?;
    let ppm = config
        .characterization
        .pixels_per_metric
        .ok_or_else(|| Error::InvalidConfig("characterization.pixels_per_metric is required".into()))?;
    let cal = CalibrationInfo::from_ppm(ppm)?;
    if manifest.is_empty() {
        return Err(Error::InvalidInput("input manifest has no frames".into()));
    }

    let out = config.paths.out_dir.clone();
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;

    let translator = Translator::load(&translator_path, device)?;
    let spec = translator.spec();
    if let Some(c) = config
        .canvas
        .filter(|c| (c.width, c.height) != (spec.width, spec.height))
    {
        return Err(Error::InvalidConfig(format!(
            "canvas {}x{} differs from translator input {}x{}",
            c.width, c.height, spec.width, spec.height
        )));
    }
    let frames = translate_frames(
        manifest,
        &translator,
        &config.translation.brightness,
        &out.join("translation"),
    )?;
    drop(translator);

    let generated: Vec<(String, PathBuf)> = frames.iter().map(|f| (f.id.clone(), f.artificial_ir.clone())).collect();
    let original: Vec<(String, PathBuf)> = frames
        .iter()
        .filter_map(|f| f.real_ir.clone().map(|p| (f.id.clone(), p)))
        .collect();
    let experiments: BTreeMap<String, String> = frames.iter().map(|f| (f.id.clone(), f.experiment.clone())).collect();

    let mut geometry = Vec::new();
    let mut mask_pairs = Vec::new();
    let mut seen_variants = Vec::new();
    for path in &segmenter_paths {
        let segmenter = Segmenter::load(path, device)?;
        let variant = segmenter.spec().variant.to_string();
        if seen_variants.contains(&variant) {
            return Err(Error::InvalidConfig(format!(
                "two segmenter checkpoints share variant `{variant}`"
            )));
        }
        seen_variants.push(variant.clone());
        let mut masks_by_source = BTreeMap::new();
        for (source, images) in [
            (ImageSource::GeneratedIr, &generated),
            (ImageSource::OriginalIr, &original),
        ] {
            if images.is_empty() {
                continue;
            }
            let mask_dir = out.join("masks").join(&variant).join(source.to_string());
            let masks = segment_images(&segmenter, images, &mask_dir)?;
            let rows = characterize_masks(&masks, nozzle, &cal)?;
            let csv = out.join("geometry").join(format!("{variant}_{source}.csv"));
            write_geometry_csv(&csv, &rows)?;
            geometry.push(GeometryOutput {
                model_variant: variant.clone(),
                image_source: source,
                csv,
                rows,
            });
            masks_by_source.insert(source, masks);
        }
        if let (Some(gen), Some(orig)) = (
            masks_by_source.get(&ImageSource::GeneratedIr),
            masks_by_source.get(&ImageSource::OriginalIr),
        ) {
            let orig: BTreeMap<&str, &PathBuf> = orig.iter().map(|(id, p)| (id.as_str(), p)).collect();
            for (id, gen_path) in gen {
                let Some(orig_path) = orig.get(id.as_str()) else {
                    continue;
                };
                let load = |p: &Path| RadiationMask::load(p).map(|m| m.foreground_points());
                mask_pairs.push(MaskPair {
                    frame_id: id.clone(),
                    experiment: experiments[id].clone(),
                    model_variant: variant.clone(),
                    a: load(orig_path).map_err(|e| e.at_stage("evaluate", id.as_str()))?,
                    b: load(gen_path).map_err(|e| e.at_stage("evaluate", id.as_str()))?,
                });
            }
        }
    }

    let mut quality = Vec::new();
    let mut quality_csv = None;
    if !original.is_empty() {
        let pairs = ImagePairList {
            pairs: frames
                .iter()
                .filter_map(|f| {
                    f.real_ir.as_ref().map(|r| ImagePair {
                        id: f.id.clone(),
                        reference: r.clone(),
                        candidate: f.artificial_ir.clone(),
                    })
                })
                .collect(),
        };
        // stored beside the translation directory so its paths stay relative
        pairs.save(&out.join("pairs.json"))?;
        quality = evaluate_pairs(&pairs).map_err(|e| e.at_stage("evaluate", "quality"))?;
        let p = out.join("quality.csv");
        write_quality_csv(&p, &quality)?;
        quality_csv = Some(p);
    }
    let hausdorff = if mask_pairs.is_empty() {
        Vec::new()
    } else {
        aggregate_hausdorff(&mask_pairs).map_err(|e| e.at_stage("evaluate", "hausdorff"))?
    };
    let ground_truth = match &config.evaluation.ground_truth {
        Some(p) => read_ground_truth(p).map_err(|e| e.at_stage("evaluate", "ground_truth"))?,
        None => Vec::new(),
    };
    let input = ReportInput {
        geometry: geometry
            .iter()
            .map(|g| GeometrySet {
                model_variant: g.model_variant.clone(),
                image_source: g.image_source,
                rows: g.rows.clone(),
            })
            .collect(),
        ground_truth,
        experiments,
        quality,
        hausdorff,
    };
    let report = build_report(&input, &out.join("report")).map_err(|e| e.at_stage("evaluate", "report"))?;

    let record = write_run_record(
        config,
        manifest,
        &translator_path,
        &segmenter_paths,
        &geometry,
        &report,
        &out,
    )?;
    Ok(PipelineRun {
        out_dir: out,
        frames,
        geometry,
        quality_csv,
        report,
        record,
    })
}

fn write_run_record(
    config: &PipelineConfig,
    manifest: &DatasetManifest,
    translator: &Path,
    segmenters: &[PathBuf],
    geometry: &[GeometryOutput],
    report: &ReportBundle,
    out: &Path,
) -> Result<PathBuf> {
    let mut checkpoints = BTreeMap::new();
    checkpoints.insert("translation".to_string(), file_sha256(translator)?);
    for (i, p) in segmenters.iter().enumerate() {
        checkpoints.insert(format!("segmentation_{i}"), file_sha256(p)?);
    }
    let mut artifacts = BTreeMap::new();
    for p in geometry.iter().map(|g| &g.csv).chain(&report.files) {
        let rel = p.strip_prefix(out).unwrap_or(p).to_string_lossy().replace('\\', "/");
        artifacts.insert(rel, file_sha256(p)?);
    }
    // out_dir is excluded so reruns into different directories hash alike.
    let mut hashed = config.clone();
    hashed.paths.out_dir = PathBuf::new();
    let config_sha256 = hex::encode(Sha256::digest(hashed.to_toml_string()?.as_bytes()));
    let record = RunRecord {
        seed: config.seed,
        config_sha256,
        input_manifest_hash: manifest.content_hash(),
        checkpoints,
        artifacts,
    };
    let path = out.join("run.json");
    std::fs::write(&path, serde_json::to_string_pretty(&record)? + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_translator_checkpoint_is_named() {
        let mut cfg = PipelineConfig::default();
        cfg.paths.translator_checkpoint = Some(PathBuf::from("/nonexistent/translator.safetensors"));
        let manifest = DatasetManifest::new(vec![ManifestEntry::new("f", "v.png")], 0);
        let err = run_pipeline(&cfg, &manifest, &Device::Cpu).unwrap_err();
        assert_eq!(err.to_string(), "checkpoint not found: translation");
    }

    #[test]
    fn unset_translator_checkpoint_is_named() {
        let cfg = PipelineConfig::default();
        let manifest = DatasetManifest::new(vec![ManifestEntry::new("f", "v.png")], 0);
        let err = run_pipeline(&cfg, &manifest, &Device::Cpu).unwrap_err();
        assert!(matches!(err, Error::CheckpointNotFound(ref s) if s == "translation"));
    }

    #[test]
    fn masks_listed_by_id() {
        let dir = tempfile::tempdir().unwrap();
        for id in ["b", "a", "c"] {
            RadiationMask::new(2, 2, vec![0, 1, 1, 0], crate::segmentation::default_class_names(2))
                .unwrap()
                .save(&dir.path().join(format!("{id}.png")))
                .unwrap();
        }
        let ids: Vec<String> = list_masks(dir.path()).unwrap().into_iter().map(|m| m.0).collect();
        assert_eq!(ids, ["a", "b", "c"]);
    }
}
