//! Manifest-level operations that read and write PNG datasets.

use std::path::Path;

use super::align::{fit_similarity, warp_affine};
use super::augment::{augment_with, augmentation_plan, AugmentConfig};
use super::canvas::{pad_to_canvas, CanvasSpec};
use super::frames::{load_stream, FrameRecord};
use super::manifest::{DatasetManifest, ManifestEntry};
use super::pairing::{pair_streams, PairedSample, PairingOptions};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::segmentation::RadiationMask;

/// Operator-supplied reference points (visible, IR), e.g. thermocouples and nozzle.
pub type ReferencePoints = (Vec<(f64, f64)>, Vec<(f64, f64)>);

#[derive(Debug, Clone)]
pub struct PairDatasetOptions {
    pub pairing: PairingOptions,
    pub references: Option<ReferencePoints>,
    pub canvas: Option<CanvasSpec>,
    pub experiment: Option<String>,
    pub seed: u64,
}

/// Loads both streams, pairs them, warps visible frames into the IR frame
/// when references are given, pads onto the canvas and writes
/// `visible/`, `ir/` and `manifest.json` under `out_dir`.
pub fn build_paired_dataset(
    visible_dir: &Path,
    ir_dir: &Path,
    opts: &PairDatasetOptions,
    out_dir: &Path,
) -> Result<DatasetManifest> {
    let visible = load_stream(visible_dir, "visible")?;
    let ir = load_stream(ir_dir, "ir")?;
    let (low, high) = match opts.pairing.low_rate {
        super::Modality::Ir => (&ir, &visible),
        super::Modality::Visible => (&visible, &ir),
    };
    let pairs = pair_streams(low, high, &opts.pairing)?;
    let fit = opts
        .references
        .as_ref()
        .map(|(v, i)| fit_similarity(v, i))
        .transpose()?;

    let mut entries = Vec::with_capacity(pairs.len());
    for pair in pairs {
        let id = format!("{:06}", pair.ir.index);
        let mut vis_img = pair.visible.image.clone();
        let mut alignment = pair.alignment;
        if let Some(fit) = &fit {
            vis_img = warp_affine(&vis_img, &fit.transform, pair.ir.image.width(), pair.ir.image.height())?;
            alignment = fit.transform;
        }
        let mut ir_img = pair.ir.image.clone();
        let mut padding = None;
        if let Some(canvas) = &opts.canvas {
            let (v, spec) = pad_to_canvas(&vis_img, canvas)?;
            let (i, _) = pad_to_canvas(&ir_img, canvas)?;
            vis_img = v;
            ir_img = i;
            padding = Some(spec);
        }
        let vis_path = out_dir.join("visible").join(format!("{id}.png"));
        let ir_path = out_dir.join("ir").join(format!("{id}.png"));
        vis_img.save(&vis_path)?;
        ir_img.save(&ir_path)?;
        let mut e = ManifestEntry::new(id, vis_path);
        e.ir = Some(ir_path);
        e.experiment = opts.experiment.clone();
        e.visible_index = pair.visible.index;
        e.ir_index = pair.ir.index;
        e.visible_timestamp = pair.visible.timestamp;
        e.ir_timestamp = pair.ir.timestamp;
        e.time_offset = pair.time_offset;
        e.alignment = alignment;
        e.padding = padding;
        entries.push(e);
    }
    let mut manifest = DatasetManifest::new(entries, opts.seed);
    manifest.canvas = opts.canvas;
    manifest.save(out_dir.join("manifest.json"))?;
    Ok(manifest)
}

/// Copies every entry onto `canvas` (visible, IR and mask alike) under
/// `out_dir` and records the padding. Entries already padded are rejected.
pub fn pad_manifest(manifest: &DatasetManifest, canvas: &CanvasSpec, out_dir: &Path) -> Result<DatasetManifest> {
    let mut entries = Vec::with_capacity(manifest.len());
    for entry in &manifest.entries {
        if entry.padding.is_some() {
            return Err(Error::InvalidInput(format!(
                "entry `{}` is already on a canvas",
                entry.id
            )));
        }
        let place = |src: &Path, dir: &str| -> Result<(std::path::PathBuf, CanvasSpec)> {
            let (img, spec) = pad_to_canvas(&Image::load(src)?, canvas)?;
            let dst = out_dir.join(dir).join(format!("{}.png", entry.id));
            img.save(&dst)?;
            Ok((dst, spec))
        };
        let mut e = entry.clone();
        let (vis, spec) = place(&entry.visible, "visible")?;
        e.visible = vis;
        e.ir = entry.ir.as_deref().map(|p| place(p, "ir").map(|r| r.0)).transpose()?;
        if let Some(src) = &entry.mask {
            let mask = RadiationMask::load(src)?;
            let (img, _) = pad_to_canvas(&mask.to_image(), canvas)?;
            let dst = out_dir.join("mask").join(format!("{}.png", entry.id));
            RadiationMask::from_image(&img, mask.class_names().to_vec())?.save(&dst)?;
            e.mask = Some(dst);
        }
        e.padding = Some(spec);
        entries.push(e);
    }
    let mut out = DatasetManifest::new(entries, manifest.seed);
    out.split_label = manifest.split_label;
    out.canvas = Some(*canvas);
    out.save(out_dir.join("manifest.json"))?;
    Ok(out)
}

/// Per-entry seed so each sample gets its own crops.
pub fn entry_seed(seed: u64, position: usize) -> u64 {
    seed ^ (position as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Loads a manifest entry as an in-memory pair (IR is required).
pub fn load_pair(entry: &ManifestEntry) -> Result<PairedSample> {
    let ir_path = entry
        .ir
        .as_ref()
        .ok_or_else(|| Error::InvalidInput(format!("entry `{}` has no IR image", entry.id)))?;
    let mut visible = FrameRecord::new(
        "visible",
        entry.visible_index,
        entry.visible_timestamp,
        Image::load(&entry.visible)?,
    );
    visible.path = Some(entry.visible.clone());
    let mut ir = FrameRecord::new("ir", entry.ir_index, entry.ir_timestamp, Image::load(ir_path)?);
    ir.path = Some(ir_path.clone());
    Ok(PairedSample {
        visible,
        ir,
        time_offset: entry.time_offset,
        alignment: entry.alignment,
    })
}

/// Writes 16 variants of every entry under `out_dir` and returns the
/// augmented manifest (16x the input).
pub fn augment_manifest(
    manifest: &DatasetManifest,
    seed: u64,
    config: &AugmentConfig,
    out_dir: &Path,
) -> Result<DatasetManifest> {
    let mut entries = Vec::with_capacity(manifest.len() * super::AUGMENTATION_FACTOR);
    for (pos, entry) in manifest.entries.iter().enumerate() {
        let s = entry_seed(seed, pos);
        let sample = load_pair(entry)?;
        let plan = augmentation_plan(config, s)?;
        let mask = entry.mask.as_deref().map(RadiationMask::load).transpose()?;
        for (k, (variant, op)) in augment_with(&sample, s, config)?.into_iter().zip(&plan).enumerate() {
            let id = format!("{}_a{k:02}", entry.id);
            let vis_path = out_dir.join("visible").join(format!("{id}.png"));
            let ir_path = out_dir.join("ir").join(format!("{id}.png"));
            variant.visible.image.save(&vis_path)?;
            variant.ir.image.save(&ir_path)?;
            let mut e = entry.clone();
            e.id = id.clone();
            e.visible = vis_path;
            e.ir = Some(ir_path);
            if let Some(mask) = &mask {
                let p = out_dir.join("mask").join(format!("{id}.png"));
                RadiationMask::from_image(&nearest_op(op, &mask.to_image()), mask.class_names().to_vec())?.save(&p)?;
                e.mask = Some(p);
            }
            entries.push(e);
        }
    }
    let mut out = DatasetManifest::new(entries, seed);
    out.split_label = manifest.split_label;
    out.canvas = manifest.canvas;
    out.save(out_dir.join("manifest.json"))?;
    Ok(out)
}

/// Label masks must not be interpolated; rotations use nearest sampling.
fn nearest_op(op: &super::AugmentKind, mask: &Image) -> Image {
    match *op {
        super::AugmentKind::Rotate { degrees, mirror } => {
            let src = if mirror { super::mirror(mask) } else { mask.clone() };
            let (s, c) = degrees.to_radians().sin_cos();
            let cx = (src.width() as f64 - 1.0) / 2.0;
            let cy = (src.height() as f64 - 1.0) / 2.0;
            Image::from_fn(src.width(), src.height(), src.channels(), |x, y, ch| {
                let dx = x as f64 - cx;
                let dy = y as f64 - cy;
                let sx = (c * dx + s * dy + cx).round();
                let sy = (-s * dx + c * dy + cy).round();
                if sx < 0.0 || sy < 0.0 || sx >= src.width() as f64 || sy >= src.height() as f64 {
                    0
                } else {
                    src.get(sx as usize, sy as usize, ch)
                }
            })
        }
        other => other.apply(mask),
    }
}
