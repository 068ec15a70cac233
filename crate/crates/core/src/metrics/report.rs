use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{correlation, entropy, format_metric, psnr, psnr_flagged, ssim, GrayImage, SsimParams};
use crate::error::{Error, Result};
use crate::image::Image;

/// Reference image (real IR) and candidate (generated IR) for one frame.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImagePair {
    pub id: String,
    pub reference: PathBuf,
    pub candidate: PathBuf,
}

/// JSON list of image pairs; relative paths resolve against the file's directory.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImagePairList {
    pub pairs: Vec<ImagePair>,
}

impl ImagePairList {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut list: Self = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in &mut list.pairs {
            if p.reference.is_relative() {
                p.reference = base.join(&p.reference);
            }
            if p.candidate.is_relative() {
                p.candidate = base.join(&p.candidate);
            }
        }
        Ok(list)
    }

    /// Paths under the file's directory are stored relative to it.
    pub fn save(&self, path: &Path) -> Result<()> {
        let base = path.parent().unwrap_or(Path::new(""));
        if !base.as_os_str().is_empty() {
            std::fs::create_dir_all(base).map_err(|e| Error::io(base, e))?;
        }
        let rel = |p: &Path| {
            p.strip_prefix(base)
                .map(Path::to_path_buf)
                .unwrap_or_else(|_| p.to_path_buf())
        };
        let out = Self {
            pairs: self
                .pairs
                .iter()
                .map(|p| ImagePair {
                    id: p.id.clone(),
                    reference: rel(&p.reference),
                    candidate: rel(&p.candidate),
                })
                .collect(),
        };
        std::fs::write(path, serde_json::to_string_pretty(&out)? + "\n").map_err(|e| Error::io(path, e))
    }
}

/// Quality of one candidate against its reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityRow {
    pub id: String,
    pub en_reference: f64,
    pub en_candidate: f64,
    /// `None` when either image has zero variance.
    pub cc: Option<f64>,
    pub psnr_db: f64,
    pub ssim: f64,
}

impl QualityRow {
    pub fn psnr_below_benchmark(&self) -> bool {
        psnr_flagged(self.psnr_db)
    }
}

pub fn image_quality(id: &str, reference: &Image, candidate: &Image) -> Result<QualityRow> {
    let r = GrayImage::from_image(reference)?;
    let c = GrayImage::from_image(candidate)?;
    let cc = match correlation(&c, &r) {
        Ok(v) => Some(v.value),
        Err(Error::UndefinedCorrelation(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(QualityRow {
        id: id.to_string(),
        en_reference: entropy(&r).value,
        en_candidate: entropy(&c).value,
        cc,
        psnr_db: psnr(&c, &r)?.value,
        ssim: ssim(&c, &r, &SsimParams::default())?.value,
    })
}

pub fn evaluate_pairs(list: &ImagePairList) -> Result<Vec<QualityRow>> {
    if list.pairs.is_empty() {
        return Err(Error::InvalidInput("no image pairs".into()));
    }
    list.pairs
        .iter()
        .map(|p| image_quality(&p.id, &Image::load(&p.reference)?, &Image::load(&p.candidate)?))
        .collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        let (a, b) = (v[n / 2 - 1], v[n / 2]);
        if a == b {
            a
        } else {
            (a + b) / 2.0
        }
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn cell(v: Option<f64>) -> String {
    v.map(format_metric).unwrap_or_else(|| "undefined".into())
}

/// Per-pair rows followed by `mean` and `median` rows; `psnr_below_30db`
/// marks rows under the PSNR benchmark.
pub fn write_quality_csv(path: &Path, rows: &[QualityRow]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "id",
        "en_reference",
        "en_candidate",
        "cc",
        "psnr_db",
        "ssim",
        "psnr_below_30db",
    ])?;
    for r in rows {
        w.write_record([
            r.id.clone(),
            format_metric(r.en_reference),
            format_metric(r.en_candidate),
            cell(r.cc),
            format_metric(r.psnr_db),
            format_metric(r.ssim),
            r.psnr_below_benchmark().to_string(),
        ])?;
    }
    let column = |f: &dyn Fn(&QualityRow) -> Option<f64>| -> Vec<f64> { rows.iter().filter_map(f).collect() };
    let en_r = column(&|r| Some(r.en_reference));
    let en_c = column(&|r| Some(r.en_candidate));
    let cc = column(&|r| r.cc);
    let ps = column(&|r| Some(r.psnr_db));
    let ss = column(&|r| Some(r.ssim));
    for (label, agg) in [
        ("mean", &mean as &dyn Fn(&[f64]) -> f64),
        ("median", &|v: &[f64]| median(v.to_vec())),
    ] {
        let opt = |v: &[f64]| if v.is_empty() { None } else { Some(agg(v)) };
        let psnr_agg = agg(&ps);
        w.write_record([
            label.to_string(),
            format_metric(agg(&en_r)),
            format_metric(agg(&en_c)),
            cell(opt(&cc)),
            format_metric(psnr_agg),
            format_metric(agg(&ss)),
            psnr_flagged(psnr_agg).to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
