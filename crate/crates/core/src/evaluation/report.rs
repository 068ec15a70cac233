use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::errors::{error_spread, mape, rmspe};
use super::hausdorff::HausdorffGroup;
use super::GroundTruthRecord;
use crate::characterization::GeometryRow;
use crate::error::{Error, Result};
use crate::metrics::{format_metric, write_quality_csv, QualityRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImageSource {
    OriginalIr,
    GeneratedIr,
}

impl std::fmt::Display for ImageSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::OriginalIr => "original_ir",
            Self::GeneratedIr => "generated_ir",
        })
    }
}

impl std::str::FromStr for ImageSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "original_ir" | "original" => Ok(Self::OriginalIr),
            "generated_ir" | "generated" => Ok(Self::GeneratedIr),
            other => Err(Error::InvalidInput(format!("unknown image source `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ErrorMetric {
    Mape,
    Rmspe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Length,
    Area,
}

/// Geometry produced by one model from one image source.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometrySet {
    pub model_variant: String,
    pub image_source: ImageSource,
    pub rows: Vec<GeometryRow>,
}

#[derive(Debug, Clone, Default)]
pub struct ReportInput {
    pub geometry: Vec<GeometrySet>,
    pub ground_truth: Vec<GroundTruthRecord>,
    /// Frame id to experiment name; unlisted frames fall under `default`.
    pub experiments: BTreeMap<String, String>,
    pub quality: Vec<QualityRow>,
    pub hausdorff: Vec<HausdorffGroup>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub quantity: Quantity,
    pub metric: ErrorMetric,
    /// Percent.
    pub value: f64,
    pub experiment: String,
    pub model_variant: String,
    pub image_source: ImageSource,
    pub n: usize,
}

/// RMSPE minus MAPE for one group. `rmspe_ge_mape` is advisory: the two
/// use different denominators, so the ordering is not guaranteed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadReport {
    pub quantity: Quantity,
    pub experiment: String,
    pub model_variant: String,
    pub image_source: ImageSource,
    pub spread: f64,
    pub rmspe_ge_mape: bool,
}

/// Signed percentage change of prediction against truth for one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameChange {
    pub frame_id: String,
    pub experiment: String,
    pub model_variant: String,
    pub image_source: ImageSource,
    pub length_pct_change: f64,
    pub area_pct_change: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ReportJson {
    errors: Vec<ErrorReport>,
    spreads: Vec<SpreadReport>,
    hausdorff: Vec<HausdorffGroup>,
    quality: Vec<QualityRow>,
    psnr_below_30db: Vec<String>,
    per_frame: Vec<FrameChange>,
    skipped_frames: Vec<String>,
    notes: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ReportBundle {
    pub errors: Vec<ErrorReport>,
    pub spreads: Vec<SpreadReport>,
    pub per_frame: Vec<FrameChange>,
    pub skipped_frames: Vec<String>,
    pub files: Vec<PathBuf>,
}

type GroupKey = (String, String, ImageSource);

/// Error reports, spreads, per-frame changes and frames without ground truth.
pub type ErrorTables = (Vec<ErrorReport>, Vec<SpreadReport>, Vec<FrameChange>, Vec<String>);

/// Per-group MAPE/RMSPE for length and area, spreads, per-frame changes and
/// the ids of frames without ground truth.
pub fn compute_errors(input: &ReportInput) -> Result<ErrorTables> {
    if input.geometry.iter().all(|g| g.rows.is_empty()) {
        return Err(Error::InvalidInput("no geometry results to report".into()));
    }
    let truth: BTreeMap<&str, &GroundTruthRecord> =
        input.ground_truth.iter().map(|g| (g.frame_id.as_str(), g)).collect();
    let experiment_of = |id: &str| {
        input
            .experiments
            .get(id)
            .cloned()
            .unwrap_or_else(|| "default".to_string())
    };

    // (t_len, p_len, t_area, p_area) per group
    let mut groups: BTreeMap<GroupKey, Vec<(f64, f64, f64, f64)>> = BTreeMap::new();
    let mut per_frame = Vec::new();
    let mut skipped = BTreeSet::new();
    for set in &input.geometry {
        for row in &set.rows {
            let Some(gt) = truth.get(row.frame_id.as_str()) else {
                log::warn!("no ground truth for frame `{}`; row skipped", row.frame_id);
                skipped.insert(row.frame_id.clone());
                continue;
            };
            let experiment = experiment_of(&row.frame_id);
            per_frame.push(FrameChange {
                frame_id: row.frame_id.clone(),
                experiment: experiment.clone(),
                model_variant: set.model_variant.clone(),
                image_source: set.image_source,
                length_pct_change: (row.length_m - gt.true_length_m) / gt.true_length_m * 100.0,
                area_pct_change: (row.area_m2 - gt.true_area_m2) / gt.true_area_m2 * 100.0,
            });
            groups
                .entry((experiment, set.model_variant.clone(), set.image_source))
                .or_default()
                .push((gt.true_length_m, row.length_m, gt.true_area_m2, row.area_m2));
        }
    }

    let mut errors = Vec::new();
    let mut spreads = Vec::new();
    for ((experiment, model_variant, image_source), v) in &groups {
        for quantity in [Quantity::Length, Quantity::Area] {
            let (t, p): (Vec<f64>, Vec<f64>) = v
                .iter()
                .map(|r| match quantity {
                    Quantity::Length => (r.0, r.1),
                    Quantity::Area => (r.2, r.3),
                })
                .unzip();
            let frame = |e: Error| e.at_stage("evaluate", format!("{experiment}/{model_variant}/{image_source}"));
            let m = mape(&t, &p).map_err(frame)?;
            let r = rmspe(&t, &p).map_err(frame)?;
            for (metric, value) in [(ErrorMetric::Mape, m), (ErrorMetric::Rmspe, r)] {
                errors.push(ErrorReport {
                    quantity,
                    metric,
                    value,
                    experiment: experiment.clone(),
                    model_variant: model_variant.clone(),
                    image_source: *image_source,
                    n: t.len(),
                });
            }
            spreads.push(SpreadReport {
                quantity,
                experiment: experiment.clone(),
                model_variant: model_variant.clone(),
                image_source: *image_source,
                spread: error_spread(m, r),
                rmspe_ge_mape: r >= m - 1e-9,
            });
        }
    }
    Ok((errors, spreads, per_frame, skipped.into_iter().collect()))
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    Ok(())
}

/// Rows: MAPE, RMSPE and spread per model variant; columns:
/// `experiment/image_source`.
fn write_error_table(path: &Path, quantity: Quantity, errors: &[ErrorReport], spreads: &[SpreadReport]) -> Result<()> {
    create_parent(path)?;
    let columns: BTreeSet<(String, ImageSource)> = errors
        .iter()
        .filter(|e| e.quantity == quantity)
        .map(|e| (e.experiment.clone(), e.image_source))
        .collect();
    let models: BTreeSet<&str> = errors.iter().map(|e| e.model_variant.as_str()).collect();
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["model_variant".to_string(), "metric".to_string()];
    header.extend(columns.iter().map(|(e, s)| format!("{e}/{s}")));
    w.write_record(&header)?;
    for model in models {
        for label in ["MAPE", "RMSPE", "spread"] {
            let mut rec = vec![model.to_string(), label.to_string()];
            for (exp, src) in &columns {
                let value = match label {
                    "spread" => spreads
                        .iter()
                        .find(|s| {
                            s.quantity == quantity
                                && s.model_variant == model
                                && &s.experiment == exp
                                && s.image_source == *src
                        })
                        .map(|s| s.spread),
                    _ => {
                        let metric = if label == "MAPE" {
                            ErrorMetric::Mape
                        } else {
                            ErrorMetric::Rmspe
                        };
                        errors
                            .iter()
                            .find(|e| {
                                e.quantity == quantity
                                    && e.metric == metric
                                    && e.model_variant == model
                                    && &e.experiment == exp
                                    && e.image_source == *src
                            })
                            .map(|e| e.value)
                    }
                };
                rec.push(value.map(format_metric).unwrap_or_default());
            }
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Rows: model variant; columns: experiment; cells: mean Hausdorff distance.
fn write_hausdorff_table(path: &Path, groups: &[HausdorffGroup]) -> Result<()> {
    create_parent(path)?;
    let experiments: BTreeSet<&str> = groups.iter().map(|g| g.experiment.as_str()).collect();
    let models: BTreeSet<&str> = groups.iter().map(|g| g.model_variant.as_str()).collect();
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["model_variant".to_string()];
    header.extend(experiments.iter().map(|e| e.to_string()));
    w.write_record(&header)?;
    for model in models {
        let mut rec = vec![model.to_string()];
        for exp in &experiments {
            let cell = groups
                .iter()
                .find(|g| g.model_variant == model && g.experiment == *exp)
                .map(|g| format_metric(g.mean_hd))
                .unwrap_or_default();
            rec.push(cell);
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn write_per_frame(path: &Path, rows: &[FrameChange]) -> Result<()> {
    create_parent(path)?;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "frame_id",
        "experiment",
        "model_variant",
        "image_source",
        "length_pct_change",
        "area_pct_change",
    ])?;
    for r in rows {
        w.write_record([
            r.frame_id.clone(),
            r.experiment.clone(),
            r.model_variant.clone(),
            r.image_source.to_string(),
            format_metric(r.length_pct_change),
            format_metric(r.area_pct_change),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Writes the length and area error tables, the Hausdorff and image-quality
/// tables when inputs exist, the per-frame change series and `report.json`.
pub fn build_report(input: &ReportInput, out_dir: &Path) -> Result<ReportBundle> {
    let (errors, spreads, per_frame, skipped) = compute_errors(input)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut files = Vec::new();

    let p = out_dir.join("errors_length.csv");
    write_error_table(&p, Quantity::Length, &errors, &spreads)?;
    files.push(p);
    let p = out_dir.join("errors_area.csv");
    write_error_table(&p, Quantity::Area, &errors, &spreads)?;
    files.push(p);
    if !input.hausdorff.is_empty() {
        let p = out_dir.join("hausdorff.csv");
        write_hausdorff_table(&p, &input.hausdorff)?;
        files.push(p);
    }
    if !input.quality.is_empty() {
        let p = out_dir.join("quality.csv");
        write_quality_csv(&p, &input.quality)?;
        files.push(p);
    }
    let p = out_dir.join("per_frame_change.csv");
    write_per_frame(&p, &per_frame)?;
    files.push(p);

    let json = ReportJson {
        errors: errors.clone(),
        spreads: spreads.clone(),
        hausdorff: input.hausdorff.clone(),
        quality: input.quality.clone(),
        psnr_below_30db: input
            .quality
            .iter()
            .filter(|q| q.psnr_below_benchmark())
            .map(|q| q.id.clone())
            .collect(),
        per_frame: per_frame.clone(),
        skipped_frames: skipped.clone(),
        notes: vec![
            "MAPE divides by the true value; RMSPE divides by the predicted value.".into(),
            "rmspe_ge_mape is advisory because the denominators differ.".into(),
            "PSNR below 30 dB is flagged as significant deterioration.".into(),
        ],
    };
    let p = out_dir.join("report.json");
    // Infinite PSNR serializes as null.
    std::fs::write(&p, serde_json::to_string_pretty(&json)? + "\n").map_err(|e| Error::io(&p, e))?;
    files.push(p);

    Ok(ReportBundle {
        errors,
        spreads,
        per_frame,
        skipped_frames: skipped,
        files,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(id: &str, len: f64, area: f64) -> GeometryRow {
        GeometryRow {
            frame_id: id.into(),
            length_m: len,
            area_m2: area,
            topmost_x: 0,
            topmost_y: 0,
        }
    }

    fn input() -> ReportInput {
        let gt = vec![
            GroundTruthRecord {
                frame_id: "a".into(),
                true_length_m: 100.0,
                true_area_m2: 10.0,
            },
            GroundTruthRecord {
                frame_id: "b".into(),
                true_length_m: 200.0,
                true_area_m2: 20.0,
            },
        ];
        let mut geometry = Vec::new();
        for model in ["unet", "attention_unet"] {
            for source in [ImageSource::OriginalIr, ImageSource::GeneratedIr] {
                geometry.push(GeometrySet {
                    model_variant: model.into(),
                    image_source: source,
                    rows: vec![row("a", 90.0, 10.0), row("b", 210.0, 20.0), row("c", 5.0, 5.0)],
                });
            }
        }
        ReportInput {
            geometry,
            ground_truth: gt,
            ..Default::default()
        }
    }

    #[test]
    fn two_models_two_sources_four_cells_per_metric() {
        let (errors, spreads, per_frame, skipped) = compute_errors(&input()).unwrap();
        let mape_len: Vec<_> = errors
            .iter()
            .filter(|e| e.metric == ErrorMetric::Mape && e.quantity == Quantity::Length)
            .collect();
        assert_eq!(mape_len.len(), 4);
        assert!(mape_len.iter().all(|e| (e.value - 7.5).abs() < 1e-9 && e.n == 2));
        assert_eq!(spreads.len(), 8);
        assert_eq!(per_frame.len(), 8);
        assert_eq!(skipped, vec!["c".to_string()]);
    }

    #[test]
    fn empty_geometry_rejected() {
        assert!(compute_errors(&ReportInput::default()).is_err());
    }

    #[test]
    fn files_written() {
        let dir = tempfile::tempdir().unwrap();
        let b = build_report(&input(), dir.path()).unwrap();
        let table = std::fs::read_to_string(dir.path().join("errors_length.csv")).unwrap();
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(
            lines[0],
            "model_variant,metric,default/original_ir,default/generated_ir"
        );
        assert_eq!(lines.len(), 1 + 2 * 3);
        assert!(lines[1].starts_with("attention_unet,MAPE,7.500000"));
        assert!(b.files.iter().all(|f| f.exists()));
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
        assert_eq!(json["skipped_frames"][0], "c");
    }
}
