//! Geometry errors against ground truth and Hausdorff summaries of mask
//! pairs, written as report tables.

mod errors;
mod hausdorff;
mod report;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use errors::{error_spread, mape, rmspe};
pub use hausdorff::{aggregate_hausdorff, HausdorffGroup, MaskPair};
pub use report::{
    build_report, compute_errors, ErrorMetric, ErrorReport, ErrorTables, FrameChange, GeometrySet, ImageSource,
    Quantity, ReportBundle, ReportInput, SpreadReport,
};

use crate::error::{Error, Result};

/// One line of the ground-truth CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthRecord {
    pub frame_id: String,
    pub true_length_m: f64,
    pub true_area_m2: f64,
}

pub fn read_ground_truth(path: &Path) -> Result<Vec<GroundTruthRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    let rows = r
        .deserialize()
        .collect::<std::result::Result<Vec<GroundTruthRecord>, _>>()?;
    if let Some(bad) = rows.iter().find(|g| !(g.true_length_m > 0.0 && g.true_area_m2 > 0.0)) {
        return Err(Error::InvalidInput(format!(
            "ground truth for `{}` must be positive",
            bad.frame_id
        )));
    }
    Ok(rows)
}

pub fn write_ground_truth(path: &Path, rows: &[GroundTruthRecord]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
