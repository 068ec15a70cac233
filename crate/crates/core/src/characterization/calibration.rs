use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pixels-per-metre scale derived from a known physical distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationInfo {
    pub pixels_per_metric: f64,
    pub source: String,
    pub reference_distance_m: f64,
    pub reference_distance_px: f64,
}

/// `reference_distance_px / reference_distance_m`; both must be positive.
pub fn calibrate(reference_distance_px: f64, reference_distance_m: f64) -> Result<CalibrationInfo> {
    if !(reference_distance_px > 0.0 && reference_distance_px.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "reference distance must be positive, got {reference_distance_px} px"
        )));
    }
    if !(reference_distance_m > 0.0 && reference_distance_m.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "reference distance must be positive, got {reference_distance_m} m"
        )));
    }
    Ok(CalibrationInfo {
        pixels_per_metric: reference_distance_px / reference_distance_m,
        source: format!("{reference_distance_px} px over {reference_distance_m} m"),
        reference_distance_m,
        reference_distance_px,
    })
}

impl CalibrationInfo {
    /// Calibration from a known scale, recorded as 1 m spanning `ppm` pixels.
    pub fn from_ppm(ppm: f64) -> Result<Self> {
        let mut cal = calibrate(ppm, 1.0)?;
        cal.source = format!("{ppm} px/m given directly");
        Ok(cal)
    }

    pub fn to_metres(&self, pixels: f64) -> f64 {
        pixels / self.pixels_per_metric
    }

    pub fn to_square_metres(&self, square_pixels: f64) -> f64 {
        square_pixels / (self.pixels_per_metric * self.pixels_per_metric)
    }
}
