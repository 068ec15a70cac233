//! Flame length and area from a radiation mask: crack-edge contour of the
//! largest flame component, nozzle-to-tip distance and polygon area, scaled
//! by a pixels-per-metre calibration.

mod calibration;
mod contour;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use calibration::{calibrate, CalibrationInfo};
pub use contour::{extract_contour, largest_component, shoelace_area, Contour};

use crate::error::{Error, Result};
use crate::point::Point;
use crate::segmentation::RadiationMask;

/// Fuel release point in mask pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NozzleReference {
    pub x: i64,
    pub y: i64,
}

impl NozzleReference {
    pub fn new(x: i64, y: i64) -> Self {
        Self { x, y }
    }

    pub fn point(self) -> Point {
        Point::new(self.x, self.y)
    }

    /// Inclusive of the far edges, where contour corners can also sit.
    pub fn check_bounds(self, width: usize, height: usize) -> Result<()> {
        if self.x < 0 || self.y < 0 || self.x > width as i64 || self.y > height as i64 {
            return Err(Error::InvalidInput(format!(
                "nozzle ({}, {}) outside {width}x{height} image",
                self.x, self.y
            )));
        }
        Ok(())
    }
}

impl std::str::FromStr for NozzleReference {
    type Err = Error;

    /// `"x,y"`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("nozzle must be `x,y`, got `{s}`"));
        let (x, y) = s.split_once(',').ok_or_else(bad)?;
        Ok(Self::new(
            x.trim().parse().map_err(|_| bad())?,
            y.trim().parse().map_err(|_| bad())?,
        ))
    }
}

/// Euclidean nozzle-to-topmost distance in metres.
pub fn flame_length(contour: &Contour, nozzle: NozzleReference, cal: &CalibrationInfo) -> Result<f64> {
    nozzle.check_bounds(contour.image_width, contour.image_height)?;
    let top = contour
        .topmost()
        .ok_or_else(|| Error::InvalidInput("empty contour".into()))?;
    Ok(cal.to_metres(nozzle.point().distance(top)))
}

/// Contour polygon area in square metres; degenerate contours give 0.
pub fn flame_area(contour: &Contour, cal: &CalibrationInfo) -> f64 {
    if contour.points.len() < 3 {
        log::warn!("degenerate contour with {} points; area is 0", contour.points.len());
        return 0.0;
    }
    cal.to_square_metres(contour.area_px())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlameGeometry {
    pub total_length_m: f64,
    pub area_m2: f64,
    pub contour: Contour,
    pub topmost_point: Point,
}

pub fn characterize(mask: &RadiationMask, nozzle: NozzleReference, cal: &CalibrationInfo) -> Result<FlameGeometry> {
    let contour = extract_contour(mask)?;
    let total_length_m = flame_length(&contour, nozzle, cal)?;
    let area_m2 = flame_area(&contour, cal);
    let topmost_point = contour.topmost().expect("extracted contours are nonempty");
    Ok(FlameGeometry {
        total_length_m,
        area_m2,
        contour,
        topmost_point,
    })
}

/// One line of `geometry.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryRow {
    pub frame_id: String,
    pub length_m: f64,
    pub area_m2: f64,
    pub topmost_x: i64,
    pub topmost_y: i64,
}

impl GeometryRow {
    pub fn new(frame_id: impl Into<String>, g: &FlameGeometry) -> Self {
        Self {
            frame_id: frame_id.into(),
            length_m: g.total_length_m,
            area_m2: g.area_m2,
            topmost_x: g.topmost_point.x,
            topmost_y: g.topmost_point.y,
        }
    }
}

pub fn write_geometry_csv(path: &Path, rows: &[GeometryRow]) -> Result<()> {
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

pub fn read_geometry_csv(path: &Path) -> Result<Vec<GeometryRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<Vec<GeometryRow>, _>>()?)
}
