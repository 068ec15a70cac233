use serde::{Deserialize, Serialize};

use super::align::Affine2;
use super::frames::{validate_stream, FrameRecord};
use crate::error::{Error, Result};

/// Aligned visible/IR pair: the unit of training and evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample {
    pub visible: FrameRecord,
    pub ir: FrameRecord,
    /// `|visible.timestamp - ir.timestamp|` in seconds.
    pub time_offset: f64,
    /// Maps visible pixel coordinates onto IR pixel coordinates.
    pub alignment: Affine2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Visible,
    Ir,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairingOptions {
    /// Maximum accepted `|dt|` in seconds.
    pub tolerance: f64,
    /// Seconds added to every high-rate timestamp before matching.
    pub start_offset: f64,
    /// Which modality the low-rate (reference) stream carries.
    pub low_rate: Modality,
}

impl PairingOptions {
    pub fn new(tolerance: f64) -> Self {
        Self {
            tolerance,
            start_offset: 0.0,
            low_rate: Modality::Ir,
        }
    }
}

/// Half the frame period of the reference stream: nearest-frame matching
/// without letting one high-rate frame serve two neighbours.
pub fn default_tolerance(low_rate_fps: f64) -> f64 {
    0.5 / low_rate_fps
}

/// Pairs every low-rate (IR) frame with the high-rate (visible) frame of
/// nearest timestamp, dropping matches beyond `tolerance`.
pub fn pair_by_timestamp(
    low_rate: &[FrameRecord],
    high_rate: &[FrameRecord],
    tolerance: f64,
) -> Result<Vec<PairedSample>> {
    pair_streams(low_rate, high_rate, &PairingOptions::new(tolerance))
}

pub fn pair_streams(
    low_rate: &[FrameRecord],
    high_rate: &[FrameRecord],
    opts: &PairingOptions,
) -> Result<Vec<PairedSample>> {
    if low_rate.is_empty() {
        return Err(Error::EmptyStream("low-rate stream has no frames".into()));
    }
    if high_rate.is_empty() {
        return Err(Error::EmptyStream("high-rate stream has no frames".into()));
    }
    if !(opts.tolerance >= 0.0) {
        return Err(Error::InvalidConfig("pairing tolerance must be >= 0".into()));
    }
    let mut low = low_rate.to_vec();
    let mut high = high_rate.to_vec();
    validate_stream(&mut low)?;
    validate_stream(&mut high)?;
    let shifted: Vec<f64> = high.iter().map(|f| f.timestamp + opts.start_offset).collect();

    let mut out = Vec::new();
    let mut cursor = 0usize;
    for reference in &low {
        let t = reference.timestamp;
        // advance while the next candidate is strictly closer; ties keep the earlier frame
        while cursor + 1 < shifted.len() && (shifted[cursor + 1] - t).abs() < (shifted[cursor] - t).abs() {
            cursor += 1;
        }
        let dt = (shifted[cursor] - t).abs();
        if dt > opts.tolerance {
            continue;
        }
        let matched = high[cursor].clone();
        let (visible, ir) = match opts.low_rate {
            Modality::Ir => (matched, reference.clone()),
            Modality::Visible => (reference.clone(), matched),
        };
        out.push(PairedSample {
            visible,
            ir,
            time_offset: dt,
            alignment: Affine2::identity(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::Image;

    fn stream(id: &str, times: &[f64]) -> Vec<FrameRecord> {
        times
            .iter()
            .enumerate()
            .map(|(i, &t)| FrameRecord::new(id, i, t, Image::zeros(1, 1, 1)))
            .collect()
    }

    /// Exhaustive scan used as the matching oracle.
    fn nearest(times: &[f64], t: f64) -> usize {
        let mut best = 0;
        for (i, &c) in times.iter().enumerate() {
            if (c - t).abs() < (times[best] - t).abs() {
                best = i;
            }
        }
        best
    }

    #[test]
    fn ir_frame_matches_nearest_visible() {
        let vis_times: Vec<f64> = (0..30).map(|k| k as f64 / 30.0).collect();
        let ir = stream("ir", &[0.111]);
        let vis = stream("vis", &vis_times);
        assert_eq!(nearest(&vis_times, 0.111), 3);
        let pairs = pair_by_timestamp(&ir, &vis, default_tolerance(9.0)).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].visible.index, 3);
        assert!((pairs[0].time_offset - 0.011).abs() < 1e-9);
    }

    #[test]
    fn identical_single_frames() {
        let pairs = pair_by_timestamp(&stream("ir", &[0.0]), &stream("vis", &[0.0]), 0.1).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].time_offset, 0.0);
    }

    #[test]
    fn out_of_tolerance_is_dropped() {
        let pairs = pair_by_timestamp(&stream("ir", &[5.0]), &stream("vis", &[0.0, 0.5, 1.0]), 0.5).unwrap();
        assert!(pairs.is_empty());
    }

    #[test]
    fn empty_streams_rejected() {
        assert!(matches!(
            pair_by_timestamp(&[], &stream("v", &[0.0]), 0.1),
            Err(Error::EmptyStream(_))
        ));
        assert!(matches!(
            pair_by_timestamp(&stream("i", &[0.0]), &[], 0.1),
            Err(Error::EmptyStream(_))
        ));
    }

    #[test]
    fn start_offset_shifts_high_rate_clock() {
        let ir = stream("ir", &[1.0]);
        let vis = stream("vis", &[0.0, 0.5, 1.0]);
        let mut opts = PairingOptions::new(0.05);
        opts.start_offset = 0.5;
        let pairs = pair_streams(&ir, &vis, &opts).unwrap();
        assert_eq!(pairs[0].visible.index, 1);
    }

    #[test]
    fn matches_exhaustive_scan() {
        let vis_times: Vec<f64> = (0..300).map(|k| k as f64 / 29.97 + 0.004).collect();
        let ir_times: Vec<f64> = (0..90).map(|k| k as f64 / 9.0 + 0.013).collect();
        let pairs = pair_by_timestamp(&stream("ir", &ir_times), &stream("v", &vis_times), 1.0).unwrap();
        assert_eq!(pairs.len(), ir_times.len());
        for (p, &t) in pairs.iter().zip(&ir_times) {
            assert_eq!(p.visible.index, nearest(&vis_times, t));
        }
    }
}
