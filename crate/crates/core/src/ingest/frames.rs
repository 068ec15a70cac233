use std::path::{Path, PathBuf};

use image::DynamicImage;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;

/// One frame of a camera stream.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub source_id: String,
    pub index: usize,
    /// Seconds from stream start.
    pub timestamp: f64,
    pub image: Image,
    /// Where the frame was read from, when it came from disk.
    pub path: Option<PathBuf>,
}

impl FrameRecord {
    pub fn new(source_id: impl Into<String>, index: usize, timestamp: f64, image: Image) -> Self {
        Self {
            source_id: source_id.into(),
            index,
            timestamp,
            image,
            path: None,
        }
    }
}

/// Row of a stream index file: `index,timestamp_seconds,filename`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamIndexRow {
    pub index: usize,
    pub timestamp_seconds: f64,
    pub filename: String,
}

pub const STREAM_INDEX_FILE: &str = "index.csv";

/// Orders frames by index and checks that timestamps strictly increase and
/// dimensions stay constant. Errors name the offending frame index.
pub fn validate_stream(frames: &mut [FrameRecord]) -> Result<()> {
    let Some(first) = frames.first() else {
        return Err(Error::EmptyStream("no frames".into()));
    };
    let stream = first.source_id.clone();
    frames.sort_by_key(|f| f.index);
    let dims = (frames[0].image.width(), frames[0].image.height());
    for i in 0..frames.len() {
        let f = &frames[i];
        if !f.timestamp.is_finite() {
            return Err(Error::NonMonotonicTimestamps { stream, index: f.index });
        }
        if i > 0 && f.timestamp <= frames[i - 1].timestamp {
            return Err(Error::NonMonotonicTimestamps { stream, index: f.index });
        }
        if !f.image.is_empty() && (f.image.width(), f.image.height()) != dims {
            return Err(Error::dims(
                format!("{}x{} in stream `{stream}`", dims.0, dims.1),
                format!("{}x{} at frame {}", f.image.width(), f.image.height(), f.index),
            ));
        }
    }
    Ok(())
}

/// Loads a directory holding PNG frames and an `index.csv`.
///
/// 16-bit frames are min-max normalized to 8 bits using the extrema of the
/// whole sequence so relative intensities are comparable across frames.
pub fn load_stream(dir: &Path, source_id: &str) -> Result<Vec<FrameRecord>> {
    let index_path = dir.join(STREAM_INDEX_FILE);
    let mut reader = csv::Reader::from_path(&index_path)?;
    let rows: Vec<StreamIndexRow> = reader.deserialize().collect::<Result<_, _>>()?;
    if rows.is_empty() {
        return Err(Error::EmptyStream(format!("{}", index_path.display())));
    }

    enum Raw {
        Eight(Image),
        Sixteen {
            w: usize,
            h: usize,
            c: usize,
            data: Vec<u16>,
        },
    }

    let mut raws = Vec::with_capacity(rows.len());
    for row in &rows {
        let path = dir.join(&row.filename);
        let img = image::open(&path)?;
        let raw = match img {
            DynamicImage::ImageLuma16(b) => {
                let (w, h) = b.dimensions();
                Raw::Sixteen {
                    w: w as usize,
                    h: h as usize,
                    c: 1,
                    data: b.into_raw(),
                }
            }
            DynamicImage::ImageRgb16(_) | DynamicImage::ImageRgba16(_) => {
                let b = img.to_rgb16();
                let (w, h) = b.dimensions();
                Raw::Sixteen {
                    w: w as usize,
                    h: h as usize,
                    c: 3,
                    data: b.into_raw(),
                }
            }
            other => Raw::Eight(Image::from_dynamic(other)),
        };
        raws.push((row, path, raw));
    }

    let (lo, hi) = raws
        .iter()
        .filter_map(|(_, _, r)| match r {
            Raw::Sixteen { data, .. } => Some(data),
            Raw::Eight(_) => None,
        })
        .flatten()
        .fold((u16::MAX, u16::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)));

    let mut frames = Vec::with_capacity(raws.len());
    for (row, path, raw) in raws {
        let image = match raw {
            Raw::Eight(img) => img,
            Raw::Sixteen { w, h, c, data } => Image::new(w, h, c, normalize_u16(&data, lo, hi))?,
        };
        frames.push(FrameRecord {
            source_id: source_id.to_string(),
            index: row.index,
            timestamp: row.timestamp_seconds,
            image,
            path: Some(path),
        });
    }
    validate_stream(&mut frames)?;
    Ok(frames)
}

/// Min-max maps `[lo, hi]` onto `[0, 255]`; a flat range maps to 0.
pub fn normalize_u16(data: &[u16], lo: u16, hi: u16) -> Vec<u8> {
    if hi <= lo {
        return vec![0; data.len()];
    }
    let span = (hi - lo) as f64;
    data.iter()
        .map(|&v| ((v.saturating_sub(lo)) as f64 / span * 255.0).round() as u8)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(index: usize, t: f64) -> FrameRecord {
        FrameRecord::new("s", index, t, Image::zeros(2, 2, 1))
    }

    #[test]
    fn storage_order_is_irrelevant() {
        let mut frames = vec![frame(2, 0.2), frame(0, 0.0), frame(1, 0.1)];
        validate_stream(&mut frames).unwrap();
        assert_eq!(frames.iter().map(|f| f.index).collect::<Vec<_>>(), [0, 1, 2]);
    }

    #[test]
    fn non_monotonic_names_index() {
        let mut frames = vec![frame(0, 0.0), frame(1, 0.3), frame(2, 0.2)];
        match validate_stream(&mut frames) {
            Err(Error::NonMonotonicTimestamps { index, .. }) => assert_eq!(index, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sixteen_bit_stream_is_normalized_per_sequence() {
        let dir = tempfile::tempdir().unwrap();
        let values: [[u16; 4]; 2] = [[1000, 1500, 2000, 2000], [3000, 3000, 1000, 1000]];
        let mut csv = String::from("index,timestamp_seconds,filename\n");
        for (i, v) in values.iter().enumerate() {
            let buf = image::ImageBuffer::<image::Luma<u16>, _>::from_raw(2, 2, v.to_vec()).unwrap();
            let name = format!("f{i}.png");
            buf.save(dir.path().join(&name)).unwrap();
            csv.push_str(&format!("{i},{},{name}\n", i as f64 * 0.25));
        }
        std::fs::write(dir.path().join(STREAM_INDEX_FILE), csv).unwrap();
        let frames = load_stream(dir.path(), "ir").unwrap();
        assert_eq!(frames[0].image.data(), &[0, 64, 128, 128]);
        assert_eq!(frames[1].image.data(), &[255, 255, 0, 0]);
    }
}
