use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;

/// Target canvas plus the zero padding that was applied to reach it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CanvasSpec {
    pub width: usize,
    pub height: usize,
    #[serde(default)]
    pub pad_left: usize,
    #[serde(default)]
    pub pad_right: usize,
    #[serde(default)]
    pub pad_top: usize,
    #[serde(default)]
    pub pad_bottom: usize,
}

impl CanvasSpec {
    /// Canvas with no padding recorded yet.
    pub const fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            pad_left: 0,
            pad_right: 0,
            pad_top: 0,
            pad_bottom: 0,
        }
    }

    /// Translator input size: 512 wide, 1024 high.
    pub const fn translator_default() -> Self {
        Self::new(512, 1024)
    }

    /// Centered padding for an image of the given size; odd remainders go
    /// to the right and bottom.
    pub fn fitted(&self, image_w: usize, image_h: usize) -> Result<Self> {
        if image_w > self.width || image_h > self.height {
            return Err(Error::CanvasTooSmall {
                image_w,
                image_h,
                canvas_w: self.width,
                canvas_h: self.height,
            });
        }
        let dx = self.width - image_w;
        let dy = self.height - image_h;
        Ok(Self {
            width: self.width,
            height: self.height,
            pad_left: dx / 2,
            pad_right: dx - dx / 2,
            pad_top: dy / 2,
            pad_bottom: dy - dy / 2,
        })
    }

    pub fn interior_width(&self) -> usize {
        self.width - self.pad_left - self.pad_right
    }

    pub fn interior_height(&self) -> usize {
        self.height - self.pad_top - self.pad_bottom
    }
}

/// Centers `image` on a zero canvas. Never rescales.
pub fn pad_to_canvas(image: &Image, canvas: &CanvasSpec) -> Result<(Image, CanvasSpec)> {
    let spec = canvas.fitted(image.width(), image.height())?;
    let c = image.channels();
    let mut out = Image::zeros(spec.width, spec.height, c);
    let row_len = image.width() * c;
    for y in 0..image.height() {
        let src = &image.data()[y * row_len..(y + 1) * row_len];
        let start = ((y + spec.pad_top) * spec.width + spec.pad_left) * c;
        out.data_mut()[start..start + row_len].copy_from_slice(src);
    }
    Ok((out, spec))
}

/// Inverse of [`pad_to_canvas`].
pub fn remove_padding(image: &Image, canvas: &CanvasSpec) -> Result<Image> {
    if image.width() != canvas.width || image.height() != canvas.height {
        return Err(Error::dims(
            format!("{}x{} canvas", canvas.width, canvas.height),
            format!("{}x{}", image.width(), image.height()),
        ));
    }
    if canvas.pad_left + canvas.pad_right > canvas.width || canvas.pad_top + canvas.pad_bottom > canvas.height {
        return Err(Error::InvalidInput("padding exceeds canvas".into()));
    }
    image.crop(
        canvas.pad_left,
        canvas.pad_top,
        canvas.interior_width(),
        canvas.interior_height(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn thermal_camera_frame_on_translator_canvas() {
        let img = Image::from_fn(384, 288, 3, |x, y, c| ((x + y + c) % 251) as u8 + 1);
        let (padded, spec) = pad_to_canvas(&img, &CanvasSpec::translator_default()).unwrap();
        assert_eq!((padded.width(), padded.height()), (512, 1024));
        assert_eq!((spec.pad_left, spec.pad_right), (64, 64));
        assert_eq!((spec.pad_top, spec.pad_bottom), (368, 368));
        assert_eq!(padded.get(0, 0, 0), 0);
        assert_eq!(padded.get(64, 368, 0), img.get(0, 0, 0));
        assert_eq!(remove_padding(&padded, &spec).unwrap(), img);
    }

    #[test]
    fn odd_remainder_goes_right_and_bottom() {
        let spec = CanvasSpec::new(10, 7).fitted(5, 4).unwrap();
        assert_eq!(
            (spec.pad_left, spec.pad_right, spec.pad_top, spec.pad_bottom),
            (2, 3, 1, 2)
        );
    }

    #[test]
    fn exact_fit_has_no_padding() {
        let img = Image::filled(8, 6, 1, 3);
        let (padded, spec) = pad_to_canvas(&img, &CanvasSpec::new(8, 6)).unwrap();
        assert_eq!(spec, CanvasSpec::new(8, 6));
        assert_eq!(padded, img);
        assert_eq!(remove_padding(&padded, &spec).unwrap(), img);
    }

    #[test]
    fn oversized_image_rejected() {
        let img = Image::zeros(9, 4, 1);
        assert!(matches!(
            pad_to_canvas(&img, &CanvasSpec::new(8, 8)),
            Err(Error::CanvasTooSmall { .. })
        ));
    }

    #[test]
    fn remove_padding_checks_dimensions() {
        let spec = CanvasSpec::new(8, 8).fitted(4, 4).unwrap();
        assert!(remove_padding(&Image::zeros(7, 8, 1), &spec).is_err());
    }

    proptest! {
        #[test]
        fn crop_inverts_pad(w in 1usize..24, h in 1usize..24, extra_w in 0usize..9, extra_h in 0usize..9,
                            ch in prop_oneof![Just(1usize), Just(3usize)], seed in any::<u64>()) {
            let img = Image::from_fn(w, h, ch, |x, y, c| (seed.wrapping_mul(x as u64 * 31 + y as u64 * 17 + c as u64 + 1) >> 56) as u8);
            let (padded, spec) = pad_to_canvas(&img, &CanvasSpec::new(w + extra_w, h + extra_h)).unwrap();
            prop_assert_eq!(remove_padding(&padded, &spec).unwrap(), img);
        }
    }
}
