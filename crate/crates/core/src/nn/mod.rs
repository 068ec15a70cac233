//! Minimal neural-network plumbing over candle: seeded parameters, layers,
//! Adam, checkpoint I/O and image/tensor conversion.

mod adam;
mod layers;
mod params;

use candle_core::{Device, Tensor};

pub use adam::Adam;
pub use layers::{
    bce_with_logits, leaky_relu, log_softmax_channels, sigmoid, softplus, BatchNorm, Conv2d, ConvTranspose2d,
};
pub use params::{read_checkpoint, write_checkpoint, Init, ParamStore};

use crate::error::{Error, Result};
use crate::image::Image;

/// Environment variable selecting the compute device.
pub const DEVICE_ENV: &str = "FLARECAST_DEVICE";

/// Device named by `FLARECAST_DEVICE`: `cpu` (default), `cuda[:N]` or
/// `metal`. Accelerators need candle built with the matching feature.
pub fn device_from_env() -> Result<Device> {
    let requested = std::env::var(DEVICE_ENV).unwrap_or_default();
    match requested.trim() {
        "" | "cpu" => Ok(Device::Cpu),
        "metal" => Ok(Device::new_metal(0)?),
        "cuda" => Ok(Device::new_cuda(0)?),
        s => match s.strip_prefix("cuda:").map(str::parse::<usize>) {
            Some(Ok(ordinal)) => Ok(Device::new_cuda(ordinal)?),
            _ => Err(Error::InvalidConfig(format!("{DEVICE_ENV}: unknown device `{s}`"))),
        },
    }
}

/// Image batch to `(N, 3, H, W)` in `[-1, 1]`; 1-channel inputs are replicated.
pub fn images_to_tensor(images: &[&Image], device: &Device) -> Result<Tensor> {
    let first = images
        .first()
        .ok_or_else(|| Error::InvalidInput("empty image batch".into()))?;
    let (w, h) = first.dims();
    let mut data = Vec::with_capacity(images.len() * 3 * w * h);
    for img in images {
        if img.dims() != (w, h) {
            return Err(Error::dims(
                format!("{w}x{h}"),
                format!("{}x{}", img.width(), img.height()),
            ));
        }
        let rgb = img.to_rgb();
        for c in 0..3 {
            for y in 0..h {
                for x in 0..w {
                    data.push(rgb.get(x, y, c) as f32 / 127.5 - 1.0);
                }
            }
        }
    }
    Ok(Tensor::from_vec(data, (images.len(), 3, h, w), device)?)
}

/// One `(3, H, W)` tensor in `[-1, 1]` back to an 8-bit RGB image.
pub fn tensor_to_image(t: &Tensor) -> Result<Image> {
    let t = t.to_device(&Device::Cpu)?.to_dtype(candle_core::DType::F32)?;
    let (c, h, w) = t.dims3()?;
    if c != 3 {
        return Err(Error::dims("3 channels", c));
    }
    let v: Vec<f32> = t.flatten_all()?.to_vec1()?;
    Ok(Image::from_fn(w, h, 3, |x, y, ch| {
        let z = v[(ch * h + y) * w + x];
        if z.is_finite() {
            ((z + 1.0) * 127.5).round().clamp(0.0, 255.0) as u8
        } else {
            0
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_tensor_round_trip() {
        let img = Image::from_fn(6, 4, 3, |x, y, c| (x * 40 + y * 9 + c * 3) as u8);
        let t = images_to_tensor(&[&img], &Device::Cpu).unwrap();
        assert_eq!(t.dims(), &[1, 3, 4, 6]);
        assert_eq!(tensor_to_image(&t.get(0).unwrap()).unwrap(), img);
    }
}
