use candle_core::{Tensor, Var};

use super::params::ParamStore;
use crate::error::Result;

pub struct Conv2d {
    weight: Tensor,
    bias: Option<Tensor>,
    stride: usize,
    padding: usize,
}

impl Conv2d {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        ps: &mut ParamStore,
        name: &str,
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        bias: bool,
    ) -> Result<Self> {
        let fan_in = in_ch * kernel * kernel;
        let weight = ps.kernel(&format!("{name}.weight"), &[out_ch, in_ch, kernel, kernel], fan_in)?;
        let bias = if bias {
            Some(ps.bias(&format!("{name}.bias"), out_ch, fan_in)?)
        } else {
            None
        };
        Ok(Self {
            weight,
            bias,
            stride,
            padding,
        })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let y = x.conv2d(&self.weight, self.padding, self.stride, 1, 1)?;
        add_channel_bias(y, self.bias.as_ref())
    }
}

/// Transposed convolution; kernel layout `(in, out, k, k)`.
pub struct ConvTranspose2d {
    weight: Tensor,
    bias: Option<Tensor>,
    stride: usize,
    padding: usize,
}

impl ConvTranspose2d {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        ps: &mut ParamStore,
        name: &str,
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        bias: bool,
    ) -> Result<Self> {
        let fan_in = out_ch * kernel * kernel;
        let weight = ps.kernel(&format!("{name}.weight"), &[in_ch, out_ch, kernel, kernel], fan_in)?;
        let bias = if bias {
            Some(ps.bias(&format!("{name}.bias"), out_ch, fan_in)?)
        } else {
            None
        };
        Ok(Self {
            weight,
            bias,
            stride,
            padding,
        })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let y = x.conv_transpose2d(&self.weight, self.padding, 0, self.stride, 1)?;
        add_channel_bias(y, self.bias.as_ref())
    }
}

fn add_channel_bias(y: Tensor, bias: Option<&Tensor>) -> Result<Tensor> {
    match bias {
        Some(b) => Ok(y.broadcast_add(&b.reshape((1, b.dim(0)?, 1, 1))?)?),
        None => Ok(y),
    }
}

/// Spatial batch normalization with learned affine parameters.
pub struct BatchNorm {
    gamma: Tensor,
    beta: Tensor,
    running_mean: Var,
    running_var: Var,
    momentum: f64,
    eps: f64,
}

impl BatchNorm {
    pub fn new(ps: &mut ParamStore, name: &str, channels: usize) -> Result<Self> {
        Ok(Self {
            gamma: ps.constant(&format!("{name}.weight"), channels, 1.0)?,
            beta: ps.constant(&format!("{name}.bias"), channels, 0.0)?,
            running_mean: ps.buffer(&format!("{name}.running_mean"), channels, 0.0)?,
            running_var: ps.buffer(&format!("{name}.running_var"), channels, 1.0)?,
            momentum: 0.1,
            eps: 1e-5,
        })
    }

    /// `batch_stats` normalizes with statistics of `x` itself; `update`
    /// additionally folds them into the running averages.
    pub fn forward(&self, x: &Tensor, batch_stats: bool, update: bool) -> Result<Tensor> {
        let c = self.gamma.dim(0)?;
        let (mean, var) = if batch_stats {
            let mean = x.mean_keepdim(0)?.mean_keepdim(2)?.mean_keepdim(3)?;
            let centered = x.broadcast_sub(&mean)?;
            let var = centered.sqr()?.mean_keepdim(0)?.mean_keepdim(2)?.mean_keepdim(3)?;
            if update {
                let m = self.momentum;
                let rm = ((self.running_mean.as_tensor() * (1.0 - m))? + (mean.flatten_all()?.detach() * m)?)?;
                let rv = ((self.running_var.as_tensor() * (1.0 - m))? + (var.flatten_all()?.detach() * m)?)?;
                self.running_mean.set(&rm)?;
                self.running_var.set(&rv)?;
            }
            (mean, var)
        } else {
            (
                self.running_mean.as_tensor().reshape((1, c, 1, 1))?,
                self.running_var.as_tensor().reshape((1, c, 1, 1))?,
            )
        };
        let normed = x.broadcast_sub(&mean)?.broadcast_div(&(var + self.eps)?.sqrt()?)?;
        Ok(normed
            .broadcast_mul(&self.gamma.reshape((1, c, 1, 1))?)?
            .broadcast_add(&self.beta.reshape((1, c, 1, 1))?)?)
    }
}

pub fn leaky_relu(x: &Tensor, slope: f64) -> Result<Tensor> {
    Ok(x.maximum(&(x * slope)?)?)
}

/// Numerically stable `log(1 + exp(x))`.
pub fn softplus(x: &Tensor) -> Result<Tensor> {
    let pos = x.relu()?;
    let tail = (x.abs()?.neg()?.exp()? + 1.0)?.log()?;
    Ok((pos + tail)?)
}

/// Mean binary cross-entropy on logits against a constant label.
pub fn bce_with_logits(logits: &Tensor, target: f64) -> Result<Tensor> {
    // max(x,0) - x*z + log(1 + exp(-|x|))
    let per = (softplus(logits)? - (logits * target)?)?;
    Ok(per.mean_all()?)
}

pub fn sigmoid(x: &Tensor) -> Result<Tensor> {
    Ok(candle_nn::ops::sigmoid(x)?)
}

pub fn log_softmax_channels(x: &Tensor) -> Result<Tensor> {
    let max = x.max_keepdim(1)?.detach();
    let shifted = x.broadcast_sub(&max)?;
    let lse = shifted.exp()?.sum_keepdim(1)?.log()?;
    Ok(shifted.broadcast_sub(&lse)?)
}
