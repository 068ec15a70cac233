use candle_core::{Device, Tensor};

use super::spec::GeneratorSpec;
use crate::error::{Error, Result};
use crate::nn::{leaky_relu, BatchNorm, Conv2d, ConvTranspose2d, Init, ParamStore};

const KERNEL: usize = 4;
const SLOPE: f64 = 0.2;

enum Norm {
    None,
    Batch(BatchNorm),
}

impl Norm {
    fn forward(&self, x: Tensor, train: bool) -> Result<Tensor> {
        match self {
            Norm::None => Ok(x),
            // Batch statistics at inference as well, as in the reference design.
            Norm::Batch(bn) => bn.forward(&x, true, train),
        }
    }
}

struct Down {
    conv: Conv2d,
    norm: Norm,
    activate: bool,
}

struct Up {
    conv: ConvTranspose2d,
    norm: Norm,
}

/// U-Net generator mapping `(N, in, H, W)` in `[-1, 1]` to `(N, 3, H, W)` in `[-1, 1]`.
pub struct Generator {
    spec: GeneratorSpec,
    params: ParamStore,
    down: Vec<Down>,
    up: Vec<Up>,
}

impl Generator {
    pub fn new(spec: &GeneratorSpec, seed: u64, device: &Device) -> Result<Self> {
        spec.validate()?;
        let mut ps = ParamStore::new(seed, Init::Normal(0.02), device);
        let n = spec.depth();
        let enc = &spec.encoder_filters;
        let dec = &spec.decoder_filters;

        let mut down = Vec::with_capacity(n);
        for i in 0..n {
            let in_ch = if i == 0 { spec.in_channels } else { enc[i - 1] };
            let inner = i == n - 1;
            let normed = i > 0 && !inner;
            let conv = Conv2d::new(&mut ps, &format!("down{i}"), in_ch, enc[i], KERNEL, 2, 1, !normed)?;
            let norm = if normed {
                Norm::Batch(BatchNorm::new(&mut ps, &format!("down{i}.bn"), enc[i])?)
            } else {
                Norm::None
            };
            down.push(Down {
                conv,
                norm,
                activate: i > 0,
            });
        }

        let mut up = Vec::with_capacity(n);
        for (j, &out_ch) in dec.iter().enumerate() {
            let in_ch = decoder_input_channels(spec, j);
            let last = j == n - 1;
            let conv = ConvTranspose2d::new(&mut ps, &format!("up{j}"), in_ch, out_ch, KERNEL, 2, 1, last)?;
            let norm = if last {
                Norm::None
            } else {
                Norm::Batch(BatchNorm::new(&mut ps, &format!("up{j}.bn"), out_ch)?)
            };
            up.push(Up { conv, norm });
        }
        Ok(Self {
            spec: spec.clone(),
            params: ps,
            down,
            up,
        })
    }

    pub fn spec(&self) -> &GeneratorSpec {
        &self.spec
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    /// `train` folds batch statistics into the running averages.
    pub fn forward(&self, x: &Tensor, train: bool) -> Result<Tensor> {
        let (_, c, h, w) = x.dims4()?;
        if c != self.spec.in_channels {
            return Err(Error::dims(format!("{} channels", self.spec.in_channels), c));
        }
        let stride = 1usize << self.spec.depth();
        if h % stride != 0 || w % stride != 0 {
            return Err(Error::dims(format!("sides divisible by {stride}"), format!("{w}x{h}")));
        }
        let n = self.down.len();
        let mut skips = Vec::with_capacity(n);
        let mut h = x.clone();
        for stage in &self.down {
            let input = if stage.activate { leaky_relu(&h, SLOPE)? } else { h };
            h = stage.norm.forward(stage.conv.forward(&input)?, train)?;
            skips.push(h.clone());
        }
        for (j, stage) in self.up.iter().enumerate() {
            let y = stage.norm.forward(stage.conv.forward(&h.relu()?)?, train)?;
            h = if j + 1 < n && self.spec.skip_connections[j] {
                Tensor::cat(&[&y, &skips[n - 2 - j]], 1)?
            } else {
                y
            };
        }
        Ok(h.tanh()?)
    }
}

fn decoder_input_channels(spec: &GeneratorSpec, j: usize) -> usize {
    let n = spec.depth();
    if j == 0 {
        return spec.encoder_filters[n - 1];
    }
    let skip = if spec.skip_connections[j - 1] {
        spec.encoder_filters[n - 1 - j]
    } else {
        0
    };
    spec.decoder_filters[j - 1] + skip
}
