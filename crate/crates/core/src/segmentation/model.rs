use candle_core::{Device, Tensor};

use super::spec::{SegmentationModelSpec, Variant};
use crate::error::{Error, Result};
use crate::nn::{sigmoid, BatchNorm, Conv2d, ConvTranspose2d, Init, ParamStore};

struct ConvBnRelu {
    conv: Conv2d,
    bn: BatchNorm,
}

impl ConvBnRelu {
    fn new(ps: &mut ParamStore, name: &str, in_ch: usize, out_ch: usize) -> Result<Self> {
        Ok(Self {
            conv: Conv2d::new(ps, name, in_ch, out_ch, 3, 1, 1, false)?,
            bn: BatchNorm::new(ps, &format!("{name}.bn"), out_ch)?,
        })
    }

    fn forward(&self, x: &Tensor, train: bool) -> Result<Tensor> {
        Ok(self.bn.forward(&self.conv.forward(x)?, train, train)?.relu()?)
    }
}

struct DoubleConv(ConvBnRelu, ConvBnRelu);

impl DoubleConv {
    fn new(ps: &mut ParamStore, name: &str, in_ch: usize, out_ch: usize) -> Result<Self> {
        Ok(Self(
            ConvBnRelu::new(ps, &format!("{name}.a"), in_ch, out_ch)?,
            ConvBnRelu::new(ps, &format!("{name}.b"), out_ch, out_ch)?,
        ))
    }

    fn forward(&self, x: &Tensor, train: bool) -> Result<Tensor> {
        self.1.forward(&self.0.forward(x, train)?, train)
    }
}

/// Additive attention gate: `x * sigmoid(psi(relu(W_g g + W_x x)))`.
struct AttentionGate {
    w_g: Conv2d,
    w_x: Conv2d,
    psi: Conv2d,
}

impl AttentionGate {
    fn new(ps: &mut ParamStore, name: &str, gate_ch: usize, skip_ch: usize, inter: usize) -> Result<Self> {
        Ok(Self {
            w_g: Conv2d::new(ps, &format!("{name}.wg"), gate_ch, inter, 1, 1, 0, true)?,
            w_x: Conv2d::new(ps, &format!("{name}.wx"), skip_ch, inter, 1, 1, 0, false)?,
            psi: Conv2d::new(ps, &format!("{name}.psi"), inter, 1, 1, 1, 0, true)?,
        })
    }

    /// Gated skip features and the `(N, 1, H, W)` attention map.
    fn forward(&self, gate: &Tensor, skip: &Tensor) -> Result<(Tensor, Tensor)> {
        let a = (self.w_g.forward(gate)? + self.w_x.forward(skip)?)?.relu()?;
        let alpha = sigmoid(&self.psi.forward(&a)?)?;
        Ok((skip.broadcast_mul(&alpha)?, alpha))
    }
}

struct UpLevel {
    up: ConvTranspose2d,
    gate: Option<AttentionGate>,
    conv: DoubleConv,
}

/// Class scores plus, for the attention variant, one map per skip
/// connection from the finest level to the coarsest.
pub struct SegOutput {
    pub scores: Tensor,
    pub attention: Vec<Tensor>,
}

pub struct SegmentationModel {
    spec: SegmentationModelSpec,
    params: ParamStore,
    down: Vec<DoubleConv>,
    up: Vec<UpLevel>,
    head: Conv2d,
}

impl SegmentationModel {
    pub fn new(spec: &SegmentationModelSpec, seed: u64, device: &Device) -> Result<Self> {
        spec.validate()?;
        let mut ps = ParamStore::new(seed, Init::FanInUniform, device);
        let f = &spec.filters;
        let mut down = Vec::with_capacity(f.len());
        let mut in_ch = spec.in_channels;
        for (i, &c) in f.iter().enumerate() {
            down.push(DoubleConv::new(&mut ps, &format!("enc{i}"), in_ch, c)?);
            in_ch = c;
        }
        let mut up = Vec::with_capacity(f.len() - 1);
        for i in 0..f.len() - 1 {
            let gate = match spec.variant {
                Variant::Unet => None,
                Variant::AttentionUnet => Some(AttentionGate::new(
                    &mut ps,
                    &format!("att{i}"),
                    f[i],
                    f[i],
                    (f[i] / 2).max(1),
                )?),
            };
            up.push(UpLevel {
                up: ConvTranspose2d::new(&mut ps, &format!("up{i}"), f[i + 1], f[i], 2, 2, 0, true)?,
                gate,
                conv: DoubleConv::new(&mut ps, &format!("dec{i}"), 2 * f[i], f[i])?,
            });
        }
        let head = Conv2d::new(&mut ps, "head", f[0], spec.num_classes, 1, 1, 0, true)?;
        Ok(Self {
            spec: spec.clone(),
            params: ps,
            down,
            up,
            head,
        })
    }

    pub fn spec(&self) -> &SegmentationModelSpec {
        &self.spec
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    /// `train` uses and updates batch statistics; otherwise running statistics.
    pub fn forward(&self, x: &Tensor, train: bool) -> Result<SegOutput> {
        let (_, c, h, w) = x.dims4()?;
        if c != self.spec.in_channels {
            return Err(Error::dims(format!("{} channels", self.spec.in_channels), c));
        }
        let s = self.spec.stride();
        if h % s != 0 || w % s != 0 {
            return Err(Error::dims(format!("sides divisible by {s}"), format!("{w}x{h}")));
        }
        let mut skips = Vec::with_capacity(self.down.len());
        let mut hcur = x.clone();
        for (i, level) in self.down.iter().enumerate() {
            if i > 0 {
                hcur = hcur.max_pool2d(2)?;
            }
            hcur = level.forward(&hcur, train)?;
            skips.push(hcur.clone());
        }
        let mut attention = vec![None; self.up.len()];
        for i in (0..self.up.len()).rev() {
            let level = &self.up[i];
            let g = level.up.forward(&hcur)?;
            let skip = match &level.gate {
                Some(gate) => {
                    let (gated, alpha) = gate.forward(&g, &skips[i])?;
                    attention[i] = Some(alpha);
                    gated
                }
                None => skips[i].clone(),
            };
            hcur = level.conv.forward(&Tensor::cat(&[&skip, &g], 1)?, train)?;
        }
        Ok(SegOutput {
            scores: self.head.forward(&hcur)?,
            attention: attention.into_iter().flatten().collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use candle_core::DType;

    fn expected_params(spec: &SegmentationModelSpec) -> usize {
        let f = &spec.filters;
        let double = |i: usize, o: usize| i * o * 9 + 2 * o + o * o * 9 + 2 * o;
        let mut total = 0;
        let mut in_ch = spec.in_channels;
        for &c in f {
            total += double(in_ch, c);
            in_ch = c;
        }
        for i in 0..f.len() - 1 {
            total += f[i + 1] * f[i] * 4 + f[i];
            total += double(2 * f[i], f[i]);
            if spec.variant == Variant::AttentionUnet {
                let m = (f[i] / 2).max(1);
                total += f[i] * m + m + f[i] * m + m + 1;
            }
        }
        total + f[0] * spec.num_classes + spec.num_classes
    }

    #[test]
    fn shape_contract() {
        for variant in [Variant::Unet, Variant::AttentionUnet] {
            let spec = SegmentationModelSpec::new(variant, &[4, 8, 8], 4);
            let m = SegmentationModel::new(&spec, 0, &Device::Cpu).unwrap();
            let x = Tensor::randn(0f32, 1.0, (2, 3, 16, 24), &Device::Cpu).unwrap();
            let out = m.forward(&x, false).unwrap();
            assert_eq!(out.scores.dims(), &[2, 4, 16, 24]);
            let expected_maps = if variant == Variant::Unet { 0 } else { 2 };
            assert_eq!(out.attention.len(), expected_maps);
            for a in &out.attention {
                let v: Vec<f32> = a.flatten_all().unwrap().to_vec1().unwrap();
                assert!(v.iter().all(|&z| (0.0..=1.0).contains(&z)));
            }
        }
    }

    #[test]
    fn parameter_counts() {
        let plain = SegmentationModelSpec::new(Variant::Unet, &[4, 8, 16], 4);
        let att = SegmentationModelSpec::new(Variant::AttentionUnet, &[4, 8, 16], 4);
        let p = SegmentationModel::new(&plain, 0, &Device::Cpu)
            .unwrap()
            .params()
            .num_trainable();
        let a = SegmentationModel::new(&att, 0, &Device::Cpu)
            .unwrap()
            .params()
            .num_trainable();
        assert_eq!(p, expected_params(&plain));
        assert_eq!(a, expected_params(&att));
        assert!(a > p);
    }

    #[test]
    fn indivisible_input_rejected() {
        let spec = SegmentationModelSpec::new(Variant::Unet, &[4, 8, 8], 2);
        let m = SegmentationModel::new(&spec, 0, &Device::Cpu).unwrap();
        let x = Tensor::zeros((1, 3, 10, 16), DType::F32, &Device::Cpu).unwrap();
        assert!(m.forward(&x, false).is_err());
    }
}
