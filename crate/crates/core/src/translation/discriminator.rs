use candle_core::{Device, Tensor};

use super::spec::DiscriminatorSpec;
use crate::error::{Error, Result};
use crate::nn::{leaky_relu, BatchNorm, Conv2d, Init, ParamStore};

const SLOPE: f64 = 0.2;

struct Stage {
    conv: Conv2d,
    norm: Option<BatchNorm>,
}

/// Patch discriminator over `(condition, candidate)` concatenated on channels.
/// Emits `(N, 1, h, w)` logits, one per patch.
pub struct Discriminator {
    spec: DiscriminatorSpec,
    params: ParamStore,
    stages: Vec<Stage>,
    score: Conv2d,
}

impl Discriminator {
    pub fn new(spec: &DiscriminatorSpec, seed: u64, device: &Device) -> Result<Self> {
        spec.validate()?;
        let mut ps = ParamStore::new(seed, Init::Normal(0.02), device);
        let mut stages = Vec::with_capacity(spec.filters.len());
        let mut in_ch = spec.in_channels;
        for (i, (&f, &s)) in spec.filters.iter().zip(&spec.strides).enumerate() {
            let normed = i > 0;
            let conv = Conv2d::new(
                &mut ps,
                &format!("d{i}"),
                in_ch,
                f,
                DiscriminatorSpec::KERNEL,
                s,
                1,
                !normed,
            )?;
            let norm = if normed {
                Some(BatchNorm::new(&mut ps, &format!("d{i}.bn"), f)?)
            } else {
                None
            };
            stages.push(Stage { conv, norm });
            in_ch = f;
        }
        let score = Conv2d::new(&mut ps, "score", in_ch, 1, DiscriminatorSpec::SCORE_KERNEL, 1, 1, true)?;
        Ok(Self {
            spec: spec.clone(),
            params: ps,
            stages,
            score,
        })
    }

    pub fn spec(&self) -> &DiscriminatorSpec {
        &self.spec
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn forward(&self, condition: &Tensor, candidate: &Tensor, train: bool) -> Result<Tensor> {
        if condition.dims() != candidate.dims() {
            return Err(Error::dims(
                format!("{:?}", condition.dims()),
                format!("{:?}", candidate.dims()),
            ));
        }
        let x = Tensor::cat(&[condition, candidate], 1)?;
        let c = x.dim(1)?;
        if c != self.spec.in_channels {
            return Err(Error::dims(format!("{} channels", self.spec.in_channels), c));
        }
        let mut h = x;
        for stage in &self.stages {
            h = stage.conv.forward(&h)?;
            if let Some(bn) = &stage.norm {
                h = bn.forward(&h, true, train)?;
            }
            h = leaky_relu(&h, SLOPE)?;
        }
        self.score.forward(&h)
    }
}
