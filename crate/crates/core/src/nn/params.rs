use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use candle_core::{DType, Device, Tensor, Var};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};

use crate::error::{Error, Result};

/// Weight initialization scheme for convolution kernels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Init {
    /// `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
    FanInUniform,
    /// `N(0, std)`, the usual choice for GAN weights.
    Normal(f64),
}

/// Named parameters with deterministic, seed-driven initialization.
///
/// Trainable tensors and non-trainable buffers (running statistics) are
/// kept apart so optimizers never touch buffers. Iteration order is by
/// name.
pub struct ParamStore {
    device: Device,
    dtype: DType,
    rng: ChaCha8Rng,
    init: Init,
    trainable: BTreeMap<String, Var>,
    buffers: BTreeMap<String, Var>,
}

impl ParamStore {
    pub fn new(seed: u64, init: Init, device: &Device) -> Self {
        Self {
            device: device.clone(),
            dtype: DType::F32,
            rng: ChaCha8Rng::seed_from_u64(seed),
            init,
            trainable: BTreeMap::new(),
            buffers: BTreeMap::new(),
        }
    }

    pub fn device(&self) -> &Device {
        &self.device
    }

    fn insert(&mut self, name: &str, values: Vec<f32>, shape: &[usize], trainable: bool) -> Result<Tensor> {
        let map = if trainable {
            &mut self.trainable
        } else {
            &mut self.buffers
        };
        if map.contains_key(name) {
            return Err(Error::InvalidConfig(format!("duplicate parameter `{name}`")));
        }
        let t = Tensor::from_vec(values, shape, &self.device)?.to_dtype(self.dtype)?;
        let var = Var::from_tensor(&t)?;
        let out = var.as_tensor().clone();
        map.insert(name.to_string(), var);
        Ok(out)
    }

    /// Kernel with `shape[1..]` as the fan-in dimensions.
    pub fn kernel(&mut self, name: &str, shape: &[usize], fan_in: usize) -> Result<Tensor> {
        let n: usize = shape.iter().product();
        let values: Vec<f32> = match self.init {
            Init::FanInUniform => {
                let bound = 1.0 / (fan_in as f64).sqrt();
                let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
                (0..n).map(|_| dist.sample(&mut self.rng) as f32).collect()
            }
            Init::Normal(std) => {
                let dist = Normal::new(0.0, std).map_err(|e| Error::InvalidConfig(e.to_string()))?;
                (0..n).map(|_| dist.sample(&mut self.rng) as f32).collect()
            }
        };
        self.insert(name, values, shape, true)
    }

    pub fn bias(&mut self, name: &str, len: usize, fan_in: usize) -> Result<Tensor> {
        let values: Vec<f32> = match self.init {
            Init::FanInUniform => {
                let bound = 1.0 / (fan_in as f64).sqrt();
                let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
                (0..len).map(|_| dist.sample(&mut self.rng) as f32).collect()
            }
            Init::Normal(_) => vec![0.0; len],
        };
        self.insert(name, values, &[len], true)
    }

    pub fn constant(&mut self, name: &str, len: usize, value: f32) -> Result<Tensor> {
        self.insert(name, vec![value; len], &[len], true)
    }

    pub fn buffer(&mut self, name: &str, len: usize, value: f32) -> Result<Var> {
        self.insert(name, vec![value; len], &[len], false)?;
        Ok(self.buffers[name].clone())
    }

    pub fn trainable_vars(&self) -> Vec<Var> {
        self.trainable.values().cloned().collect()
    }

    /// Number of trainable scalars.
    pub fn num_trainable(&self) -> usize {
        self.trainable.values().map(|v| v.elem_count()).sum()
    }

    /// All tensors under `prefix.`; buffers additionally under `buffer.`.
    pub fn named_tensors(&self, prefix: &str) -> Vec<(String, Tensor)> {
        let mut out: Vec<(String, Tensor)> = self
            .trainable
            .iter()
            .map(|(k, v)| (format!("{prefix}.{k}"), v.as_tensor().clone()))
            .collect();
        out.extend(
            self.buffers
                .iter()
                .map(|(k, v)| (format!("{prefix}.buffer.{k}"), v.as_tensor().clone())),
        );
        out
    }

    /// Overwrites every parameter and buffer from `tensors`; shapes must match.
    pub fn load_tensors(&self, tensors: &HashMap<String, Tensor>, prefix: &str) -> Result<()> {
        let entries = self
            .trainable
            .iter()
            .map(|(k, v)| (format!("{prefix}.{k}"), v))
            .chain(self.buffers.iter().map(|(k, v)| (format!("{prefix}.buffer.{k}"), v)));
        for (name, var) in entries {
            let t = tensors
                .get(&name)
                .ok_or_else(|| Error::InvalidInput(format!("missing tensor `{name}`")))?;
            if t.dims() != var.dims() {
                return Err(Error::dims(
                    format!("{name} {:?}", var.dims()),
                    format!("{:?}", t.dims()),
                ));
            }
            var.set(&t.to_dtype(self.dtype)?.to_device(&self.device)?)?;
        }
        Ok(())
    }
}

/// Writes one safetensors file holding every store under its prefix, with
/// `metadata` in the header.
pub fn write_checkpoint(path: &Path, stores: &[(&str, &ParamStore)], metadata: HashMap<String, String>) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    let tensors: Vec<(String, Tensor)> = stores.iter().flat_map(|(p, s)| s.named_tensors(p)).collect();
    safetensors::serialize_to_file(tensors.iter().map(|(k, t)| (k.as_str(), t)), Some(metadata), path)?;
    Ok(())
}

/// Reads a safetensors checkpoint: tensors plus header metadata.
pub fn read_checkpoint(path: &Path, device: &Device) -> Result<(HashMap<String, Tensor>, HashMap<String, String>)> {
    if !path.exists() {
        return Err(Error::CheckpointNotFound(path.display().to_string()));
    }
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let (_, header) = safetensors::SafeTensors::read_metadata(&bytes)?;
    let metadata = header.metadata().clone().unwrap_or_default();
    let tensors = candle_core::safetensors::load_buffer(&bytes, device)?;
    Ok((tensors, metadata))
}
