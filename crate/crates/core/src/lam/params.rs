use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape hyper-parameters of the local alignment network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct LamConfig {
    /// Channels of the sampled point features.
    pub in_channels: usize,
    pub hidden: usize,
    pub heads: usize,
    pub blocks: usize,
    /// Circular convolution width (odd).
    pub kernel: usize,
    /// Append the point coordinates, centered and scaled by the bounding box.
    pub coord_features: bool,
    /// When false the two encoding channels are present but zero.
    pub positional_encoding: bool,
}

impl Default for LamConfig {
    fn default() -> Self {
        Self {
            in_channels: 4,
            hidden: 64,
            heads: 4,
            blocks: 8,
            kernel: 3,
            coord_features: true,
            positional_encoding: true,
        }
    }
}

impl LamConfig {
    /// Width of the network input: features, optional coordinates, encoding.
    pub fn input_width(&self) -> usize {
        self.in_channels + if self.coord_features { 2 } else { 0 } + 2
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 || self.blocks == 0 || self.heads == 0 {
            return Err(Error::Config("hidden, heads and blocks must be positive".into()));
        }
        if self.hidden % self.heads != 0 {
            return Err(Error::Config(format!(
                "hidden width {} not divisible by {} heads",
                self.hidden, self.heads
            )));
        }
        if self.kernel % 2 == 0 {
            return Err(Error::Config(format!("kernel width {} must be odd", self.kernel)));
        }
        Ok(())
    }
}

/// Named tensor in a parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    fn zeros(name: String, shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Self {
            name,
            shape,
            data: vec![0.0; len],
        }
    }
}

pub(crate) const PER_BLOCK: usize = 12;
pub(crate) mod slot {
    pub const CONV1_W: usize = 0;
    pub const CONV1_B: usize = 1;
    pub const CONV2_W: usize = 2;
    pub const CONV2_B: usize = 3;
    pub const WQ: usize = 4;
    pub const BQ: usize = 5;
    pub const WK: usize = 6;
    pub const BK: usize = 7;
    pub const WV: usize = 8;
    pub const BV: usize = 9;
    pub const WO: usize = 10;
    pub const BO: usize = 11;
    // offsets after the blocks
    pub const FUSION_W: usize = 0;
    pub const FUSION_B: usize = 1;
    pub const LSTM_WX: usize = 2;
    pub const LSTM_WH: usize = 3;
    pub const LSTM_B: usize = 4;
    pub const HEAD_W: usize = 5;
    pub const HEAD_B: usize = 6;
}

/// All network weights, laid out as an ordered list of named tensors.
///
/// Circular convolution weights have shape `[kernel, out, in]`; dense weights
/// are `[in, out]` and multiply row vectors from the right. LSTM gate columns
/// are ordered input, forget, candidate, output.
#[derive(Debug, Clone, PartialEq)]
pub struct LamParams {
    config: LamConfig,
    tensors: Vec<Tensor>,
}

impl LamParams {
    pub fn zeros(config: LamConfig) -> Result<Self> {
        config.validate()?;
        let h = config.hidden;
        let k = config.kernel;
        let mut tensors = Vec::new();
        for b in 0..config.blocks {
            let cin = if b == 0 { config.input_width() } else { h };
            let p = |s: &str| format!("block{b}.{s}");
            tensors.push(Tensor::zeros(p("conv1.weight"), vec![k, h, cin]));
            tensors.push(Tensor::zeros(p("conv1.bias"), vec![h]));
            tensors.push(Tensor::zeros(p("conv2.weight"), vec![k, h, h]));
            tensors.push(Tensor::zeros(p("conv2.bias"), vec![h]));
            for name in ["q", "k", "v", "o"] {
                tensors.push(Tensor::zeros(p(&format!("attn.w{name}")), vec![h, h]));
                tensors.push(Tensor::zeros(p(&format!("attn.b{name}")), vec![h]));
            }
        }
        tensors.push(Tensor::zeros("fusion.weight".into(), vec![config.blocks * h, h]));
        tensors.push(Tensor::zeros("fusion.bias".into(), vec![h]));
        tensors.push(Tensor::zeros("lstm.wx".into(), vec![2 * h, 4 * h]));
        tensors.push(Tensor::zeros("lstm.wh".into(), vec![h, 4 * h]));
        tensors.push(Tensor::zeros("lstm.bias".into(), vec![4 * h]));
        tensors.push(Tensor::zeros("head.weight".into(), vec![h, 2]));
        tensors.push(Tensor::zeros("head.bias".into(), vec![2]));
        Ok(Self { config, tensors })
    }

    /// Uniform Glorot initialization of every weight; biases stay zero.
    pub fn random(config: LamConfig, rng: &mut impl Rng) -> Result<Self> {
        let mut p = Self::zeros(config)?;
        for t in &mut p.tensors {
            if t.shape.len() < 2 {
                continue;
            }
            let (fan_in, fan_out) = match t.shape.as_slice() {
                [k, o, i] => (k * i, k * o),
                [i, o] => (*i, *o),
                _ => unreachable!(),
            };
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for v in &mut t.data {
                *v = rng.gen_range(-bound..bound);
            }
        }
        Ok(p)
    }

    /// Assembles parameters from tensors, checking names and shapes against
    /// the layout implied by `config`.
    pub fn from_tensors(config: LamConfig, tensors: Vec<Tensor>) -> Result<Self> {
        let template = Self::zeros(config)?;
        if template.tensors.len() != tensors.len() {
            return Err(Error::Schema(format!(
                "expected {} tensors, got {}",
                template.tensors.len(),
                tensors.len()
            )));
        }
        for (want, got) in template.tensors.iter().zip(&tensors) {
            if want.name != got.name || want.shape != got.shape {
                return Err(Error::Schema(format!(
                    "tensor {} {:?} does not match expected {} {:?}",
                    got.name, got.shape, want.name, want.shape
                )));
            }
            if got.data.len() != want.data.len() || got.data.iter().any(|v| !v.is_finite()) {
                return Err(Error::Schema(format!("tensor {} has bad data", got.name)));
            }
        }
        Ok(Self {
            config: template.config,
            tensors,
        })
    }

    pub fn config(&self) -> &LamConfig {
        &self.config
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    /// Same layout with every entry zero; used for gradient accumulation.
    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for t in &mut z.tensors {
            t.data.iter_mut().for_each(|v| *v = 0.0);
        }
        z
    }

    pub fn num_values(&self) -> usize {
        self.tensors.iter().map(|t| t.data.len()).sum()
    }

    #[inline]
    pub(crate) fn block(&self, b: usize, s: usize) -> &[f64] {
        &self.tensors[b * PER_BLOCK + s].data
    }

    #[inline]

    pub(crate) fn tail(&self, s: usize) -> &[f64] {
        &self.tensors[self.config.blocks * PER_BLOCK + s].data
    }

    #[inline]
    pub(crate) fn tail_mut(&mut self, s: usize) -> &mut [f64] {
        let i = self.config.blocks * PER_BLOCK + s;
        &mut self.tensors[i].data
    }
}
