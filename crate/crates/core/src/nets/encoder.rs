//! Permutation-invariant set encoder (the inference network `Q`).
//!
//! Each equivariant layer maps every point `x_i` of the set to
//! `σ(Λ x_i + b + Γ pool(X))`, where `pool` is a column-wise max or mean over the set.
//! After the stack the set is pooled once more and an optional MLP head maps the pooled
//! feature to the latent descriptor ψ.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::cloud::{LatentCode, PointCloud};
use crate::diffcore::{Activation, Binding, NodeId, ParamSet, ParamTensor, Tape};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pool {
    Max,
    Mean,
}

impl Pool {
    pub fn apply(self, tape: &mut Tape, x: NodeId) -> Result<NodeId> {
        match self {
            Pool::Max => tape.max_pool(x),
            Pool::Mean => tape.mean_pool(x),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    /// Output widths of the activated equivariant layers.
    pub equivariant_widths: Vec<usize>,
    pub pool: Pool,
    /// Hidden widths of the head applied after the final pooling. When empty, the last
    /// equivariant layer is linear and maps straight to the latent size.
    pub head_widths: Vec<usize>,
    pub activation: Activation,
}

impl EncoderConfig {
    /// Three mean-pool layers (30, 30, then the latent size), softplus.
    pub fn circles() -> Self {
        Self {
            equivariant_widths: vec![30, 30],
            pool: Pool::Mean,
            head_widths: vec![],
            activation: Activation::Softplus,
        }
    }

    /// Three max-pool layers of `width` followed by a two-layer head.
    pub fn modelnet(width: usize) -> Self {
        Self {
            equivariant_widths: vec![width; 3],
            pool: Pool::Max,
            head_widths: vec![width],
            activation: Activation::LEAKY_RELU,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Encoder {
    config: EncoderConfig,
    input_dim: usize,
    latent_dim: usize,
    /// (in, out, activated) per equivariant layer.
    layers: Vec<(usize, usize, bool)>,
    /// Dimensions of the head, starting with the pooled width.
    head: Vec<usize>,
    params: ParamSet,
}

impl Encoder {
    pub fn new<R: Rng + ?Sized>(
        input_dim: usize,
        latent_dim: usize,
        config: &EncoderConfig,
        rng: &mut R,
    ) -> Result<Self> {
        if input_dim == 0
            || latent_dim == 0
            || config.equivariant_widths.contains(&0)
            || config.head_widths.contains(&0)
        {
            return Err(Error::InvalidArgument(format!(
                "encoder sizes must be non-zero: in={input_dim} latent={latent_dim} {config:?}"
            )));
        }
        let mut layers = Vec::new();
        let mut prev = input_dim;
        for &w in &config.equivariant_widths {
            layers.push((prev, w, true));
            prev = w;
        }
        let head = if config.head_widths.is_empty() {
            layers.push((prev, latent_dim, false));
            vec![]
        } else {
            let mut h = vec![prev];
            h.extend_from_slice(&config.head_widths);
            h.push(latent_dim);
            h
        };

        let mut params = ParamSet::new();
        for (l, &(i, o, _)) in layers.iter().enumerate() {
            params.push(ParamTensor::glorot(format!("q.equi{l}.lambda"), o, i, rng));
            params.push(ParamTensor::zeros(format!("q.equi{l}.b"), 1, o));
            params.push(ParamTensor::glorot(format!("q.equi{l}.gamma"), o, i, rng));
        }
        for (l, w) in head.windows(2).enumerate() {
            params.push(ParamTensor::glorot(format!("q.head{l}.w"), w[1], w[0], rng));
            params.push(ParamTensor::zeros(format!("q.head{l}.b"), 1, w[1]));
        }
        Ok(Self {
            config: config.clone(),
            input_dim,
            latent_dim,
            layers,
            head,
            params,
        })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    /// Records the encoder on `tape`; `x` is (n × input_dim), the result 1 × latent_dim.
    pub fn forward(&self, tape: &mut Tape, x: NodeId, binding: &Binding) -> Result<NodeId> {
        let cols = tape.value(x).cols();
        if cols != self.input_dim {
            return Err(Error::Shape(format!(
                "encoder expects {}-d points, got {cols}-d",
                self.input_dim
            )));
        }
        let pool = self.config.pool;
        let mut h = x;
        for (l, &(_, _, activated)) in self.layers.iter().enumerate() {
            let lambda = binding.node(3 * l);
            let bias = binding.node(3 * l + 1);
            let gamma = binding.node(3 * l + 2);
            let per_point = tape.linear(h, lambda, Some(bias))?;
            let pooled = pool.apply(tape, h)?;
            let set_term = tape.linear(pooled, gamma, None)?;
            let pre = tape.add_row(per_point, set_term)?;
            h = if activated {
                tape.activation(pre, self.config.activation)
            } else {
                pre
            };
        }
        let mut out = pool.apply(tape, h)?;
        let offset = 3 * self.layers.len();
        let head_layers = self.head.len().saturating_sub(1);
        for l in 0..head_layers {
            let w = binding.node(offset + 2 * l);
            let b = binding.node(offset + 2 * l + 1);
            out = tape.linear(out, w, Some(b))?;
            if l + 1 < head_layers {
                out = tape.activation(out, self.config.activation);
            }
        }
        Ok(out)
    }

    /// ψ = Q(X). Deterministic and invariant to the order of the points.
    pub fn encode(&self, cloud: &PointCloud) -> Result<LatentCode> {
        let mut tape = Tape::new();
        let b = self.params.bind(&mut tape, false);
        let x = tape.constant(cloud.points().clone())?;
        let psi = self.forward(&mut tape, x, &b)?;
        LatentCode::new(tape.value(psi).as_slice().to_vec())
    }
}
