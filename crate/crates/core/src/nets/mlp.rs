use rand::Rng;

use crate::diffcore::{Activation, Binding, NodeId, ParamSet, ParamTensor, Tape};
use crate::{Error, Result};

/// Fully connected stack: activation after every layer except the last.
///
/// Parameters are stored as `[w0, b0, w1, b1, ...]`, weights as (out × in).
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    dims: Vec<usize>,
    activation: Activation,
    params: ParamSet,
}

impl Mlp {
    pub fn new<R: Rng + ?Sized>(prefix: &str, dims: &[usize], activation: Activation, rng: &mut R) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "{prefix}: layer sizes {dims:?} need at least an input and output, all non-zero"
            )));
        }
        let mut params = ParamSet::new();
        for (l, w) in dims.windows(2).enumerate() {
            params.push(ParamTensor::glorot(format!("{prefix}.{l}.w"), w[1], w[0], rng));
            params.push(ParamTensor::zeros(format!("{prefix}.{l}.b"), 1, w[1]));
        }
        Ok(Self {
            dims: dims.to_vec(),
            activation,
            params,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn layers(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    /// Forward over an (n × input_dim) node using parameters bound at `offset`.
    pub fn forward_at(&self, tape: &mut Tape, x: NodeId, binding: &Binding, offset: usize) -> Result<NodeId> {
        let mut h = x;
        for l in 0..self.layers() {
            let w = binding.node(offset + 2 * l);
            let b = binding.node(offset + 2 * l + 1);
            h = tape.linear(h, w, Some(b))?;
            if l + 1 < self.layers() {
                h = tape.activation(h, self.activation);
            }
        }
        Ok(h)
    }

    pub fn forward(&self, tape: &mut Tape, x: NodeId, binding: &Binding) -> Result<NodeId> {
        self.forward_at(tape, x, binding, 0)
    }
}
