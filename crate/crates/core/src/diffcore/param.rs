use rand::Rng;
use rand_distr::{Distribution, Uniform};

use super::matrix::Matrix;
use super::tape::{Gradients, NodeId, Tape};
use crate::{Error, Result};

/// A named trainable tensor with its gradient accumulator.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamTensor {
    name: String,
    value: Matrix,
    grad: Matrix,
    grad_populated: bool,
}

impl ParamTensor {
    pub fn new(name: impl Into<String>, value: Matrix) -> Result<Self> {
        let name = name.into();
        if !value.is_finite() {
            return Err(Error::NonFinite(format!("parameter {name}")));
        }
        let grad = Matrix::zeros(value.rows(), value.cols());
        Ok(Self {
            name,
            value,
            grad,
            grad_populated: false,
        })
    }

    /// Uniform init in `[-s, s]`, `s = sqrt(6 / (fan_in + fan_out))`, for a (out × in) weight.
    pub fn glorot<R: Rng + ?Sized>(name: impl Into<String>, fan_out: usize, fan_in: usize, rng: &mut R) -> Self {
        let s = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let dist = Uniform::new_inclusive(-s, s).expect("finite init range");
        let data = (0..fan_out * fan_in).map(|_| dist.sample(rng)).collect();
        let value = Matrix::from_vec(fan_out, fan_in, data).expect("sized by construction");
        Self::new(name, value).expect("finite init")
    }

    pub fn zeros(name: impl Into<String>, rows: usize, cols: usize) -> Self {
        Self::new(name, Matrix::zeros(rows, cols)).expect("zeros are finite")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn value(&self) -> &Matrix {
        &self.value
    }

    pub fn grad(&self) -> &Matrix {
        &self.grad
    }

    pub fn shape(&self) -> (usize, usize) {
        self.value.shape()
    }

    pub fn has_grad(&self) -> bool {
        self.grad_populated
    }

    /// Replaces all values; shape must match and every value must be finite.
    pub fn set_value(&mut self, value: Matrix) -> Result<()> {
        if value.shape() != self.value.shape() {
            return Err(Error::Shape(format!(
                "parameter {}: {:?} vs {:?}",
                self.name,
                value.shape(),
                self.value.shape()
            )));
        }
        if !value.is_finite() {
            return Err(Error::NonFinite(format!("parameter {}", self.name)));
        }
        self.value = value;
        Ok(())
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) -> Result<()> {
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("parameter {}[{r},{c}]", self.name)));
        }
        self.value.set(r, c, v);
        Ok(())
    }

    /// Applies an in-place update; rejects the result if any value becomes non-finite.
    pub fn update(&mut self, f: impl Fn(usize, f64) -> f64) -> Result<()> {
        let mut next = self.value.clone();
        for (i, v) in next.as_mut_slice().iter_mut().enumerate() {
            *v = f(i, *v);
        }
        self.set_value(next)
    }

    pub fn accumulate_grad(&mut self, g: &Matrix) -> Result<()> {
        if g.shape() != self.grad.shape() {
            return Err(Error::Shape(format!(
                "gradient for {}: {:?} vs {:?}",
                self.name,
                g.shape(),
                self.grad.shape()
            )));
        }
        self.grad.add_assign(g);
        self.grad_populated = true;
        Ok(())
    }

    pub fn zero_grad(&mut self) {
        self.grad.as_mut_slice().fill(0.0);
        self.grad_populated = false;
    }
}

/// Ordered collection of parameters owned by one network.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamSet {
    tensors: Vec<ParamTensor>,
}

/// Tape nodes for a bound [`ParamSet`], in parameter order.
#[derive(Clone, Debug)]
pub struct Binding {
    ids: Vec<NodeId>,
}

impl Binding {
    pub fn node(&self, i: usize) -> NodeId {
        self.ids[i]
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.ids
    }
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a tensor and returns its index.
    pub fn push(&mut self, t: ParamTensor) -> usize {
        self.tensors.push(t);
        self.tensors.len() - 1
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn get(&self, i: usize) -> &ParamTensor {
        &self.tensors[i]
    }

    pub fn get_mut(&mut self, i: usize) -> &mut ParamTensor {
        &mut self.tensors[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &ParamTensor> {
        self.tensors.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut ParamTensor> {
        self.tensors.iter_mut()
    }

    pub fn scalar_count(&self) -> usize {
        self.tensors.iter().map(|t| t.value.len()).sum()
    }

    /// Records every tensor as a leaf; `trainable = false` freezes them for this tape.
    pub fn bind(&self, tape: &mut Tape, trainable: bool) -> Binding {
        let ids = self
            .tensors
            .iter()
            .map(|t| {
                tape.leaf(t.value.clone(), trainable)
                    .expect("parameters are finite by invariant")
            })
            .collect();
        Binding { ids }
    }

    /// Adds the gradients reached by a backward pass into the accumulators.
    pub fn accumulate(&mut self, grads: &Gradients, binding: &Binding) -> Result<()> {
        if binding.ids.len() != self.tensors.len() {
            return Err(Error::Shape(format!(
                "binding has {} nodes for {} parameters",
                binding.ids.len(),
                self.tensors.len()
            )));
        }
        for (t, &id) in self.tensors.iter_mut().zip(&binding.ids) {
            match grads.get(id) {
                Some(g) => t.accumulate_grad(g)?,
                None => t.grad_populated = true,
            }
        }
        Ok(())
    }

    pub fn zero_grad(&mut self) {
        for t in &mut self.tensors {
            t.zero_grad();
        }
    }

    /// Loads values by name and shape from checkpoint entries.
    pub fn load_values(&mut self, entries: &[(String, Matrix)]) -> Result<()> {
        if entries.len() != self.tensors.len() {
            return Err(Error::Checkpoint(format!(
                "{} tensors in file, network has {}",
                entries.len(),
                self.tensors.len()
            )));
        }
        for (t, (name, m)) in self.tensors.iter_mut().zip(entries) {
            if t.name != *name || t.shape() != m.shape() {
                return Err(Error::Checkpoint(format!(
                    "expected {} {:?}, found {name} {:?}",
                    t.name,
                    t.shape(),
                    m.shape()
                )));
            }
            t.set_value(m.clone())?;
        }
        Ok(())
    }
}
