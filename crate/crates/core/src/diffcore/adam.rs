use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use super::param::ParamSet;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            beta1: 0.5,
            beta2: 0.9,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self { lr, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let ok =
            self.lr > 0.0 && (0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2) && self.eps > 0.0;
        if !ok {
            return Err(Error::InvalidArgument(format!("adam config {self:?}")));
        }
        Ok(())
    }
}

/// Per-parameter Adam moments for one [`ParamSet`].
#[derive(Clone, Debug)]
pub struct AdamState {
    config: AdamConfig,
    m: Vec<Matrix>,
    v: Vec<Matrix>,
    step: u64,
}

impl AdamState {
    pub fn new(config: AdamConfig, params: &ParamSet) -> Self {
        let zeros = || params.iter().map(|p| Matrix::zeros(p.shape().0, p.shape().1)).collect();
        Self {
            config,
            m: zeros(),
            v: zeros(),
            step: 0,
        }
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn first_moment(&self, i: usize) -> &Matrix {
        &self.m[i]
    }

    pub fn second_moment(&self, i: usize) -> &Matrix {
        &self.v[i]
    }

    /// One bias-corrected Adam update (descent), then zeroes the gradients.
    pub fn step(&mut self, params: &mut ParamSet) -> Result<()> {
        if params.len() != self.m.len() {
            return Err(Error::Shape(format!(
                "optimizer tracks {} tensors, got {}",
                self.m.len(),
                params.len()
            )));
        }
        if !params.iter().any(|p| p.has_grad()) {
            return Err(Error::NoGradients("adam step called before any backward pass".into()));
        }
        if let Some(p) = params.iter().find(|p| !p.grad().is_finite()) {
            return Err(Error::NonFinite(format!("gradient of {}", p.name())));
        }
        self.step += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let t = self.step as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for (i, p) in params.iter_mut().enumerate() {
            let g = p.grad().clone();
            let m = self.m[i].as_mut_slice();
            let v = self.v[i].as_mut_slice();
            for ((mj, vj), &gj) in m.iter_mut().zip(v.iter_mut()).zip(g.as_slice()) {
                *mj = beta1 * *mj + (1.0 - beta1) * gj;
                *vj = beta2 * *vj + (1.0 - beta2) * gj * gj;
            }
            let (m, v) = (&self.m[i], &self.v[i]);
            p.update(|j, w| {
                let mh = m.as_slice()[j] / c1;
                let vh = v.as_slice()[j] / c2;
                w - lr * mh / (vh.sqrt() + eps)
            })?;
            p.zero_grad();
        }
        Ok(())
    }
}
