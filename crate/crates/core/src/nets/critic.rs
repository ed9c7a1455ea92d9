//! Weight-clipped scalar critic `f_φ`.
//!
//! After [`Critic::clip_weights`] every parameter lies in `[-c, c]`. With 1-Lipschitz
//! activations each layer then satisfies `‖W a‖_∞ ≤ c · fan_in · ‖a‖_∞`, so
//!
//! `|f(x) - f(y)| ≤ k ‖x - y‖_∞ ≤ k ‖x - y‖₁`,  `k = Π_layers c · fan_in`.
//!
//! Biases do not enter the bound and are left unclipped.
//!
//! For a conditional critic the input is `[x ; ψ]` with ψ fixed per object; only the
//! `x` columns vary, so the first layer contributes `c · d` rather than `c · (d + d₂)`.

use rand::Rng;

use super::mlp::Mlp;
use crate::diffcore::{Activation, Binding, Matrix, NodeId, ParamSet, Tape};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Critic {
    mlp: Mlp,
    data_dim: usize,
    cond_dim: usize,
    clip: f64,
    lipschitz: f64,
}

impl Critic {
    /// Builds a critic on `R^data_dim` (optionally conditioned on a `cond_dim` code) and
    /// clips its initial weights to `[-clip, clip]`.
    pub fn new<R: Rng + ?Sized>(
        data_dim: usize,
        cond_dim: usize,
        hidden: &[usize],
        activation: Activation,
        clip: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if let Activation::LeakyRelu { slope } = activation {
            if !(0.0..=1.0).contains(&slope) {
                return Err(Error::InvalidArgument(format!(
                    "critic activation slope {slope} is not 1-Lipschitz"
                )));
            }
        }
        let mut dims = vec![data_dim + cond_dim];
        dims.extend_from_slice(hidden);
        dims.push(1);
        let mut critic = Self {
            mlp: Mlp::new("critic", &dims, activation, rng)?,
            data_dim,
            cond_dim,
            clip,
            lipschitz: f64::INFINITY,
        };
        critic.clip_weights(clip)?;
        Ok(critic)
    }

    pub fn data_dim(&self) -> usize {
        self.data_dim
    }

    pub fn cond_dim(&self) -> usize {
        self.cond_dim
    }

    pub fn is_conditional(&self) -> bool {
        self.cond_dim > 0
    }

    pub fn clip(&self) -> f64 {
        self.clip
    }

    /// Analytic Lipschitz bound `k` w.r.t. the L1 ground norm on the data input.
    pub fn lipschitz_bound(&self) -> f64 {
        self.lipschitz
    }

    pub fn mlp(&self) -> &Mlp {
        &self.mlp
    }

    pub fn params(&self) -> &ParamSet {
        self.mlp.params()
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        self.mlp.params_mut()
    }

    /// Largest `|w|` over the weight matrices.
    pub fn max_abs_weight(&self) -> f64 {
        self.params()
            .iter()
            .filter(|p| is_weight(p.name()))
            .fold(0.0_f64, |m, p| m.max(p.value().max_abs()))
    }

    /// Clamps every weight-matrix entry to `[-c, c]` and recomputes `k`. Biases only shift
    /// pre-activations and leave `k` unchanged, so they are not clamped.
    pub fn clip_weights(&mut self, c: f64) -> Result<()> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "clip range must be positive and finite, got {c}"
            )));
        }
        for p in self.mlp.params_mut().iter_mut().filter(|p| is_weight(p.name())) {
            p.update(|_, w| w.clamp(-c, c))?;
        }
        self.clip = c;
        self.lipschitz = self.bound_for(c);
        Ok(())
    }

    fn bound_for(&self, c: f64) -> f64 {
        let dims = self.mlp.dims();
        let mut k = c * self.data_dim as f64;
        for &fan_in in &dims[1..dims.len() - 1] {
            k *= c * fan_in as f64;
        }
        k
    }

    /// Per-point scores; `x` is (n × data_dim), `cond` is 1 × cond_dim when conditional.
    pub fn forward(&self, tape: &mut Tape, x: NodeId, cond: Option<NodeId>, binding: &Binding) -> Result<NodeId> {
        let (n, cols) = tape.value(x).shape();
        if cols != self.data_dim {
            return Err(Error::Shape(format!(
                "critic expects {}-d points, got {cols}-d",
                self.data_dim
            )));
        }
        let input = match (cond, self.cond_dim) {
            (None, 0) => x,
            (Some(c), d) if d > 0 => {
                if tape.value(c).shape() != (1, d) {
                    return Err(Error::Shape(format!(
                        "critic condition shape {:?}, expected (1, {d})",
                        tape.value(c).shape()
                    )));
                }
                let rows = tape.broadcast_rows(c, n)?;
                tape.concat_cols(&[x, rows])?
            }
            (None, d) => return Err(Error::InvalidArgument(format!("conditional critic needs a {d}-d code"))),
            (Some(_), _) => return Err(Error::InvalidArgument("unconditional critic given a code".into())),
        };
        self.mlp.forward(tape, input, binding)
    }

    /// `f_φ(x_i)` for every row of `points`.
    pub fn score(&self, points: &Matrix, cond: Option<&[f64]>) -> Result<Vec<f64>> {
        if !points.is_finite() {
            return Err(Error::NonFinite("critic input".into()));
        }
        let mut tape = Tape::new();
        let b = self.params().bind(&mut tape, false);
        let x = tape.constant(points.clone())?;
        let c = match cond {
            Some(c) => Some(tape.constant(Matrix::row_vector(c))?),
            None => None,
        };
        let out = self.forward(&mut tape, x, c, &b)?;
        Ok(tape.value(out).as_slice().to_vec())
    }
}

fn is_weight(name: &str) -> bool {
    name.ends_with(".w")
}

/// Free-function form of [`Critic::score`].
pub fn critic_score(critic: &Critic, points: &Matrix, cond: Option<&[f64]>) -> Result<Vec<f64>> {
    critic.score(points, cond)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn clip_example_and_idempotence() {
        let mut rng = crate::seeded_rng(0);
        let mut f = Critic::new(3, 0, &[], Activation::Softplus, 10.0, &mut rng).unwrap();
        f.params_mut()
            .get_mut(0)
            .set_value(Matrix::row_vector(&[-5.0, 0.05, 5.0]))
            .unwrap();
        f.clip_weights(0.1).unwrap();
        assert_eq!(f.params().get(0).value().as_slice(), &[-0.1, 0.05, 0.1]);
        let once = f.clone();
        f.clip_weights(0.1).unwrap();
        assert_eq!(f, once);
        assert!(f.clip_weights(0.0).is_err());
        assert!(f.clip_weights(-1.0).is_err());
    }

    #[test]
    fn two_layer_bound_by_hand() {
        // 2 → 5 → 1 with c = 0.5: k = (0.5·2)·(0.5·5) = 2.5
        let mut rng = crate::seeded_rng(0);
        let f = Critic::new(2, 0, &[5], Activation::Softplus, 0.5, &mut rng).unwrap();
        assert_eq!(f.lipschitz_bound(), 2.5);
        assert!(f.max_abs_weight() <= 0.5);
    }

    #[test]
    fn zero_critic_scores_zero() {
        let mut rng = crate::seeded_rng(4);
        let mut f = Critic::new(2, 0, &[6, 6], Activation::Softplus, 0.5, &mut rng).unwrap();
        for p in f.params_mut().iter_mut() {
            p.update(|_, _| 0.0).unwrap();
        }
        let pts = Matrix::from_rows(&[[1.0, 2.0], [-3.0, 0.5]]).unwrap();
        assert_eq!(f.score(&pts, None).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn empirical_ratio_never_exceeds_bound() {
        let mut rng = crate::seeded_rng(8);
        for act in [Activation::Softplus, Activation::LEAKY_RELU] {
            let f = Critic::new(2, 3, &[8, 8], act, 0.5, &mut rng).unwrap();
            let k = f.lipschitz_bound();
            let cond = [0.3, -0.7, 1.1];
            for _ in 0..10_000 {
                let x: [f64; 2] = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
                let y: [f64; 2] = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
                let s = f.score(&Matrix::from_rows(&[x, y]).unwrap(), Some(&cond)).unwrap();
                let l1 = (x[0] - y[0]).abs() + (x[1] - y[1]).abs();
                assert!((s[0] - s[1]).abs() <= k * l1 + 1e-12);
            }
        }
    }

    #[test]
    fn scores_are_pointwise() {
        let mut rng = crate::seeded_rng(2);
        let f = Critic::new(2, 0, &[4], Activation::Softplus, 0.5, &mut rng).unwrap();
        let a = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let b = Matrix::from_rows(&[[3.0, 4.0], [1.0, 2.0]]).unwrap();
        let (sa, sb) = (f.score(&a, None).unwrap(), f.score(&b, None).unwrap());
        assert_eq!(sa[0], sb[1]);
        assert_eq!(sa[1], sb[0]);
    }
}
