use rand::Rng;
use rand_distr::StandardNormal;

use super::cloud::{LatentCode, PointCloud};
use super::mlp::Mlp;
use crate::diffcore::{Activation, Binding, Matrix, NodeId, ParamSet, Tape};
use crate::{Error, Result};

/// Standard-normal (rows × cols) sample.
pub fn normal_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    Matrix::from_vec(rows, cols, data).expect("sized by construction")
}

/// Conditional point generator `G_x(z, ψ)`: an MLP on the concatenation `[z ; ψ]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PointGenerator {
    noise_dim: usize,
    latent_dim: usize,
    mlp: Mlp,
}

impl PointGenerator {
    pub fn new<R: Rng + ?Sized>(
        noise_dim: usize,
        latent_dim: usize,
        hidden: &[usize],
        output_dim: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        let mut dims = vec![noise_dim + latent_dim];
        dims.extend_from_slice(hidden);
        dims.push(output_dim);
        if noise_dim == 0 || latent_dim == 0 {
            return Err(Error::InvalidArgument(
                "generator noise and latent sizes must be non-zero".into(),
            ));
        }
        Ok(Self {
            noise_dim,
            latent_dim,
            mlp: Mlp::new("gx", &dims, activation, rng)?,
        })
    }

    pub fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    pub fn output_dim(&self) -> usize {
        self.mlp.output_dim()
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

    /// `z` is (n × noise_dim), `psi` is 1 × latent_dim; returns (n × output_dim).
    pub fn forward(&self, tape: &mut Tape, z: NodeId, psi: NodeId, binding: &Binding) -> Result<NodeId> {
        let (n, zc) = tape.value(z).shape();
        let pc = tape.value(psi).cols();
        if zc != self.noise_dim || pc != self.latent_dim {
            return Err(Error::Shape(format!(
                "generator expects z∈R^{} and ψ∈R^{}, got {zc} and {pc}",
                self.noise_dim, self.latent_dim
            )));
        }
        let psi_rows = tape.broadcast_rows(psi, n)?;
        let input = tape.concat_cols(&[z, psi_rows])?;
        self.mlp.forward(tape, input, binding)
    }

    /// Maps given noise rows to points for a fixed ψ.
    pub fn generate_from_noise(&self, psi: &LatentCode, z: &Matrix) -> Result<PointCloud> {
        let mut tape = Tape::new();
        let b = self.params().bind(&mut tape, false);
        let zn = tape.constant(z.clone())?;
        let pn = tape.constant(psi.to_row())?;
        let out = self.forward(&mut tape, zn, pn, &b)?;
        PointCloud::new(tape.value(out).clone())
    }

    /// `n` points `G_x(z_i, ψ)` with i.i.d. standard-normal `z_i`.
    pub fn generate_points<R: Rng + ?Sized>(&self, psi: &LatentCode, n: usize, rng: &mut R) -> Result<PointCloud> {
        if n == 0 {
            return Err(Error::InvalidArgument("requested zero points".into()));
        }
        let z = normal_matrix(n, self.noise_dim, rng);
        self.generate_from_noise(psi, &z)
    }
}

/// Object generator `G_θ(u)`, mapping object noise to a latent descriptor.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectGenerator {
    mlp: Mlp,
}

impl ObjectGenerator {
    pub fn new<R: Rng + ?Sized>(
        noise_dim: usize,
        hidden: &[usize],
        latent_dim: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        let mut dims = vec![noise_dim];
        dims.extend_from_slice(hidden);
        dims.push(latent_dim);
        Ok(Self {
            mlp: Mlp::new("gtheta", &dims, activation, rng)?,
        })
    }

    pub fn noise_dim(&self) -> usize {
        self.mlp.input_dim()
    }

    pub fn latent_dim(&self) -> usize {
        self.mlp.output_dim()
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

    pub fn forward(&self, tape: &mut Tape, u: NodeId, binding: &Binding) -> Result<NodeId> {
        self.mlp.forward(tape, u, binding)
    }

    /// Codes for the given noise rows, one per row.
    pub fn codes_from_noise(&self, u: &Matrix) -> Result<Matrix> {
        let mut tape = Tape::new();
        let b = self.params().bind(&mut tape, false);
        let un = tape.constant(u.clone())?;
        let out = self.forward(&mut tape, un, &b)?;
        Ok(tape.value(out).clone())
    }

    pub fn code_from_noise(&self, u: &[f64]) -> Result<LatentCode> {
        let m = self.codes_from_noise(&Matrix::row_vector(u))?;
        LatentCode::new(m.into_vec())
    }

    pub fn sample_code<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<LatentCode> {
        let u = normal_matrix(1, self.noise_dim(), rng);
        self.code_from_noise(u.as_slice())
    }
}

/// Two-level sampling: one `u`, `ψ = G_θ(u)`, then `n` points `G_x(z_i, ψ)`.
pub fn hierarchical_sample<R: Rng + ?Sized>(
    object_generator: &ObjectGenerator,
    generator: &PointGenerator,
    n: usize,
    rng: &mut R,
) -> Result<PointCloud> {
    if n == 0 {
        return Err(Error::InvalidArgument("requested zero points".into()));
    }
    if object_generator.latent_dim() != generator.latent_dim() {
        return Err(Error::Shape(format!(
            "object generator emits {}-d codes, point generator expects {}",
            object_generator.latent_dim(),
            generator.latent_dim()
        )));
    }
    let psi = object_generator.sample_code(rng)?;
    generator.generate_points(&psi, n, rng)
}
