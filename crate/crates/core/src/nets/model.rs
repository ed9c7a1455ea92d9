//! A trained model bundle on disk: `manifest.json` plus one checkpoint per network.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::cloud::PointCloud;
use super::critic::Critic;
use super::encoder::{Encoder, EncoderConfig, Pool};
use super::generator::{hierarchical_sample, ObjectGenerator, PointGenerator};
use crate::diffcore::{checkpoint, Activation, ParamSet};
use crate::{Error, Result};

const FORMAT: &str = "pcgan-model";
const VERSION: u32 = 1;

/// Architecture sizes for every network in the bundle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Point dimension `d`.
    pub data_dim: usize,
    /// Point-noise size `d1`.
    pub noise_dim: usize,
    /// Latent size `d2`.
    pub latent_dim: usize,
    /// Object-noise size `d3`.
    pub object_noise_dim: usize,
    pub encoder: EncoderConfig,
    pub generator_hidden: Vec<usize>,
    pub object_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
    pub activation: Activation,
    pub clip: f64,
}

impl ModelConfig {
    /// 2D circles: `Q` with 30-wide mean-pool layers to 15, five-layer `G_x`, four-layer critic.
    pub fn circles() -> Self {
        Self {
            data_dim: 2,
            noise_dim: 10,
            latent_dim: 15,
            object_noise_dim: 10,
            encoder: EncoderConfig::circles(),
            generator_hidden: vec![30; 4],
            object_hidden: vec![30; 4],
            critic_hidden: vec![30; 3],
            activation: Activation::Softplus,
            clip: 0.5,
        }
    }

    /// 3D single-class meshes at the given width.
    pub fn modelnet(width: usize) -> Self {
        Self {
            data_dim: 3,
            noise_dim: 10,
            latent_dim: width,
            object_noise_dim: 10,
            encoder: EncoderConfig::modelnet(width),
            generator_hidden: vec![width; 3],
            object_hidden: vec![width; 4],
            critic_hidden: vec![width; 3],
            activation: Activation::LEAKY_RELU,
            clip: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.data_dim == 0 || self.noise_dim == 0 || self.latent_dim == 0 || self.object_noise_dim == 0 {
            return Err(Error::InvalidArgument("model sizes must be non-zero".into()));
        }
        if self.object_noise_dim > self.latent_dim {
            return Err(Error::InvalidArgument(format!(
                "object noise size {} exceeds latent size {}",
                self.object_noise_dim, self.latent_dim
            )));
        }
        if !(self.clip > 0.0) || !self.clip.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "clip must be positive, got {}",
                self.clip
            )));
        }
        Ok(())
    }
}

/// Per-axis offset and global scale mapping raw coordinates to normalized ones:
/// `normalized = (raw - offset) / scale`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub offset: Vec<f64>,
    pub scale: f64,
}

impl Normalization {
    pub fn identity(dim: usize) -> Self {
        Self {
            offset: vec![0.0; dim],
            scale: 1.0,
        }
    }

    pub fn apply(&self, cloud: &PointCloud) -> Result<PointCloud> {
        self.map(cloud, |v, o| (v - o) / self.scale)
    }

    pub fn invert(&self, cloud: &PointCloud) -> Result<PointCloud> {
        self.map(cloud, |v, o| v * self.scale + o)
    }

    fn map(&self, cloud: &PointCloud, f: impl Fn(f64, f64) -> f64) -> Result<PointCloud> {
        if cloud.dim() != self.offset.len() {
            return Err(Error::Shape(format!(
                "normalization is {}-d, cloud is {}-d",
                self.offset.len(),
                cloud.dim()
            )));
        }
        let mut m = cloud.points().clone();
        let d = self.offset.len();
        for (i, v) in m.as_mut_slice().iter_mut().enumerate() {
            *v = f(*v, self.offset[i % d]);
        }
        PointCloud::new(m)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct LayerShape {
    name: String,
    rows: usize,
    cols: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct Manifest {
    format: String,
    version: u32,
    config: ModelConfig,
    pool: Pool,
    normalization: Normalization,
    hierarchical_trained: bool,
    has_critic: bool,
    layers: Vec<LayerShape>,
}

/// `Q`, `G_x`, `G_θ` and the stage-1 critic, plus the data normalization they were trained on.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub encoder: Encoder,
    pub generator: PointGenerator,
    pub object_generator: ObjectGenerator,
    pub critic: Option<Critic>,
    pub normalization: Normalization,
    pub hierarchical_trained: bool,
}

impl Model {
    /// Fresh weights. The critic is conditioned on ψ.
    pub fn new<R: Rng + ?Sized>(config: &ModelConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let c = config;
        let encoder = Encoder::new(c.data_dim, c.latent_dim, &c.encoder, rng)?;
        let generator = PointGenerator::new(
            c.noise_dim,
            c.latent_dim,
            &c.generator_hidden,
            c.data_dim,
            c.activation,
            rng,
        )?;
        let object_generator =
            ObjectGenerator::new(c.object_noise_dim, &c.object_hidden, c.latent_dim, c.activation, rng)?;
        let critic = Critic::new(c.data_dim, c.latent_dim, &c.critic_hidden, c.activation, c.clip, rng)?;
        Ok(Self {
            config: c.clone(),
            encoder,
            generator,
            object_generator,
            critic: Some(critic),
            normalization: Normalization::identity(c.data_dim),
            hierarchical_trained: false,
        })
    }

    /// Two-level sample in raw (de-normalized) coordinates.
    pub fn sample_hierarchical<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<PointCloud> {
        if !self.hierarchical_trained {
            return Err(Error::InvalidArgument(
                "object generator has not been trained; run the hierarchical stage first".into(),
            ));
        }
        let cloud = hierarchical_sample(&self.object_generator, &self.generator, n, rng)?;
        self.normalization.invert(&cloud)
    }

    /// Encodes a raw cloud and draws `n` points from `G_x` in raw coordinates.
    pub fn reconstruct<R: Rng + ?Sized>(&self, cloud: &PointCloud, n: usize, rng: &mut R) -> Result<PointCloud> {
        let psi = self.encoder.encode(&self.normalization.apply(cloud)?)?;
        let out = self.generator.generate_points(&psi, n, rng)?;
        self.normalization.invert(&out)
    }

    fn networks(&self) -> Vec<(&'static str, &ParamSet)> {
        let mut v = vec![
            ("encoder", self.encoder.params()),
            ("generator", self.generator.params()),
            ("object_generator", self.object_generator.params()),
        ];
        if let Some(c) = &self.critic {
            v.push(("critic", c.params()));
        }
        v
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let layers = self
            .networks()
            .iter()
            .flat_map(|(_, p)| p.iter())
            .map(|t| LayerShape {
                name: t.name().to_string(),
                rows: t.shape().0,
                cols: t.shape().1,
            })
            .collect();
        let manifest = Manifest {
            format: FORMAT.into(),
            version: VERSION,
            config: self.config.clone(),
            pool: self.config.encoder.pool,
            normalization: self.normalization.clone(),
            hierarchical_trained: self.hierarchical_trained,
            has_critic: self.critic.is_some(),
            layers,
        };
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest)?;
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
        for (name, params) in self.networks() {
            checkpoint::save(&dir.join(format!("{name}.ckpt")), params)?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join("manifest.json");
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let manifest: Manifest = serde_json::from_str(&text)?;
        if manifest.format != FORMAT || manifest.version != VERSION {
            return Err(Error::Checkpoint(format!(
                "{}: unsupported model format {} v{}",
                path.display(),
                manifest.format,
                manifest.version
            )));
        }
        let mut model = Model::new(&manifest.config, &mut crate::seeded_rng(0))?;
        if !manifest.has_critic {
            model.critic = None;
        }
        model.normalization = manifest.normalization;
        model.hierarchical_trained = manifest.hierarchical_trained;
        let mut expected = Vec::new();
        for (_, p) in model.networks() {
            for t in p.iter() {
                expected.push(LayerShape {
                    name: t.name().to_string(),
                    rows: t.shape().0,
                    cols: t.shape().1,
                });
            }
        }
        if expected != manifest.layers {
            return Err(Error::Checkpoint(format!(
                "{}: layer listing does not match the configured architecture",
                path.display()
            )));
        }
        checkpoint::load(&dir.join("encoder.ckpt"), model.encoder.params_mut())?;
        checkpoint::load(&dir.join("generator.ckpt"), model.generator.params_mut())?;
        checkpoint::load(&dir.join("object_generator.ckpt"), model.object_generator.params_mut())?;
        if let Some(c) = model.critic.as_mut() {
            checkpoint::load(&dir.join("critic.ckpt"), c.params_mut())?;
            let clip = c.clip();
            c.clip_weights(clip)?;
        }
        Ok(model)
    }
}
