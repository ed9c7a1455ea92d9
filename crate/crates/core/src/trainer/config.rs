//! Training configuration. Read from JSON or `key=value` text; any field can be overridden with a dotted
//! `key=value` pair such as `sandwich.lambda=0` or `lower.optimizer.lr=1e-3`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diffcore::AdamConfig;
use crate::losses::{LowerBoundConfig, SandwichConfig};
use crate::nets::ModelConfig;
use crate::ot::AuctionConfig;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Conditional,
    Hierarchical,
}

/// Second-stage settings for `G_θ` on the latent codes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HierarchicalConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub sandwich: SandwichConfig,
    pub lower: LowerBoundConfig,
    pub optimizer: AdamConfig,
    pub critic_hidden: Vec<usize>,
}

impl Default for HierarchicalConfig {
    fn default() -> Self {
        Self {
            steps: 2000,
            batch_size: 64,
            sandwich: SandwichConfig::default(),
            lower: LowerBoundConfig::default(),
            optimizer: AdamConfig::with_lr(1e-3),
            critic_hidden: vec![30; 3],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub stage: Stage,
    pub manifest: PathBuf,
    /// Model directory; written by the conditional stage, read and updated by the hierarchical one.
    pub out: PathBuf,
    /// CSV loss log; defaults to `<out>/train_log.csv` for the conditional stage and
    /// `<out>/hier_log.csv` for the hierarchical one.
    pub log: Option<PathBuf>,
    pub model: ModelConfig,
    /// Objects per step.
    pub batch_size: usize,
    /// Real and generated points per object per step.
    pub points_per_object: usize,
    pub steps: usize,
    pub sandwich: SandwichConfig,
    pub lower: LowerBoundConfig,
    pub auction: AuctionConfig,
    /// Optimizer for `Q` and `G_x`.
    pub optimizer: AdamConfig,
    pub normalize: bool,
    pub checkpoint_every: usize,
    pub seed: u64,
    pub hierarchical: HierarchicalConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::circles()
    }
}

impl TrainConfig {
    /// The 2D circle benchmark.
    pub fn circles() -> Self {
        Self {
            stage: Stage::Conditional,
            manifest: PathBuf::from("data/manifest.json"),
            out: PathBuf::from("model"),
            log: None,
            model: ModelConfig::circles(),
            batch_size: 16,
            points_per_object: 100,
            steps: 6000,
            sandwich: SandwichConfig::default(),
            lower: LowerBoundConfig::default(),
            auction: AuctionConfig::training(),
            optimizer: AdamConfig::with_lr(3e-3),
            normalize: false,
            checkpoint_every: 500,
            seed: 0,
            hierarchical: HierarchicalConfig::default(),
        }
    }

    /// Single-class 3D meshes sampled to point clouds.
    pub fn modelnet(width: usize) -> Self {
        Self {
            model: ModelConfig::modelnet(width),
            points_per_object: 256,
            steps: 2000,
            optimizer: AdamConfig::default(),
            normalize: true,
            ..Self::circles()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "circles" => Ok(Self::circles()),
            "modelnet" => Ok(Self::modelnet(256)),
            other => Err(Error::InvalidArgument(format!(
                "unknown preset {other:?}; expected circles or modelnet"
            ))),
        }
    }

    /// Reads a JSON object, or plain `key=value` lines (blank lines and `#` comments
    /// skipped) applied on top of the circles preset.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if text.trim_start().starts_with('{') {
            return serde_json::from_str(&text).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: e.line(),
                msg: e.to_string(),
            });
        }
        let mut config = Self::circles();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let pair = match line.split_once('=') {
                Some((k, v)) => format!("{}={}", k.trim(), v.trim()),
                None => line.to_string(),
            };
            config = config.with_overrides(&[pair]).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: e.to_string(),
            })?;
        }
        Ok(config)
    }

    /// Applies dotted `key=value` overrides. Values are parsed as JSON when possible and
    /// taken as strings otherwise.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        let mut value = serde_json::to_value(self)?;
        for o in overrides {
            let o = o.as_ref();
            let (key, raw) = o
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("override {o:?} is not key=value")))?;
            let parsed = serde_json::from_str(raw).unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
            let mut slot = &mut value;
            for part in key.split('.') {
                slot = slot
                    .as_object_mut()
                    .and_then(|m| m.get_mut(part))
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown config key {key:?}")))?;
            }
            *slot = parsed;
        }
        serde_json::from_value(value).map_err(|e| Error::InvalidArgument(format!("config override: {e}")))
    }

    pub fn log_path(&self) -> PathBuf {
        self.log_path_for(self.stage)
    }

    pub fn log_path_for(&self, stage: Stage) -> PathBuf {
        let default = match stage {
            Stage::Conditional => "train_log.csv",
            Stage::Hierarchical => "hier_log.csv",
        };
        self.log.clone().unwrap_or_else(|| self.out.join(default))
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("batch_size", self.batch_size),
            ("points_per_object", self.points_per_object),
            ("steps", self.steps),
            ("checkpoint_every", self.checkpoint_every),
            ("hierarchical.steps", self.hierarchical.steps),
            ("hierarchical.batch_size", self.hierarchical.batch_size),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidArgument(format!("{name} must be at least 1")));
        }
        self.model.validate()?;
        self.sandwich.validate()?;
        self.lower.validate()?;
        self.auction.validate()?;
        self.optimizer.validate()?;
        self.hierarchical.sandwich.validate()?;
        self.hierarchical.lower.validate()?;
        self.hierarchical.optimizer.validate()?;
        if self.lower.clip != self.model.clip {
            return Err(Error::InvalidArgument(format!(
                "lower.clip {} differs from model.clip {}",
                self.lower.clip, self.model.clip
            )));
        }
        if !self.manifest.exists() {
            return Err(Error::io(
                &self.manifest,
                std::io::Error::new(std::io::ErrorKind::NotFound, "manifest not found"),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_reach_nested_fields() {
        let c = TrainConfig::circles()
            .with_overrides(&[
                "sandwich.lambda=0",
                "lower.optimizer.lr=0.003",
                "stage=hierarchical",
                "out=runs/a",
            ])
            .unwrap();
        assert_eq!(c.sandwich.lambda, 0.0);
        assert_eq!(c.lower.optimizer.lr, 0.003);
        assert_eq!(c.stage, Stage::Hierarchical);
        assert_eq!(c.out, PathBuf::from("runs/a"));
        assert!(TrainConfig::circles().with_overrides(&["nope=1"]).is_err());
        assert!(TrainConfig::circles().with_overrides(&["steps"]).is_err());
        assert!(TrainConfig::circles().with_overrides(&["steps=-1"]).is_err());
    }

    #[test]
    fn json_round_trip_and_partial_files() {
        let c = TrainConfig::modelnet(64);
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<TrainConfig>(&text).unwrap(), c);
        let partial: TrainConfig = serde_json::from_str(r#"{"steps": 7}"#).unwrap();
        assert_eq!(partial.steps, 7);
        assert_eq!(partial.batch_size, TrainConfig::circles().batch_size);
    }

    #[test]
    fn key_value_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.cfg");
        std::fs::write(&p, "# circles\nsteps = 12\n\nsandwich.lambda=0\nout=runs/b\n").unwrap();
        let c = TrainConfig::load(&p).unwrap();
        assert_eq!((c.steps, c.sandwich.lambda), (12, 0.0));
        assert_eq!(c.out, PathBuf::from("runs/b"));
        std::fs::write(&p, "steps=3\nbogus=1\n").unwrap();
        match TrainConfig::load(&p) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        let j = dir.path().join("run.json");
        std::fs::write(&j, r#"{"steps": 5}"#).unwrap();
        assert_eq!(TrainConfig::load(&j).unwrap().steps, 5);
    }

    #[test]
    fn validation() {
        let dir = tempfile::tempdir().unwrap();
        let m = dir.path().join("m.json");
        std::fs::write(&m, "[]").unwrap();
        let ok = TrainConfig {
            manifest: m.clone(),
            ..TrainConfig::circles()
        };
        assert!(ok.validate().is_ok());
        assert!(TrainConfig { steps: 0, ..ok.clone() }.validate().is_err());
        assert!(TrainConfig {
            manifest: dir.path().join("missing"),
            ..ok.clone()
        }
        .validate()
        .is_err());
        let mut bad = ok;
        bad.sandwich.lambda = 1.5;
        assert!(bad.validate().is_err());
        assert!(TrainConfig::preset("nope").is_err());
    }
}
