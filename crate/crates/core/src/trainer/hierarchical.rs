//! Stage 2: `G_θ(u)` trained on the codes `Q(X_m)` of a frozen stage-1 model.

use std::time::Instant;

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rayon::prelude::*;

use super::conditional::{add_gradients, gradient_list, matched_targets, TrainReport};
use super::config::TrainConfig;
use super::log::{write_log, LogRow};
use crate::data::load_dataset;
use crate::diffcore::{AdamState, Matrix, Tape};
use crate::losses::{sandwich_loss, w_lower_value, CriticBatch, CriticTrainer};
use crate::nets::{normal_matrix, Critic, Model, PointCloud};
use crate::{Error, Result};

/// `Q(X)` for every cloud, one row per cloud.
pub fn collect_codes(model: &Model, clouds: &[PointCloud]) -> Result<Matrix> {
    let codes: Vec<Vec<f64>> = clouds
        .par_iter()
        .map(|c| Ok(model.encoder.encode(c)?.as_slice().to_vec()))
        .collect::<Result<_>>()?;
    Matrix::from_rows(&codes)
}

/// Stateful stage-2 optimizer over a fixed code matrix.
pub struct HierarchicalTrainer {
    config: TrainConfig,
    codes: Matrix,
    critic: Critic,
    critic_trainer: CriticTrainer,
    adam: AdamState,
    step: usize,
}

impl HierarchicalTrainer {
    pub fn new<R: Rng + ?Sized>(config: &TrainConfig, model: &Model, codes: Matrix, rng: &mut R) -> Result<Self> {
        if codes.rows() == 0 {
            return Err(Error::Empty("no latent codes".into()));
        }
        let h = &config.hierarchical;
        let critic = Critic::new(
            model.config.latent_dim,
            0,
            &h.critic_hidden,
            model.config.activation,
            h.lower.clip,
            rng,
        )?;
        Ok(Self {
            critic_trainer: CriticTrainer::new(h.lower, &critic)?,
            critic,
            adam: AdamState::new(h.optimizer, model.object_generator.params()),
            config: config.clone(),
            codes,
            step: 0,
        })
    }

    pub fn step<R: Rng + ?Sized>(&mut self, model: &mut Model, rng: &mut R) -> Result<LogRow> {
        let h = &self.config.hierarchical;
        let b = h.batch_size.min(self.codes.rows());
        let mut idx = sample_indices(rng, self.codes.rows(), b).into_vec();
        idx.sort_unstable();
        let real = self.codes.select_rows(&idx);
        let u = normal_matrix(b, model.config.object_noise_dim, rng);
        let gt = &model.object_generator;
        let fake_now = gt.codes_from_noise(&u)?;

        let lambda = h.sandwich.lambda;
        let batch = [CriticBatch {
            real: &real,
            fake: &fake_now,
            cond: None,
        }];
        let critic_objective = if lambda > 0.0 {
            let mut last = 0.0;
            for _ in 0..h.lower.critic_steps {
                last = self.critic_trainer.step(&mut self.critic, &batch)?.objective;
            }
            last
        } else {
            self.critic_trainer
                .evaluate(&self.critic, &batch, self.critic_trainer.lagrange())?
                .2
        };

        let (target, w_upper) = matched_targets(&real, &fake_now, &self.config.auction)?;
        let w_lower = w_lower_value(&self.critic, &real, &fake_now, None)?;
        let mut tape = Tape::new();
        let bt = gt.params().bind(&mut tape, true);
        let un = tape.constant(u)?;
        let fake = gt.forward(&mut tape, un, &bt)?;
        let t = tape.constant(target)?;
        let diff = tape.sub(fake, t)?;
        let abs = tape.abs(diff);
        let wu = tape.mean(abs)?;
        let wu = tape.scale(wu, (1.0 - lambda) * real.cols() as f64);
        let loss = if lambda > 0.0 {
            let bc = self.critic.params().bind(&mut tape, false);
            let ff = self.critic.forward(&mut tape, fake, None, &bc)?;
            let mf = tape.mean(ff)?;
            let wl = tape.scale(mf, -lambda);
            tape.add(wu, wl)?
        } else {
            wu
        };
        let grads = tape.backward_scalar(loss)?;
        let row = LogRow {
            step: self.step,
            w_upper,
            w_lower,
            sandwich: sandwich_loss(w_upper, w_lower, lambda)?,
            critic_objective,
            k: self.critic.lipschitz_bound(),
        };
        if !row.is_finite() {
            return Err(Error::NonFinite(format!("hierarchical step {}: {row:?}", self.step)));
        }
        let g = gradient_list(&grads, &bt, gt.params());
        add_gradients(model.object_generator.params_mut(), &g)?;
        self.adam.step(model.object_generator.params_mut())?;
        self.step += 1;
        Ok(row)
    }
}

/// Loads the stage-1 model from `config.out`, trains `G_θ` with `Q` and `G_x` frozen, and
/// saves the model back with the hierarchical flag set.
pub fn train_hierarchical(config: &TrainConfig) -> Result<TrainReport> {
    config.validate()?;
    let manifest = config.out.join("manifest.json");
    if !manifest.exists() {
        return Err(Error::Checkpoint(format!(
            "no stage-1 model in {}; train the conditional stage first",
            config.out.display()
        )));
    }
    let mut model = Model::load(&config.out)?;
    let raw = load_dataset(&config.manifest)?.clouds;
    if raw[0].dim() != model.config.data_dim {
        return Err(Error::Shape(format!(
            "model is {}-d, dataset is {}-d",
            model.config.data_dim,
            raw[0].dim()
        )));
    }
    let clouds = raw
        .iter()
        .map(|c| model.normalization.apply(c))
        .collect::<Result<Vec<_>>>()?;
    let codes = collect_codes(&model, &clouds)?;
    let mut rng = crate::seeded_rng(config.seed.wrapping_add(1));
    let mut trainer = HierarchicalTrainer::new(config, &model, codes, &mut rng)?;
    let start = Instant::now();
    let log = config.log_path_for(super::config::Stage::Hierarchical);
    let mut rows = Vec::with_capacity(config.hierarchical.steps);
    for s in 0..config.hierarchical.steps {
        match trainer.step(&mut model, &mut rng) {
            Ok(row) => rows.push(row),
            Err(e) => {
                write_log(&log, &rows)?;
                log::error!("aborting hierarchical stage at step {s}: {e}; stage-1 model left unchanged");
                return Err(e);
            }
        }
    }
    model.hierarchical_trained = true;
    model.save(&config.out)?;
    write_log(&log, &rows)?;
    Ok(TrainReport {
        rows,
        wall_time_secs: start.elapsed().as_secs_f64(),
        checkpoint: config.out.clone(),
        log,
    })
}
