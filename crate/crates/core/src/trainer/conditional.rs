//! Stage 1: `Q`, `G_x` and the conditional critic under the sandwiched objective.

use std::path::PathBuf;
use std::time::Instant;

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rayon::prelude::*;

use super::config::TrainConfig;
use super::log::{write_log, LogRow};
use crate::data::{dataset_normalization, load_dataset};
use crate::diffcore::{AdamState, Binding, Gradients, Matrix, ParamSet, Tape};
use crate::losses::{sandwich_loss, CriticBatch, CriticTrainer};
use crate::nets::{normal_matrix, Critic, Model, Normalization, PointCloud};
use crate::ot::{auction_matrix, cost_matrix};
use crate::{Error, Result};

/// Loss series and artifacts of one training run.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub rows: Vec<LogRow>,
    pub wall_time_secs: f64,
    pub checkpoint: PathBuf,
    pub log: PathBuf,
}

impl TrainReport {
    pub fn w_upper(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.w_upper).collect()
    }

    pub fn w_lower(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.w_lower).collect()
    }

    pub fn sandwich(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.sandwich).collect()
    }
}

/// Trailing means over a window of `w` entries (shorter at the start).
pub fn running_mean(series: &[f64], w: usize) -> Vec<f64> {
    let w = w.max(1);
    let mut out = Vec::with_capacity(series.len());
    let mut acc = 0.0;
    for (i, &v) in series.iter().enumerate() {
        acc += v;
        if i >= w {
            acc -= series[i - w];
        }
        out.push(acc / (i + 1).min(w) as f64);
    }
    out
}

/// Picks `n` rows of `cloud`: a random subset when it has enough points, draws with
/// replacement otherwise.
pub(crate) fn subsample<R: Rng + ?Sized>(cloud: &PointCloud, n: usize, rng: &mut R) -> Result<Matrix> {
    let m = cloud.len();
    let idx: Vec<usize> = if m == n {
        (0..n).collect()
    } else if m > n {
        let mut v = sample_indices(rng, m, n).into_vec();
        v.sort_unstable();
        v
    } else {
        (0..n).map(|_| rng.random_range(0..m)).collect()
    };
    Ok(cloud.subset(&idx)?.into_matrix())
}

pub(crate) fn gradient_list(grads: &Gradients, binding: &Binding, params: &ParamSet) -> Vec<Matrix> {
    binding
        .nodes()
        .iter()
        .zip(params.iter())
        .map(|(&id, p)| {
            grads
                .get(id)
                .cloned()
                .unwrap_or_else(|| Matrix::zeros(p.shape().0, p.shape().1))
        })
        .collect()
}

pub(crate) fn add_gradients(params: &mut ParamSet, grads: &[Matrix]) -> Result<()> {
    for (i, g) in grads.iter().enumerate() {
        params.get_mut(i).accumulate_grad(g)?;
    }
    Ok(())
}

/// Real points re-ordered so that row `j` is the real point matched to generated row `j`.
pub(crate) fn matched_targets(
    real: &Matrix,
    fake: &Matrix,
    config: &crate::ot::AuctionConfig,
) -> Result<(Matrix, f64)> {
    let rc = PointCloud::new(real.clone())?;
    let fc = PointCloud::new(fake.clone())?;
    let costs = cost_matrix(&rc, &fc, config.metric)?;
    let result = auction_matrix(&costs, config)?;
    let mut target = Matrix::zeros(real.rows(), real.cols());
    for (i, &j) in result.assignment.perm().iter().enumerate() {
        target.row_mut(j).copy_from_slice(real.row(i));
    }
    Ok((target, result.assignment.average_cost()))
}

/// Recorded forward pass of `Q` and `G_x` for one object.
struct ObjectForward {
    tape: Tape,
    bq: Binding,
    bg: Binding,
    fake: crate::diffcore::NodeId,
    psi_value: Vec<f64>,
    fake_value: Matrix,
}

/// Per-object contribution to one generator step.
struct ObjectGrad {
    encoder: Vec<Matrix>,
    generator: Vec<Matrix>,
    w_upper: f64,
    w_lower: f64,
}

/// Stateful stage-1 optimizer over a fixed set of normalized training clouds.
pub struct ConditionalTrainer {
    config: TrainConfig,
    clouds: Vec<PointCloud>,
    critic: CriticTrainer,
    adam_q: AdamState,
    adam_g: AdamState,
    step: usize,
}

impl ConditionalTrainer {
    /// `clouds` must already be in the model's normalized coordinates.
    pub fn new(config: &TrainConfig, model: &Model, clouds: Vec<PointCloud>) -> Result<Self> {
        if clouds.is_empty() {
            return Err(Error::Empty("no training clouds".into()));
        }
        if let Some(c) = clouds.iter().find(|c| c.dim() != model.config.data_dim) {
            return Err(Error::Shape(format!(
                "model expects {}-d points, dataset has {}-d",
                model.config.data_dim,
                c.dim()
            )));
        }
        let critic = model
            .critic
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("model has no critic".into()))?;
        Ok(Self {
            critic: CriticTrainer::new(config.lower, critic)?,
            adam_q: AdamState::new(config.optimizer, model.encoder.params()),
            adam_g: AdamState::new(config.optimizer, model.generator.params()),
            config: config.clone(),
            clouds,
            step: 0,
        })
    }

    pub fn steps_taken(&self) -> usize {
        self.step
    }

    /// One generator step, preceded by the critic's ascent steps when `λ > 0`.
    pub fn step<R: Rng + ?Sized>(&mut self, model: &mut Model, rng: &mut R) -> Result<LogRow> {
        let cfg = &self.config;
        let (b, n) = (cfg.batch_size.min(self.clouds.len()), cfg.points_per_object);
        let mut chosen = sample_indices(rng, self.clouds.len(), b).into_vec();
        chosen.sort_unstable();
        let mut reals = Vec::with_capacity(b);
        let mut noises = Vec::with_capacity(b);
        for &i in &chosen {
            reals.push(subsample(&self.clouds[i], n, rng)?);
            noises.push(normal_matrix(n, model.config.noise_dim, rng));
        }

        let encoder = &model.encoder;
        let generator = &model.generator;
        let mut forwards: Vec<ObjectForward> = reals
            .par_iter()
            .zip(noises.par_iter())
            .map(|(real, z)| {
                let mut tape = Tape::new();
                let bq = encoder.params().bind(&mut tape, true);
                let bg = generator.params().bind(&mut tape, true);
                let x = tape.constant(real.clone())?;
                let psi = encoder.forward(&mut tape, x, &bq)?;
                let zn = tape.constant(z.clone())?;
                let fake = generator.forward(&mut tape, zn, psi, &bg)?;
                Ok(ObjectForward {
                    psi_value: tape.value(psi).as_slice().to_vec(),
                    fake_value: tape.value(fake).clone(),
                    tape,
                    bq,
                    bg,
                    fake,
                })
            })
            .collect::<Result<_>>()?;

        let lambda = cfg.sandwich.lambda;
        let critic = model.critic.as_mut().expect("checked at construction");
        let critic_objective = {
            let batches: Vec<CriticBatch<'_>> = reals
                .iter()
                .zip(&forwards)
                .map(|(real, f)| CriticBatch {
                    real,
                    fake: &f.fake_value,
                    cond: Some(&f.psi_value),
                })
                .collect();
            if lambda > 0.0 {
                let mut last = 0.0;
                for _ in 0..cfg.lower.critic_steps {
                    last = self.critic.step(critic, &batches)?.objective;
                }
                last
            } else {
                self.critic.evaluate(critic, &batches, self.critic.lagrange())?.2
            }
        };

        let critic: &Critic = critic;
        let scale = 1.0 / b as f64;
        let auction = &cfg.auction;
        let parts: Vec<ObjectGrad> = reals
            .par_iter()
            .zip(forwards.par_iter_mut())
            .map(|(real, f)| {
                let (target, w_u) = matched_targets(real, &f.fake_value, auction)?;
                let cond = Some(f.psi_value.as_slice());
                let real_mean = mean(&critic.score(real, cond)?);
                let tape = &mut f.tape;
                let t = tape.constant(target)?;
                let diff = tape.sub(f.fake, t)?;
                let abs = tape.abs(diff);
                let wu = tape.mean(abs)?;
                let wu = tape.scale(wu, (1.0 - lambda) * scale * real.cols() as f64);
                let (loss, w_l) = if lambda > 0.0 {
                    let bc = critic.params().bind(tape, false);
                    let cn = tape.constant(Matrix::row_vector(&f.psi_value))?;
                    let ff = critic.forward(tape, f.fake, Some(cn), &bc)?;
                    let mf = tape.mean(ff)?;
                    let w_l = real_mean - tape.scalar(mf);
                    let wl = tape.scale(mf, -lambda * scale);
                    (tape.add(wu, wl)?, w_l)
                } else {
                    (wu, real_mean - mean(&critic.score(&f.fake_value, cond)?))
                };
                let grads = tape.backward_scalar(loss)?;
                Ok(ObjectGrad {
                    encoder: gradient_list(&grads, &f.bq, encoder.params()),
                    generator: gradient_list(&grads, &f.bg, generator.params()),
                    w_upper: w_u,
                    w_lower: w_l,
                })
            })
            .collect::<Result<_>>()?;

        let w_upper = parts.iter().map(|p| p.w_upper).sum::<f64>() * scale;
        let w_lower = parts.iter().map(|p| p.w_lower).sum::<f64>() * scale;
        let row = LogRow {
            step: self.step,
            w_upper,
            w_lower,
            sandwich: sandwich_loss(w_upper, w_lower, lambda)?,
            critic_objective,
            k: critic.lipschitz_bound(),
        };
        if !row.is_finite() {
            return Err(Error::NonFinite(format!("training step {}: {row:?}", self.step)));
        }
        for p in &parts {
            add_gradients(model.encoder.params_mut(), &p.encoder)?;
            add_gradients(model.generator.params_mut(), &p.generator)?;
        }
        self.adam_q.step(model.encoder.params_mut())?;
        self.adam_g.step(model.generator.params_mut())?;
        self.step += 1;
        Ok(row)
    }
}

fn mean(v: &[f64]) -> f64 {
    crate::diffcore::pairwise_sum(v) / v.len() as f64
}

/// Loads the manifest, normalizes, and returns the clouds with the fitted transform.
pub(crate) fn prepare_clouds(config: &TrainConfig) -> Result<(Vec<PointCloud>, Normalization)> {
    let dataset = load_dataset(&config.manifest)?;
    let dim = dataset.clouds[0].dim();
    if dim != config.model.data_dim {
        return Err(Error::Shape(format!(
            "{}: clouds are {dim}-d, model.data_dim is {}",
            config.manifest.display(),
            config.model.data_dim
        )));
    }
    let norm = if config.normalize {
        dataset_normalization(&dataset.clouds)?
    } else {
        Normalization::identity(dim)
    };
    let clouds = dataset.clouds.iter().map(|c| norm.apply(c)).collect::<Result<_>>()?;
    Ok((clouds, norm))
}

/// Runs stage 1 from fresh weights, writing the model to `config.out` and the loss log.
/// On a non-finite step the last good model and the log so far are written before the
/// error is returned.
pub fn train_conditional(config: &TrainConfig) -> Result<TrainReport> {
    config.validate()?;
    let (clouds, norm) = prepare_clouds(config)?;
    let mut rng = crate::seeded_rng(config.seed);
    let mut model = Model::new(&config.model, &mut rng)?;
    model.normalization = norm;
    let mut trainer = ConditionalTrainer::new(config, &model, clouds)?;
    let start = Instant::now();
    let log = config.log_path_for(super::config::Stage::Conditional);
    let mut rows = Vec::with_capacity(config.steps);
    for s in 0..config.steps {
        match trainer.step(&mut model, &mut rng) {
            Ok(row) => rows.push(row),
            Err(e) => {
                model.save(&config.out)?;
                write_log(&log, &rows)?;
                log::error!(
                    "aborting at step {s}: {e}; last good model saved to {}",
                    config.out.display()
                );
                return Err(e);
            }
        }
        if (s + 1) % config.checkpoint_every == 0 && s + 1 < config.steps {
            model.save(&config.out)?;
            write_log(&log, &rows)?;
            log::info!(
                "step {}: w_upper {:.4} w_lower {:.4}",
                s + 1,
                rows[s].w_upper,
                rows[s].w_lower
            );
        }
    }
    model.save(&config.out)?;
    write_log(&log, &rows)?;
    Ok(TrainReport {
        rows,
        wall_time_secs: start.elapsed().as_secs_f64(),
        checkpoint: config.out.clone(),
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_circles, CircleDatasetConfig};
    use crate::ot::AuctionConfig;

    fn small() -> (TrainConfig, Vec<PointCloud>) {
        let ds = gen_circles(&CircleDatasetConfig {
            clouds: 12,
            points: 30,
            seed: 5,
            ..Default::default()
        })
        .unwrap();
        let norm = dataset_normalization(&ds.clouds).unwrap();
        let clouds = ds.clouds.iter().map(|c| norm.apply(c).unwrap()).collect();
        let config = TrainConfig {
            batch_size: 4,
            points_per_object: 20,
            ..TrainConfig::circles()
        };
        (config, clouds)
    }

    fn run(config: &TrainConfig, clouds: &[PointCloud], steps: usize) -> (Model, Vec<LogRow>) {
        let mut rng = crate::seeded_rng(config.seed);
        let mut model = Model::new(&config.model, &mut rng).unwrap();
        let mut t = ConditionalTrainer::new(config, &model, clouds.to_vec()).unwrap();
        let rows = (0..steps).map(|_| t.step(&mut model, &mut rng).unwrap()).collect();
        (model, rows)
    }

    #[test]
    fn running_mean_windows() {
        assert_eq!(running_mean(&[2.0, 4.0, 6.0, 8.0], 2), vec![2.0, 3.0, 5.0, 7.0]);
        assert_eq!(running_mean(&[1.0, 3.0], 0), vec![1.0, 3.0]);
        assert!(running_mean(&[], 5).is_empty());
    }

    #[test]
    fn subsample_sizes() {
        let mut rng = crate::seeded_rng(0);
        let c = PointCloud::from_rows(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]).unwrap();
        assert_eq!(subsample(&c, 3, &mut rng).unwrap(), c.points().clone());
        let two = subsample(&c, 2, &mut rng).unwrap();
        assert!(two.row(0)[0] < two.row(1)[0]);
        assert_eq!(subsample(&c, 7, &mut rng).unwrap().rows(), 7);
    }

    #[test]
    fn matched_targets_permute_the_real_rows() {
        let real = Matrix::from_rows(&[[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]]).unwrap();
        let fake = Matrix::from_rows(&[[0.0, 9.0], [1.0, 0.0], [9.0, 1.0]]).unwrap();
        let (t, cost) = matched_targets(&real, &fake, &AuctionConfig::default()).unwrap();
        assert_eq!(t, Matrix::from_rows(&[[0.0, 10.0], [0.0, 0.0], [10.0, 0.0]]).unwrap());
        assert!((cost - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn identical_seeds_give_identical_runs() {
        let (config, clouds) = small();
        let (m1, r1) = run(&config, &clouds, 3);
        let (m2, r2) = run(&config, &clouds, 3);
        assert_eq!(r1, r2);
        assert_eq!(m1, m2);
        let (_, r3) = run(&TrainConfig { seed: 1, ..config }, &clouds, 3);
        assert_ne!(r1, r3);
    }

    #[test]
    fn critic_stays_clipped_every_step() {
        let (config, clouds) = small();
        let mut rng = crate::seeded_rng(2);
        let mut model = Model::new(&config.model, &mut rng).unwrap();
        let mut t = ConditionalTrainer::new(&config, &model, clouds).unwrap();
        for _ in 0..5 {
            let row = t.step(&mut model, &mut rng).unwrap();
            let critic = model.critic.as_ref().unwrap();
            assert!(critic.max_abs_weight() <= config.model.clip);
            assert_eq!(row.k, critic.lipschitz_bound());
            assert!(row.is_finite());
        }
        assert_eq!(t.steps_taken(), 5);
    }

    #[test]
    fn lambda_zero_leaves_the_critic_alone() {
        let (mut config, clouds) = small();
        config.sandwich.lambda = 0.0;
        let mut rng = crate::seeded_rng(3);
        let mut model = Model::new(&config.model, &mut rng).unwrap();
        let critic_before = model.critic.clone();
        let generator_before = model.generator.clone();
        let mut t = ConditionalTrainer::new(&config, &model, clouds).unwrap();
        for _ in 0..3 {
            let row = t.step(&mut model, &mut rng).unwrap();
            assert_eq!(row.sandwich, row.w_upper);
        }
        assert_eq!(model.critic, critic_before);
        assert_ne!(model.generator, generator_before);
    }

    #[test]
    fn non_finite_weights_abort_the_step() {
        let (config, clouds) = small();
        let mut rng = crate::seeded_rng(4);
        let mut model = Model::new(&config.model, &mut rng).unwrap();
        let mut t = ConditionalTrainer::new(&config, &model, clouds).unwrap();
        for i in 0..model.generator.params().len() {
            model.generator.params_mut().get_mut(i).update(|_, _| 1e200).unwrap();
        }
        let err = t.step(&mut model, &mut rng).unwrap_err();
        assert_eq!(err.exit_code(), 3, "{err}");
    }

    #[test]
    fn rejects_bad_inputs() {
        let (config, clouds) = small();
        let mut rng = crate::seeded_rng(0);
        let model = Model::new(&config.model, &mut rng).unwrap();
        assert!(ConditionalTrainer::new(&config, &model, vec![]).is_err());
        let three_d = PointCloud::from_rows(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]).unwrap();
        assert!(ConditionalTrainer::new(&config, &model, vec![three_d]).is_err());
        let mut no_critic = model;
        no_critic.critic = None;
        assert!(ConditionalTrainer::new(&config, &no_critic, clouds).is_err());
    }
}
