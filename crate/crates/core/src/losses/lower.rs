//! The critic lower bound `W_L` and its constrained ascent.
//!
//! Each critic step maximizes the augmented Lagrangian
//!
//! `L = IPM + λ_F (1 - Ω) - (ρ/2)(1 - Ω)²`,  `Ω = ½ E_P f² + ½ E_G f²`,
//!
//! by one Adam step on `-L`, then moves the multiplier `λ_F ← λ_F - ρ (1 - Ω)` and clips
//! every weight back into `[-c, c]`.

use serde::{Deserialize, Serialize};

use crate::diffcore::{AdamConfig, AdamState, Matrix, Tape};
use crate::nets::Critic;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LowerBoundConfig {
    pub critic_steps: usize,
    pub clip: f64,
    /// Fisher penalty weight and multiplier learning rate; 0 disables the constraint.
    pub rho: f64,
    pub optimizer: AdamConfig,
}

impl Default for LowerBoundConfig {
    fn default() -> Self {
        Self {
            critic_steps: 5,
            clip: 0.5,
            rho: 1.0,
            optimizer: AdamConfig::default(),
        }
    }
}

impl LowerBoundConfig {
    pub fn validate(&self) -> Result<()> {
        if self.critic_steps == 0 {
            return Err(Error::InvalidArgument("critic_steps must be at least 1".into()));
        }
        if !(self.clip > 0.0) || !self.clip.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "clip must be positive, got {}",
                self.clip
            )));
        }
        if !(self.rho >= 0.0) || !self.rho.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "rho must be non-negative, got {}",
                self.rho
            )));
        }
        self.optimizer.validate()
    }
}

/// Real and fake points for one object, with the object's code when the critic is conditional.
#[derive(Clone, Copy, Debug)]
pub struct CriticBatch<'a> {
    pub real: &'a Matrix,
    pub fake: &'a Matrix,
    pub cond: Option<&'a [f64]>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriticStepReport {
    /// `E_P f - E_G f`, averaged over objects, before the step.
    pub ipm: f64,
    pub omega: f64,
    /// Augmented Lagrangian before the step.
    pub objective: f64,
    /// Multiplier after the step.
    pub lagrange: f64,
    /// Lipschitz bound after clipping.
    pub k: f64,
}

/// Mean critic score on `real` minus mean on `fake`.
pub fn w_lower_value(critic: &Critic, real: &Matrix, fake: &Matrix, cond: Option<&[f64]>) -> Result<f64> {
    if real.rows() == 0 || fake.rows() == 0 {
        return Err(Error::Empty("W_L needs non-empty real and fake batches".into()));
    }
    let fr = critic.score(real, cond)?;
    let ff = critic.score(fake, cond)?;
    let mean = |v: &[f64]| crate::diffcore::pairwise_sum(v) / v.len() as f64;
    Ok(mean(&fr) - mean(&ff))
}

/// Optimizer and multiplier state carried across critic steps.
#[derive(Debug)]
pub struct CriticTrainer {
    config: LowerBoundConfig,
    adam: AdamState,
    lagrange: f64,
    tape: Tape,
}

impl CriticTrainer {
    pub fn new(config: LowerBoundConfig, critic: &Critic) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            adam: AdamState::new(config.optimizer, critic.params()),
            config,
            lagrange: 0.0,
            tape: Tape::new(),
        })
    }

    pub fn config(&self) -> &LowerBoundConfig {
        &self.config
    }

    pub fn lagrange(&self) -> f64 {
        self.lagrange
    }

    /// `(IPM, Ω, L)` for the current critic at multiplier `lagrange`, without recording a tape.
    pub fn evaluate(&self, critic: &Critic, batches: &[CriticBatch<'_>], lagrange: f64) -> Result<(f64, f64, f64)> {
        if batches.is_empty() {
            return Err(Error::Empty("critic evaluation without batches".into()));
        }
        let mean = |v: &[f64]| crate::diffcore::pairwise_sum(v) / v.len() as f64;
        let (mut ipm, mut omega) = (0.0, 0.0);
        for b in batches {
            let fr = critic.score(b.real, b.cond)?;
            let ff = critic.score(b.fake, b.cond)?;
            ipm += mean(&fr) - mean(&ff);
            let sq = |v: &[f64]| v.iter().map(|x| x * x).collect::<Vec<_>>();
            omega += 0.5 * (mean(&sq(&fr)) + mean(&sq(&ff)));
        }
        let m = batches.len() as f64;
        let (ipm, omega) = (ipm / m, omega / m);
        let slack = 1.0 - omega;
        Ok((
            ipm,
            omega,
            ipm + lagrange * slack - 0.5 * self.config.rho * slack * slack,
        ))
    }

    /// One ascent step over all objects in `batches`, then clipping.
    pub fn step(&mut self, critic: &mut Critic, batches: &[CriticBatch<'_>]) -> Result<CriticStepReport> {
        if batches.is_empty() {
            return Err(Error::Empty("critic step without batches".into()));
        }
        let tape = &mut self.tape;
        tape.clear();
        let binding = critic.params().bind(tape, true);
        let scale = 1.0 / batches.len() as f64;
        let mut ipm = None;
        let mut omega = None;
        for b in batches {
            if b.real.rows() == 0 || b.fake.rows() == 0 {
                return Err(Error::Empty("critic batch with no points".into()));
            }
            let cond = match b.cond {
                Some(c) => Some(tape.constant(Matrix::row_vector(c))?),
                None => None,
            };
            let real = tape.constant(b.real.clone())?;
            let fake = tape.constant(b.fake.clone())?;
            let fr = critic.forward(tape, real, cond, &binding)?;
            let ff = critic.forward(tape, fake, cond, &binding)?;
            let mr = tape.mean(fr)?;
            let mf = tape.mean(ff)?;
            let gap = tape.sub(mr, mf)?;
            let sr = tape.square(fr);
            let sf = tape.square(ff);
            let sr = tape.mean(sr)?;
            let sf = tape.mean(sf)?;
            let second = tape.add(sr, sf)?;
            let second = tape.scale(second, 0.5 * scale);
            let gap = tape.scale(gap, scale);
            ipm = Some(match ipm {
                Some(acc) => tape.add(acc, gap)?,
                None => gap,
            });
            omega = Some(match omega {
                Some(acc) => tape.add(acc, second)?,
                None => second,
            });
        }
        let (ipm, omega) = (ipm.expect("non-empty"), omega.expect("non-empty"));
        let one = tape.constant(Matrix::filled(1, 1, 1.0))?;
        let slack = tape.sub(one, omega)?;
        let slack_sq = tape.square(slack);
        let linear = tape.scale(slack, self.lagrange);
        let quad = tape.scale(slack_sq, -0.5 * self.config.rho);
        let lagr = tape.add(ipm, linear)?;
        let objective = tape.add(lagr, quad)?;
        let loss = tape.scale(objective, -1.0);

        let (ipm_v, omega_v, obj_v) = (tape.scalar(ipm), tape.scalar(omega), tape.scalar(objective));
        if !obj_v.is_finite() {
            return Err(Error::NonFinite(format!(
                "critic objective {obj_v} (ipm {ipm_v}, Ω {omega_v}, λ_F {})",
                self.lagrange
            )));
        }
        let grads = tape.backward_scalar(loss)?;
        critic.params_mut().accumulate(&grads, &binding)?;
        self.adam.step(critic.params_mut())?;
        if self.config.rho > 0.0 {
            self.lagrange -= self.config.rho * (1.0 - omega_v);
        }
        critic.clip_weights(self.config.clip)?;
        Ok(CriticStepReport {
            ipm: ipm_v,
            omega: omega_v,
            objective: obj_v,
            lagrange: self.lagrange,
            k: critic.lipschitz_bound(),
        })
    }
}

/// One constrained ascent step; free-function form of [`CriticTrainer::step`].
pub fn critic_update(
    critic: &mut Critic,
    trainer: &mut CriticTrainer,
    batches: &[CriticBatch<'_>],
) -> Result<CriticStepReport> {
    trainer.step(critic, batches)
}
