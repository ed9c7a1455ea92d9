//! Jacobi auction for the minimum-cost assignment, with ε-scaling.
//!
//! Every unassigned bidder `i` looks at the net cost `C[i][j] + p[j]`, picks the cheapest
//! object `j1` (lowest index on ties) and bids `p[j1] + (v2 - v1) + ε`, where `v1`, `v2` are
//! the best and second-best net costs. Each object goes to its highest bid (lowest bidder
//! index on ties) and the displaced owner becomes unassigned. A phase ends when everyone
//! is assigned; it then satisfies ε-complementary slackness, so its total cost is at most
//! `optimal + n·ε`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cost::{cost_matrix, Metric};
use super::Assignment;
use crate::diffcore::{pairwise_sum, Matrix};
use crate::nets::PointCloud;
use crate::{Error, Result};

const PARALLEL_BIDDERS: usize = 256;

/// How the final bid increment is chosen from the cost matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EpsilonRule {
    /// `δ · mean pairwise cost / n`; the additive gap `n·ε` is then `δ · mean cost`.
    MeanCostOverN { delta: f64 },
    /// `fraction · mean pairwise cost`.
    MeanCost { fraction: f64 },
    /// A fixed increment in cost units.
    Absolute { epsilon: f64 },
}

impl EpsilonRule {
    fn resolve(self, mean_cost: f64, n: usize) -> f64 {
        match self {
            EpsilonRule::MeanCostOverN { delta } => delta * mean_cost / n as f64,
            EpsilonRule::MeanCost { fraction } => fraction * mean_cost,
            EpsilonRule::Absolute { epsilon } => epsilon,
        }
    }

    fn value(self) -> f64 {
        match self {
            EpsilonRule::MeanCostOverN { delta } => delta,
            EpsilonRule::MeanCost { fraction } => fraction,
            EpsilonRule::Absolute { epsilon } => epsilon,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuctionConfig {
    pub metric: Metric,
    /// Final-phase ε.
    pub epsilon: EpsilonRule,
    /// Run geometrically decreasing phases; otherwise a single phase at the final ε.
    pub epsilon_scaling: bool,
    /// Ratio between consecutive phase increments, `θ_scale > 1`.
    pub scaling_factor: f64,
    /// First-phase ε as a fraction of the largest cost.
    pub initial_fraction: f64,
    /// Bidding rounds allowed across all phases.
    pub max_rounds: usize,
}

impl Default for AuctionConfig {
    fn default() -> Self {
        Self {
            metric: Metric::L1,
            epsilon: EpsilonRule::MeanCostOverN { delta: 0.01 },
            epsilon_scaling: true,
            scaling_factor: 5.0,
            initial_fraction: 0.25,
            max_rounds: 1_000_000,
        }
    }
}

impl AuctionConfig {
    /// Single phase at `ε = 0.05 · mean cost`, used inside training steps.
    pub fn training() -> Self {
        Self {
            epsilon: EpsilonRule::MeanCost { fraction: 0.05 },
            epsilon_scaling: false,
            ..Self::default()
        }
    }

    /// Full ε-scaling down to `δ · mean cost / n`.
    pub fn with_relative_gap(delta: f64) -> Self {
        Self {
            epsilon: EpsilonRule::MeanCostOverN { delta },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let eps = self.epsilon.value();
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::InvalidArgument(format!("auction ε must be positive, got {eps}")));
        }
        if !(self.scaling_factor > 1.0) {
            return Err(Error::InvalidArgument(format!(
                "ε-scaling factor must exceed 1, got {}",
                self.scaling_factor
            )));
        }
        if !(self.initial_fraction > 0.0) {
            return Err(Error::InvalidArgument("initial ε fraction must be positive".into()));
        }
        if self.max_rounds == 0 {
            return Err(Error::InvalidArgument("max_rounds must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseStats {
    pub epsilon: f64,
    pub rounds: usize,
    pub total_cost: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuctionStats {
    pub phases: Vec<PhaseStats>,
    pub epsilon_final: f64,
    /// Guaranteed additive gap `n · ε_final` on the total cost.
    pub gap_bound: f64,
    pub rounds: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuctionResult {
    pub assignment: Assignment,
    pub stats: AuctionStats,
}

/// Auction on a square cost matrix.
pub fn auction_matrix(costs: &Matrix, config: &AuctionConfig) -> Result<AuctionResult> {
    config.validate()?;
    let n = costs.rows();
    if n == 0 || costs.cols() != n {
        return Err(Error::Shape(format!(
            "auction needs a non-empty square cost matrix, got {}x{}",
            costs.rows(),
            costs.cols()
        )));
    }
    if !costs.is_finite() {
        return Err(Error::NonFinite("auction cost matrix".into()));
    }
    let mean_cost = pairwise_sum(costs.as_slice()) / (n * n) as f64;
    let max_cost = costs.max_abs();
    if max_cost == 0.0 {
        let assignment = Assignment::new((0..n).collect(), costs)?;
        return Ok(AuctionResult {
            assignment,
            stats: AuctionStats {
                phases: vec![],
                epsilon_final: 0.0,
                gap_bound: 0.0,
                rounds: 0,
            },
        });
    }
    let eps_final = config.epsilon.resolve(mean_cost, n);
    let mut schedule = Vec::new();
    if config.epsilon_scaling {
        let mut eps = config.initial_fraction * max_cost;
        while eps > eps_final {
            schedule.push(eps);
            eps /= config.scaling_factor;
        }
    }
    schedule.push(eps_final);

    let mut prices = vec![0.0; n];
    let mut phases = Vec::with_capacity(schedule.len());
    let mut rounds_total = 0;
    let mut perm = Vec::new();
    for &eps in &schedule {
        let (p, rounds) = run_phase(
            costs,
            &mut prices,
            eps,
            config.max_rounds - rounds_total.min(config.max_rounds),
            rounds_total,
        )?;
        rounds_total += rounds;
        let per: Vec<f64> = p.iter().enumerate().map(|(i, &j)| costs.get(i, j)).collect();
        phases.push(PhaseStats {
            epsilon: eps,
            rounds,
            total_cost: pairwise_sum(&per),
        });
        perm = p;
    }
    let assignment = Assignment::new(perm, costs)?;
    Ok(AuctionResult {
        assignment,
        stats: AuctionStats {
            phases,
            epsilon_final: eps_final,
            gap_bound: n as f64 * eps_final,
            rounds: rounds_total,
        },
    })
}

fn best_bid(row: &[f64], prices: &[f64], eps: f64) -> (usize, f64) {
    let (mut j1, mut v1, mut v2) = (0, f64::INFINITY, f64::INFINITY);
    for (j, (&c, &p)) in row.iter().zip(prices).enumerate() {
        let v = c + p;
        if v < v1 {
            v2 = v1;
            v1 = v;
            j1 = j;
        } else if v < v2 {
            v2 = v;
        }
    }
    let gap = if v2.is_finite() { v2 - v1 } else { 0.0 };
    (j1, prices[j1] + gap + eps)
}

fn run_phase(
    costs: &Matrix,
    prices: &mut [f64],
    eps: f64,
    budget: usize,
    rounds_before: usize,
) -> Result<(Vec<usize>, usize)> {
    let n = costs.rows();
    let mut owner: Vec<Option<usize>> = vec![None; n];
    let mut assigned: Vec<Option<usize>> = vec![None; n];
    let mut unassigned: Vec<usize> = (0..n).collect();
    let mut best: Vec<Option<(usize, f64)>> = vec![None; n];
    let mut touched = Vec::new();
    let mut rounds = 0;
    while !unassigned.is_empty() {
        if rounds >= budget {
            return Err(Error::NoConvergence(format!(
                "{} rounds in total ({} in the current phase at ε={eps:e}), {} of {n} bidders still unassigned",
                rounds_before + rounds,
                rounds,
                unassigned.len()
            )));
        }
        rounds += 1;
        let snapshot: &[f64] = prices;
        let bids: Vec<(usize, usize, f64)> = if unassigned.len() >= PARALLEL_BIDDERS {
            unassigned
                .par_iter()
                .map(|&i| {
                    let (j, b) = best_bid(costs.row(i), snapshot, eps);
                    (i, j, b)
                })
                .collect()
        } else {
            unassigned
                .iter()
                .map(|&i| {
                    let (j, b) = best_bid(costs.row(i), snapshot, eps);
                    (i, j, b)
                })
                .collect()
        };
        for &(i, j, b) in &bids {
            match best[j] {
                None => {
                    best[j] = Some((i, b));
                    touched.push(j);
                }
                Some((_, bb)) if b > bb => best[j] = Some((i, b)),
                _ => {}
            }
        }
        touched.sort_unstable();
        let mut next = Vec::new();
        for &j in &touched {
            let (i, b) = best[j].take().expect("touched objects carry a bid");
            prices[j] = b;
            if let Some(prev) = owner[j].replace(i) {
                assigned[prev] = None;
                next.push(prev);
            }
            assigned[i] = Some(j);
        }
        touched.clear();
        next.extend(bids.iter().map(|&(i, _, _)| i).filter(|&i| assigned[i].is_none()));
        next.sort_unstable();
        next.dedup();
        unassigned = next;
    }
    Ok((
        assigned
            .into_iter()
            .map(|a| a.expect("phase ends fully assigned"))
            .collect(),
        rounds,
    ))
}

/// Approximately optimal bijection between equal-size clouds.
pub fn auction_assign(x: &PointCloud, y: &PointCloud, config: &AuctionConfig) -> Result<AuctionResult> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!(
            "auction needs equal-size sets, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    auction_matrix(&cost_matrix(x, y, config.metric)?, config)
}

/// Average matched cost of the auction assignment; never below the exact optimum.
pub fn w_upper(x: &PointCloud, y: &PointCloud, config: &AuctionConfig) -> Result<f64> {
    Ok(auction_assign(x, y, config)?.assignment.average_cost())
}
