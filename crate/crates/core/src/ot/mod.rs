//! Point-set assignment: the auction solver behind `W_U` and an exact Hungarian oracle.

pub mod auction;
pub mod cost;
pub mod hungarian;

pub use auction::{
    auction_assign, auction_matrix, w_upper, AuctionConfig, AuctionResult, AuctionStats, EpsilonRule, PhaseStats,
};
pub use cost::{cost, cost_matrix, Metric};
pub use hungarian::{hungarian_assign, hungarian_matrix, MAX_HUNGARIAN};

use crate::diffcore::Matrix;
use crate::{Error, Result};

/// A bijection `i → perm[i]` between two equal-size point sets, with its cost.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    perm: Vec<usize>,
    total: f64,
}

impl Assignment {
    /// Validates `perm` as a bijection and prices it against `costs`.
    pub fn new(perm: Vec<usize>, costs: &Matrix) -> Result<Self> {
        let n = costs.rows();
        if costs.cols() != n || perm.len() != n {
            return Err(Error::Shape(format!(
                "assignment of length {} against a {}x{} cost matrix",
                perm.len(),
                costs.rows(),
                costs.cols()
            )));
        }
        let mut seen = vec![false; n];
        for &j in &perm {
            if j >= n || std::mem::replace(&mut seen[j], true) {
                return Err(Error::InvalidArgument(format!("{perm:?} is not a permutation")));
            }
        }
        let per: Vec<f64> = perm.iter().enumerate().map(|(i, &j)| costs.get(i, j)).collect();
        Ok(Self {
            total: crate::diffcore::exact_sum(&per),
            perm,
        })
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn total_cost(&self) -> f64 {
        self.total
    }

    pub fn average_cost(&self) -> f64 {
        self.total / self.perm.len() as f64
    }

    /// `inverse()[perm[i]] == i`.
    pub fn inverse(&self) -> Vec<usize> {
        let mut inv = vec![0; self.perm.len()];
        for (i, &j) in self.perm.iter().enumerate() {
            inv[j] = i;
        }
        inv
    }
}
