//! Brute-force check that mixing an upper and a lower estimator can beat both.
//!
//! Write `e_U = W_U - w ∈ [ε1 w, ε2 w]` and `e_L = w - W_L ∈ [ε1 w, ε2 w]`. Then
//! `W_λ - w = (1-λ) e_U - λ e_L`, which is affine in `(e_U, e_L)`, so its largest magnitude
//! over the admissible box sits at a corner. For `λ < 1/2` that worst case is
//! `((1-λ) ε2 - λ ε1) w`, which drops below `ε1 w ≤ min(|e_U|, |e_L|)` exactly when
//! `λ > (ε2 - ε1)/(ε2 + ε1)`; the window is non-empty iff `ε2 < 3 ε1`.

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Lemma1Report {
    /// Open interval `((ε2-ε1)/(ε2+ε1), 1/2)`.
    pub window: (f64, f64),
    pub lambda: f64,
    /// `|W_λ - w|` for the symmetric extremes `W_U = (1+ε2) w`, `W_L = (1-ε2) w`.
    pub symmetric_error: f64,
    /// `min(|W_U - w|, |W_L - w|)` for those extremes, i.e. `ε2 w`.
    pub symmetric_one_sided: f64,
    /// Largest `|W_λ - w|` over every admissible `(W_U, W_L)`.
    pub worst_case_error: f64,
    /// Smallest possible one-sided error, `ε1 w`.
    pub one_sided_floor: f64,
    /// Whether λ came from the grid or from the window midpoint.
    pub from_grid: bool,
}

/// `{0.01, 0.02, ..., 0.49}`.
pub fn default_lambda_grid() -> Vec<f64> {
    (1..50).map(|i| i as f64 / 100.0).collect()
}

fn worst_case(w: f64, eps1: f64, eps2: f64, lambda: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for e_u in [eps1 * w, eps2 * w] {
        for e_l in [eps1 * w, eps2 * w] {
            worst = worst.max(((1.0 - lambda) * e_u - lambda * e_l).abs());
        }
    }
    worst
}

pub fn lemma1_verify(w: f64, eps1: f64, eps2: f64, grid: &[f64]) -> Result<Lemma1Report> {
    if !(w.is_finite() && eps1.is_finite() && eps2.is_finite()) {
        return Err(Error::InvalidArgument("w, ε1 and ε2 must be finite".into()));
    }
    if !(eps1 > 0.0) {
        return Err(Error::Hypothesis(format!("ε1 > 0 fails: ε1 = {eps1}")));
    }
    if !(eps2 > eps1) {
        return Err(Error::Hypothesis(format!("ε2 > ε1 fails: ε1 = {eps1}, ε2 = {eps2}")));
    }
    if !(eps1 > eps2 / 3.0) {
        return Err(Error::Hypothesis(format!(
            "ε1 > ε2/3 fails: ε1 = {eps1}, ε2/3 = {}",
            eps2 / 3.0
        )));
    }
    if !(w > 0.0) {
        return Err(Error::Hypothesis(format!("w > 0 fails: w = {w}")));
    }
    let lo = (eps2 - eps1) / (eps2 + eps1);
    let hi = 0.5;
    let floor = eps1 * w;
    let mut best: Option<(f64, f64)> = None;
    for &l in grid.iter().filter(|&&l| l > lo && l < hi) {
        let e = worst_case(w, eps1, eps2, l);
        if e < floor && best.is_none_or(|(_, be)| e < be) {
            best = Some((l, e));
        }
    }
    let from_grid = best.is_some();
    let (lambda, worst_case_error) = best.unwrap_or_else(|| {
        let mid = 0.5 * (lo + hi);
        (mid, worst_case(w, eps1, eps2, mid))
    });
    if !(worst_case_error < floor) {
        return Err(Error::Numeric(format!(
            "λ = {lambda} in ({lo}, {hi}) does not tighten the estimate: worst case {worst_case_error} vs {floor}"
        )));
    }
    Ok(Lemma1Report {
        window: (lo, hi),
        lambda,
        symmetric_error: ((1.0 - 2.0 * lambda) * eps2 * w).abs(),
        symmetric_one_sided: eps2 * w,
        worst_case_error,
        one_sided_floor: floor,
        from_grid,
    })
}
