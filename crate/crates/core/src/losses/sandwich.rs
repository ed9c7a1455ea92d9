use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Mixture weight of `W_λ = (1-λ) W_U + λ W_L`.
///
/// The default `λ = 1/21` puts weight 1 on `W_L` and 20 on `W_U`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichConfig {
    pub lambda: f64,
}

impl Default for SandwichConfig {
    fn default() -> Self {
        Self { lambda: 1.0 / 21.0 }
    }
}

impl SandwichConfig {
    pub fn upper_only() -> Self {
        Self { lambda: 0.0 }
    }

    pub fn lower_only() -> Self {
        Self { lambda: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::InvalidArgument(format!(
                "sandwich λ must lie in [0, 1], got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

pub fn sandwich_loss(w_u: f64, w_l: f64, lambda: f64) -> Result<f64> {
    SandwichConfig { lambda }.validate()?;
    Ok((1.0 - lambda) * w_u + lambda * w_l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn endpoints_and_default_mixture() {
        assert_eq!(sandwich_loss(3.5, -1.0, 0.0).unwrap(), 3.5);
        assert_eq!(sandwich_loss(3.5, -1.0, 1.0).unwrap(), -1.0);
        let l = SandwichConfig::default().lambda;
        assert!((sandwich_loss(21.0, 0.0, l).unwrap() - 20.0).abs() < 1e-12);
        assert!(sandwich_loss(1.0, 1.0, 1.5).is_err());
        assert!(sandwich_loss(1.0, 1.0, -0.1).is_err());
        assert!(sandwich_loss(1.0, 1.0, f64::NAN).is_err());
    }

    proptest! {
        #[test]
        fn linear_and_monotone(
            a in -50.0f64..50.0, b in -50.0f64..50.0, d in 0.0f64..10.0, l in 0.0f64..=1.0, s in -3.0f64..3.0,
        ) {
            let base = sandwich_loss(a, b, l).unwrap();
            prop_assert!(sandwich_loss(a + d, b, l).unwrap() >= base - 1e-12);
            prop_assert!(sandwich_loss(a, b + d, l).unwrap() >= base - 1e-12);
            let scaled = sandwich_loss(s * a, s * b, l).unwrap();
            prop_assert!((scaled - s * base).abs() <= 1e-9 * (1.0 + base.abs() * s.abs()));
            let sum = sandwich_loss(a + d, b + d, l).unwrap();
            prop_assert!((sum - base - d).abs() <= 1e-9 * (1.0 + sum.abs()));
        }
    }
}
