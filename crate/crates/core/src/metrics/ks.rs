use crate::{Error, Result};

/// CDF of `Unif(a, b)`.
pub fn uniform_cdf(a: f64, b: f64) -> impl Fn(f64) -> f64 {
    move |x| ((x - a) / (b - a)).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov–Smirnov statistic `sup_x |F_n(x) - F(x)|`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Empty("KS statistic of no samples".into()));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::NonFinite("KS sample".into()));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    let mut prev = f64::NEG_INFINITY;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        if !(0.0..=1.0).contains(&f) || f < prev {
            return Err(Error::InvalidArgument(format!(
                "reference CDF is not a monotone map into [0, 1] near {x}"
            )));
        }
        prev = f;
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(d.clamp(0.0, 1.0))
}
