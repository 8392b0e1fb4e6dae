use crate::dist::CdfFamily;
use crate::error::{Error, Result};

/// Kolmogorov–Smirnov distance between the empirical CDF of `sample` and
/// `cdf`, checked on both sides of every jump.
pub fn ks_statistic_fn(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::TooFewObservations { n: 0, min: 1 });
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        let above = (i + 1) as f64 / n - f;
        let below = f - i as f64 / n;
        d = d.max(above).max(below);
    }
    Ok(d)
}

pub fn ks_statistic(sample: &[f64], cdf: &CdfFamily) -> Result<f64> {
    cdf.validate()?;
    ks_statistic_fn(sample, |x| cdf.cdf(x))
}
