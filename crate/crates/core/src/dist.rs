//! Closed-form distribution functions used by the tests and the oracles.
//!
//! Only three laws matter here: the unit Fréchet law `F(x) = exp(-1/x)`,
//! the shape-2 gamma (Erlang-2) law that the gamma tests are calibrated
//! against, and the standard normal for Fisher's Z baseline. The Erlang-2
//! survival function has the elementary closed form `(1 + λx)·e^{-λx}`, so
//! no incomplete-gamma machinery is needed.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Unit Fréchet distribution function `exp(-1/x)`.
pub fn frechet_cdf(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain("frechet_cdf argument", x));
    }
    Ok((-1.0 / x).exp())
}

/// Inverse of [`frechet_cdf`]: `-1/log(p)`.
pub fn frechet_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain("frechet_quantile probability", p));
    }
    Ok(-1.0 / p.ln())
}

/// Shape-2 gamma reference law, parameterized by its rate.
///
/// The plain independence test uses rate 1; the tail test at threshold `u`
/// uses rate `1 - exp(-1/u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaRef {
    rate: f64,
}

impl GammaRef {
    pub const SHAPE: f64 = 2.0;

    pub fn new(rate: f64) -> Result<Self> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::domain("gamma rate", rate));
        }
        Ok(GammaRef { rate })
    }

    /// Reference law for the tail test at Fréchet-scale threshold `u`.
    pub fn for_threshold(u: f64) -> Result<Self> {
        if !(u > 0.0) {
            return Err(Error::domain("threshold", u));
        }
        // 1 - e^{-1/u}, accurate for large u
        GammaRef::new(-(-1.0 / u).exp_m1())
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn mean(&self) -> f64 {
        Self::SHAPE / self.rate
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        1.0 - survival_unchecked(x, self.rate)
    }

    pub fn survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        survival_unchecked(x, self.rate)
    }

    pub fn upper_quantile(&self, alpha: f64) -> Result<f64> {
        erlang2_upper_quantile(alpha, self.rate)
    }
}

fn survival_unchecked(x: f64, rate: f64) -> f64 {
    let t = rate * x;
    (1.0 + t) * (-t).exp()
}

/// Erlang-2 survival `P(ζ > x) = (1 + rate·x)·e^{-rate·x}`.
pub fn erlang2_survival(x: f64, rate: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::domain("erlang2_survival argument", x));
    }
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(Error::domain("erlang2 rate", rate));
    }
    Ok(survival_unchecked(x, rate))
}

/// The `x` with `erlang2_survival(x, rate) == alpha`.
///
/// Safeguarded bisection on the closed-form survival. The initial bracket
/// is `[0, 50/rate]`; it is widened only for tail probabilities below
/// roughly 1e-20.
pub fn erlang2_upper_quantile(alpha: f64, rate: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::domain("erlang2_upper_quantile alpha", alpha));
    }
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(Error::domain("erlang2 rate", rate));
    }
    if alpha == 1.0 {
        return Ok(0.0);
    }
    // Solve on the unit-rate scale and rescale: S(x, λ) = S(λx, 1).
    let mut lo = 0.0_f64;
    let mut hi = 50.0_f64;
    while survival_unchecked(hi, 1.0) > alpha {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if survival_unchecked(mid, 1.0) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi) / rate)
}

/// Standard normal CDF via the complementary error function.
pub fn std_normal_cdf(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Named continuous families with fixed parameters.
///
/// Used by the parametric Fréchet transform and as Kolmogorov–Smirnov
/// reference laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum CdfFamily {
    UnitFrechet,
    Normal { mean: f64, sd: f64 },
    StudentT { df: f64 },
    Uniform01,
    Exponential { rate: f64 },
    Erlang2 { rate: f64 },
}

impl CdfFamily {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CdfFamily::Normal { mean, sd } => {
                if !mean.is_finite() {
                    return Err(Error::domain("normal mean", mean));
                }
                if !(sd > 0.0) || !sd.is_finite() {
                    return Err(Error::domain("normal sd", sd));
                }
            }
            CdfFamily::StudentT { df } => {
                if !(df > 0.0) || !df.is_finite() {
                    return Err(Error::domain("student t df", df));
                }
            }
            CdfFamily::Exponential { rate } | CdfFamily::Erlang2 { rate } => {
                if !(rate > 0.0) || !rate.is_finite() {
                    return Err(Error::domain("rate", rate));
                }
            }
            CdfFamily::UnitFrechet | CdfFamily::Uniform01 => {}
        }
        Ok(())
    }

    /// Distribution function; arguments outside the support map to 0 or 1.
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            CdfFamily::UnitFrechet => {
                if x <= 0.0 {
                    0.0
                } else {
                    (-1.0 / x).exp()
                }
            }
            CdfFamily::Normal { mean, sd } => std_normal_cdf((x - mean) / sd),
            CdfFamily::StudentT { df } => StudentsT::new(0.0, 1.0, df)
                .map(|t| t.cdf(x))
                .unwrap_or(f64::NAN),
            CdfFamily::Uniform01 => x.clamp(0.0, 1.0),
            CdfFamily::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            CdfFamily::Erlang2 { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    1.0 - survival_unchecked(x, rate)
                }
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CdfFamily::UnitFrechet => "frechet",
            CdfFamily::Normal { .. } => "normal",
            CdfFamily::StudentT { .. } => "t",
            CdfFamily::Uniform01 => "uniform",
            CdfFamily::Exponential { .. } => "exponential",
            CdfFamily::Erlang2 { .. } => "erlang2",
        }
    }
}
