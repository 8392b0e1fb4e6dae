//! Hypothesis tests built on the quotient coefficients, plus the Fisher Z
//! baseline and the empirical tail dependence index.

use serde::{Deserialize, Serialize};

use crate::dist::{erlang2_survival, erlang2_upper_quantile, std_normal_cdf, GammaRef};
use crate::error::{Error, Result};
use crate::marginals::{FrechetScores, PairedSample};
use crate::quotient::{QuotientSummary, Variant};

/// Outcome of a gamma test (plain or tail).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaTestReport {
    pub statistic: f64,
    pub rate: f64,
    pub cutoff: f64,
    pub p_value: f64,
    pub alpha: f64,
    pub reject: bool,
    pub variant: Variant,
    pub threshold: Option<f64>,
    pub threshold_percentile: Option<f64>,
    pub n: usize,
    /// Tail test on fully censored data: the limit law does not apply and
    /// the null is never rejected.
    pub degenerate: bool,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain("alpha", alpha));
    }
    Ok(())
}

fn check_q(q: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::domain("quotient correlation", q));
    }
    Ok(())
}

fn gamma_report(statistic: f64, gamma: GammaRef, alpha: f64, n: usize) -> Result<GammaTestReport> {
    let rate = gamma.rate();
    let cutoff = erlang2_upper_quantile(alpha, rate)?;
    let p_value = erlang2_survival(statistic, rate)?;
    Ok(GammaTestReport {
        statistic,
        rate,
        cutoff,
        p_value,
        alpha,
        // strict inequality on both sides; the two agree except within
        // rounding of the cutoff, where the p-value comparison wins
        reject: p_value < alpha,
        variant: Variant::Plain,
        threshold: None,
        threshold_percentile: None,
        n,
        degenerate: false,
    })
}

/// Gamma test of independence: reject when `n·q` exceeds the upper-α
/// quantile of Gamma(2, rate 1).
pub fn gamma_independence_test(q: f64, n: usize, alpha: f64) -> Result<GammaTestReport> {
    check_q(q)?;
    check_alpha(alpha)?;
    if n < 2 {
        return Err(Error::TooFewObservations { n, min: 2 });
    }
    gamma_report(n as f64 * q, GammaRef::new(1.0)?, alpha, n)
}

/// Gamma test of tail independence at Fréchet-scale threshold `u`, against
/// Gamma(2, rate `1 - e^{-1/u}`).
pub fn gamma_tail_test(q_u: f64, n: usize, u: f64, alpha: f64) -> Result<GammaTestReport> {
    check_q(q_u)?;
    check_alpha(alpha)?;
    if n < 2 {
        return Err(Error::TooFewObservations { n, min: 2 });
    }
    let mut report = gamma_report(n as f64 * q_u, GammaRef::for_threshold(u)?, alpha, n)?;
    report.variant = Variant::Tail;
    report.threshold = Some(u);
    Ok(report)
}

/// Runs the test matching a [`QuotientSummary`]: the tail test for tail
/// variants, the plain test otherwise. Records the route in `variant`.
pub fn test_summary(summary: &QuotientSummary, alpha: f64) -> Result<GammaTestReport> {
    let mut report = match (summary.variant.is_tail(), summary.threshold) {
        (true, Some(u)) => gamma_tail_test(summary.q, summary.n, u, alpha)?,
        (true, None) => {
            return Err(Error::Config("tail summary without a threshold".into()));
        }
        (false, _) => gamma_independence_test(summary.q, summary.n, alpha)?,
    };
    report.variant = summary.variant;
    if summary.variant.is_tail() && summary.fully_censored {
        report.degenerate = true;
        report.reject = false;
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    #[default]
    TwoSided,
    Greater,
    Less,
}

/// Fisher's Z test of zero correlation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherReport {
    pub r: f64,
    pub w: f64,
    pub z: f64,
    pub p_value: f64,
    pub alpha: f64,
    pub reject: bool,
    pub n: usize,
    pub alternative: Alternative,
}

/// Pearson correlation; errors when either margin is constant.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ConstantMargin);
    }
    let r = sxy / (sxx.sqrt() * syy.sqrt());
    if r.abs() >= 1.0 - 4.0 * f64::EPSILON {
        return Ok(r.signum());
    }
    Ok(r)
}

pub fn fisher_z_test(sample: &PairedSample, alpha: f64) -> Result<FisherReport> {
    fisher_z_test_with(sample, alpha, Alternative::TwoSided)
}

pub fn fisher_z_test_with(
    sample: &PairedSample,
    alpha: f64,
    alternative: Alternative,
) -> Result<FisherReport> {
    check_alpha(alpha)?;
    let n = sample.n();
    if n < 4 {
        return Err(Error::TooFewObservations { n, min: 4 });
    }
    let r = pearson(sample.xs(), sample.ys())?;
    fisher_from_r(r, n, alpha, alternative)
}

/// Fisher's Z test from a known sample correlation.
pub fn fisher_from_r(
    r: f64,
    n: usize,
    alpha: f64,
    alternative: Alternative,
) -> Result<FisherReport> {
    check_alpha(alpha)?;
    if n < 4 {
        return Err(Error::TooFewObservations { n, min: 4 });
    }
    if !(-1.0..=1.0).contains(&r) {
        return Err(Error::domain("correlation", r));
    }
    // atanh(±1) = ±inf, and the tails below then give p = 0
    let w = r.atanh();
    let z = w * ((n - 3) as f64).sqrt();
    let p_value = match alternative {
        Alternative::TwoSided => (2.0 * std_normal_cdf(-z.abs())).min(1.0),
        Alternative::Greater => std_normal_cdf(-z),
        Alternative::Less => std_normal_cdf(z),
    };
    Ok(FisherReport {
        r,
        w,
        z,
        p_value,
        alpha,
        reject: p_value < alpha,
        n,
        alternative,
    })
}

/// Which margin's exceedances the tail index conditions on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conditioning {
    /// `P(X > u | Y > u)`.
    #[default]
    OnY,
    /// `P(Y > u | X > u)`.
    OnX,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailIndexEstimate {
    pub lambda_hat: f64,
    pub u: f64,
    pub joint_count: usize,
    pub marginal_count: usize,
}

/// Empirical `P(X > u | Y > u)`.
pub fn tail_index_estimate(scores: &FrechetScores, u: f64) -> Result<TailIndexEstimate> {
    tail_index_estimate_with(scores, u, Conditioning::OnY)
}

pub fn tail_index_estimate_with(
    scores: &FrechetScores,
    u: f64,
    conditioning: Conditioning,
) -> Result<TailIndexEstimate> {
    if !(u > 0.0) || !u.is_finite() {
        return Err(Error::domain("threshold", u));
    }
    let (given, other) = match conditioning {
        Conditioning::OnY => (scores.ys(), scores.xs()),
        Conditioning::OnX => (scores.xs(), scores.ys()),
    };
    let mut marginal_count = 0;
    let mut joint_count = 0;
    for (&g, &o) in given.iter().zip(other) {
        if g > u {
            marginal_count += 1;
            if o > u {
                joint_count += 1;
            }
        }
    }
    if marginal_count == 0 {
        return Err(Error::NoExceedances { u });
    }
    Ok(TailIndexEstimate {
        lambda_hat: joint_count as f64 / marginal_count as f64,
        u,
        joint_count,
        marginal_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::frechet_quantile;
    use crate::marginals::Transform;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn gamma_plain_examples() {
        let r = gamma_independence_test(2.0 / 3.0, 3, 0.05).unwrap();
        assert_abs_diff_eq!(r.statistic, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.p_value, 3.0 * (-2.0f64).exp(), epsilon = 1e-12);
        assert!(!r.reject);

        let r = gamma_independence_test(0.0, 10, 0.05).unwrap();
        assert_eq!(r.p_value, 1.0);
        assert!(!r.reject);

        let r = gamma_independence_test(0.048, 100, 0.05).unwrap();
        assert_abs_diff_eq!(r.statistic, 4.8, epsilon = 1e-12);
        assert_abs_diff_eq!(r.cutoff, 4.744, epsilon = 1e-3);
        assert!(r.reject);
    }

    #[test]
    fn gamma_plain_errors() {
        assert!(gamma_independence_test(1.2, 10, 0.05).is_err());
        assert!(gamma_independence_test(-0.1, 10, 0.05).is_err());
        assert!(gamma_independence_test(0.5, 10, 0.0).is_err());
        assert!(gamma_independence_test(0.5, 10, 1.0).is_err());
        assert!(gamma_independence_test(0.5, 1, 0.05).is_err());
    }

    #[test]
    fn gamma_tail_examples() {
        let u = frechet_quantile(0.95).unwrap();
        let r = gamma_tail_test(0.9488, 100, u, 0.05).unwrap();
        assert_abs_diff_eq!(r.rate, 0.05, epsilon = 1e-14);
        assert_abs_diff_eq!(r.p_value, 0.05, epsilon = 2e-4);
        assert_abs_diff_eq!(r.cutoff, 94.88, epsilon = 1e-2);

        let tiny = gamma_tail_test(0.3, 50, 1e-3, 0.05).unwrap();
        let plain = gamma_independence_test(0.3, 50, 0.05).unwrap();
        assert_abs_diff_eq!(tiny.rate, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(tiny.p_value, plain.p_value, epsilon = 1e-12);
        assert!(gamma_tail_test(0.3, 50, 0.0, 0.05).is_err());
    }

    #[test]
    fn fully_censored_tail_never_rejects() {
        let sc = FrechetScores::new(
            vec![1.0, 2.0, 3.0],
            vec![3.0, 1.0, 2.0],
            Transform::Parametric,
        )
        .unwrap();
        let s = crate::quotient::tail_quotient_correlation(&sc, 10.0).unwrap();
        let r = test_summary(&s, 0.05).unwrap();
        assert!(r.degenerate);
        assert!(!r.reject);
        assert_eq!(r.statistic, 3.0);
    }

    #[test]
    fn fisher_examples() {
        let r = fisher_from_r(0.5, 28, 0.05, Alternative::TwoSided).unwrap();
        assert_abs_diff_eq!(r.w, 0.549306, epsilon = 1e-6);
        assert_abs_diff_eq!(r.z, 2.74653, epsilon = 1e-5);
        assert_abs_diff_eq!(r.p_value, 0.0060, epsilon = 1e-4);
        assert!(r.reject);

        // orthogonal data
        let s = PairedSample::new(vec![1.0, -1.0, 1.0, -1.0], vec![1.0, 1.0, -1.0, -1.0]).unwrap();
        let r = fisher_z_test(&s, 0.05).unwrap();
        assert_eq!(r.r, 0.0);
        assert_eq!(r.z, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert!(!r.reject);

        let s = PairedSample::new(
            vec![1.0, 2.0, 3.0, 4.0, 5.0],
            vec![2.0, 4.0, 6.0, 8.0, 10.0],
        )
        .unwrap();
        let r = fisher_z_test(&s, 0.05).unwrap();
        assert_eq!(r.p_value, 0.0);
        assert!(r.z.is_infinite());
        assert!(r.reject);
    }

    #[test]
    fn fisher_errors_and_one_sided() {
        let s = PairedSample::new(vec![1.0, 1.0, 1.0, 1.0], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(matches!(
            fisher_z_test(&s, 0.05),
            Err(Error::ConstantMargin)
        ));
        let s = PairedSample::new(vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 4.0]).unwrap();
        assert!(fisher_z_test(&s, 0.05).is_err());
        let g = fisher_from_r(0.5, 28, 0.05, Alternative::Greater).unwrap();
        let l = fisher_from_r(0.5, 28, 0.05, Alternative::Less).unwrap();
        assert_abs_diff_eq!(g.p_value + l.p_value, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(2.0 * g.p_value, 0.0060, epsilon = 1e-4);
    }

    #[test]
    fn tail_index_examples() {
        let xs = vec![1.0, 5.0, 9.0, 12.0];
        let same = FrechetScores::new(xs.clone(), xs.clone(), Transform::Parametric).unwrap();
        assert_eq!(tail_index_estimate(&same, 4.0).unwrap().lambda_hat, 1.0);

        let disjoint = FrechetScores::new(
            vec![10.0, 11.0, 1.0, 1.0],
            vec![1.0, 1.0, 10.0, 11.0],
            Transform::Parametric,
        )
        .unwrap();
        let est = tail_index_estimate(&disjoint, 5.0).unwrap();
        assert_eq!(est.lambda_hat, 0.0);
        assert_eq!(est.marginal_count, 2);
        assert!(matches!(
            tail_index_estimate(&disjoint, 50.0),
            Err(Error::NoExceedances { .. })
        ));
        let on_x = tail_index_estimate_with(&disjoint, 5.0, Conditioning::OnX).unwrap();
        assert_eq!(on_x.joint_count, 0);
    }

    proptest! {
        #[test]
        fn decisions_consistent(q in 0.0f64..=1.0, n in 2usize..5000, alpha in 0.001f64..0.5,
                                p in 0.01f64..0.99) {
            let plain = gamma_independence_test(q, n, alpha).unwrap();
            prop_assert_eq!(plain.reject, plain.p_value < alpha);
            let u = frechet_quantile(p).unwrap();
            let tail = gamma_tail_test(q, n, u, alpha).unwrap();
            prop_assert_eq!(tail.reject, tail.p_value < alpha);
            // the cutoff comparison agrees away from the boundary
            if (tail.statistic - tail.cutoff).abs() > 1e-9 * tail.cutoff {
                prop_assert_eq!(tail.reject, tail.statistic > tail.cutoff);
            }
        }

        #[test]
        fn fisher_decision_consistent(r in -0.999f64..0.999, n in 4usize..2000, alpha in 0.001f64..0.5) {
            let rep = fisher_from_r(r, n, alpha, Alternative::TwoSided).unwrap();
            prop_assert_eq!(rep.reject, rep.p_value < alpha);
            prop_assert!((0.0..=1.0).contains(&rep.p_value));
        }
    }
}
