//! Quotient correlation and its tail and rank-based variants.
//!
//! For positive paired scores the coefficient is
//!
//! ```text
//!        a + b - 2
//!   q = -----------,   a = max_i y_i/x_i,  b = max_i x_i/y_i
//!         a·b - 1
//! ```
//!
//! The tail variant replaces every score at or below a threshold `u` by `u`
//! before taking the maxima.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::frechet_quantile;
use crate::error::{Error, Result};
use crate::marginals::{FrechetScores, PairedSample, RankPair, Transform};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Plain,
    Rank,
    Empirical,
    Tail,
    TailRank,
}

impl Variant {
    pub fn is_tail(&self) -> bool {
        matches!(self, Variant::Tail | Variant::TailRank)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Plain => "plain",
            Variant::Rank => "rank",
            Variant::Empirical => "empirical",
            Variant::Tail => "tail",
            Variant::TailRank => "tail_rank",
        }
    }
}

/// How rank-route replicates are combined into one coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregate {
    #[default]
    Median,
    Mean,
}

impl Aggregate {
    pub fn apply(&self, values: &[f64]) -> f64 {
        match self {
            Aggregate::Mean => values.iter().sum::<f64>() / values.len() as f64,
            Aggregate::Median => median(values),
        }
    }
}

pub(crate) fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Settings for the rank route.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankConfig {
    pub seed: u64,
    pub replicates: usize,
    pub aggregate: Aggregate,
}

impl Default for RankConfig {
    fn default() -> Self {
        RankConfig {
            seed: 0,
            replicates: 10,
            aggregate: Aggregate::Median,
        }
    }
}

impl RankConfig {
    pub fn new(seed: u64, replicates: usize) -> Self {
        RankConfig {
            seed,
            replicates,
            ..Default::default()
        }
    }
}

/// The two max-quotients, the coefficient, and how they were obtained.
///
/// For rank-route summaries `q` is the aggregate over replicates and the
/// maxima are the same aggregate of the per-replicate maxima, so `q` need
/// not equal `f(max_yx, max_xy)` exactly; `replicate_qs` keeps the raw
/// per-replicate coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuotientSummary {
    pub max_yx: f64,
    pub max_xy: f64,
    pub q: f64,
    pub n: usize,
    pub threshold: Option<f64>,
    pub variant: Variant,
    /// Both max-quotients equal 1 (the sequences agree exactly).
    pub degenerate: bool,
    /// Tail variants: no observation in either margin exceeds the threshold.
    pub fully_censored: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub replicate_qs: Vec<f64>,
}

impl QuotientSummary {
    fn from_maxima(max_yx: f64, max_xy: f64, n: usize, variant: Variant) -> Self {
        // each maximum is at least 1 once the scores share a scale
        let max_yx = max_yx.max(1.0);
        let max_xy = max_xy.max(1.0);
        let q = quotient_correlation(max_yx, max_xy).expect("maxima clamped to >= 1");
        QuotientSummary {
            max_yx,
            max_xy,
            q,
            n,
            threshold: None,
            variant,
            degenerate: max_yx == 1.0 && max_xy == 1.0,
            fully_censored: false,
            replicate_qs: Vec::new(),
        }
    }

    /// `n·q`, the gamma-test statistic.
    pub fn statistic(&self) -> f64 {
        self.n as f64 * self.q
    }
}

/// `(max_i y_i/x_i, max_i x_i/y_i)`.
pub fn max_quotient_pair(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.is_empty() {
        return Err(Error::TooFewObservations { n: 0, min: 1 });
    }
    let mut max_yx = f64::NEG_INFINITY;
    let mut max_xy = f64::NEG_INFINITY;
    for (index, (&x, &y)) in xs.iter().zip(ys).enumerate() {
        for value in [x, y] {
            if !value.is_finite() {
                return Err(Error::NonFinite { index });
            }
            if value <= 0.0 {
                return Err(Error::NonPositive { index, value });
            }
        }
        max_yx = max_yx.max(y / x);
        max_xy = max_xy.max(x / y);
    }
    Ok((max_yx, max_xy))
}

/// `f(a, b) = (a + b - 2)/(a·b - 1)` for `a, b ≥ 1`; 1 on the boundary.
pub fn quotient_correlation(max_yx: f64, max_xy: f64) -> Result<f64> {
    if !(max_yx >= 1.0) {
        return Err(Error::domain("max quotient", max_yx));
    }
    if !(max_xy >= 1.0) {
        return Err(Error::domain("max quotient", max_xy));
    }
    if max_yx == 1.0 || max_xy == 1.0 {
        return Ok(1.0);
    }
    // a·b - 1 = (a-1)(b-1) + (a-1) + (b-1), which keeps precision near 1
    let (a, b) = (max_yx - 1.0, max_xy - 1.0);
    let q = (a + b) / (a * b + a + b);
    Ok(if q.is_nan() { 0.0 } else { q.clamp(0.0, 1.0) })
}

fn plain_variant(transform: Transform) -> Variant {
    match transform {
        Transform::Parametric => Variant::Plain,
        Transform::Empirical => Variant::Empirical,
        Transform::Rank => Variant::Rank,
    }
}

/// Quotient correlation of one set of scores.
pub fn plain_quotient(scores: &FrechetScores) -> Result<QuotientSummary> {
    let (a, b) = max_quotient_pair(scores.xs(), scores.ys())?;
    Ok(QuotientSummary::from_maxima(
        a,
        b,
        scores.n(),
        plain_variant(scores.transform()),
    ))
}

/// Threshold chosen as the smaller of the two per-margin percentiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSpec {
    pub percentile: f64,
    pub x_percentile: f64,
    pub y_percentile: f64,
    pub resolved_u: f64,
}

/// 1-based index `⌈p·n⌉` of the order statistic used as the `100p`-th
/// percentile, clamped to `1..=n`.
pub fn percentile_index(p: f64, n: usize) -> usize {
    // absorb representation error such as 0.8*10 = 8.000000000000002
    let raw = (p * n as f64 - 1e-9).ceil();
    (raw.max(1.0) as usize).min(n)
}

/// Order-statistic percentile of `values` (no interpolation).
pub fn order_percentile(values: &[f64], p: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted[percentile_index(p, sorted.len()) - 1]
}

pub fn select_threshold(scores: &FrechetScores, percentile: f64) -> Result<ThresholdSpec> {
    if !(percentile > 0.0 && percentile < 1.0) {
        return Err(Error::domain("percentile", percentile));
    }
    if scores.n() < 2 {
        return Err(Error::TooFewObservations {
            n: scores.n(),
            min: 2,
        });
    }
    let x_percentile = order_percentile(scores.xs(), percentile);
    let y_percentile = order_percentile(scores.ys(), percentile);
    Ok(ThresholdSpec {
        percentile,
        x_percentile,
        y_percentile,
        resolved_u: x_percentile.min(y_percentile),
    })
}

fn censored_maxima(xs: &[f64], ys: &[f64], u: f64) -> (f64, f64, bool) {
    let mut max_yx = f64::NEG_INFINITY;
    let mut max_xy = f64::NEG_INFINITY;
    let mut any_exceedance = false;
    for (&x, &y) in xs.iter().zip(ys) {
        // u + max(v - u, 0), written so that exceedances keep their exact value
        let cx = if x > u { x } else { u };
        let cy = if y > u { y } else { u };
        any_exceedance |= x > u || y > u;
        max_yx = max_yx.max(cy / cx);
        max_xy = max_xy.max(cx / cy);
    }
    (max_yx, max_xy, !any_exceedance)
}

/// Tail quotient correlation at threshold `u` (same scale as the scores).
pub fn tail_quotient_correlation(scores: &FrechetScores, u: f64) -> Result<QuotientSummary> {
    if !(u > 0.0) || !u.is_finite() {
        return Err(Error::domain("threshold", u));
    }
    let (a, b, fully_censored) = censored_maxima(scores.xs(), scores.ys(), u);
    let variant = if scores.transform() == Transform::Rank {
        Variant::TailRank
    } else {
        Variant::Tail
    };
    let mut summary = QuotientSummary::from_maxima(a, b, scores.n(), variant);
    summary.threshold = Some(u);
    summary.fully_censored = fully_censored;
    Ok(summary)
}

fn aggregate(parts: Vec<QuotientSummary>, how: Aggregate, variant: Variant) -> QuotientSummary {
    let qs: Vec<f64> = parts.iter().map(|s| s.q).collect();
    let yx: Vec<f64> = parts.iter().map(|s| s.max_yx).collect();
    let xy: Vec<f64> = parts.iter().map(|s| s.max_xy).collect();
    QuotientSummary {
        max_yx: how.apply(&yx),
        max_xy: how.apply(&xy),
        q: how.apply(&qs),
        n: parts[0].n,
        threshold: parts[0].threshold,
        variant,
        degenerate: parts.iter().all(|s| s.degenerate),
        fully_censored: parts.iter().all(|s| s.fully_censored),
        replicate_qs: qs,
    }
}

fn check_replicates(config: &RankConfig) -> Result<()> {
    if config.replicates == 0 {
        return Err(Error::Config("replicates must be at least 1".into()));
    }
    Ok(())
}

/// Rank-based quotient correlation aggregated over replicates.
pub fn rank_quotient(sample: &PairedSample, config: &RankConfig) -> Result<QuotientSummary> {
    check_replicates(config)?;
    let ranks = RankPair::new(sample);
    let parts = (0..config.replicates)
        .into_par_iter()
        .map(|r| plain_quotient(&ranks.replicate(config.seed, r)))
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(parts, config.aggregate, Variant::Rank))
}

/// Rank-based tail quotient correlation with the global Fréchet-scale
/// threshold `u = -1/log(percentile)`.
pub fn tail_quotient_rank(
    sample: &PairedSample,
    percentile: f64,
    config: &RankConfig,
) -> Result<QuotientSummary> {
    check_replicates(config)?;
    let u = frechet_quantile(percentile)?;
    let ranks = RankPair::new(sample);
    tail_quotient_rank_at(&ranks, u, config)
}

/// As [`tail_quotient_rank`], for precomputed ranks and an explicit
/// Fréchet-scale threshold.
pub fn tail_quotient_rank_at(
    ranks: &RankPair,
    u: f64,
    config: &RankConfig,
) -> Result<QuotientSummary> {
    check_replicates(config)?;
    let parts = (0..config.replicates)
        .into_par_iter()
        .map(|r| tail_quotient_correlation(&ranks.replicate(config.seed, r), u))
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(parts, config.aggregate, Variant::TailRank))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn scores(xs: &[f64], ys: &[f64]) -> FrechetScores {
        FrechetScores::new(xs.to_vec(), ys.to_vec(), Transform::Parametric).unwrap()
    }

    #[test]
    fn max_pair_hand_example() {
        assert_eq!(
            max_quotient_pair(&[1.0, 2.0, 4.0], &[2.0, 1.0, 4.0]).unwrap(),
            (2.0, 2.0)
        );
        assert_eq!(
            max_quotient_pair(&[3.0, 0.5], &[3.0, 0.5]).unwrap(),
            (1.0, 1.0)
        );
    }

    #[test]
    fn max_pair_homogeneity() {
        let xs = [0.7, 2.0, 5.5, 1.3];
        let ys = [1.1, 0.4, 6.0, 2.0];
        let (a, b) = max_quotient_pair(&xs, &ys).unwrap();
        let scaled: Vec<f64> = ys.iter().map(|y| y * 3.0).collect();
        let (a3, b3) = max_quotient_pair(&xs, &scaled).unwrap();
        assert_abs_diff_eq!(a3, 3.0 * a, epsilon = 1e-12);
        assert_abs_diff_eq!(b3, b / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn max_pair_errors() {
        assert!(matches!(
            max_quotient_pair(&[1.0, 0.0], &[1.0, 1.0]),
            Err(Error::NonPositive { index: 1, .. })
        ));
        assert!(max_quotient_pair(&[1.0, -2.0], &[1.0, 1.0]).is_err());
        assert!(max_quotient_pair(&[1.0], &[1.0, 1.0]).is_err());
        assert!(max_quotient_pair(&[], &[]).is_err());
    }

    #[test]
    fn coefficient_values() {
        assert_abs_diff_eq!(
            quotient_correlation(2.0, 2.0).unwrap(),
            2.0 / 3.0,
            epsilon = 1e-15
        );
        assert_eq!(quotient_correlation(1.0, 7.0).unwrap(), 1.0);
        assert_eq!(quotient_correlation(7.0, 1.0).unwrap(), 1.0);
        assert_eq!(quotient_correlation(1.0, 1.0).unwrap(), 1.0);
        assert_abs_diff_eq!(
            quotient_correlation(3.0, 3.0).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        assert!(quotient_correlation(0.9, 2.0).is_err());
        assert!(quotient_correlation(2.0, f64::NAN).is_err());
        assert_eq!(quotient_correlation(f64::MAX, f64::MAX).unwrap(), 0.0);
    }

    #[test]
    fn degenerate_flag() {
        let s = plain_quotient(&scores(&[1.0, 2.0], &[1.0, 2.0])).unwrap();
        assert!(s.degenerate);
        assert_eq!(s.q, 1.0);
        let s = plain_quotient(&scores(&[1.0, 2.0], &[2.0, 1.0])).unwrap();
        assert!(!s.degenerate);
    }

    #[test]
    fn threshold_hand_example() {
        let xs: Vec<f64> = (1..=10).map(f64::from).collect();
        let ys: Vec<f64> = (1..=10).map(|v| 2.0 * v as f64).collect();
        let t = select_threshold(&scores(&xs, &ys), 0.8).unwrap();
        assert_eq!(t.x_percentile, 8.0);
        assert_eq!(t.y_percentile, 16.0);
        assert_eq!(t.resolved_u, 8.0);

        let t = select_threshold(&scores(&xs, &xs), 0.8).unwrap();
        assert_eq!(t.resolved_u, t.x_percentile);

        let t = select_threshold(&scores(&xs, &ys), 0.9999).unwrap();
        assert_eq!(t.resolved_u, 10.0);

        assert!(select_threshold(&scores(&xs, &ys), 0.0).is_err());
        assert!(select_threshold(&scores(&xs, &ys), 1.0).is_err());
    }

    #[test]
    fn percentile_index_convention() {
        assert_eq!(percentile_index(0.8, 10), 8);
        assert_eq!(percentile_index(0.81, 10), 9);
        assert_eq!(percentile_index(0.825, 500), 413);
        assert_eq!(percentile_index(0.001, 10), 1);
    }

    #[test]
    fn tail_hand_example() {
        let s = tail_quotient_correlation(&scores(&[10.0, 3.0], &[6.0, 8.0]), 5.0).unwrap();
        assert_abs_diff_eq!(s.max_yx, 1.6, epsilon = 1e-12);
        assert_abs_diff_eq!(s.max_xy, 10.0 / 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.q, 0.76, epsilon = 1e-12);
        assert_eq!(s.threshold, Some(5.0));
        assert!(!s.fully_censored);
    }

    #[test]
    fn tail_fully_censored() {
        let s = tail_quotient_correlation(&scores(&[1.0, 3.0], &[2.0, 0.5]), 5.0).unwrap();
        assert_eq!(s.q, 1.0);
        assert!(s.fully_censored);
        assert!(s.degenerate);
        assert!(tail_quotient_correlation(&scores(&[1.0], &[1.0]), 0.0).is_err());
    }

    #[test]
    fn tail_small_threshold_recovers_plain() {
        let sc = scores(&[0.5, 2.0, 7.0, 1.2], &[1.5, 0.3, 4.0, 9.0]);
        let plain = plain_quotient(&sc).unwrap();
        let tail = tail_quotient_correlation(&sc, 1e-9).unwrap();
        assert_eq!(plain.q, tail.q);
    }

    #[test]
    fn rank_identical_ranks_give_one() {
        let sample = PairedSample::new(vec![1.0, 4.0, 2.0, 8.0], vec![0.1, 0.4, 0.2, 0.8]).unwrap();
        let cfg = RankConfig::new(5, 7);
        let s = rank_quotient(&sample, &cfg).unwrap();
        assert_eq!(s.q, 1.0);
        assert_eq!(s.replicate_qs.len(), 7);
        let t = tail_quotient_rank(&sample, 0.6, &cfg).unwrap();
        assert!(t.replicate_qs.iter().all(|&q| q == 1.0));
    }

    #[test]
    fn rank_tail_low_percentile_matches_plain_rank() {
        let sample = PairedSample::new(
            vec![0.3, 2.0, 1.1, 4.0, 0.2, 0.9],
            vec![1.0, 0.4, 3.0, 2.2, 5.0, 0.1],
        )
        .unwrap();
        let cfg = RankConfig::new(17, 5);
        let plain = rank_quotient(&sample, &cfg).unwrap();
        let tail = tail_quotient_rank(&sample, 1e-300, &cfg).unwrap();
        assert_eq!(plain.replicate_qs, tail.replicate_qs);
    }

    #[test]
    fn aggregate_median_and_mean() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(Aggregate::Mean.apply(&[1.0, 2.0, 6.0]), 3.0);
    }

    proptest! {
        #[test]
        fn q_in_unit_interval(pairs in prop::collection::vec((1e-3f64..1e3, 1e-3f64..1e3), 1..50)) {
            let (xs, ys): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let s = plain_quotient(&scores(&xs, &ys)).unwrap();
            prop_assert!((0.0..=1.0).contains(&s.q));
            prop_assert_eq!(s.q == 1.0, s.max_yx == 1.0 || s.max_xy == 1.0);
        }

        #[test]
        fn f_strictly_decreasing(a in 1.001f64..100.0, b in 1.001f64..100.0, da in 0.01f64..10.0) {
            let q0 = quotient_correlation(a, b).unwrap();
            prop_assert!(quotient_correlation(a + da, b).unwrap() < q0);
            prop_assert!(quotient_correlation(a, b + da).unwrap() < q0);
        }

        #[test]
        fn censoring_monotone_in_threshold(
            pairs in prop::collection::vec((0.05f64..50.0, 0.05f64..50.0), 2..40),
            u1 in 0.01f64..30.0,
            du in 0.0f64..30.0,
        ) {
            let (xs, ys): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let sc = scores(&xs, &ys);
            let lo = tail_quotient_correlation(&sc, u1).unwrap();
            let hi = tail_quotient_correlation(&sc, u1 + du).unwrap();
            prop_assert!(hi.max_yx <= lo.max_yx);
            prop_assert!(hi.max_xy <= lo.max_xy);
            prop_assert!(hi.q >= lo.q);
        }
    }
}
