//! Marginal transforms onto the unit Fréchet scale.
//!
//! Three routes are provided:
//!
//! * **parametric**: `x ↦ -1/log G(x)` for a named CDF `G`, with fixed or
//!   sample-estimated parameters;
//! * **empirical**: rank `k` maps to `-1/log(k/(n+1))`;
//! * **rank**: simulate `n` unit Fréchet values, sort them, and hand the
//!   `k`-th order statistic to every observation of rank `k` in either
//!   margin. Replicates use independent seeded substreams.
//!
//! Ties are broken by first occurrence and reported with a warning.

use rand::Rng;
use rand_distr::Open01;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::CdfFamily;
use crate::error::{Error, Result};
use crate::rng::{domain, substream};

/// `n` aligned `(x, y)` observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedSample {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl PairedSample {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::LengthMismatch {
                left: xs.len(),
                right: ys.len(),
            });
        }
        if xs.len() < 2 {
            return Err(Error::TooFewObservations {
                n: xs.len(),
                min: 2,
            });
        }
        check_finite(&xs)?;
        check_finite(&ys)?;
        Ok(PairedSample { xs, ys })
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let (xs, ys) = pairs.into_iter().unzip();
        Self::new(xs, ys)
    }

    pub fn n(&self) -> usize {
        self.xs.len()
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.ys.iter().copied())
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.xs, self.ys)
    }

    /// Applies `f` to both margins.
    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Result<Self> {
        let xs = self.xs.iter().map(|&v| f(v)).collect();
        let ys = self.ys.iter().map(|&v| f(v)).collect();
        Self::new(xs, ys)
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

/// Which route produced a set of Fréchet scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    Parametric,
    Empirical,
    Rank,
}

impl Transform {
    pub fn as_str(&self) -> &'static str {
        match self {
            Transform::Parametric => "parametric",
            Transform::Empirical => "empirical",
            Transform::Rank => "rank",
        }
    }
}

impl std::str::FromStr for Transform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "parametric" => Ok(Transform::Parametric),
            "empirical" => Ok(Transform::Empirical),
            "rank" => Ok(Transform::Rank),
            other => Err(Error::Config(format!("unknown route `{other}`"))),
        }
    }
}

impl std::fmt::Display for Transform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Paired scores on the unit Fréchet scale, strictly positive and finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrechetScores {
    xs: Vec<f64>,
    ys: Vec<f64>,
    transform: Transform,
    /// Replicate index, rank route only.
    replicate: Option<usize>,
    had_ties: bool,
}

impl FrechetScores {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, transform: Transform) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::LengthMismatch {
                left: xs.len(),
                right: ys.len(),
            });
        }
        if xs.is_empty() {
            return Err(Error::TooFewObservations { n: 0, min: 1 });
        }
        check_positive(&xs)?;
        check_positive(&ys)?;
        Ok(FrechetScores {
            xs,
            ys,
            transform,
            replicate: None,
            had_ties: false,
        })
    }

    /// Wraps data that is already on the unit Fréchet scale (the parametric
    /// route with the identity transform).
    pub fn assume_unit_frechet(sample: &PairedSample) -> Result<Self> {
        Self::new(sample.xs.clone(), sample.ys.clone(), Transform::Parametric)
    }

    pub fn n(&self) -> usize {
        self.xs.len()
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn transform(&self) -> Transform {
        self.transform
    }

    pub fn replicate(&self) -> Option<usize> {
        self.replicate
    }

    pub fn had_ties(&self) -> bool {
        self.had_ties
    }
}

fn check_positive(values: &[f64]) -> Result<()> {
    for (index, &value) in values.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite { index });
        }
        if value <= 0.0 {
            return Err(Error::NonPositive { index, value });
        }
    }
    Ok(())
}

/// 1-based ranks with ties broken by first occurrence.
///
/// Returns the ranks and whether any ties were present.
pub fn stable_ranks(values: &[f64]) -> (Vec<usize>, bool) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    // stable sort keeps first occurrences first among equal values
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0; values.len()];
    let mut ties = false;
    for (pos, &idx) in order.iter().enumerate() {
        ranks[idx] = pos + 1;
        if pos > 0 && values[order[pos - 1]] == values[idx] {
            ties = true;
        }
    }
    (ranks, ties)
}

/// Empirical distribution function evaluated as `#{v ≤ x} / (n + 1)`.
///
/// At the `k`-th smallest (distinct) sample point this is `k/(n+1)`, which
/// is strictly inside `(0, 1)`.
#[derive(Debug, Clone)]
pub struct EmpiricalCdf {
    sorted_values: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::TooFewObservations { n: 0, min: 1 });
        }
        check_finite(values)?;
        let mut sorted_values = values.to_vec();
        sorted_values.sort_by(f64::total_cmp);
        Ok(EmpiricalCdf { sorted_values })
    }

    pub fn n(&self) -> usize {
        self.sorted_values.len()
    }

    pub fn sorted_values(&self) -> &[f64] {
        &self.sorted_values
    }

    pub fn eval(&self, x: f64) -> f64 {
        let count = self.sorted_values.partition_point(|&v| v <= x);
        count as f64 / (self.n() + 1) as f64
    }
}

/// Fréchet score of rank `k` in a sample of size `n`: `-1/log(k/(n+1))`.
pub fn empirical_grid_score(k: usize, n: usize) -> f64 {
    debug_assert!(k >= 1 && k <= n);
    -1.0 / (k as f64 / (n + 1) as f64).ln()
}

/// Maps each value to `-1/log(rank/(n+1))`, keeping input order.
pub fn empirical_frechet_transform(sample: &[f64]) -> Result<Vec<f64>> {
    if sample.len() < 2 {
        return Err(Error::TooFewObservations {
            n: sample.len(),
            min: 2,
        });
    }
    check_finite(sample)?;
    let (ranks, ties) = stable_ranks(sample);
    if ties {
        log::warn!("ties present; ranks broken by first occurrence");
    }
    let n = sample.len();
    Ok(ranks
        .into_iter()
        .map(|k| empirical_grid_score(k, n))
        .collect())
}

/// Empirical route applied to both margins.
pub fn empirical_scores(sample: &PairedSample) -> Result<FrechetScores> {
    let (rx, tx) = stable_ranks(&sample.xs);
    let (ry, ty) = stable_ranks(&sample.ys);
    if tx || ty {
        log::warn!("ties present; ranks broken by first occurrence");
    }
    let n = sample.n();
    let xs = rx.into_iter().map(|k| empirical_grid_score(k, n)).collect();
    let ys = ry.into_iter().map(|k| empirical_grid_score(k, n)).collect();
    let mut scores = FrechetScores::new(xs, ys, Transform::Empirical)?;
    scores.had_ties = tx || ty;
    Ok(scores)
}

/// Within-margin ranks of a paired sample, computed once and reused across
/// rank-route replicates.
#[derive(Debug, Clone)]
pub struct RankPair {
    rx: Vec<usize>,
    ry: Vec<usize>,
    had_ties: bool,
}

impl RankPair {
    pub fn new(sample: &PairedSample) -> Self {
        let (rx, tx) = stable_ranks(&sample.xs);
        let (ry, ty) = stable_ranks(&sample.ys);
        if tx || ty {
            log::warn!("ties present; ranks broken by first occurrence");
        }
        RankPair {
            rx,
            ry,
            had_ties: tx || ty,
        }
    }

    pub fn n(&self) -> usize {
        self.rx.len()
    }

    pub fn x_ranks(&self) -> &[usize] {
        &self.rx
    }

    pub fn y_ranks(&self) -> &[usize] {
        &self.ry
    }

    /// Scores for replicate `r`: sorted unit Fréchet draws from substream
    /// `r` of `seed`, assigned by rank.
    pub fn replicate(&self, seed: u64, r: usize) -> FrechetScores {
        let n = self.n();
        let mut rng = substream(seed, domain::RANK_SCORES, r as u32);
        let mut z: Vec<f64> = (0..n)
            .map(|_| {
                let u: f64 = rng.sample(Open01);
                -1.0 / u.ln()
            })
            .collect();
        z.sort_by(f64::total_cmp);
        FrechetScores {
            xs: self.rx.iter().map(|&k| z[k - 1]).collect(),
            ys: self.ry.iter().map(|&k| z[k - 1]).collect(),
            transform: Transform::Rank,
            replicate: Some(r),
            had_ties: self.had_ties,
        }
    }
}

/// Rank-route scores for `replicates` independent Fréchet draws, ordered by
/// replicate index.
pub fn rank_frechet_scores(
    sample: &PairedSample,
    seed: u64,
    replicates: usize,
) -> Result<Vec<FrechetScores>> {
    if replicates == 0 {
        return Err(Error::Config("replicates must be at least 1".into()));
    }
    let ranks = RankPair::new(sample);
    Ok((0..replicates)
        .into_par_iter()
        .map(|r| ranks.replicate(seed, r))
        .collect())
}

/// Parametric family, either fully specified or to be fitted to the sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginModel {
    Fixed(CdfFamily),
    /// Moment estimates from the sample: normal (mean, sd), exponential
    /// (rate = 1/mean). The remaining families have nothing to estimate;
    /// Student t keeps the given df.
    Estimated(CdfFamily),
}

impl MarginModel {
    /// Parses a family name and an optional parameter list. An empty
    /// parameter list for a family with free parameters means "estimate".
    pub fn parse(name: &str, params: &[f64]) -> Result<Self> {
        let need = |k: usize| -> Result<()> {
            if params.len() != k {
                return Err(Error::Config(format!(
                    "family `{name}` takes {k} parameter(s), got {}",
                    params.len()
                )));
            }
            Ok(())
        };
        let model = match name {
            "frechet" | "unit_frechet" => {
                need(0)?;
                MarginModel::Fixed(CdfFamily::UnitFrechet)
            }
            "uniform" => {
                need(0)?;
                MarginModel::Fixed(CdfFamily::Uniform01)
            }
            "normal" if params.is_empty() => {
                MarginModel::Estimated(CdfFamily::Normal { mean: 0.0, sd: 1.0 })
            }
            "normal" => {
                need(2)?;
                MarginModel::Fixed(CdfFamily::Normal {
                    mean: params[0],
                    sd: params[1],
                })
            }
            "t" | "student_t" => {
                need(1)?;
                MarginModel::Fixed(CdfFamily::StudentT { df: params[0] })
            }
            "exponential" if params.is_empty() => {
                MarginModel::Estimated(CdfFamily::Exponential { rate: 1.0 })
            }
            "exponential" => {
                need(1)?;
                MarginModel::Fixed(CdfFamily::Exponential { rate: params[0] })
            }
            other => return Err(Error::UnknownFamily(other.to_string())),
        };
        if let MarginModel::Fixed(family) = model {
            family.validate()?;
        }
        Ok(model)
    }

    /// The concrete family for this sample.
    pub fn resolve(&self, sample: &[f64]) -> Result<CdfFamily> {
        let family = match *self {
            MarginModel::Fixed(family) => family,
            MarginModel::Estimated(CdfFamily::Normal { .. }) => {
                let n = sample.len() as f64;
                let mean = sample.iter().sum::<f64>() / n;
                let var = sample.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
                CdfFamily::Normal {
                    mean,
                    sd: var.sqrt(),
                }
            }
            MarginModel::Estimated(CdfFamily::Exponential { .. }) => {
                let mean = sample.iter().sum::<f64>() / sample.len() as f64;
                CdfFamily::Exponential { rate: 1.0 / mean }
            }
            MarginModel::Estimated(family) => family,
        };
        family.validate()?;
        Ok(family)
    }
}

/// Output of the parametric route.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametricScores {
    pub values: Vec<f64>,
    /// Number of values whose CDF evaluated to exactly 0 or 1 and had to be
    /// pulled inside the open unit interval.
    pub clamped: usize,
}

// Smallest and largest usable log-CDF values: ln(MIN_POSITIVE) and ln(1 - ε/2).
const LN_CDF_FLOOR: f64 = -708.396_418_532_264_1;
const LN_CDF_CEIL: f64 = -f64::EPSILON / 2.0;

fn ln_cdf(family: &CdfFamily, x: f64) -> f64 {
    match *family {
        CdfFamily::UnitFrechet if x > 0.0 => -1.0 / x,
        CdfFamily::Exponential { rate } if x > 0.0 => (-(-rate * x).exp_m1()).ln(),
        _ => family.cdf(x).ln(),
    }
}

/// Maps each value to `-1/log G(v)` for the (possibly estimated) CDF `G`.
pub fn parametric_frechet_transform(
    sample: &[f64],
    model: &MarginModel,
) -> Result<ParametricScores> {
    if sample.is_empty() {
        return Err(Error::TooFewObservations { n: 0, min: 1 });
    }
    check_finite(sample)?;
    let family = model.resolve(sample)?;
    let mut clamped = 0;
    let values = sample
        .iter()
        .map(|&v| {
            let mut l = ln_cdf(&family, v);
            if l.is_nan() {
                l = LN_CDF_FLOOR;
            }
            if l < LN_CDF_FLOOR {
                clamped += 1;
                l = LN_CDF_FLOOR;
            } else if l > LN_CDF_CEIL {
                clamped += 1;
                l = LN_CDF_CEIL;
            }
            -1.0 / l
        })
        .collect();
    if clamped > 0 {
        log::warn!(
            "{clamped} value(s) at the edge of the {} support were clamped",
            family.name()
        );
    }
    Ok(ParametricScores { values, clamped })
}

/// Parametric route applied to both margins with the same model.
pub fn parametric_scores(sample: &PairedSample, model: &MarginModel) -> Result<FrechetScores> {
    let xs = parametric_frechet_transform(&sample.xs, model)?;
    let ys = parametric_frechet_transform(&sample.ys, model)?;
    FrechetScores::new(xs.values, ys.values, Transform::Parametric)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn empirical_hand_example() {
        let out = empirical_frechet_transform(&[3.1, 1.2, 7.7, 0.4]).unwrap();
        let expected = [1.95762, 1.09136, 4.48142, 0.62134];
        for (a, b) in out.iter().zip(expected) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-5);
        }
    }

    #[test]
    fn empirical_sorted_in_sorted_out() {
        let out = empirical_frechet_transform(&[1.0, 2.0, 5.0, 9.0, 10.0]).unwrap();
        assert!(out.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn empirical_errors() {
        assert!(matches!(
            empirical_frechet_transform(&[1.0]),
            Err(Error::TooFewObservations { .. })
        ));
        assert!(matches!(
            empirical_frechet_transform(&[1.0, f64::NAN]),
            Err(Error::NonFinite { index: 1 })
        ));
    }

    #[test]
    fn ties_break_by_first_occurrence() {
        let (ranks, ties) = stable_ranks(&[2.0, 1.0, 2.0, 0.5]);
        assert_eq!(ranks, vec![3, 2, 4, 1]);
        assert!(ties);
        let (_, ties) = stable_ranks(&[2.0, 1.0]);
        assert!(!ties);
    }

    #[test]
    fn empirical_cdf_at_sample_points() {
        let cdf = EmpiricalCdf::new(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!(cdf.eval(1.0), 0.25);
        assert_eq!(cdf.eval(2.0), 0.5);
        assert_eq!(cdf.eval(3.0), 0.75);
        assert_eq!(cdf.eval(0.0), 0.0);
    }

    #[test]
    fn rank_scores_identical_ranks_share_values() {
        let sample = PairedSample::new(vec![1.0, 5.0, 3.0], vec![10.0, 50.0, 30.0]).unwrap();
        for s in rank_frechet_scores(&sample, 3, 4).unwrap() {
            assert_eq!(s.xs(), s.ys());
        }
    }

    #[test]
    fn rank_scores_n2_swap() {
        let sample = PairedSample::new(vec![1.0, 2.0], vec![2.0, 1.0]).unwrap();
        let reps = rank_frechet_scores(&sample, 11, 1).unwrap();
        let s = &reps[0];
        // x gets (Z1, Z2), y gets (Z2, Z1)
        assert!(s.xs()[0] < s.xs()[1]);
        assert_eq!(s.xs()[0], s.ys()[1]);
        assert_eq!(s.xs()[1], s.ys()[0]);
        let m_yx = (s.ys()[0] / s.xs()[0]).max(s.ys()[1] / s.xs()[1]);
        let m_xy = (s.xs()[0] / s.ys()[0]).max(s.xs()[1] / s.ys()[1]);
        assert_eq!(m_yx, s.xs()[1] / s.xs()[0]);
        assert_eq!(m_xy, m_yx);
    }

    #[test]
    fn rank_scores_reproducible_and_ordered() {
        let sample =
            PairedSample::new(vec![0.3, 2.0, 1.1, 4.0, 0.2], vec![1.0, 0.4, 3.0, 2.2, 5.0])
                .unwrap();
        let a = rank_frechet_scores(&sample, 99, 6).unwrap();
        let b = rank_frechet_scores(&sample, 99, 6).unwrap();
        assert_eq!(a, b);
        for (r, s) in a.iter().enumerate() {
            assert_eq!(s.replicate(), Some(r));
            assert_eq!(s.transform(), Transform::Rank);
        }
        // replicate r does not depend on how many replicates were requested
        let single = RankPair::new(&sample).replicate(99, 4);
        assert_eq!(single, a[4]);
        assert!(rank_frechet_scores(&sample, 99, 0).is_err());
    }

    #[test]
    fn parametric_identity_and_uniform() {
        let xs = [0.2, 1.0, 3.5, 40.0, 1.0e6];
        let out =
            parametric_frechet_transform(&xs, &MarginModel::Fixed(CdfFamily::UnitFrechet)).unwrap();
        assert_eq!(out.values, xs.to_vec());
        assert_eq!(out.clamped, 0);

        let us = [0.1, 0.5, 0.9];
        let out =
            parametric_frechet_transform(&us, &MarginModel::Fixed(CdfFamily::Uniform01)).unwrap();
        for (a, u) in out.values.iter().zip(us) {
            assert_abs_diff_eq!(*a, -1.0 / u.ln(), epsilon = 1e-15);
        }
    }

    #[test]
    fn parametric_normal_median() {
        let model = MarginModel::parse("normal", &[0.0, 1.0]).unwrap();
        let out = parametric_frechet_transform(&[0.0], &model).unwrap();
        assert_abs_diff_eq!(out.values[0], std::f64::consts::LOG2_E, epsilon = 1e-6);
    }

    #[test]
    fn parametric_clamps_support_edges() {
        let out = parametric_frechet_transform(
            &[0.0, 0.5, 1.0],
            &MarginModel::Fixed(CdfFamily::Uniform01),
        )
        .unwrap();
        assert_eq!(out.clamped, 2);
        assert!(out.values.iter().all(|v| v.is_finite() && *v > 0.0));
        assert!(out.values[0] < out.values[1] && out.values[1] < out.values[2]);
    }

    #[test]
    fn parametric_unknown_family() {
        assert!(matches!(
            MarginModel::parse("cauchy", &[]),
            Err(Error::UnknownFamily(_))
        ));
        assert!(MarginModel::parse("normal", &[0.0]).is_err());
        assert!(MarginModel::parse("normal", &[0.0, -1.0]).is_err());
    }

    #[test]
    fn parametric_estimated_normal() {
        let model = MarginModel::parse("normal", &[]).unwrap();
        let family = model.resolve(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(family, CdfFamily::Normal { mean: 2.0, sd: 1.0 });
    }

    #[test]
    fn paired_sample_validation() {
        assert!(matches!(
            PairedSample::new(vec![1.0, 2.0], vec![1.0]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(PairedSample::new(vec![1.0], vec![1.0]).is_err());
        assert!(PairedSample::new(vec![1.0, f64::INFINITY], vec![1.0, 2.0]).is_err());
        assert!(FrechetScores::new(vec![1.0, 0.0], vec![1.0, 2.0], Transform::Rank).is_err());
    }

    proptest! {
        #[test]
        fn empirical_outputs_on_fixed_grid(values in prop::collection::vec(-1e6f64..1e6, 2..60)) {
            let n = values.len();
            let mut out = empirical_frechet_transform(&values).unwrap();
            out.sort_by(f64::total_cmp);
            let grid: Vec<f64> = (1..=n).map(|k| empirical_grid_score(k, n)).collect();
            prop_assert_eq!(out, grid);
        }

        #[test]
        fn empirical_and_rank_invariant_under_monotone_maps(
            pairs in prop::collection::vec((-50f64..50.0, -50f64..50.0), 2..40),
            seed in any::<u64>(),
        ) {
            let sample = PairedSample::from_pairs(pairs).unwrap();
            let moved = sample.map(|v| (v / 10.0).exp() * 3.0 + 1.0).unwrap();
            let a = empirical_scores(&sample).unwrap();
            let b = empirical_scores(&moved).unwrap();
            prop_assert_eq!(a.xs(), b.xs());
            prop_assert_eq!(a.ys(), b.ys());
            let ra = rank_frechet_scores(&sample, seed, 2).unwrap();
            let rb = rank_frechet_scores(&moved, seed, 2).unwrap();
            prop_assert_eq!(ra, rb);
        }
    }
}
