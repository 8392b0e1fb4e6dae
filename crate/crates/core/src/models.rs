//! Seeded bivariate generators: the eight benchmark models, the M4
//! construction, and a Gumbel copula sampler.
//!
//! | tag | model                                                     |
//! |-----|-----------------------------------------------------------|
//! | a   | independent unit Fréchet                                  |
//! | b   | Gumbel copula, unit Fréchet margins                       |
//! | c   | survival Gumbel copula, unit Fréchet margins              |
//! | d   | M4 pair, 30 simulated coefficients per margin             |
//! | e   | `(1/U, 1/(1-U))`                                          |
//! | f   | bivariate normal with correlation ρ                       |
//! | g   | `(Z1·E, Z2·E)`, Z unit Fréchet, E unit exponential        |
//! | h   | bivariate t with correlation ρ                            |
//! | m4  | M4 pair with user-supplied coefficients                   |
//!
//! Tail dependent: b, d, h. Tail independent: a, c, e, f, g.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Exp1, Open01, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marginals::PairedSample;
use crate::quotient::quotient_correlation;
use crate::rng::{domain, substream, StreamRng};

pub const DEFAULT_THETA: f64 = 0.4472;
pub const DEFAULT_RHO: f64 = 0.8;
pub const DEFAULT_DF: f64 = 4.0;
/// Number of shared factors in model (d).
pub const MODEL_D_FACTORS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
    H,
    M4,
}

impl ModelKind {
    /// The eight benchmark models in table order.
    pub const TABLE: [ModelKind; 8] = [
        ModelKind::A,
        ModelKind::B,
        ModelKind::C,
        ModelKind::D,
        ModelKind::E,
        ModelKind::F,
        ModelKind::G,
        ModelKind::H,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            ModelKind::A => "a",
            ModelKind::B => "b",
            ModelKind::C => "c",
            ModelKind::D => "d",
            ModelKind::E => "e",
            ModelKind::F => "f",
            ModelKind::G => "g",
            ModelKind::H => "h",
            ModelKind::M4 => "m4",
        }
    }

    pub fn is_tail_dependent(&self) -> bool {
        matches!(
            self,
            ModelKind::B | ModelKind::D | ModelKind::H | ModelKind::M4
        )
    }

    /// Whether the margins are unit Fréchet by construction.
    pub fn has_frechet_margins(&self) -> bool {
        matches!(
            self,
            ModelKind::A | ModelKind::B | ModelKind::C | ModelKind::D | ModelKind::M4
        )
    }

    fn stream_domain(&self) -> u32 {
        match self {
            ModelKind::A => domain::MODEL_A,
            ModelKind::B => domain::MODEL_B,
            ModelKind::C => domain::MODEL_C,
            ModelKind::D => domain::MODEL_D,
            ModelKind::E => domain::MODEL_E,
            ModelKind::F => domain::MODEL_F,
            ModelKind::G => domain::MODEL_G,
            ModelKind::H => domain::MODEL_H,
            ModelKind::M4 => domain::M4,
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "a" => ModelKind::A,
            "b" => ModelKind::B,
            "c" => ModelKind::C,
            "d" => ModelKind::D,
            "e" => ModelKind::E,
            "f" => ModelKind::F,
            "g" => ModelKind::G,
            "h" => ModelKind::H,
            "m4" => ModelKind::M4,
            other => return Err(Error::Config(format!("unknown model `{other}`"))),
        })
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

/// M4 coefficient matrix: `L` rows of `(α_l1, α_l2)`, every entry positive,
/// each column summing to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct M4Coeffs(Vec<[f64; 2]>);

impl M4Coeffs {
    pub const SUM_TOLERANCE: f64 = 1e-9;

    pub fn new(rows: Vec<[f64; 2]>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidCoefficients("no rows".into()));
        }
        for (l, row) in rows.iter().enumerate() {
            if row.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
                return Err(Error::InvalidCoefficients(format!(
                    "row {l} has a non-positive entry"
                )));
            }
        }
        for col in 0..2 {
            let sum: f64 = rows.iter().map(|r| r[col]).sum();
            if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
                return Err(Error::InvalidCoefficients(format!(
                    "column {} sums to {sum}, expected 1",
                    col + 1
                )));
            }
        }
        Ok(M4Coeffs(rows))
    }

    /// Parses `a11,a12;a21,a22;...`.
    pub fn parse(text: &str) -> Result<Self> {
        let rows = text
            .split(';')
            .filter(|r| !r.trim().is_empty())
            .map(|row| {
                let vals: Vec<f64> = row
                    .split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::InvalidCoefficients(format!("`{row}`: {e}")))?;
                match vals.as_slice() {
                    [a, b] => Ok([*a, *b]),
                    _ => Err(Error::InvalidCoefficients(format!(
                        "row `{row}` needs exactly two values"
                    ))),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows)
    }

    pub fn rows(&self) -> &[[f64; 2]] {
        &self.0
    }

    pub fn factors(&self) -> usize {
        self.0.len()
    }

    /// Positive uniforms normalized to unit column sums.
    pub fn simulate(factors: usize, rng: &mut StreamRng) -> Result<Self> {
        let raw: Vec<[f64; 2]> = (0..factors)
            .map(|_| [rng.sample::<f64, _>(Open01), rng.sample::<f64, _>(Open01)])
            .collect();
        let s1: f64 = raw.iter().map(|r| r[0]).sum();
        let s2: f64 = raw.iter().map(|r| r[1]).sum();
        Self::new(raw.into_iter().map(|r| [r[0] / s1, r[1] / s2]).collect())
    }

    pub fn limit(&self) -> M4Limit {
        let c1 = self.0.iter().map(|r| r[0] / r[1]).fold(f64::MIN, f64::max);
        let c2 = self.0.iter().map(|r| r[1] / r[0]).fold(f64::MIN, f64::max);
        // c1·c2 ≥ 1 always; rounding can push an equal-column max just below 1
        let (c1, c2) = (c1.max(1.0), c2.max(1.0));
        M4Limit {
            c1,
            c2,
            q_limit: quotient_correlation(c1, c2).expect("bounds are >= 1"),
        }
    }
}

/// Almost-sure bounds of the M4 quotients and the resulting limit of q.
///
/// `c1` bounds `x/y` and `c2` bounds `y/x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct M4Limit {
    pub c1: f64,
    pub c2: f64,
    pub q_limit: f64,
}

/// Which generator to run, its parameters, and the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub model: ModelKind,
    pub n: usize,
    pub seed: u64,
    pub theta: Option<f64>,
    pub rho: Option<f64>,
    pub df: Option<f64>,
    pub m4_coeffs: Option<M4Coeffs>,
}

impl ModelSpec {
    /// Model spec with the benchmark defaults (θ = 0.4472, ρ = 0.8, df = 4) filled
    /// in for the models that need them.
    pub fn new(model: ModelKind, n: usize, seed: u64) -> Self {
        let theta = matches!(model, ModelKind::B | ModelKind::C).then_some(DEFAULT_THETA);
        let rho = matches!(model, ModelKind::F | ModelKind::H).then_some(DEFAULT_RHO);
        let df = matches!(model, ModelKind::H).then_some(DEFAULT_DF);
        ModelSpec {
            model,
            n,
            seed,
            theta,
            rho,
            df,
            m4_coeffs: None,
        }
    }

    /// Model spec with no parameters set.
    pub fn bare(model: ModelKind, n: usize, seed: u64) -> Self {
        ModelSpec {
            model,
            n,
            seed,
            theta: None,
            rho: None,
            df: None,
            m4_coeffs: None,
        }
    }

    fn missing(&self, param: &'static str) -> Error {
        Error::MissingParameter {
            model: self.model.tag().to_string(),
            param,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::TooFewObservations { n: self.n, min: 2 });
        }
        match self.model {
            ModelKind::B | ModelKind::C => {
                let theta = self.theta.ok_or_else(|| self.missing("theta"))?;
                check_theta(theta)?;
            }
            ModelKind::F | ModelKind::H => {
                let rho = self.rho.ok_or_else(|| self.missing("rho"))?;
                if !(rho > -1.0 && rho < 1.0) {
                    return Err(Error::domain("rho", rho));
                }
                if self.model == ModelKind::H {
                    let df = self.df.ok_or_else(|| self.missing("df"))?;
                    if !(df > 0.0) || !df.is_finite() {
                        return Err(Error::domain("df", df));
                    }
                }
            }
            ModelKind::M4 => {
                self.m4_coeffs
                    .as_ref()
                    .ok_or_else(|| self.missing("m4_coeffs"))?;
            }
            _ => {}
        }
        Ok(())
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::domain("theta", theta));
    }
    Ok(())
}

fn unit_frechet(rng: &mut StreamRng) -> f64 {
    let u: f64 = rng.sample(Open01);
    -1.0 / u.ln()
}

/// Log of a positive α-stable variable with Laplace transform
/// `exp(-s^α)` (Kanter's representation).
fn ln_positive_stable(alpha: f64, rng: &mut StreamRng) -> f64 {
    if alpha == 1.0 {
        return 0.0;
    }
    let v = PI * rng.sample::<f64, _>(Open01);
    let w: f64 = rng.sample(Exp1);
    (alpha * v).sin().ln() - v.sin().ln() / alpha
        + (1.0 - alpha) / alpha * (((1.0 - alpha) * v).sin().ln() - w.ln())
}

/// Draws one Gumbel copula pair and returns `(-log u1, -log u2)`, the
/// unit-exponential scale, which keeps full precision near u = 1.
fn gumbel_neg_log_pair(theta: f64, rng: &mut StreamRng) -> (f64, f64) {
    let ln_s = ln_positive_stable(theta, rng);
    let e1: f64 = rng.sample(Exp1);
    let e2: f64 = rng.sample(Exp1);
    (
        (theta * (e1.ln() - ln_s)).exp(),
        (theta * (e2.ln() - ln_s)).exp(),
    )
}

/// `n` pairs from the Gumbel copula `exp(-(t1^{1/θ} + t2^{1/θ})^θ)` with
/// `t_i = -log u_i`, sampled through a positive stable frailty.
pub fn gumbel_copula_sample(theta: f64, n: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
    check_theta(theta)?;
    let mut rng = substream(seed, domain::GUMBEL, 0);
    Ok((0..n)
        .map(|_| {
            let (t1, t2) = gumbel_neg_log_pair(theta, &mut rng);
            ((-t1).exp(), (-t2).exp())
        })
        .collect())
}

/// M4 pairs driven by one fresh vector of `L` unit Fréchet factors each.
pub fn m4_pair(coeffs: &M4Coeffs, n: usize, seed: u64) -> Result<(PairedSample, M4Limit)> {
    let mut rng = substream(seed, domain::M4, 0);
    let sample = m4_draw(coeffs, n, &mut rng)?;
    Ok((sample, coeffs.limit()))
}

fn m4_draw(coeffs: &M4Coeffs, n: usize, rng: &mut StreamRng) -> Result<PairedSample> {
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let (mut x, mut y) = (0.0f64, 0.0f64);
        for row in coeffs.rows() {
            let z = unit_frechet(rng);
            x = x.max(row[0] * z);
            y = y.max(row[1] * z);
        }
        xs.push(x);
        ys.push(y);
    }
    PairedSample::new(xs, ys)
}

/// The coefficients model (d) uses for `seed`.
pub fn model_d_coefficients(seed: u64) -> Result<M4Coeffs> {
    let mut rng = substream(seed, domain::M4_COEFFS, 0);
    M4Coeffs::simulate(MODEL_D_FACTORS, &mut rng)
}

/// Draws `spec.n` iid pairs from the model.
pub fn generate(spec: &ModelSpec) -> Result<PairedSample> {
    spec.validate()?;
    let n = spec.n;
    let mut rng = substream(spec.seed, spec.model.stream_domain(), 0);
    let rng = &mut rng;
    let pairs: Vec<(f64, f64)> = match spec.model {
        ModelKind::A => (0..n)
            .map(|_| (unit_frechet(rng), unit_frechet(rng)))
            .collect(),
        ModelKind::B => {
            let theta = spec.theta.expect("validated");
            (0..n)
                .map(|_| {
                    // F^{-1}(u) = -1/log(u) = 1/t
                    let (t1, t2) = gumbel_neg_log_pair(theta, rng);
                    (1.0 / t1, 1.0 / t2)
                })
                .collect()
        }
        ModelKind::C => {
            let theta = spec.theta.expect("validated");
            (0..n)
                .map(|_| {
                    // the copula value is the joint survival probability:
                    // F(x) = 1 - u, so x = -1/log(1 - u)
                    let (t1, t2) = gumbel_neg_log_pair(theta, rng);
                    let to_frechet = |t: f64| -1.0 / (-(-t).exp()).ln_1p();
                    (to_frechet(t1), to_frechet(t2))
                })
                .collect()
        }
        ModelKind::D => {
            let coeffs = model_d_coefficients(spec.seed)?;
            return m4_draw(&coeffs, n, rng);
        }
        ModelKind::M4 => {
            let coeffs = spec.m4_coeffs.as_ref().expect("validated");
            return m4_draw(coeffs, n, rng);
        }
        ModelKind::E => (0..n)
            .map(|_| {
                let u: f64 = rng.sample(Open01);
                (1.0 / u, 1.0 / (1.0 - u))
            })
            .collect(),
        ModelKind::F => {
            let rho = spec.rho.expect("validated");
            (0..n).map(|_| correlated_normals(rho, rng)).collect()
        }
        ModelKind::G => (0..n)
            .map(|_| {
                let z1 = unit_frechet(rng);
                let z2 = unit_frechet(rng);
                let e: f64 = rng.sample(Exp1);
                (z1 * e, z2 * e)
            })
            .collect(),
        ModelKind::H => {
            let rho = spec.rho.expect("validated");
            let df = spec.df.expect("validated");
            let chi = ChiSquared::new(df).map_err(|_| Error::domain("df", df))?;
            (0..n)
                .map(|_| {
                    let (z1, z2) = correlated_normals(rho, rng);
                    let scale = (chi.sample(rng) / df).sqrt();
                    (z1 / scale, z2 / scale)
                })
                .collect()
        }
    };
    PairedSample::from_pairs(pairs)
}

fn correlated_normals(rho: f64, rng: &mut StreamRng) -> (f64, f64) {
    let z1: f64 = rng.sample(StandardNormal);
    let z2: f64 = rng.sample(StandardNormal);
    (z1, rho * z1 + (1.0 - rho * rho).sqrt() * z2)
}
