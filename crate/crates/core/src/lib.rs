//! Quotient correlation coefficients and gamma tests for independence and
//! tail independence.
//!
//! The crate is organized bottom-up:
//!
//! * [`dist`]: unit Fréchet, Erlang-2 and normal distribution functions;
//! * [`marginals`]: parametric, empirical and rank-based transforms onto
//!   the unit Fréchet scale;
//! * [`quotient`]: the quotient correlation, its tail version, and
//!   threshold selection;
//! * [`hypothesis`]: the gamma tests, Fisher's Z, and the empirical tail
//!   dependence index;
//! * [`models`]: seeded generators for the benchmark models;
//! * [`harness`]: study drivers, CSV/JSON reports and the KS oracle.
//!
//! ```
//! use qcorr_core::{empirical_scores, plain_quotient, test_summary, PairedSample};
//!
//! let sample = PairedSample::new(
//!     vec![0.3, 1.9, 0.8, 4.1, 2.2, 0.5],
//!     vec![1.2, 0.4, 2.5, 3.9, 0.9, 0.7],
//! )?;
//! let q = plain_quotient(&empirical_scores(&sample)?)?;
//! let report = test_summary(&q, 0.05)?;
//! assert!((0.0..=1.0).contains(&report.p_value));
//! # Ok::<(), qcorr_core::Error>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dist;
pub mod error;
pub mod harness;
pub mod hypothesis;
pub mod marginals;
pub mod models;
pub mod quotient;
pub mod rng;

pub use dist::{
    erlang2_survival, erlang2_upper_quantile, frechet_cdf, frechet_quantile, std_normal_cdf,
    CdfFamily, GammaRef,
};
pub use error::{Error, Result};
pub use harness::{ReportFormat, ReportRow, SeedSource, Study, StudyConfig, StudyReport};
pub use hypothesis::{
    fisher_z_test, gamma_independence_test, gamma_tail_test, tail_index_estimate, test_summary,
    FisherReport, GammaTestReport, TailIndexEstimate,
};
pub use marginals::{
    empirical_frechet_transform, empirical_scores, parametric_frechet_transform, parametric_scores,
    rank_frechet_scores, EmpiricalCdf, FrechetScores, MarginModel, PairedSample, Transform,
};
pub use models::{
    generate, gumbel_copula_sample, m4_pair, M4Coeffs, M4Limit, ModelKind, ModelSpec,
};
pub use quotient::{
    max_quotient_pair, plain_quotient, quotient_correlation, rank_quotient, select_threshold,
    tail_quotient_correlation, tail_quotient_rank, Aggregate, QuotientSummary, RankConfig,
    ThresholdSpec, Variant,
};
