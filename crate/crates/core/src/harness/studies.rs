use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{ks_statistic, ReportRow, Study, StudyConfig, StudyReport};
use crate::dist::{frechet_quantile, CdfFamily, GammaRef};
use crate::error::{Error, Result};
use crate::hypothesis::{fisher_z_test, test_summary, GammaTestReport};
use crate::marginals::{
    empirical_scores, parametric_scores, FrechetScores, MarginModel, PairedSample, RankPair,
    Transform,
};
use crate::models::{generate, ModelKind, ModelSpec, DEFAULT_DF};
use crate::quotient::{
    median, plain_quotient, rank_quotient, select_threshold, tail_quotient_correlation,
    tail_quotient_rank_at, QuotientSummary, RankConfig,
};
use crate::rng::{child_seed, domain, substream};

/// A sample prepared for one route: scores for the parametric and
/// empirical routes, ranks for the rank route (scores are drawn per
/// replicate).
enum Prepared {
    Scores(FrechetScores),
    Ranks(RankPair),
}

/// How the tail threshold is fixed.
#[derive(Clone, Copy)]
enum ThresholdRule {
    /// Smaller of the two per-margin sample percentiles of the scores.
    SamplePercentile,
    /// `u = -1/log(p)` on the Fréchet scale.
    FrechetQuantile,
}

fn prepare(
    sample: &PairedSample,
    route: Transform,
    margin: Option<&MarginModel>,
) -> Result<Prepared> {
    Ok(match route {
        Transform::Rank => Prepared::Ranks(RankPair::new(sample)),
        Transform::Empirical => Prepared::Scores(empirical_scores(sample)?),
        Transform::Parametric => {
            let margin = margin
                .ok_or_else(|| Error::Config("parametric route needs a margin family".into()))?;
            Prepared::Scores(parametric_scores(sample, margin)?)
        }
    })
}

fn plain_summary(
    prep: &Prepared,
    rank: &RankConfig,
    sample: &PairedSample,
) -> Result<QuotientSummary> {
    match prep {
        Prepared::Scores(scores) => plain_quotient(scores),
        Prepared::Ranks(_) => rank_quotient(sample, rank),
    }
}

fn tail_summary(
    prep: &Prepared,
    percentile: f64,
    rule: ThresholdRule,
    rank: &RankConfig,
) -> Result<QuotientSummary> {
    match prep {
        Prepared::Ranks(ranks) => tail_quotient_rank_at(ranks, frechet_quantile(percentile)?, rank),
        Prepared::Scores(scores) => {
            let u = match rule {
                ThresholdRule::SamplePercentile => select_threshold(scores, percentile)?.resolved_u,
                ThresholdRule::FrechetQuantile => frechet_quantile(percentile)?,
            };
            tail_quotient_correlation(scores, u)
        }
    }
}

/// Known margins of the benchmark models, for the parametric route.
fn known_margin(model: ModelKind) -> Result<MarginModel> {
    match model {
        ModelKind::A | ModelKind::B | ModelKind::C | ModelKind::D | ModelKind::M4 => {
            Ok(MarginModel::Fixed(CdfFamily::UnitFrechet))
        }
        ModelKind::F => Ok(MarginModel::Fixed(CdfFamily::Normal { mean: 0.0, sd: 1.0 })),
        ModelKind::H => Ok(MarginModel::Fixed(CdfFamily::StudentT { df: DEFAULT_DF })),
        ModelKind::E | ModelKind::G => Err(Error::Config(format!(
            "model ({model}) has no built-in parametric margin; use the empirical or rank route"
        ))),
    }
}

fn rank_config(config: &StudyConfig, seed: u64) -> RankConfig {
    RankConfig {
        seed,
        replicates: config.replicates,
        aggregate: config.aggregate,
    }
}

fn share(flags: impl Iterator<Item = bool>) -> f64 {
    let (mut hit, mut all) = (0usize, 0usize);
    for f in flags {
        all += 1;
        hit += f as usize;
    }
    hit as f64 / all as f64
}

/// Per-trial tail outcome at one percentile.
#[derive(Clone)]
struct TailOutcome {
    q: f64,
    report: GammaTestReport,
}

fn cell_row(
    cell: &str,
    test: &str,
    config: &StudyConfig,
    n: usize,
    percentile: Option<f64>,
    outcomes: &[TailOutcome],
) -> ReportRow {
    let stats: Vec<f64> = outcomes.iter().map(|o| o.report.statistic).collect();
    let ps: Vec<f64> = outcomes.iter().map(|o| o.report.p_value).collect();
    let qs: Vec<f64> = outcomes.iter().map(|o| o.q).collect();
    let thresholds: Vec<f64> = outcomes.iter().filter_map(|o| o.report.threshold).collect();
    let threshold = (!thresholds.is_empty()).then(|| median(&thresholds));
    ReportRow {
        cell: cell.to_string(),
        test: test.to_string(),
        route: Some(config.route),
        n,
        percentile,
        threshold,
        rate: Some(median(
            &outcomes.iter().map(|o| o.report.rate).collect::<Vec<_>>(),
        )),
        q: Some(median(&qs)),
        statistic: median(&stats),
        p_value: median(&ps),
        reject: None,
        rejection_rate: Some(share(outcomes.iter().map(|o| o.report.reject))),
        reps: outcomes.len(),
        ks: None,
    }
}

/// Tail gamma tests for every model × percentile cell, `reps` samples per
/// model, reporting median p-values and rejection rates.
pub fn run_table1(config: &StudyConfig) -> Result<StudyReport> {
    config.expect_study(Study::Table1)?;
    let mut rows = Vec::new();
    for &model in &config.models {
        let margin = match config.route {
            Transform::Parametric => Some(known_margin(model)?),
            _ => None,
        };
        // trials × percentiles
        let per_trial: Vec<Vec<TailOutcome>> = (0..config.reps)
            .into_par_iter()
            .map(|rep| {
                let trial_seed = child_seed(config.seed, domain::TRIAL, rep as u32);
                let sample = generate(&ModelSpec::new(model, config.n, trial_seed))?;
                let prep = prepare(&sample, config.route, margin.as_ref())?;
                let rank = rank_config(config, trial_seed);
                config
                    .percentiles
                    .iter()
                    .map(|&p| {
                        let summary =
                            tail_summary(&prep, p, ThresholdRule::SamplePercentile, &rank)?;
                        let mut report = test_summary(&summary, config.alpha)?;
                        report.threshold_percentile = Some(p);
                        Ok(TailOutcome {
                            q: summary.q,
                            report,
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        for (k, &p) in config.percentiles.iter().enumerate() {
            let cell: Vec<TailOutcome> = per_trial.iter().map(|t| t[k].clone()).collect();
            rows.push(cell_row(
                model.tag(),
                "gamma_tail",
                config,
                config.n,
                Some(p),
                &cell,
            ));
        }
    }
    let mut report = StudyReport::new(config, rows);
    report.notes.push(match config.route {
        Transform::Rank => "threshold: u = -1/log(p) on rank Frechet scores".to_string(),
        _ => "threshold: smaller of the two per-margin 100p-th percentiles of the Frechet scores"
            .to_string(),
    });
    if config.models.contains(&ModelKind::D) {
        report.notes.push(
            "model d: 30 positive uniform coefficients per column normalized to sum 1, redrawn per replicate"
                .to_string(),
        );
    }
    Ok(report)
}

/// Power of the gamma test and of Fisher's Z on `Y = X²`, `X` standard
/// normal, over a grid of sample sizes.
pub fn run_power_study(config: &StudyConfig) -> Result<StudyReport> {
    config.expect_study(Study::Power)?;
    if config.route == Transform::Parametric {
        return Err(Error::Config(
            "the power study supports the rank and empirical routes".into(),
        ));
    }
    let sizes: Vec<usize> = (config.n_min..=config.n_max)
        .step_by(config.n_step)
        .collect();
    let mut rows = Vec::new();
    for &n in &sizes {
        let size_seed = child_seed(config.seed, domain::POWER, n as u32);
        let trials: Vec<(GammaTestReport, f64, crate::hypothesis::FisherReport)> = (0..config.reps)
            .into_par_iter()
            .map(|t| {
                let trial_seed = child_seed(size_seed, domain::TRIAL, t as u32);
                let mut rng = substream(trial_seed, domain::POWER, 0);
                let xs: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
                let ys: Vec<f64> = xs.iter().map(|x| x * x).collect();
                let sample = PairedSample::new(xs, ys)?;
                let prep = prepare(&sample, config.route, None)?;
                let summary = plain_summary(&prep, &rank_config(config, trial_seed), &sample)?;
                let gamma = test_summary(&summary, config.alpha)?;
                let fisher = fisher_z_test(&sample, config.alpha)?;
                Ok((gamma, summary.q, fisher))
            })
            .collect::<Result<Vec<_>>>()?;
        let outcomes: Vec<TailOutcome> = trials
            .iter()
            .map(|(g, q, _)| TailOutcome {
                q: *q,
                report: g.clone(),
            })
            .collect();
        rows.push(cell_row("x2", "gamma", config, n, None, &outcomes));
        let fisher_p: Vec<f64> = trials.iter().map(|t| t.2.p_value).collect();
        let fisher_z: Vec<f64> = trials.iter().map(|t| t.2.z).collect();
        rows.push(ReportRow {
            cell: "x2".into(),
            test: "fisher".into(),
            route: None,
            n,
            percentile: None,
            threshold: None,
            rate: None,
            q: None,
            statistic: median(&fisher_z),
            p_value: median(&fisher_p),
            reject: None,
            rejection_rate: Some(share(trials.iter().map(|t| t.2.reject))),
            reps: trials.len(),
            ks: None,
        });
    }
    let mut report = StudyReport::new(config, rows);
    report
        .notes
        .push("design x2: X ~ N(0,1), Y = X^2; rejection_rate is the empirical power".into());
    Ok(report)
}

/// Raw null-distribution draws behind [`run_null_calibration`].
#[derive(Debug, Clone)]
pub struct NullStatistics {
    pub model: ModelKind,
    pub plain: Vec<f64>,
    pub plain_reject: Vec<bool>,
    /// `(percentile, u, statistics, rejections)`; `u = -1/log(p)`.
    pub tail: Vec<(f64, f64, Vec<f64>, Vec<bool>)>,
}

/// Draws `reps` samples of the first configured model and records the
/// plain statistic `n·q` and the tail statistic `n·q_u` at
/// `u = -1/log(p)` for each percentile.
pub fn null_statistics(config: &StudyConfig) -> Result<NullStatistics> {
    config.expect_study(Study::Nullcal)?;
    let model = *config
        .models
        .first()
        .ok_or_else(|| Error::Config("no model selected".into()))?;
    let margin = match config.route {
        Transform::Parametric => Some(known_margin(model)?),
        _ => None,
    };
    let trials: Vec<(GammaTestReport, Vec<GammaTestReport>)> = (0..config.reps)
        .into_par_iter()
        .map(|rep| {
            let trial_seed = child_seed(config.seed, domain::TRIAL, rep as u32);
            let sample = generate(&ModelSpec::new(model, config.n, trial_seed))?;
            let prep = prepare(&sample, config.route, margin.as_ref())?;
            let rank = rank_config(config, trial_seed);
            let plain = test_summary(&plain_summary(&prep, &rank, &sample)?, config.alpha)?;
            let tails = config
                .percentiles
                .iter()
                .map(|&p| {
                    let s = tail_summary(&prep, p, ThresholdRule::FrechetQuantile, &rank)?;
                    test_summary(&s, config.alpha)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((plain, tails))
        })
        .collect::<Result<Vec<_>>>()?;
    let tail = config
        .percentiles
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            Ok((
                p,
                frechet_quantile(p)?,
                trials.iter().map(|t| t.1[k].statistic).collect(),
                trials.iter().map(|t| t.1[k].reject).collect(),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NullStatistics {
        model,
        plain: trials.iter().map(|t| t.0.statistic).collect(),
        plain_reject: trials.iter().map(|t| t.0.reject).collect(),
        tail,
    })
}

/// Null calibration: Type I rates and KS distances of the plain and tail
/// statistics from their gamma limits.
pub fn run_null_calibration(config: &StudyConfig) -> Result<StudyReport> {
    let stats = null_statistics(config)?;
    let cell = stats.model.tag();
    let row =
        |test: &str, percentile: Option<f64>, u: Option<f64>, values: &[f64], rejects: &[bool]| {
            let gamma = match u {
                Some(u) => GammaRef::for_threshold(u)?,
                None => GammaRef::new(1.0)?,
            };
            let ks = ks_statistic(values, &CdfFamily::Erlang2 { rate: gamma.rate() })?;
            let ps: Vec<f64> = values.iter().map(|&s| gamma.survival(s)).collect();
            Ok::<_, Error>(ReportRow {
                cell: cell.to_string(),
                test: test.to_string(),
                route: Some(config.route),
                n: config.n,
                percentile,
                threshold: u,
                rate: Some(gamma.rate()),
                q: None,
                statistic: median(values),
                p_value: median(&ps),
                reject: None,
                rejection_rate: Some(share(rejects.iter().copied())),
                reps: values.len(),
                ks: Some(ks),
            })
        };
    let mut rows = vec![row("gamma", None, None, &stats.plain, &stats.plain_reject)?];
    for (p, u, values, rejects) in &stats.tail {
        rows.push(row("gamma_tail", Some(*p), Some(*u), values, rejects)?);
    }
    let mut report = StudyReport::new(config, rows);
    report
        .notes
        .push("ks: distance of n*q from Gamma(2, rate); tail threshold u = -1/log(p)".into());
    Ok(report)
}

fn single_row(
    cell: &str,
    test: &str,
    route: Option<Transform>,
    q: Option<f64>,
    r: &GammaTestReport,
) -> ReportRow {
    ReportRow {
        cell: cell.to_string(),
        test: test.to_string(),
        route,
        n: r.n,
        percentile: r.threshold_percentile,
        threshold: r.threshold,
        rate: Some(r.rate),
        q,
        statistic: r.statistic,
        p_value: r.p_value,
        reject: Some(r.reject),
        rejection_rate: None,
        reps: 1,
        ks: None,
    }
}

/// Tail gamma tests at every configured percentile on one sample, plus
/// the plain gamma test and Fisher's Z on the full sample.
pub fn run_data_test(sample: &PairedSample, config: &StudyConfig) -> Result<StudyReport> {
    config.expect_study(Study::Datatest)?;
    let prep = prepare(sample, config.route, config.margin.as_ref())?;
    let rank = rank_config(config, config.seed);
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    for &p in &config.percentiles {
        let summary = tail_summary(&prep, p, ThresholdRule::SamplePercentile, &rank)?;
        let mut report = test_summary(&summary, config.alpha)?;
        report.threshold_percentile = Some(p);
        if report.degenerate {
            notes.push(format!(
                "percentile {p}: no exceedances, limit law not applicable"
            ));
        }
        rows.push(single_row(
            "data",
            "gamma_tail",
            Some(config.route),
            Some(summary.q),
            &report,
        ));
    }
    let plain = plain_summary(&prep, &rank, sample)?;
    let report = test_summary(&plain, config.alpha)?;
    rows.push(single_row(
        "data",
        "gamma",
        Some(config.route),
        Some(plain.q),
        &report,
    ));
    match fisher_z_test(sample, config.alpha) {
        Ok(f) => rows.push(ReportRow {
            cell: "data".into(),
            test: "fisher".into(),
            route: None,
            n: f.n,
            percentile: None,
            threshold: None,
            rate: None,
            q: Some(f.r),
            statistic: f.z,
            p_value: f.p_value,
            reject: Some(f.reject),
            rejection_rate: None,
            reps: 1,
            ks: None,
        }),
        Err(e) => notes.push(format!("fisher z skipped: {e}")),
    }
    let mut report = StudyReport::new(config, rows);
    report.notes = notes;
    if sample_has_ties(&prep) {
        report
            .notes
            .push("ties present; ranks broken by first occurrence".into());
    }
    Ok(report)
}

fn sample_has_ties(prep: &Prepared) -> bool {
    match prep {
        Prepared::Scores(s) => s.had_ties(),
        Prepared::Ranks(r) => r.replicate(0, 0).had_ties(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(study: Study) -> StudyConfig {
        let mut c = StudyConfig::new(study);
        c.n = 200;
        c.reps = 4;
        c.replicates = 3;
        c
    }

    #[test]
    fn table1_shape_and_determinism() {
        let mut c = small(Study::Table1);
        c.reps = 2;
        let a = run_table1(&c).unwrap();
        assert_eq!(a.rows.len(), 64);
        for model in ModelKind::TABLE {
            assert_eq!(a.rows_for(model.tag()).count(), 8);
        }
        let b = run_table1(&c).unwrap();
        assert_eq!(a, b);
        assert!(a
            .rows
            .iter()
            .all(|r| (0.0..=1.0).contains(&r.rejection_rate.unwrap())));
    }

    #[test]
    fn table1_single_rep_reproducible_per_route() {
        for route in [Transform::Rank, Transform::Empirical] {
            let mut c = small(Study::Table1);
            c.reps = 1;
            c.route = route;
            c.models = vec![ModelKind::B, ModelKind::E];
            assert_eq!(run_table1(&c).unwrap(), run_table1(&c).unwrap());
        }
        let mut c = small(Study::Table1);
        c.route = Transform::Parametric;
        c.models = vec![ModelKind::E];
        assert!(run_table1(&c).is_err());
        c.models = vec![ModelKind::A, ModelKind::F, ModelKind::H];
        assert_eq!(run_table1(&c).unwrap().rows.len(), 24);
    }

    #[test]
    fn wrong_study_rejected() {
        let c = small(Study::Power);
        assert!(run_table1(&c).is_err());
        let mut c = small(Study::Table1);
        c.percentiles = vec![0.9, 0.8];
        assert!(run_table1(&c).is_err());
    }

    #[test]
    fn data_test_identical_columns() {
        let xs: Vec<f64> = (1..=500).map(|v| (v as f64).sqrt()).collect();
        let sample = PairedSample::new(xs.clone(), xs).unwrap();
        for route in [Transform::Rank, Transform::Empirical] {
            let mut c = small(Study::Datatest);
            c.route = route;
            let report = run_data_test(&sample, &c).unwrap();
            for row in report.rows.iter().filter(|r| r.test == "gamma_tail") {
                assert_eq!(row.q, Some(1.0));
                assert_eq!(row.reject, Some(true));
            }
            assert_eq!(report.rows.len(), 10);
        }
    }

    #[test]
    fn data_test_parametric_needs_margin() {
        let sample = PairedSample::new(vec![1.0, 2.0, 3.0, 4.0], vec![2.0, 1.0, 4.0, 3.0]).unwrap();
        let mut c = small(Study::Datatest);
        c.route = Transform::Parametric;
        assert!(run_data_test(&sample, &c).is_err());
        c.margin = Some(MarginModel::Fixed(CdfFamily::UnitFrechet));
        assert!(run_data_test(&sample, &c).is_ok());
    }

    #[test]
    fn power_rows_and_determinism() {
        let mut c = small(Study::Power);
        c.n_min = 30;
        c.n_max = 34;
        c.n_step = 2;
        let a = run_power_study(&c).unwrap();
        assert_eq!(a.rows.len(), 6);
        assert_eq!(a, run_power_study(&c).unwrap());
    }

    #[test]
    fn csv_and_json_render() {
        let mut c = small(Study::Nullcal);
        c.percentiles = vec![0.9];
        let report = run_null_calibration(&c).unwrap();
        let csv = report.render(super::super::ReportFormat::Csv).unwrap();
        assert!(csv.starts_with("# qcorr"));
        assert!(csv.contains("cell,test,route"));
        let json = report.to_json().unwrap();
        let back: StudyReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }
}
