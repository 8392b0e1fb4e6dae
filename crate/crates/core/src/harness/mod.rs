//! Study drivers, report types and file I/O.
//!
//! Every driver is a pure function of its [`StudyConfig`]: trials run in
//! parallel on independent seeded substreams and the rows come back in a
//! fixed order, so repeated runs produce identical reports.

mod io;
mod ks;
mod studies;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marginals::{MarginModel, Transform};
use crate::models::ModelKind;
use crate::quotient::Aggregate;

pub use io::{parse_paired_csv, read_paired_csv, write_paired_csv, write_paired_csv_file};
pub use ks::{ks_statistic, ks_statistic_fn};
pub use studies::{
    null_statistics, run_data_test, run_null_calibration, run_power_study, run_table1,
    NullStatistics,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Threshold percentiles of the benchmark table.
pub const TABLE1_PERCENTILES: [f64; 8] = [0.80, 0.825, 0.85, 0.875, 0.90, 0.925, 0.95, 0.975];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Study {
    Table1,
    Power,
    Nullcal,
    Datatest,
}

impl Study {
    pub fn as_str(&self) -> &'static str {
        match self {
            Study::Table1 => "table1",
            Study::Power => "power",
            Study::Nullcal => "nullcal",
            Study::Datatest => "datatest",
        }
    }
}

/// Where the seed came from; echoed into reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedSource {
    #[default]
    Default,
    Flag,
    Env,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub study: Study,
    pub n: usize,
    pub reps: usize,
    pub alpha: f64,
    pub percentiles: Vec<f64>,
    pub models: Vec<ModelKind>,
    pub seed: u64,
    pub seed_source: SeedSource,
    pub route: Transform,
    /// Rank route: Fréchet replicates per coefficient and how they combine.
    pub replicates: usize,
    pub aggregate: Aggregate,
    /// Parametric route on user data.
    pub margin: Option<MarginModel>,
    /// Power study sample-size grid.
    pub n_min: usize,
    pub n_max: usize,
    pub n_step: usize,
}

impl StudyConfig {
    pub const DEFAULT_SEED: u64 = 20_090_701;

    /// Defaults: n = 500, the eight table percentiles, α = 0.05, 100 reps.
    /// Data tests default to the rank route; the simulation studies to the
    /// empirical route.
    pub fn new(study: Study) -> Self {
        let route = match study {
            Study::Datatest | Study::Power => Transform::Rank,
            Study::Table1 | Study::Nullcal => Transform::Empirical,
        };
        let models = match study {
            Study::Nullcal => vec![ModelKind::A],
            _ => ModelKind::TABLE.to_vec(),
        };
        StudyConfig {
            study,
            n: 500,
            reps: 100,
            alpha: 0.05,
            percentiles: TABLE1_PERCENTILES.to_vec(),
            models,
            seed: Self::DEFAULT_SEED,
            seed_source: SeedSource::Default,
            route,
            replicates: 10,
            aggregate: Aggregate::Median,
            margin: None,
            n_min: 25,
            n_max: 100,
            n_step: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.reps == 0 {
            return bad("reps must be at least 1".into());
        }
        if self.n < 2 {
            return bad(format!("n must be at least 2, got {}", self.n));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must be in (0,1), got {}", self.alpha));
        }
        if self.percentiles.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
            return bad("percentiles must lie in (0,1)".into());
        }
        if self.percentiles.windows(2).any(|w| w[0] > w[1]) {
            return bad("percentiles must be sorted ascending".into());
        }
        if self.replicates == 0 {
            return bad("replicates must be at least 1".into());
        }
        if self.study == Study::Power
            && (self.n_min < 4 || self.n_min > self.n_max || self.n_step == 0)
        {
            return bad(format!(
                "invalid sample-size grid {}..={} step {}",
                self.n_min, self.n_max, self.n_step
            ));
        }
        Ok(())
    }

    fn expect_study(&self, study: Study) -> Result<()> {
        if self.study != study {
            return Err(Error::Config(format!(
                "config is for `{}`, not `{}`",
                self.study.as_str(),
                study.as_str()
            )));
        }
        self.validate()
    }
}

/// One line of a study report.
///
/// Simulation cells carry medians over replicates in `statistic` and
/// `p_value` and the share of rejections in `rejection_rate`; single-sample
/// rows carry the decision in `reject`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    /// Model tag, `data`, or the power design name.
    pub cell: String,
    /// `gamma`, `gamma_tail` or `fisher`.
    pub test: String,
    pub route: Option<Transform>,
    pub n: usize,
    pub percentile: Option<f64>,
    pub threshold: Option<f64>,
    pub rate: Option<f64>,
    pub q: Option<f64>,
    pub statistic: f64,
    pub p_value: f64,
    pub reject: Option<bool>,
    pub rejection_rate: Option<f64>,
    pub reps: usize,
    /// Kolmogorov–Smirnov distance of the statistics from their gamma
    /// reference (null calibration only).
    pub ks: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub study: Study,
    pub version: String,
    pub seed: u64,
    pub seed_source: SeedSource,
    pub route: Transform,
    pub config: StudyConfig,
    pub notes: Vec<String>,
    pub rows: Vec<ReportRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Csv,
    Json,
}

const CSV_HEADER: [&str; 14] = [
    "cell",
    "test",
    "route",
    "n",
    "percentile",
    "threshold",
    "rate",
    "q",
    "statistic",
    "p_value",
    "reject",
    "rejection_rate",
    "reps",
    "ks",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

impl StudyReport {
    pub(crate) fn new(config: &StudyConfig, rows: Vec<ReportRow>) -> Self {
        StudyReport {
            study: config.study,
            version: VERSION.to_string(),
            seed: config.seed,
            seed_source: config.seed_source,
            route: config.route,
            config: config.clone(),
            notes: Vec::new(),
            rows,
        }
    }

    pub fn rows_for<'a>(&'a self, cell: &'a str) -> impl Iterator<Item = &'a ReportRow> + 'a {
        self.rows.iter().filter(move |r| r.cell == cell)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// CSV body preceded by `#` provenance lines.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(
            out,
            "# qcorr {} study={}",
            self.version,
            self.study.as_str()
        )?;
        writeln!(
            out,
            "# seed={} seed_source={:?} route={} alpha={} reps={} n={}",
            self.seed,
            self.seed_source,
            self.route,
            self.config.alpha,
            self.config.reps,
            self.config.n
        )?;
        for note in &self.notes {
            writeln!(out, "# {note}")?;
        }
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(CSV_HEADER)?;
        for r in &self.rows {
            wtr.write_record([
                r.cell.clone(),
                r.test.clone(),
                opt(r.route.map(|t| t.as_str())),
                r.n.to_string(),
                opt(r.percentile),
                opt(r.threshold),
                opt(r.rate),
                opt(r.q),
                r.statistic.to_string(),
                r.p_value.to_string(),
                opt(r.reject),
                opt(r.rejection_rate),
                r.reps.to_string(),
                opt(r.ks),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn render(&self, format: ReportFormat) -> Result<String> {
        match format {
            ReportFormat::Json => self.to_json(),
            ReportFormat::Csv => {
                let mut buf = Vec::new();
                self.write_csv(&mut buf)?;
                Ok(String::from_utf8(buf).expect("csv output is utf-8"))
            }
        }
    }
}
