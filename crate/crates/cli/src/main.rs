//! `qcorr`: quotient-correlation tests from the command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qcorr_core::harness::{
    read_paired_csv, run_data_test, run_null_calibration, run_power_study, run_table1,
    write_paired_csv_file,
};
use qcorr_core::{
    empirical_scores, generate, parametric_scores, rank_frechet_scores, Error, M4Coeffs,
    MarginModel, ModelKind, ModelSpec, ReportFormat, SeedSource, Study, StudyConfig, StudyReport,
    Transform,
};

const SEED_ENV: &str = "QCORR_SEED";

#[derive(Parser)]
#[command(
    name = "qcorr",
    version,
    about = "Quotient correlation and gamma tests for (tail) independence"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a bivariate sample from one of the benchmark models.
    Simulate(SimulateArgs),
    /// Transform a paired CSV onto the unit Fréchet scale.
    Transform(TransformArgs),
    /// Plain gamma test of independence plus Fisher's Z.
    Qtest(QtestArgs),
    /// Gamma tests of tail independence over a list of percentiles.
    Tailtest(TailtestArgs),
    /// Tail gamma tests for models (a)-(h) over the percentile grid.
    Table1(Table1Args),
    /// Power of the gamma test and Fisher's Z on Y = X^2.
    Power(PowerArgs),
    /// Null calibration of the plain and tail statistics.
    Nullcal(NullcalArgs),
}

#[derive(Args)]
struct SeedArg {
    /// Random seed (falls back to $QCORR_SEED, then a fixed default).
    #[arg(long)]
    seed: Option<u64>,
}

impl SeedArg {
    fn resolve(&self) -> Result<(u64, SeedSource), Error> {
        if let Some(seed) = self.seed {
            return Ok((seed, SeedSource::Flag));
        }
        match std::env::var(SEED_ENV) {
            Ok(text) => text
                .trim()
                .parse()
                .map(|s| (s, SeedSource::Env))
                .map_err(|_| Error::Config(format!("${SEED_ENV} is not an integer: `{text}`"))),
            Err(_) => Ok((StudyConfig::DEFAULT_SEED, SeedSource::Default)),
        }
    }
}

#[derive(Args)]
struct InputArgs {
    /// Two-column CSV of paired observations.
    #[arg(long = "in")]
    input: PathBuf,
    /// The first row is a header.
    #[arg(long)]
    header: bool,
}

#[derive(Args)]
struct FamilyArgs {
    /// Parametric family: frechet, normal, t, uniform, exponential.
    #[arg(long)]
    family: Option<String>,
    /// Comma-separated family parameters; omit to estimate from the data.
    #[arg(long, value_delimiter = ',')]
    params: Vec<f64>,
}

impl FamilyArgs {
    fn margin(&self) -> Result<Option<MarginModel>, Error> {
        match &self.family {
            Some(name) => MarginModel::parse(name, &self.params).map(Some),
            None if self.params.is_empty() => Ok(None),
            None => Err(Error::Config("--params needs --family".into())),
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// a..h or m4
    #[arg(long)]
    model: String,
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    df: Option<u32>,
    /// M4 coefficients as `a11,a12;a21,a22;...`.
    #[arg(long)]
    coeffs: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TransformArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    route: Transform,
    #[command(flatten)]
    family: FamilyArgs,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TestArgs {
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Fréchet replicates for the rank route.
    #[arg(long, default_value_t = 10)]
    replicates: usize,
    #[command(flatten)]
    seed: SeedArg,
    #[command(flatten)]
    family: FamilyArgs,
    /// Emit JSON instead of CSV.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct QtestArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value = "rank")]
    route: Transform,
    #[command(flatten)]
    test: TestArgs,
}

#[derive(Args)]
struct TailtestArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_delimiter = ',', default_values_t = qcorr_core::harness::TABLE1_PERCENTILES)]
    percentiles: Vec<f64>,
    #[arg(long, default_value = "rank")]
    route: Transform,
    #[command(flatten)]
    test: TestArgs,
}

#[derive(Args)]
struct Table1Args {
    #[arg(long, default_value_t = 500)]
    n: usize,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value = "empirical")]
    route: Transform,
    #[arg(long, default_value_t = 10)]
    replicates: usize,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct PowerArgs {
    #[arg(long, default_value = "x2")]
    design: String,
    #[arg(long, default_value_t = 25)]
    nmin: usize,
    #[arg(long, default_value_t = 100)]
    nmax: usize,
    #[arg(long, default_value_t = 1)]
    nstep: usize,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value = "rank")]
    route: Transform,
    #[arg(long, default_value_t = 10)]
    replicates: usize,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct NullcalArgs {
    #[arg(long, default_value = "a")]
    model: String,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [0.95])]
    percentiles: Vec<f64>,
    #[arg(long, default_value = "parametric")]
    route: Transform,
    #[arg(long, default_value_t = 10)]
    replicates: usize,
    #[arg(long)]
    json: bool,
}

fn format(json: bool) -> ReportFormat {
    if json {
        ReportFormat::Json
    } else {
        ReportFormat::Csv
    }
}

fn emit(report: &StudyReport, json: bool) -> Result<(), Error> {
    print!("{}", report.render(format(json))?);
    if json {
        println!();
    }
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<(), Error> {
    let model: ModelKind = args.model.parse()?;
    let (seed, _) = args.seed.resolve()?;
    let mut spec = ModelSpec::new(model, args.n, seed);
    spec.theta = args.theta.or(spec.theta);
    spec.rho = args.rho.or(spec.rho);
    spec.df = args.df.map(f64::from).or(spec.df);
    if let Some(text) = &args.coeffs {
        spec.m4_coeffs = Some(M4Coeffs::parse(text)?);
    }
    let sample = generate(&spec)?;
    write_paired_csv_file(&args.out, sample.xs(), sample.ys(), None)?;
    eprintln!(
        "wrote {} pairs from model ({model}) seed {seed}",
        sample.n()
    );
    Ok(())
}

fn transform(args: TransformArgs) -> Result<(), Error> {
    let sample = read_paired_csv(&args.input.input, args.input.header)?;
    let scores = match args.route {
        Transform::Empirical => empirical_scores(&sample)?,
        Transform::Rank => {
            let (seed, _) = args.seed.resolve()?;
            rank_frechet_scores(&sample, seed, 1)?.remove(0)
        }
        Transform::Parametric => {
            let margin = args
                .family
                .margin()?
                .ok_or_else(|| Error::Config("the parametric route needs --family".into()))?;
            parametric_scores(&sample, &margin)?
        }
    };
    write_paired_csv_file(&args.out, scores.xs(), scores.ys(), None)?;
    Ok(())
}

fn data_config(
    route: Transform,
    percentiles: Vec<f64>,
    test: &TestArgs,
) -> Result<StudyConfig, Error> {
    let (seed, seed_source) = test.seed.resolve()?;
    let mut config = StudyConfig::new(Study::Datatest);
    config.route = route;
    config.percentiles = percentiles;
    config.alpha = test.alpha;
    config.replicates = test.replicates;
    config.seed = seed;
    config.seed_source = seed_source;
    config.margin = test.family.margin()?;
    Ok(config)
}

fn qtest(args: QtestArgs) -> Result<(), Error> {
    let sample = read_paired_csv(&args.input.input, args.input.header)?;
    let mut config = data_config(args.route, Vec::new(), &args.test)?;
    config.n = sample.n();
    emit(&run_data_test(&sample, &config)?, args.test.json)
}

fn tailtest(args: TailtestArgs) -> Result<(), Error> {
    let sample = read_paired_csv(&args.input.input, args.input.header)?;
    let mut config = data_config(args.route, args.percentiles, &args.test)?;
    config.n = sample.n();
    emit(&run_data_test(&sample, &config)?, args.test.json)
}

fn table1(args: Table1Args) -> Result<(), Error> {
    let (seed, seed_source) = args.seed.resolve()?;
    let mut config = StudyConfig::new(Study::Table1);
    config.n = args.n;
    config.reps = args.reps;
    config.alpha = args.alpha;
    config.route = args.route;
    config.replicates = args.replicates;
    config.seed = seed;
    config.seed_source = seed_source;
    emit(&run_table1(&config)?, args.json)
}

fn power(args: PowerArgs) -> Result<(), Error> {
    if args.design != "x2" {
        return Err(Error::Config(format!("unknown design `{}`", args.design)));
    }
    let (seed, seed_source) = args.seed.resolve()?;
    let mut config = StudyConfig::new(Study::Power);
    config.n_min = args.nmin;
    config.n_max = args.nmax;
    config.n_step = args.nstep;
    config.n = args.nmax;
    config.reps = args.reps;
    config.alpha = args.alpha;
    config.route = args.route;
    config.replicates = args.replicates;
    config.seed = seed;
    config.seed_source = seed_source;
    emit(&run_power_study(&config)?, args.json)
}

fn nullcal(args: NullcalArgs) -> Result<(), Error> {
    let (seed, seed_source) = args.seed.resolve()?;
    let mut config = StudyConfig::new(Study::Nullcal);
    config.models = vec![args.model.parse()?];
    config.n = args.n;
    config.reps = args.reps;
    config.alpha = args.alpha;
    config.percentiles = args.percentiles;
    config.route = args.route;
    config.replicates = args.replicates;
    config.seed = seed;
    config.seed_source = seed_source;
    emit(&run_null_calibration(&config)?, args.json)
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_)
        | Error::MissingParameter { .. }
        | Error::UnknownFamily(_)
        | Error::InvalidCoefficients(_)
        | Error::Domain { .. } => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Transform(a) => transform(a),
        Command::Qtest(a) => qtest(a),
        Command::Tailtest(a) => tailtest(a),
        Command::Table1(a) => table1(a),
        Command::Power(a) => power(a),
        Command::Nullcal(a) => nullcal(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
