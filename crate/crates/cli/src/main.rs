//! `confset`: run confidence-set experiments, query Gaussian closed forms and
//! run the Monte Carlo property suites.
//!
//! Exit codes: 0 success, 1 runtime or check failure, 2 usage error.

mod output;
mod verify;

use anyhow::Context;
use clap::{error::ErrorKind, Args, CommandFactory, Parser, Subcommand, ValueEnum};
use confset_core::distributions::{
    gaussian_oracle_risk, gaussian_score_cdf, GaussianMixtureParams, GenerativeModel,
};
use confset_core::estimators::EstimatorKind;
use confset_core::harness::{run_experiment, ExperimentSpec};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "confset",
    version,
    about = "Epsilon-confidence sets with reject option"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a repeated oracle or plug-in experiment and write one row per epsilon.
    Simulate(SimulateArgs),
    /// Closed-form oracle risk and score CDF of the 1-d Gaussian mixture.
    Gauss(GaussArgs),
    /// Run a Monte Carlo property suite.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    #[value(name = "3")]
    Three,
    Gauss,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EstimatorArg {
    Oracle,
    Logistic,
    Kernel,
    Cart,
    Rforest,
}

impl From<EstimatorArg> for EstimatorKind {
    fn from(e: EstimatorArg) -> Self {
        match e {
            EstimatorArg::Oracle => EstimatorKind::Oracle,
            EstimatorArg::Logistic => EstimatorKind::Logistic,
            EstimatorArg::Kernel => EstimatorKind::Kernel,
            EstimatorArg::Cart => EstimatorKind::Cart,
            EstimatorArg::Rforest => EstimatorKind::Forest,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Gaussian mixture parameters, used with `--model gauss`.
#[derive(Args, Default)]
struct GaussParams {
    /// Mean of class 0 (comma list)
    #[arg(
        long,
        value_delimiter = ',',
        allow_negative_numbers = true,
        conflicts_with = "delta"
    )]
    mu0: Option<Vec<f64>>,
    /// Mean of class 1 (comma list)
    #[arg(
        long,
        value_delimiter = ',',
        allow_negative_numbers = true,
        conflicts_with = "delta"
    )]
    mu1: Option<Vec<f64>>,
    /// Shared covariance, row-major (d*d values), or one value v for v*I
    #[arg(long, value_delimiter = ',', conflicts_with = "delta")]
    sigma: Option<Vec<f64>>,
    /// Class separation of the 1-d mixture N(0,1) vs N(delta,1)
    #[arg(long, allow_negative_numbers = true)]
    delta: Option<f64>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    model: ModelArg,
    #[arg(long)]
    estimator: EstimatorArg,
    /// Labeled training size
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Unlabeled calibration size
    #[arg(long = "N", default_value_t = 100)]
    big_n: usize,
    /// Labeled test size
    #[arg(long = "K", default_value_t = 1000)]
    k: usize,
    /// Repetitions
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0"
    )]
    epsilons: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output if absent
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads; 0 uses all cores
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[command(flatten)]
    gauss: GaussParams,
}

#[derive(Args)]
struct GaussArgs {
    #[arg(long, allow_negative_numbers = true)]
    delta: f64,
    #[arg(long, allow_negative_numbers = true)]
    epsilon: Option<f64>,
    /// Also print F_{f*}(alpha), alpha in [1/2, 1)
    #[arg(long = "cdf-at", allow_negative_numbers = true)]
    cdf_at: Option<f64>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    suite: verify::Suite,
    /// Monte Carlo draws per batch
    #[arg(long, default_value_t = 1_000_000)]
    budget: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Model for the control suite
    #[arg(long, default_value = "2")]
    model: ModelArg,
    /// Estimator for the control suite
    #[arg(long, default_value = "cart")]
    estimator: EstimatorArg,
    /// Training size for the control suite
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

fn usage(msg: impl std::fmt::Display) -> ! {
    Cli::command().error(ErrorKind::ValueValidation, msg).exit()
}

fn gaussian_params(p: &GaussParams) -> GaussianMixtureParams {
    let built = if let Some(delta) = p.delta {
        GaussianMixtureParams::canonical(delta)
    } else {
        let (Some(mu0), Some(mu1)) = (&p.mu0, &p.mu1) else {
            usage("--model gauss needs --delta, or --mu0 and --mu1");
        };
        let d = mu0.len();
        let sigma = match p.sigma.as_deref() {
            None => identity(d, 1.0),
            Some([v]) => identity(d, *v),
            Some(s) if s.len() == d * d => s.chunks(d).map(<[f64]>::to_vec).collect(),
            Some(s) => usage(format!(
                "--sigma needs 1 or {} values, got {}",
                d * d,
                s.len()
            )),
        };
        GaussianMixtureParams::new(mu0.clone(), mu1.clone(), sigma)
    };
    built.unwrap_or_else(|e| usage(e))
}

fn identity(d: usize, v: f64) -> Vec<Vec<f64>> {
    (0..d)
        .map(|i| (0..d).map(|j| if i == j { v } else { 0.0 }).collect())
        .collect()
}

pub(crate) fn model_of(arg: ModelArg, gauss: &GaussParams) -> GenerativeModel {
    match arg {
        ModelArg::One => GenerativeModel::Model1,
        ModelArg::Two => GenerativeModel::model2(),
        ModelArg::Three => GenerativeModel::Model3,
        ModelArg::Gauss => GenerativeModel::gaussian(gaussian_params(gauss)),
    }
}

fn open_output(path: Option<&PathBuf>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn simulate(args: SimulateArgs) -> anyhow::Result<()> {
    let model = model_of(args.model, &args.gauss);
    let spec = ExperimentSpec::new(
        model,
        args.estimator.into(),
        args.n,
        args.big_n,
        args.k,
        args.epsilons,
        args.reps,
        args.seed,
    );
    if let Err(e) = spec.validate() {
        usage(e);
    }
    let report = run_experiment(&spec, args.workers)?;
    if report.failed_fits > 0 {
        eprintln!(
            "warning: {} of {} fits failed",
            report.failed_fits, spec.reps
        );
    }
    let mut out = open_output(args.out.as_ref())?;
    match args.format {
        Format::Csv => output::write_csv(&report, &mut out)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, &report)?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn gauss(args: GaussArgs) -> anyhow::Result<()> {
    if !(args.delta >= 0.0 && args.delta.is_finite()) {
        usage("--delta must be a finite value >= 0");
    }
    if args.epsilon.is_none() && args.cdf_at.is_none() {
        usage("give --epsilon and/or --cdf-at");
    }
    if let Some(eps) = args.epsilon {
        if !(eps > 0.0 && eps <= 1.0) {
            usage("--epsilon must lie in (0, 1]");
        }
    }
    if let Some(alpha) = args.cdf_at {
        if !(0.5..1.0).contains(&alpha) {
            usage("--cdf-at must lie in [1/2, 1)");
        }
    }
    let params = GaussianMixtureParams::canonical(args.delta).unwrap_or_else(|e| usage(e));
    if let Some(eps) = args.epsilon {
        println!(
            "oracle_risk {}",
            output::sig(gaussian_oracle_risk(&params, eps)?, 12)
        );
    }
    if let Some(alpha) = args.cdf_at {
        // with delta = 0 the score is the constant 1/2
        let cdf = if args.delta == 0.0 {
            1.0
        } else {
            gaussian_score_cdf(&params, alpha)?
        };
        println!("score_cdf {}", output::sig(cdf, 12));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Gauss(a) => gauss(a),
        Command::Verify(a) => verify::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
