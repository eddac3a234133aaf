//! The `mindiv` command line.
//!
//! Exit codes: 0 on success, 2 when an estimate did not converge, 1 on any
//! input or usage error. Payloads go to stdout, diagnostics to stderr.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::{estimate, EstimatorKind, EstimatorSpec};
use crate::family::{Family, Parameter};
use crate::influence::{linspace, InfluenceCurve};
use crate::measure::{read_sample_file, Measure};
use crate::simulation::{report, run_study, Contaminant, ContaminationModel, ReportFormat};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "mindiv", version, about = "Minimum-divergence and pseudodistance estimation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model to a sample file and print the estimate as JSON.
    Estimate(EstimateArgs),
    /// Print an influence curve as CSV.
    Influence(InfluenceArgs),
    /// Run a contaminated normal scale study.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// normal, normal-loc, normal-scale or pareto
    #[arg(long)]
    pub family: String,
    /// mle, subdivergence, superdivergence, pseudo or renyi
    #[arg(long)]
    pub estimator: String,
    /// Power index; 0 gives the MLE
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub alpha: f64,
    /// Escort parameter for the subdivergence estimator, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub escort: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Whitespace or newline separated observations; `#` starts a comment line.
    #[arg(long)]
    pub data: PathBuf,
    /// Convergence tolerance on the scaled estimating equation
    #[arg(long)]
    pub tol: Option<f64>,
    /// Iteration budget; exit status 2 if it runs out
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Args)]
pub struct InfluenceArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Parameter of the model at which the curve is taken, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    pub theta: Vec<f64>,
    /// `min:max:count`
    #[arg(long, allow_hyphen_values = true)]
    pub grid: String,
    /// Use the finite-contamination quotient instead of the closed form.
    #[arg(long)]
    pub numeric: bool,
    /// Contamination step for --numeric
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Contamination fraction, in (0, 0.5)
    #[arg(long, allow_negative_numbers = true)]
    pub epsilon: f64,
    /// normal3, normal10, logistic or cauchy
    #[arg(long)]
    pub contaminant: String,
    /// Sample size per replication
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 1000)]
    pub reps: u64,
    /// RNG seed; a random one is drawn and echoed to stderr when omitted
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.25, 0.5, 1.0])]
    pub alphas: Vec<f64>,
    /// Scale of the clean component
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// csv or json
    #[arg(long, default_value = "csv")]
    pub format: String,
}

#[derive(Serialize)]
struct EstimateOutput {
    theta_hat: Parameter,
    criterion_value: f64,
    iterations: usize,
    converged: bool,
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut impl Write, err: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Estimate(a) => cmd_estimate(&a, out),
        Command::Influence(a) => cmd_influence(&a, out),
        Command::Simulate(a) => cmd_simulate(&a, out, err),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INPUT
        }
    }
}

fn spec_from(model: &ModelArgs) -> Result<(Family, EstimatorSpec)> {
    let family: Family = model.family.parse()?;
    let escort = model.escort.as_deref().map(Parameter::from_slice).transpose()?;
    let kind = EstimatorKind::from_name(&model.estimator, model.alpha, escort)?;
    let spec = EstimatorSpec::new(kind);
    spec.validate(family)?;
    Ok((family, spec))
}

pub fn cmd_estimate(args: &EstimateArgs, out: &mut impl Write) -> Result<i32> {
    let (family, mut spec) = spec_from(&args.model)?;
    if let Some(tol) = args.tol {
        spec.tol = tol;
    }
    if let Some(m) = args.max_iter {
        spec.max_iter = m;
    }
    spec.validate(family)?;
    let sample = read_sample_file(&args.data)?;
    let q = Measure::empirical(&sample)?;
    let fit = estimate(family, &spec, &q)?;
    let payload = EstimateOutput {
        theta_hat: fit.theta_hat,
        criterion_value: fit.criterion_value,
        iterations: fit.iterations,
        converged: fit.converged,
    };
    let text = serde_json::to_string(&payload).map_err(|e| Error::invalid(e.to_string()))?;
    writeln!(out, "{text}")?;
    Ok(if fit.converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

/// Parses `min:max:count` into an increasing grid of `count ≥ 1` points.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::invalid(format!("invalid grid {spec:?}, expected min:max:count with min < max"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [lo, hi, n] = parts.as_slice() else {
        return Err(bad());
    };
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    if !lo.is_finite() || !hi.is_finite() || n == 0 || (n > 1 && lo >= hi) || (n == 1 && lo > hi) {
        return Err(bad());
    }
    Ok(linspace(lo, hi, n))
}

pub fn cmd_influence(args: &InfluenceArgs, out: &mut impl Write) -> Result<i32> {
    let (family, spec) = spec_from(&args.model)?;
    let theta = Parameter::from_slice(&args.theta)?;
    family.check(&theta)?;
    let grid = parse_grid(&args.grid)?;
    let curve = if args.numeric {
        InfluenceCurve::numeric(family, spec, theta, grid, args.eps)?
    } else {
        InfluenceCurve::closed_form(family, spec, theta, grid)?
    };
    out.write_all(curve.to_csv().as_bytes())?;
    Ok(EXIT_OK)
}

pub fn cmd_simulate(args: &SimulateArgs, out: &mut impl Write, err: &mut impl Write) -> Result<i32> {
    let contaminant: Contaminant = args.contaminant.parse()?;
    let model = ContaminationModel::new(args.sigma, args.epsilon, contaminant)?;
    let format: ReportFormat = args.format.parse()?;
    let mut specs = vec![EstimatorSpec::mle()];
    for &a in &args.alphas {
        specs.push(EstimatorSpec::power_pseudo(a)?);
    }
    for &a in &args.alphas {
        specs.push(EstimatorSpec::renyi(a)?);
    }
    let seed = match args.seed {
        Some(s) => s,
        None => {
            let s = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_nanos() as u64).unwrap_or(0);
            writeln!(err, "seed: {s}")?;
            s
        }
    };
    let result = run_study(&model, args.n, args.reps, &specs, seed)?;
    out.write_all(report(&result, format)?.as_bytes())?;
    Ok(EXIT_OK)
}
