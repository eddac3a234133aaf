//! Contaminated normal scale studies.
//!
//! Each replication draws `n` observations from `(1-eps) N(0, sigma²) + eps Q_sigma`
//! and fits every estimator on the `NormalScale` family. Replication `r`
//! uses its own ChaCha stream `r` under the study seed, so results do not
//! depend on thread scheduling or on how replications are chunked.

use std::fmt::{self, Write as _};
use std::ops::Range;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Cauchy, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{estimate, EstimatorSpec};
use crate::family::Family;
use crate::measure::{Measure, Neumaier};

/// The contaminating distribution `Q`, scaled by the base `sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Contaminant {
    /// `N(0, (3 sigma)²)`
    Normal3,
    /// `N(0, (10 sigma)²)`
    Normal10,
    Logistic,
    Cauchy,
}

impl Contaminant {
    pub const NAMES: [&'static str; 4] = ["normal3", "normal10", "logistic", "cauchy"];

    pub fn name(&self) -> &'static str {
        match self {
            Contaminant::Normal3 => "normal3",
            Contaminant::Normal10 => "normal10",
            Contaminant::Logistic => "logistic",
            Contaminant::Cauchy => "cauchy",
        }
    }

    fn draw<R: Rng + ?Sized>(&self, sigma: f64, rng: &mut R) -> f64 {
        match self {
            Contaminant::Normal3 => 3.0 * sigma * rng.sample::<f64, _>(StandardNormal),
            Contaminant::Normal10 => 10.0 * sigma * rng.sample::<f64, _>(StandardNormal),
            Contaminant::Logistic => {
                // inverse CDF on the open interval
                let u: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
                sigma * (u / (1.0 - u)).ln()
            }
            Contaminant::Cauchy => Cauchy::new(0.0, sigma).expect("positive scale").sample(rng),
        }
    }
}

impl FromStr for Contaminant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal3" => Ok(Contaminant::Normal3),
            "normal10" => Ok(Contaminant::Normal10),
            "logistic" => Ok(Contaminant::Logistic),
            "cauchy" => Ok(Contaminant::Cauchy),
            _ => Err(Error::invalid(format!(
                "unknown contaminant '{s}', expected one of {}",
                Contaminant::NAMES.join(", ")
            ))),
        }
    }
}

impl fmt::Display for Contaminant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `(1-epsilon) N(0, base_sigma²) + epsilon Q_{base_sigma}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContaminationModel {
    pub base_sigma: f64,
    pub epsilon: f64,
    pub contaminant: Contaminant,
}

impl ContaminationModel {
    pub fn new(base_sigma: f64, epsilon: f64, contaminant: Contaminant) -> Result<Self> {
        if !(base_sigma > 0.0 && base_sigma.is_finite()) {
            return Err(Error::domain("base sigma must be positive", base_sigma));
        }
        if !(epsilon > 0.0 && epsilon < 0.5) {
            return Err(Error::invalid(format!(
                "contamination level epsilon must lie in (0, 0.5), got {epsilon}"
            )));
        }
        Ok(ContaminationModel {
            base_sigma,
            epsilon,
            contaminant,
        })
    }
}

/// Draws `n` observations from the contaminated model.
pub fn sample_contaminated<R: Rng + ?Sized>(model: &ContaminationModel, n: usize, rng: &mut R) -> Vec<f64> {
    (0..n)
        .map(|_| {
            if rng.random::<f64>() < model.epsilon {
                model.contaminant.draw(model.base_sigma, rng)
            } else {
                model.base_sigma * rng.sample::<f64, _>(StandardNormal)
            }
        })
        .collect()
}

/// The generator of replication `rep` under `seed`.
pub fn replication_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

/// Per-estimator estimates of one replication; `None` marks a failed fit.
pub type Replication = Vec<Option<f64>>;

/// Runs replications `reps` (global indices) in parallel, in index order.
pub fn run_replications(
    model: &ContaminationModel,
    n: usize,
    reps: Range<u64>,
    specs: &[EstimatorSpec],
    seed: u64,
) -> Result<Vec<Replication>> {
    if n == 0 {
        return Err(Error::invalid("sample size must be at least 1"));
    }
    for spec in specs {
        spec.validate(Family::NormalScale)?;
    }
    Ok(reps
        .into_par_iter()
        .map(|rep| {
            let mut rng = replication_rng(seed, rep);
            let sample = sample_contaminated(model, n, &mut rng);
            let q = Measure::empirical(&sample).ok();
            specs
                .iter()
                .map(|spec| {
                    let fit = estimate(Family::NormalScale, spec, q.as_ref()?).ok()?;
                    (fit.converged && fit.theta_hat[0].is_finite()).then_some(fit.theta_hat[0])
                })
                .collect()
        })
        .collect())
}

/// One estimator's summary over a study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub spec: EstimatorSpec,
    /// Mean of `(sigma_hat - sigma)²` over converged fits; `None` when every fit failed.
    pub mse: Option<f64>,
    pub mean: Option<f64>,
    pub failures: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub model: ContaminationModel,
    pub n: usize,
    pub replications: u64,
    pub seed: u64,
    pub rows: Vec<StudyRow>,
}

/// Summarizes replications given in index order.
pub fn pool(
    model: &ContaminationModel,
    n: usize,
    specs: &[EstimatorSpec],
    seed: u64,
    replications: &[Replication],
) -> StudyResult {
    let rows = specs
        .iter()
        .enumerate()
        .map(|(j, spec)| {
            let (mut sq, mut sum) = (Neumaier::default(), Neumaier::default());
            let mut ok = 0u64;
            for rep in replications {
                if let Some(s) = rep[j] {
                    sq.add((s - model.base_sigma).powi(2));
                    sum.add(s);
                    ok += 1;
                }
            }
            let k = ok as f64;
            StudyRow {
                spec: *spec,
                mse: (ok > 0).then(|| sq.total() / k),
                mean: (ok > 0).then(|| sum.total() / k),
                failures: replications.len() as u64 - ok,
            }
        })
        .collect();
    StudyResult {
        model: *model,
        n,
        replications: replications.len() as u64,
        seed,
        rows,
    }
}

/// Runs `reps` replications and pools them.
pub fn run_study(
    model: &ContaminationModel,
    n: usize,
    reps: u64,
    specs: &[EstimatorSpec],
    seed: u64,
) -> Result<StudyResult> {
    if reps == 0 {
        return Err(Error::invalid("at least one replication is needed"));
    }
    let outcomes = run_replications(model, n, 0..reps, specs, seed)?;
    Ok(pool(model, n, specs, seed, &outcomes))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(Error::invalid(format!("unknown format '{s}', expected csv or json"))),
        }
    }
}

pub const CSV_HEADER: &str = "estimator,alpha,mse,mean,failures";

/// Renders a study. CSV numbers carry 17 significant digits; missing
/// statistics are left empty.
pub fn report(result: &StudyResult, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => Ok(serde_json::to_string_pretty(result).map_err(|e| Error::invalid(e.to_string()))?),
        ReportFormat::Csv => {
            let mut out = String::from(CSV_HEADER);
            out.push('\n');
            let num = |v: Option<f64>| v.map(|v| format!("{v:.16e}")).unwrap_or_default();
            for row in &result.rows {
                let _ = writeln!(
                    out,
                    "{},{:.16e},{},{},{}",
                    row.spec.kind.name(),
                    row.spec.kind.alpha(),
                    num(row.mse),
                    num(row.mean),
                    row.failures
                );
            }
            Ok(out)
        }
    }
}
