//! Minimum-divergence estimators.
//!
//! Every estimator is computed as the minimizer of a criterion over a
//! parameter box, polished by Newton iterations on its estimating equation.
//! Estimating functions used for the polish are multiplied by
//! [`Family::score_unit`] so that their norms are dimensionless and a single
//! tolerance applies across scales.
//!
//! Reported `criterion_value`s are those of the minimized objective:
//!
//! * MLE: `-Q·ln p_theta`
//! * subdivergence: `M(Q, theta~)`
//! * superdivergence: `-M(Q, theta~*(theta))`
//! * power pseudodistance: `P·p^alpha/(1+alpha) - Q·p^alpha/alpha`
//! * Rényi: `ln C_theta(alpha) - ln Q·p^alpha`

use std::cell::RefCell;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::divergence::{PowerIndex, BRANCH_TOL};
use crate::error::{Error, Result};
use crate::family::{Family, Parameter};
use crate::linalg::Vector;
use crate::measure::Measure;
use crate::solver::{self, Bounds, SolverOptions};

/// Estimator family and its tuning constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EstimatorKind {
    Mle,
    Subdivergence { alpha: PowerIndex, escort: Parameter },
    Superdivergence { alpha: PowerIndex },
    #[serde(rename = "pseudo")]
    PowerPseudo { alpha: PowerIndex },
    Renyi { alpha: PowerIndex },
}

impl EstimatorKind {
    pub const NAMES: [&'static str; 5] = ["mle", "subdivergence", "superdivergence", "pseudo", "renyi"];

    /// Builds a kind from its name as used on the command line.
    pub fn from_name(name: &str, alpha: f64, escort: Option<Parameter>) -> Result<Self> {
        let a = PowerIndex::new(alpha)?;
        Ok(match name {
            "mle" => EstimatorKind::Mle,
            "subdivergence" | "sub" => EstimatorKind::Subdivergence {
                alpha: a,
                escort: escort.ok_or_else(|| Error::invalid("the subdivergence estimator needs --escort"))?,
            },
            "superdivergence" | "super" => EstimatorKind::Superdivergence { alpha: a },
            "pseudo" | "power-pseudo" => EstimatorKind::PowerPseudo { alpha: a },
            "renyi" => EstimatorKind::Renyi { alpha: a },
            other => {
                return Err(Error::invalid(format!(
                    "unknown estimator {other:?} (expected one of {})",
                    Self::NAMES.join(", ")
                )))
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::Mle => "mle",
            EstimatorKind::Subdivergence { .. } => "subdivergence",
            EstimatorKind::Superdivergence { .. } => "superdivergence",
            EstimatorKind::PowerPseudo { .. } => "pseudo",
            EstimatorKind::Renyi { .. } => "renyi",
        }
    }

    /// The power index, `0` for the MLE.
    pub fn alpha(&self) -> f64 {
        match self {
            EstimatorKind::Mle => 0.0,
            EstimatorKind::Subdivergence { alpha, .. }
            | EstimatorKind::Superdivergence { alpha }
            | EstimatorKind::PowerPseudo { alpha }
            | EstimatorKind::Renyi { alpha } => alpha.value(),
        }
    }

    /// Whether this kind reduces to the MLE.
    pub fn is_mle(&self) -> bool {
        self.alpha() < BRANCH_TOL
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimatorKind::Mle => f.write_str("mle"),
            EstimatorKind::Subdivergence { alpha, escort } => {
                write!(f, "subdivergence(alpha={}, escort={escort})", alpha.value())
            }
            other => write!(f, "{}(alpha={})", other.name(), other.alpha()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSpec {
    #[serde(flatten)]
    pub kind: EstimatorKind,
    /// Search box; derived from the data when absent.
    #[serde(default)]
    pub bounds: Option<Bounds>,
    pub tol: f64,
    pub param_tol: f64,
    pub max_iter: usize,
    /// Iteration cap of the inner superdivergence problem.
    pub inner_max_iter: usize,
}

impl EstimatorSpec {
    pub fn new(kind: EstimatorKind) -> Self {
        EstimatorSpec {
            kind,
            bounds: None,
            tol: 1e-8,
            param_tol: 1e-6,
            max_iter: 500,
            inner_max_iter: 200,
        }
    }

    pub fn mle() -> Self {
        Self::new(EstimatorKind::Mle)
    }

    pub fn subdivergence(alpha: f64, escort: Parameter) -> Result<Self> {
        let kind = EstimatorKind::Subdivergence {
            alpha: PowerIndex::new(alpha)?,
            escort,
        };
        check_unit_range(&kind, alpha)?;
        Ok(Self::new(kind))
    }

    pub fn superdivergence(alpha: f64) -> Result<Self> {
        let kind = EstimatorKind::Superdivergence {
            alpha: PowerIndex::new(alpha)?,
        };
        check_unit_range(&kind, alpha)?;
        Ok(Self::new(kind))
    }

    pub fn power_pseudo(alpha: f64) -> Result<Self> {
        Ok(Self::new(EstimatorKind::PowerPseudo {
            alpha: PowerIndex::new(alpha)?,
        }))
    }

    pub fn renyi(alpha: f64) -> Result<Self> {
        Ok(Self::new(EstimatorKind::Renyi {
            alpha: PowerIndex::new(alpha)?,
        }))
    }

    pub fn with_bounds(mut self, bounds: Bounds) -> Self {
        self.bounds = Some(bounds);
        self
    }

    fn options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            param_tol: self.param_tol,
            max_iter: self.max_iter,
        }
    }

    fn inner_options(&self) -> SolverOptions {
        SolverOptions {
            max_iter: self.inner_max_iter,
            ..self.options()
        }
    }

    /// Checks the power index range of the kind, the escort, the bounds and
    /// the solver settings.
    pub fn validate(&self, family: Family) -> Result<()> {
        let alpha = self.kind.alpha();
        PowerIndex::new(alpha)?;
        match self.kind {
            EstimatorKind::Subdivergence { escort, .. } => {
                check_unit_range(&self.kind, alpha)?;
                family.check(&escort).map_err(|e| e.context("escort parameter"))?;
            }
            EstimatorKind::Superdivergence { .. } => check_unit_range(&self.kind, alpha)?,
            _ => {}
        }
        if let Some(b) = &self.bounds {
            b.validate()?;
            if b.dim() != family.param_dim() {
                return Err(Error::invalid(format!(
                    "bounds have dimension {} but family {family} has {} parameter(s)",
                    b.dim(),
                    family.param_dim()
                )));
            }
            for &i in family.positive_coordinates() {
                if b.lower[i] <= 0.0 {
                    return Err(Error::invalid(format!(
                        "lower bound of coordinate {i} must be positive, got {}",
                        b.lower[i]
                    )));
                }
            }
        }
        if !(self.tol > 0.0 && self.param_tol > 0.0) {
            return Err(Error::invalid("tolerances must be positive"));
        }
        if self.max_iter == 0 || self.inner_max_iter == 0 {
            return Err(Error::invalid("iteration limits must be at least 1"));
        }
        Ok(())
    }
}

fn check_unit_range(kind: &EstimatorKind, alpha: f64) -> Result<()> {
    if alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "the {} estimator supports alpha in [0, 1), got {alpha}",
            kind.name()
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub theta_hat: Parameter,
    pub criterion_value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Norm of the dimensionless estimating function at `theta_hat`.
    pub psi_norm: f64,
    /// The inner minimizer `theta~*(theta_hat)` of a superdivergence fit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_solution: Option<Parameter>,
}

/// Search box derived from the data.
///
/// Locations range over `[min - 10 IQR, max + 10 IQR]` (SD, then 1, stand in
/// for a zero IQR). Normal scales range over `[1e-3 s, 10 s]` where `s` is
/// the SD, or the root mean square for the scale model whose location is
/// known to be 0. Pareto shapes range over `[t/100, 100 t]` around the MLE.
pub fn default_bounds(family: Family, q: &Measure) -> Result<Bounds> {
    let scale_box = |s: f64| -> Result<(f64, f64)> {
        if s > 0.0 && s.is_finite() {
            Ok((1e-3 * s, 10.0 * s))
        } else {
            Err(Error::Degenerate(format!("sample spread {s} leaves no room for a scale parameter")))
        }
    };
    let location_box = || {
        let iqr = q.interquartile_range();
        let sd = q.std_dev();
        let spread = if iqr > 0.0 {
            iqr
        } else if sd > 0.0 {
            sd
        } else {
            1.0
        };
        (q.min() - 10.0 * spread, q.max() + 10.0 * spread)
    };
    match family {
        Family::NormalLocScale => {
            let (a, b) = location_box();
            let (lo, hi) = scale_box(q.std_dev())?;
            Bounds::new(Vector::pair(a, lo), Vector::pair(b, hi))?.with_log_scale(1)
        }
        Family::NormalLocation => {
            let (a, b) = location_box();
            Bounds::interval(a, b)
        }
        Family::NormalScale => {
            let (lo, hi) = scale_box(q.root_mean_square())?;
            Bounds::interval(lo, hi)?.with_log_scale(0)
        }
        Family::Pareto => {
            let t = pareto_mle(q)?;
            Bounds::interval(t / 100.0, 100.0 * t)?.with_log_scale(0)
        }
    }
}

fn pareto_mle(q: &Measure) -> Result<f64> {
    let mut mean_log = 0.0;
    for (x, w) in q.iter() {
        if x < 1.0 {
            return Err(Error::domain("pareto observations must be >= 1", x));
        }
        mean_log += w * x.ln();
    }
    if mean_log <= 0.0 {
        return Err(Error::Degenerate("all pareto observations equal 1".into()));
    }
    Ok(1.0 / mean_log)
}

fn log_ratio(family: Family, theta: &Parameter, theta_tilde: &Parameter, x: f64) -> Result<f64> {
    Ok(family.log_density(theta, x)? - family.log_density(theta_tilde, x)?)
}

fn is_one(alpha: f64) -> bool {
    (alpha - 1.0).abs() < BRANCH_TOL
}

fn require_positive(alpha: f64, what: &'static str) -> Result<()> {
    if alpha < BRANCH_TOL {
        Err(Error::domain(what, alpha))
    } else {
        Ok(())
    }
}

/// The subdivergence criterion `M_{alpha,theta}(Q, theta~)` with escort
/// `theta`:
/// `P_{theta~}·r^alpha/(1-alpha) + Q·r^alpha/alpha` with `r = p_theta/p_{theta~}`,
/// and `P_theta·ln(p_{theta~}/p_theta) + Q·r` at `alpha = 1`.
pub fn sub_criterion(
    family: Family,
    theta: &Parameter,
    theta_tilde: &Parameter,
    q: &Measure,
    alpha: PowerIndex,
) -> Result<f64> {
    let a = alpha.value();
    require_positive(a, "subdivergence criterion needs alpha > 0")?;
    family.check(theta)?;
    family.check(theta_tilde)?;
    if is_one(a) {
        let model = family.quadrature(theta)?.try_integrate(|x| log_ratio(family, theta_tilde, theta, x))?;
        let data = q.try_integrate(|x| Ok(log_ratio(family, theta, theta_tilde, x)?.exp()))?;
        return Ok(model + data);
    }
    let r = family.power_ratio_integral(theta, theta_tilde, a)?;
    // r^alpha can overflow far from the data; the criterion is then +inf
    let data = match q.try_integrate(|x| Ok((a * log_ratio(family, theta, theta_tilde, x)?).exp())) {
        Err(Error::Integration { value, .. }) if value == f64::INFINITY => return Ok(f64::INFINITY),
        other => other?,
    };
    Ok(r / (1.0 - a) + data / a)
}

/// `Psi = d/dtheta~ M = P_{theta~}·r^alpha s_{theta~} - Q·r^alpha s_{theta~}`.
pub fn sub_psi(
    family: Family,
    theta: &Parameter,
    theta_tilde: &Parameter,
    q: &Measure,
    alpha: PowerIndex,
) -> Result<Vector> {
    let a = alpha.value();
    require_positive(a, "subdivergence estimating function needs alpha > 0")?;
    family.check(theta)?;
    family.check(theta_tilde)?;
    let dim = family.param_dim();
    let data = q.integrate_vec(dim, |x| {
        let w = (a * log_ratio(family, theta, theta_tilde, x)?).exp();
        Ok(family.score(theta_tilde, x)? * w)
    })?;
    let model = if is_one(a) {
        family
            .quadrature(theta)?
            .integrate_vec(dim, |x| family.score(theta_tilde, x))?
    } else {
        let (r, _, grad_tilde) = family.power_ratio_gradients(theta, theta_tilde, a)?;
        grad_tilde * (r / (1.0 - a))
    };
    Ok(model - data)
}

/// The subdivergence `D_{alpha,theta~}(P_theta, Q)`, a lower bound of the
/// power divergence `D_alpha(P_theta, Q)` that is tight at `theta~ = theta0`
/// when `Q = P_theta0`.
pub fn subdivergence(
    family: Family,
    theta: &Parameter,
    theta_tilde: &Parameter,
    q: &Measure,
    alpha: PowerIndex,
) -> Result<f64> {
    let a = alpha.value();
    let constant = if is_one(a) { 1.0 } else { 1.0 / (1.0 - a) + 1.0 / a };
    Ok(constant - sub_criterion(family, theta, theta_tilde, q, alpha)?)
}

/// The superdivergence estimating function at `theta` given the inner
/// solution `theta~`:
/// `alpha/(1-alpha) P_{theta~}·r^alpha s_theta + Q·r^alpha s_theta`.
pub fn super_psi(
    family: Family,
    theta: &Parameter,
    theta_tilde: &Parameter,
    q: &Measure,
    alpha: PowerIndex,
) -> Result<Vector> {
    let a = alpha.value();
    require_positive(a, "superdivergence estimating function needs alpha > 0")?;
    let (r, grad, _) = family.power_ratio_gradients(theta, theta_tilde, a)?;
    let data = q.integrate_vec(family.param_dim(), |x| {
        let w = (a * log_ratio(family, theta, theta_tilde, x)?).exp();
        Ok(family.score(theta, x)? * w)
    })?;
    Ok(grad * (r / (1.0 - a)) + data)
}

/// Power pseudodistance criterion `P_theta·p_theta^alpha/(1+alpha) - Q·p_theta^alpha/alpha`.
pub fn pseudo_criterion(family: Family, theta: &Parameter, q: &Measure, alpha: PowerIndex) -> Result<f64> {
    let a = alpha.value();
    require_positive(a, "power pseudodistance criterion needs alpha > 0")?;
    family.check(theta)?;
    let mass = family.power_mass_integral(theta, a)?;
    let data = q.try_integrate(|x| Ok((a * family.log_density(theta, x)?).exp()))?;
    Ok(mass / (1.0 + a) - data / a)
}

/// Gradient of [`pseudo_criterion`]: `P_theta·p^alpha s - Q·p^alpha s`.
pub fn pseudo_psi(family: Family, theta: &Parameter, q: &Measure, alpha: PowerIndex) -> Result<Vector> {
    let a = alpha.value();
    family.check(theta)?;
    let data = q.integrate_vec(family.param_dim(), |x| {
        Ok(family.score(theta, x)? * (a * family.log_density(theta, x)?).exp())
    })?;
    Ok(family.power_score_integral(theta, a)? - data)
}

/// Rényi criterion `ln C_theta(alpha) - ln Q·p_theta^alpha`, minimized by
/// the Rényi pseudodistance estimator.
pub fn renyi_criterion(family: Family, theta: &Parameter, q: &Measure, alpha: PowerIndex) -> Result<f64> {
    let a = alpha.value();
    require_positive(a, "renyi criterion needs alpha > 0")?;
    family.check(theta)?;
    let log_c = family.power_mass_integral(theta, a)?.ln() * a / (1.0 + a);
    let log_data = q.log_integral_exp(|x| Ok(a * family.log_density(theta, x)?))?;
    Ok(log_c - log_data)
}

/// `c_theta(alpha) - Q·p^alpha s / Q·p^alpha`, the gradient of
/// [`renyi_criterion`] divided by `alpha`.
pub fn renyi_psi(family: Family, theta: &Parameter, q: &Measure, alpha: PowerIndex) -> Result<Vector> {
    let a = alpha.value();
    family.check(theta)?;
    let mut logs = Vec::with_capacity(q.len());
    for x in q.nodes() {
        logs.push(a * family.log_density(theta, *x)?);
    }
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    let mut weighted = Vector::zeros(family.param_dim());
    for ((x, w), l) in q.iter().zip(&logs) {
        let e = w * (l - top).exp();
        total += e;
        weighted = weighted + family.score(theta, x)? * e;
    }
    Ok(family.weighted_score_mean(theta, a)? - weighted * (1.0 / total))
}

/// Maximum likelihood estimate in closed form.
///
/// Normal location-scale: mean and SD with divisor `n`; location: mean;
/// scale (location known to be 0): root mean square; Pareto:
/// `1 / Q·ln x`.
pub fn mle(family: Family, q: &Measure) -> Result<EstimateResult> {
    if q.is_empty() {
        return Err(Error::invalid("cannot estimate from an empty measure"));
    }
    let positive = |s: f64| {
        if s > 0.0 {
            Ok(s)
        } else {
            Err(Error::Degenerate("sample has zero spread".into()))
        }
    };
    let theta = match family {
        Family::NormalLocScale => Parameter::pair(q.mean(), positive(q.std_dev())?),
        Family::NormalLocation => Parameter::scalar(q.mean()),
        Family::NormalScale => Parameter::scalar(positive(q.root_mean_square())?),
        Family::Pareto => Parameter::scalar(pareto_mle(q)?),
    };
    let criterion = -q.try_integrate(|x| family.log_density(&theta, x))?;
    let score = q.integrate_vec(family.param_dim(), |x| family.score(&theta, x))?;
    Ok(EstimateResult {
        theta_hat: theta,
        criterion_value: criterion,
        iterations: 0,
        converged: true,
        psi_norm: score.norm() * family.score_unit(&theta),
        inner_solution: None,
    })
}

fn bounds_for(family: Family, spec: &EstimatorSpec, q: &Measure) -> Result<Bounds> {
    match spec.bounds {
        Some(b) => Ok(b),
        None => default_bounds(family, q),
    }
}

fn result_from(opt: solver::Optimum, inner: Option<Parameter>) -> EstimateResult {
    EstimateResult {
        theta_hat: Parameter::from_vector(opt.x),
        criterion_value: opt.value,
        iterations: opt.iterations,
        converged: opt.converged,
        psi_norm: opt.psi_norm.unwrap_or(f64::NAN),
        inner_solution: inner,
    }
}

fn wrong_kind(expected: &str, spec: &EstimatorSpec) -> Error {
    Error::invalid(format!("expected a {expected} spec, got {}", spec.kind))
}

/// Subdivergence estimate: the minimizer in `theta~` of
/// [`sub_criterion`] for the spec's escort. Reduces to the MLE at `alpha = 0`.
pub fn estimate_subdivergence(family: Family, spec: &EstimatorSpec, q: &Measure) -> Result<EstimateResult> {
    let EstimatorKind::Subdivergence { alpha, escort } = spec.kind else {
        return Err(wrong_kind("subdivergence", spec));
    };
    spec.validate(family)?;
    if spec.kind.is_mle() {
        return mle(family, q);
    }
    let bounds = bounds_for(family, spec, q)?;
    let opt = solve_sub(family, &escort, q, alpha, &bounds, None, &spec.options())?;
    Ok(result_from(opt, None))
}

fn solve_sub(
    family: Family,
    escort: &Parameter,
    q: &Measure,
    alpha: PowerIndex,
    bounds: &Bounds,
    start: Option<&Vector>,
    opts: &SolverOptions,
) -> Result<solver::Optimum> {
    let mut objective = |v: &Vector| sub_criterion(family, escort, &Parameter::from_vector(*v), q, alpha);
    let mut psi = |v: &Vector| {
        let tt = Parameter::from_vector(*v);
        Ok(sub_psi(family, escort, &tt, q, alpha)? * family.score_unit(&tt))
    };
    match start {
        Some(s) => solver::minimize_from(&mut objective, Some(&mut psi), bounds, s, opts),
        None => solver::minimize(&mut objective, Some(&mut psi), bounds, opts),
    }
}

/// Superdivergence estimate: the maximizer in `theta` of
/// `inf_{theta~} M_{alpha,theta}(Q, theta~)`.
///
/// The outer search starts at the MLE. Each inner problem is warm-started
/// at the previous inner solution with Newton steps and falls back to a
/// local and then a global bounded search when those fail.
pub fn estimate_superdivergence(family: Family, spec: &EstimatorSpec, q: &Measure) -> Result<EstimateResult> {
    let EstimatorKind::Superdivergence { alpha } = spec.kind else {
        return Err(wrong_kind("superdivergence", spec));
    };
    spec.validate(family)?;
    let start = mle(family, q)?;
    if spec.kind.is_mle() {
        return Ok(start);
    }
    let bounds = bounds_for(family, spec, q)?;
    let inner_opts = spec.inner_options();
    let start_vec = bounds.clamp(&start.theta_hat.as_vector());
    let warm = RefCell::new(start_vec);

    let inner = |theta: &Parameter| -> Result<(Parameter, f64, bool)> {
        let w = *warm.borrow();
        let mut objective = |v: &Vector| sub_criterion(family, theta, &Parameter::from_vector(*v), q, alpha);
        let mut psi = |v: &Vector| {
            let tt = Parameter::from_vector(*v);
            Ok(sub_psi(family, theta, &tt, q, alpha)? * family.score_unit(&tt))
        };
        let f0 = objective(&w)?;
        let polished = solver::newton_polish(&mut objective, &mut psi, &bounds, w, f0, &inner_opts)?;
        let (x, value, converged) = if polished.converged {
            (polished.x, polished.value, true)
        } else {
            let local = solve_sub(family, theta, q, alpha, &bounds, Some(&w), &inner_opts)?;
            if local.converged {
                (local.x, local.value, true)
            } else {
                let global = solve_sub(family, theta, q, alpha, &bounds, None, &inner_opts)?;
                (global.x, global.value, global.converged)
            }
        };
        *warm.borrow_mut() = x;
        Ok((Parameter::from_vector(x), value, converged))
    };

    let opts = spec.options();
    let opt = {
        let mut objective = |v: &Vector| Ok(-inner(&Parameter::from_vector(*v))?.1);
        let mut psi = |v: &Vector| {
            let theta = Parameter::from_vector(*v);
            let (tt, _, _) = inner(&theta)?;
            Ok(-super_psi(family, &theta, &tt, q, alpha)? * family.score_unit(&theta))
        };
        solver::minimize_from(&mut objective, Some(&mut psi), &bounds, &start_vec, &opts)?
    };
    let theta_hat = Parameter::from_vector(opt.x);
    let (tt, _, inner_ok) = inner(&theta_hat)?;
    let mut result = result_from(opt, Some(tt));
    result.converged = result.converged && inner_ok;
    Ok(result)
}

/// Power pseudodistance estimate, the minimizer of [`pseudo_criterion`].
pub fn estimate_power_pseudo(family: Family, spec: &EstimatorSpec, q: &Measure) -> Result<EstimateResult> {
    let EstimatorKind::PowerPseudo { alpha } = spec.kind else {
        return Err(wrong_kind("power pseudodistance", spec));
    };
    spec.validate(family)?;
    if spec.kind.is_mle() {
        return mle(family, q);
    }
    let bounds = bounds_for(family, spec, q)?;
    let mut objective = |v: &Vector| pseudo_criterion(family, &Parameter::from_vector(*v), q, alpha);
    let mut psi = |v: &Vector| {
        let theta = Parameter::from_vector(*v);
        let mass = family.power_mass_integral(&theta, alpha.value())?;
        Ok(pseudo_psi(family, &theta, q, alpha)? * (family.score_unit(&theta) / mass))
    };
    let opt = solver::minimize(&mut objective, Some(&mut psi), &bounds, &spec.options())?;
    Ok(result_from(opt, None))
}

/// Rényi pseudodistance estimate, the maximizer of `Q·p_theta^alpha / C_theta(alpha)`.
pub fn estimate_renyi(family: Family, spec: &EstimatorSpec, q: &Measure) -> Result<EstimateResult> {
    let EstimatorKind::Renyi { alpha } = spec.kind else {
        return Err(wrong_kind("renyi", spec));
    };
    spec.validate(family)?;
    if spec.kind.is_mle() {
        return mle(family, q);
    }
    let bounds = bounds_for(family, spec, q)?;
    let mut objective = |v: &Vector| renyi_criterion(family, &Parameter::from_vector(*v), q, alpha);
    let mut psi = |v: &Vector| {
        let theta = Parameter::from_vector(*v);
        Ok(renyi_psi(family, &theta, q, alpha)? * family.score_unit(&theta))
    };
    let opt = solver::minimize(&mut objective, Some(&mut psi), &bounds, &spec.options())?;
    Ok(result_from(opt, None))
}

/// Runs the estimator described by `spec`.
pub fn estimate(family: Family, spec: &EstimatorSpec, q: &Measure) -> Result<EstimateResult> {
    spec.validate(family)?;
    match spec.kind {
        EstimatorKind::Mle => mle(family, q),
        EstimatorKind::Subdivergence { .. } => estimate_subdivergence(family, spec, q),
        EstimatorKind::Superdivergence { .. } => estimate_superdivergence(family, spec, q),
        EstimatorKind::PowerPseudo { .. } => estimate_power_pseudo(family, spec, q),
        EstimatorKind::Renyi { .. } => estimate_renyi(family, spec, q),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pi(a: f64) -> PowerIndex {
        PowerIndex::new(a).unwrap()
    }

    #[test]
    fn mle_closed_forms() {
        let q = Measure::empirical(&[-1.0, 1.0]).unwrap();
        let r = mle(Family::NormalLocScale, &q).unwrap();
        assert_eq!(r.theta_hat.as_slice(), &[0.0, 1.0]);
        let e = 1f64.exp();
        let r = mle(Family::Pareto, &Measure::empirical(&[e, e]).unwrap()).unwrap();
        assert!((r.theta_hat[0] - 1.0).abs() < 1e-15);
        let err = mle(Family::Pareto, &Measure::empirical(&[1.0, 1.0]).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
        assert!(mle(Family::NormalScale, &Measure::empirical(&[0.0]).unwrap()).is_err());
    }

    #[test]
    fn mle_on_quadrature_is_fisher_consistent() {
        for (fam, th) in [
            (Family::NormalLocScale, Parameter::pair(0.7, 1.8)),
            (Family::NormalLocation, Parameter::scalar(-1.2)),
            (Family::NormalScale, Parameter::scalar(2.5)),
            (Family::Pareto, Parameter::scalar(1.7)),
        ] {
            let q = fam.quadrature(&th).unwrap();
            let r = mle(fam, &q).unwrap();
            for i in 0..th.dim() {
                assert!((r.theta_hat[i] - th[i]).abs() < 1e-8, "{fam}: {:?}", r.theta_hat);
            }
        }
    }

    #[test]
    fn sub_criterion_on_the_diagonal() {
        let th = Parameter::pair(0.2, 1.4);
        let q = Family::NormalLocScale.quadrature(&th).unwrap();
        for a in [0.25, 0.5, 0.75] {
            let m = sub_criterion(Family::NormalLocScale, &th, &th, &q, pi(a)).unwrap();
            assert!((m - (1.0 / (1.0 - a) + 1.0 / a)).abs() < 1e-10);
        }
    }

    #[test]
    fn sub_criterion_location_matches_eta_form() {
        let a = 0.4;
        let mu = 0.8;
        let q = Measure::empirical(&[-0.3, 0.5, 1.7, 2.2]).unwrap();
        for mt in [-1.0, 0.0, 0.6, 1.5] {
            let eta = |x: f64| (a * (mt - mu) * (mt + mu - 2.0 * x) / 2.0).exp();
            let expected = eta(mu).powf(a - 1.0) / (1.0 - a) + q.integrate(eta).unwrap() / a;
            let got = sub_criterion(Family::NormalLocation, &Parameter::scalar(mu), &Parameter::scalar(mt), &q, pi(a)).unwrap();
            assert!((got - expected).abs() < 1e-10 * expected.abs(), "{got} vs {expected}");
            // location estimating function in its eta form
            let psi = sub_psi(Family::NormalLocation, &Parameter::scalar(mu), &Parameter::scalar(mt), &q, pi(a)).unwrap();
            let eta_psi = q.integrate(|x| (mt - x) * eta(x)).unwrap() - a * (mt - mu) * eta(mu).powf(a - 1.0);
            assert!((psi[0] - eta_psi).abs() < 1e-10, "{} vs {eta_psi}", psi[0]);
        }
    }

    #[test]
    fn sub_criterion_scale_matches_ratio_form() {
        let (a, sigma) = (0.3, 1.5);
        let q = Measure::empirical(&[-2.0, 0.4, 1.1, 3.0]).unwrap();
        for st in [0.7, 1.5, 2.6] {
            let s: f64 = st / sigma;
            let expected = s.powf(a) / ((1.0 - a) * (a * s * s + 1.0 - a).sqrt())
                + q.integrate(|x| s.powf(a) / a * (a * x * x * (s.powi(-2) - 1.0) / (2.0 * sigma * sigma)).exp()).unwrap();
            let got = sub_criterion(Family::NormalScale, &Parameter::scalar(sigma), &Parameter::scalar(st), &q, pi(a)).unwrap();
            assert!((got - expected).abs() < 1e-10 * expected, "{got} vs {expected}");
        }
    }

    #[test]
    fn sub_psi_is_the_criterion_gradient() {
        let q = Measure::empirical(&[-0.4, 0.3, 1.9, 2.4, 0.8]).unwrap();
        let cases = [
            (Family::NormalLocScale, Parameter::pair(0.5, 1.2), Parameter::pair(0.9, 0.9)),
            (Family::NormalScale, Parameter::scalar(1.3), Parameter::scalar(0.8)),
        ];
        for (fam, th, tt) in cases {
            for a in [0.3, 0.6, 1.0] {
                let psi = sub_psi(fam, &th, &tt, &q, pi(a)).unwrap();
                for i in 0..tt.dim() {
                    let h = 1e-5;
                    let mut v = tt.as_vector();
                    v[i] += h;
                    let up = sub_criterion(fam, &th, &Parameter::from_vector(v), &q, pi(a)).unwrap();
                    v[i] -= 2.0 * h;
                    let down = sub_criterion(fam, &th, &Parameter::from_vector(v), &q, pi(a)).unwrap();
                    let fd = (up - down) / (2.0 * h);
                    assert!((psi[i] - fd).abs() < 1e-6, "{fam} alpha {a} coord {i}: {} vs {fd}", psi[i]);
                }
            }
        }
    }

    #[test]
    fn sub_psi_vanishes_under_the_variable_model() {
        let tt = Parameter::pair(-0.3, 1.1);
        let q = Family::NormalLocScale.quadrature(&tt).unwrap();
        let psi = sub_psi(Family::NormalLocScale, &Parameter::pair(1.0, 2.0), &tt, &q, pi(0.5)).unwrap();
        assert!(psi.norm() < 1e-8, "{psi:?}");
    }

    #[test]
    fn criteria_gradients_match_differences() {
        let q = Measure::empirical(&[-0.4, 0.3, 1.9, 2.4, 0.8]).unwrap();
        let th = Parameter::pair(0.6, 1.1);
        let fam = Family::NormalLocScale;
        let a = pi(0.5);
        let p = pseudo_psi(fam, &th, &q, a).unwrap();
        let r = renyi_psi(fam, &th, &q, a).unwrap();
        for i in 0..2 {
            let h = 1e-5;
            let mut v = th.as_vector();
            v[i] += h;
            let up = Parameter::from_vector(v);
            v[i] -= 2.0 * h;
            let down = Parameter::from_vector(v);
            let fd_p = (pseudo_criterion(fam, &up, &q, a).unwrap() - pseudo_criterion(fam, &down, &q, a).unwrap()) / (2.0 * h);
            let fd_r = (renyi_criterion(fam, &up, &q, a).unwrap() - renyi_criterion(fam, &down, &q, a).unwrap()) / (2.0 * h);
            assert!((p[i] - fd_p).abs() < 1e-7);
            assert!((0.5 * r[i] - fd_r).abs() < 1e-7);
        }
    }

    #[test]
    fn alpha_zero_is_the_mle_path() {
        let q = Measure::empirical(&[0.3, 1.2, -0.7, 2.2]).unwrap();
        let base = mle(Family::NormalLocScale, &q).unwrap();
        for spec in [
            EstimatorSpec::subdivergence(0.0, Parameter::pair(5.0, 3.0)).unwrap(),
            EstimatorSpec::superdivergence(0.0).unwrap(),
            EstimatorSpec::power_pseudo(0.0).unwrap(),
            EstimatorSpec::renyi(0.0).unwrap(),
        ] {
            assert_eq!(estimate(Family::NormalLocScale, &spec, &q).unwrap(), base);
        }
    }

    #[test]
    fn range_validation() {
        let err = EstimatorSpec::superdivergence(1.5).unwrap_err();
        assert!(err.to_string().contains("[0, 1)"), "{err}");
        assert!(EstimatorSpec::subdivergence(1.0, Parameter::scalar(0.0)).is_err());
        // specs assembled by hand are checked by validate
        let raw = EstimatorSpec::new(EstimatorKind::Superdivergence { alpha: PowerIndex::new(1.5).unwrap() });
        assert!(raw.validate(Family::NormalLocation).is_err());
        assert!(EstimatorSpec::subdivergence(0.5, Parameter::scalar(-1.0))
            .unwrap()
            .validate(Family::NormalScale)
            .is_err());
        assert!(EstimatorSpec::power_pseudo(2.0).unwrap().validate(Family::Pareto).is_ok());
        assert!(EstimatorSpec::power_pseudo(-1.0).is_err());
    }

    #[test]
    fn pseudo_and_renyi_consistency_on_scale() {
        let th = Parameter::scalar(1.7);
        let q = Family::NormalScale.quadrature(&th).unwrap();
        for spec in [EstimatorSpec::power_pseudo(0.5).unwrap(), EstimatorSpec::renyi(0.5).unwrap()] {
            let r = estimate(Family::NormalScale, &spec, &q).unwrap();
            assert!(r.converged, "{r:?}");
            assert!((r.theta_hat[0] - 1.7).abs() < 1e-6, "{r:?}");
        }
    }

    #[test]
    fn superdivergence_consistency_on_location() {
        let th = Parameter::scalar(0.4);
        let q = Family::NormalLocation.quadrature(&th).unwrap();
        let r = estimate(Family::NormalLocation, &EstimatorSpec::superdivergence(0.5).unwrap(), &q).unwrap();
        assert!(r.converged, "{r:?}");
        assert!((r.theta_hat[0] - 0.4).abs() < 1e-6);
        assert!((r.inner_solution.unwrap()[0] - 0.4).abs() < 1e-6);
    }

    #[test]
    fn spec_serde_round_trip() {
        let spec = EstimatorSpec::subdivergence(0.25, Parameter::pair(0.0, 1.0)).unwrap();
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("\"kind\":\"subdivergence\""), "{text}");
        let back: EstimatorSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
    }
}
