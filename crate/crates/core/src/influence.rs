//! Influence functions.
//!
//! For an M-estimator solving `Q·psi(·, T(Q)) = 0` the influence function at
//! `Q` is `-I(Q)^{-1} psi(x, T(Q))` with `I(Q) = Q·dpsi/dtheta`. Closed forms
//! are provided for each estimator on the normal submodels, general
//! quadrature-based forms for the remaining families, and a finite-ε
//! Gateaux quotient that serves as an oracle for all of them.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::divergence::{Extended, BRANCH_TOL};
use crate::error::{Error, Result};
use crate::estimators::{estimate, EstimatorKind, EstimatorSpec};
use crate::family::{Family, Parameter};
use crate::linalg::{Matrix, Vector};
use crate::measure::Measure;

/// Largest parameter perturbation `eps·|IF|` (in units of the scale) that the
/// Gateaux quotient tolerates before shrinking `eps`.
const MAX_PERTURBATION: f64 = 1e-4;
const MIN_EPS: f64 = 1e-8;

/// `-I(Q)^{-1} psi(x, T(Q))` with `I(Q) = Q·psi_deriv(·, T(Q))`.
pub fn if_general(
    psi: impl Fn(f64, &Parameter) -> Result<Vector>,
    psi_deriv: impl Fn(f64, &Parameter) -> Result<Matrix>,
    q: &Measure,
    t_of_q: &Parameter,
    x: f64,
) -> Result<Vector> {
    let dim = t_of_q.dim();
    let mut info = Matrix::zeros(dim);
    for (node, w) in q.iter() {
        info = info + psi_deriv(node, t_of_q)? * w;
    }
    Ok(-info.solve(&psi(x, t_of_q)?)?)
}

/// Finite-ε Gateaux quotient `(T(Q_{x,ε}) - T(Q))/ε`, Richardson-extrapolated
/// twice over `ε`, `ε/2` and `ε/4`.
///
/// When `ε·|IF|` would move the estimate by more than `1e-4` scale units the
/// step is shrunk so that the second-order terms stay negligible.
pub fn if_numeric(family: Family, spec: &EstimatorSpec, q: &Measure, x: f64, eps: f64) -> Result<Vector> {
    if !(eps > 0.0 && eps <= 0.05) {
        return Err(Error::invalid(format!("contamination size {eps} must lie in (0, 0.05]")));
    }
    let fit = |m: &Measure, what: &str| -> Result<Vector> {
        let r = estimate(family, spec, m).map_err(|e| e.context(format!("estimating at {what}")))?;
        if !r.converged {
            return Err(Error::invalid(format!(
                "estimator {} did not converge at {what} (|psi| = {:e})",
                spec.kind, r.psi_norm
            )));
        }
        Ok(r.theta_hat.as_vector())
    };
    let base = fit(q, "the evaluation measure")?;
    let unit = family.score_unit(&Parameter::from_vector(base));
    let quotient = |e: f64| -> Result<Vector> {
        let t = fit(&q.contaminate(x, e)?, &format!("contamination eps={e:e} at x={x}"))?;
        Ok((t - base) * (1.0 / e))
    };
    let mut eps = eps;
    let mut coarse = quotient(eps)?;
    loop {
        let target = MAX_PERTURBATION * unit / coarse.max_abs().max(1e-300);
        if eps <= target || eps <= MIN_EPS {
            break;
        }
        eps = target.max(MIN_EPS);
        coarse = quotient(eps)?;
    }
    let half = quotient(0.5 * eps)?;
    let quarter = quotient(0.25 * eps)?;
    let first = half * 2.0 - coarse;
    let second = quarter * 2.0 - half;
    Ok((second * 4.0 - first) * (1.0 / 3.0))
}

/// The MLE influence function `I(theta)^{-1} s_theta(x)`.
pub fn if_mle(family: Family, theta: &Parameter, x: f64) -> Result<Vector> {
    family.check(theta)?;
    let s = family.score(theta, x)?;
    Ok(match family {
        Family::NormalLocScale => Vector::pair(s[0] * theta[1] * theta[1], s[1] * theta[1] * theta[1] / 2.0),
        Family::NormalLocation => s,
        Family::NormalScale => s * (theta[0] * theta[0] / 2.0),
        Family::Pareto => s * (theta[0] * theta[0]),
    })
}

/// Subdivergence IF for the normal location model with escort `mu` at the
/// true location `mu0`.
pub fn if_sub_location(alpha: f64, mu: f64, mu0: f64, x: f64) -> f64 {
    let d = mu0 - mu;
    let flat = (alpha * (alpha - 1.0) * d * d / 2.0).exp();
    let tilt = (alpha * d * (mu0 + mu - 2.0 * x) / 2.0).exp();
    ((x - mu0) * tilt + alpha * d * flat) / ((1.0 + alpha * alpha * d * d) * flat)
}

/// Subdivergence IF for the normal scale model with escort `sigma` at the
/// true scale `sigma0`.
///
/// Grows like `exp(alpha x² (1/sigma0² - 1/sigma²)/2)` and is therefore
/// unbounded exactly when `sigma > sigma0`.
pub fn if_sub_scale(alpha: f64, sigma: f64, sigma0: f64, x: f64) -> f64 {
    let (s2, s02) = (sigma * sigma, sigma0 * sigma0);
    let mix = alpha * s02 + (1.0 - alpha) * s2;
    let k = 2.0 * s2 * s2 + alpha * alpha * (s02 - s2).powi(2);
    let z = x / sigma0;
    let tilt = (alpha * x * x * (1.0 / s02 - 1.0 / s2) / 2.0).exp();
    let delta = sigma0 * mix.powf(2.5) * (z * z - 1.0) * tilt / (sigma * k);
    delta + alpha * sigma0 * (s02 - s2) * mix / k
}

/// Subdivergence IF for any family:
/// `I^{-1} [r^alpha(x) s(x) - P·r^alpha s]` with `r = p_escort/p_theta0` and
/// `I = P·r^alpha s sᵗ`, expectations under `P_theta0` by quadrature.
pub fn if_sub_general(family: Family, alpha: f64, escort: &Parameter, theta0: &Parameter, x: f64) -> Result<Vector> {
    family.check(escort)?;
    family.check(theta0)?;
    let weight = |y: f64| -> Result<f64> {
        Ok((alpha * (family.log_density(escort, y)? - family.log_density(theta0, y)?)).exp())
    };
    let quad = family.quadrature(theta0)?;
    let dim = family.param_dim();
    let mut info = Matrix::zeros(dim);
    let mut center = Vector::zeros(dim);
    for (y, w) in quad.iter() {
        let s = family.score(theta0, y)?;
        let rw = weight(y)? * w;
        info = info + s.outer(&s) * rw;
        center = center + s * rw;
    }
    let at_x = family.score(theta0, x)? * weight(x)?;
    info.solve(&(at_x - center))
}

/// Power pseudodistance IF for any family:
/// `(P·p^alpha s sᵗ)^{-1} [p^alpha(x) s(x) - P·p^alpha s]`.
pub fn if_pseudo(family: Family, alpha: f64, theta: &Parameter, x: f64) -> Result<Vector> {
    family.check(theta)?;
    let quad = family.quadrature(theta)?;
    let dim = family.param_dim();
    // p^alpha is rescaled by the mass so the matrix stays well conditioned
    let log_norm = family.power_mass_integral(theta, alpha)?.ln();
    let weight = |y: f64| -> Result<f64> { Ok((alpha * family.log_density(theta, y)? - log_norm).exp()) };
    let mut info = Matrix::zeros(dim);
    let mut center = Vector::zeros(dim);
    for (y, w) in quad.iter() {
        let s = family.score(theta, y)?;
        let pw = weight(y)? * w;
        info = info + s.outer(&s) * pw;
        center = center + s * pw;
    }
    let at_x = family.score(theta, x)? * weight(x)?;
    info.solve(&(at_x - center))
}

/// Power pseudodistance IF of the normal location estimator:
/// `(1+alpha)^{3/2} (x - mu) exp(-alpha (x - mu)²/2)`.
pub fn if_pseudo_location(alpha: f64, mu: f64, x: f64) -> f64 {
    let d = x - mu;
    (1.0 + alpha).powf(1.5) * d * (-alpha * d * d / 2.0).exp()
}

/// Power pseudodistance IF of the normal scale estimator.
pub fn if_pseudo_scale(alpha: f64, sigma: f64, x: f64) -> f64 {
    let z2 = (x / sigma).powi(2);
    (1.0 + alpha).powf(2.5) * sigma / (alpha * alpha + 2.0)
        * ((z2 - 1.0) * (-alpha * z2 / 2.0).exp() + alpha / (1.0 + alpha).powf(1.5))
}

/// `lim_{|x|→∞}` of [`if_pseudo_scale`]: `alpha (1+alpha) sigma / (alpha² + 2)`.
pub fn pseudo_scale_limit(alpha: f64, sigma: f64) -> f64 {
    alpha * (1.0 + alpha) * sigma / (alpha * alpha + 2.0)
}

/// Where [`if_pseudo_scale`] attains its positive maximum.
pub fn pseudo_scale_peak(alpha: f64, sigma: f64) -> f64 {
    sigma * ((2.0 + alpha) / alpha).sqrt()
}

/// Rényi pseudodistance IF for any family:
/// `J^{-1} p^alpha(x) (s(x) - c)` with `J = P·p^alpha (s - c)(s - c)ᵗ` and
/// `c = c_theta(alpha)`.
pub fn if_renyi(family: Family, alpha: f64, theta: &Parameter, x: f64) -> Result<Vector> {
    family.check(theta)?;
    let quad = family.quadrature(theta)?;
    let dim = family.param_dim();
    let c = family.weighted_score_mean(theta, alpha)?;
    let log_norm = family.power_mass_integral(theta, alpha)?.ln();
    let weight = |y: f64| -> Result<f64> { Ok((alpha * family.log_density(theta, y)? - log_norm).exp()) };
    let mut info = Matrix::zeros(dim);
    for (y, w) in quad.iter() {
        let d = family.score(theta, y)? - c;
        info = info + d.outer(&d) * (weight(y)? * w);
    }
    let at_x = (family.score(theta, x)? - c) * weight(x)?;
    info.solve(&at_x)
}

/// Rényi pseudodistance IF of the normal scale estimator:
/// `(1+alpha)^{5/2} sigma/2 · ((x/sigma)² - 1/(1+alpha)) exp(-alpha x²/(2 sigma²))`.
pub fn if_renyi_scale(alpha: f64, sigma: f64, x: f64) -> f64 {
    let z2 = (x / sigma).powi(2);
    (1.0 + alpha).powf(2.5) * sigma / 2.0 * (z2 - 1.0 / (1.0 + alpha)) * (-alpha * z2 / 2.0).exp()
}

/// The closed-form IF of `spec` at `P_theta`.
///
/// Normal location and scale submodels use their explicit formulas, other
/// families the quadrature-based general forms. Superdivergence estimators
/// share the MLE influence function.
pub fn closed_form(family: Family, spec: &EstimatorSpec, theta: &Parameter, x: f64) -> Result<Vector> {
    spec.validate(family)?;
    family.check(theta)?;
    let alpha = spec.kind.alpha();
    if alpha < BRANCH_TOL {
        return if_mle(family, theta, x);
    }
    match (spec.kind, family) {
        (EstimatorKind::Mle, _) | (EstimatorKind::Superdivergence { .. }, _) => if_mle(family, theta, x),
        (EstimatorKind::Subdivergence { escort, .. }, Family::NormalLocation) => {
            Ok(Vector::scalar(if_sub_location(alpha, escort[0], theta[0], x)))
        }
        (EstimatorKind::Subdivergence { escort, .. }, Family::NormalScale) => {
            Ok(Vector::scalar(if_sub_scale(alpha, escort[0], theta[0], x)))
        }
        (EstimatorKind::Subdivergence { escort, .. }, _) => if_sub_general(family, alpha, &escort, theta, x),
        (EstimatorKind::PowerPseudo { .. }, Family::NormalLocation) => {
            Ok(Vector::scalar(if_pseudo_location(alpha, theta[0], x)))
        }
        (EstimatorKind::PowerPseudo { .. }, Family::NormalScale) => {
            Ok(Vector::scalar(if_pseudo_scale(alpha, theta[0], x)))
        }
        (EstimatorKind::PowerPseudo { .. }, _) => if_pseudo(family, alpha, theta, x),
        (EstimatorKind::Renyi { .. }, Family::NormalScale) => Ok(Vector::scalar(if_renyi_scale(alpha, theta[0], x))),
        (EstimatorKind::Renyi { .. }, _) => if_renyi(family, alpha, theta, x),
    }
}

/// A sampled influence function `x ↦ IF(x; T, P_theta)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceCurve {
    pub family: Family,
    pub estimator: EstimatorSpec,
    pub eval_param: Parameter,
    pub grid: Vec<f64>,
    pub values: Vec<Vector>,
}

impl InfluenceCurve {
    /// Evaluates `f` on `grid`, which must be strictly increasing.
    pub fn from_fn(
        family: Family,
        estimator: EstimatorSpec,
        eval_param: Parameter,
        grid: Vec<f64>,
        mut f: impl FnMut(f64) -> Result<Vector>,
    ) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::invalid("influence grid is empty"));
        }
        if grid.windows(2).any(|w| w[0] >= w[1]) || grid.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("influence grid must be finite and strictly increasing"));
        }
        let mut values = Vec::with_capacity(grid.len());
        for &x in &grid {
            let v = f(x)?;
            if !v.is_finite() {
                return Err(Error::Integration { node: x, value: v.max_abs() });
            }
            values.push(v);
        }
        Ok(InfluenceCurve {
            family,
            estimator,
            eval_param,
            grid,
            values,
        })
    }

    pub fn closed_form(family: Family, estimator: EstimatorSpec, theta: Parameter, grid: Vec<f64>) -> Result<Self> {
        Self::from_fn(family, estimator, theta, grid, |x| closed_form(family, &estimator, &theta, x))
    }

    /// The Gateaux oracle evaluated against a 512-node quadrature of `P_theta`.
    pub fn numeric(family: Family, estimator: EstimatorSpec, theta: Parameter, grid: Vec<f64>, eps: f64) -> Result<Self> {
        let q = family.quadrature(&theta)?;
        Self::from_fn(family, estimator, theta, grid, |x| if_numeric(family, &estimator, &q, x, eps))
    }

    /// CSV with header `x,if_component_1[,if_component_2]`.
    pub fn to_csv(&self) -> String {
        let dim = self.eval_param.dim();
        let mut out = String::from("x");
        for i in 1..=dim {
            let _ = write!(out, ",if_component_{i}");
        }
        out.push('\n');
        for (x, v) in self.grid.iter().zip(&self.values) {
            let _ = write!(out, "{x}");
            for c in v.as_slice() {
                let _ = write!(out, ",{c}");
            }
            out.push('\n');
        }
        out
    }
}

/// `n` evenly spaced points from `min` to `max` inclusive.
pub fn linspace(min: f64, max: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![min],
        _ => (0..n).map(|i| min + (max - min) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Gross-error sensitivity `sup_x |IF(x)|` and the tail limit of an IF.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivitySummary {
    pub sup_abs: Extended,
    pub limit_at_infinity: Extended,
}

/// Classifies the IF `curve` (Euclidean norm for vectors) at `P_theta`.
///
/// The core region `center ± 12·unit` is scanned densely, with the extra
/// anchor `center ± unit·sqrt((2+alpha)/alpha)`. The tails are probed at
/// `center ± unit·2^k`: a tail that keeps growing between the last two
/// probes or overflows is unbounded, otherwise its last value is the limit.
/// Pareto curves are scanned in `ln x`, so logarithmic growth counts too.
pub fn sensitivity(
    curve: impl Fn(f64) -> Result<Vector>,
    family: Family,
    alpha: f64,
    theta: &Parameter,
) -> Result<SensitivitySummary> {
    family.check(theta)?;
    let unit = family.score_unit(theta);
    let (center, log_axis) = match family {
        Family::Pareto => (0.0, true),
        _ => (family_center(family, theta), false),
    };
    let at = |t: f64| if log_axis { t.exp() } else { t };
    let (reach, sides, top): (f64, &[f64], i32) = if log_axis {
        (12.0 * unit.recip().max(1.0), &[1.0], 9)
    } else {
        (12.0 * unit, &[-1.0, 1.0], 12)
    };
    let mut points = linspace(if log_axis { center } else { center - reach }, center + reach, 4801);
    if alpha > 0.0 && !log_axis {
        let peak = pseudo_scale_peak(alpha, unit);
        points.extend([center - peak, center + peak]);
    }
    let mut sup = 0.0f64;
    for t in points {
        let v = curve(at(t))?.norm();
        if !v.is_finite() {
            return Ok(unbounded());
        }
        sup = sup.max(v);
    }

    let probe_unit = if log_axis { 1.0 } else { unit };
    let mut limit = 0.0;
    for &side in sides {
        let mut previous = 0.0;
        for k in 3..=top {
            let Ok(v) = curve(at(center + side * probe_unit * 2f64.powi(k))) else {
                return Ok(unbounded());
            };
            let n = v.norm();
            if !n.is_finite() {
                return Ok(unbounded());
            }
            sup = sup.max(n);
            if k == top {
                if n > 1.5 * previous + 1e-12 {
                    return Ok(unbounded());
                }
                limit = if v.dim() == 1 { v[0] } else { n };
            }
            previous = n;
        }
    }
    Ok(SensitivitySummary {
        sup_abs: Extended::Finite(sup),
        limit_at_infinity: Extended::Finite(limit),
    })
}

fn family_center(family: Family, theta: &Parameter) -> f64 {
    match family {
        Family::NormalLocScale | Family::NormalLocation => theta[0],
        _ => 0.0,
    }
}

fn unbounded() -> SensitivitySummary {
    SensitivitySummary {
        sup_abs: Extended::Infinite,
        limit_at_infinity: Extended::Infinite,
    }
}
