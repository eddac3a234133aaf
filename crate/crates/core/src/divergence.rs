//! Power-divergence kernels and the two pseudodistance families.
//!
//! `phi` is the power function `phi_alpha(t) = (t^a - a t + a - 1)/(a(a-1))`
//! with its logarithmic limits at `a = 0` and `a = 1`. It splits as
//! `phi = phi_ring + phi_sharp` where `phi_ring` carries the part integrated
//! against the escort model and `phi_sharp` the part integrated against the
//! data. `psi_kernel` is the reflexive decomposable kernel behind the power
//! pseudodistances: `psi(s, t) = psi0(s) + psi1(t) + rho(s) t`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{Family, Parameter};
use crate::measure::Measure;

/// Inside this distance from 0 or 1 the logarithmic limit branch is used.
pub const BRANCH_TOL: f64 = 1e-6;

/// A nonnegative, finite divergence order.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PowerIndex(f64);

impl PowerIndex {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha.is_finite() && alpha >= 0.0 {
            Ok(PowerIndex(alpha))
        } else {
            Err(Error::invalid(format!("power index {alpha} must be finite and >= 0")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<PowerIndex> for f64 {
    fn from(a: PowerIndex) -> f64 {
        a.0
    }
}

/// A real value that may be `+∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Extended {
    Finite(f64),
    Infinite,
}

impl Extended {
    pub fn finite(self) -> Option<f64> {
        match self {
            Extended::Finite(v) => Some(v),
            Extended::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Extended::Infinite)
    }
}

#[derive(Clone, Copy)]
enum Branch {
    Zero,
    One,
    General(f64),
}

fn branch(alpha: f64) -> Branch {
    if alpha.abs() < BRANCH_TOL {
        Branch::Zero
    } else if (alpha - 1.0).abs() < BRANCH_TOL {
        Branch::One
    } else {
        Branch::General(alpha)
    }
}

fn check_positive(what: &'static str, t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(what, t))
    }
}

/// `(t^a - 1)/a`, exact near `a = 0` through `expm1`.
fn box_cox(a: f64, ln_t: f64) -> f64 {
    if a == 0.0 {
        ln_t
    } else {
        (a * ln_t).exp_m1() / a
    }
}

/// The power function `phi_alpha(t)`.
pub fn phi(alpha: f64, t: f64) -> Result<f64> {
    check_positive("phi needs t > 0", t)?;
    let ln_t = t.ln();
    Ok(match branch(alpha) {
        Branch::Zero => -ln_t + t - 1.0,
        Branch::One => t * ln_t - t + 1.0,
        Branch::General(a) => ((a * ln_t).exp_m1() - a * (t - 1.0)) / (a * (a - 1.0)),
    })
}

/// The adjoint `phi*(t) = t phi(1/t)`, equal to `phi_{1-alpha}(t)`.
pub fn phi_star(alpha: f64, t: f64) -> Result<f64> {
    check_positive("phi_star needs t > 0", t)?;
    Ok(t * phi(alpha, 1.0 / t)?)
}

/// `(t^alpha - t)/(alpha - 1)`, or `t ln t` at `alpha = 1`.
pub fn phi_ring(alpha: f64, t: f64) -> Result<f64> {
    check_positive("phi_ring needs t > 0", t)?;
    let ln_t = t.ln();
    Ok(match branch(alpha) {
        Branch::Zero => t - 1.0,
        Branch::One => t * ln_t,
        Branch::General(a) => t * box_cox(a - 1.0, ln_t),
    })
}

/// `(1 - t^alpha)/alpha`, or `-ln t` at `alpha = 0`.
pub fn phi_sharp(alpha: f64, t: f64) -> Result<f64> {
    check_positive("phi_sharp needs t > 0", t)?;
    let ln_t = t.ln();
    Ok(match branch(alpha) {
        Branch::Zero => -ln_t,
        Branch::One => 1.0 - t,
        Branch::General(a) => -box_cox(a, ln_t),
    })
}

/// The power pseudodistance kernel `psi_alpha(s, t)`.
pub fn psi_kernel(alpha: PowerIndex, s: f64, t: f64) -> Result<f64> {
    check_positive("psi needs s > 0", s)?;
    check_positive("psi needs t > 0", t)?;
    let (ln_s, ln_t) = (s.ln(), t.ln());
    Ok(match branch(alpha.0) {
        Branch::Zero => s - t + t * ln_t - t * ln_s,
        Branch::One | Branch::General(_) => {
            let a = alpha.0;
            let head = (s.powf(1.0 + a) - t.powf(1.0 + a)) / (1.0 + a);
            head + t * (box_cox(a, ln_t) - box_cox(a, ln_s))
        }
    })
}

/// The decomposition `psi(s, t) = psi0(s) + psi1(t) + rho(s) t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiComponents {
    pub psi0: f64,
    pub psi1: f64,
    pub rho: f64,
}

impl PsiComponents {
    pub fn recombine(&self, t: f64) -> f64 {
        self.psi0 + self.psi1 + self.rho * t
    }
}

pub fn psi_components(alpha: PowerIndex, s: f64, t: f64) -> Result<PsiComponents> {
    check_positive("psi needs s > 0", s)?;
    check_positive("psi needs t > 0", t)?;
    let a = alpha.0;
    let (ln_s, ln_t) = (s.ln(), t.ln());
    Ok(match branch(a) {
        Branch::Zero => PsiComponents {
            psi0: s,
            psi1: t * ln_t - t,
            rho: -ln_s,
        },
        Branch::One | Branch::General(_) => PsiComponents {
            psi0: s.powf(1.0 + a) / (1.0 + a),
            psi1: t * (box_cox(a, ln_t) - t.powf(a) / (1.0 + a)),
            rho: -box_cox(a, ln_s),
        },
    })
}

/// `D_alpha(P, Q)` for mutually singular `P, Q`: `1/(alpha(1-alpha))` when
/// `0 < alpha < 1`, infinite otherwise.
pub fn orthogonal_divergence(alpha: f64) -> Extended {
    if alpha > 0.0 && alpha < 1.0 {
        Extended::Finite(1.0 / (alpha * (1.0 - alpha)))
    } else {
        Extended::Infinite
    }
}

/// `D_alpha(P_theta, P_theta0) = P_theta0·phi_alpha(p_theta / p_theta0)`.
///
/// `quad` must discretize `P_theta0`.
pub fn power_divergence(
    family: Family,
    theta: &Parameter,
    theta0: &Parameter,
    alpha: f64,
    quad: &Measure,
) -> Result<f64> {
    family.check(theta)?;
    family.check(theta0)?;
    quad.try_integrate(|x| {
        let log_ratio = family.log_density(theta, x)? - family.log_density(theta0, x)?;
        let ratio = log_ratio.exp();
        if ratio <= 0.0 || !ratio.is_finite() {
            return Err(Error::domain("density ratio vanishes at a quadrature node", x));
        }
        phi(alpha, ratio)
    })
}

/// The Rényi pseudodistance between `P_theta` and `Q`, where `Q` is given
/// both as a measure (for integrals `Q·f`) and through its density `q`.
///
/// For `alpha > 0`:
/// `ln(P·p^a)/(1+a) + ln(Q·q^a)/(a(1+a)) - ln(Q·p^a)/a`.
/// At `alpha = 0` the limit `Q·ln q - Q·ln p` is returned.
pub fn renyi_pseudodistance(
    family: Family,
    theta: &Parameter,
    q_measure: &Measure,
    q_log_density: impl Fn(f64) -> Result<f64>,
    alpha: PowerIndex,
) -> Result<f64> {
    family.check(theta)?;
    let a = alpha.0;
    if a == 0.0 {
        return q_measure.try_integrate(|x| Ok(q_log_density(x)? - family.log_density(theta, x)?));
    }
    let log_mass = family.power_mass_integral(theta, a)?.ln();
    let log_qq = q_measure.log_integral_exp(|x| Ok(a * q_log_density(x)?))?;
    let log_qp = q_measure.log_integral_exp(|x| Ok(a * family.log_density(theta, x)?))?;
    Ok(log_mass / (1.0 + a) + log_qq / (a * (1.0 + a)) - log_qp / a)
}
