//! Bounded derivative-free minimization with an optional Newton polish.
//!
//! One-dimensional problems are scanned on a grid, refined with Brent's
//! golden-section/parabolic search and polished by Newton iterations on a
//! supplied estimating function. Two-dimensional problems use a grid scan
//! followed by a box-projected Nelder-Mead simplex with restarts, then the
//! same polish. Coordinates flagged as logarithmic are searched in `ln x`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

pub type Objective<'a> = dyn FnMut(&Vector) -> Result<f64> + 'a;
pub type Estimating<'a> = dyn FnMut(&Vector) -> Result<Vector> + 'a;

const GRID_1D: usize = 96;
const GRID_2D: usize = 40;
const GOLDEN: f64 = 0.381_966_011_250_105_1;
const NEWTON_STEPS: usize = 30;

/// A parameter box. Coordinates with `log_scale` set must have a positive
/// lower bound and are searched on the log scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: Vector,
    pub upper: Vector,
    #[serde(default)]
    pub log_scale: [bool; 2],
}

impl Bounds {
    pub fn new(lower: Vector, upper: Vector) -> Result<Self> {
        let b = Bounds {
            lower,
            upper,
            log_scale: [false; 2],
        };
        b.validate()?;
        Ok(b)
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Bounds::new(Vector::scalar(lo), Vector::scalar(hi))
    }

    pub fn with_log_scale(mut self, coordinate: usize) -> Result<Self> {
        self.log_scale[coordinate] = true;
        self.validate()?;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.lower.dim()
    }

    pub fn validate(&self) -> Result<()> {
        if self.lower.dim() != self.upper.dim() {
            return Err(Error::invalid("bounds have mismatched dimensions"));
        }
        for i in 0..self.dim() {
            let (lo, hi) = (self.lower[i], self.upper[i]);
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::invalid(format!("bounds [{lo}, {hi}] on coordinate {i} are not a proper interval")));
            }
            if self.log_scale[i] && lo <= 0.0 {
                return Err(Error::invalid(format!("log-scale coordinate {i} needs a positive lower bound, got {lo}")));
            }
        }
        Ok(())
    }

    pub fn contains(&self, x: &Vector) -> bool {
        (0..self.dim()).all(|i| x[i] >= self.lower[i] && x[i] <= self.upper[i])
    }

    pub fn clamp(&self, x: &Vector) -> Vector {
        let mut c = *x;
        for i in 0..self.dim() {
            c[i] = x[i].clamp(self.lower[i], self.upper[i]);
        }
        c
    }

    fn to_internal(self, x: &Vector) -> Vector {
        let mut u = *x;
        for i in 0..self.dim() {
            if self.log_scale[i] {
                u[i] = x[i].ln();
            }
        }
        u
    }

    fn to_external(self, u: &Vector) -> Vector {
        let mut x = *u;
        for i in 0..self.dim() {
            if self.log_scale[i] {
                x[i] = u[i].exp();
            }
            x[i] = x[i].clamp(self.lower[i], self.upper[i]);
        }
        x
    }

    fn internal_box(&self) -> (Vector, Vector) {
        (self.to_internal(&self.lower), self.to_internal(&self.upper))
    }

    fn on_boundary(&self, x: &Vector) -> bool {
        let (lo, hi) = self.internal_box();
        let u = self.to_internal(x);
        (0..self.dim()).any(|i| {
            let slack = 1e-9 * (hi[i] - lo[i]);
            u[i] - lo[i] <= slack || hi[i] - u[i] <= slack
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Tolerance on the criterion value and on the estimating-function norm.
    pub tol: f64,
    /// Relative tolerance on the parameter.
    pub param_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-8,
            param_tol: 1e-6,
            max_iter: 500,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optimum {
    pub x: Vector,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Norm of the estimating function at `x`, when one was supplied.
    pub psi_norm: Option<f64>,
}

/// `+inf` is an admissible objective value (a divergent criterion), NaN and
/// `-inf` are not.
fn evaluate(f: &mut Objective<'_>, x: &Vector) -> Result<f64> {
    let v = f(x)?;
    if v.is_finite() || v == f64::INFINITY {
        Ok(v)
    } else {
        Err(Error::NonFinite { at: x.as_slice().to_vec() })
    }
}

/// Minimizes `objective` over `bounds`, then polishes with Newton steps on
/// `psi` when given.
pub fn minimize(
    objective: &mut Objective<'_>,
    psi: Option<&mut Estimating<'_>>,
    bounds: &Bounds,
    opts: &SolverOptions,
) -> Result<Optimum> {
    bounds.validate()?;
    let mut best = match bounds.dim() {
        1 => solve_1d(objective, bounds, opts)?,
        _ => solve_2d(objective, bounds, opts)?,
    };
    if let Some(psi) = psi {
        let polished = newton_polish(objective, psi, bounds, best.x, best.value, opts)?;
        best.iterations += polished.iterations;
        best.x = polished.x;
        best.value = polished.value;
        best.psi_norm = Some(polished.psi_norm);
        best.converged = best.converged && polished.converged;
    } else if bounds.on_boundary(&best.x) {
        best.converged = false;
    }
    Ok(best)
}

/// Like [`minimize`] but searches locally from `start` instead of scanning
/// the whole box.
pub fn minimize_from(
    objective: &mut Objective<'_>,
    psi: Option<&mut Estimating<'_>>,
    bounds: &Bounds,
    start: &Vector,
    opts: &SolverOptions,
) -> Result<Optimum> {
    bounds.validate()?;
    let start = bounds.to_internal(&bounds.clamp(start));
    let (lo, hi) = bounds.internal_box();
    let mut best = match bounds.dim() {
        1 => {
            let mut eval = |u: f64| evaluate(objective, &bounds.to_external(&Vector::scalar(u)));
            let (a, x0, f0, b, used) = bracket(&mut eval, start[0], 0.02 * (hi[0] - lo[0]), lo[0], hi[0])?;
            let (u, f, iterations, converged) = brent(&mut eval, a, b, x0, f0, 1e-3 * opts.param_tol, opts.max_iter)?;
            Optimum {
                x: bounds.to_external(&Vector::scalar(u)),
                value: f,
                iterations: iterations + used,
                converged,
                psi_norm: None,
            }
        }
        _ => {
            let size = (hi - lo) * 0.02;
            let f0 = evaluate(objective, &bounds.to_external(&start))?;
            simplex_search(objective, bounds, start, f0, size, opts)?
        }
    };
    if let Some(psi) = psi {
        let polished = newton_polish(objective, psi, bounds, best.x, best.value, opts)?;
        best.iterations += polished.iterations;
        best.x = polished.x;
        best.value = polished.value;
        best.psi_norm = Some(polished.psi_norm);
        best.converged = best.converged && polished.converged;
    } else if bounds.on_boundary(&best.x) {
        best.converged = false;
    }
    Ok(best)
}

/// Walks downhill from `x` with doubling steps until the objective rises or
/// the box edge is reached. Returns `(a, x, f(x), b, evaluations)` with `x`
/// the lowest point seen and `a <= x <= b`.
fn bracket(
    f: &mut impl FnMut(f64) -> Result<f64>,
    x: f64,
    step: f64,
    lo: f64,
    hi: f64,
) -> Result<(f64, f64, f64, f64, usize)> {
    let fx = f(x)?;
    let (left, right) = ((x - step).max(lo), (x + step).min(hi));
    let (fl, fr) = (f(left)?, f(right)?);
    let mut used = 3;
    if fx <= fl && fx <= fr {
        return Ok((left, x, fx, right, used));
    }
    let dir = if fl < fr { -1.0 } else { 1.0 };
    let (mut prev, mut cur, mut fcur) = if dir < 0.0 { (x, left, fl) } else { (x, right, fr) };
    let mut h = step;
    loop {
        h *= 2.0;
        let next = (cur + dir * h).clamp(lo, hi);
        if next == cur {
            // pinned against the box edge
            let (a, b) = if dir < 0.0 { (cur, prev) } else { (prev, cur) };
            return Ok((a, cur, fcur, b, used));
        }
        let fnext = f(next)?;
        used += 1;
        if fnext >= fcur {
            let (a, b) = if dir < 0.0 { (next, prev) } else { (prev, next) };
            return Ok((a, cur, fcur, b, used));
        }
        (prev, cur, fcur) = (cur, next, fnext);
    }
}

/// Grid scan plus Brent search on an interval.
pub fn solve_1d(objective: &mut Objective<'_>, bounds: &Bounds, opts: &SolverOptions) -> Result<Optimum> {
    let (lo, hi) = bounds.internal_box();
    let (lo, hi) = (lo[0], hi[0]);
    let mut eval = |u: f64| evaluate(objective, &bounds.to_external(&Vector::scalar(u)));

    let step = (hi - lo) / GRID_1D as f64;
    let mut best_i = 0;
    let mut best_f = f64::INFINITY;
    for i in 0..=GRID_1D {
        let f = eval(lo + step * i as f64)?;
        // strict comparison keeps the smallest parameter among ties
        if f < best_f {
            best_f = f;
            best_i = i;
        }
    }
    if !best_f.is_finite() {
        return Err(Error::NonFinite { at: vec![lo, hi] });
    }
    let a = lo + step * best_i.saturating_sub(1) as f64;
    let b = (lo + step * (best_i + 1) as f64).min(hi);
    let x0 = lo + step * best_i as f64;
    let xtol = 1e-3 * opts.param_tol;
    let (u, f, iterations, converged) = brent(&mut eval, a, b, x0, best_f, xtol, opts.max_iter)?;
    Ok(Optimum {
        x: bounds.to_external(&Vector::scalar(u)),
        value: f,
        iterations: iterations + GRID_1D + 1,
        converged,
        psi_norm: None,
    })
}

/// Brent's minimization on `[a, b]` starting from the interior point `x`.
fn brent(
    f: &mut impl FnMut(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    x0: f64,
    f0: f64,
    xtol: f64,
    max_iter: usize,
) -> Result<(f64, f64, usize, bool)> {
    let (mut x, mut w, mut v) = (x0, x0, x0);
    let (mut fx, mut fw, mut fv) = (f0, f0, f0);
    let (mut d, mut e) = (0.0f64, 0.0f64);
    for iter in 0..max_iter {
        let m = 0.5 * (a + b);
        let tol1 = f64::EPSILON.sqrt() * x.abs() + xtol;
        let tol2 = 2.0 * tol1;
        if (x - m).abs() <= tol2 - 0.5 * (b - a) {
            return Ok((x, fx, iter, true));
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            if p.abs() < (0.5 * q * e).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if x < m { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x < m { b - x } else { a - x };
            d = GOLDEN * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let fu = f(u)?;
        if fu <= fx {
            if u < x {
                b = x;
            } else {
                a = x;
            }
            (v, fv, w, fw, x, fx) = (w, fw, x, fx, u, fu);
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                (v, fv, w, fw) = (w, fw, u, fu);
            } else if fu <= fv || v == x || v == w {
                (v, fv) = (u, fu);
            }
        }
    }
    Ok((x, fx, max_iter, false))
}

/// Grid scan plus Nelder-Mead with restarts on a box.
pub fn solve_2d(objective: &mut Objective<'_>, bounds: &Bounds, opts: &SolverOptions) -> Result<Optimum> {
    let (lo, hi) = bounds.internal_box();
    let mut eval = |u: &Vector| evaluate(objective, &bounds.to_external(u));
    let steps = Vector::pair((hi[0] - lo[0]) / GRID_2D as f64, (hi[1] - lo[1]) / GRID_2D as f64);
    let mut start = lo;
    let mut start_f = f64::INFINITY;
    for i in 0..=GRID_2D {
        for j in 0..=GRID_2D {
            let u = Vector::pair(lo[0] + steps[0] * i as f64, lo[1] + steps[1] * j as f64);
            let f = eval(&u)?;
            if f < start_f {
                start_f = f;
                start = u;
            }
        }
    }
    if !start_f.is_finite() {
        return Err(Error::NonFinite { at: bounds.to_external(&start).as_slice().to_vec() });
    }
    let mut found = simplex_search(objective, bounds, start, start_f, steps, opts)?;
    found.iterations += (GRID_2D + 1) * (GRID_2D + 1);
    Ok(found)
}

/// Nelder-Mead from `start` (internal coordinates), restarted with a smaller
/// simplex until a restart no longer improves the value.
fn simplex_search(
    objective: &mut Objective<'_>,
    bounds: &Bounds,
    start: Vector,
    start_f: f64,
    size: Vector,
    opts: &SolverOptions,
) -> Result<Optimum> {
    let (lo, hi) = bounds.internal_box();
    let mut eval = |u: &Vector| evaluate(objective, &bounds.to_external(u));
    let project = |u: Vector| Vector::pair(u[0].clamp(lo[0], hi[0]), u[1].clamp(lo[1], hi[1]));
    let xtol = Vector::pair(
        1e-3 * opts.param_tol * (hi[0] - lo[0]).max(1.0),
        1e-3 * opts.param_tol * (hi[1] - lo[1]).max(1.0),
    );
    let (mut start, mut start_f, mut size) = (start, start_f, size);
    let mut iterations = 0;
    let mut converged = false;
    for _restart in 0..4 {
        let (u, f, used, ok) = nelder_mead(&mut eval, &project, start, start_f, size, xtol, opts.tol, opts.max_iter)?;
        iterations += used;
        let improved = start_f - f > opts.tol * (1.0 + f.abs());
        start = u;
        start_f = f;
        converged = ok;
        if ok && !improved {
            break;
        }
        size = size * 0.1;
    }
    Ok(Optimum {
        x: bounds.to_external(&start),
        value: start_f,
        iterations,
        converged,
        psi_norm: None,
    })
}

#[allow(clippy::too_many_arguments)]
fn nelder_mead(
    f: &mut impl FnMut(&Vector) -> Result<f64>,
    project: &impl Fn(Vector) -> Vector,
    start: Vector,
    start_f: f64,
    size: Vector,
    xtol: Vector,
    ftol: f64,
    max_iter: usize,
) -> Result<(Vector, f64, usize, bool)> {
    let mut simplex = [start, project(start + Vector::pair(size[0], 0.0)), project(start + Vector::pair(0.0, size[1]))];
    // a vertex projected back onto the start degenerates the simplex
    for k in 1..3 {
        if simplex[k] == start {
            let mut flipped = Vector::zeros(2);
            flipped[k - 1] = -size[k - 1];
            simplex[k] = project(start + flipped);
        }
    }
    let mut values = [start_f, f(&simplex[1])?, f(&simplex[2])?];
    for iter in 0..max_iter {
        let mut order = [0usize, 1, 2];
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]).then(simplex[i][0].total_cmp(&simplex[j][0])));
        simplex = order.map(|i| simplex[i]);
        values = order.map(|i| values[i]);

        let spread = (values[2] - values[0]).abs();
        let small = (1..3).all(|k| {
            (simplex[k][0] - simplex[0][0]).abs() <= xtol[0] && (simplex[k][1] - simplex[0][1]).abs() <= xtol[1]
        });
        if small && spread <= ftol * (1.0 + values[0].abs()) {
            return Ok((simplex[0], values[0], iter, true));
        }

        let centroid = (simplex[0] + simplex[1]) * 0.5;
        let reflected = project(centroid + (centroid - simplex[2]));
        let fr = f(&reflected)?;
        if fr < values[0] {
            let expanded = project(centroid + (centroid - simplex[2]) * 2.0);
            let fe = f(&expanded)?;
            if fe < fr {
                simplex[2] = expanded;
                values[2] = fe;
            } else {
                simplex[2] = reflected;
                values[2] = fr;
            }
        } else if fr < values[1] {
            simplex[2] = reflected;
            values[2] = fr;
        } else {
            let (towards, ft) = if fr < values[2] { (reflected, fr) } else { (simplex[2], values[2]) };
            let contracted = project(centroid + (towards - centroid) * 0.5);
            let fc = f(&contracted)?;
            if fc < ft {
                simplex[2] = contracted;
                values[2] = fc;
            } else {
                for k in 1..3 {
                    simplex[k] = project(simplex[0] + (simplex[k] - simplex[0]) * 0.5);
                    values[k] = f(&simplex[k])?;
                }
            }
        }
    }
    let k = (0..3).min_by(|&i, &j| values[i].total_cmp(&values[j])).unwrap_or(0);
    Ok((simplex[k], values[k], max_iter, false))
}

#[derive(Debug, Clone, Copy)]
pub struct Polished {
    pub x: Vector,
    pub value: f64,
    pub psi_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Jacobian of `psi` by central differences.
pub fn jacobian(psi: &mut Estimating<'_>, x: &Vector, bounds: &Bounds) -> Result<Matrix> {
    let dim = x.dim();
    let mut jac = Matrix::zeros(dim);
    for j in 0..dim {
        let h = 1e-6 * x[j].abs().max(1e-3 * (bounds.upper[j] - bounds.lower[j]).min(1.0));
        let mut plus = *x;
        let mut minus = *x;
        plus[j] += h;
        minus[j] -= h;
        let (fp, fm) = (psi(&plus)?, psi(&minus)?);
        for i in 0..dim {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// Newton iterations on `psi(x) = 0` from `x`, accepted only while they
/// reduce `|psi|` without raising the objective beyond roundoff.
pub fn newton_polish(
    objective: &mut Objective<'_>,
    psi: &mut Estimating<'_>,
    bounds: &Bounds,
    x: Vector,
    value: f64,
    opts: &SolverOptions,
) -> Result<Polished> {
    let mut x = x;
    let mut value = value;
    let mut r = psi(&x)?;
    if !r.is_finite() {
        return Err(Error::NonFinite { at: x.as_slice().to_vec() });
    }
    let mut iterations = 0;
    while iterations < NEWTON_STEPS && r.norm() > opts.tol * 1e-3 {
        iterations += 1;
        let jac = jacobian(psi, &x, bounds)?;
        let step = match jac.solve(&r) {
            Ok(s) => -s,
            Err(_) => break,
        };
        let mut accepted = false;
        let mut scale = 1.0;
        for _ in 0..12 {
            let cand = x + step * scale;
            if bounds.contains(&cand) {
                let fc = evaluate(objective, &cand)?;
                let rc = psi(&cand)?;
                if rc.is_finite() && rc.norm() < r.norm() && fc <= value + 1e-10 * (1.0 + value.abs()) {
                    x = cand;
                    value = fc;
                    r = rc;
                    accepted = true;
                    break;
                }
            }
            scale *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let psi_norm = r.norm();
    Ok(Polished {
        x,
        value,
        psi_norm,
        iterations,
        converged: psi_norm <= opts.tol && !bounds.on_boundary(&x),
    })
}
