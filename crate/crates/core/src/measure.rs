//! Finitely supported probability measures on the real line.
//!
//! Every law the estimators see is a weighted point mass collection: the
//! empirical measure of a sample, a Gauss-Legendre discretization of a model
//! density, or a convex mixture of either with a Dirac atom. Integration
//! `Q·f` is then the weighted sum over the nodes.

use std::io::BufRead;
use std::path::Path;

use crate::error::{Error, Result};
use crate::family::{Family, Parameter};
use crate::linalg::Vector;

/// Smallest accepted node count for [`Measure::quadrature_of`].
pub const MIN_QUADRATURE_NODES: usize = 32;

const PANEL_ORDER: usize = 32;
const MASS_TOL: f64 = 1e-12;

/// Nodes and weights of one quadrature rule.
type Rule = (Vec<f64>, Vec<f64>);

/// Half-width of the normal quadrature window in units of sigma.
pub const NORMAL_HALF_WIDTH: f64 = 10.0;
/// Upper end of the Pareto quadrature window in `u = ln x`, times `1/theta`.
pub const PARETO_LOG_SPAN: f64 = 30.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Measure {
    /// Builds a measure from explicit nodes and weights.
    ///
    /// Weights must be strictly positive and sum to one within `1e-12`.
    pub fn from_parts(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != weights.len() {
            return Err(Error::invalid(format!(
                "measure needs matching nonempty nodes and weights (got {} and {})",
                nodes.len(),
                weights.len()
            )));
        }
        if let Some(x) = nodes.iter().find(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("node {x} is not finite")));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::invalid(format!("weight {w} is not strictly positive")));
        }
        let total = neumaier_sum(weights.iter().copied());
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::invalid(format!("weights sum to {total}, not 1")));
        }
        Ok(Measure { nodes, weights })
    }

    /// The empirical measure `P_n`: mass `1/n` on each observation.
    pub fn empirical(sample: &[f64]) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::invalid("empty sample"));
        }
        if let Some(x) = sample.iter().find(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("sample value {x} is not finite")));
        }
        let w = 1.0 / sample.len() as f64;
        Ok(Measure {
            nodes: sample.to_vec(),
            weights: vec![w; sample.len()],
        })
    }

    pub fn dirac(x: f64) -> Result<Self> {
        Measure::empirical(&[x])
    }

    /// Discretizes `P_theta` of `family` with `node_count` Gauss-Legendre nodes.
    ///
    /// Normal kinds use panels over `mu ± 10 sigma`. Pareto integrates in
    /// `u = ln x` over `(0, 30/theta)`, where the density becomes
    /// `theta e^{-theta u}` and the neglected tail mass is `e^{-30}`.
    pub fn quadrature_of(family: Family, theta: &Parameter, node_count: usize) -> Result<Self> {
        if node_count < MIN_QUADRATURE_NODES {
            return Err(Error::invalid(format!(
                "quadrature needs at least {MIN_QUADRATURE_NODES} nodes, got {node_count}"
            )));
        }
        family.check(theta)?;
        let (nodes, mut weights) = match family {
            Family::Pareto => {
                let shape = theta[0];
                let (us, ws) = composite_legendre(0.0, PARETO_LOG_SPAN / shape, node_count);
                let weights: Vec<f64> = us
                    .iter()
                    .zip(&ws)
                    .map(|(u, w)| w * shape * (-shape * u).exp())
                    .collect();
                (us.iter().map(|u| u.exp()).collect::<Vec<_>>(), weights)
            }
            _ => {
                let (mu, sigma) = family.location_scale(theta);
                let (xs, ws) = composite_legendre(
                    mu - NORMAL_HALF_WIDTH * sigma,
                    mu + NORMAL_HALF_WIDTH * sigma,
                    node_count,
                );
                let weights = xs
                    .iter()
                    .zip(&ws)
                    .map(|(x, w)| w * family.density(theta, *x).expect("node in support"))
                    .collect();
                (xs, weights)
            }
        };
        let total = neumaier_sum(weights.iter().copied());
        for w in &mut weights {
            *w /= total;
        }
        Ok(Measure { nodes, weights })
    }

    /// The mixture `(1 - epsilon) Q + epsilon δ_x`.
    ///
    /// `epsilon = 0` returns `Q` unchanged and `epsilon = 1` the Dirac at `x`.
    pub fn contaminate(&self, x: f64, epsilon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::invalid(format!("contamination level {epsilon} outside [0, 1]")));
        }
        if !x.is_finite() {
            return Err(Error::invalid(format!("contamination point {x} is not finite")));
        }
        if epsilon == 0.0 {
            return Ok(self.clone());
        }
        if epsilon == 1.0 {
            return Measure::dirac(x);
        }
        let mut nodes = self.nodes.clone();
        let mut weights: Vec<f64> = self.weights.iter().map(|w| w * (1.0 - epsilon)).collect();
        nodes.push(x);
        weights.push(epsilon);
        Ok(Measure { nodes, weights })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// `Q·f = Σ w_i f(x_i)`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> Result<f64> {
        self.try_integrate(|x| Ok(f(x)))
    }

    /// Like [`integrate`](Self::integrate) for integrands that can fail.
    pub fn try_integrate(&self, mut f: impl FnMut(f64) -> Result<f64>) -> Result<f64> {
        let mut acc = Neumaier::default();
        for (x, w) in self.iter() {
            let v = f(x)?;
            if !v.is_finite() {
                return Err(Error::Integration { node: x, value: v });
            }
            acc.add(w * v);
        }
        Ok(acc.total())
    }

    /// Componentwise integral of a vector-valued integrand of dimension `dim`.
    pub fn integrate_vec(&self, dim: usize, mut f: impl FnMut(f64) -> Result<Vector>) -> Result<Vector> {
        let mut acc = [Neumaier::default(), Neumaier::default()];
        for (x, w) in self.iter() {
            let v = f(x)?;
            for (i, vi) in v.as_slice().iter().enumerate() {
                if !vi.is_finite() {
                    return Err(Error::Integration { node: x, value: *vi });
                }
                acc[i].add(w * vi);
            }
        }
        let mut out = Vector::zeros(dim);
        for i in 0..dim {
            out[i] = acc[i].total();
        }
        Ok(out)
    }

    /// `ln Q·e^g`, evaluated by log-sum-exp so that large negative `g` does
    /// not underflow.
    pub fn log_integral_exp(&self, mut g: impl FnMut(f64) -> Result<f64>) -> Result<f64> {
        let mut terms = Vec::with_capacity(self.len());
        for (x, w) in self.iter() {
            let v = g(x)?;
            if v.is_nan() || v == f64::INFINITY {
                return Err(Error::Integration { node: x, value: v });
            }
            terms.push(w.ln() + v);
        }
        let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Err(Error::domain("integral of exp(g) has zero mass", max));
        }
        Ok(max + neumaier_sum(terms.iter().map(|t| (t - max).exp())).ln())
    }

    pub fn min(&self) -> f64 {
        self.nodes.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.nodes.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        neumaier_sum(self.iter().map(|(x, w)| w * x))
    }

    /// Standard deviation with divisor `n` (the normal MLE of scale).
    pub fn std_dev(&self) -> f64 {
        let m = self.mean();
        neumaier_sum(self.iter().map(|(x, w)| w * (x - m) * (x - m))).sqrt()
    }

    /// `sqrt(Q·x²)`, the spread about zero.
    pub fn root_mean_square(&self) -> f64 {
        neumaier_sum(self.iter().map(|(x, w)| w * x * x)).sqrt()
    }

    /// Lower weighted quantile: the smallest node whose cumulative weight
    /// reaches `p`.
    pub fn quantile(&self, p: f64) -> f64 {
        let mut pairs: Vec<(f64, f64)> = self.iter().collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut cum = 0.0;
        for (x, w) in &pairs {
            cum += w;
            if cum >= p - 1e-12 {
                return *x;
            }
        }
        pairs.last().map(|p| p.0).unwrap_or(f64::NAN)
    }

    pub fn interquartile_range(&self) -> f64 {
        self.quantile(0.75) - self.quantile(0.25)
    }
}

/// Reads a sample: one number per line, blank lines and `#` comments skipped.
pub fn read_sample(reader: impl BufRead) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let value: f64 = trimmed.parse().map_err(|_| Error::Parse {
            line: i + 1,
            content: trimmed.to_string(),
        })?;
        out.push(value);
    }
    Ok(out)
}

pub fn read_sample_file(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let file = std::fs::File::open(path.as_ref())
        .map_err(|e| Error::from(e).context(format!("opening {}", path.as_ref().display())))?;
    read_sample(std::io::BufReader::new(file))
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration on
/// `P_n`, started from the Tricomi approximation.
pub(crate) fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Splits `[a, b]` into equal panels of (about) 32 Gauss-Legendre nodes each,
/// returning exactly `count` nodes.
pub(crate) fn composite_legendre(a: f64, b: f64, count: usize) -> (Vec<f64>, Vec<f64>) {
    let panels = (count / PANEL_ORDER).max(1);
    let base = count / panels;
    let extra = count % panels;
    let width = (b - a) / panels as f64;
    let mut xs = Vec::with_capacity(count);
    let mut ws = Vec::with_capacity(count);
    let mut cache: Option<(usize, Rule)> = None;
    for k in 0..panels {
        let order = base + usize::from(k < extra);
        if cache.as_ref().map(|c| c.0) != Some(order) {
            cache = Some((order, gauss_legendre(order)));
        }
        let (t, w) = &cache.as_ref().expect("rule cached").1;
        let lo = a + k as f64 * width;
        let half = 0.5 * width;
        for (ti, wi) in t.iter().zip(w) {
            xs.push(lo + half * (ti + 1.0));
            ws.push(half * wi);
        }
    }
    (xs, ws)
}

#[derive(Default, Clone, Copy)]
pub(crate) struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

pub(crate) fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut acc = Neumaier::default();
    values.for_each(|v| acc.add(v));
    acc.total()
}
