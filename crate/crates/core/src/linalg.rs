//! Fixed-size vectors and matrices for one- and two-parameter models.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A real vector of dimension 1 or 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vector {
    data: [f64; 2],
    dim: usize,
}

impl Vector {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim == 1 || dim == 2, "dimension must be 1 or 2");
        Vector { data: [0.0; 2], dim }
    }

    pub fn scalar(x: f64) -> Self {
        Vector { data: [x, 0.0], dim: 1 }
    }

    pub fn pair(a: f64, b: f64) -> Self {
        Vector { data: [a, b], dim: 2 }
    }

    pub fn from_slice(xs: &[f64]) -> Self {
        match *xs {
            [a] => Vector::scalar(a),
            [a, b] => Vector::pair(a, b),
            _ => panic!("vector of dimension {} not supported", xs.len()),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data[..self.dim]
    }

    pub fn norm(&self) -> f64 {
        self.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.as_slice().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|v| v.is_finite())
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        self.as_slice()
            .iter()
            .zip(other.as_slice())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn outer(&self, other: &Vector) -> Matrix {
        let mut m = Matrix::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[(i, j)] = self.data[i] * other.data[j];
            }
        }
        m
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Vector {
        let mut out = *self;
        for v in &mut out.data[..self.dim] {
            *v = f(*v);
        }
        out
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.as_slice()[i]
    }
}

impl IndexMut<usize> for Vector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.data[..self.dim][i]
    }
}

impl Add for Vector {
    type Output = Vector;
    fn add(mut self, rhs: Vector) -> Vector {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..self.dim {
            self.data[i] += rhs.data[i];
        }
        self
    }
}

impl Sub for Vector {
    type Output = Vector;
    fn sub(mut self, rhs: Vector) -> Vector {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..self.dim {
            self.data[i] -= rhs.data[i];
        }
        self
    }
}

impl Mul<f64> for Vector {
    type Output = Vector;
    fn mul(self, rhs: f64) -> Vector {
        self.map(|v| v * rhs)
    }
}

impl Neg for Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        self.map(|v| -v)
    }
}

impl Serialize for Vector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.as_slice().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Vector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        match v.len() {
            1 | 2 => Ok(Vector::from_slice(&v)),
            n => Err(serde::de::Error::invalid_length(n, &"1 or 2 values")),
        }
    }
}

/// A square real matrix of dimension 1 or 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matrix {
    data: [[f64; 2]; 2],
    dim: usize,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim == 1 || dim == 2, "dimension must be 1 or 2");
        Matrix {
            data: [[0.0; 2]; 2],
            dim,
        }
    }

    pub fn scalar(x: f64) -> Self {
        let mut m = Matrix::zeros(1);
        m.data[0][0] = x;
        m
    }

    pub fn from_rows(rows: [[f64; 2]; 2]) -> Self {
        Matrix { data: rows, dim: 2 }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn determinant(&self) -> f64 {
        match self.dim {
            1 => self.data[0][0],
            _ => self.data[0][0] * self.data[1][1] - self.data[0][1] * self.data[1][0],
        }
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = *self;
        t.data[0][1] = self.data[1][0];
        t.data[1][0] = self.data[0][1];
        t
    }

    pub fn mul_vec(&self, v: &Vector) -> Vector {
        let mut out = Vector::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[i] += self.data[i][j] * v[j];
            }
        }
        out
    }

    /// Solves `self * x = rhs` by Cramer's rule.
    ///
    /// Fails with [`Error::Singular`] when the determinant is zero relative to
    /// the entry scale.
    pub fn solve(&self, rhs: &Vector) -> Result<Vector> {
        let det = self.determinant();
        let scale = self
            .data
            .iter()
            .flatten()
            .take(if self.dim == 1 { 1 } else { 4 })
            .fold(0.0f64, |m, v| m.max(v.abs()));
        if !det.is_finite() || det.abs() <= 1e-14 * scale.powi(self.dim as i32) || scale == 0.0 {
            return Err(Error::Singular { matrix: *self });
        }
        Ok(match self.dim {
            1 => Vector::scalar(rhs[0] / det),
            _ => {
                let [[a, b], [c, d]] = self.data;
                Vector::pair((d * rhs[0] - b * rhs[1]) / det, (a * rhs[1] - c * rhs[0]) / det)
            }
        })
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        assert!(i < self.dim && j < self.dim);
        &self.data[i][j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        assert!(i < self.dim && j < self.dim);
        &mut self.data[i][j]
    }
}

impl Add for Matrix {
    type Output = Matrix;
    fn add(mut self, rhs: Matrix) -> Matrix {
        for i in 0..self.dim {
            for j in 0..self.dim {
                self.data[i][j] += rhs.data[i][j];
            }
        }
        self
    }
}

impl Sub for Matrix {
    type Output = Matrix;
    fn sub(mut self, rhs: Matrix) -> Matrix {
        for i in 0..self.dim {
            for j in 0..self.dim {
                self.data[i][j] -= rhs.data[i][j];
            }
        }
        self
    }
}

impl Mul<f64> for Matrix {
    type Output = Matrix;
    fn mul(mut self, rhs: f64) -> Matrix {
        for row in &mut self.data {
            for v in row {
                *v *= rhs;
            }
        }
        self
    }
}
