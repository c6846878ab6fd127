//! Symmetric tridiagonal eigenvalues by Sturm bisection, eigenvectors by
//! inverse iteration, and a pivoted tridiagonal LU usable with real or
//! complex shifts.

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Scalars accepted by [`TridiagLu`].
pub trait TriScalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + From<f64>
{
    fn modulus(self) -> f64;
}

impl TriScalar for f64 {
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl TriScalar for Complex64 {
    fn modulus(self) -> f64 {
        self.norm()
    }
}

/// Real symmetric tridiagonal matrix: `diag` of length `n`, `off` of length `n - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return Err(Error::Precondition(format!(
                "tridiagonal shape mismatch: {} diagonal, {} off-diagonal entries",
                diag.len(),
                off.len()
            )));
        }
        Ok(Self { diag, off })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Gershgorin enclosure of the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let left = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - left - right);
            hi = hi.max(self.diag[i] + left + right);
        }
        (lo, hi)
    }

    /// Max-abs row sum, an upper bound on the operator norm.
    pub fn norm_bound(&self) -> f64 {
        let (lo, hi) = self.gershgorin();
        lo.abs().max(hi.abs())
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn sturm_count(&self, x: f64) -> usize {
        let tiny = f64::MIN_POSITIVE.sqrt() * self.norm_bound().max(1.0);
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q == 0.0 {
            q = -tiny;
        }
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.dim() {
            let e = self.off[i - 1];
            q = self.diag[i] - x - e * e / q;
            if q == 0.0 {
                q = -tiny;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `index`-th smallest eigenvalue (0-based), bisected to machine resolution.
    pub fn eigenvalue(&self, index: usize) -> Result<f64> {
        if index >= self.dim() {
            return Err(Error::Precondition(format!(
                "eigenvalue index {index} out of range for dimension {}",
                self.dim()
            )));
        }
        let (mut lo, mut hi) = self.gershgorin();
        let pad = f64::EPSILON * self.norm_bound().max(1.0);
        lo -= pad;
        hi += pad;
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.sturm_count(mid) > index {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// The `count` smallest eigenvalues, ascending.
    pub fn smallest_eigenvalues(&self, count: usize) -> Result<Vec<f64>> {
        (0..count).map(|k| self.eigenvalue(k)).collect()
    }

    /// `y = T x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.off[i] * x[i + 1];
            }
            y[i] = acc;
        }
        y
    }

    /// Euclidean-unit eigenvector for an eigenvalue `value` computed by
    /// [`Self::eigenvalue`], orthogonalized against `previous`.
    pub fn eigenvector(&self, value: f64, previous: &[Vec<f64>]) -> Result<Vec<f64>> {
        let n = self.dim();
        let norm = self.norm_bound().max(1.0);
        let lu = TridiagLu::<f64>::factor_shifted(self, value, f64::EPSILON * norm)?;
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.25 * ((i as f64) * 0.73).sin()).collect();
        for _ in 0..4 {
            lu.solve_in_place(&mut x);
            orthogonalize(&mut x, previous);
            normalize(&mut x);
        }
        let tx = self.matvec(&x);
        let residual = tx.iter().zip(&x).map(|(a, b)| (a - value * b).powi(2)).sum::<f64>().sqrt();
        if !residual.is_finite() || residual > 1e-8 * norm {
            return Err(Error::NonConvergence(format!(
                "inverse iteration residual {residual:.3e} at eigenvalue {value}"
            )));
        }
        fix_sign(&mut x);
        Ok(x)
    }

    /// The `count` smallest eigenpairs, vectors Euclidean-unit and mutually orthogonal.
    pub fn smallest_eigenpairs(&self, count: usize) -> Result<Vec<(f64, Vec<f64>)>> {
        let values = self.smallest_eigenvalues(count)?;
        let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(count);
        for &v in &values {
            let x = self.eigenvector(v, &vectors)?;
            vectors.push(x);
        }
        Ok(values.into_iter().zip(vectors).collect())
    }
}

fn orthogonalize(x: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let c: f64 = x.iter().zip(b).map(|(p, q)| p * q).sum();
            for (xi, bi) in x.iter_mut().zip(b) {
                *xi -= c * bi;
            }
        }
    }
}

fn normalize(x: &mut [f64]) {
    let s = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if s > 0.0 {
        x.iter_mut().for_each(|v| *v /= s);
    }
}

/// Flip so that the first entry above 1e-8 of the maximum is positive.
pub fn fix_sign(x: &mut [f64]) {
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if let Some(first) = x.iter().find(|v| v.abs() > 1e-8 * peak) {
        if *first < 0.0 {
            x.iter_mut().for_each(|v| *v = -*v);
        }
    }
}

/// LU factorization with partial pivoting of a general tridiagonal matrix.
#[derive(Debug, Clone)]
pub struct TridiagLu<T> {
    lower: Vec<T>,
    diag: Vec<T>,
    upper: Vec<T>,
    upper2: Vec<T>,
    swapped: Vec<bool>,
}

impl<T: TriScalar> TridiagLu<T> {
    /// Factor `A - shift·I` for a symmetric tridiagonal `A`.
    ///
    /// Zero pivots are replaced by `pivot_floor` when it is positive and
    /// rejected otherwise.
    pub fn factor_shifted(a: &SymTridiagonal, shift: T, pivot_floor: f64) -> Result<Self> {
        let diag: Vec<T> = a.diag.iter().map(|&d| T::from(d) - shift).collect();
        let off: Vec<T> = a.off.iter().map(|&e| T::from(e)).collect();
        Self::factor(off.clone(), diag, off, pivot_floor)
    }

    /// Factor the matrix with sub-diagonal `lower`, diagonal `diag`, super-diagonal `upper`.
    pub fn factor(mut lower: Vec<T>, mut diag: Vec<T>, mut upper: Vec<T>, pivot_floor: f64) -> Result<Self> {
        let n = diag.len();
        let zero = T::from(0.0);
        let mut upper2 = vec![zero; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if diag[i].modulus() >= lower[i].modulus() {
                if diag[i].modulus() == 0.0 {
                    continue;
                }
                let fact = lower[i] / diag[i];
                lower[i] = fact;
                diag[i + 1] = diag[i + 1] - fact * upper[i];
            } else {
                let fact = diag[i] / lower[i];
                diag[i] = lower[i];
                lower[i] = fact;
                let temp = upper[i];
                upper[i] = diag[i + 1];
                diag[i + 1] = temp - fact * diag[i + 1];
                if i + 2 < n {
                    upper2[i] = upper[i + 1];
                    upper[i + 1] = -fact * upper[i + 1];
                }
                swapped[i] = true;
            }
        }
        for d in diag.iter_mut() {
            if d.modulus() == 0.0 {
                if pivot_floor > 0.0 {
                    *d = T::from(pivot_floor);
                } else {
                    return Err(Error::Precondition("singular tridiagonal system".into()));
                }
            }
        }
        Ok(Self { lower, diag, upper, upper2, swapped })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        let n = self.dim();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.lower[i] * b[i];
            } else {
                b[i + 1] = b[i + 1] - self.lower[i] * b[i];
            }
        }
        b[n - 1] = b[n - 1] / self.diag[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.upper[n - 2] * b[n - 1]) / self.diag[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.upper[i] * b[i + 1] - self.upper2[i] * b[i + 2]) / self.diag[i];
        }
    }
}
