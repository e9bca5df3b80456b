//! Dense symmetric matrix kernel.
//!
//! [`SymMatrix`] is the unit of all linear algebra in the crate: the matrices
//! `A(θ)`, their offdiagonal parts `Ā = A − diag(A)`, and the SPD matrices
//! whose logarithms feed the applications. Storage is dense row-major.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Relative tolerance for accepting a nearly symmetric input.
pub const SYM_TOL: f64 = 1e-12;

/// Smallest admissible eigenvalue of an SPD matrix, relative to the largest.
pub const SPD_TOL: f64 = 1e-12;

const MAX_SWEEPS: usize = 100;

/// Dense real symmetric `m × m` matrix.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "camelCase"))]
pub struct SymMatrix {
    m: usize,
    entries: Vec<f64>,
}

/// Symmetric eigendecomposition `A = V diag(λ) Vᵀ` with ascending `λ`.
#[derive(Debug, Clone)]
pub struct EigDecomp {
    pub eigenvalues: Vec<f64>,
    /// Row-major `m × m`; column `j` is the eigenvector of `eigenvalues[j]`.
    pub basis: Vec<f64>,
}

impl SymMatrix {
    /// Validates a row-major array of length `m²`.
    ///
    /// Entries within [`SYM_TOL`] of symmetric are accepted and replaced by
    /// the symmetric part `(A + Aᵀ)/2`; larger asymmetry is rejected.
    pub fn new(m: usize, entries: Vec<f64>) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("matrix dimension must be positive"));
        }
        if entries.len() != m * m {
            return Err(Error::DimensionMismatch {
                expected: m * m,
                found: entries.len(),
            });
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("matrix entries"));
        }
        let scale = entries.iter().fold(1.0f64, |acc, x| acc.max(x.abs()));
        let mut entries = entries;
        for i in 0..m {
            for j in (i + 1)..m {
                let (a, b) = (entries[i * m + j], entries[j * m + i]);
                let diff = (a - b).abs();
                if diff > SYM_TOL * scale {
                    return Err(Error::Asymmetric { i, j, diff });
                }
                let s = 0.5 * (a + b);
                entries[i * m + j] = s;
                entries[j * m + i] = s;
            }
        }
        Ok(Self { m, entries })
    }

    pub fn zeros(m: usize) -> Self {
        assert!(m > 0, "matrix dimension must be positive");
        Self {
            m,
            entries: vec![0.0; m * m],
        }
    }

    pub fn identity(m: usize) -> Self {
        Self::from_diag(&vec![1.0; m])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let m = diag.len();
        let mut out = Self::zeros(m);
        for (i, d) in diag.iter().enumerate() {
            out.entries[i * m + i] = *d;
        }
        out
    }

    /// Builds from the lower triangle: `f(i, j)` is called for `i ≥ j`.
    pub fn from_lower(m: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut out = Self::zeros(m);
        for i in 0..m {
            for j in 0..=i {
                let v = f(i, j);
                out.entries[i * m + j] = v;
                out.entries[j * m + i] = v;
            }
        }
        out
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.m + j]
    }

    /// Sets `a[i,j]` and `a[j,i]`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.entries[i * self.m + j] = v;
        self.entries[j * self.m + i] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.entries
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.m).map(|i| self.get(i, i)).collect()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            m: self.m,
            entries: self.entries.iter().map(|x| c * x).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// `self + c·other`.
    pub fn axpy(&self, c: f64, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + c * b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_dim(other.m)?;
        Ok(Self {
            m: self.m,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        })
    }

    pub(crate) fn check_dim(&self, m: usize) -> Result<()> {
        if self.m != m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                found: m,
            });
        }
        Ok(())
    }

    /// `Ā = A − diag(A)`.
    pub fn offdiag(&self) -> Self {
        let mut out = self.clone();
        for i in 0..self.m {
            out.entries[i * self.m + i] = 0.0;
        }
        out
    }

    /// Entrywise ℓ₁ norm `‖vec(A)‖₁`.
    pub fn norm_m(&self) -> f64 {
        self.entries.iter().map(|x| x.abs()).sum()
    }

    pub fn norm_f(&self) -> f64 {
        libm::sqrt(self.entries.iter().map(|x| x * x).sum())
    }

    /// Spectral norm, `max |λ|`.
    pub fn norm_2(&self) -> Result<f64> {
        let ev = self.eigenvalues()?;
        Ok(ev.iter().fold(0.0f64, |acc, x| acc.max(x.abs())))
    }

    pub fn trace(&self) -> f64 {
        (0..self.m).map(|i| self.get(i, i)).sum()
    }

    /// `Σᵢⱼ aᵢⱼ bᵢⱼ`.
    pub fn frobenius_inner(&self, other: &Self) -> Result<f64> {
        self.check_dim(other.m)?;
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a * b)
            .sum())
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x.len())?;
        Ok((0..self.m)
            .map(|i| {
                self.entries[i * self.m..(i + 1) * self.m]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect())
    }

    pub fn eig(&self) -> Result<EigDecomp> {
        jacobi(self, true)
    }

    /// Ascending eigenvalues without the basis.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        jacobi(self, false).map(|e| e.eigenvalues)
    }

    /// Principal logarithm of an SPD matrix through its eigenbasis.
    pub fn log_spd(&self) -> Result<Self> {
        let eig = self.eig()?;
        eig.check_spd()?;
        let logs: Vec<f64> = eig.eigenvalues.iter().map(|l| libm::log(*l)).collect();
        Ok(eig.recompose(&logs))
    }

    /// Solves `A x = b` for SPD `A` by Cholesky factorization.
    pub fn solve_spd(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(b.len())?;
        let l = self.cholesky()?;
        let m = self.m;
        let mut y = vec![0.0; m];
        for i in 0..m {
            let s: f64 = (0..i).map(|k| l[i * m + k] * y[k]).sum();
            y[i] = (b[i] - s) / l[i * m + i];
        }
        let mut x = vec![0.0; m];
        for i in (0..m).rev() {
            let s: f64 = ((i + 1)..m).map(|k| l[k * m + i] * x[k]).sum();
            x[i] = (y[i] - s) / l[i * m + i];
        }
        Ok(x)
    }

    /// `ln det A` for SPD `A`, from the Cholesky diagonal.
    pub fn log_det_spd(&self) -> Result<f64> {
        let l = self.cholesky()?;
        Ok(2.0 * (0..self.m).map(|i| libm::log(l[i * self.m + i])).sum::<f64>())
    }

    /// Lower Cholesky factor, row-major.
    fn cholesky(&self) -> Result<Vec<f64>> {
        let m = self.m;
        let scale = self.diag().iter().fold(0.0f64, |a, d| a.max(d.abs()));
        let mut l = vec![0.0; m * m];
        for j in 0..m {
            let s: f64 = (0..j).map(|k| l[j * m + k] * l[j * m + k]).sum();
            let pivot = self.get(j, j) - s;
            if !(pivot > SPD_TOL * scale) || scale == 0.0 {
                return Err(Error::NotPositiveDefinite {
                    eigenvalue: pivot,
                    index: j,
                });
            }
            let d = libm::sqrt(pivot);
            l[j * m + j] = d;
            for i in (j + 1)..m {
                let s: f64 = (0..j).map(|k| l[i * m + k] * l[j * m + k]).sum();
                l[i * m + j] = (self.get(i, j) - s) / d;
            }
        }
        Ok(l)
    }
}

impl EigDecomp {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `V diag(values) Vᵀ`, symmetrized.
    pub fn recompose(&self, values: &[f64]) -> SymMatrix {
        let m = self.dim();
        let v = &self.basis;
        SymMatrix::from_lower(m, |i, j| {
            let a: f64 = (0..m).map(|k| v[i * m + k] * values[k] * v[j * m + k]).sum();
            let b: f64 = (0..m).map(|k| v[j * m + k] * values[k] * v[i * m + k]).sum();
            0.5 * (a + b)
        })
    }

    /// Applies `f` to the eigenvalues.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let values: Vec<f64> = self.eigenvalues.iter().map(|l| f(*l)).collect();
        self.recompose(&values)
    }

    pub(crate) fn check_spd(&self) -> Result<()> {
        let max = *self.eigenvalues.last().unwrap_or(&0.0);
        let (index, min) = self
            .eigenvalues
            .iter()
            .copied()
            .enumerate()
            .next()
            .unwrap_or((0, 0.0));
        if !(max > 0.0) || !(min > SPD_TOL * max) {
            return Err(Error::NotPositiveDefinite {
                eigenvalue: min,
                index,
            });
        }
        Ok(())
    }
}

/// Cyclic Jacobi eigenvalue iteration.
fn jacobi(a: &SymMatrix, vectors: bool) -> Result<EigDecomp> {
    let m = a.m;
    let mut w = a.entries.clone();
    let mut v = if vectors {
        SymMatrix::identity(m).entries
    } else {
        Vec::new()
    };
    let total: f64 = w.iter().map(|x| x * x).sum();
    let mut converged = m == 1 || total == 0.0;
    let mut sweeps = 0;
    while !converged {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps });
        }
        sweeps += 1;
        for p in 0..m {
            for q in (p + 1)..m {
                let apq = w[p * m + q];
                if apq == 0.0 {
                    continue;
                }
                let app = w[p * m + p];
                let aqq = w[q * m + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = {
                    let t = 1.0 / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                    if theta < 0.0 {
                        -t
                    } else {
                        t
                    }
                };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..m {
                    let wkp = w[k * m + p];
                    let wkq = w[k * m + q];
                    w[k * m + p] = c * wkp - s * wkq;
                    w[k * m + q] = s * wkp + c * wkq;
                }
                for k in 0..m {
                    let wpk = w[p * m + k];
                    let wqk = w[q * m + k];
                    w[p * m + k] = c * wpk - s * wqk;
                    w[q * m + k] = s * wpk + c * wqk;
                }
                w[p * m + q] = 0.0;
                w[q * m + p] = 0.0;
                if vectors {
                    for k in 0..m {
                        let vkp = v[k * m + p];
                        let vkq = v[k * m + q];
                        v[k * m + p] = c * vkp - s * vkq;
                        v[k * m + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
        let off: f64 = (0..m)
            .flat_map(|i| (0..m).filter(move |j| *j != i).map(move |j| (i, j)))
            .map(|(i, j)| w[i * m + j] * w[i * m + j])
            .sum();
        converged = off <= (f64::EPSILON * f64::EPSILON) * total;
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| w[i * m + i].total_cmp(&w[j * m + j]));
    let eigenvalues = order.iter().map(|&i| w[i * m + i]).collect();
    let basis = if vectors {
        let mut b = vec![0.0; m * m];
        for (col, &src) in order.iter().enumerate() {
            for row in 0..m {
                b[row * m + col] = v[row * m + src];
            }
        }
        b
    } else {
        Vec::new()
    };
    Ok(EigDecomp { eigenvalues, basis })
}

/// Dense real rectangular matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "camelCase"))]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("matrix dimensions must be positive"));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("matrix entries"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: x.len(),
            });
        }
        Ok((0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j) * x[j]).sum())
            .collect())
    }

    /// `M diag(w) Mᵀ`, a symmetric `rows × rows` matrix.
    pub fn weighted_gram(&self, w: &[f64]) -> Result<SymMatrix> {
        if w.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: w.len(),
            });
        }
        Ok(SymMatrix::from_lower(self.rows, |i, j| {
            (0..self.cols)
                .map(|k| self.get(i, k) * w[k] * self.get(j, k))
                .sum()
        }))
    }

    /// `M S Mᵀ` for symmetric `S` of dimension `cols`.
    pub fn congruence(&self, s: &SymMatrix) -> Result<SymMatrix> {
        s.check_dim(self.cols)?;
        let n = self.cols;
        // T = M S, rows × n
        let mut t = vec![0.0; self.rows * n];
        for i in 0..self.rows {
            for j in 0..n {
                t[i * n + j] = (0..n).map(|k| self.get(i, k) * s.get(k, j)).sum();
            }
        }
        Ok(SymMatrix::from_lower(self.rows, |i, j| {
            (0..n).map(|k| t[i * n + k] * self.get(j, k)).sum()
        }))
    }
}

impl From<SymMatrix> for Matrix {
    fn from(s: SymMatrix) -> Self {
        Matrix {
            rows: s.m,
            cols: s.m,
            data: s.entries,
        }
    }
}
