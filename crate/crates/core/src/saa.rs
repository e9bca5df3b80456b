//! Sample average approximation: minimize `F̂(θ) + R(θ)` on a frozen bank,
//! and measure the backward error `F(θ̂) + R(θ̂) − F(θ*) − R(θ*)`.

use alloc::vec::Vec;

use crate::certify::Certificate;
use crate::family::{eval_checked, FiniteSpace, MatrixFamily, Sphere};
use crate::hutchinson::{BankMoments, SampleBank};
use crate::linalg::SymMatrix;
use crate::nets::Net;
use crate::{Error, Result};

/// Tolerance below zero at which a backward error is treated as rounding.
pub const BACKWARD_ERROR_TOL: f64 = 1e-10;

/// A deterministic penalty `R(θ)`.
pub trait Regularizer: Sync {
    fn eval(&self, theta: &[f64]) -> f64;
}

/// `R = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroRegularizer;

impl Regularizer for ZeroRegularizer {
    fn eval(&self, _: &[f64]) -> f64 {
        0.0
    }
}

/// Regularizer from a closure.
pub struct FnRegularizer<F>(pub F);

impl<F: Fn(&[f64]) -> f64 + Sync> Regularizer for FnRegularizer<F> {
    fn eval(&self, theta: &[f64]) -> f64 {
        (self.0)(theta)
    }
}

impl<R: Regularizer + ?Sized> Regularizer for &R {
    fn eval(&self, theta: &[f64]) -> f64 {
        (**self).eval(theta)
    }
}

fn reg_at<R: Regularizer + ?Sized>(reg: &R, theta: &[f64]) -> Result<f64> {
    let r = reg.eval(theta);
    if !r.is_finite() {
        return Err(Error::NonFinite("regularizer value"));
    }
    Ok(r)
}

/// What the backward error of a result is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum ReferenceKind {
    /// The exact minimizer over a finite space.
    ExactMinimum,
    /// The best exact value seen on a sphere. The reported backward error is
    /// a lower bound on the true one.
    BestKnownLowerBound,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "camelCase"))]
pub struct OptimizationResult {
    pub theta_hat: Vec<f64>,
    /// Position of `θ̂` in the finite space, or in the net when the search
    /// did not leave it.
    pub theta_hat_index: Option<usize>,
    /// `F̂(θ̂) + R(θ̂)`.
    pub f_hat: f64,
    /// `F(θ̂) + R(θ̂)`.
    pub f_exact: Option<f64>,
    pub theta_star: Option<Vec<f64>>,
    /// `F(θ*) + R(θ*)`, or the best known value on spheres.
    pub f_star: Option<f64>,
    pub backward_error: Option<f64>,
    pub reference: Option<ReferenceKind>,
    pub certificate: Option<Certificate>,
    /// Family evaluations spent by the search.
    pub evaluations: usize,
}

/// `F(θ) + R(θ)` with the exact trace.
pub fn exact_objective<F, R>(family: &F, reg: &R, theta: &[f64]) -> Result<f64>
where
    F: MatrixFamily + ?Sized,
    R: Regularizer + ?Sized,
{
    Ok(eval_checked(family, theta)?.trace() + reg_at(reg, theta)?)
}

/// `(F+R)(θ̂) − (F+R)(θ*)`. Values in `[−1e-10, 0)` are rounded to 0; more
/// negative values mean `θ*` is not a minimizer.
pub fn backward_error<F, R>(family: &F, reg: &R, theta_hat: &[f64], theta_star: &[f64]) -> Result<f64>
where
    F: MatrixFamily + ?Sized,
    R: Regularizer + ?Sized,
{
    clamp_backward(exact_objective(family, reg, theta_hat)? - exact_objective(family, reg, theta_star)?)
}

fn clamp_backward(d: f64) -> Result<f64> {
    if d >= 0.0 {
        Ok(d)
    } else if d >= -BACKWARD_ERROR_TOL {
        Ok(0.0)
    } else {
        Err(Error::NotOptimal { value: d })
    }
}

/// Index of the first minimum.
fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

/// A finite problem with every `A(θ)` and exact objective cached, for
/// repeated SAA solves on fresh banks.
#[derive(Debug, Clone)]
pub struct FiniteProblem {
    points: Vec<Vec<f64>>,
    matrices: Vec<SymMatrix>,
    regs: Vec<f64>,
    exact: Vec<f64>,
    star: usize,
}

impl FiniteProblem {
    pub fn new<F, R>(family: &F, space: &FiniteSpace, reg: &R) -> Result<Self>
    where
        F: MatrixFamily + ?Sized,
        R: Regularizer + ?Sized,
    {
        let points = space.points().to_vec();
        let matrices = points
            .iter()
            .map(|p| eval_checked(family, p))
            .collect::<Result<Vec<_>>>()?;
        let regs = points.iter().map(|p| reg_at(reg, p)).collect::<Result<Vec<_>>>()?;
        Self::from_parts(points, matrices, regs)
    }

    /// Problem from precomputed matrices and regularizer values.
    pub fn from_parts(points: Vec<Vec<f64>>, matrices: Vec<SymMatrix>, regs: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != matrices.len() || points.len() != regs.len() {
            return Err(Error::invalid("finite problem parts must be nonempty and of equal length"));
        }
        let m = matrices[0].dim();
        for a in &matrices {
            a.check_dim(m)?;
        }
        let exact: Vec<f64> = matrices.iter().zip(&regs).map(|(a, r)| a.trace() + r).collect();
        let star = argmin(&exact);
        Ok(Self {
            points,
            matrices,
            regs,
            exact,
            star,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrices[0].dim()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn matrices(&self) -> &[SymMatrix] {
        &self.matrices
    }

    /// Exact objective at every point.
    pub fn exact_values(&self) -> &[f64] {
        &self.exact
    }

    /// `(index, value)` of the exact minimizer, lowest index on ties.
    pub fn exact_minimum(&self) -> (usize, f64) {
        (self.star, self.exact[self.star])
    }

    /// `F̂ + R` at every point for the bank with these moments.
    pub fn estimates(&self, moments: &BankMoments) -> Result<Vec<f64>> {
        self.matrices
            .iter()
            .zip(&self.regs)
            .map(|(a, r)| Ok(moments.estimate(a)? + r))
            .collect()
    }

    /// `max_θ |F(θ) − F̂(θ)|` for the bank with these moments.
    pub fn max_deviation(&self, moments: &BankMoments) -> Result<f64> {
        let est = self.estimates(moments)?;
        Ok(est
            .iter()
            .zip(&self.exact)
            .map(|(e, x)| (e - x).abs())
            .fold(0.0, f64::max))
    }

    /// Exhaustive SAA solve with the shared bank, lowest index on ties.
    pub fn solve(&self, bank: &SampleBank) -> Result<OptimizationResult> {
        self.solve_moments(&bank.moments())
    }

    pub fn solve_moments(&self, moments: &BankMoments) -> Result<OptimizationResult> {
        let est = self.estimates(moments)?;
        let hat = argmin(&est);
        let (star, f_star) = self.exact_minimum();
        Ok(OptimizationResult {
            theta_hat: self.points[hat].clone(),
            theta_hat_index: Some(hat),
            f_hat: est[hat],
            f_exact: Some(self.exact[hat]),
            theta_star: Some(self.points[star].clone()),
            f_star: Some(f_star),
            backward_error: Some(clamp_backward(self.exact[hat] - f_star)?),
            reference: Some(ReferenceKind::ExactMinimum),
            certificate: None,
            evaluations: self.points.len(),
        })
    }
}

/// Exhaustive exact minimization over a finite space, lowest index on ties.
pub fn exact_minimize_finite<F, R>(family: &F, space: &FiniteSpace, reg: &R) -> Result<(Vec<f64>, f64)>
where
    F: MatrixFamily + ?Sized,
    R: Regularizer + ?Sized,
{
    let p = FiniteProblem::new(family, space, reg)?;
    let (i, v) = p.exact_minimum();
    Ok((p.points[i].clone(), v))
}

pub fn saa_minimize_finite<F, R>(
    family: &F,
    space: &FiniteSpace,
    bank: &SampleBank,
    reg: &R,
) -> Result<OptimizationResult>
where
    F: MatrixFamily + ?Sized,
    R: Regularizer + ?Sized,
{
    if bank.m() != family.dim() {
        return Err(Error::DimensionMismatch {
            expected: family.dim(),
            found: bank.m(),
        });
    }
    FiniteProblem::new(family, space, reg)?.solve(bank)
}

/// A sphere problem with the net matrices cached and an exact reference value.
pub struct SphereProblem<'a, F: ?Sized, R: ?Sized> {
    family: &'a F,
    reg: &'a R,
    net: &'a Net,
    matrices: Vec<SymMatrix>,
    regs: Vec<f64>,
    reference: (Vec<f64>, f64),
}

impl<'a, F, R> SphereProblem<'a, F, R>
where
    F: MatrixFamily + ?Sized,
    R: Regularizer + ?Sized,
{
    /// Caches the net and computes the reference: the best exact value over
    /// the net, polished by `exact_refine_steps` pattern-search rounds on the
    /// exact objective.
    pub fn new(family: &'a F, reg: &'a R, net: &'a Net, exact_refine_steps: usize) -> Result<Self> {
        if net.sphere().param_dim() != family.param_dim() {
            return Err(Error::DimensionMismatch {
                expected: family.param_dim(),
                found: net.sphere().param_dim(),
            });
        }
        let matrices = net
            .points()
            .iter()
            .map(|p| eval_checked(family, p))
            .collect::<Result<Vec<_>>>()?;
        let regs = net.points().iter().map(|p| reg_at(reg, p)).collect::<Result<Vec<_>>>()?;
        let exact: Vec<f64> = matrices.iter().zip(&regs).map(|(a, r)| a.trace() + r).collect();
        let i = argmin(&exact);
        let mut problem = Self {
            family,
            reg,
            net,
            matrices,
            regs,
            reference: (net.points()[i].clone(), exact[i]),
        };
        let start = problem.reference.clone();
        let mut evals = 0;
        let mut seen = start.clone();
        let polished = problem.pattern_search(
            start,
            exact_refine_steps,
            |a| Ok(a.trace()),
            &mut evals,
            &mut seen,
        )?;
        problem.reference = if polished.1 < seen.1 { polished } else { seen };
        Ok(problem)
    }

    pub fn net(&self) -> &Net {
        self.net
    }

    /// Matrix dimension of the family.
    pub fn family_dim(&self) -> usize {
        self.family.dim()
    }

    pub fn sphere(&self) -> &Sphere {
        self.net.sphere()
    }

    /// Best known exact point and value.
    pub fn reference(&self) -> (&[f64], f64) {
        (&self.reference.0, self.reference.1)
    }

    /// Net sweep followed by `refine_steps` pattern-search rounds on `F̂ + R`.
    pub fn solve(&self, bank: &SampleBank, refine_steps: usize) -> Result<OptimizationResult> {
        if bank.m() != self.family.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.family.dim(),
                found: bank.m(),
            });
        }
        let moments = bank.moments();
        let est = self
            .matrices
            .iter()
            .zip(&self.regs)
            .map(|(a, r)| Ok(moments.estimate(a)? + r))
            .collect::<Result<Vec<_>>>()?;
        let i = argmin(&est);
        let start = (self.net.points()[i].clone(), est[i]);
        let mut evals = self.matrices.len();
        let mut best_exact = self.reference.clone();
        let (theta_hat, f_hat) = self.pattern_search(
            start,
            refine_steps,
            |a| moments.estimate(a),
            &mut evals,
            &mut best_exact,
        )?;
        let f_exact = exact_objective(self.family, self.reg, &theta_hat)?;
        if f_exact < best_exact.1 {
            best_exact = (theta_hat.clone(), f_exact);
        }
        let theta_hat_index = (theta_hat == self.net.points()[i]).then_some(i);
        Ok(OptimizationResult {
            backward_error: Some(clamp_backward(f_exact - best_exact.1)?),
            theta_hat_index,
            theta_hat,
            f_hat,
            f_exact: Some(f_exact),
            theta_star: Some(best_exact.0),
            f_star: Some(best_exact.1),
            reference: Some(ReferenceKind::BestKnownLowerBound),
            certificate: None,
            evaluations: evals,
        })
    }

    /// Coordinate pattern search from `start` with step `η`, halved whenever
    /// no poll point strictly improves. Every evaluated point updates
    /// `best_exact` with its exact objective.
    fn pattern_search(
        &self,
        start: (Vec<f64>, f64),
        rounds: usize,
        objective: impl Fn(&SymMatrix) -> Result<f64>,
        evals: &mut usize,
        best_exact: &mut (Vec<f64>, f64),
    ) -> Result<(Vec<f64>, f64)> {
        let sphere = self.net.sphere();
        let k = sphere.param_dim();
        let (mut theta, mut value) = start;
        let mut step = self.net.eta();
        for _ in 0..rounds {
            let mut best: Option<(Vec<f64>, f64)> = None;
            for i in 0..k {
                for dir in [1.0, -1.0] {
                    let mut cand = theta.clone();
                    cand[i] += dir * step;
                    let cand = sphere.project(&cand);
                    if cand == theta {
                        continue;
                    }
                    let a = eval_checked(self.family, &cand)?;
                    let r = reg_at(self.reg, &cand)?;
                    *evals += 1;
                    let exact = a.trace() + r;
                    if exact < best_exact.1 {
                        *best_exact = (cand.clone(), exact);
                    }
                    let v = objective(&a)? + r;
                    if v < best.as_ref().map_or(value, |b| b.1) {
                        best = Some((cand, v));
                    }
                }
            }
            match best {
                Some((t, v)) => {
                    theta = t;
                    value = v;
                }
                None => step *= 0.5,
            }
        }
        Ok((theta, value))
    }
}

pub fn saa_minimize_sphere<F, R>(
    family: &F,
    sphere: &Sphere,
    bank: &SampleBank,
    net: &Net,
    refine_steps: usize,
    reg: &R,
) -> Result<OptimizationResult>
where
    F: MatrixFamily + ?Sized,
    R: Regularizer + ?Sized,
{
    if net.sphere() != sphere {
        return Err(Error::invalid("net was built for a different sphere"));
    }
    SphereProblem::new(family, reg, net, refine_steps)?.solve(bank, refine_steps)
}
