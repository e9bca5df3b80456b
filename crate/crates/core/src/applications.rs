//! Problem builders: D-optimal sensor placement and empirical-Bayes
//! hyperparameter estimation.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::certify::binomial;
use crate::family::{estimate_lipschitz, FiniteSpace, Lipschitz, MatrixFamily, Sphere};
use crate::linalg::{Matrix, SymMatrix};
use crate::saa::Regularizer;
use crate::{Error, Result};

/// Default cap on enumerated designs.
pub const DEFAULT_DESIGN_CAP: u64 = 100_000;

/// Sensor placement: choose `k` of the `m` columns of `G` (`n × m`) to
/// maximize `log det(I + G Θ Gᵀ)`, `Θ = diag(θ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OedProblem {
    g: Matrix,
    k: usize,
}

impl OedProblem {
    pub fn new(g: Matrix, k: usize) -> Result<Self> {
        if k == 0 || k > g.cols() {
            return Err(Error::invalid(format!(
                "need 0 < k <= m, got k = {k}, m = {}",
                g.cols()
            )));
        }
        if g.as_slice().iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("design matrix G"));
        }
        Ok(Self { g, k })
    }

    pub fn g(&self) -> &Matrix {
        &self.g
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Candidate count `m`.
    pub fn candidates(&self) -> usize {
        self.g.cols()
    }

    pub fn family(&self) -> OedFamily {
        OedFamily { g: self.g.clone() }
    }
}

/// `A(θ) = −log(I + G diag(θ) Gᵀ)`, of dimension `n` (the rows of `G`).
#[derive(Debug, Clone, PartialEq)]
pub struct OedFamily {
    g: Matrix,
}

impl OedFamily {
    /// `I + G diag(θ) Gᵀ`.
    pub fn information(&self, theta: &[f64]) -> Result<SymMatrix> {
        SymMatrix::identity(self.g.rows()).add(&self.g.weighted_gram(theta)?)
    }

    /// `log det(I + G diag(θ) Gᵀ)`.
    pub fn log_det(&self, theta: &[f64]) -> Result<f64> {
        self.information(theta)?.log_det_spd()
    }
}

impl MatrixFamily for OedFamily {
    fn dim(&self) -> usize {
        self.g.rows()
    }

    fn param_dim(&self) -> usize {
        self.g.cols()
    }

    fn eval(&self, theta: &[f64]) -> Result<SymMatrix> {
        Ok(self.information(theta)?.log_spd()?.scaled(-1.0))
    }
}

/// [`enumerate_designs_capped`] with [`DEFAULT_DESIGN_CAP`].
pub fn enumerate_designs(m: usize, k: usize) -> Result<FiniteSpace> {
    enumerate_designs_capped(m, k, DEFAULT_DESIGN_CAP)
}

/// All 0/1 vectors of length `m` with `k` ones, ordered lexicographically by
/// their sets of selected indices.
pub fn enumerate_designs_capped(m: usize, k: usize, cap: u64) -> Result<FiniteSpace> {
    if k == 0 || k > m {
        return Err(Error::invalid(format!("need 0 < k <= m, got m = {m}, k = {k}")));
    }
    match binomial(m as u64, k as u64) {
        Some(c) if c <= cap => {}
        c => {
            return Err(Error::CapExceeded {
                what: "design (use greedy mode)",
                count: c.map_or(f64::INFINITY, |c| c as f64),
                cap,
            })
        }
    }
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        let mut d = vec![0.0; m];
        for &i in &idx {
            d[i] = 1.0;
        }
        out.push(d);
        // Advance to the next k-combination in lexicographic order.
        let Some(pos) = (0..k).rev().find(|&p| idx[p] < m - k + p) else {
            break;
        };
        idx[pos] += 1;
        for p in pos + 1..k {
            idx[p] = idx[p - 1] + 1;
        }
    }
    FiniteSpace::new(out)
}

/// The design family and the space of all `k`-sensor designs.
pub fn build_oed_family(problem: &OedProblem) -> Result<(OedFamily, FiniteSpace)> {
    Ok((problem.family(), enumerate_designs(problem.candidates(), problem.k())?))
}

/// Greedy design: `k` rounds, each adding the sensor with the largest exact
/// `log det` gain, lowest index on ties.
pub fn greedy_oed(problem: &OedProblem) -> Result<Vec<f64>> {
    let fam = problem.family();
    let m = problem.candidates();
    let mut design = vec![0.0; m];
    for _ in 0..problem.k() {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..m {
            if design[j] != 0.0 {
                continue;
            }
            design[j] = 1.0;
            let v = fam.log_det(&design)?;
            design[j] = 0.0;
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((j, v));
            }
        }
        let (j, _) = best.expect("k <= m leaves a free sensor");
        design[j] = 1.0;
    }
    Ok(design)
}

/// Parameterized Gaussian prior `N(m_pr(θ), Γ_pr(θ))` with hyperprior `π(θ)`.
pub trait PriorModel: Sync {
    /// Dimension of the parameter `θ`.
    fn hyper_dim(&self) -> usize;

    /// Dimension of the unknown the prior is over.
    fn dim(&self) -> usize;

    fn covariance(&self, theta: &[f64]) -> Result<SymMatrix>;

    fn mean(&self, theta: &[f64]) -> Result<Vec<f64>>;

    /// `−2 ln π(θ)` up to a `θ`-independent constant.
    fn neg2_log_hyperprior(&self, theta: &[f64]) -> Result<f64>;
}

/// `Γ_pr(θ) = θ₁ Γ₀`, `m_pr(θ) = θ₂ μ₀`, and a log-uniform hyperprior in the
/// scale, `π(θ) ∝ 1/θ₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledPrior {
    gamma0: SymMatrix,
    mu0: Vec<f64>,
}

impl ScaledPrior {
    pub fn new(gamma0: SymMatrix, mu0: Vec<f64>) -> Result<Self> {
        gamma0.check_dim(mu0.len())?;
        gamma0.eig()?.check_spd()?;
        if mu0.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("prior mean"));
        }
        Ok(Self { gamma0, mu0 })
    }

    pub fn gamma0(&self) -> &SymMatrix {
        &self.gamma0
    }

    pub fn mu0(&self) -> &[f64] {
        &self.mu0
    }
}

impl PriorModel for ScaledPrior {
    fn hyper_dim(&self) -> usize {
        2
    }

    fn dim(&self) -> usize {
        self.mu0.len()
    }

    fn covariance(&self, theta: &[f64]) -> Result<SymMatrix> {
        Ok(self.gamma0.scaled(theta[0]))
    }

    fn mean(&self, theta: &[f64]) -> Result<Vec<f64>> {
        Ok(self.mu0.iter().map(|x| theta[1] * x).collect())
    }

    fn neg2_log_hyperprior(&self, theta: &[f64]) -> Result<f64> {
        if !(theta[0] > 0.0) {
            return Err(Error::invalid("prior scale must be positive"));
        }
        Ok(2.0 * libm::log(theta[0]))
    }
}

/// Empirical Bayes for `d = F u + noise`, `noise ~ N(0, σ²I)`, `u ~ prior(θ)`.
///
/// With `Ψ(θ) = F Γ_pr(θ) Fᵀ + σ²I`, twice the negative log posterior of `θ`
/// is `log det Ψ(θ) + ‖d − F m_pr(θ)‖²_{Ψ(θ)⁻¹} − 2 ln π(θ)` up to constants.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperProblem<P> {
    forward: Matrix,
    data: Vec<f64>,
    sigma: f64,
    prior: P,
    sphere: Sphere,
}

impl<P: PriorModel> HyperProblem<P> {
    /// `forward` is `m × n`, `data` has length `m`. The sphere lives in the
    /// hyperparameter space and should carry a floor that keeps `Ψ` SPD.
    pub fn new(forward: Matrix, data: Vec<f64>, sigma: f64, prior: P, sphere: Sphere) -> Result<Self> {
        if forward.rows() != data.len() {
            return Err(Error::DimensionMismatch {
                expected: forward.rows(),
                found: data.len(),
            });
        }
        if forward.cols() != prior.dim() {
            return Err(Error::DimensionMismatch {
                expected: forward.cols(),
                found: prior.dim(),
            });
        }
        if sphere.param_dim() != prior.hyper_dim() {
            return Err(Error::DimensionMismatch {
                expected: prior.hyper_dim(),
                found: sphere.param_dim(),
            });
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::invalid("noise level sigma must be positive"));
        }
        if data.iter().chain(forward.as_slice()).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("forward operator or data"));
        }
        Ok(Self {
            forward,
            data,
            sigma,
            prior,
            sphere,
        })
    }

    pub fn forward(&self) -> &Matrix {
        &self.forward
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn prior(&self) -> &P {
        &self.prior
    }

    pub fn sphere(&self) -> &Sphere {
        &self.sphere
    }

    fn check_domain(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.sphere.param_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.sphere.param_dim(),
                found: theta.len(),
            });
        }
        if let Some(f) = self.sphere.floor() {
            if theta[f.index] < f.min {
                return Err(Error::invalid(format!(
                    "hyperparameter {} = {} lies below the floor {}",
                    f.index, theta[f.index], f.min
                )));
            }
        }
        Ok(())
    }

    /// `Ψ(θ) = F Γ_pr(θ) Fᵀ + σ²I`.
    pub fn psi(&self, theta: &[f64]) -> Result<SymMatrix> {
        self.check_domain(theta)?;
        let m = self.forward.rows();
        self.forward
            .congruence(&self.prior.covariance(theta)?)?
            .add(&SymMatrix::identity(m).scaled(self.sigma * self.sigma))
    }

    /// `d − F m_pr(θ)`.
    pub fn residual(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let fm = self.forward.mul_vec(&self.prior.mean(theta)?)?;
        Ok(self.data.iter().zip(fm).map(|(d, f)| d - f).collect())
    }

    /// `R(θ) = ‖d − F m_pr(θ)‖²_{Ψ⁻¹} − 2 ln π(θ)`.
    pub fn regularizer_value(&self, theta: &[f64]) -> Result<f64> {
        let psi = self.psi(theta)?;
        let r = self.residual(theta)?;
        let x = psi.solve_spd(&r)?;
        let q: f64 = r.iter().zip(&x).map(|(a, b)| a * b).sum();
        Ok(q + self.prior.neg2_log_hyperprior(theta)?)
    }

    pub fn family(&self, lipschitz: Lipschitz) -> HyperFamily<'_, P> {
        HyperFamily {
            problem: self,
            lipschitz,
        }
    }

    pub fn regularizer(&self) -> HyperRegularizer<'_, P> {
        HyperRegularizer { problem: self }
    }
}

/// `A(θ) = log Ψ(θ)`.
pub struct HyperFamily<'a, P> {
    problem: &'a HyperProblem<P>,
    lipschitz: Lipschitz,
}

impl<P: PriorModel> MatrixFamily for HyperFamily<'_, P> {
    fn dim(&self) -> usize {
        self.problem.forward.rows()
    }

    fn param_dim(&self) -> usize {
        self.problem.sphere.param_dim()
    }

    fn eval(&self, theta: &[f64]) -> Result<SymMatrix> {
        self.problem.psi(theta)?.log_spd()
    }

    fn lipschitz(&self) -> Lipschitz {
        self.lipschitz
    }
}

/// Evaluates to NaN outside the domain, which solvers reject.
pub struct HyperRegularizer<'a, P> {
    problem: &'a HyperProblem<P>,
}

impl<P: PriorModel> Regularizer for HyperRegularizer<'_, P> {
    fn eval(&self, theta: &[f64]) -> f64 {
        self.problem.regularizer_value(theta).unwrap_or(f64::NAN)
    }
}

/// Family, regularizer and sphere of a hyperparameter problem.
///
/// Without `lipschitz`, the constants are estimated from `pairs` random
/// pairs on the sphere and marked non-certified.
pub fn build_hyper_family<P: PriorModel>(
    problem: &HyperProblem<P>,
    lipschitz: Option<Lipschitz>,
    pairs: usize,
    seed: u64,
) -> Result<(HyperFamily<'_, P>, HyperRegularizer<'_, P>, Sphere)> {
    let lipschitz = match lipschitz {
        Some(l) => l,
        None => {
            let probe = problem.family(Lipschitz::default());
            estimate_lipschitz(&probe, problem.sphere(), pairs, seed)?.as_lipschitz()
        }
    };
    Ok((problem.family(lipschitz), problem.regularizer(), problem.sphere().clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use crate::saa::exact_minimize_finite;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = SplitMix64::new(seed);
        Matrix::new(rows, cols, (0..rows * cols).map(|_| rng.gaussian()).collect()).unwrap()
    }

    #[test]
    fn design_enumeration() {
        let d = enumerate_designs(3, 1).unwrap();
        assert_eq!(
            d.points(),
            &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]
        );
        let d = enumerate_designs(4, 2).unwrap();
        assert_eq!(d.len(), 6);
        assert_eq!(d.points()[0], vec![1.0, 1.0, 0.0, 0.0]);
        assert_eq!(d.points()[5], vec![0.0, 0.0, 1.0, 1.0]);
        assert!(enumerate_designs(4, 0).is_err());
        assert!(matches!(
            enumerate_designs_capped(30, 15, 1000),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn identity_g_ties() {
        let p = OedProblem::new(Matrix::new(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap(), 1).unwrap();
        let (fam, space) = build_oed_family(&p).unwrap();
        let a = fam.eval(&[1.0, 0.0]).unwrap();
        assert!((a.get(0, 0) + 2f64.ln()).abs() < 1e-14);
        assert!(a.get(1, 1).abs() < 1e-14 && a.get(0, 1).abs() < 1e-14);
        let (star, v) = exact_minimize_finite(&fam, &space, &crate::saa::ZeroRegularizer).unwrap();
        assert_eq!(star, vec![1.0, 0.0]);
        assert!((v + 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn full_design_and_logdet_identity() {
        let g = random_matrix(4, 5, 1);
        let fam = OedProblem::new(g.clone(), 5).unwrap().family();
        let full = vec![1.0; 5];
        let info = SymMatrix::identity(4).add(&g.weighted_gram(&full).unwrap()).unwrap();
        let ld: f64 = info.eigenvalues().unwrap().iter().map(|l| l.ln()).sum();
        assert!((fam.eval(&full).unwrap().trace() + ld).abs() < 1e-9);
        for d in enumerate_designs(5, 2).unwrap().points() {
            let gram = g.weighted_gram(d).unwrap();
            let want: f64 = gram.eigenvalues().unwrap().iter().map(|l| (1.0 + l).ln()).sum();
            assert!((fam.eval(d).unwrap().trace() + want).abs() < 1e-9);
            assert!((fam.log_det(d).unwrap() - want).abs() < 1e-9);
        }
    }

    #[test]
    fn adding_sensors_never_hurts() {
        let g = random_matrix(3, 6, 4);
        let fam = OedProblem::new(g, 1).unwrap().family();
        for d in enumerate_designs(6, 2).unwrap().points() {
            let t = fam.eval(d).unwrap().trace();
            for j in (0..6).filter(|&j| d[j] == 0.0) {
                let mut e = d.clone();
                e[j] = 1.0;
                assert!(fam.eval(&e).unwrap().trace() <= t + 1e-12);
            }
        }
    }

    #[test]
    fn greedy_is_a_valid_design_no_better_than_optimum() {
        for seed in 0..5 {
            let p = OedProblem::new(random_matrix(4, 6, seed), 3).unwrap();
            let (fam, space) = build_oed_family(&p).unwrap();
            let greedy = greedy_oed(&p).unwrap();
            assert_eq!(greedy.iter().sum::<f64>(), 3.0);
            let (_, best) = exact_minimize_finite(&fam, &space, &crate::saa::ZeroRegularizer).unwrap();
            assert!(fam.eval(&greedy).unwrap().trace() >= best - 1e-12);
        }
    }

    fn hyper_instance(forward: Matrix, seed: u64) -> HyperProblem<ScaledPrior> {
        let n = forward.cols();
        let m = forward.rows();
        let mut rng = SplitMix64::new(seed);
        let b = random_matrix(n, n, seed + 1);
        let gamma0 = b
            .weighted_gram(&vec![1.0; n])
            .unwrap()
            .add(&SymMatrix::identity(n).scaled(0.5))
            .unwrap();
        let mu0 = (0..n).map(|_| rng.gaussian()).collect();
        let data = (0..m).map(|_| rng.gaussian()).collect();
        let sphere = Sphere::new(vec![1.0, 0.5], 0.8).unwrap().with_floor(0, 0.3).unwrap();
        HyperProblem::new(forward, data, 0.7, ScaledPrior::new(gamma0, mu0).unwrap(), sphere).unwrap()
    }

    #[test]
    fn zero_forward_decouples_trace() {
        let p = hyper_instance(Matrix::zeros(4, 3), 2);
        let fam = p.family(Lipschitz::default());
        let want = 4.0 * (0.49f64).ln();
        for theta in [[0.5, 0.1], [1.5, -0.2], [0.3, 0.5]] {
            assert!((fam.eval(&theta).unwrap().trace() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn trace_grows_with_scale() {
        let p = hyper_instance(random_matrix(5, 3, 9), 9);
        let fam = p.family(Lipschitz::default());
        let mut prev = f64::NEG_INFINITY;
        for i in 0..20 {
            let t = fam.eval(&[0.3 + 0.07 * i as f64, 0.2]).unwrap().trace();
            assert!(t >= prev - 1e-12);
            prev = t;
        }
    }

    #[test]
    fn domain_is_enforced_and_boundary_accepted() {
        let p = hyper_instance(random_matrix(5, 3, 3), 3);
        let (fam, reg, _) = build_hyper_family(&p, None, 200, 1).unwrap();
        assert!(fam.eval(&[0.3, 0.5]).is_ok());
        assert!(reg.eval(&[0.3, 0.5]).is_finite());
        assert!(fam.eval(&[0.29, 0.5]).is_err());
        assert!(reg.eval(&[0.29, 0.5]).is_nan());
        let lip = fam.lipschitz();
        assert!(!lip.certified);
        assert!(lip.l2.unwrap() > 0.0);
    }

    #[test]
    fn objective_is_twice_negative_log_posterior() {
        let p = hyper_instance(random_matrix(5, 3, 7), 7);
        let fam = p.family(Lipschitz::default());
        let reg = p.regularizer();
        let mut rng = SplitMix64::new(11);
        for _ in 0..50 {
            let theta = p.sphere().project(&rng.in_ball(p.sphere().center(), 0.8));
            let obj = fam.eval(&theta).unwrap().trace() + reg.eval(&theta);
            let psi = p.psi(&theta).unwrap();
            let r = p.residual(&theta).unwrap();
            let ev = psi.eigenvalues().unwrap();
            let e = psi.eig().unwrap();
            // r·Ψ⁻¹r through the eigenbasis, independent of the Cholesky solve.
            let inv = e.map(|l| 1.0 / l);
            let q: f64 = r.iter().zip(inv.mul_vec(&r).unwrap()).map(|(a, b)| a * b).sum();
            let nlp2 = ev.iter().map(|l| l.ln()).sum::<f64>() + q + 2.0 * theta[0].ln();
            assert!((obj - nlp2).abs() <= 1e-8 * nlp2.abs().max(1.0));
        }
    }
}
