//! Exact laws of the estimator on tiny instances, Clopper–Pearson limits,
//! and a Monte Carlo harness that checks certified guarantees.

use alloc::string::String;
use alloc::vec::Vec;

use crate::certify::Certificate;
use crate::family::MatrixFamily;
use crate::hutchinson::{draw_rademacher, SampleBank};
use crate::linalg::SymMatrix;
use crate::rng::{derive_seed, DERIVE_RULE};
use crate::saa::{FiniteProblem, OptimizationResult, ReferenceKind, Regularizer, SphereProblem};
use crate::special::binomial_cdf;
use crate::{Error, Result};

/// Largest `m·N` the enumeration oracle accepts.
pub const MAX_ENUMERATION_BITS: usize = 22;

/// Atoms closer than this are merged.
pub const TIE_TOL: f64 = 1e-12;

/// Exact law of `F̂ = (1/N) Σᵢ ωᵢᵀ A ωᵢ` over all `2^{mN}` sign patterns.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "camelCase"))]
pub struct ExactDistribution {
    pub m: usize,
    pub n: usize,
    /// `(value, count)` sorted by value; probabilities are `count / 2^{mN}`.
    pub atoms: Vec<(f64, u64)>,
}

impl ExactDistribution {
    pub fn total(&self) -> u64 {
        1u64 << (self.m * self.n)
    }

    /// `(value, probability)` pairs.
    pub fn support(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let total = self.total() as f64;
        self.atoms.iter().map(move |&(v, c)| (v, c as f64 / total))
    }

    pub fn mean(&self) -> f64 {
        self.support().map(|(v, p)| v * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.support().map(|(v, p)| (v - mu) * (v - mu) * p).sum()
    }
}

fn merge_ties(mut atoms: Vec<(f64, u64)>) -> Vec<(f64, u64)> {
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, u64)> = Vec::with_capacity(atoms.len());
    for (v, c) in atoms {
        match out.last_mut() {
            Some(last) if v - last.0 <= TIE_TOL => last.1 += c,
            _ => out.push((v, c)),
        }
    }
    out
}

/// Exact law by enumerating the `2^m` single-vector forms and convolving
/// `N` times. Requires `m·N ≤ 22`.
pub fn exact_distribution(a: &SymMatrix, n: usize) -> Result<ExactDistribution> {
    let m = a.dim();
    if n == 0 || m == 0 {
        return Err(Error::invalid("exact distribution needs m >= 1 and N >= 1"));
    }
    if m * n > MAX_ENUMERATION_BITS {
        return Err(Error::CapExceeded {
            what: "sign-pattern bit (m*N)",
            count: (m * n) as f64,
            cap: MAX_ENUMERATION_BITS as u64,
        });
    }
    // Offdiagonal part of one quadratic form, ωᵀĀω, for every ω.
    let single: Vec<(f64, u64)> = merge_ties(
        (0u32..1 << m)
            .map(|code| {
                let mut s = 0.0;
                for i in 0..m {
                    let wi = if code >> i & 1 == 1 { 1.0 } else { -1.0 };
                    for j in i + 1..m {
                        let wj = if code >> j & 1 == 1 { 1.0 } else { -1.0 };
                        s += a.get(i, j) * wi * wj;
                    }
                }
                (2.0 * s, 1)
            })
            .collect(),
    );
    let mut sums = single.clone();
    for _ in 1..n {
        let mut raw = Vec::with_capacity(sums.len() * single.len());
        for &(v, c) in &sums {
            for &(w, d) in &single {
                raw.push((v + w, c * d));
            }
        }
        sums = merge_ties(raw);
    }
    let tr = a.trace();
    let nf = n as f64;
    let atoms = merge_ties(sums.into_iter().map(|(s, c)| (tr + s / nf, c)).collect());
    Ok(ExactDistribution { m, n, atoms })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailConvention {
    /// `P[|F̂ − c| ≥ t]`.
    AtLeast,
    /// `P[|F̂ − c| > t]`.
    Greater,
}

/// Exact mass at distance `≥ t` (or `> t`) from `center`. Distances within
/// `1e-12` of `t` count as equal to `t`.
pub fn exact_tail(dist: &ExactDistribution, center: f64, t: f64, convention: TailConvention) -> f64 {
    dist.support()
        .filter(|(v, _)| {
            let d = (v - center).abs();
            match convention {
                TailConvention::AtLeast => d >= t - TIE_TOL,
                TailConvention::Greater => d > t + TIE_TOL,
            }
        })
        .map(|(_, p)| p)
        .sum()
}

/// One-sided upper confidence limit for a binomial proportion: the `p` with
/// `P[Bin(trials, p) ≤ failures] = 1 − level`, by bisection to `1e-10`.
pub fn clopper_pearson_upper(failures: u64, trials: u64, level: f64) -> Result<f64> {
    if failures > trials || trials == 0 {
        return Err(Error::invalid("need 0 <= failures <= trials and trials >= 1"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid("confidence level must lie in (0, 1)"));
    }
    if failures == trials {
        return Ok(1.0);
    }
    let target = 1.0 - level;
    let (mut lo, mut hi) = (failures as f64 / trials as f64, 1.0);
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if binomial_cdf(failures, trials, mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Something that runs one SAA solve per bank.
pub trait SaaSolver: Sync {
    /// Matrix dimension the banks must match.
    fn dim(&self) -> usize;

    fn reference(&self) -> ReferenceKind;

    fn solve(&self, bank: &SampleBank) -> Result<OptimizationResult>;
}

impl SaaSolver for FiniteProblem {
    fn dim(&self) -> usize {
        FiniteProblem::dim(self)
    }

    fn reference(&self) -> ReferenceKind {
        ReferenceKind::ExactMinimum
    }

    fn solve(&self, bank: &SampleBank) -> Result<OptimizationResult> {
        FiniteProblem::solve(self, bank)
    }
}

/// A sphere problem with a fixed number of refinement rounds.
pub struct SphereSolver<'p, 'a, F: ?Sized, R: ?Sized> {
    pub problem: &'p SphereProblem<'a, F, R>,
    pub refine_steps: usize,
}

impl<F, R> SaaSolver for SphereSolver<'_, '_, F, R>
where
    F: MatrixFamily + ?Sized,
    R: Regularizer + ?Sized,
{
    fn dim(&self) -> usize {
        self.problem.family_dim()
    }

    fn reference(&self) -> ReferenceKind {
        ReferenceKind::BestKnownLowerBound
    }

    fn solve(&self, bank: &SampleBank) -> Result<OptimizationResult> {
        self.problem.solve(bank, self.refine_steps)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "camelCase"))]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub theta_hat_index: Option<usize>,
    pub backward_error: f64,
    pub fail: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "camelCase"))]
pub struct ValidationReport {
    pub n: usize,
    pub eps: f64,
    pub delta: f64,
    pub trials: usize,
    /// Trials with backward error `≥ eps`.
    pub failures: usize,
    pub empirical_rate: f64,
    pub cp_level: f64,
    pub cp_upper: f64,
    /// `empirical_rate ≤ delta`.
    pub pass: bool,
    /// `cp_upper ≤ delta`.
    pub cp_pass: bool,
    pub reference: ReferenceKind,
    pub master_seed: u64,
    pub seed_rule: String,
    pub records: Vec<TrialRecord>,
}

/// Monte Carlo validation parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationSpec {
    pub n: usize,
    pub eps: f64,
    pub delta: f64,
    pub trials: usize,
    pub master_seed: u64,
}

/// Confidence level of the reported Clopper–Pearson limit.
pub const CP_LEVEL: f64 = 0.95;

fn run_trial<S: SaaSolver + ?Sized>(solver: &S, spec: &ValidationSpec, j: usize) -> Result<TrialRecord> {
    let seed = derive_seed(spec.master_seed, j as u64);
    let bank = draw_rademacher(seed, spec.n, solver.dim())?;
    let r = solver.solve(&bank)?;
    let be = r.backward_error.ok_or(Error::MissingInput("backward error"))?;
    Ok(TrialRecord {
        trial: j,
        seed,
        theta_hat_index: r.theta_hat_index,
        backward_error: be,
        fail: be >= spec.eps,
    })
}

/// Runs `spec.trials` independent SAA solves; trial `j` uses the bank drawn
/// from `derive_seed(master_seed, j)`. Results do not depend on threading.
pub fn run_validation<S: SaaSolver + ?Sized>(solver: &S, spec: &ValidationSpec) -> Result<ValidationReport> {
    if spec.trials == 0 {
        return Err(Error::invalid("validation needs at least one trial"));
    }
    if !(spec.eps > 0.0) || !(spec.delta > 0.0 && spec.delta < 1.0) {
        return Err(Error::invalid("validation needs eps > 0 and delta in (0, 1)"));
    }
    #[cfg(feature = "parallel")]
    let records: Vec<TrialRecord> = {
        use rayon::prelude::*;
        (0..spec.trials)
            .into_par_iter()
            .map(|j| run_trial(solver, spec, j))
            .collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let records: Vec<TrialRecord> = (0..spec.trials)
        .map(|j| run_trial(solver, spec, j))
        .collect::<Result<_>>()?;
    let failures = records.iter().filter(|r| r.fail).count();
    let empirical_rate = failures as f64 / spec.trials as f64;
    let cp_upper = clopper_pearson_upper(failures as u64, spec.trials as u64, CP_LEVEL)?;
    Ok(ValidationReport {
        n: spec.n,
        eps: spec.eps,
        delta: spec.delta,
        trials: spec.trials,
        failures,
        empirical_rate,
        cp_level: CP_LEVEL,
        cp_upper,
        pass: empirical_rate <= spec.delta,
        cp_pass: cp_upper <= spec.delta,
        reference: solver.reference(),
        master_seed: spec.master_seed,
        seed_rule: String::from(DERIVE_RULE),
        records,
    })
}

/// Validates a certificate with its own `N`, `eps` and `delta`.
pub fn validate_certificate<S: SaaSolver + ?Sized>(
    solver: &S,
    cert: &Certificate,
    trials: usize,
    master_seed: u64,
) -> Result<ValidationReport> {
    run_validation(
        solver,
        &ValidationSpec {
            n: cert.samples()?,
            eps: cert.inputs.eps,
            delta: cert.inputs.delta,
            trials,
            master_seed,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::{n_finite_hoeffding, Accuracy, Cardinality};
    use crate::family::{AffineFamily, FiniteSpace, FnFamily, MatrixFamily};
    use crate::rng::SplitMix64;
    use crate::saa::ZeroRegularizer;
    use alloc::vec;
    use proptest::prelude::*;

    fn random_sym(m: usize, seed: u64) -> SymMatrix {
        let mut rng = SplitMix64::new(seed);
        SymMatrix::from_lower(m, |_, _| rng.gaussian())
    }

    #[test]
    fn swap_law() {
        let a = SymMatrix::new(2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let d = exact_distribution(&a, 1).unwrap();
        let s: Vec<(f64, f64)> = d.support().collect();
        assert_eq!(s, vec![(-2.0, 0.5), (2.0, 0.5)]);
        assert_eq!(exact_tail(&d, 0.0, 2.0, TailConvention::AtLeast), 1.0);
        assert_eq!(exact_tail(&d, 0.0, 2.0, TailConvention::Greater), 0.0);
        assert_eq!(exact_tail(&d, 0.0, 1.99, TailConvention::Greater), 1.0);
    }

    #[test]
    fn diagonal_law_is_an_atom() {
        let a = SymMatrix::from_diag(&[1.0, -2.0, 4.5]);
        let d = exact_distribution(&a, 3).unwrap();
        assert_eq!(d.atoms, vec![(3.5, 512)]);
    }

    #[test]
    fn moments_match_closed_forms() {
        for seed in 0..5 {
            let a = random_sym(3, seed);
            let d = exact_distribution(&a, 2).unwrap();
            let nf = a.offdiag().norm_f();
            assert!((d.mean() - a.trace()).abs() < 1e-12);
            assert!((d.variance() - nf * nf).abs() < 1e-10 * nf * nf);
            assert_eq!(d.atoms.iter().map(|a| a.1).sum::<u64>(), 64);
        }
    }

    #[test]
    fn convolution_matches_brute_force() {
        let a = random_sym(3, 9);
        let d = exact_distribution(&a, 3).unwrap();
        let mut raw = Vec::new();
        for code in 0u32..1 << 9 {
            let signs = (0..9).map(|b| if code >> b & 1 == 1 { 1 } else { -1 }).collect();
            let bank = SampleBank::from_signs(0, 3, 3, signs).unwrap();
            raw.push((crate::hutchinson::estimate_trace(&a, &bank).unwrap(), 1));
        }
        let brute = merge_ties(raw);
        assert_eq!(brute.len(), d.atoms.len());
        for (x, y) in brute.iter().zip(&d.atoms) {
            assert!((x.0 - y.0).abs() < 1e-11 && x.1 == y.1);
        }
    }

    #[test]
    fn enumeration_cap() {
        let a = random_sym(6, 1);
        assert!(matches!(exact_distribution(&a, 4), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn clopper_pearson_examples() {
        let u = clopper_pearson_upper(0, 100, 0.95).unwrap();
        assert!((u - (1.0 - 0.05f64.powf(0.01))).abs() < 1e-9);
        assert!((u - 0.029513).abs() < 1e-6);
        assert_eq!(clopper_pearson_upper(7, 7, 0.95).unwrap(), 1.0);
        let mut prev = 0.0;
        for f in 0..=50 {
            let u = clopper_pearson_upper(f, 50, 0.95).unwrap();
            assert!(u >= prev && u >= f as f64 / 50.0);
            prev = u;
        }
        assert!(clopper_pearson_upper(3, 2, 0.95).is_err());
    }

    #[test]
    fn diagonal_family_never_fails() {
        let fam = FnFamily::new(3, 1, |t: &[f64]| Ok(SymMatrix::from_diag(&[t[0], 1.0, -t[0]])));
        let space = FiniteSpace::new(vec![vec![1.0], vec![-2.0], vec![0.5]]).unwrap();
        let p = FiniteProblem::new(&fam, &space, &ZeroRegularizer).unwrap();
        let spec = ValidationSpec {
            n: 1,
            eps: 1e-9,
            delta: 0.1,
            trials: 50,
            master_seed: 4,
        };
        let r = run_validation(&p, &spec).unwrap();
        assert_eq!(r.failures, 0);
        assert!(r.pass && r.cp_pass);
    }

    #[test]
    fn harness_is_deterministic_and_can_fail() {
        let fam = AffineFamily::synthetic_dense(6, 2, 3, 1.0).unwrap();
        let mut rng = SplitMix64::new(1);
        let pts = (0..10).map(|_| vec![0.3 * rng.gaussian(), 0.3 * rng.gaussian()]).collect();
        let space = FiniteSpace::new(pts).unwrap();
        let p = FiniteProblem::new(&fam, &space, &ZeroRegularizer).unwrap();
        let spec = ValidationSpec {
            n: 1,
            eps: 0.01,
            delta: 0.1,
            trials: 40,
            master_seed: 77,
        };
        let a = run_validation(&p, &spec).unwrap();
        assert_eq!(a, run_validation(&p, &spec).unwrap());
        assert!(a.failures > 0);
        assert_eq!(a.records[5].seed, derive_seed(77, 5));
    }

    #[test]
    fn certificate_drives_validation() {
        let fam = AffineFamily::synthetic_dense(4, 1, 2, 0.2).unwrap();
        let space = FiniteSpace::new(vec![vec![-1.0], vec![0.0], vec![1.0]]).unwrap();
        let p = FiniteProblem::new(&fam, &space, &ZeroRegularizer).unwrap();
        let alpha = crate::family::offdiag_mass(
            &fam,
            &crate::family::ParameterSpace::Finite(space.clone()),
            None,
            crate::family::MassMode::Observed,
        )
        .unwrap();
        let cert = n_finite_hoeffding(
            Accuracy::new(0.5, 0.1).unwrap(),
            alpha.alpha_m,
            Cardinality::exact(3).unwrap(),
        )
        .unwrap();
        let r = validate_certificate(&p, &cert, 100, 9).unwrap();
        assert_eq!(r.n as u64, cert.n.unwrap());
        assert!(r.cp_pass, "{r:?}");
        assert_eq!(fam.dim(), 4);
    }

    proptest! {
        #[test]
        fn oracle_identities(seed: u64, m in 2usize..5, n in 1usize..4) {
            let a = random_sym(m, seed);
            let d = exact_distribution(&a, n).unwrap();
            let nf = a.offdiag().norm_f();
            let am = a.offdiag().norm_m();
            prop_assert!((d.mean() - a.trace()).abs() < 1e-12 * (1.0 + a.trace().abs()));
            prop_assert!((d.variance() - 2.0 * nf * nf / n as f64).abs() <= 1e-10 * (2.0 * nf * nf / n as f64));
            for (v, _) in d.support() {
                prop_assert!((v - a.trace()).abs() <= am + 1e-12);
            }
        }
    }
}
