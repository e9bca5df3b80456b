//! Parameter spaces, matrix families `θ → A(θ)`, and offdiagonal mass.

use alloc::format;
use alloc::vec::Vec;

use crate::linalg::SymMatrix;
use crate::nets::Net;
use crate::rng::SplitMix64;
use crate::{Error, Result};

/// Finite, ordered list of parameter vectors of one dimension.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "camelCase"))]
pub struct FiniteSpace {
    points: Vec<Vec<f64>>,
}

impl FiniteSpace {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let k = points
            .first()
            .ok_or_else(|| Error::invalid("finite parameter space is empty"))?
            .len();
        if k == 0 {
            return Err(Error::invalid("parameter vectors must be nonempty"));
        }
        for p in &points {
            if p.len() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    found: p.len(),
                });
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("parameter vector"));
            }
        }
        Ok(Self { points })
    }

    /// Points `(0), (1), …, (n−1)`, for families indexed by position.
    pub fn indices(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| alloc::vec![i as f64]).collect())
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn param_dim(&self) -> usize {
        self.points[0].len()
    }
}

/// Lower bound on one coordinate, intersected with a ball.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "camelCase"))]
pub struct CoordinateFloor {
    pub index: usize,
    pub min: f64,
}

/// Closed ball `{θ : ‖θ − center‖₂ ≤ radius}` in `R^K`, optionally cut by a
/// coordinate floor `θ[index] ≥ min`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "camelCase"))]
pub struct Sphere {
    center: Vec<f64>,
    radius: f64,
    floor: Option<CoordinateFloor>,
}

impl Sphere {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::invalid("sphere center must be nonempty"));
        }
        if center.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("sphere center"));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::invalid(format!("sphere radius must be positive, got {radius}")));
        }
        Ok(Self {
            center,
            radius,
            floor: None,
        })
    }

    /// Restricts the ball to `θ[index] ≥ min`. The center must satisfy the floor.
    pub fn with_floor(mut self, index: usize, min: f64) -> Result<Self> {
        if index >= self.center.len() {
            return Err(Error::invalid("floor index out of range"));
        }
        if self.center[index] < min {
            return Err(Error::invalid("sphere center violates the coordinate floor"));
        }
        self.floor = Some(CoordinateFloor { index, min });
        Ok(self)
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn floor(&self) -> Option<CoordinateFloor> {
        self.floor
    }

    pub fn param_dim(&self) -> usize {
        self.center.len()
    }

    pub fn contains(&self, theta: &[f64], tol: f64) -> bool {
        theta.len() == self.center.len()
            && dist(theta, &self.center) <= self.radius * (1.0 + tol) + tol
            && self
                .floor
                .is_none_or(|f| theta[f.index] >= f.min - tol * f.min.abs().max(1.0))
    }

    /// Euclidean projection onto the (possibly floored) ball.
    pub fn project(&self, theta: &[f64]) -> Vec<f64> {
        let p = project_ball(theta, &self.center, self.radius);
        match self.floor {
            Some(f) if p[f.index] < f.min => {
                // The floor is active at the projection: solve on the
                // hyperplane θ[index] = min, a ball of reduced radius.
                let h = f.min - self.center[f.index];
                let r = libm::sqrt((self.radius * self.radius - h * h).max(0.0));
                let mut c = self.center.clone();
                c[f.index] = f.min;
                let mut t = theta.to_vec();
                t[f.index] = f.min;
                let mut q = project_ball(&t, &c, r);
                q[f.index] = f.min;
                q
            }
            _ => p,
        }
    }
}

fn project_ball(theta: &[f64], center: &[f64], radius: f64) -> Vec<f64> {
    let d = dist(theta, center);
    if d <= radius {
        theta.to_vec()
    } else {
        theta
            .iter()
            .zip(center)
            .map(|(t, c)| c + (t - c) * (radius / d))
            .collect()
    }
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ParameterSpace {
    Finite(FiniteSpace),
    Sphere(Sphere),
}

impl ParameterSpace {
    pub fn param_dim(&self) -> usize {
        match self {
            ParameterSpace::Finite(f) => f.param_dim(),
            ParameterSpace::Sphere(s) => s.param_dim(),
        }
    }
}

/// Declared Lipschitz constants of `θ ↦ A(θ)` in the 2-, Frobenius and M-norms.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "camelCase"))]
pub struct Lipschitz {
    pub l2: Option<f64>,
    pub lf: Option<f64>,
    pub lm: Option<f64>,
    /// False when the constants come from sampling rather than a proof.
    pub certified: bool,
}

impl Lipschitz {
    pub fn certified(l2: f64, lf: f64, lm: f64) -> Self {
        Self {
            l2: Some(l2),
            lf: Some(lf),
            lm: Some(lm),
            certified: true,
        }
    }
}

/// A deterministic map `θ → A(θ)` into symmetric `m × m` matrices.
///
/// Implementations must be pure: two calls with the same `θ` return
/// bit-identical matrices.
pub trait MatrixFamily: Sync {
    /// Matrix dimension `m`.
    fn dim(&self) -> usize;

    /// Parameter dimension `K`.
    fn param_dim(&self) -> usize;

    fn eval(&self, theta: &[f64]) -> Result<SymMatrix>;

    fn lipschitz(&self) -> Lipschitz {
        Lipschitz::default()
    }
}

impl<T: MatrixFamily + ?Sized> MatrixFamily for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn param_dim(&self) -> usize {
        (**self).param_dim()
    }
    fn eval(&self, theta: &[f64]) -> Result<SymMatrix> {
        (**self).eval(theta)
    }
    fn lipschitz(&self) -> Lipschitz {
        (**self).lipschitz()
    }
}

pub(crate) fn eval_checked<F: MatrixFamily + ?Sized>(family: &F, theta: &[f64]) -> Result<SymMatrix> {
    if theta.len() != family.param_dim() {
        return Err(Error::DimensionMismatch {
            expected: family.param_dim(),
            found: theta.len(),
        });
    }
    let a = family.eval(theta)?;
    a.check_dim(family.dim())?;
    Ok(a)
}

/// Family from a closure.
pub struct FnFamily<F> {
    m: usize,
    k: usize,
    f: F,
    lipschitz: Lipschitz,
}

impl<F> FnFamily<F>
where
    F: Fn(&[f64]) -> Result<SymMatrix> + Sync,
{
    pub fn new(m: usize, k: usize, f: F) -> Self {
        Self {
            m,
            k,
            f,
            lipschitz: Lipschitz::default(),
        }
    }

    pub fn with_lipschitz(mut self, lipschitz: Lipschitz) -> Self {
        self.lipschitz = lipschitz;
        self
    }
}

impl<F> MatrixFamily for FnFamily<F>
where
    F: Fn(&[f64]) -> Result<SymMatrix> + Sync,
{
    fn dim(&self) -> usize {
        self.m
    }
    fn param_dim(&self) -> usize {
        self.k
    }
    fn eval(&self, theta: &[f64]) -> Result<SymMatrix> {
        (self.f)(theta)
    }
    fn lipschitz(&self) -> Lipschitz {
        self.lipschitz
    }
}

/// `A(θ) = A₀ + Σₖ θₖ Aₖ`.
///
/// Lipschitz constants are exact upper bounds: for every norm,
/// `‖A(θ) − A(φ)‖ ≤ ‖θ − φ‖₂ · (Σₖ ‖Aₖ‖²)^{1/2}` by Cauchy–Schwarz.
#[derive(Debug, Clone)]
pub struct AffineFamily {
    base: SymMatrix,
    terms: Vec<SymMatrix>,
    lipschitz: Lipschitz,
}

impl AffineFamily {
    pub fn new(base: SymMatrix, terms: Vec<SymMatrix>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::invalid("affine family needs at least one term"));
        }
        for t in &terms {
            base.check_dim(t.dim())?;
        }
        let mut s2 = 0.0;
        let mut sf = 0.0;
        let mut sm = 0.0;
        for t in &terms {
            let n2 = t.norm_2()?;
            s2 += n2 * n2;
            sf += t.norm_f() * t.norm_f();
            sm += t.norm_m() * t.norm_m();
        }
        Ok(Self {
            base,
            terms,
            lipschitz: Lipschitz::certified(libm::sqrt(s2), libm::sqrt(sf), libm::sqrt(sm)),
        })
    }

    /// Dense random family: every entry of `A₀` and of the `Aₖ` is
    /// `scale · N(0, 1)`.
    pub fn synthetic_dense(m: usize, k: usize, seed: u64, scale: f64) -> Result<Self> {
        let mut rng = SplitMix64::new(seed);
        let mut draw = || SymMatrix::from_lower(m, |_, _| scale * rng.gaussian());
        let base = draw();
        let terms = (0..k).map(|_| draw()).collect();
        Self::new(base, terms)
    }

    /// Diagonally dominant random family: `A₀` has diagonal `m + U(0,1)` and
    /// offdiagonal entries `offdiag_scale · N(0,1)`; each `Aₖ` has diagonal
    /// `N(0,1)` and offdiagonal `offdiag_scale · N(0,1)`.
    pub fn synthetic_diagdom(m: usize, k: usize, seed: u64, offdiag_scale: f64) -> Result<Self> {
        let mut rng = SplitMix64::new(seed);
        let base = SymMatrix::from_lower(m, |i, j| {
            if i == j {
                m as f64 + rng.next_f64()
            } else {
                offdiag_scale * rng.gaussian()
            }
        });
        let terms = (0..k)
            .map(|_| {
                SymMatrix::from_lower(m, |i, j| {
                    if i == j {
                        rng.gaussian()
                    } else {
                        offdiag_scale * rng.gaussian()
                    }
                })
            })
            .collect();
        Self::new(base, terms)
    }

    pub fn base(&self) -> &SymMatrix {
        &self.base
    }

    pub fn terms(&self) -> &[SymMatrix] {
        &self.terms
    }
}

impl MatrixFamily for AffineFamily {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn param_dim(&self) -> usize {
        self.terms.len()
    }

    fn eval(&self, theta: &[f64]) -> Result<SymMatrix> {
        if theta.len() != self.terms.len() {
            return Err(Error::DimensionMismatch {
                expected: self.terms.len(),
                found: theta.len(),
            });
        }
        let mut a = self.base.clone();
        for (t, term) in theta.iter().zip(&self.terms) {
            a = a.axpy(*t, term)?;
        }
        Ok(a)
    }

    fn lipschitz(&self) -> Lipschitz {
        self.lipschitz
    }
}

/// Family over a list of matrices, indexed by `θ = (i)`.
#[derive(Debug, Clone)]
pub struct ListFamily {
    matrices: Vec<SymMatrix>,
}

impl ListFamily {
    pub fn new(matrices: Vec<SymMatrix>) -> Result<Self> {
        let m = matrices
            .first()
            .ok_or_else(|| Error::invalid("matrix list is empty"))?
            .dim();
        for a in &matrices {
            a.check_dim(m)?;
        }
        Ok(Self { matrices })
    }

    pub fn matrices(&self) -> &[SymMatrix] {
        &self.matrices
    }

    /// The matching index space `{(0), …, (n−1)}`.
    pub fn space(&self) -> FiniteSpace {
        FiniteSpace::indices(self.matrices.len()).expect("list is nonempty")
    }
}

impl MatrixFamily for ListFamily {
    fn dim(&self) -> usize {
        self.matrices[0].dim()
    }

    fn param_dim(&self) -> usize {
        1
    }

    fn eval(&self, theta: &[f64]) -> Result<SymMatrix> {
        let i = theta[0];
        if i < 0.0 || libm::floor(i) != i || i as usize >= self.matrices.len() {
            return Err(Error::invalid(format!("list index {i} out of range")));
        }
        Ok(self.matrices[i as usize].clone())
    }
}

/// Offdiagonal norms `‖Ā‖₂, ‖Ā‖_F, ‖Ā‖_M` of one matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "camelCase"))]
pub struct OffdiagNorms {
    pub two: f64,
    pub frobenius: f64,
    pub m_norm: f64,
}

impl OffdiagNorms {
    pub fn of(a: &SymMatrix) -> Result<Self> {
        let ab = a.offdiag();
        Ok(Self {
            two: ab.norm_2()?,
            frobenius: ab.norm_f(),
            m_norm: ab.norm_m(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "kebab-case"))]
pub enum MassProvenance {
    /// Exact maximum over a finite space.
    ExactFinite,
    /// Maximum over net points; a lower bound on the supremum.
    NetLowerBound,
    /// Net maximum inflated by Lipschitz constants; a certified upper bound.
    NetLipschitzUpper { eta: f64 },
}

/// `α_ξ = sup_θ ‖Ā(θ)‖_ξ` for `ξ ∈ {2, F, M}`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "camelCase"))]
pub struct OffdiagMass {
    pub alpha2: f64,
    pub alpha_f: f64,
    pub alpha_m: f64,
    pub provenance: MassProvenance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MassMode {
    /// Net maximum (non-certified on spheres).
    Observed,
    /// Lipschitz-inflated upper bound (certified on spheres).
    CertifiedUpper,
}

fn max_norms<'a, F: MatrixFamily + ?Sized>(
    family: &F,
    points: impl Iterator<Item = &'a Vec<f64>>,
) -> Result<(f64, f64, f64)> {
    let mut out = (0.0f64, 0.0f64, 0.0f64);
    for p in points {
        let n = OffdiagNorms::of(&eval_checked(family, p)?)?;
        out.0 = out.0.max(n.two);
        out.1 = out.1.max(n.frobenius);
        out.2 = out.2.max(n.m_norm);
    }
    Ok(out)
}

/// Offdiagonal mass of a family over a space.
///
/// Finite spaces give the exact maximum regardless of `mode`. Spheres need a
/// net; [`MassMode::CertifiedUpper`] adds `L_M·η`, `L_F·η` and `2·L₂·η` to the
/// net maxima of the M-, Frobenius and 2-norms (the factor 2 because
/// `‖B̄‖₂ ≤ 2‖B‖₂`).
pub fn offdiag_mass<F: MatrixFamily + ?Sized>(
    family: &F,
    space: &ParameterSpace,
    net: Option<&Net>,
    mode: MassMode,
) -> Result<OffdiagMass> {
    match space {
        ParameterSpace::Finite(fs) => {
            let (a2, af, am) = max_norms(family, fs.points().iter())?;
            Ok(OffdiagMass {
                alpha2: a2,
                alpha_f: af,
                alpha_m: am,
                provenance: MassProvenance::ExactFinite,
            })
        }
        ParameterSpace::Sphere(sphere) => {
            let net = net.ok_or(Error::MissingInput(
                "a net is required to bound offdiagonal mass over a sphere",
            ))?;
            if net.sphere() != sphere {
                return Err(Error::invalid("net was built for a different sphere"));
            }
            let (a2, af, am) = max_norms(family, net.points().iter())?;
            match mode {
                MassMode::Observed => Ok(OffdiagMass {
                    alpha2: a2,
                    alpha_f: af,
                    alpha_m: am,
                    provenance: MassProvenance::NetLowerBound,
                }),
                MassMode::CertifiedUpper => {
                    let lip = family.lipschitz();
                    let eta = net.eta();
                    let l2 = lip.l2.ok_or(Error::MissingInput("Lipschitz constant L2"))?;
                    let lf = lip.lf.ok_or(Error::MissingInput("Lipschitz constant LF"))?;
                    let lm = lip.lm.ok_or(Error::MissingInput("Lipschitz constant LM"))?;
                    Ok(OffdiagMass {
                        alpha2: a2 + 2.0 * l2 * eta,
                        alpha_f: af + lf * eta,
                        alpha_m: am + lm * eta,
                        provenance: MassProvenance::NetLipschitzUpper { eta },
                    })
                }
            }
        }
    }
}

/// Sampled lower estimates of the Lipschitz constants. Never certified.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "camelCase"))]
pub struct LipschitzEstimate {
    pub l2: f64,
    pub lf: f64,
    pub lm: f64,
    pub pairs: usize,
}

impl LipschitzEstimate {
    pub fn as_lipschitz(&self) -> Lipschitz {
        Lipschitz {
            l2: Some(self.l2),
            lf: Some(self.lf),
            lm: Some(self.lm),
            certified: false,
        }
    }
}

/// Maximum of `‖A(θ) − A(φ)‖_ξ / ‖θ − φ‖₂` over `pair_count` random pairs
/// drawn uniformly from the sphere.
pub fn estimate_lipschitz<F: MatrixFamily + ?Sized>(
    family: &F,
    sphere: &Sphere,
    pair_count: usize,
    seed: u64,
) -> Result<LipschitzEstimate> {
    let mut rng = SplitMix64::new(seed);
    let mut est = LipschitzEstimate {
        l2: 0.0,
        lf: 0.0,
        lm: 0.0,
        pairs: pair_count,
    };
    for _ in 0..pair_count {
        let a = sphere.project(&rng.in_ball(sphere.center(), sphere.radius()));
        let b = sphere.project(&rng.in_ball(sphere.center(), sphere.radius()));
        let d = dist(&a, &b);
        if d == 0.0 {
            continue;
        }
        let diff = eval_checked(family, &a)?.sub(&eval_checked(family, &b)?)?;
        est.l2 = est.l2.max(diff.norm_2()? / d);
        est.lf = est.lf.max(diff.norm_f() / d);
        est.lm = est.lm.max(diff.norm_m() / d);
    }
    Ok(est)
}
