//! Sampling-amount certificates and single-matrix tail bounds.
//!
//! Every certificate is `N = max(1, ceil(bound))` for a real-valued `bound`
//! computed from a [`CertificateInputs`] record, so a certificate can be
//! replayed from its inputs alone.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::family::Sphere;
use crate::linalg::SymMatrix;
use crate::nets::{covering_number_sphere, CoveringNumber};
use crate::special::gamma;
use crate::{Error, Result};

/// `4·e⁻²`, the largest `δ` the chaining mixed bound admits.
pub const CHAIN_MIXED_DELTA_MAX: f64 = 0.541_341_132_946_450_9;

/// Default constant of the sphere chaining subgaussian bound.
pub const DEFAULT_C_SUBGAUSS: f64 = 144.0;

/// Default constant of the sphere chaining mixed bound.
pub const DEFAULT_C_MIXED: f64 = 4096.0;

/// Target accuracy: backward error at most `eps` with probability `1 − delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "camelCase"))]
pub struct Accuracy {
    pub eps: f64,
    pub delta: f64,
}

impl Accuracy {
    /// `eps > 0` and `0 < delta < 1`; bound families add narrower ranges.
    pub fn new(eps: f64, delta: f64) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::invalid(format!("eps must be positive, got {eps}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")));
        }
        Ok(Self { eps, delta })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum BoundFamily {
    FiniteHoeffding,
    FiniteMixed,
    NetHoeffding,
    NetMixed,
    SphereHoeffding,
    SphereMixed,
    ChainSubgauss,
    ChainMixed,
    SphereChainSubgauss,
    SphereChainMixed,
}

impl BoundFamily {
    pub const ALL: [BoundFamily; 10] = [
        BoundFamily::FiniteHoeffding,
        BoundFamily::FiniteMixed,
        BoundFamily::NetHoeffding,
        BoundFamily::NetMixed,
        BoundFamily::SphereHoeffding,
        BoundFamily::SphereMixed,
        BoundFamily::ChainSubgauss,
        BoundFamily::ChainMixed,
        BoundFamily::SphereChainSubgauss,
        BoundFamily::SphereChainMixed,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BoundFamily::FiniteHoeffding => "finite-hoeffding",
            BoundFamily::FiniteMixed => "finite-mixed",
            BoundFamily::NetHoeffding => "net-hoeffding",
            BoundFamily::NetMixed => "net-mixed",
            BoundFamily::SphereHoeffding => "sphere-hoeffding",
            BoundFamily::SphereMixed => "sphere-mixed",
            BoundFamily::ChainSubgauss => "chain-subgauss",
            BoundFamily::ChainMixed => "chain-mixed",
            BoundFamily::SphereChainSubgauss => "sphere-chain-subgauss",
            BoundFamily::SphereChainMixed => "sphere-chain-mixed",
        }
    }

    /// Whether the bound uses only the Hoeffding-type mass `α_M`.
    pub fn is_hoeffding(self) -> bool {
        matches!(
            self,
            BoundFamily::FiniteHoeffding
                | BoundFamily::NetHoeffding
                | BoundFamily::SphereHoeffding
                | BoundFamily::ChainSubgauss
                | BoundFamily::SphereChainSubgauss
        )
    }

    /// Bounds whose accuracy range is `0 < eps < 1`.
    fn needs_eps_below_one(self) -> bool {
        matches!(
            self,
            BoundFamily::FiniteHoeffding
                | BoundFamily::FiniteMixed
                | BoundFamily::NetHoeffding
                | BoundFamily::NetMixed
                | BoundFamily::SphereHoeffding
                | BoundFamily::SphereMixed
        )
    }
}

impl fmt::Display for BoundFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoundFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BoundFamily::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown bound family '{s}'")))
    }
}

/// Size of a finite parameter space, kept in log form so huge design
/// spaces stay representable.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "camelCase"))]
pub struct Cardinality {
    pub ln: f64,
    pub exact: Option<u64>,
}

impl Cardinality {
    pub fn exact(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("cardinality must be at least 1"));
        }
        Ok(Self {
            ln: libm::log(n as f64),
            exact: Some(n),
        })
    }

    pub fn from_ln(ln: f64) -> Result<Self> {
        if !(ln >= 0.0) || !ln.is_finite() {
            return Err(Error::invalid("log cardinality must be finite and nonnegative"));
        }
        Ok(Self { ln, exact: None })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "kebab-case"))]
pub enum SurrogateMethod {
    UserSupplied,
    DudleySphere { c_dudley: f64 },
}

/// Upper bounds on the chaining functionals `γ₂(Θ, d_M)`, `γ₂(Θ, d_F)` and
/// `γ₁(Θ, d₂)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "camelCase"))]
pub struct TalagrandSurrogate {
    pub gamma2_dm: Option<f64>,
    pub gamma2_df: Option<f64>,
    pub gamma1_d2: Option<f64>,
    pub method: SurrogateMethod,
}

impl TalagrandSurrogate {
    pub fn user(gamma2_dm: Option<f64>, gamma2_df: Option<f64>, gamma1_d2: Option<f64>) -> Result<Self> {
        for g in [gamma2_dm, gamma2_df, gamma1_d2].into_iter().flatten() {
            if !(g >= 0.0) || !g.is_finite() {
                return Err(Error::invalid("chaining surrogates must be finite and nonnegative"));
            }
        }
        Ok(Self {
            gamma2_dm,
            gamma2_df,
            gamma1_d2,
            method: SurrogateMethod::UserSupplied,
        })
    }
}

/// Dudley-integral surrogates for a radius-`B` ball in `R^K` under metrics
/// `L·‖·‖₂`.
///
/// With `ln S(η) ≤ K ln(a/η)` on `(0, a)` and `∫₀^a (ln(a/η))^{1/p} dη =
/// Γ(1/p + 1)·a`, the integrals are `Γ(3/2)·3BL_M·√K`, `Γ(3/2)·3BL_F·√K` and
/// `Γ(2)·6BL₂·K`, all scaled by `c_dudley`. Missing constants give missing
/// surrogates.
pub fn dudley_sphere_surrogates(
    k: usize,
    b: f64,
    lm: Option<f64>,
    lf: Option<f64>,
    l2: Option<f64>,
    c_dudley: f64,
) -> Result<TalagrandSurrogate> {
    if !(c_dudley > 0.0) || !c_dudley.is_finite() {
        return Err(Error::invalid("C_dudley must be positive"));
    }
    check_sphere_dims(k, b)?;
    for l in [lm, lf, l2].into_iter().flatten() {
        check_nonneg("Lipschitz constant", l)?;
    }
    let kf = k as f64;
    let g32 = gamma(1.5);
    Ok(TalagrandSurrogate {
        gamma2_dm: lm.map(|l| c_dudley * g32 * 3.0 * b * l * libm::sqrt(kf)),
        gamma2_df: lf.map(|l| c_dudley * g32 * 3.0 * b * l * libm::sqrt(kf)),
        gamma1_d2: l2.map(|l| c_dudley * gamma(2.0) * 6.0 * b * l * kf),
        method: SurrogateMethod::DudleySphere { c_dudley },
    })
}

/// The `c_dudley` for which the Dudley path of the chaining subgaussian bound
/// equals the sphere chaining subgaussian bound with `C = 144`: `1/(3Γ(3/2))`.
pub fn matching_dudley_constant() -> f64 {
    1.0 / (3.0 * gamma(1.5))
}

/// `∫₀^a (ln(a/x))^{1/p} dx = Γ(1/p + 1)·a`.
pub fn log_power_integral(a: f64, p: f64) -> f64 {
    gamma(1.0 / p + 1.0) * a
}

/// `ln Σ_{k=0}^{terms−1} 2^{2^{k+1}} exp(−2^k u^p)`, evaluated in log space.
///
/// The chaining argument needs this to be at most `−u^p/2`.
pub fn chaining_tail_sum_ln(u: f64, p: f64, terms: u32) -> f64 {
    let up = libm::pow(u, p);
    let logs: Vec<f64> = (0..terms)
        .map(|k| {
            let two_k = libm::exp2(k as f64);
            2.0 * two_k * core::f64::consts::LN_2 - two_k * up
        })
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + libm::log(logs.iter().map(|l| libm::exp(l - max)).sum::<f64>())
}

/// Every quantity a certificate consumed.
#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "camelCase"))]
pub struct CertificateInputs {
    pub eps: f64,
    pub delta: f64,
    pub alpha_2: Option<f64>,
    pub alpha_f: Option<f64>,
    pub alpha_m: Option<f64>,
    pub cardinality: Option<Cardinality>,
    /// Matrix dimension.
    pub m: Option<usize>,
    /// Parameter dimension.
    pub k: Option<usize>,
    /// Sphere radius.
    pub b: Option<f64>,
    pub l2: Option<f64>,
    pub lf: Option<f64>,
    pub lm: Option<f64>,
    pub surrogate: Option<TalagrandSurrogate>,
    pub const_c: Option<f64>,
    /// Net scale and covering number, filled in by the net bounds.
    pub eta: Option<f64>,
    pub covering: Option<CoveringNumber>,
}

impl CertificateInputs {
    pub fn new(acc: Accuracy) -> Self {
        Self {
            eps: acc.eps,
            delta: acc.delta,
            ..Self::default()
        }
    }

    pub fn accuracy(&self) -> Result<Accuracy> {
        Accuracy::new(self.eps, self.delta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Convention {
    /// All constants are explicit.
    FullySpecified,
    /// Depends on a user-chosen absolute constant.
    ConstantConvention,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "camelCase"))]
pub struct Certificate {
    pub family: BoundFamily,
    /// `max(1, ceil(bound))`, or `None` when it exceeds `2^63`.
    pub n: Option<u64>,
    /// Real-valued bound before the ceiling.
    pub bound: f64,
    /// `ln N`, finite even when `N` is saturated.
    pub ln_n: f64,
    pub convention: Convention,
    pub inputs: CertificateInputs,
    pub formula_trace: Vec<String>,
}

impl Certificate {
    /// `N` as a usable sample count.
    pub fn samples(&self) -> Result<usize> {
        self.n
            .and_then(|n| usize::try_from(n).ok())
            .ok_or(Error::CapExceeded {
                what: "sample",
                count: self.bound,
                cap: usize::MAX as u64,
            })
    }

    /// Recomputes the certificate from its inputs.
    pub fn replay(&self) -> Result<Certificate> {
        compute(self.family, &self.inputs)
    }

    /// Whether replaying reproduces `N` and the bound bit for bit.
    pub fn verify_replay(&self) -> Result<bool> {
        let r = self.replay()?;
        Ok(r.n == self.n && r.bound.to_bits() == self.bound.to_bits())
    }
}

fn hyp(bound: BoundFamily, message: String) -> Error {
    Error::Hypothesis {
        bound: bound.as_str(),
        message,
    }
}

fn check_nonneg(what: &'static str, x: f64) -> Result<()> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::invalid(format!("{what} must be finite and nonnegative, got {x}")));
    }
    Ok(())
}

fn check_sphere_dims(k: usize, b: f64) -> Result<()> {
    if k == 0 {
        return Err(Error::invalid("parameter dimension K must be at least 1"));
    }
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::invalid("sphere radius B must be positive"));
    }
    Ok(())
}

fn need<T: Copy>(x: Option<T>, what: &'static str) -> Result<T> {
    x.ok_or(Error::MissingInput(what))
}

fn need_alpha(x: Option<f64>, what: &'static str) -> Result<f64> {
    let a = need(x, what)?;
    check_nonneg(what, a)?;
    Ok(a)
}

fn need_positive(x: Option<f64>, what: &'static str) -> Result<f64> {
    let a = need(x, what)?;
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::invalid(format!("{what} must be positive, got {a}")));
    }
    Ok(a)
}

/// Evaluates the bound `family` on `inputs`.
pub fn compute(family: BoundFamily, inputs: &CertificateInputs) -> Result<Certificate> {
    let acc = inputs.accuracy()?;
    let (eps, delta) = (acc.eps, acc.delta);
    let is_sphere = matches!(family, BoundFamily::SphereHoeffding | BoundFamily::SphereMixed);
    if family.needs_eps_below_one() && !is_sphere && eps >= 1.0 {
        return Err(hyp(family, format!("requires 0 < eps < 1, got eps = {eps}")));
    }
    let mut inputs = inputs.clone();
    let mut trace = Vec::new();
    let mut convention = Convention::FullySpecified;
    let bound = match family {
        BoundFamily::FiniteHoeffding => {
            let am = need_alpha(inputs.alpha_m, "alphaM")?;
            let card = need(inputs.cardinality, "cardinality")?;
            let ln_term = card.ln - libm::log(delta);
            trace.push("N = max(1, ceil(8/eps^2 * alphaM^2 * ln(card/delta)))".into());
            trace.push(format!(
                "  eps = {eps}, delta = {delta}, alphaM = {am}, ln(card) = {}",
                card.ln
            ));
            let bound = 8.0 / (eps * eps) * am * am * ln_term;
            trace.push(format!("  8/eps^2 * alphaM^2 = {}, ln(card/delta) = {ln_term}", 8.0 / (eps * eps) * am * am));
            bound
        }
        BoundFamily::FiniteMixed => {
            let af = need_alpha(inputs.alpha_f, "alphaF")?;
            let a2 = need_alpha(inputs.alpha_2, "alpha2")?;
            let card = need(inputs.cardinality, "cardinality")?;
            let ln_term = libm::log(2.0) + card.ln - libm::log(delta);
            let coeff = 16.0 / (eps * eps) * (2.0 * af * af + eps * a2);
            trace.push("N = max(1, ceil(16/eps^2 * (2 alphaF^2 + eps alpha2) * ln(2 card/delta)))".into());
            trace.push(format!(
                "  eps = {eps}, delta = {delta}, alphaF = {af}, alpha2 = {a2}, ln(card) = {}",
                card.ln
            ));
            trace.push(format!("  16/eps^2 * (2 alphaF^2 + eps alpha2) = {coeff}, ln(2 card/delta) = {ln_term}"));
            let bound = coeff * ln_term;
            if let Some(am) = inputs.alpha_m {
                let h = 8.0 / (eps * eps) * am * am * (card.ln - libm::log(delta));
                trace.push(format!(
                    "  comparison: finite-hoeffding with alphaM = {am} gives {h} (mixed is {})",
                    if bound < h { "smaller" } else { "not smaller" }
                ));
            }
            bound
        }
        BoundFamily::NetHoeffding | BoundFamily::NetMixed => {
            let m = need(inputs.m, "matrix dimension m")?;
            let k = need(inputs.k, "parameter dimension K")?;
            let b = need(inputs.b, "sphere radius B")?;
            check_sphere_dims(k, b)?;
            let l2 = need_positive(inputs.l2, "Lipschitz constant L2")?;
            let eta = eps / (4.0 * m as f64 * l2);
            let cov = covering_number_sphere(b, k, eta)?;
            inputs.eta = Some(eta);
            inputs.covering = Some(cov);
            trace.push(format!(
                "eta = eps/(4 m L2) = {eta}; ln gamma = max(K ln(3B/eta), 0) = {} (gamma = {})",
                cov.ln,
                cov.count.map_or_else(|| String::from("saturated"), |c| format!("{c}"))
            ));
            if family == BoundFamily::NetHoeffding {
                let am = need_alpha(inputs.alpha_m, "alphaM")?;
                let ln_term = cov.ln - libm::log(delta);
                trace.push("N = max(1, ceil(8 alphaM^2/eps^2 * (ln gamma - ln delta)))".into());
                trace.push(format!("  alphaM = {am}, ln(gamma/delta) = {ln_term}"));
                8.0 * am * am / (eps * eps) * ln_term
            } else {
                let af = need_alpha(inputs.alpha_f, "alphaF")?;
                let a2 = need_alpha(inputs.alpha_2, "alpha2")?;
                let ln_term = cov.ln + libm::log(2.0 / delta);
                trace.push("N = max(1, ceil(16 (2 alphaF^2 + eps alpha2)/eps^2 * (ln gamma + ln(2/delta))))".into());
                trace.push(format!("  alphaF = {af}, alpha2 = {a2}, ln(2 gamma/delta) = {ln_term}"));
                16.0 * (2.0 * af * af + eps * a2) / (eps * eps) * ln_term
            }
        }
        BoundFamily::SphereHoeffding | BoundFamily::SphereMixed => {
            let m = need(inputs.m, "matrix dimension m")?;
            let k = need(inputs.k, "parameter dimension K")?;
            let b = need(inputs.b, "sphere radius B")?;
            check_sphere_dims(k, b)?;
            let l2 = need_positive(inputs.l2, "Lipschitz constant L2")?;
            let edge = 12.0 * m as f64 * l2 * b;
            if eps >= edge {
                return Err(hyp(
                    family,
                    format!("requires eps < 12 m L2 B = {edge}; use the net bound instead"),
                ));
            }
            if eps >= 1.0 {
                return Err(hyp(family, format!("requires 0 < eps < 1, got eps = {eps}")));
            }
            let k_term = k as f64 * libm::log(edge / eps);
            trace.push(format!("K ln(12 m L2 B/eps) = {k} * ln({edge}/{eps}) = {k_term}"));
            if family == BoundFamily::SphereHoeffding {
                let am = need_alpha(inputs.alpha_m, "alphaM")?;
                trace.push("N = max(1, ceil(8 alphaM^2/eps^2 * (K ln(12 m L2 B/eps) - ln delta)))".into());
                trace.push(format!("  alphaM = {am}, delta = {delta}"));
                8.0 * am * am / (eps * eps) * (k_term - libm::log(delta))
            } else {
                let af = need_alpha(inputs.alpha_f, "alphaF")?;
                let a2 = need_alpha(inputs.alpha_2, "alpha2")?;
                trace.push(
                    "N = max(1, ceil(16 (2 alphaF^2 + eps alpha2)/eps^2 * (K ln(12 m L2 B/eps) + ln(2/delta))))".into(),
                );
                trace.push(format!("  alphaF = {af}, alpha2 = {a2}, delta = {delta}"));
                16.0 * (2.0 * af * af + eps * a2) / (eps * eps) * (k_term + libm::log(2.0 / delta))
            }
        }
        BoundFamily::ChainSubgauss => {
            let am = need_alpha(inputs.alpha_m, "alphaM")?;
            let s = need(inputs.surrogate, "chaining surrogate")?;
            let g = need(s.gamma2_dm, "surrogate gamma2(d_M)")?;
            check_nonneg("gamma2(d_M)", g)?;
            if matches!(s.method, SurrogateMethod::DudleySphere { .. }) {
                convention = Convention::ConstantConvention;
            }
            let mx = (g * g).max(am * am);
            trace.push("N = max(1, ceil(144/eps^2 * ln(2/delta) * max(gamma2^2, alphaM^2)))".into());
            trace.push(format!("  gamma2 = {g}, alphaM = {am}, max = {mx}, ln(2/delta) = {}", libm::log(2.0 / delta)));
            144.0 / (eps * eps) * libm::log(2.0 / delta) * mx
        }
        BoundFamily::ChainMixed => {
            if delta > CHAIN_MIXED_DELTA_MAX {
                return Err(hyp(family, format!("requires delta <= 4 exp(-2) = {CHAIN_MIXED_DELTA_MAX}, got {delta}")));
            }
            let af = need_alpha(inputs.alpha_f, "alphaF")?;
            let a2 = need_alpha(inputs.alpha_2, "alpha2")?;
            let s = need(inputs.surrogate, "chaining surrogate")?;
            let g1 = need(s.gamma1_d2, "surrogate gamma1(d_2)")?;
            let g2 = need(s.gamma2_df, "surrogate gamma2(d_F)")?;
            check_nonneg("gamma1(d_2)", g1)?;
            check_nonneg("gamma2(d_F)", g2)?;
            if matches!(s.method, SurrogateMethod::DudleySphere { .. }) {
                convention = Convention::ConstantConvention;
            }
            let mx = (eps * g1).max(eps * a2).max(g2 * g2).max(af * af);
            trace.push("N = max(1, ceil(4096/eps^2 * ln(4/delta) * max(eps gamma1, eps alpha2, gamma2^2, alphaF^2)))".into());
            trace.push(format!(
                "  gamma1 = {g1}, gamma2 = {g2}, alphaF = {af}, alpha2 = {a2}, max = {mx}, ln(4/delta) = {}",
                libm::log(4.0 / delta)
            ));
            4096.0 / (eps * eps) * libm::log(4.0 / delta) * mx
        }
        BoundFamily::SphereChainSubgauss => {
            convention = Convention::ConstantConvention;
            let am = need_alpha(inputs.alpha_m, "alphaM")?;
            let k = need(inputs.k, "parameter dimension K")?;
            let b = need(inputs.b, "sphere radius B")?;
            check_sphere_dims(k, b)?;
            let lm = need_alpha(inputs.lm, "Lipschitz constant LM")?;
            let c = need_positive(Some(inputs.const_c.unwrap_or(DEFAULT_C_SUBGAUSS)), "constant C")?;
            inputs.const_c = Some(c);
            let kt = k as f64 * (b * lm) * (b * lm);
            let mx = (am * am).max(kt);
            trace.push("N = max(1, ceil(C/eps^2 * ln(2/delta) * max(alphaM^2, K (B LM)^2)))".into());
            trace.push(format!("  C = {c} (user convention), alphaM = {am}, K (B LM)^2 = {kt}, max = {mx}"));
            let bound = c / (eps * eps) * libm::log(2.0 / delta) * mx;
            if c == DEFAULT_C_SUBGAUSS {
                let cd = matching_dudley_constant();
                let s = dudley_sphere_surrogates(k, b, Some(lm), None, None, cd)?;
                let g = s.gamma2_dm.unwrap_or(0.0);
                let d = 144.0 / (eps * eps) * libm::log(2.0 / delta) * (g * g).max(am * am);
                trace.push(format!(
                    "  cross-check: chain-subgauss with Dudley surrogate (C_dudley = {cd}) gives {d} (relative gap {})",
                    if bound > 0.0 { (d - bound).abs() / bound } else { (d - bound).abs() }
                ));
            }
            bound
        }
        BoundFamily::SphereChainMixed => {
            convention = Convention::ConstantConvention;
            let af = need_alpha(inputs.alpha_f, "alphaF")?;
            let a2 = need_alpha(inputs.alpha_2, "alpha2")?;
            let k = need(inputs.k, "parameter dimension K")?;
            let b = need(inputs.b, "sphere radius B")?;
            check_sphere_dims(k, b)?;
            let lf = need_alpha(inputs.lf, "Lipschitz constant LF")?;
            let l2 = need_alpha(inputs.l2, "Lipschitz constant L2")?;
            let c = need_positive(Some(inputs.const_c.unwrap_or(DEFAULT_C_MIXED)), "constant C")?;
            inputs.const_c = Some(c);
            let kf = k as f64;
            let mx = (af * af)
                .max(eps * a2)
                .max(kf * (b * lf) * (b * lf))
                .max(eps * kf * b * l2);
            trace.push("N = max(1, ceil(C/eps^2 * ln(2/delta) * max(alphaF^2, eps alpha2, K (B LF)^2, eps K B L2)))".into());
            trace.push(format!("  C = {c} (user convention), alphaF = {af}, alpha2 = {a2}, LF = {lf}, L2 = {l2}, max = {mx}"));
            c / (eps * eps) * libm::log(2.0 / delta) * mx
        }
    };
    finish(family, inputs, bound, trace, convention)
}

fn finish(
    family: BoundFamily,
    inputs: CertificateInputs,
    bound: f64,
    mut trace: Vec<String>,
    convention: Convention,
) -> Result<Certificate> {
    if bound.is_nan() || bound == f64::INFINITY {
        return Err(Error::NonFinite("certificate bound"));
    }
    let bound = bound.max(0.0);
    let c = libm::ceil(bound).max(1.0);
    let n = (c < 9.223_372_036_854_776e18).then_some(c as u64);
    match n {
        Some(n) => trace.push(format!("  bound = {bound} -> N = {n}")),
        None => trace.push(format!("  bound = {bound} -> N saturated, ln N = {}", libm::log(c))),
    }
    Ok(Certificate {
        family,
        n,
        bound,
        ln_n: libm::log(c),
        convention,
        inputs,
        formula_trace: trace,
    })
}

pub fn n_finite_hoeffding(acc: Accuracy, alpha_m: f64, card: Cardinality) -> Result<Certificate> {
    compute(
        BoundFamily::FiniteHoeffding,
        &CertificateInputs {
            alpha_m: Some(alpha_m),
            cardinality: Some(card),
            ..CertificateInputs::new(acc)
        },
    )
}

pub fn n_finite_mixed(acc: Accuracy, alpha_f: f64, alpha_2: f64, card: Cardinality) -> Result<Certificate> {
    compute(
        BoundFamily::FiniteMixed,
        &CertificateInputs {
            alpha_f: Some(alpha_f),
            alpha_2: Some(alpha_2),
            cardinality: Some(card),
            ..CertificateInputs::new(acc)
        },
    )
}

pub fn n_net_hoeffding(acc: Accuracy, alpha_m: f64, m: usize, l2: f64, sphere: &Sphere) -> Result<Certificate> {
    compute(
        BoundFamily::NetHoeffding,
        &CertificateInputs {
            alpha_m: Some(alpha_m),
            m: Some(m),
            l2: Some(l2),
            k: Some(sphere.param_dim()),
            b: Some(sphere.radius()),
            ..CertificateInputs::new(acc)
        },
    )
}

pub fn n_net_mixed(
    acc: Accuracy,
    alpha_f: f64,
    alpha_2: f64,
    m: usize,
    l2: f64,
    sphere: &Sphere,
) -> Result<Certificate> {
    compute(
        BoundFamily::NetMixed,
        &CertificateInputs {
            alpha_f: Some(alpha_f),
            alpha_2: Some(alpha_2),
            m: Some(m),
            l2: Some(l2),
            k: Some(sphere.param_dim()),
            b: Some(sphere.radius()),
            ..CertificateInputs::new(acc)
        },
    )
}

pub fn n_sphere_hoeffding(acc: Accuracy, alpha_m: f64, m: usize, l2: f64, k: usize, b: f64) -> Result<Certificate> {
    compute(
        BoundFamily::SphereHoeffding,
        &CertificateInputs {
            alpha_m: Some(alpha_m),
            m: Some(m),
            l2: Some(l2),
            k: Some(k),
            b: Some(b),
            ..CertificateInputs::new(acc)
        },
    )
}

pub fn n_sphere_mixed(
    acc: Accuracy,
    alpha_f: f64,
    alpha_2: f64,
    m: usize,
    l2: f64,
    k: usize,
    b: f64,
) -> Result<Certificate> {
    compute(
        BoundFamily::SphereMixed,
        &CertificateInputs {
            alpha_f: Some(alpha_f),
            alpha_2: Some(alpha_2),
            m: Some(m),
            l2: Some(l2),
            k: Some(k),
            b: Some(b),
            ..CertificateInputs::new(acc)
        },
    )
}

pub fn n_chaining_subgauss(acc: Accuracy, alpha_m: f64, surrogate: &TalagrandSurrogate) -> Result<Certificate> {
    compute(
        BoundFamily::ChainSubgauss,
        &CertificateInputs {
            alpha_m: Some(alpha_m),
            surrogate: Some(*surrogate),
            ..CertificateInputs::new(acc)
        },
    )
}

pub fn n_chaining_mixed(
    acc: Accuracy,
    alpha_f: f64,
    alpha_2: f64,
    surrogate: &TalagrandSurrogate,
) -> Result<Certificate> {
    compute(
        BoundFamily::ChainMixed,
        &CertificateInputs {
            alpha_f: Some(alpha_f),
            alpha_2: Some(alpha_2),
            surrogate: Some(*surrogate),
            ..CertificateInputs::new(acc)
        },
    )
}

pub fn n_sphere_chain_subgauss(
    acc: Accuracy,
    alpha_m: f64,
    k: usize,
    b: f64,
    lm: f64,
    c: f64,
) -> Result<Certificate> {
    compute(
        BoundFamily::SphereChainSubgauss,
        &CertificateInputs {
            alpha_m: Some(alpha_m),
            k: Some(k),
            b: Some(b),
            lm: Some(lm),
            const_c: Some(c),
            ..CertificateInputs::new(acc)
        },
    )
}

#[allow(clippy::too_many_arguments)]
pub fn n_sphere_chain_mixed(
    acc: Accuracy,
    alpha_f: f64,
    alpha_2: f64,
    k: usize,
    b: f64,
    lf: f64,
    l2: f64,
    c: f64,
) -> Result<Certificate> {
    compute(
        BoundFamily::SphereChainMixed,
        &CertificateInputs {
            alpha_f: Some(alpha_f),
            alpha_2: Some(alpha_2),
            k: Some(k),
            b: Some(b),
            lf: Some(lf),
            l2: Some(l2),
            const_c: Some(c),
            ..CertificateInputs::new(acc)
        },
    )
}

/// Number of `k`-sensor designs out of `m` candidates.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "camelCase"))]
pub struct OedCardinality {
    /// `C(m, k)`, or `None` on overflow.
    pub exact: Option<u64>,
    /// `(e m / k)^k`.
    pub bound: f64,
    pub ln_bound: f64,
}

impl OedCardinality {
    /// The exact count when known, else the bound.
    pub fn cardinality(&self) -> Cardinality {
        match self.exact {
            Some(n) => Cardinality::exact(n).expect("binomial is at least 1"),
            None => Cardinality {
                ln: self.ln_bound,
                exact: None,
            },
        }
    }
}

pub fn oed_cardinality(m: usize, k: usize) -> Result<OedCardinality> {
    if k == 0 || k > m {
        return Err(Error::invalid(format!("need 0 < k <= m, got m = {m}, k = {k}")));
    }
    let ln_bound = k as f64 * (1.0 + libm::log(m as f64 / k as f64));
    Ok(OedCardinality {
        exact: binomial(m as u64, k as u64),
        bound: libm::exp(ln_bound),
        ln_bound,
    })
}

pub(crate) fn binomial(n: u64, k: u64) -> Option<u64> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc·(n−i)/(i+1) stays integral: it is C(n, i+1)·(i+1)!/(i+1)!.
        acc = acc.checked_mul((n - i) as u128)? / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

/// A tail probability bound, raw and clipped to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "camelCase"))]
pub struct TailBound {
    pub raw: f64,
    pub capped: f64,
}

impl TailBound {
    fn new(raw: f64) -> Self {
        Self {
            raw,
            capped: raw.min(1.0),
        }
    }
}

fn check_tail_args(n: usize, t: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("N must be at least 1"));
    }
    if !(t > 0.0) {
        return Err(Error::invalid("t must be positive"));
    }
    Ok(())
}

/// `exp(−N t² / (2‖Ā‖_M²))`, and 0 when `Ā = 0`.
pub fn tail_hoeffding_single(a: &SymMatrix, n: usize, t: f64) -> Result<TailBound> {
    check_tail_args(n, t)?;
    let am = a.offdiag().norm_m();
    if am == 0.0 {
        return Ok(TailBound::new(0.0));
    }
    Ok(TailBound::new(libm::exp(-(n as f64) * t * t / (2.0 * am * am))))
}

/// `2 exp(−N t² / (8(‖Ā‖_F² + t‖Ā‖₂)))`, and 0 when `Ā = 0`.
pub fn tail_mixed_single(a: &SymMatrix, n: usize, t: f64) -> Result<TailBound> {
    check_tail_args(n, t)?;
    let ab = a.offdiag();
    let af = ab.norm_f();
    if af == 0.0 {
        return Ok(TailBound::new(0.0));
    }
    let a2 = ab.norm_2()?;
    Ok(TailBound::new(
        2.0 * libm::exp(-(n as f64) * t * t / (8.0 * (af * af + t * a2))),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn acc(eps: f64, delta: f64) -> Accuracy {
        Accuracy::new(eps, delta).unwrap()
    }

    fn card(n: u64) -> Cardinality {
        Cardinality::exact(n).unwrap()
    }

    #[test]
    fn finite_examples() {
        assert_eq!(n_finite_hoeffding(acc(0.1, 0.05), 0.0, card(10)).unwrap().n, Some(1));
        let c = n_finite_hoeffding(acc(0.1, 0.05), 1.0, card(10)).unwrap();
        assert_eq!(c.n, Some(4239));
        assert_eq!(c.convention, Convention::FullySpecified);
        let c2 = n_finite_hoeffding(acc(0.1, 0.05), 2.0, card(10)).unwrap();
        assert!((c2.bound - 4.0 * c.bound).abs() < 1e-9 * c2.bound);
        assert_eq!(n_finite_mixed(acc(0.1, 0.05), 0.0, 0.0, card(10)).unwrap().n, Some(1));
        assert_eq!(n_finite_mixed(acc(0.1, 0.05), 1.0, 1.0, card(10)).unwrap().n, Some(20132));
    }

    #[test]
    fn mixed_trace_compares_with_hoeffding() {
        let m = 50.0;
        let inputs = CertificateInputs {
            alpha_f: Some(1.0),
            alpha_2: Some(1.0),
            alpha_m: Some(m),
            cardinality: Some(card(10)),
            ..CertificateInputs::new(acc(0.01, 0.05))
        };
        let c = compute(BoundFamily::FiniteMixed, &inputs).unwrap();
        assert!(c.formula_trace.iter().any(|l| l.contains("comparison") && l.contains("smaller")));
    }

    #[test]
    fn eps_range_is_checked_per_family() {
        let e = n_finite_hoeffding(acc(1.5, 0.05), 1.0, card(10)).unwrap_err();
        assert!(e.is_hypothesis());
        let s = TalagrandSurrogate::user(Some(1.0), None, None).unwrap();
        assert!(n_chaining_subgauss(acc(1.5, 0.05), 1.0, &s).is_ok());
        assert!(Accuracy::new(0.1, 1.0).is_err());
        assert!(Accuracy::new(0.0, 0.1).is_err());
    }

    #[test]
    fn net_and_sphere_examples() {
        let sphere = Sphere::new(vec![0.0, 0.0], 1.0).unwrap();
        let net = n_net_hoeffding(acc(0.1, 0.05), 1.0, 4, 1.0, &sphere).unwrap();
        assert_eq!(net.n, Some(12275));
        assert_eq!(net.inputs.covering.unwrap().count, Some(230_400));
        let sph = n_sphere_hoeffding(acc(0.1, 0.05), 1.0, 4, 1.0, 2, 1.0).unwrap();
        assert_eq!(sph.n, Some(12275));
        assert!((net.bound - sph.bound).abs() <= 1e-12 * sph.bound);
    }

    #[test]
    fn net_reduces_to_single_point_finite_bound() {
        // eps >= 12 m L2 B makes gamma = 1.
        let sphere = Sphere::new(vec![0.0], 0.01).unwrap();
        let net = n_net_hoeffding(acc(0.5, 0.05), 1.0, 2, 1.0, &sphere).unwrap();
        let fin = n_finite_hoeffding(acc(0.5, 0.05), 1.0, card(1)).unwrap();
        assert_eq!(net.bound, fin.bound);
        assert!(n_sphere_hoeffding(acc(0.5, 0.05), 1.0, 2, 1.0, 1, 0.01).unwrap_err().is_hypothesis());
    }

    #[test]
    fn sphere_boundary_limit() {
        let (m, l2, b) = (2usize, 1.0, 0.04);
        let edge = 12.0 * m as f64 * l2 * b;
        let eps = edge * (1.0 - 1e-12);
        let c = n_sphere_hoeffding(acc(eps, 0.05), 1.0, m, l2, 3, b).unwrap();
        let lim = -8.0 * 0.05f64.ln() / (eps * eps);
        assert!((c.bound - lim).abs() < 1e-6 * lim);
    }

    #[test]
    fn missing_l2_is_reported() {
        let inputs = CertificateInputs {
            alpha_m: Some(1.0),
            m: Some(2),
            k: Some(1),
            b: Some(1.0),
            ..CertificateInputs::new(acc(0.1, 0.1))
        };
        assert!(matches!(
            compute(BoundFamily::NetHoeffding, &inputs),
            Err(Error::MissingInput(_))
        ));
    }

    #[test]
    fn chaining_examples() {
        let zero = TalagrandSurrogate::user(Some(0.0), Some(0.0), Some(0.0)).unwrap();
        assert_eq!(n_chaining_subgauss(acc(0.1, 0.05), 0.0, &zero).unwrap().n, Some(1));
        let s = TalagrandSurrogate::user(Some(2.0), None, None).unwrap();
        assert_eq!(n_chaining_subgauss(acc(0.1, 0.05), 1.0, &s).unwrap().n, Some(212_480));
        let a = n_chaining_subgauss(acc(0.1, 0.05), 1.5, &s).unwrap();
        assert_eq!(a.n, Some(212_480));

        assert_eq!(n_chaining_mixed(acc(0.1, 0.5), 0.0, 0.0, &zero).unwrap().n, Some(1));
        let s = TalagrandSurrogate::user(None, Some(1.0), Some(1.0)).unwrap();
        assert_eq!(n_chaining_mixed(acc(0.1, 0.5), 1.0, 1.0, &s).unwrap().n, Some(851_740));
        assert!(n_chaining_mixed(acc(0.1, 0.6), 1.0, 1.0, &s).unwrap_err().is_hypothesis());
        assert!(n_chaining_subgauss(acc(0.1, 0.05), 1.0, &s).is_err());
    }

    #[test]
    fn dudley_surrogates() {
        let z = dudley_sphere_surrogates(3, 2.0, Some(0.0), Some(0.0), Some(0.0), 1.0).unwrap();
        assert_eq!((z.gamma2_dm, z.gamma2_df, z.gamma1_d2), (Some(0.0), Some(0.0), Some(0.0)));
        let s = dudley_sphere_surrogates(4, 1.0, Some(1.0), None, Some(1.0), 1.0).unwrap();
        let g32 = core::f64::consts::PI.sqrt() / 2.0;
        assert!((s.gamma2_dm.unwrap() - g32 * 3.0 * 2.0).abs() < 1e-12);
        assert_eq!(s.gamma2_df, None);
        assert!((s.gamma1_d2.unwrap() - 24.0).abs() < 1e-12);
        assert!(dudley_sphere_surrogates(1, 1.0, None, None, None, 0.0).is_err());
        let c = n_chaining_subgauss(acc(0.1, 0.05), 0.0, &s).unwrap();
        assert_eq!(c.convention, Convention::ConstantConvention);
    }

    #[test]
    fn dudley_path_matches_sphere_chain_bound() {
        let a = acc(0.3, 0.1);
        let s = dudley_sphere_surrogates(1, 1.0, Some(1.0), None, None, matching_dudley_constant()).unwrap();
        let d = n_chaining_subgauss(a, 0.0, &s).unwrap();
        let c = n_sphere_chain_subgauss(a, 0.0, 1, 1.0, 1.0, 144.0).unwrap();
        assert!((d.bound - c.bound).abs() <= 1e-12 * c.bound);
        assert!(c.formula_trace.iter().any(|l| l.contains("cross-check")));
    }

    #[test]
    fn sphere_chain_examples() {
        let a = acc(0.2, 0.1);
        assert_eq!(n_sphere_chain_subgauss(a, 0.0, 2, 1.0, 0.0, 144.0).unwrap().n, Some(1));
        assert_eq!(n_sphere_chain_mixed(a, 0.0, 0.0, 2, 1.0, 0.0, 0.0, 4096.0).unwrap().n, Some(1));
        let c1 = n_sphere_chain_mixed(a, 1.0, 0.5, 2, 1.0, 0.3, 0.2, 100.0).unwrap();
        let c2 = n_sphere_chain_mixed(a, 1.0, 0.5, 2, 1.0, 0.3, 0.2, 300.0).unwrap();
        assert!((c2.bound - 3.0 * c1.bound).abs() < 1e-9 * c2.bound);
        assert_eq!(c1.convention, Convention::ConstantConvention);
        assert!(n_sphere_chain_subgauss(a, 1.0, 2, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn oed_cardinality_examples() {
        let c = oed_cardinality(4, 2).unwrap();
        assert_eq!(c.exact, Some(6));
        assert!((c.bound - 29.5562).abs() < 1e-4);
        assert_eq!(oed_cardinality(7, 7).unwrap().exact, Some(1));
        for m in 1..=30 {
            for k in 1..=m {
                let c = oed_cardinality(m, k).unwrap();
                assert!(c.exact.unwrap() as f64 <= c.bound * (1.0 + 1e-12));
            }
        }
        let huge = oed_cardinality(200, 100).unwrap();
        assert_eq!(huge.exact, None);
        assert!(huge.cardinality().ln > 100.0);
        assert!(oed_cardinality(3, 0).is_err());
    }

    #[test]
    fn binomial_matches_pascal() {
        let mut row = vec![1u64];
        for n in 1..=60u64 {
            let mut next = vec![1u64; n as usize + 1];
            for k in 1..n as usize {
                next[k] = row[k - 1] + row[k];
            }
            row = next;
            for k in 0..=n {
                assert_eq!(binomial(n, k), Some(row[k as usize]));
            }
        }
    }

    #[test]
    fn tails() {
        let d = SymMatrix::from_diag(&[1.0, 2.0]);
        assert_eq!(tail_hoeffding_single(&d, 3, 0.1).unwrap().raw, 0.0);
        assert_eq!(tail_mixed_single(&d, 3, 0.1).unwrap().raw, 0.0);
        let s = SymMatrix::new(2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let h = tail_hoeffding_single(&s, 1, 2.0).unwrap();
        assert!((h.raw - (-0.5f64).exp()).abs() < 1e-15);
        let mx = tail_mixed_single(&s, 1, 0.1).unwrap();
        assert!(mx.raw > 1.0 && mx.capped == 1.0);
        assert!(tail_hoeffding_single(&s, 0, 1.0).is_err());
    }

    #[test]
    fn chaining_helpers() {
        for &u in &[4.0, 5.0, 8.0] {
            for &p in &[1.0, 2.0] {
                assert!(chaining_tail_sum_ln(u, p, 41) <= -libm::pow(u, p) / 2.0);
            }
        }
        assert!((log_power_integral(3.0, 2.0) - 3.0 * core::f64::consts::PI.sqrt() / 2.0).abs() < 1e-12);
        assert!((log_power_integral(0.5, 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn replay_reproduces() {
        let sphere = Sphere::new(vec![0.0, 0.0, 0.0], 2.0).unwrap();
        let certs = vec![
            n_finite_hoeffding(acc(0.1, 0.05), 1.3, card(17)).unwrap(),
            n_net_mixed(acc(0.2, 0.01), 0.7, 0.4, 5, 0.9, &sphere).unwrap(),
            n_sphere_chain_mixed(acc(0.3, 0.2), 1.0, 2.0, 2, 1.0, 0.5, 0.5, 4096.0).unwrap(),
        ];
        for c in certs {
            assert!(c.verify_replay().unwrap());
            assert_eq!(c.replay().unwrap(), c);
        }
    }

    #[test]
    fn family_ids_round_trip() {
        for f in BoundFamily::ALL {
            assert_eq!(f.as_str().parse::<BoundFamily>().unwrap(), f);
        }
        assert!("nope".parse::<BoundFamily>().is_err());
    }

    /// Inputs at which every family is defined.
    fn full_inputs(eps: f64, delta: f64, alpha: f64, l: f64, b: f64, k: usize, card_n: u64) -> CertificateInputs {
        CertificateInputs {
            alpha_2: Some(alpha),
            alpha_f: Some(alpha),
            alpha_m: Some(alpha),
            cardinality: Some(Cardinality::exact(card_n).unwrap()),
            m: Some(3),
            k: Some(k),
            b: Some(b),
            l2: Some(l),
            lf: Some(l),
            lm: Some(l),
            surrogate: Some(dudley_sphere_surrogates(k, b, Some(l), Some(l), Some(l), 1.0).unwrap()),
            ..CertificateInputs::new(Accuracy::new(eps, delta).unwrap())
        }
    }

    fn bound_of(f: BoundFamily, i: &CertificateInputs) -> Option<f64> {
        compute(f, i).ok().map(|c| c.bound)
    }

    proptest! {
        #[test]
        fn monotone_in_every_input(
            eps in 0.05f64..0.5, delta in 0.01f64..0.5, alpha in 0.1f64..3.0,
            l in 0.1f64..3.0, b in 0.2f64..3.0, k in 1usize..5, card_n in 1u64..1000,
            f in 1.01f64..2.0,
        ) {
            let base = full_inputs(eps, delta, alpha, l, b, k, card_n);
            let tol = |x: f64| 1e-12 * x.abs().max(1.0);
            for fam in BoundFamily::ALL {
                let Some(n0) = bound_of(fam, &base) else { continue };
                let mut e = base.clone();
                e.eps = (eps * f).min(0.99);
                if let Some(n) = bound_of(fam, &e) { prop_assert!(n <= n0 + tol(n0), "{fam} eps"); }
                let mut d = base.clone();
                d.delta = delta / f;
                if let Some(n) = bound_of(fam, &d) { prop_assert!(n >= n0 - tol(n0), "{fam} delta"); }
                let bigger = [
                    full_inputs(eps, delta, alpha * f, l, b, k, card_n),
                    full_inputs(eps, delta, alpha, l * f, b, k, card_n),
                    full_inputs(eps, delta, alpha, l, b * f, k, card_n),
                    full_inputs(eps, delta, alpha, l, b, k + 1, card_n),
                    full_inputs(eps, delta, alpha, l, b, k, card_n * 2),
                ];
                for (i, inp) in bigger.iter().enumerate() {
                    if let Some(n) = bound_of(fam, inp) {
                        prop_assert!(n >= n0 - tol(n0), "{fam} input {i}");
                    }
                }
            }
        }

        #[test]
        fn sphere_equals_net_pre_ceiling(
            eps in 0.01f64..0.99, delta in 0.001f64..0.99, am in 0.0f64..5.0,
            m in 1usize..20, l2 in 0.05f64..5.0, b in 0.05f64..5.0, k in 1usize..8,
        ) {
            prop_assume!(eps < 12.0 * m as f64 * l2 * b);
            let a = Accuracy::new(eps, delta).unwrap();
            let sphere = Sphere::new(vec![0.0; k], b).unwrap();
            let net = n_net_hoeffding(a, am, m, l2, &sphere).unwrap();
            let sph = n_sphere_hoeffding(a, am, m, l2, k, b).unwrap();
            prop_assert!((net.bound - sph.bound).abs() <= 1e-12 * sph.bound.max(1e-300));
            let netm = n_net_mixed(a, am, am, m, l2, &sphere).unwrap();
            let sphm = n_sphere_mixed(a, am, am, m, l2, k, b).unwrap();
            prop_assert!((netm.bound - sphm.bound).abs() <= 1e-12 * sphm.bound.max(1e-300));
        }

        #[test]
        fn tails_monotone(seed: u64, t in 0.01f64..5.0, dt in 0.0f64..2.0, n in 1usize..50) {
            let mut rng = crate::rng::SplitMix64::new(seed);
            let a = SymMatrix::from_lower(4, |_, _| rng.gaussian());
            let h0 = tail_hoeffding_single(&a, n, t).unwrap().raw;
            prop_assert!(tail_hoeffding_single(&a, n, t + dt).unwrap().raw <= h0);
            prop_assert!(tail_hoeffding_single(&a, n + 1, t).unwrap().raw <= h0);
            let m0 = tail_mixed_single(&a, n, t).unwrap().raw;
            prop_assert!(tail_mixed_single(&a, n, t + dt).unwrap().raw <= m0);
            prop_assert!(tail_mixed_single(&a, n + 1, t).unwrap().raw <= m0);
        }
    }
}
