//! Covering numbers and η-nets of (possibly floored) Euclidean balls.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::family::{dist, Sphere};
use crate::rng::SplitMix64;
use crate::{Error, Result};

/// Default cap on constructed net size.
pub const DEFAULT_NET_CAP: u64 = 10_000_000;

/// Counts above this are reported in log form only.
const SATURATION_LN: f64 = 62.0 * core::f64::consts::LN_2;

/// `max{(3B/η)^K, 1}`, the size of an η-net of a radius-`B` ball in `R^K`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "camelCase"))]
pub struct CoveringNumber {
    /// `max{K ln(3B/η), 0}`, unrounded.
    pub ln: f64,
    /// `ceil(exp(ln))`, or `None` when it does not fit in 62 bits.
    pub count: Option<u64>,
}

impl CoveringNumber {
    pub fn is_saturated(&self) -> bool {
        self.count.is_none()
    }

    pub(crate) fn from_ln(ln: f64) -> Self {
        let ln = ln.max(0.0);
        let count = if ln > SATURATION_LN {
            None
        } else {
            let v = libm::exp(ln);
            let r = libm::round(v);
            // Powers that should be integers (36 = 6²) can land a few ulps high.
            Some(if (v - r).abs() <= 1e-9 * r { r as u64 } else { libm::ceil(v) as u64 })
        };
        Self { ln, count }
    }
}

pub fn covering_number_sphere(b: f64, k: usize, eta: f64) -> Result<CoveringNumber> {
    if !(b > 0.0) || !(eta > 0.0) || !b.is_finite() || !eta.is_finite() {
        return Err(Error::invalid("covering number needs B > 0 and eta > 0"));
    }
    if k == 0 {
        return Err(Error::invalid("covering number needs K >= 1"));
    }
    Ok(CoveringNumber::from_ln(k as f64 * libm::log(3.0 * b / eta)))
}

/// A finite set of points within `eta` of every point of its sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct Net {
    points: Vec<Vec<f64>>,
    eta: f64,
    sphere: Sphere,
}

impl Net {
    /// A net from given points; coverage is not checked (see [`verify_net`]).
    pub fn from_points(sphere: Sphere, eta: f64, points: Vec<Vec<f64>>) -> Result<Self> {
        if !(eta > 0.0) {
            return Err(Error::invalid("net eta must be positive"));
        }
        if points.is_empty() {
            return Err(Error::invalid("net is empty"));
        }
        for p in &points {
            if !sphere.contains(p, 1e-9) {
                return Err(Error::invalid("net point lies outside the sphere"));
            }
        }
        Ok(Self { points, eta, sphere })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn sphere(&self) -> &Sphere {
        &self.sphere
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// [`build_sphere_net_capped`] with [`DEFAULT_NET_CAP`].
pub fn build_sphere_net(sphere: &Sphere, eta: f64) -> Result<Net> {
    build_sphere_net_capped(sphere, eta, DEFAULT_NET_CAP)
}

/// Lattice `θ_c + h·Z^K`, `h = 2η/√K`, restricted to the ball of radius
/// `2B ≥ B + η`, projected onto the sphere and deduplicated.
///
/// Every point of `R^K` is within `h√K/2 = η` of a lattice node, and the
/// projection onto a convex set never increases distances to points of the
/// set. The reach does not depend on `η`, so halving `η` yields a superset.
/// When `η > B` the center alone covers the ball.
pub fn build_sphere_net_capped(sphere: &Sphere, eta: f64, cap: u64) -> Result<Net> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::invalid("net eta must be positive"));
    }
    let b = sphere.radius();
    let c = sphere.center();
    if eta > b {
        return Net::from_points(sphere.clone(), eta, alloc::vec![c.to_vec()]);
    }
    let k = c.len();
    let h = 2.0 * eta / libm::sqrt(k as f64);
    let reach = 2.0 * b;
    let estimate = ball_volume(k, reach) / libm::pow(h, k as f64);
    if estimate > cap as f64 {
        return Err(Error::CapExceeded {
            what: "net point (use a larger eta or a smaller K)",
            count: estimate,
            cap,
        });
    }
    let r = libm::floor(reach / h) as i64;
    let mut raw = Vec::new();
    let mut z = alloc::vec![0i64; k];
    lattice_dfs(&mut z, 0, 0.0, r, h, reach * reach, &mut |z| {
        let p: Vec<f64> = z.iter().zip(c).map(|(&zi, ci)| ci + h * zi as f64).collect();
        raw.push(sphere.project(&p));
    });
    raw.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    raw.dedup();
    Net::from_points(sphere.clone(), eta, raw)
}

fn lattice_dfs(
    z: &mut [i64],
    depth: usize,
    partial: f64,
    r: i64,
    h: f64,
    reach2: f64,
    emit: &mut impl FnMut(&[i64]),
) {
    if depth == z.len() {
        emit(z);
        return;
    }
    for zi in -r..=r {
        let s = partial + (h * zi as f64) * (h * zi as f64);
        if s <= reach2 {
            z[depth] = zi;
            lattice_dfs(z, depth + 1, s, r, h, reach2, emit);
        }
    }
}

fn ball_volume(k: usize, r: f64) -> f64 {
    let kf = k as f64;
    libm::pow(core::f64::consts::PI, kf / 2.0) / libm::tgamma(kf / 2.0 + 1.0) * libm::pow(r, kf)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "camelCase"))]
pub struct NetVerification {
    pub max_observed_distance: f64,
    pub probes: usize,
    pub pass: bool,
}

/// Samples `probes` uniform points of the sphere and reports the largest
/// distance to the nearest net point. Passes iff that is `≤ η(1 + 1e-9)`.
pub fn verify_net(net: &Net, probes: usize, seed: u64) -> NetVerification {
    let sphere = net.sphere();
    let eta = net.eta();
    let k = sphere.param_dim();
    let index = (k <= 6).then(|| GridIndex::new(net.points(), eta));
    let mut rng = SplitMix64::new(seed);
    let mut worst = 0.0f64;
    let mut drawn = 0;
    let mut attempts = 0usize;
    while drawn < probes && attempts < probes.saturating_mul(1000).max(1000) {
        attempts += 1;
        let p = rng.in_ball(sphere.center(), sphere.radius());
        if !sphere.contains(&p, 0.0) {
            continue;
        }
        drawn += 1;
        let d = index
            .as_ref()
            .and_then(|g| g.nearest_within(net.points(), &p, eta))
            .unwrap_or_else(|| brute_nearest(net.points(), &p));
        worst = worst.max(d);
    }
    NetVerification {
        max_observed_distance: worst,
        probes: drawn,
        pass: worst <= eta * (1.0 + 1e-9),
    }
}

fn brute_nearest(points: &[Vec<f64>], p: &[f64]) -> f64 {
    points.iter().map(|q| dist(p, q)).fold(f64::INFINITY, f64::min)
}

/// Buckets of side `eta`; any point within `eta` of `p` lies in the 3^K block
/// of cells around `p`'s cell.
struct GridIndex {
    cell: f64,
    buckets: BTreeMap<Vec<i64>, Vec<usize>>,
}

impl GridIndex {
    fn new(points: &[Vec<f64>], cell: f64) -> Self {
        let mut buckets: BTreeMap<Vec<i64>, Vec<usize>> = BTreeMap::new();
        for (i, p) in points.iter().enumerate() {
            buckets.entry(Self::key(p, cell)).or_default().push(i);
        }
        Self { cell, buckets }
    }

    fn key(p: &[f64], cell: f64) -> Vec<i64> {
        p.iter().map(|x| libm::floor(x / cell) as i64).collect()
    }

    /// Nearest distance if some point lies within `radius ≤ cell`.
    fn nearest_within(&self, points: &[Vec<f64>], p: &[f64], radius: f64) -> Option<f64> {
        let base = Self::key(p, self.cell);
        let k = base.len();
        let mut best = f64::INFINITY;
        let mut offset = alloc::vec![-1i64; k];
        loop {
            let key: Vec<i64> = base.iter().zip(&offset).map(|(b, o)| b + o).collect();
            if let Some(ids) = self.buckets.get(&key) {
                for &i in ids {
                    best = best.min(dist(p, &points[i]));
                }
            }
            let mut d = 0;
            while d < k && offset[d] == 1 {
                offset[d] = -1;
                d += 1;
            }
            if d == k {
                break;
            }
            offset[d] += 1;
        }
        (best <= radius).then_some(best)
    }
}
