//! Rademacher sample banks and Hutchinson's trace estimator.

use alloc::vec::Vec;

use crate::family::{eval_checked, MatrixFamily};
use crate::linalg::SymMatrix;
use crate::rng::sign_block;
use crate::{Error, Result};

/// A frozen `N × m` matrix of Rademacher signs, reused for every `θ`.
///
/// Row `i` depends only on `(seed, i)`, so banks with the same seed and a
/// larger `N` extend smaller ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleBank {
    seed: u64,
    n: usize,
    m: usize,
    signs: Vec<i8>,
}

/// Draws the bank for `(seed, n, m)`. Entry `(i, j)` is `+1` when bit `j mod 64`
/// of `sign_block(seed, i, j / 64)` is set and `−1` otherwise.
pub fn draw_rademacher(seed: u64, n: usize, m: usize) -> Result<SampleBank> {
    if n == 0 || m == 0 {
        return Err(Error::invalid("sample bank needs N >= 1 and m >= 1"));
    }
    let mut signs = Vec::with_capacity(n * m);
    for i in 0..n {
        let mut block = 0;
        let mut bits = 0;
        for j in 0..m {
            if j % 64 == 0 {
                bits = sign_block(seed, i as u64, block);
                block += 1;
            }
            signs.push(if (bits >> (j % 64)) & 1 == 1 { 1 } else { -1 });
        }
    }
    Ok(SampleBank { seed, n, m, signs })
}

impl SampleBank {
    /// Bank from explicit signs (row-major). `seed` is recorded but not checked.
    pub fn from_signs(seed: u64, n: usize, m: usize, signs: Vec<i8>) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::invalid("sample bank needs N >= 1 and m >= 1"));
        }
        if signs.len() != n * m {
            return Err(Error::DimensionMismatch {
                expected: n * m,
                found: signs.len(),
            });
        }
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::invalid("sample bank entries must be +1 or -1"));
        }
        Ok(Self { seed, n, m, signs })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn row(&self, i: usize) -> &[i8] {
        &self.signs[i * self.m..(i + 1) * self.m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[i8]> {
        self.signs.chunks_exact(self.m)
    }

    /// First `n` rows.
    pub fn prefix(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.n {
            return Err(Error::invalid("prefix length out of range"));
        }
        Ok(Self {
            seed: self.seed,
            n,
            m: self.m,
            signs: self.signs[..n * self.m].to_vec(),
        })
    }

    /// Pairwise sums `S_ij = Σ_r ω_ri ω_rj`, `i < j`.
    pub fn moments(&self) -> BankMoments {
        let m = self.m;
        let mut s = alloc::vec![0i64; m * (m - 1) / 2];
        for row in self.rows() {
            let mut k = 0;
            for i in 0..m {
                let wi = row[i] as i64;
                for &wj in &row[i + 1..] {
                    s[k] += wi * wj as i64;
                    k += 1;
                }
            }
        }
        BankMoments { n: self.n, m, s }
    }
}

/// `ωᵀ A ω`, computed as `tr(A) + 2 Σ_{i<j} a_ij ω_i ω_j`.
pub fn quadratic_form(a: &SymMatrix, omega: &[i8]) -> Result<f64> {
    a.check_dim(omega.len())?;
    Ok(a.trace() + offdiag_form(a, omega))
}

fn offdiag_form(a: &SymMatrix, omega: &[i8]) -> f64 {
    let m = omega.len();
    let mut s = 0.0;
    for i in 0..m {
        let wi = omega[i] as f64;
        let mut row = 0.0;
        for (j, &wj) in omega.iter().enumerate().skip(i + 1) {
            row += a.get(i, j) * wj as f64;
        }
        s += wi * row;
    }
    2.0 * s
}

/// `F̂ = (1/N) Σᵢ ωᵢᵀ A ωᵢ`. The diagonal enters exactly, so diagonal
/// matrices return their trace bit-for-bit.
pub fn estimate_trace(a: &SymMatrix, bank: &SampleBank) -> Result<f64> {
    a.check_dim(bank.m)?;
    let sum: f64 = bank.rows().map(|w| offdiag_form(a, w)).sum();
    Ok(a.trace() + sum / bank.n as f64)
}

/// [`estimate_trace`] applied to `A(θ)`.
pub fn estimate_f<F: MatrixFamily + ?Sized>(
    family: &F,
    theta: &[f64],
    bank: &SampleBank,
) -> Result<f64> {
    estimate_trace(&eval_checked(family, theta)?, bank)
}

/// Sufficient statistics of a bank for the estimator: `F̂(A)` depends on the
/// bank only through `S_ij = Σ_r ω_ri ω_rj`, `i < j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BankMoments {
    n: usize,
    m: usize,
    s: Vec<i64>,
}

impl BankMoments {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `tr(A) + (2/N) Σ_{i<j} a_ij S_ij`.
    pub fn estimate(&self, a: &SymMatrix) -> Result<f64> {
        a.check_dim(self.m)?;
        let mut k = 0;
        let mut acc = 0.0;
        for i in 0..self.m {
            for j in i + 1..self.m {
                acc += a.get(i, j) * self.s[k] as f64;
                k += 1;
            }
        }
        Ok(a.trace() + 2.0 * acc / self.n as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use alloc::vec;
    use proptest::prelude::*;

    fn swap() -> SymMatrix {
        SymMatrix::new(2, vec![0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    fn random_sym(m: usize, seed: u64) -> SymMatrix {
        let mut rng = SplitMix64::new(seed);
        SymMatrix::from_lower(m, |_, _| rng.gaussian())
    }

    /// Every bank of shape `n × m`, as sign vectors.
    fn all_banks(n: usize, m: usize) -> impl Iterator<Item = SampleBank> {
        (0u64..1 << (n * m)).map(move |code| {
            let signs = (0..n * m)
                .map(|b| if (code >> b) & 1 == 1 { 1 } else { -1 })
                .collect();
            SampleBank::from_signs(0, n, m, signs).unwrap()
        })
    }

    #[test]
    fn bank_determinism_and_prefix() {
        let a = draw_rademacher(7, 3, 4).unwrap();
        assert_eq!(a, draw_rademacher(7, 3, 4).unwrap());
        let b = draw_rademacher(7, 5, 4).unwrap();
        assert_eq!(&b.signs()[..12], a.signs());
        assert_eq!(b.prefix(3).unwrap(), a);
        assert_ne!(draw_rademacher(8, 3, 4).unwrap(), a);
    }

    #[test]
    fn column_means_are_fair() {
        let n = 100_000;
        let bank = draw_rademacher(42, n, 8).unwrap();
        for j in 0..8 {
            let mean = bank.rows().map(|r| r[j] as f64).sum::<f64>() / n as f64;
            assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "column {j}: {mean}");
        }
    }

    #[test]
    fn wide_banks_use_several_blocks() {
        let bank = draw_rademacher(1, 2, 150).unwrap();
        assert_ne!(&bank.row(0)[..64], &bank.row(0)[64..128]);
        assert!(bank.signs().iter().all(|&s| s == 1 || s == -1));
    }

    #[test]
    fn quadratic_form_examples() {
        let d = SymMatrix::from_diag(&[1.0, 2.0, 3.0]);
        assert_eq!(quadratic_form(&d, &[1, -1, 1]).unwrap(), 6.0);
        assert_eq!(quadratic_form(&swap(), &[1, 1]).unwrap(), 2.0);
        let vals: Vec<f64> = [[1, 1], [1, -1], [-1, 1], [-1, -1]]
            .iter()
            .map(|w| quadratic_form(&swap(), w).unwrap())
            .collect();
        assert_eq!(vals, vec![2.0, -2.0, -2.0, 2.0]);
        assert!(quadratic_form(&d, &[1, 1]).is_err());
    }

    #[test]
    fn single_row_swap_estimate_is_pm_two() {
        for bank in all_banks(1, 2) {
            let e = estimate_trace(&swap(), &bank).unwrap();
            assert!(e == 2.0 || e == -2.0);
        }
    }

    #[test]
    fn exact_unbiasedness_and_variance() {
        for seed in 0..5 {
            let a = random_sym(3, seed);
            let (n, m) = (2, 3);
            let count = (1u64 << (n * m)) as f64;
            let est: Vec<f64> = all_banks(n, m)
                .map(|b| estimate_trace(&a, &b).unwrap())
                .collect();
            let mean = est.iter().sum::<f64>() / count;
            assert!((mean - a.trace()).abs() < 1e-12);
            let var = est.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / count;
            let nf = a.offdiag().norm_f();
            assert!((var - 2.0 * nf * nf / n as f64).abs() < 1e-10);
            let am = a.offdiag().norm_m();
            for e in est {
                assert!((e - a.trace()).abs() <= am + 1e-12);
            }
        }
    }

    #[test]
    fn moments_match_direct_estimate() {
        let a = random_sym(6, 3);
        let bank = draw_rademacher(9, 37, 6).unwrap();
        let direct = estimate_trace(&a, &bank).unwrap();
        let fast = bank.moments().estimate(&a).unwrap();
        assert!((direct - fast).abs() < 1e-12 * (1.0 + direct.abs()));
    }

    proptest! {
        #[test]
        fn diagonal_is_exact(diag in prop::collection::vec(-10.0f64..10.0, 1..6), seed: u64, n in 1usize..20) {
            let a = SymMatrix::from_diag(&diag);
            let bank = draw_rademacher(seed, n, diag.len()).unwrap();
            prop_assert_eq!(estimate_trace(&a, &bank).unwrap(), a.trace());
        }

        #[test]
        fn linear_in_matrix(seed: u64, c in -5.0f64..5.0, n in 1usize..10) {
            let a = random_sym(4, seed);
            let bank = draw_rademacher(seed ^ 1, n, 4).unwrap();
            let lhs = estimate_trace(&a.scaled(c), &bank).unwrap();
            let rhs = c * estimate_trace(&a, &bank).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        }

        #[test]
        fn within_offdiagonal_range(seed: u64, n in 1usize..10) {
            let a = random_sym(5, seed);
            let bank = draw_rademacher(seed, n, 5).unwrap();
            let e = estimate_trace(&a, &bank).unwrap();
            prop_assert!((e - a.trace()).abs() <= a.offdiag().norm_m() * (1.0 + 1e-12));
        }

        #[test]
        fn prefix_stable(seed: u64, n in 1usize..8, extra in 0usize..8, m in 1usize..70) {
            let small = draw_rademacher(seed, n, m).unwrap();
            let big = draw_rademacher(seed, n + extra, m).unwrap();
            prop_assert_eq!(big.prefix(n).unwrap(), small);
        }
    }
}
