//! Heuristic noise accounting.
//!
//! The quantity tracked is the centered inner product `<c, s>` of a
//! ciphertext with its secret, which equals the plaintext plus `t` times an
//! error term. It is modelled as a deterministic part bounded by `offset` plus
//! a zero-mean random part with per-coefficient `variance`. The reported bound
//! is `offset + TAIL * sqrt(variance)`.

use serde::{Deserialize, Serialize};

/// Number of standard deviations added to the offset when reporting a bound.
pub const TAIL: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseEstimate {
    pub offset: f64,
    pub variance: f64,
}

impl NoiseEstimate {
    pub const ZERO: Self = Self {
        offset: 0.0,
        variance: 0.0,
    };

    pub fn bound(&self) -> f64 {
        self.offset + TAIL * self.variance.sqrt()
    }

    pub fn bits(&self) -> f64 {
        self.bound().max(1.0).log2()
    }

    /// True when decryption modulo `q` is expected to be exact.
    pub fn fits(&self, q: u64) -> bool {
        self.bound() < q as f64 / 2.0
    }

    /// Public-key encryption with a binary mask: `mu + t(r e_pk + e - e' s)`.
    pub fn public_encryption(
        t: u64,
        degree: usize,
        sigma2: f64,
        pk_error_var: f64,
        secret_var: f64,
    ) -> Self {
        let t = t as f64;
        let n = degree as f64;
        Self {
            offset: t - 1.0,
            variance: t * t * (n / 2.0 * pk_error_var + sigma2 + n * sigma2 * secret_var),
        }
    }

    /// Secret-key encryption `(a s + t e + m, a)` of a known message.
    pub fn secret_encryption(t: u64, sigma2: f64) -> Self {
        let t = t as f64;
        Self {
            offset: 0.0,
            variance: t * t * sigma2,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            offset: self.offset + other.offset,
            variance: self.variance + other.variance,
        }
    }

    /// Product of two noisy ring elements. The factor two covers operands
    /// that are correlated (squaring).
    pub fn tensor(&self, other: &Self, degree: usize) -> Self {
        let n = degree as f64;
        let (o1, v1, o2, v2) = (self.offset, self.variance, other.offset, other.variance);
        Self {
            offset: n * o1 * o2,
            variance: 2.0 * n * (o1 * o1 * v2 + v1 * o2 * o2 + v1 * v2),
        }
    }

    /// Key switching with `digits` binary digits against hints of the given
    /// noise variance.
    pub fn key_switch(&self, digits: usize, degree: usize, hint_variance: f64) -> Self {
        Self {
            offset: self.offset,
            variance: self.variance + digits as f64 * degree as f64 * hint_variance,
        }
    }

    /// Modulus switching by `ratio = q_new / q_old`. Each of the `subkeys`
    /// blocks adds the rounding term `<tau, s>` with `|tau| <= t/2`;
    /// `key_variance` is the summed coefficient variance of their secrets.
    pub fn mod_switch(
        &self,
        ratio: f64,
        t: u64,
        degree: usize,
        subkeys: usize,
        key_variance: f64,
    ) -> Self {
        let t = t as f64;
        let rounding = t * t / 4.0 * (subkeys as f64 + degree as f64 * key_variance);
        Self {
            offset: self.offset * ratio,
            variance: self.variance * ratio * ratio + rounding,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_fits_everything() {
        assert!(NoiseEstimate::ZERO.fits(3));
        assert_eq!(NoiseEstimate::ZERO.bound(), 0.0);
    }

    #[test]
    fn add_and_tensor_grow() {
        let a = NoiseEstimate::public_encryption(2, 16, 10.24, 10.24, 10.24);
        let sum = a.add(&a);
        assert!(sum.bound() > a.bound());
        let prod = a.tensor(&a, 16);
        assert!(prod.bound() > sum.bound());
        assert_eq!(prod.offset, 16.0);
    }

    #[test]
    fn mod_switch_shrinks_large_noise() {
        let big = NoiseEstimate {
            offset: 1.0,
            variance: 2f64.powi(60),
        };
        let small = big.mod_switch(2f64.powi(-20), 2, 16, 1, 10.24);
        let expected = (2f64.powi(20) + 1.0 + 16.0 * 10.24).sqrt() * TAIL;
        assert!((small.bound() - 2f64.powi(-20) - expected).abs() < 1e-6);
    }
}
