//! Word-sized modular arithmetic, prime search and negacyclic NTT tables.

use crate::error::{Error, Result};

/// A modulus of at most 62 bits with a precomputed Barrett constant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Modulus {
    value: u64,
    bits: u32,
    barrett: u64,
}

impl Modulus {
    pub const MAX_BITS: u32 = 62;

    pub fn new(value: u64) -> Result<Self> {
        if value < 2 {
            return Err(Error::InvalidParams(format!("modulus {value} is below 2")));
        }
        let bits = 64 - value.leading_zeros();
        if bits > Self::MAX_BITS {
            return Err(Error::InvalidParams(format!(
                "modulus {value} exceeds {} bits",
                Self::MAX_BITS
            )));
        }
        let barrett = ((1u128 << (2 * bits)) / value as u128) as u64;
        Ok(Self {
            value,
            bits,
            barrett,
        })
    }

    #[inline]
    pub fn value(&self) -> u64 {
        self.value
    }

    /// Bit length, i.e. the decomposition width used by the gadget.
    #[inline]
    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Reduces `x < q^2` (Barrett, at most two corrections).
    #[inline]
    pub fn reduce_wide(&self, x: u128) -> u64 {
        let k = self.bits;
        let q1 = (x >> (k - 1)) as u64;
        let q3 = ((q1 as u128 * self.barrett as u128) >> (k + 1)) as u64;
        let mut r = (x - q3 as u128 * self.value as u128) as u64;
        while r >= self.value {
            r -= self.value;
        }
        r
    }

    #[inline]
    pub fn reduce(&self, x: u64) -> u64 {
        x % self.value
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.value {
            s - self.value
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.value - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.value - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        self.reduce_wide(a as u128 * b as u128)
    }

    /// Precomputed companion `floor(w * 2^64 / q)` for [`Modulus::mul_shoup`].
    #[inline]
    pub fn shoup(&self, w: u64) -> u64 {
        (((w as u128) << 64) / self.value as u128) as u64
    }

    /// `a * w mod q` for a fixed operand `w` with companion `w_shoup`.
    #[inline]
    pub fn mul_shoup(&self, a: u64, w: u64, w_shoup: u64) -> u64 {
        let approx = ((a as u128 * w_shoup as u128) >> 64) as u64;
        let r = a.wrapping_mul(w).wrapping_sub(approx.wrapping_mul(self.value));
        if r >= self.value {
            r - self.value
        } else {
            r
        }
    }

    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1 % self.value;
        base %= self.value;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse, if `a` is a unit.
    pub fn inv(&self, a: u64) -> Option<u64> {
        let (mut r0, mut r1) = (self.value as i128, (a % self.value) as i128);
        let (mut t0, mut t1) = (0i128, 1i128);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (t0, t1) = (t1, t0 - q * t1);
        }
        (r0 == 1).then(|| t0.rem_euclid(self.value as i128) as u64)
    }

    /// Maps a signed integer to its canonical residue.
    #[inline]
    pub fn from_i64(&self, x: i64) -> u64 {
        x.rem_euclid(self.value as i64) as u64
    }

    /// Centered representative in `[-q/2, q/2)`.
    #[inline]
    pub fn center(&self, x: u64) -> i64 {
        if x >= self.value.div_ceil(2) {
            x as i64 - self.value as i64
        } else {
            x as i64
        }
    }
}

fn mul_mod_u64(a: u64, b: u64, m: u64) -> u64 {
    (a as u128 * b as u128 % m as u128) as u64
}

fn pow_mod_u64(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod_u64(acc, base, m);
        }
        base = mul_mod_u64(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &p in &WITNESSES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &WITNESSES {
        let mut x = pow_mod_u64(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod_u64(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Largest prime with exactly `bits` bits that is `1 mod step` and below `below`.
pub fn find_prime(bits: u32, step: u64, below: u64) -> Option<u64> {
    if !(2..=Modulus::MAX_BITS).contains(&bits) || step == 0 {
        return None;
    }
    let floor = 1u64 << (bits - 1);
    let ceiling = ((1u64 << bits) - 1).min(below.saturating_sub(1));
    if ceiling < floor {
        return None;
    }
    let mut candidate = (ceiling - 1) / step * step + 1;
    while candidate >= floor {
        if is_prime(candidate) {
            return Some(candidate);
        }
        candidate = candidate.checked_sub(step)?;
    }
    None
}

pub(crate) fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Twiddle tables for the negacyclic transform of length `n` modulo a prime
/// `q = 1 mod 2n`.
#[derive(Clone, Debug)]
pub struct NttTables {
    n: usize,
    psi_rev: Vec<u64>,
    psi_rev_shoup: Vec<u64>,
    psi_inv_rev: Vec<u64>,
    psi_inv_rev_shoup: Vec<u64>,
    n_inv: u64,
    n_inv_shoup: u64,
}

fn bit_reverse(x: usize, log_n: u32) -> usize {
    if log_n == 0 {
        0
    } else {
        x.reverse_bits() >> (usize::BITS - log_n)
    }
}

impl NttTables {
    /// Builds tables when `q` is prime and `q = 1 mod 2n`; `None` otherwise.
    pub fn new(modulus: &Modulus, n: usize) -> Option<Self> {
        let q = modulus.value();
        let two_n = 2 * n as u64;
        if !n.is_power_of_two() || !(q - 1).is_multiple_of(two_n) || !is_prime(q) {
            return None;
        }
        let exponent = (q - 1) / two_n;
        let psi = (2..q)
            .map(|x| modulus.pow(x, exponent))
            .find(|&psi| modulus.pow(psi, n as u64) == q - 1)?;
        let psi_inv = modulus.inv(psi)?;
        let log_n = n.trailing_zeros();
        let mut psi_rev = vec![0; n];
        let mut psi_inv_rev = vec![0; n];
        let (mut p, mut pi) = (1u64, 1u64);
        for i in 0..n {
            let r = bit_reverse(i, log_n);
            psi_rev[r] = p;
            psi_inv_rev[r] = pi;
            p = modulus.mul(p, psi);
            pi = modulus.mul(pi, psi_inv);
        }
        let n_inv = modulus.inv(n as u64)?;
        Some(Self {
            n,
            psi_rev_shoup: psi_rev.iter().map(|&w| modulus.shoup(w)).collect(),
            psi_rev,
            psi_inv_rev_shoup: psi_inv_rev.iter().map(|&w| modulus.shoup(w)).collect(),
            psi_inv_rev,
            n_inv,
            n_inv_shoup: modulus.shoup(n_inv),
        })
    }

    pub fn forward(&self, m: &Modulus, a: &mut [u64]) {
        debug_assert_eq!(a.len(), self.n);
        let mut t = self.n;
        let mut groups = 1;
        while groups < self.n {
            t /= 2;
            for i in 0..groups {
                let w = self.psi_rev[groups + i];
                let ws = self.psi_rev_shoup[groups + i];
                let start = 2 * i * t;
                for j in start..start + t {
                    let u = a[j];
                    let v = m.mul_shoup(a[j + t], w, ws);
                    a[j] = m.add(u, v);
                    a[j + t] = m.sub(u, v);
                }
            }
            groups *= 2;
        }
    }

    pub fn inverse(&self, m: &Modulus, a: &mut [u64]) {
        debug_assert_eq!(a.len(), self.n);
        let mut t = 1;
        let mut groups = self.n;
        while groups > 1 {
            let half = groups / 2;
            let mut start = 0;
            for i in 0..half {
                let w = self.psi_inv_rev[half + i];
                let ws = self.psi_inv_rev_shoup[half + i];
                for j in start..start + t {
                    let u = a[j];
                    let v = a[j + t];
                    a[j] = m.add(u, v);
                    a[j + t] = m.mul_shoup(m.sub(u, v), w, ws);
                }
                start += 2 * t;
            }
            t *= 2;
            groups = half;
        }
        for x in a.iter_mut() {
            *x = m.mul_shoup(*x, self.n_inv, self.n_inv_shoup);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_prime_table() {
        let primes: Vec<u64> = (0..60).filter(|&n| is_prime(n)).collect();
        assert_eq!(
            primes,
            [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59]
        );
    }

    #[test]
    fn carmichael_and_large_composites_rejected() {
        for n in [561u64, 1105, 1729, 2465, 3215031751, 4611686018427387903] {
            assert!(!is_prime(n), "{n}");
        }
        // 2^61 - 1 is a Mersenne prime.
        assert!(is_prime((1u64 << 61) - 1));
    }

    #[test]
    fn prime_search_respects_congruence_and_width() {
        for bits in [20, 36, 48, 61] {
            let p = find_prime(bits, 32, u64::MAX).unwrap();
            assert_eq!(p % 32, 1);
            assert_eq!(64 - p.leading_zeros(), bits);
            assert!(is_prime(p));
            let next = find_prime(bits, 32, p).unwrap();
            assert!(next < p);
        }
    }

    #[test]
    fn inverse_and_center() {
        let m = Modulus::new(17).unwrap();
        assert_eq!(m.inv(3), Some(6));
        assert_eq!(Modulus::new(8).unwrap().inv(2), None);
        assert_eq!(m.center(16), -1);
        assert_eq!(m.center(8), 8);
        assert_eq!(m.center(9), -8);
        assert_eq!(m.from_i64(-1), 16);
    }

    proptest! {
        #[test]
        fn barrett_matches_wide_remainder(bits in 2u32..=62, a: u64, b: u64) {
            let q = (1u64 << (bits - 1)) | (a >> (65 - bits));
            let m = Modulus::new(q.max(2)).unwrap();
            let (x, y) = (a % m.value(), b % m.value());
            let expected = (x as u128 * y as u128 % m.value() as u128) as u64;
            prop_assert_eq!(m.mul(x, y), expected);
            prop_assert_eq!(m.mul_shoup(x, y, m.shoup(y)), expected);
        }
    }
}
