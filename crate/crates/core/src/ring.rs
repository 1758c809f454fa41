//! Arithmetic in `Z_q[x]/(x^n + 1)`.
//!
//! Coefficients are kept as canonical residues in `[0, q)`. Elements carry a
//! shared [`RingContext`] so that mixing levels is caught at the call site.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::modulus::{Modulus, NttTables};

/// Degree, modulus and transform tables of one ring in the modulus chain.
#[derive(Debug)]
pub struct RingContext {
    level: usize,
    degree: usize,
    modulus: Modulus,
    ntt: Option<NttTables>,
}

impl RingContext {
    pub fn new(degree: usize, q: u64, level: usize) -> Result<Arc<Self>> {
        if !degree.is_power_of_two() || degree < 2 {
            return Err(Error::InvalidParams(format!(
                "ring degree {degree} is not a power of two"
            )));
        }
        let modulus = Modulus::new(q)?;
        let ntt = NttTables::new(&modulus, degree);
        Ok(Arc::new(Self {
            level,
            degree,
            modulus,
            ntt,
        }))
    }

    #[inline]
    pub fn level(&self) -> usize {
        self.level
    }

    #[inline]
    pub fn degree(&self) -> usize {
        self.degree
    }

    #[inline]
    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    #[inline]
    pub fn q(&self) -> u64 {
        self.modulus.value()
    }

    /// Gadget width: the bit length of `q - 1`, enough for every residue.
    /// Equal to `floor(log2 q) + 1` for odd moduli.
    #[inline]
    pub fn width(&self) -> usize {
        (64 - (self.q() - 1).leading_zeros()) as usize
    }

    pub fn has_ntt(&self) -> bool {
        self.ntt.is_some()
    }

    fn same_ring(&self, other: &Self) -> bool {
        self.level == other.level && self.degree == other.degree && self.modulus == other.modulus
    }

    /// Negacyclic product of two coefficient slices.
    pub(crate) fn multiply(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        match &self.ntt {
            Some(ntt) => {
                let (mut fa, mut fb) = (a.to_vec(), b.to_vec());
                ntt.forward(&self.modulus, &mut fa);
                ntt.forward(&self.modulus, &mut fb);
                for (x, y) in fa.iter_mut().zip(&fb) {
                    *x = self.modulus.mul(*x, *y);
                }
                ntt.inverse(&self.modulus, &mut fa);
                fa
            }
            None => self.schoolbook(a, b),
        }
    }

    fn schoolbook(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        let n = self.degree;
        let m = &self.modulus;
        let mut out = vec![0u64; n];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                let p = m.mul(x, y);
                let k = i + j;
                if k < n {
                    out[k] = m.add(out[k], p);
                } else {
                    out[k - n] = m.sub(out[k - n], p);
                }
            }
        }
        out
    }

    /// Transforms in place into the evaluation domain. Callers must check
    /// [`RingContext::has_ntt`] or use [`Evaluation`].
    fn forward(&self, a: &mut [u64]) {
        if let Some(ntt) = &self.ntt {
            ntt.forward(&self.modulus, a);
        }
    }

    fn inverse(&self, a: &mut [u64]) {
        if let Some(ntt) = &self.ntt {
            ntt.inverse(&self.modulus, a);
        }
    }
}

/// An element of `R_q` at a given level of the modulus chain.
#[derive(Clone)]
pub struct RingElement {
    ctx: Arc<RingContext>,
    coeffs: Vec<u64>,
}

impl PartialEq for RingElement {
    fn eq(&self, other: &Self) -> bool {
        self.ctx.same_ring(&other.ctx) && self.coeffs == other.coeffs
    }
}

impl Eq for RingElement {}

impl fmt::Debug for RingElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RingElement")
            .field("level", &self.ctx.level)
            .field("q", &self.ctx.q())
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl RingElement {
    pub fn zero(ctx: &Arc<RingContext>) -> Self {
        Self {
            ctx: ctx.clone(),
            coeffs: vec![0; ctx.degree],
        }
    }

    /// Builds an element from arbitrary residues, reducing each one.
    pub fn from_coeffs(ctx: &Arc<RingContext>, coeffs: &[u64]) -> Result<Self> {
        if coeffs.len() != ctx.degree {
            return Err(Error::ShapeMismatch(format!(
                "expected {} coefficients, got {}",
                ctx.degree,
                coeffs.len()
            )));
        }
        Ok(Self {
            ctx: ctx.clone(),
            coeffs: coeffs.iter().map(|&c| ctx.modulus.reduce(c)).collect(),
        })
    }

    pub fn from_signed(ctx: &Arc<RingContext>, coeffs: &[i64]) -> Result<Self> {
        if coeffs.len() != ctx.degree {
            return Err(Error::ShapeMismatch(format!(
                "expected {} coefficients, got {}",
                ctx.degree,
                coeffs.len()
            )));
        }
        Ok(Self {
            ctx: ctx.clone(),
            coeffs: coeffs.iter().map(|&c| ctx.modulus.from_i64(c)).collect(),
        })
    }

    pub(crate) fn from_raw(ctx: &Arc<RingContext>, coeffs: Vec<u64>) -> Self {
        debug_assert_eq!(coeffs.len(), ctx.degree);
        debug_assert!(coeffs.iter().all(|&c| c < ctx.q()));
        Self {
            ctx: ctx.clone(),
            coeffs,
        }
    }

    pub fn constant(ctx: &Arc<RingContext>, value: u64) -> Self {
        let mut out = Self::zero(ctx);
        out.coeffs[0] = ctx.modulus.reduce(value);
        out
    }

    /// The monomial `x^power`, with `x^n = -1` applied.
    pub fn monomial(ctx: &Arc<RingContext>, power: usize) -> Self {
        let mut out = Self::zero(ctx);
        let n = ctx.degree;
        let wraps = (power / n) % 2 == 1;
        out.coeffs[power % n] = if wraps { ctx.q() - 1 } else { 1 };
        out
    }

    #[inline]
    pub fn context(&self) -> &Arc<RingContext> {
        &self.ctx
    }

    #[inline]
    pub fn level(&self) -> usize {
        self.ctx.level
    }

    #[inline]
    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    /// Coefficients in the centered range `[-q/2, q/2)`.
    pub fn centered(&self) -> Vec<i64> {
        self.coeffs.iter().map(|&c| self.ctx.modulus.center(c)).collect()
    }

    /// Infinity norm of the centered representative.
    pub fn norm(&self) -> u64 {
        self.centered()
            .iter()
            .map(|c| c.unsigned_abs())
            .max()
            .unwrap_or(0)
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.ctx.level != other.ctx.level {
            return Err(Error::LevelMismatch {
                left: self.ctx.level,
                right: other.ctx.level,
            });
        }
        if !self.ctx.same_ring(&other.ctx) {
            return Err(Error::RingMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.add_assign(other)?;
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.sub_assign(other)?;
        Ok(out)
    }

    pub fn add_assign(&mut self, other: &Self) -> Result<()> {
        self.check(other)?;
        let m = &self.ctx.modulus;
        for (a, &b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a = m.add(*a, b);
        }
        Ok(())
    }

    pub fn sub_assign(&mut self, other: &Self) -> Result<()> {
        self.check(other)?;
        let m = &self.ctx.modulus;
        for (a, &b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a = m.sub(*a, b);
        }
        Ok(())
    }

    pub fn neg(&self) -> Self {
        let m = &self.ctx.modulus;
        Self {
            ctx: self.ctx.clone(),
            coeffs: self.coeffs.iter().map(|&c| m.neg(c)).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(Self {
            ctx: self.ctx.clone(),
            coeffs: self.ctx.multiply(&self.coeffs, &other.coeffs),
        })
    }

    pub fn scalar_mul(&self, k: u64) -> Self {
        let m = &self.ctx.modulus;
        let k = m.reduce(k);
        Self {
            ctx: self.ctx.clone(),
            coeffs: self.coeffs.iter().map(|&c| m.mul(c, k)).collect(),
        }
    }

    /// Binary decomposition: `width` elements with 0/1 coefficients whose
    /// weighted sum `sum 2^i u_i` recomposes `self`.
    pub fn bit_decomp(&self) -> Vec<RingElement> {
        (0..self.ctx.width())
            .map(|i| Self {
                ctx: self.ctx.clone(),
                coeffs: self.coeffs.iter().map(|&c| (c >> i) & 1).collect(),
            })
            .collect()
    }

    /// `(x, 2x, 4x, ...)` with `width` entries.
    pub fn powers_of_two(&self) -> Vec<RingElement> {
        let mut out = Vec::with_capacity(self.ctx.width());
        let mut cur = self.clone();
        for _ in 0..self.ctx.width() {
            let next = cur.add(&cur).expect("same ring");
            out.push(cur);
            cur = next;
        }
        out
    }

    /// Scales coefficients by `q_target / q_self`, rounding each to the
    /// nearest integer congruent to the original modulo `t`.
    pub fn rescale(&self, target: &Arc<RingContext>, t: u64) -> Result<Self> {
        if self.ctx.level == 0 {
            return Err(Error::LevelExhausted(0));
        }
        if target.level + 1 != self.ctx.level || target.degree != self.ctx.degree {
            return Err(Error::LevelMismatch {
                left: self.ctx.level,
                right: target.level,
            });
        }
        let q = self.ctx.q() as i128;
        let q_new = target.q() as i128;
        let t = t as i128;
        let coeffs = self
            .centered()
            .into_iter()
            .map(|x| {
                let x = x as i128;
                let num = x * q_new;
                let floor = num.div_euclid(q);
                let shift = (x - floor).rem_euclid(t);
                let up = floor + shift;
                let down = up - t;
                let y = if (up * q - num).abs() <= (down * q - num).abs() {
                    up
                } else {
                    down
                };
                y.rem_euclid(q_new) as u64
            })
            .collect();
        Ok(Self {
            ctx: target.clone(),
            coeffs,
        })
    }

    /// Reinterprets the centered coefficients in another ring.
    pub fn lift_centered(&self, target: &Arc<RingContext>) -> Self {
        let m = &target.modulus;
        Self {
            ctx: target.clone(),
            coeffs: self.centered().into_iter().map(|c| m.from_i64(c)).collect(),
        }
    }

    pub(crate) fn to_evaluation(&self) -> Evaluation {
        Evaluation::from_element(self)
    }
}

/// An element held in the transform domain, used to amortize repeated
/// products against fixed operands. Falls back to coefficient form when the
/// modulus has no transform.
#[derive(Clone, Debug)]
pub(crate) struct Evaluation {
    values: Vec<u64>,
}

impl Evaluation {
    pub(crate) fn from_element(x: &RingElement) -> Self {
        let mut values = x.coeffs.clone();
        x.ctx.forward(&mut values);
        Self { values }
    }

    pub(crate) fn from_binary(ctx: &RingContext, bits: Vec<u64>) -> Self {
        let mut values = bits;
        ctx.forward(&mut values);
        Self { values }
    }

    pub(crate) fn zero(ctx: &RingContext) -> Self {
        Self {
            values: vec![0; ctx.degree],
        }
    }

    /// `self += a * b`.
    pub(crate) fn mul_acc(&mut self, ctx: &RingContext, a: &Evaluation, b: &Evaluation) {
        if ctx.has_ntt() {
            let m = &ctx.modulus;
            for ((acc, &x), &y) in self.values.iter_mut().zip(&a.values).zip(&b.values) {
                *acc = m.add(*acc, m.mul(x, y));
            }
        } else {
            let prod = ctx.schoolbook(&a.values, &b.values);
            let m = &ctx.modulus;
            for (acc, p) in self.values.iter_mut().zip(prod) {
                *acc = m.add(*acc, p);
            }
        }
    }

    pub(crate) fn into_element(self, ctx: &Arc<RingContext>) -> RingElement {
        let mut values = self.values;
        ctx.inverse(&mut values);
        RingElement::from_raw(ctx, values)
    }
}

/// Binary decomposition of `x` with each bit polynomial moved to the
/// transform domain. All-zero bit planes are reported as `None`.
pub(crate) fn decompose_evaluated(x: &RingElement) -> Vec<Option<Evaluation>> {
    let ctx = &x.ctx;
    (0..ctx.width())
        .map(|i| {
            let bits: Vec<u64> = x.coeffs.iter().map(|&c| (c >> i) & 1).collect();
            bits.iter()
                .any(|&b| b != 0)
                .then(|| Evaluation::from_binary(ctx, bits))
        })
        .collect()
}

/// A polynomial with small signed coefficients, independent of any modulus.
/// Secrets and errors are stored this way so they can be embedded at every
/// level of the chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmallPoly(pub Vec<i64>);

impl SmallPoly {
    pub fn zero(degree: usize) -> Self {
        Self(vec![0; degree])
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.0
    }

    pub fn norm(&self) -> u64 {
        self.0.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn neg(&self) -> Self {
        Self(self.0.iter().map(|a| -a).collect())
    }

    pub fn to_element(&self, ctx: &Arc<RingContext>) -> RingElement {
        let m = &ctx.modulus;
        RingElement {
            ctx: ctx.clone(),
            coeffs: self.0.iter().map(|&c| m.from_i64(c)).collect(),
        }
    }
}

/// Centered discrete Gaussian truncated at `bound`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorDistribution {
    pub stddev: f64,
    pub bound: u64,
}

impl ErrorDistribution {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        self.sample_poly(rng, 1).0[0]
    }

    /// Samples by inversion of a cumulative table over `[-bound, bound]`
    /// with 64-bit resolution.
    pub fn sample_poly<R: Rng + ?Sized>(&self, rng: &mut R, degree: usize) -> SmallPoly {
        if self.bound == 0 {
            return SmallPoly::zero(degree);
        }
        let table = self.cumulative();
        let b = self.bound as i64;
        SmallPoly(
            (0..degree)
                .map(|_| {
                    let u: u64 = rng.gen();
                    table.partition_point(|&c| c < u) as i64 - b
                })
                .collect(),
        )
    }

    fn cumulative(&self) -> Vec<u64> {
        let b = self.bound as i64;
        let denom = 2.0 * self.stddev * self.stddev;
        let weights: Vec<f64> = (-b..=b).map(|z| (-((z * z) as f64) / denom).exp()).collect();
        let total: f64 = weights.iter().sum();
        let mut acc = 0.0;
        let mut table: Vec<u64> = weights
            .iter()
            .map(|w| {
                acc += w;
                (acc / total * 2f64.powi(64)).min(u64::MAX as f64) as u64
            })
            .collect();
        *table.last_mut().expect("bound > 0") = u64::MAX;
        table
    }

    /// Variance of a single sample, capped by the truncation.
    pub fn variance(&self) -> f64 {
        (self.stddev * self.stddev).min((self.bound * self.bound) as f64)
    }
}

pub fn sample_uniform<R: Rng + ?Sized>(rng: &mut R, ctx: &Arc<RingContext>) -> RingElement {
    let q = ctx.q();
    RingElement {
        ctx: ctx.clone(),
        coeffs: (0..ctx.degree).map(|_| rng.gen_range(0..q)).collect(),
    }
}

pub fn sample_error<R: Rng + ?Sized>(
    rng: &mut R,
    ctx: &Arc<RingContext>,
    dist: &ErrorDistribution,
) -> RingElement {
    dist.sample_poly(rng, ctx.degree).to_element(ctx)
}

pub fn sample_binary<R: Rng + ?Sized>(rng: &mut R, ctx: &Arc<RingContext>) -> RingElement {
    RingElement {
        ctx: ctx.clone(),
        coeffs: (0..ctx.degree).map(|_| rng.gen_range(0..2)).collect(),
    }
}

/// Uniform in `[-bound, bound]`, used for smudging.
pub fn sample_bounded_uniform<R: Rng + ?Sized>(rng: &mut R, degree: usize, bound: u64) -> SmallPoly {
    let b = bound as i64;
    SmallPoly((0..degree).map(|_| rng.gen_range(-b..=b)).collect())
}

/// Inner product of two equal-length vectors of ring elements.
pub fn inner_product(a: &[RingElement], b: &[RingElement]) -> Result<RingElement> {
    let first = a
        .first()
        .ok_or_else(|| Error::ShapeMismatch("empty inner product".into()))?;
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch(format!(
            "inner product of lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    let mut acc = RingElement::zero(first.context());
    for (x, y) in a.iter().zip(b) {
        acc.add_assign(&x.mul(y)?)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn ring(n: usize, q: u64) -> Arc<RingContext> {
        RingContext::new(n, q, 0).unwrap()
    }

    /// Negacyclic convolution over the integers, reduced at the end.
    fn convolution_oracle(a: &[u64], b: &[u64], q: u64) -> Vec<u64> {
        let n = a.len();
        let mut acc = vec![0i128; n];
        for i in 0..n {
            for j in 0..n {
                let p = a[i] as i128 * b[j] as i128;
                if i + j < n {
                    acc[i + j] += p;
                } else {
                    acc[i + j - n] -= p;
                }
            }
        }
        acc.into_iter()
            .map(|c| c.rem_euclid(q as i128) as u64)
            .collect()
    }

    fn el(ctx: &Arc<RingContext>, c: &[u64]) -> RingElement {
        RingElement::from_coeffs(ctx, c).unwrap()
    }

    #[test]
    fn additive_identity_and_inverse() {
        let r = ring(4, 17);
        let x = el(&r, &[16, 1, 0, 0]);
        let y = el(&r, &[1, 16, 0, 0]);
        assert_eq!(x.add(&RingElement::zero(&r)).unwrap(), x);
        assert!(x.add(&y).unwrap().is_zero());
    }

    #[test]
    fn add_matches_coefficientwise_oracle() {
        let r = ring(4, 17);
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for _ in 0..50 {
            let (x, y) = (sample_uniform(&mut rng, &r), sample_uniform(&mut rng, &r));
            let expected: Vec<u64> = x
                .coeffs()
                .iter()
                .zip(y.coeffs())
                .map(|(a, b)| (a + b) % 17)
                .collect();
            assert_eq!(x.add(&y).unwrap().coeffs(), expected.as_slice());
        }
    }

    #[test]
    fn wraparound_and_identity() {
        let r = ring(4, 17);
        let x3 = RingElement::monomial(&r, 3);
        let x1 = RingElement::monomial(&r, 1);
        assert_eq!(x3.mul(&x1).unwrap(), RingElement::constant(&r, 16));
        assert_eq!(x1.mul(&RingElement::constant(&r, 1)).unwrap(), x1);
        assert_eq!(RingElement::monomial(&r, 4), RingElement::constant(&r, 16));
    }

    #[test]
    fn ntt_and_schoolbook_agree_with_convolution() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        // 97 = 1 mod 16 has a transform; 8-bit composite does not.
        let big = crate::modulus::find_prime(61, 128, u64::MAX).unwrap();
        for (n, q) in [(8, 97), (8, 221), (16, 12289), (64, big)] {
            let r = ring(n, q);
            assert_eq!(r.has_ntt(), q != 221);
            for _ in 0..20 {
                let (x, y) = (sample_uniform(&mut rng, &r), sample_uniform(&mut rng, &r));
                let got = x.mul(&y).unwrap();
                assert_eq!(got.coeffs(), convolution_oracle(x.coeffs(), y.coeffs(), q));
            }
        }
    }

    #[test]
    fn mixing_levels_is_rejected() {
        let a = RingElement::zero(&RingContext::new(4, 17, 0).unwrap());
        let b = RingElement::zero(&RingContext::new(4, 17, 1).unwrap());
        assert_eq!(
            a.add(&b),
            Err(Error::LevelMismatch { left: 0, right: 1 })
        );
        assert!(a.mul(&b).is_err());
    }

    #[test]
    fn bit_decomp_and_powers_small_cases() {
        let r = ring(4, 8);
        let six = RingElement::constant(&r, 6);
        let bits: Vec<u64> = six.bit_decomp().iter().map(|b| b.coeffs()[0]).collect();
        assert_eq!(bits, [0, 1, 1]);
        assert!(RingElement::zero(&r).bit_decomp().iter().all(|b| b.is_zero()));
        let powers: Vec<u64> = RingElement::constant(&r, 1)
            .powers_of_two()
            .iter()
            .map(|p| p.coeffs()[0])
            .collect();
        assert_eq!(powers, [1, 2, 4]);
        assert!(RingElement::zero(&r).powers_of_two().iter().all(|p| p.is_zero()));
    }

    #[test]
    fn error_sampler_bounds() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let zero = ErrorDistribution { stddev: 3.2, bound: 0 };
        assert_eq!(zero.sample_poly(&mut rng, 16), SmallPoly::zero(16));
        let dist = ErrorDistribution { stddev: 3.2, bound: 8 };
        let max = (0..10_000).map(|_| dist.sample(&mut rng).abs()).max().unwrap();
        assert!(max <= 8);
        assert_eq!(max, 8);
    }

    #[test]
    fn samplers_are_reproducible() {
        let r = ring(16, 12289);
        let dist = ErrorDistribution { stddev: 3.2, bound: 19 };
        let draw = |seed| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            (
                sample_uniform(&mut rng, &r),
                sample_error(&mut rng, &r, &dist),
                sample_binary(&mut rng, &r),
            )
        };
        assert_eq!(draw(9), draw(9));
        let (_, _, b) = draw(9);
        assert!(b.coeffs().iter().all(|&c| c < 2));
    }

    #[test]
    fn rescale_of_zero_and_at_level_zero() {
        let hi = RingContext::new(4, 97, 1).unwrap();
        let lo = RingContext::new(4, 17, 0).unwrap();
        assert!(RingElement::zero(&hi).rescale(&lo, 2).unwrap().is_zero());
        assert_eq!(
            RingElement::zero(&lo).rescale(&lo, 2),
            Err(Error::LevelExhausted(0))
        );
    }

    proptest! {
        #[test]
        fn gadget_identity(seed: u64) {
            let r = ring(16, 12289);
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let (c, s) = (sample_uniform(&mut rng, &r), sample_uniform(&mut rng, &r));
            let lhs = inner_product(&c.bit_decomp(), &s.powers_of_two()).unwrap();
            prop_assert_eq!(lhs, c.mul(&s).unwrap());
            let mut recomposed = RingElement::zero(&r);
            for (i, b) in c.bit_decomp().iter().enumerate() {
                recomposed.add_assign(&b.scalar_mul(1 << i)).unwrap();
            }
            prop_assert_eq!(recomposed, c);
        }

        #[test]
        fn ring_axioms(seed: u64) {
            let r = ring(8, 97);
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let (a, b, c) = (
                sample_uniform(&mut rng, &r),
                sample_uniform(&mut rng, &r),
                sample_uniform(&mut rng, &r),
            );
            prop_assert_eq!(a.mul(&b).unwrap(), b.mul(&a).unwrap());
            prop_assert_eq!(
                a.mul(&b).unwrap().mul(&c).unwrap(),
                a.mul(&b.mul(&c).unwrap()).unwrap()
            );
            prop_assert_eq!(
                a.mul(&b.add(&c).unwrap()).unwrap(),
                a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap()
            );
        }

        #[test]
        fn rescale_preserves_residue_and_scale(seed: u64, t in 2u64..9) {
            // q_hi = q_lo = 1 mod t is not needed for the per-coefficient residue.
            let hi = RingContext::new(16, (1 << 61) - 1, 1).unwrap();
            let lo = RingContext::new(16, (1 << 36) + 31, 0).unwrap();
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let x = sample_uniform(&mut rng, &hi);
            let y = x.rescale(&lo, t).unwrap();
            let ratio = lo.q() as f64 / hi.q() as f64;
            for (a, b) in x.centered().iter().zip(y.centered()) {
                prop_assert_eq!(a.rem_euclid(t as i64), b.rem_euclid(t as i64));
                prop_assert!((*a as f64 * ratio - b as f64).abs() <= t as f64 / 2.0 + 1e-6);
            }
        }
    }
}
