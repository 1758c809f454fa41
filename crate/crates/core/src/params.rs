//! Ring parameters and the modulus chain.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::modulus::{find_prime, gcd, Modulus};
use crate::noise::NoiseEstimate;
use crate::ring::{ErrorDistribution, RingContext, RingElement};

pub const DEFAULT_STDDEV: f64 = 3.2;
pub const DEFAULT_NOISE_BOUND: u64 = 19;

/// Validated parameters shared by every key and ciphertext.
///
/// Moduli are indexed by level: `q(0)` is the smallest modulus and
/// `q(max_level())` the one fresh ciphertexts start at.
#[derive(Clone, Debug)]
pub struct RingParams {
    degree: usize,
    t: u64,
    noise: ErrorDistribution,
    smudging_bound: u64,
    levels: Vec<Arc<RingContext>>,
}

impl PartialEq for RingParams {
    fn eq(&self, other: &Self) -> bool {
        self.degree == other.degree
            && self.t == other.t
            && self.noise == other.noise
            && self.smudging_bound == other.smudging_bound
            && self.moduli() == other.moduli()
    }
}

impl RingParams {
    pub fn builder(degree: usize, t: u64) -> RingParamsBuilder {
        RingParamsBuilder {
            degree,
            t,
            modulus_bits: vec![36, 40, 48, 61],
            moduli: None,
            noise: ErrorDistribution {
                stddev: DEFAULT_STDDEV,
                bound: DEFAULT_NOISE_BOUND,
            },
            smudging_bound: None,
        }
    }

    #[inline]
    pub fn degree(&self) -> usize {
        self.degree
    }

    #[inline]
    pub fn t(&self) -> u64 {
        self.t
    }

    #[inline]
    pub fn noise(&self) -> &ErrorDistribution {
        &self.noise
    }

    #[inline]
    pub fn smudging_bound(&self) -> u64 {
        self.smudging_bound
    }

    /// Index of the top level, `L`.
    #[inline]
    pub fn max_level(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn context(&self, level: usize) -> Result<&Arc<RingContext>> {
        self.levels
            .get(level)
            .ok_or_else(|| Error::InvalidParams(format!("no level {level}")))
    }

    /// Context lookup for levels already validated by the caller.
    pub(crate) fn ctx(&self, level: usize) -> &Arc<RingContext> {
        &self.levels[level]
    }

    pub fn q(&self, level: usize) -> u64 {
        self.levels[level].q()
    }

    /// Gadget width at a level.
    pub fn width(&self, level: usize) -> usize {
        self.levels[level].width()
    }

    pub fn moduli(&self) -> Vec<u64> {
        self.levels.iter().map(|c| c.q()).collect()
    }

    pub fn sigma2(&self) -> f64 {
        self.noise.variance()
    }

    /// Encodes plaintext coefficients at a level, rejecting values `>= t`.
    pub fn encode(&self, level: usize, message: &[u64]) -> Result<RingElement> {
        if let Some(&value) = message.iter().find(|&&m| m >= self.t) {
            return Err(Error::PlaintextOutOfRange { value, t: self.t });
        }
        let mut coeffs = vec![0; self.degree];
        if message.len() > self.degree {
            return Err(Error::ShapeMismatch(format!(
                "plaintext has {} coefficients, ring degree is {}",
                message.len(),
                self.degree
            )));
        }
        coeffs[..message.len()].copy_from_slice(message);
        RingElement::from_coeffs(self.context(level)?, &coeffs)
    }

    /// Reduces a centered decryption result modulo `t`.
    pub fn decode(&self, noisy: &RingElement) -> Vec<u64> {
        let t = self.t as i64;
        noisy
            .centered()
            .into_iter()
            .map(|c| c.rem_euclid(t) as u64)
            .collect()
    }
}

/// Builds [`RingParams`], either from bit sizes (primes are searched) or from
/// explicit moduli.
#[derive(Clone, Debug)]
pub struct RingParamsBuilder {
    degree: usize,
    t: u64,
    modulus_bits: Vec<u32>,
    moduli: Option<Vec<u64>>,
    noise: ErrorDistribution,
    smudging_bound: Option<u64>,
}

impl RingParamsBuilder {
    /// Bit sizes of `q_0, ..., q_L`, strictly increasing.
    pub fn modulus_bits(mut self, bits: &[u32]) -> Self {
        self.modulus_bits = bits.to_vec();
        self.moduli = None;
        self
    }

    /// Explicit moduli `q_0, ..., q_L`.
    pub fn moduli(mut self, moduli: &[u64]) -> Self {
        self.moduli = Some(moduli.to_vec());
        self
    }

    pub fn noise(mut self, stddev: f64, bound: u64) -> Self {
        self.noise = ErrorDistribution { stddev, bound };
        self
    }

    pub fn smudging_bound(mut self, bound: u64) -> Self {
        self.smudging_bound = Some(bound);
        self
    }

    fn search_moduli(&self) -> Result<Vec<u64>> {
        let step = lcm(2 * self.degree as u64, self.t)?;
        let mut out = Vec::with_capacity(self.modulus_bits.len());
        for &bits in &self.modulus_bits {
            let mut below = u64::MAX;
            // Distinct primes even when two levels share a bit size.
            let prime = loop {
                match find_prime(bits, step, below) {
                    Some(p) if out.contains(&p) => below = p,
                    Some(p) => break p,
                    None => {
                        return Err(Error::InvalidParams(format!(
                            "no {bits}-bit prime congruent to 1 mod {step}"
                        )))
                    }
                }
            };
            out.push(prime);
        }
        Ok(out)
    }

    pub fn build(self) -> Result<RingParams> {
        let degree = self.degree;
        if !degree.is_power_of_two() || degree < 4 {
            return Err(Error::InvalidParams(format!(
                "degree {degree} must be a power of two and at least 4"
            )));
        }
        if self.t < 2 {
            return Err(Error::InvalidParams("plaintext modulus below 2".into()));
        }
        let moduli = match &self.moduli {
            Some(m) => m.clone(),
            None => self.search_moduli()?,
        };
        if moduli.len() < 2 {
            return Err(Error::InvalidParams("need at least two levels".into()));
        }
        for pair in moduli.windows(2) {
            if pair[0] >= pair[1] {
                return Err(Error::InvalidParams(
                    "moduli must strictly increase with the level".into(),
                ));
            }
        }
        for &q in &moduli {
            Modulus::new(q)?;
            if q % 2 == 0 {
                return Err(Error::InvalidParams(format!("modulus {q} is even")));
            }
            if gcd(q, self.t) != 1 {
                return Err(Error::InvalidParams(format!(
                    "modulus {q} is not coprime to t = {}",
                    self.t
                )));
            }
            // Modulus switching keeps the plaintext only when q_l = q_{l-1} mod t.
            if q % self.t != 1 {
                return Err(Error::InvalidParams(format!(
                    "modulus {q} is not 1 mod t = {}",
                    self.t
                )));
            }
        }
        let levels = moduli
            .iter()
            .enumerate()
            .map(|(l, &q)| RingContext::new(degree, q, l))
            .collect::<Result<Vec<_>>>()?;
        let params = RingParams {
            degree,
            t: self.t,
            noise: self.noise,
            smudging_bound: self.smudging_bound.unwrap_or(self.t << 20),
            levels,
        };
        let sigma2 = params.sigma2();
        let fresh = NoiseEstimate::public_encryption(params.t, degree, sigma2, sigma2, sigma2);
        if !fresh.fits(params.q(0)) {
            return Err(Error::InvalidParams(format!(
                "fresh noise bound 2^{:.1} does not fit below q_0/2",
                fresh.bits()
            )));
        }
        Ok(params)
    }
}

fn lcm(a: u64, b: u64) -> Result<u64> {
    (a / gcd(a, b))
        .checked_mul(b)
        .ok_or_else(|| Error::InvalidParams("modulus step overflows".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_chain_is_ntt_friendly() {
        let p = RingParams::builder(16, 2).build().unwrap();
        assert_eq!(p.max_level(), 3);
        let widths: Vec<usize> = (0..=3).map(|l| p.width(l)).collect();
        assert_eq!(widths, [36, 40, 48, 61]);
        for l in 0..=3 {
            assert!(p.context(l).unwrap().has_ntt());
            assert_eq!(p.q(l) % 32, 1);
        }
        assert_eq!(p.smudging_bound(), 2 << 20);
    }

    #[test]
    fn odd_plaintext_modulus_chain() {
        let p = RingParams::builder(16, 5).build().unwrap();
        assert!(p.moduli().iter().all(|q| q % 5 == 1 && q % 32 == 1));
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(RingParams::builder(12, 2).build().is_err());
        assert!(RingParams::builder(2, 2).build().is_err());
        assert!(RingParams::builder(16, 1).build().is_err());
        assert!(RingParams::builder(16, 2).moduli(&[97, 97]).build().is_err());
        assert!(RingParams::builder(16, 2).moduli(&[193, 97]).build().is_err());
        // Far too small for fresh noise.
        assert!(RingParams::builder(16, 2).moduli(&[97, 193]).build().is_err());
    }

    #[test]
    fn encode_rejects_out_of_range() {
        let p = RingParams::builder(16, 2).build().unwrap();
        assert_eq!(
            p.encode(3, &[2]),
            Err(Error::PlaintextOutOfRange { value: 2, t: 2 })
        );
        assert_eq!(p.encode(3, &[1]).unwrap().coeffs()[0], 1);
    }
}
