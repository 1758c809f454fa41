use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::OwnerId;

/// A one-node tree held by one owner: output `a` when the client bit differs
/// from `threshold`, `b` otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionStump {
    owner: OwnerId,
    threshold: u8,
    a: u8,
    b: u8,
}

fn bit(name: &str, value: u8) -> Result<u8> {
    match value {
        0 | 1 => Ok(value),
        _ => Err(Error::Protocol(format!("{name} must be a bit, got {value}"))),
    }
}

impl DecisionStump {
    pub fn new(owner: OwnerId, threshold: u8, a: u8, b: u8) -> Result<Self> {
        Ok(Self {
            owner,
            threshold: bit("threshold", threshold)?,
            a: bit("label A", a)?,
            b: bit("label B", b)?,
        })
    }

    pub fn random<R: Rng + ?Sized>(owner: OwnerId, rng: &mut R) -> Self {
        Self {
            owner,
            threshold: rng.gen_range(0..2),
            a: rng.gen_range(0..2),
            b: rng.gen_range(0..2),
        }
    }

    pub fn owner(&self) -> OwnerId {
        self.owner
    }

    pub fn threshold(&self) -> u8 {
        self.threshold
    }

    pub fn a(&self) -> u8 {
        self.a
    }

    pub fn b(&self) -> u8 {
        self.b
    }

    /// Evaluates `b_i * A + (1 - b_i) * B` with `b_i = x XOR y_i` over the
    /// integers.
    pub fn eval(&self, x: u8) -> u8 {
        let d = (x ^ self.threshold) as i32;
        (d * self.a as i32 + (1 - d) * self.b as i32) as u8
    }
}

/// Majority label for a tally of `owners` votes. Ties go to class 0.
pub fn majority(tally: u64, owners: usize) -> u8 {
    (2 * tally > owners as u64) as u8
}

/// Plaintext forest: the vote count and the majority label.
pub fn plaintext_forest(stumps: &[DecisionStump], x: u8) -> (u64, u8) {
    let tally = stumps.iter().map(|s| s.eval(x) as u64).sum();
    (tally, majority(tally, stumps.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stump_truth_table() {
        for bits in 0..16u8 {
            let (x, y, a, b) = (bits & 1, bits >> 1 & 1, bits >> 2 & 1, bits >> 3 & 1);
            let s = DecisionStump::new(OwnerId(0), y, a, b).unwrap();
            let expected = if x != y { a } else { b };
            assert_eq!(s.eval(x), expected, "x={x} y={y} A={a} B={b}");
        }
        assert!(DecisionStump::new(OwnerId(0), 2, 0, 0).is_err());
        assert!(DecisionStump::new(OwnerId(0), 0, 0, 7).is_err());
    }

    #[test]
    fn majority_rule() {
        assert_eq!(majority(2, 3), 1);
        assert_eq!(majority(1, 3), 0);
        assert_eq!(majority(1, 2), 0, "ties go to class 0");
        assert_eq!(majority(3, 4), 1);
        let stumps: Vec<_> = [(0, 1, 0), (1, 0, 1), (0, 1, 1)]
            .iter()
            .enumerate()
            .map(|(i, &(y, a, b))| DecisionStump::new(OwnerId(i as u32), y, a, b).unwrap())
            .collect();
        assert_eq!(plaintext_forest(&stumps, 1), (3, 1));
        assert_eq!(plaintext_forest(&stumps, 0), (1, 0));
    }
}
