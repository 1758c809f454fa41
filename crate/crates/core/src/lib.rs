//! Threshold and multi-key BGV homomorphic encryption.
//!
//! A group of model owners shares one joint key produced by a trusted dealer,
//! a client holds an independent key, and an evaluator combines ciphertexts
//! under both keys into two-block extended ciphertexts. The [`protocol`]
//! module simulates the full collaborative decision-forest evaluation.

pub mod bgv;
pub mod error;
pub mod mkbgv;
pub mod modulus;
pub mod noise;
pub mod params;
pub mod presets;
pub mod protocol;
pub mod rgsw;
pub mod ring;
pub mod threshold;
pub mod wire;

pub use error::{Error, Result};
pub use noise::NoiseEstimate;
pub use params::RingParams;
pub use ring::{RingContext, RingElement, SmallPoly};

use serde::{Deserialize, Serialize};
use std::fmt;

/// Identifies a secret key: a single party's key or the owners' joint key.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct KeyId(pub u32);

impl fmt::Display for KeyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Identifies a model owner holding one share of the joint key.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OwnerId(pub u32);

impl fmt::Display for OwnerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "M{}", self.0)
    }
}
