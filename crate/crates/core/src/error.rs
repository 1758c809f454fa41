use thiserror::Error;

use crate::{KeyId, OwnerId};

/// Errors raised by ring arithmetic, the encryption schemes and the protocol.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("level mismatch: {left} vs {right}")]
    LevelMismatch { left: usize, right: usize },

    #[error("ring mismatch: operands live in different rings")]
    RingMismatch,

    #[error("no lower level below level {0}")]
    LevelExhausted(usize),

    #[error("key set mismatch")]
    KeysetMismatch,

    #[error("key {0} is not part of the target key set")]
    KeyNotInSet(KeyId),

    #[error("plaintext coefficient {value} out of range for modulus {t}")]
    PlaintextOutOfRange { value: u64, t: u64 },

    #[error("noise bound 2^{bound_bits:.1} reaches half the modulus 2^{limit_bits:.1}")]
    NoiseOverflow { bound_bits: f64, limit_bits: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("public keys do not share the common reference")]
    ReferenceMismatch,

    #[error("missing evaluation material: {0}")]
    MissingMaterial(String),

    #[error("missing partial decryption from owner {0}")]
    MissingPartial(OwnerId),

    #[error("duplicate partial decryption from owner {0}")]
    DuplicatePartial(OwnerId),

    #[error("partial decryption answers request {got}, expected {expected}")]
    RequestMismatch { expected: u64, got: u64 },

    #[error("plaintext modulus {t} cannot hold a tally of {owners} votes")]
    TallyOverflow { t: u64, owners: usize },

    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("decoding failed: {0}")]
    Decode(String),
}

pub type Result<T> = std::result::Result<T, Error>;
