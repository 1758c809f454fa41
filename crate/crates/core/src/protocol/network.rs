use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use crate::bgv::{LeveledCiphertext, PublicKey};
use crate::error::{Error, Result};
use crate::mkbgv::EvalHelper;
use crate::params::RingParams;
use crate::ring::RingElement;
use crate::threshold::{PartialDecryption, SecretShare};
use crate::wire::encode;
use crate::OwnerId;

use super::transcript::{PayloadKind, Phase, Transcript, TranscriptRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Dealer,
    Owner(OwnerId),
    Client,
    Evaluator,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::Dealer => f.write_str("dealer"),
            Role::Owner(id) => write!(f, "{id}"),
            Role::Client => f.write_str("client"),
            Role::Evaluator => f.write_str("evaluator"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    KeyShare {
        share: SecretShare,
        joint_pk: PublicKey,
    },
    JointKeys {
        pk: PublicKey,
        helper: EvalHelper,
    },
    ClientKeys {
        pk: PublicKey,
        helper: EvalHelper,
    },
    /// `[y_i]`, `[A_i]`, `[B_i]` under the joint key.
    Model {
        threshold: LeveledCiphertext,
        a: LeveledCiphertext,
        b: LeveledCiphertext,
    },
    Query(LeveledCiphertext),
    /// The joint-key component `c_{M,1}` of the result.
    DecryptRequest {
        request: u64,
        c1: RingElement,
    },
    Partial(PartialDecryption),
    Result {
        request: u64,
        result: LeveledCiphertext,
        rho: RingElement,
    },
}

impl Payload {
    pub fn kind(&self) -> PayloadKind {
        match self {
            Payload::KeyShare { .. } => PayloadKind::KeyShare,
            Payload::JointKeys { .. } => PayloadKind::JointKeys,
            Payload::ClientKeys { .. } => PayloadKind::ClientKeys,
            Payload::Model { .. } => PayloadKind::Model,
            Payload::Query(_) => PayloadKind::Query,
            Payload::DecryptRequest { .. } => PayloadKind::DecryptRequest,
            Payload::Partial(_) => PayloadKind::Partial,
            Payload::Result { .. } => PayloadKind::Result,
        }
    }

    pub fn ciphertexts(&self) -> Vec<&LeveledCiphertext> {
        match self {
            Payload::Model { threshold, a, b } => vec![threshold, a, b],
            Payload::Query(c) => vec![c],
            Payload::Result { result, .. } => vec![result],
            _ => Vec::new(),
        }
    }

    /// Wire bytes: serialized objects back to back. Bare ring elements are
    /// written as the request id followed by their residues.
    pub fn encode(&self, preset: &str, params: &RingParams) -> Result<Vec<u8>> {
        let raw = |request: u64, x: &RingElement| {
            std::iter::once(request)
                .chain(x.coeffs().iter().copied())
                .flat_map(u64::to_le_bytes)
                .collect::<Vec<u8>>()
        };
        Ok(match self {
            Payload::KeyShare { share, joint_pk } => {
                [encode(share, preset, params)?, encode(joint_pk, preset, params)?].concat()
            }
            Payload::JointKeys { pk, helper } | Payload::ClientKeys { pk, helper } => {
                [encode(pk, preset, params)?, encode(helper, preset, params)?].concat()
            }
            Payload::Model { threshold, a, b } => [
                encode(threshold, preset, params)?,
                encode(a, preset, params)?,
                encode(b, preset, params)?,
            ]
            .concat(),
            Payload::Query(c) => encode(c, preset, params)?,
            Payload::DecryptRequest { request, c1 } => raw(*request, c1),
            Payload::Partial(p) => raw(p.request(), p.rho()),
            Payload::Result {
                request,
                result,
                rho,
            } => [encode(result, preset, params)?, raw(*request, rho)].concat(),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolMessage {
    pub seq: u64,
    pub sender: Role,
    pub receiver: Role,
    pub phase: Phase,
    pub payload: Payload,
}

/// In-memory ordered channels, one per receiver, with every send logged.
pub struct Network {
    preset: String,
    params: RingParams,
    keep_payloads: bool,
    next_seq: u64,
    queues: BTreeMap<Role, VecDeque<ProtocolMessage>>,
    transcript: Transcript,
}

impl Network {
    pub fn new(preset: &str, params: &RingParams, keep_payloads: bool) -> Self {
        Self {
            preset: preset.to_string(),
            params: params.clone(),
            keep_payloads,
            next_seq: 0,
            queues: BTreeMap::new(),
            transcript: Transcript::default(),
        }
    }

    pub fn send(&mut self, sender: Role, receiver: Role, payload: Payload) -> Result<()> {
        if sender == receiver {
            return Err(Error::Protocol(format!("{sender} cannot message itself")));
        }
        let bytes = payload.encode(&self.preset, &self.params)?;
        let phase = payload.kind().phase();
        let msg = ProtocolMessage {
            seq: self.next_seq,
            sender,
            receiver,
            phase,
            payload,
        };
        self.transcript.push(TranscriptRecord {
            seq: msg.seq,
            sender: sender.to_string(),
            receiver: receiver.to_string(),
            phase,
            payload_type: msg.payload.kind(),
            payload_bytes: bytes.len(),
            subvectors: msg
                .payload
                .ciphertexts()
                .iter()
                .map(|c| c.subvector_count())
                .collect(),
            payload: self.keep_payloads.then_some(bytes),
        })?;
        self.next_seq += 1;
        self.queues.entry(receiver).or_default().push_back(msg);
        Ok(())
    }

    pub fn recv(&mut self, receiver: Role) -> Option<ProtocolMessage> {
        self.queues.get_mut(&receiver)?.pop_front()
    }

    /// Fails unless every queue has been drained.
    pub fn ensure_idle(&self) -> Result<()> {
        match self.queues.iter().find(|(_, q)| !q.is_empty()) {
            None => Ok(()),
            Some((role, q)) => Err(Error::Protocol(format!(
                "{} undelivered messages for {role}",
                q.len()
            ))),
        }
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }
}
