use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wire::{BodyReader, BodyWriter, Header, HeaderFields, ObjectKind, WireObject};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Setup,
    Encrypt,
    Evaluate,
    Decrypt,
}

impl Phase {
    pub const ALL: [Phase; 4] = [Phase::Setup, Phase::Encrypt, Phase::Evaluate, Phase::Decrypt];

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Setup => "setup",
            Phase::Encrypt => "encrypt",
            Phase::Evaluate => "evaluate",
            Phase::Decrypt => "decrypt",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What a message carries. Each kind belongs to exactly one phase.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PayloadKind {
    KeyShare,
    JointKeys,
    ClientKeys,
    Model,
    Query,
    Result,
    DecryptRequest,
    Partial,
}

impl PayloadKind {
    pub fn phase(self) -> Phase {
        match self {
            PayloadKind::KeyShare | PayloadKind::JointKeys | PayloadKind::ClientKeys => Phase::Setup,
            PayloadKind::Model | PayloadKind::Query => Phase::Encrypt,
            PayloadKind::Result => Phase::Evaluate,
            PayloadKind::DecryptRequest | PayloadKind::Partial => Phase::Decrypt,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PayloadKind::KeyShare => "key-share",
            PayloadKind::JointKeys => "joint-keys",
            PayloadKind::ClientKeys => "client-keys",
            PayloadKind::Model => "model",
            PayloadKind::Query => "query",
            PayloadKind::Result => "result",
            PayloadKind::DecryptRequest => "decrypt-request",
            PayloadKind::Partial => "partial",
        }
    }
}

/// One logged message. `subvectors` lists the sub-vector count of every
/// ciphertext in the payload; `payload` holds the serialized bytes when the
/// transcript keeps them.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub seq: u64,
    pub sender: String,
    pub receiver: String,
    pub phase: Phase,
    pub payload_type: PayloadKind,
    pub payload_bytes: usize,
    pub subvectors: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "hex_bytes")]
    pub payload: Option<Vec<u8>>,
}

mod hex_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &Option<Vec<u8>>, s: S) -> Result<S::Ok, S::Error> {
        match bytes {
            Some(b) => s.serialize_str(&hex::encode(b)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<u8>>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|s| hex::decode(s).map_err(serde::de::Error::custom))
            .transpose()
    }
}

/// Append-only message log.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Transcript {
    records: Vec<TranscriptRecord>,
}

impl Transcript {
    pub fn records(&self) -> &[TranscriptRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Appends a record, enforcing increasing sequence numbers and the
    /// payload's phase.
    pub fn push(&mut self, record: TranscriptRecord) -> Result<()> {
        if let Some(last) = self.records.last() {
            if record.seq <= last.seq {
                return Err(Error::Protocol(format!(
                    "sequence number {} after {}",
                    record.seq, last.seq
                )));
            }
        }
        if record.payload_type.phase() != record.phase {
            return Err(Error::Protocol(format!(
                "{} payload in the {} phase",
                record.payload_type.as_str(),
                record.phase
            )));
        }
        self.records.push(record);
        Ok(())
    }

    pub fn count(&self, phase: Phase) -> usize {
        self.records.iter().filter(|r| r.phase == phase).count()
    }

    /// Messages in `phase` with `party` as sender or receiver.
    pub fn interactions(&self, phase: Phase, party: impl Fn(&str) -> bool) -> usize {
        self.records
            .iter()
            .filter(|r| r.phase == phase && (party(&r.sender) || party(&r.receiver)))
            .count()
    }

    pub fn max_subvectors(&self) -> usize {
        self.records
            .iter()
            .flat_map(|r| r.subvectors.iter().copied())
            .max()
            .unwrap_or(0)
    }

    pub fn to_json_lines(&self) -> String {
        self.records
            .iter()
            .map(|r| serde_json::to_string(r).expect("transcript records serialize") + "\n")
            .collect()
    }

    /// Same lines with payload bytes dropped.
    pub fn to_json_lines_without_payloads(&self) -> String {
        let mut stripped = self.clone();
        stripped.records.iter_mut().for_each(|r| r.payload = None);
        stripped.to_json_lines()
    }

    pub fn from_json_lines(text: &str) -> Result<Self> {
        let mut out = Self::default();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let record = serde_json::from_str(line)
                .map_err(|e| Error::Decode(format!("transcript line {}: {e}", i + 1)))?;
            out.push(record)?;
        }
        Ok(out)
    }
}

impl WireObject for Transcript {
    const KIND: ObjectKind = ObjectKind::Transcript;

    fn header_fields(&self) -> HeaderFields {
        HeaderFields {
            level: 0,
            keyset: Vec::new(),
            subvectors: self.max_subvectors(),
        }
    }

    fn write_body(&self, w: &mut BodyWriter) {
        w.bytes(self.to_json_lines().as_bytes());
    }

    fn read_body(r: &mut BodyReader<'_>, _: &Header) -> Result<Self> {
        let text = String::from_utf8(r.bytes()?)
            .map_err(|_| Error::Decode("transcript is not UTF-8".into()))?;
        Self::from_json_lines(&text)
    }
}
