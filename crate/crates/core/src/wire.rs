//! Byte-exact, versioned file format for keys, ciphertexts and transcripts.
//!
//! ```text
//! "MKTH" | version u16 | kind u8 | name_len u8 | preset name
//!        | level u32 | keyset bitmap u64 | sub-vectors u32 | body_len u64
//!        | body: body_len x u64 | crc32 u32
//! ```
//!
//! All integers are little-endian. Ring coefficients are stored as residues
//! in `[0, q)`, row-major in the order the structure lists them. The CRC
//! covers every preceding byte.

use std::sync::Arc;

use crate::bgv::{KeySwitchKey, LeveledCiphertext, PublicKey, PublicLevel, SecretKey};
use crate::error::{Error, Result};
use crate::mkbgv::{EvalHelper, ExtendedEvalKey, GswPair, HelperLevel};
use crate::noise::NoiseEstimate;
use crate::params::RingParams;
use crate::rgsw::{RandomnessEncryption, RgswCiphertext};
use crate::ring::{RingContext, RingElement, SmallPoly};
use crate::threshold::SecretShare;
use crate::{KeyId, OwnerId};

pub const MAGIC: &[u8; 4] = b"MKTH";
pub const FORMAT_VERSION: u16 = 1;

const FIXED_HEADER: usize = 4 + 2 + 1 + 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObjectKind {
    PublicKey,
    SecretShare,
    Ciphertext,
    Rgsw,
    EvalKey,
    Transcript,
}

impl ObjectKind {
    fn tag(self) -> u8 {
        match self {
            ObjectKind::PublicKey => 1,
            ObjectKind::SecretShare => 2,
            ObjectKind::Ciphertext => 3,
            ObjectKind::Rgsw => 4,
            ObjectKind::EvalKey => 5,
            ObjectKind::Transcript => 6,
        }
    }

    fn from_tag(tag: u8) -> Result<Self> {
        Ok(match tag {
            1 => ObjectKind::PublicKey,
            2 => ObjectKind::SecretShare,
            3 => ObjectKind::Ciphertext,
            4 => ObjectKind::Rgsw,
            5 => ObjectKind::EvalKey,
            6 => ObjectKind::Transcript,
            other => return Err(Error::Decode(format!("unknown object kind {other}"))),
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ObjectKind::PublicKey => "pk",
            ObjectKind::SecretShare => "sk-share",
            ObjectKind::Ciphertext => "ciphertext",
            ObjectKind::Rgsw => "rgsw",
            ObjectKind::EvalKey => "evalkey",
            ObjectKind::Transcript => "transcript",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Header {
    pub version: u16,
    pub kind: ObjectKind,
    pub preset: String,
    pub level: u32,
    pub keyset: u64,
    pub subvectors: u32,
}

/// Bit `i` set for every `KeyId(i)` in `keys`.
pub fn keyset_bitmap(keys: &[KeyId]) -> Result<u64> {
    keys.iter().try_fold(0u64, |acc, k| match k.0 {
        i if i < 64 => Ok(acc | 1 << i),
        _ => Err(Error::Decode(format!("key {k} does not fit the keyset bitmap"))),
    })
}

/// A header and body of 64-bit words.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SerializedObject {
    pub header: Header,
    pub body: Vec<u64>,
}

impl SerializedObject {
    pub fn to_bytes(&self) -> Vec<u8> {
        let h = &self.header;
        let name = h.preset.as_bytes();
        let mut out = Vec::with_capacity(FIXED_HEADER + name.len() + 28 + 8 * self.body.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&h.version.to_le_bytes());
        out.push(h.kind.tag());
        out.push(name.len() as u8);
        out.extend_from_slice(name);
        out.extend_from_slice(&h.level.to_le_bytes());
        out.extend_from_slice(&h.keyset.to_le_bytes());
        out.extend_from_slice(&h.subvectors.to_le_bytes());
        out.extend_from_slice(&(self.body.len() as u64).to_le_bytes());
        for w in &self.body {
            out.extend_from_slice(&w.to_le_bytes());
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor { bytes, pos: 0 };
        if cur.take(4)? != MAGIC {
            return Err(Error::Decode("not an MKTH file".into()));
        }
        let version = u16::from_le_bytes(cur.array()?);
        if version > FORMAT_VERSION {
            return Err(Error::Decode(format!(
                "format version {version} is newer than supported version {FORMAT_VERSION}"
            )));
        }
        let kind = ObjectKind::from_tag(cur.take(1)?[0])?;
        let name_len = cur.take(1)?[0] as usize;
        let preset = String::from_utf8(cur.take(name_len)?.to_vec())
            .map_err(|_| Error::Decode("preset name is not UTF-8".into()))?;
        let level = u32::from_le_bytes(cur.array()?);
        let keyset = u64::from_le_bytes(cur.array()?);
        let subvectors = u32::from_le_bytes(cur.array()?);
        let len = u64::from_le_bytes(cur.array()?);
        let expected = cur.pos as u64 + len.saturating_mul(8) + 4;
        if bytes.len() as u64 != expected {
            return Err(Error::Decode(format!(
                "file is {} bytes, header announces {expected}",
                bytes.len()
            )));
        }
        let body = (0..len)
            .map(|_| cur.array().map(u64::from_le_bytes))
            .collect::<Result<Vec<_>>>()?;
        let stored = u32::from_le_bytes(cur.array()?);
        if crc32fast::hash(&bytes[..bytes.len() - 4]) != stored {
            return Err(Error::Decode("checksum mismatch".into()));
        }
        Ok(Self {
            header: Header {
                version,
                kind,
                preset,
                level,
                keyset,
                subvectors,
            },
            body,
        })
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        let out = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::Decode("file is truncated".into()))?;
        self.pos = end;
        Ok(out)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("slice of length N"))
    }
}

/// Appends body words.
pub struct BodyWriter {
    words: Vec<u64>,
    moduli: Vec<u64>,
}

impl BodyWriter {
    pub fn word(&mut self, w: u64) {
        self.words.push(w);
    }

    pub fn len(&mut self, n: usize) {
        self.word(n as u64);
    }

    pub fn float(&mut self, x: f64) {
        self.word(x.to_bits());
    }

    pub fn key(&mut self, k: KeyId) {
        self.word(k.0 as u64);
    }

    pub fn keys(&mut self, keys: &[KeyId]) {
        self.len(keys.len());
        keys.iter().for_each(|&k| self.key(k));
    }

    pub fn element(&mut self, x: &RingElement) {
        self.words.extend_from_slice(x.coeffs());
    }

    /// A level word followed by the elements, all at that level.
    pub fn elements<'a>(&mut self, xs: impl IntoIterator<Item = &'a RingElement>) {
        let xs: Vec<_> = xs.into_iter().collect();
        self.len(xs.first().map_or(0, |x| x.level()));
        self.len(xs.len());
        xs.into_iter().for_each(|x| self.element(x));
    }

    /// Packs raw bytes eight per word, after a byte count.
    pub fn bytes(&mut self, data: &[u8]) {
        self.len(data.len());
        for chunk in data.chunks(8) {
            let mut w = [0u8; 8];
            w[..chunk.len()].copy_from_slice(chunk);
            self.word(u64::from_le_bytes(w));
        }
    }
}

/// Reads body words against the parameter set named in the header.
pub struct BodyReader<'a> {
    words: &'a [u64],
    pos: usize,
    params: &'a RingParams,
}

impl<'a> BodyReader<'a> {
    pub fn word(&mut self) -> Result<u64> {
        let w = *self
            .words
            .get(self.pos)
            .ok_or_else(|| Error::Decode("body ends early".into()))?;
        self.pos += 1;
        Ok(w)
    }

    /// A count, refused when it could not fit in the remaining body.
    pub fn count(&mut self) -> Result<usize> {
        let n = self.word()?;
        if n > (self.words.len() - self.pos) as u64 * 8 + 8 {
            return Err(Error::Decode(format!("implausible length {n}")));
        }
        Ok(n as usize)
    }

    pub fn float(&mut self) -> Result<f64> {
        self.word().map(f64::from_bits)
    }

    pub fn key(&mut self) -> Result<KeyId> {
        let w = self.word()?;
        u32::try_from(w)
            .map(KeyId)
            .map_err(|_| Error::Decode(format!("key id {w} out of range")))
    }

    pub fn keys(&mut self) -> Result<Vec<KeyId>> {
        (0..self.count()?).map(|_| self.key()).collect()
    }

    pub fn context(&self, level: usize) -> Result<&'a Arc<RingContext>> {
        self.params.context(level)
    }

    pub fn element(&mut self, ctx: &Arc<RingContext>) -> Result<RingElement> {
        let n = ctx.degree();
        let coeffs = self
            .words
            .get(self.pos..self.pos + n)
            .ok_or_else(|| Error::Decode("body ends early".into()))?;
        self.pos += n;
        if let Some(c) = coeffs.iter().find(|&&c| c >= ctx.q()) {
            return Err(Error::Decode(format!("coefficient {c} is not reduced mod {}", ctx.q())));
        }
        RingElement::from_coeffs(ctx, coeffs)
    }

    pub fn elements(&mut self) -> Result<Vec<RingElement>> {
        let level = self.count()?;
        let ctx = self.context(level)?;
        (0..self.count()?).map(|_| self.element(ctx)).collect()
    }

    pub fn bytes(&mut self) -> Result<Vec<u8>> {
        let n = self.count()?;
        let mut out = Vec::with_capacity(n);
        for _ in 0..n.div_ceil(8) {
            out.extend_from_slice(&self.word()?.to_le_bytes());
        }
        out.truncate(n);
        Ok(out)
    }

    fn finish(&self) -> Result<()> {
        match self.pos == self.words.len() {
            true => Ok(()),
            false => Err(Error::Decode(format!(
                "{} trailing body words",
                self.words.len() - self.pos
            ))),
        }
    }
}

/// Summary fields copied into the header.
pub struct HeaderFields {
    pub level: usize,
    pub keyset: Vec<KeyId>,
    pub subvectors: usize,
}

pub trait WireObject: Sized {
    const KIND: ObjectKind;
    fn header_fields(&self) -> HeaderFields;
    fn write_body(&self, w: &mut BodyWriter);
    fn read_body(r: &mut BodyReader<'_>, header: &Header) -> Result<Self>;
}

pub fn encode<T: WireObject>(obj: &T, preset: &str, params: &RingParams) -> Result<Vec<u8>> {
    if preset.len() > u8::MAX as usize {
        return Err(Error::Decode("preset name longer than 255 bytes".into()));
    }
    let fields = obj.header_fields();
    let mut w = BodyWriter {
        words: Vec::new(),
        moduli: params.moduli(),
    };
    obj.write_body(&mut w);
    let header = Header {
        version: FORMAT_VERSION,
        kind: T::KIND,
        preset: preset.to_string(),
        level: fields.level as u32,
        keyset: keyset_bitmap(&fields.keyset)?,
        subvectors: fields.subvectors as u32,
    };
    Ok(SerializedObject {
        header,
        body: w.words,
    }
    .to_bytes())
}

/// Reads the header only, so the caller can resolve the preset first.
pub fn peek_header(bytes: &[u8]) -> Result<Header> {
    SerializedObject::from_bytes(bytes).map(|o| o.header)
}

pub fn decode<T: WireObject>(bytes: &[u8], params: &RingParams) -> Result<T> {
    let obj = SerializedObject::from_bytes(bytes)?;
    if obj.header.kind != T::KIND {
        return Err(Error::Decode(format!(
            "expected a {} file, found {}",
            T::KIND.as_str(),
            obj.header.kind.as_str()
        )));
    }
    let mut r = BodyReader {
        words: &obj.body,
        pos: 0,
        params,
    };
    let out = T::read_body(&mut r, &obj.header)?;
    r.finish()?;
    let fields = out.header_fields();
    if fields.level as u32 != obj.header.level
        || keyset_bitmap(&fields.keyset)? != obj.header.keyset
        || fields.subvectors as u32 != obj.header.subvectors
    {
        return Err(Error::Decode("header disagrees with body".into()));
    }
    Ok(out)
}

fn write_small(w: &mut BodyWriter, poly: &SmallPoly, q: u64) {
    for &c in poly.coeffs() {
        w.word(c.rem_euclid(q as i64) as u64);
    }
}


fn read_small(r: &mut BodyReader<'_>, ctx: &Arc<RingContext>) -> Result<SmallPoly> {
    Ok(SmallPoly(r.element(ctx)?.centered()))
}

impl WireObject for PublicKey {
    const KIND: ObjectKind = ObjectKind::PublicKey;

    fn header_fields(&self) -> HeaderFields {
        HeaderFields {
            level: self.levels().len() - 1,
            keyset: vec![self.id()],
            subvectors: 1,
        }
    }

    fn write_body(&self, w: &mut BodyWriter) {
        w.key(self.id());
        w.len(self.weight());
        w.word(self.shared_reference() as u64);
        w.len(self.levels().len());
        for level in self.levels() {
            w.elements(&level.a);
            w.elements(&level.b);
            match &level.switch {
                None => w.word(0),
                Some(rows) => {
                    w.word(1);
                    w.elements(rows);
                }
            }
        }
    }

    fn read_body(r: &mut BodyReader<'_>, _: &Header) -> Result<Self> {
        let id = r.key()?;
        let weight = r.count()?;
        let shared = r.word()? != 0;
        let levels = (0..r.count()?)
            .map(|_| {
                let a = r.elements()?;
                let b = r.elements()?;
                let switch = match r.word()? {
                    0 => None,
                    _ => Some(r.elements()?),
                };
                Ok(PublicLevel { a, b, switch })
            })
            .collect::<Result<Vec<_>>>()?;
        if levels.is_empty() {
            return Err(Error::Decode("public key without levels".into()));
        }
        Ok(PublicKey::from_parts(id, levels, weight, shared))
    }
}

impl WireObject for SecretShare {
    const KIND: ObjectKind = ObjectKind::SecretShare;

    fn header_fields(&self) -> HeaderFields {
        HeaderFields {
            level: self.key().levels().len() - 1,
            keyset: vec![self.joint()],
            subvectors: 1,
        }
    }

    fn write_body(&self, w: &mut BodyWriter) {
        w.word(self.owner().0 as u64);
        w.key(self.joint());
        w.len(self.key().weight());
        w.len(self.key().levels().len());
        // Level l of the key is stored modulo q_l, read back centered.
        for (l, s) in self.key().levels().iter().enumerate() {
            w.len(l);
            write_small(w, s, w.moduli[l]);
        }
    }

    fn read_body(r: &mut BodyReader<'_>, _: &Header) -> Result<Self> {
        let owner = u32::try_from(r.word()?)
            .map(OwnerId)
            .map_err(|_| Error::Decode("owner id out of range".into()))?;
        let id = r.key()?;
        let weight = r.count()?;
        let levels = (0..r.count()?)
            .map(|l| {
                if r.count()? != l {
                    return Err(Error::Decode("secret levels out of order".into()));
                }
                read_small(r, r.context(l)?)
            })
            .collect::<Result<Vec<_>>>()?;
        if levels.is_empty() {
            return Err(Error::Decode("secret key without levels".into()));
        }
        Ok(SecretShare::from_parts(
            owner,
            SecretKey::from_parts(id, levels, weight),
        ))
    }
}

impl WireObject for LeveledCiphertext {
    const KIND: ObjectKind = ObjectKind::Ciphertext;

    fn header_fields(&self) -> HeaderFields {
        HeaderFields {
            level: self.level(),
            keyset: self.keyset().to_vec(),
            subvectors: self.subvector_count(),
        }
    }

    fn write_body(&self, w: &mut BodyWriter) {
        w.keys(self.keyset());
        w.len(self.key_level());
        w.float(self.noise().offset);
        w.float(self.noise().variance);
        w.float(self.key_variance());
        w.elements(self.parts().iter().flatten());
    }

    fn read_body(r: &mut BodyReader<'_>, _: &Header) -> Result<Self> {
        let keyset = r.keys()?;
        let key_level = r.count()?;
        let noise = NoiseEstimate {
            offset: r.float()?,
            variance: r.float()?,
        };
        let key_variance = r.float()?;
        let comps = r.elements()?;
        if comps.len() % 2 != 0 {
            return Err(Error::Decode("odd number of ciphertext components".into()));
        }
        let parts = comps
            .chunks(2)
            .map(|p| [p[0].clone(), p[1].clone()])
            .collect();
        LeveledCiphertext::from_parts(parts, keyset, key_level, noise, key_variance)
    }
}

const SINGLE_RGSW: u64 = 0;
const HELPER_RGSW: u64 = 1;

fn write_rgsw(w: &mut BodyWriter, c: &RgswCiphertext) {
    w.keys(c.keyset());
    w.len(c.key_level());
    w.float(c.noise_variance());
    w.float(c.correction_variance());
    w.float(c.message_bound());
    w.len(c.rows().len());
    for row in c.rows() {
        w.elements(row);
    }
}

fn read_rgsw(r: &mut BodyReader<'_>) -> Result<RgswCiphertext> {
    let keyset = r.keys()?;
    let key_level = r.count()?;
    let noise = r.float()?;
    let correction = r.float()?;
    let bound = r.float()?;
    let rows = (0..r.count()?)
        .map(|_| r.elements())
        .collect::<Result<Vec<_>>>()?;
    RgswCiphertext::from_parts(rows, keyset, key_level, noise, correction, bound)
}

fn expect_tag(r: &mut BodyReader<'_>, tag: u64) -> Result<()> {
    match r.word()? {
        t if t == tag => Ok(()),
        t => Err(Error::Decode(format!("rgsw payload tag {t}, expected {tag}"))),
    }
}

impl WireObject for RgswCiphertext {
    const KIND: ObjectKind = ObjectKind::Rgsw;

    fn header_fields(&self) -> HeaderFields {
        HeaderFields {
            level: self.level(),
            keyset: self.keyset().to_vec(),
            subvectors: self.rows().len(),
        }
    }

    fn write_body(&self, w: &mut BodyWriter) {
        w.word(SINGLE_RGSW);
        write_rgsw(w, self);
    }

    fn read_body(r: &mut BodyReader<'_>, _: &Header) -> Result<Self> {
        expect_tag(r, SINGLE_RGSW)?;
        read_rgsw(r)
    }
}

fn write_pairs(w: &mut BodyWriter, pairs: &[GswPair]) {
    w.len(pairs.len());
    for p in pairs {
        write_rgsw(w, &p.ciphertext);
        let f = &p.randomness;
        w.key(f.key());
        w.len(f.key_level());
        w.float(f.noise_variance());
        w.elements(f.rows().iter().flatten());
    }
}

fn read_pairs(r: &mut BodyReader<'_>) -> Result<Vec<GswPair>> {
    (0..r.count()?)
        .map(|_| {
            let ciphertext = read_rgsw(r)?;
            let key = r.key()?;
            let key_level = r.count()?;
            let variance = r.float()?;
            let comps = r.elements()?;
            if comps.len() % 2 != 0 {
                return Err(Error::Decode("odd number of randomness components".into()));
            }
            let rows = comps.chunks(2).map(|p| [p[0].clone(), p[1].clone()]).collect();
            let randomness = RandomnessEncryption::from_parts(rows, key, key_level, variance)?;
            Ok(GswPair {
                ciphertext,
                randomness,
            })
        })
        .collect()
}

/// A helper is stored as an `rgsw` object: its GSW pairs, level by level.
impl WireObject for EvalHelper {
    const KIND: ObjectKind = ObjectKind::Rgsw;

    fn header_fields(&self) -> HeaderFields {
        HeaderFields {
            level: self.levels().len(),
            keyset: vec![self.owner()],
            subvectors: self.levels().iter().map(|h| h.theta().len() + h.psi().len()).sum(),
        }
    }

    fn write_body(&self, w: &mut BodyWriter) {
        w.word(HELPER_RGSW);
        w.key(self.owner());
        w.len(self.levels().len());
        for h in self.levels() {
            w.len(h.level());
            write_pairs(w, h.theta());
            write_pairs(w, h.psi());
        }
    }

    fn read_body(r: &mut BodyReader<'_>, _: &Header) -> Result<Self> {
        expect_tag(r, HELPER_RGSW)?;
        let owner = r.key()?;
        let levels = (0..r.count()?)
            .map(|_| {
                let level = r.count()?;
                let theta = read_pairs(r)?;
                let psi = read_pairs(r)?;
                HelperLevel::from_parts(level, theta, psi)
            })
            .collect::<Result<Vec<_>>>()?;
        EvalHelper::from_parts(owner, levels)
    }
}

fn write_switch_key(w: &mut BodyWriter, k: &KeySwitchKey) {
    w.len(k.source_len());
    w.keys(k.source());
    w.keys(k.target());
    w.len(k.target_key_level());
    w.float(k.hint_variance());
    w.float(k.coherent_variance());
    w.float(k.target_variance());
    w.len(k.hints().len());
    for hint in k.hints() {
        w.elements(hint);
    }
}

fn read_switch_key(r: &mut BodyReader<'_>) -> Result<KeySwitchKey> {
    let source_len = r.count()?;
    let source = r.keys()?;
    let target = r.keys()?;
    let target_key_level = r.count()?;
    let hint_variance = r.float()?;
    let coherent = r.float()?;
    let target_variance = r.float()?;
    let hints = (0..r.count()?)
        .map(|_| r.elements())
        .collect::<Result<Vec<_>>>()?;
    let level = hints
        .first()
        .and_then(|h| h.first())
        .map(|x| x.level())
        .ok_or_else(|| Error::Decode("key switching key without hints".into()))?;
    Ok(KeySwitchKey::from_hints(
        level,
        source_len,
        target,
        target_key_level,
        hints,
        hint_variance,
        target_variance,
    )?
    .with_source(source)
    .with_coherent_variance(coherent))
}

impl WireObject for ExtendedEvalKey {
    const KIND: ObjectKind = ObjectKind::EvalKey;

    fn header_fields(&self) -> HeaderFields {
        HeaderFields {
            level: self.level(),
            keyset: self.keyset().to_vec(),
            subvectors: self.keyset().len(),
        }
    }

    fn write_body(&self, w: &mut BodyWriter) {
        write_switch_key(w, self.relinearize());
        write_switch_key(w, self.lower());
    }

    fn read_body(r: &mut BodyReader<'_>, _: &Header) -> Result<Self> {
        let relinearize = read_switch_key(r)?;
        let lower = read_switch_key(r)?;
        ExtendedEvalKey::from_parts(relinearize, lower)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bgv::{enc, kgen, CommonReference};
    use crate::mkbgv::{extend, extended_evalkgen_oracle, gen_helper};
    use crate::rgsw::{rgsw_enc, RowSet};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn params() -> RingParams {
        RingParams::builder(8, 2).modulus_bits(&[30, 34, 38]).build().unwrap()
    }

    fn roundtrip<T: WireObject + PartialEq + std::fmt::Debug>(obj: &T, params: &RingParams) -> Vec<u8> {
        let bytes = encode(obj, "unit", params).unwrap();
        assert_eq!(&decode::<T>(&bytes, params).unwrap(), obj);
        assert_eq!(encode(&decode::<T>(&bytes, params).unwrap(), "unit", params).unwrap(), bytes);
        bytes
    }

    #[test]
    fn every_kind_roundtrips() {
        let params = params();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let crs = CommonReference::generate(&params, &mut rng);
        let (sk_a, pk_a) = kgen(&params, &crs, KeyId(0), &mut rng).unwrap();
        let (_, pk_b) = kgen(&params, &crs, KeyId(1), &mut rng).unwrap();
        let header = peek_header(&roundtrip(&pk_a, &params)).unwrap();
        assert_eq!(header.kind, ObjectKind::PublicKey);
        assert_eq!(header.preset, "unit");
        assert_eq!(header.keyset, 0b01);

        roundtrip(&SecretShare::from_parts(OwnerId(4), sk_a.clone()), &params);

        let c = enc(&params, &pk_a, &[1, 0, 1], &mut rng).unwrap();
        roundtrip(&c, &params);
        let wide = extend(&params, &c, &[&pk_a, &pk_b]).unwrap();
        let header = peek_header(&roundtrip(&wide, &params)).unwrap();
        assert_eq!((header.keyset, header.subvectors, header.level), (0b11, 2, 2));

        let one = RingElement::constant(params.context(2).unwrap(), 1);
        let (g, _) = rgsw_enc(&params, &pk_a, RowSet::Encryption, 2, &one, &mut rng).unwrap();
        roundtrip(&g, &params);
        roundtrip(&gen_helper(&params, &sk_a, &pk_a, &mut rng).unwrap(), &params);

        let (sk_b, _) = kgen(&params, &crs, KeyId(1), &mut rng).unwrap();
        let eek = extended_evalkgen_oracle(&params, 2, &[&sk_a, &sk_b], &mut rng).unwrap();
        roundtrip(&eek, &params);
    }

    #[test]
    fn rejects_damaged_files() {
        let params = params();
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let crs = CommonReference::generate(&params, &mut rng);
        let (_, pk) = kgen(&params, &crs, KeyId(0), &mut rng).unwrap();
        let c = enc(&params, &pk, &[1], &mut rng).unwrap();
        let bytes = encode(&c, "unit", &params).unwrap();

        let truncated = &bytes[..bytes.len() - 9];
        assert!(matches!(decode::<LeveledCiphertext>(truncated, &params), Err(Error::Decode(_))));

        let mut flipped = bytes.clone();
        flipped[40] ^= 1;
        let err = decode::<LeveledCiphertext>(&flipped, &params).unwrap_err();
        assert_eq!(err, Error::Decode("checksum mismatch".into()));

        let mut newer = SerializedObject::from_bytes(&bytes).unwrap();
        newer.header.version = FORMAT_VERSION + 1;
        let err = decode::<LeveledCiphertext>(&newer.to_bytes(), &params).unwrap_err();
        assert!(err.to_string().contains("newer"), "{err}");

        assert!(decode::<PublicKey>(&bytes, &params).is_err());
        assert!(decode::<LeveledCiphertext>(b"MKTX", &params).is_err());

        let mut unreduced = SerializedObject::from_bytes(&bytes).unwrap();
        let last = unreduced.body.len() - 1;
        unreduced.body[last] = u64::MAX;
        assert!(decode::<LeveledCiphertext>(&unreduced.to_bytes(), &params).is_err());
    }

    #[test]
    fn opaque_bytes_roundtrip() {
        let params = params();
        for data in [&b""[..], b"a", b"exactly8", b"nine byte"] {
            let mut w = BodyWriter {
                words: Vec::new(),
                moduli: params.moduli(),
            };
            w.bytes(data);
            let mut r = BodyReader {
                words: &w.words,
                pos: 0,
                params: &params,
            };
            assert_eq!(r.bytes().unwrap(), data);
            r.finish().unwrap();
        }
    }
}
