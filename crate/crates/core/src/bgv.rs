//! Leveled BGV with one secret per level.
//!
//! A ciphertext decrypts as `c0 - c1 * s'`, i.e. against the key vector
//! `s = (1, -s')`. Extended ciphertexts are lists of such pairs, one per key
//! of their key set, and decrypt against the concatenated key vectors; the
//! operations here are written for that general case.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::noise::NoiseEstimate;
use crate::params::RingParams;
use crate::ring::{
    decompose_evaluated, sample_binary, sample_uniform, Evaluation, RingContext, RingElement,
    SmallPoly,
};
use crate::KeyId;

/// Uniform rows `A_l` shared by every party, `2 * width(l)` of them per level.
#[derive(Clone, Debug, PartialEq)]
pub struct CommonReference {
    rows: Vec<Vec<RingElement>>,
}

impl CommonReference {
    pub fn generate<R: Rng + ?Sized>(params: &RingParams, rng: &mut R) -> Self {
        let rows = (0..=params.max_level())
            .map(|l| {
                let ctx = params.ctx(l);
                (0..2 * ctx.width())
                    .map(|_| sample_uniform(rng, ctx))
                    .collect()
            })
            .collect();
        Self { rows }
    }

    pub fn from_rows(rows: Vec<Vec<RingElement>>) -> Self {
        Self { rows }
    }

    pub fn rows(&self, level: usize) -> &[RingElement] {
        &self.rows[level]
    }

    pub fn levels(&self) -> usize {
        self.rows.len()
    }
}

/// Per-level secrets `s'_l`. `weight` counts how many independent error
/// samples were summed into each coefficient (1 for an ordinary key, `N` for
/// a joint key), which the noise model uses as a variance multiplier.
#[derive(Clone, Debug, PartialEq)]
pub struct SecretKey {
    id: KeyId,
    levels: Vec<SmallPoly>,
    weight: usize,
}

impl SecretKey {
    pub fn from_parts(id: KeyId, levels: Vec<SmallPoly>, weight: usize) -> Self {
        Self { id, levels, weight }
    }

    pub fn id(&self) -> KeyId {
        self.id
    }

    pub fn weight(&self) -> usize {
        self.weight
    }

    pub fn levels(&self) -> &[SmallPoly] {
        &self.levels
    }

    pub fn s_prime(&self, level: usize) -> &SmallPoly {
        &self.levels[level]
    }

    /// The key vector `(1, -s'_l)` embedded in `ctx`.
    pub fn key_vector(&self, level: usize, ctx: &Arc<RingContext>) -> [RingElement; 2] {
        [
            RingElement::constant(ctx, 1),
            self.levels[level].neg().to_element(ctx),
        ]
    }

    /// Variance of one secret coefficient.
    pub fn variance(&self, params: &RingParams) -> f64 {
        self.weight as f64 * params.sigma2()
    }
}

/// Public rows for one level.
///
/// `b = A s'_l + t e` are the encryption rows. For `l >= 1`, `switch` holds
/// `A s'_{l-1} + t e~`: rows modulo `q_l` under the next lower key, used by
/// the GSW helper material that feeds key switching at this level.
#[derive(Clone, Debug, PartialEq)]
pub struct PublicLevel {
    pub a: Vec<RingElement>,
    pub b: Vec<RingElement>,
    pub switch: Option<Vec<RingElement>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PublicKey {
    id: KeyId,
    levels: Vec<PublicLevel>,
    weight: usize,
    shared_reference: bool,
}

impl PublicKey {
    pub fn from_parts(
        id: KeyId,
        levels: Vec<PublicLevel>,
        weight: usize,
        shared_reference: bool,
    ) -> Self {
        Self {
            id,
            levels,
            weight,
            shared_reference,
        }
    }

    pub fn id(&self) -> KeyId {
        self.id
    }

    pub fn weight(&self) -> usize {
        self.weight
    }

    /// True when every `a` row is taken from the common reference.
    pub fn shared_reference(&self) -> bool {
        self.shared_reference
    }

    pub fn levels(&self) -> &[PublicLevel] {
        &self.levels
    }

    pub fn level(&self, level: usize) -> &PublicLevel {
        &self.levels[level]
    }
}

/// Samples `A s' + t e` for every row of `a`.
fn noisy_rows<R: Rng + ?Sized>(
    params: &RingParams,
    a: &[RingElement],
    secret: &SmallPoly,
    rng: &mut R,
) -> Result<Vec<RingElement>> {
    let ctx = a[0].context().clone();
    let s = secret.to_element(&ctx);
    a.iter()
        .map(|row| {
            let e = params.noise().sample_poly(rng, params.degree()).to_element(&ctx);
            row.mul(&s)?.add(&e.scalar_mul(params.t()))
        })
        .collect()
}

/// Generates a key pair whose `a` rows come from `crs`.
pub fn kgen<R: Rng + ?Sized>(
    params: &RingParams,
    crs: &CommonReference,
    id: KeyId,
    rng: &mut R,
) -> Result<(SecretKey, PublicKey)> {
    if crs.levels() != params.max_level() + 1 {
        return Err(Error::ShapeMismatch(
            "common reference does not match the parameter levels".into(),
        ));
    }
    let secrets: Vec<SmallPoly> = (0..=params.max_level())
        .map(|_| params.noise().sample_poly(rng, params.degree()))
        .collect();
    let mut levels = Vec::with_capacity(secrets.len());
    for (l, secret) in secrets.iter().enumerate() {
        let a = crs.rows(l).to_vec();
        let b = noisy_rows(params, &a, secret, rng)?;
        let switch = match l {
            0 => None,
            _ => Some(noisy_rows(params, &a, &secrets[l - 1], rng)?),
        };
        levels.push(PublicLevel { a, b, switch });
    }
    Ok((
        SecretKey::from_parts(id, secrets, 1),
        PublicKey::from_parts(id, levels, 1, true),
    ))
}

/// A ciphertext at `level` made of one `(c0, c1)` pair per key in `keyset`.
///
/// `key_level` names the secrets it decrypts under. It equals `level`
/// except for the intermediate produced by key switching, which lives modulo
/// `q_level` under the level below.
#[derive(Clone, Debug, PartialEq)]
pub struct LeveledCiphertext {
    parts: Vec<[RingElement; 2]>,
    keyset: Vec<KeyId>,
    level: usize,
    key_level: usize,
    noise: NoiseEstimate,
    key_variance: f64,
}

impl LeveledCiphertext {
    /// Assembles a ciphertext. `key_variance` is the summed coefficient
    /// variance of the secrets in `keyset`.
    pub fn from_parts(
        parts: Vec<[RingElement; 2]>,
        keyset: Vec<KeyId>,
        key_level: usize,
        noise: NoiseEstimate,
        key_variance: f64,
    ) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::ShapeMismatch("ciphertext without sub-vectors".into()))?;
        let level = first[0].level();
        if parts.len() != keyset.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} sub-vectors for {} keys",
                parts.len(),
                keyset.len()
            )));
        }
        if parts.iter().flatten().any(|x| x.level() != level) {
            return Err(Error::LevelMismatch {
                left: level,
                right: parts.iter().flatten().map(|x| x.level()).find(|&l| l != level).unwrap(),
            });
        }
        Ok(Self {
            parts,
            keyset,
            level,
            key_level,
            noise,
            key_variance,
        })
    }

    pub fn parts(&self) -> &[[RingElement; 2]] {
        &self.parts
    }

    pub fn keyset(&self) -> &[KeyId] {
        &self.keyset
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn key_level(&self) -> usize {
        self.key_level
    }

    pub fn noise(&self) -> &NoiseEstimate {
        &self.noise
    }

    pub fn key_variance(&self) -> f64 {
        self.key_variance
    }

    pub fn subvector_count(&self) -> usize {
        self.parts.len()
    }

    pub fn is_extended(&self) -> bool {
        self.parts.len() > 1
    }

    pub fn context(&self) -> &Arc<RingContext> {
        self.parts[0][0].context()
    }

    /// Components in key-set order, `(c_{0,0}, c_{0,1}, c_{1,0}, ...)`.
    pub fn flatten(&self) -> Vec<RingElement> {
        self.parts.iter().flat_map(|p| p.iter().cloned()).collect()
    }

    /// The all-zero ciphertext, which decrypts to zero under any key.
    pub fn zero(ctx: &Arc<RingContext>, keyset: Vec<KeyId>, key_variance: f64) -> Self {
        let zero = RingElement::zero(ctx);
        Self {
            parts: vec![[zero.clone(), zero]; keyset.len()],
            keyset,
            level: ctx.level(),
            key_level: ctx.level(),
            noise: NoiseEstimate::ZERO,
            key_variance,
        }
    }

    /// `<c, s>` for the secrets named in the key set. Test and oracle use only.
    pub fn phase(&self, keys: &[&SecretKey]) -> Result<RingElement> {
        let ctx = self.context().clone();
        let mut acc = RingElement::zero(&ctx);
        for (id, [c0, c1]) in self.keyset.iter().zip(&self.parts) {
            let key = keys
                .iter()
                .find(|k| k.id() == *id)
                .ok_or(Error::KeyNotInSet(*id))?;
            let s = key.s_prime(self.key_level).to_element(&ctx);
            acc.add_assign(c0)?;
            acc.sub_assign(&c1.mul(&s)?)?;
        }
        Ok(acc)
    }

    /// Infinity norm of the centered phase.
    pub fn measured_noise(&self, keys: &[&SecretKey]) -> Result<u64> {
        Ok(self.phase(keys)?.norm())
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.level != other.level {
            return Err(Error::LevelMismatch {
                left: self.level,
                right: other.level,
            });
        }
        if self.keyset != other.keyset || self.key_level != other.key_level {
            return Err(Error::KeysetMismatch);
        }
        Ok(())
    }
}

/// Public-key encryption at the top level: `c0 = r b[0] + t e + mu`,
/// `c1 = r a[0] + t e'` with binary `r`.
pub fn enc<R: Rng + ?Sized>(
    params: &RingParams,
    pk: &PublicKey,
    message: &[u64],
    rng: &mut R,
) -> Result<LeveledCiphertext> {
    let level = params.max_level();
    enc_at_level(params, pk, level, message, rng)
}

/// Public-key encryption at an arbitrary level.
pub fn enc_at_level<R: Rng + ?Sized>(
    params: &RingParams,
    pk: &PublicKey,
    level: usize,
    message: &[u64],
    rng: &mut R,
) -> Result<LeveledCiphertext> {
    let mu = params.encode(level, message)?;
    let ctx = params.context(level)?;
    let rows = pk.level(level);
    let r = sample_binary(rng, ctx);
    let t = params.t();
    let e0 = params.noise().sample_poly(rng, params.degree()).to_element(ctx);
    let e1 = params.noise().sample_poly(rng, params.degree()).to_element(ctx);
    let c0 = r.mul(&rows.b[0])?.add(&e0.scalar_mul(t))?.add(&mu)?;
    let c1 = r.mul(&rows.a[0])?.add(&e1.scalar_mul(t))?;
    let sigma2 = params.sigma2();
    let weight = pk.weight() as f64;
    let noise = NoiseEstimate::public_encryption(
        t,
        params.degree(),
        sigma2,
        weight * sigma2,
        weight * sigma2,
    );
    Ok(LeveledCiphertext {
        parts: vec![[c0, c1]],
        keyset: vec![pk.id()],
        level,
        key_level: level,
        noise,
        key_variance: weight * sigma2,
    })
}

fn check_noise(c: &LeveledCiphertext, extra: f64) -> Result<()> {
    let q = c.context().q();
    let bound = c.noise.bound() + extra;
    if bound >= q as f64 / 2.0 {
        return Err(Error::NoiseOverflow {
            bound_bits: bound.log2(),
            limit_bits: (q as f64 / 2.0).log2(),
        });
    }
    Ok(())
}

/// Refuses to decrypt when the tracked bound reaches `q/2`, with `extra`
/// added to the bound (used for smudging terms).
pub(crate) fn ensure_decryptable(c: &LeveledCiphertext, extra: f64) -> Result<()> {
    if c.key_level != c.level {
        return Err(Error::LevelMismatch {
            left: c.level,
            right: c.key_level,
        });
    }
    check_noise(c, extra)
}

/// Decrypts a single-key ciphertext, returning all `degree` plaintext
/// coefficients.
pub fn dec(params: &RingParams, sk: &SecretKey, c: &LeveledCiphertext) -> Result<Vec<u64>> {
    if c.keyset != [sk.id()] {
        return Err(Error::KeysetMismatch);
    }
    ensure_decryptable(c, 0.0)?;
    dec_unchecked(params, &[sk], c)
}

/// Decrypts without consulting the noise tracker.
pub fn dec_unchecked(
    params: &RingParams,
    keys: &[&SecretKey],
    c: &LeveledCiphertext,
) -> Result<Vec<u64>> {
    Ok(params.decode(&c.phase(keys)?))
}

pub fn eval_add(c1: &LeveledCiphertext, c2: &LeveledCiphertext) -> Result<LeveledCiphertext> {
    c1.check_compatible(c2)?;
    let mut out = c1.clone();
    for (p, q) in out.parts.iter_mut().zip(&c2.parts) {
        p[0].add_assign(&q[0])?;
        p[1].add_assign(&q[1])?;
    }
    out.noise = c1.noise.add(&c2.noise);
    Ok(out)
}

pub fn eval_sub(c1: &LeveledCiphertext, c2: &LeveledCiphertext) -> Result<LeveledCiphertext> {
    c1.check_compatible(c2)?;
    let mut out = c1.clone();
    for (p, q) in out.parts.iter_mut().zip(&c2.parts) {
        p[0].sub_assign(&q[0])?;
        p[1].sub_assign(&q[1])?;
    }
    out.noise = c1.noise.add(&c2.noise);
    Ok(out)
}

/// Adds a plaintext to the first sub-vector.
pub fn add_plain(params: &RingParams, c: &LeveledCiphertext, message: &[u64]) -> Result<LeveledCiphertext> {
    let mu = params.encode(c.level, message)?;
    let mut out = c.clone();
    out.parts[0][0].add_assign(&mu)?;
    out.noise.offset += (params.t() - 1) as f64;
    Ok(out)
}

/// The tensor product of two ciphertexts: `(2K)^2` components ordered as
/// `u_i * v_j` at index `i * 2K + j`.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorCiphertext {
    comps: Vec<RingElement>,
    keyset: Vec<KeyId>,
    level: usize,
    key_level: usize,
    noise: NoiseEstimate,
    key_variance: f64,
}

impl TensorCiphertext {
    pub fn comps(&self) -> &[RingElement] {
        &self.comps
    }

    pub fn len(&self) -> usize {
        self.comps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.comps.is_empty()
    }

    pub fn noise(&self) -> &NoiseEstimate {
        &self.noise
    }

    pub fn level(&self) -> usize {
        self.level
    }
}

pub fn tensor(c1: &LeveledCiphertext, c2: &LeveledCiphertext) -> Result<TensorCiphertext> {
    c1.check_compatible(c2)?;
    let u = c1.flatten();
    let v = c2.flatten();
    let mut comps = Vec::with_capacity(u.len() * v.len());
    let fv: Vec<Evaluation> = v.iter().map(|x| x.to_evaluation()).collect();
    let ctx = c1.context();
    for x in &u {
        let fx = x.to_evaluation();
        for fy in &fv {
            let mut acc = Evaluation::zero(ctx);
            acc.mul_acc(ctx, &fx, fy);
            comps.push(acc.into_element(ctx));
        }
    }
    Ok(TensorCiphertext {
        comps,
        keyset: c1.keyset.clone(),
        level: c1.level,
        key_level: c1.key_level,
        noise: c1.noise.tensor(&c2.noise, ctx.degree()),
        key_variance: c1.key_variance,
    })
}

/// Hints `(a s' + t e + p_i, a)` encrypting the powers of two of a source
/// key vector under a target key set, all modulo `q_level`.
///
/// Hint `i * width + j` encrypts `2^j * source[i]`. Each hint has one
/// `(b, a)` pair per target key.
#[derive(Clone, Debug)]
pub struct KeySwitchKey {
    level: usize,
    source_len: usize,
    source: Vec<KeyId>,
    target: Vec<KeyId>,
    target_key_level: usize,
    hints: Vec<Vec<RingElement>>,
    hint_variance: f64,
    coherent_variance: f64,
    target_variance: f64,
    evaluated: Vec<Vec<Evaluation>>,
}

impl PartialEq for KeySwitchKey {
    fn eq(&self, other: &Self) -> bool {
        self.level == other.level
            && self.source_len == other.source_len
            && self.source == other.source
            && self.target == other.target
            && self.target_key_level == other.target_key_level
            && self.hints == other.hints
            && self.hint_variance == other.hint_variance
            && self.coherent_variance == other.coherent_variance
            && self.target_variance == other.target_variance
    }
}

impl KeySwitchKey {
    /// Assembles a key from hints. `target_variance` is the summed secret
    /// variance of the target key set.
    #[allow(clippy::too_many_arguments)]
    pub fn from_hints(
        level: usize,
        source_len: usize,
        target: Vec<KeyId>,
        target_key_level: usize,
        hints: Vec<Vec<RingElement>>,
        hint_variance: f64,
        target_variance: f64,
    ) -> Result<Self> {
        let width = hints
            .first()
            .and_then(|h| h.first())
            .map(|x| x.context().width())
            .ok_or_else(|| Error::ShapeMismatch("key switching key without hints".into()))?;
        if hints.len() != source_len * width {
            return Err(Error::ShapeMismatch(format!(
                "{} hints for a source of length {source_len} and width {width}",
                hints.len()
            )));
        }
        if hints.iter().any(|h| h.len() != 2 * target.len()) {
            return Err(Error::ShapeMismatch("hint length differs from target".into()));
        }
        if hints.iter().flatten().any(|x| x.level() != level) {
            return Err(Error::LevelMismatch {
                left: level,
                right: hints.iter().flatten().map(|x| x.level()).find(|&l| l != level).unwrap(),
            });
        }
        let evaluated = hints
            .iter()
            .map(|h| h.iter().map(|x| x.to_evaluation()).collect())
            .collect();
        Ok(Self {
            level,
            source_len,
            source: target.clone(),
            target,
            target_key_level,
            hints,
            hint_variance,
            coherent_variance: 0.0,
            target_variance,
            evaluated,
        })
    }

    /// Extra switching-noise variance from hint noise that is shared between
    /// hints and therefore does not average out. Added once per switch.
    pub fn with_coherent_variance(mut self, variance: f64) -> Self {
        self.coherent_variance = variance;
        self
    }

    /// Key set of the ciphertexts this key accepts. Defaults to the target
    /// set, as for relinearization and level-down keys.
    pub fn with_source(mut self, source: Vec<KeyId>) -> Self {
        self.source = source;
        self
    }

    pub fn source(&self) -> &[KeyId] {
        &self.source
    }

    pub fn coherent_variance(&self) -> f64 {
        self.coherent_variance
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn source_len(&self) -> usize {
        self.source_len
    }

    pub fn target(&self) -> &[KeyId] {
        &self.target
    }

    pub fn target_key_level(&self) -> usize {
        self.target_key_level
    }

    pub fn hints(&self) -> &[Vec<RingElement>] {
        &self.hints
    }

    pub fn hint_variance(&self) -> f64 {
        self.hint_variance
    }

    pub fn target_variance(&self) -> f64 {
        self.target_variance
    }

    /// `sum_i BitDecomp(c)[i] * hint[i]` for a source-length vector `c`.
    pub fn switch_components(&self, comps: &[RingElement]) -> Result<Vec<RingElement>> {
        if comps.len() != self.source_len {
            return Err(Error::ShapeMismatch(format!(
                "key switching expects {} components, got {}",
                self.source_len,
                comps.len()
            )));
        }
        let ctx = comps[0].context().clone();
        if ctx.level() != self.level {
            return Err(Error::LevelMismatch {
                left: ctx.level(),
                right: self.level,
            });
        }
        let width = ctx.width();
        let mut acc: Vec<Evaluation> = (0..2 * self.target.len())
            .map(|_| Evaluation::zero(&ctx))
            .collect();
        for (i, c) in comps.iter().enumerate() {
            if c.level() != self.level {
                return Err(Error::LevelMismatch {
                    left: c.level(),
                    right: self.level,
                });
            }
            for (j, bits) in decompose_evaluated(c).into_iter().enumerate() {
                let Some(bits) = bits else { continue };
                for (slot, hint) in acc.iter_mut().zip(&self.evaluated[i * width + j]) {
                    slot.mul_acc(&ctx, &bits, hint);
                }
            }
        }
        Ok(acc.into_iter().map(|x| x.into_element(&ctx)).collect())
    }

    /// Switches a tensored ciphertext to the target key set.
    pub fn apply(&self, tc: &TensorCiphertext) -> Result<LeveledCiphertext> {
        if tc.keyset != self.source {
            return Err(Error::KeysetMismatch);
        }
        self.finish(&tc.comps, tc.level, &tc.noise)
    }

    /// Switches an ordinary ciphertext, whose flattened components pair with
    /// the concatenated key vectors, to the target key set.
    pub fn apply_linear(&self, c: &LeveledCiphertext) -> Result<LeveledCiphertext> {
        if c.keyset != self.source {
            return Err(Error::KeysetMismatch);
        }
        self.finish(&c.flatten(), c.level, &c.noise)
    }

    fn finish(
        &self,
        comps: &[RingElement],
        level: usize,
        noise: &NoiseEstimate,
    ) -> Result<LeveledCiphertext> {
        let out = self.switch_components(comps)?;
        let ctx = comps[0].context();
        let parts = out
            .chunks(2)
            .map(|p| [p[0].clone(), p[1].clone()])
            .collect();
        Ok(LeveledCiphertext {
            parts,
            keyset: self.target.clone(),
            level,
            key_level: self.target_key_level,
            noise: noise
                .key_switch(self.source_len * ctx.width(), ctx.degree(), self.hint_variance)
                .add(&NoiseEstimate {
                    offset: 0.0,
                    variance: self.coherent_variance,
                }),
            key_variance: self.target_variance,
        })
    }
}

/// Generic hint generation for a single target key: encrypts
/// `powers_of_two(source[i])` under `target.s_prime(target_key_level)`.
pub fn evalkgen<R: Rng + ?Sized>(
    params: &RingParams,
    source: &[RingElement],
    target: &SecretKey,
    target_key_level: usize,
    rng: &mut R,
) -> Result<KeySwitchKey> {
    let ctx = source
        .first()
        .ok_or_else(|| Error::ShapeMismatch("empty source key".into()))?
        .context()
        .clone();
    let s = target.s_prime(target_key_level).to_element(&ctx);
    let mut hints = Vec::with_capacity(source.len() * ctx.width());
    for x in source {
        for p in x.powers_of_two() {
            let a = sample_uniform(rng, &ctx);
            let e = params.noise().sample_poly(rng, params.degree()).to_element(&ctx);
            let b = a.mul(&s)?.add(&e.scalar_mul(params.t()))?.add(&p)?;
            hints.push(vec![b, a]);
        }
    }
    KeySwitchKey::from_hints(
        ctx.level(),
        source.len(),
        vec![target.id()],
        target_key_level,
        hints,
        NoiseEstimate::secret_encryption(params.t(), params.sigma2()).variance,
        target.variance(params),
    )
}

/// Switches ciphertexts under `from` at `level` to `to`, keeping the level.
pub fn switching_key<R: Rng + ?Sized>(
    params: &RingParams,
    from: &SecretKey,
    to: &SecretKey,
    level: usize,
    rng: &mut R,
) -> Result<KeySwitchKey> {
    let ctx = params.context(level)?;
    Ok(evalkgen(params, &from.key_vector(level, ctx), to, level, rng)?.with_source(vec![from.id()]))
}

/// `s_l (x) s_l` for a single key, embedded modulo `q_level`.
pub fn tensored_key(sk: &SecretKey, key_level: usize, ctx: &Arc<RingContext>) -> Result<Vec<RingElement>> {
    let s = sk.key_vector(key_level, ctx);
    let mut out = Vec::with_capacity(4);
    for x in &s {
        for y in &s {
            out.push(x.mul(y)?);
        }
    }
    Ok(out)
}

/// Relinearization key at `level`: from `s_level (x) s_level` to the key one
/// level down (or to the same key at level 0).
pub fn relinearization_key<R: Rng + ?Sized>(
    params: &RingParams,
    sk: &SecretKey,
    level: usize,
    rng: &mut R,
) -> Result<KeySwitchKey> {
    let ctx = params.context(level)?;
    let source = tensored_key(sk, level, ctx)?;
    evalkgen(params, &source, sk, level.saturating_sub(1), rng)
}

/// Key from `s_level` to `s_{level-1}`, both modulo `q_level`.
pub fn level_down_key<R: Rng + ?Sized>(
    params: &RingParams,
    sk: &SecretKey,
    level: usize,
    rng: &mut R,
) -> Result<KeySwitchKey> {
    if level == 0 {
        return Err(Error::LevelExhausted(0));
    }
    let ctx = params.context(level)?;
    evalkgen(params, &sk.key_vector(level, ctx), sk, level - 1, rng)
}

/// Moves a ciphertext one level down without multiplying: key switch to
/// the lower key, then modulus switch.
pub fn level_down(
    params: &RingParams,
    c: &LeveledCiphertext,
    ksk: &KeySwitchKey,
) -> Result<LeveledCiphertext> {
    if c.level == 0 {
        return Err(Error::LevelExhausted(0));
    }
    if ksk.level != c.level || c.key_level != c.level || ksk.target_key_level + 1 != c.level {
        return Err(Error::LevelMismatch {
            left: c.level,
            right: ksk.level,
        });
    }
    mod_switch(params, &ksk.apply_linear(c)?)
}

/// Switches `c` from `q_level` to `q_{level-1}`. The secret is unchanged, so
/// a ciphertext that has not been key switched keeps its `key_level`.
pub fn mod_switch(params: &RingParams, c: &LeveledCiphertext) -> Result<LeveledCiphertext> {
    if c.level == 0 {
        return Err(Error::LevelExhausted(0));
    }
    let target = params.context(c.level - 1)?;
    let t = params.t();
    let parts = c
        .parts
        .iter()
        .map(|[a, b]| Ok([a.rescale(target, t)?, b.rescale(target, t)?]))
        .collect::<Result<Vec<_>>>()?;
    let ratio = target.q() as f64 / c.context().q() as f64;
    Ok(LeveledCiphertext {
        parts,
        keyset: c.keyset.clone(),
        level: c.level - 1,
        key_level: c.key_level,
        noise: c.noise.mod_switch(
            ratio,
            t,
            params.degree(),
            c.keyset.len(),
            c.key_variance,
        ),
        key_variance: c.key_variance,
    })
}

/// Brings a ciphertext down to `level` by repeated modulus switching.
pub fn mod_switch_to(
    params: &RingParams,
    c: &LeveledCiphertext,
    level: usize,
) -> Result<LeveledCiphertext> {
    if level > c.level {
        return Err(Error::LevelMismatch {
            left: c.level,
            right: level,
        });
    }
    let mut out = c.clone();
    while out.level > level {
        out = mod_switch(params, &out)?;
    }
    Ok(out)
}

/// Tensor, key switch to the level below, then modulus switch.
pub fn eval_mult(
    params: &RingParams,
    c1: &LeveledCiphertext,
    c2: &LeveledCiphertext,
    ksk: &KeySwitchKey,
) -> Result<LeveledCiphertext> {
    if c1.level == 0 {
        return Err(Error::LevelExhausted(0));
    }
    if ksk.level != c1.level || ksk.target_key_level + 1 != c1.key_level {
        return Err(Error::LevelMismatch {
            left: c1.level,
            right: ksk.level,
        });
    }
    let switched = ksk.apply(&tensor(c1, c2)?)?;
    mod_switch(params, &switched)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn setup(t: u64) -> (RingParams, SecretKey, PublicKey, ChaCha20Rng) {
        let params = RingParams::builder(16, t).build().unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let crs = CommonReference::generate(&params, &mut rng);
        let (sk, pk) = kgen(&params, &crs, KeyId(1), &mut rng).unwrap();
        (params, sk, pk, rng)
    }

    /// Centered `value` must be a multiple of `t` no larger than `limit`.
    fn assert_small_multiple(value: &RingElement, t: u64, limit: u64) {
        for c in value.centered() {
            assert_eq!(c.rem_euclid(t as i64), 0, "{c} not divisible by {t}");
            assert!(c.unsigned_abs() <= limit, "{c} exceeds {limit}");
        }
    }

    #[test]
    fn public_key_rows_are_noisy_products() {
        let (params, sk, pk, _) = setup(2);
        let bound = params.t() * params.noise().bound;
        for l in 0..=params.max_level() {
            let ctx = params.context(l).unwrap();
            let rows = pk.level(l);
            let s = sk.s_prime(l).to_element(ctx);
            for (a, b) in rows.a.iter().zip(&rows.b) {
                assert_small_multiple(&b.sub(&a.mul(&s).unwrap()).unwrap(), params.t(), bound);
            }
            if l > 0 {
                let s_low = sk.s_prime(l - 1).to_element(ctx);
                for (a, b) in rows.a.iter().zip(rows.switch.as_ref().unwrap()) {
                    assert_small_multiple(&b.sub(&a.mul(&s_low).unwrap()).unwrap(), params.t(), bound);
                }
            }
            assert_eq!(sk.key_vector(l, ctx)[0], RingElement::constant(ctx, 1));
            assert!(sk.s_prime(l).norm() <= params.noise().bound);
        }
    }

    #[test]
    fn kgen_is_deterministic() {
        let (_, sk1, pk1, _) = setup(2);
        let (_, sk2, pk2, _) = setup(2);
        assert_eq!(sk1, sk2);
        assert_eq!(pk1, pk2);
    }

    #[test]
    fn roundtrip_and_zero_ciphertext() {
        let (params, sk, pk, mut rng) = setup(2);
        for mu in [0, 1] {
            let c = enc(&params, &pk, &[mu], &mut rng).unwrap();
            assert_eq!(c.subvector_count(), 1);
            assert_eq!(dec(&params, &sk, &c).unwrap()[0], mu);
        }
        let zero = LeveledCiphertext::zero(params.context(3).unwrap(), vec![sk.id()], 0.0);
        assert!(dec(&params, &sk, &zero).unwrap().iter().all(|&m| m == 0));
        assert!(matches!(
            enc(&params, &pk, &[2], &mut rng),
            Err(Error::PlaintextOutOfRange { .. })
        ));
    }

    #[test]
    fn add_truth_table_and_identity() {
        let (params, sk, pk, mut rng) = setup(2);
        for (x, y) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let cx = enc(&params, &pk, &[x], &mut rng).unwrap();
            let cy = enc(&params, &pk, &[y], &mut rng).unwrap();
            let sum = eval_add(&cx, &cy).unwrap();
            assert_eq!(dec(&params, &sk, &sum).unwrap()[0], x ^ y);
        }
    }

    #[test]
    fn mult_truth_table_tensor_width_and_identity() {
        let (params, sk, pk, mut rng) = setup(2);
        let ksk = relinearization_key(&params, &sk, 3, &mut rng).unwrap();
        for (x, y) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let cx = enc(&params, &pk, &[x], &mut rng).unwrap();
            let cy = enc(&params, &pk, &[y], &mut rng).unwrap();
            assert_eq!(tensor(&cx, &cy).unwrap().len(), 4);
            let prod = eval_mult(&params, &cx, &cy, &ksk).unwrap();
            assert_eq!(prod.level(), 2);
            assert_eq!(prod.subvector_count(), 1);
            assert_eq!(dec(&params, &sk, &prod).unwrap()[0], x & y);
        }
    }

    #[test]
    fn self_switch_and_cross_switch_preserve_plaintext() {
        let (params, sk, pk, mut rng) = setup(8);
        let crs = CommonReference::generate(&params, &mut rng);
        let (other, _) = kgen(&params, &crs, KeyId(2), &mut rng).unwrap();
        let ctx = params.context(3).unwrap().clone();
        for target in [&sk, &other] {
            let source: Vec<RingElement> = sk.key_vector(3, &ctx).to_vec();
            let ksk = evalkgen(&params, &source, target, 3, &mut rng).unwrap();
            for hint_index in [0, 7, 100] {
                let hint = &ksk.hints()[hint_index];
                let s = target.s_prime(3).to_element(&ctx);
                let source_piece = &source[hint_index / ctx.width()].powers_of_two()[hint_index % ctx.width()];
                let residual = hint[0].sub(&hint[1].mul(&s).unwrap()).unwrap().sub(source_piece).unwrap();
                assert_small_multiple(&residual, 8, 8 * 19);
            }
            let c = enc(&params, &pk, &[5], &mut rng).unwrap();
            if target.id() != sk.id() {
                assert_eq!(ksk.apply_linear(&c), Err(Error::KeysetMismatch));
            }
            let switched = ksk.with_source(vec![sk.id()]).apply_linear(&c).unwrap();
            assert_eq!(switched.keyset(), [target.id()]);
            assert_eq!(dec(&params, target, &switched).unwrap()[0], 5);
        }
        let switched = switching_key(&params, &sk, &other, 2, &mut rng)
            .unwrap()
            .apply_linear(&enc_at_level(&params, &pk, 2, &[3], &mut rng).unwrap())
            .unwrap();
        assert_eq!(dec(&params, &other, &switched).unwrap()[0], 3);
    }

    #[test]
    fn level_down_then_multiply_across_levels() {
        let (params, sk, pk, mut rng) = setup(2);
        let relin3 = relinearization_key(&params, &sk, 3, &mut rng).unwrap();
        let relin2 = relinearization_key(&params, &sk, 2, &mut rng).unwrap();
        let down3 = level_down_key(&params, &sk, 3, &mut rng).unwrap();
        for (x, y, z) in [(1, 1, 1), (1, 1, 0), (0, 1, 1)] {
            let cx = enc(&params, &pk, &[x], &mut rng).unwrap();
            let cy = enc(&params, &pk, &[y], &mut rng).unwrap();
            let cz = enc(&params, &pk, &[z], &mut rng).unwrap();
            let xy = eval_mult(&params, &cx, &cy, &relin3).unwrap();
            let z2 = level_down(&params, &cz, &down3).unwrap();
            assert_eq!(z2.level(), 2);
            assert_eq!(dec(&params, &sk, &z2).unwrap()[0], z);
            let xyz = eval_mult(&params, &xy, &z2, &relin2).unwrap();
            assert_eq!(dec(&params, &sk, &xyz).unwrap()[0], x & y & z);
        }
    }

    #[test]
    fn level_zero_multiply_is_rejected() {
        let (params, sk, pk, mut rng) = setup(2);
        let c = enc(&params, &pk, &[1], &mut rng).unwrap();
        let low = enc_at_level(&params, &pk, 0, &[1], &mut rng).unwrap();
        assert_eq!(
            dec(&params, &sk, &mod_switch_to(&params, &c, 0).unwrap()),
            Err(Error::LevelMismatch { left: 0, right: 3 })
        );
        let ksk = relinearization_key(&params, &sk, 0, &mut rng).unwrap();
        assert_eq!(
            eval_mult(&params, &low, &low, &ksk),
            Err(Error::LevelExhausted(0))
        );
        assert_eq!(mod_switch(&params, &low), Err(Error::LevelExhausted(0)));
    }

    #[test]
    fn repeated_squaring_trips_the_tracker() {
        let (params, sk, pk, mut rng) = setup(2);
        let ksk = relinearization_key(&params, &sk, 0, &mut rng).unwrap();
        let mut c = enc_at_level(&params, &pk, 0, &[1], &mut rng).unwrap();
        let mut rounds = 0;
        while dec(&params, &sk, &c).is_ok() {
            assert_eq!(dec(&params, &sk, &c).unwrap()[0], 1);
            c = ksk.apply(&tensor(&c, &c).unwrap()).unwrap();
            rounds += 1;
            assert!(rounds < 10);
        }
        let err = dec(&params, &sk, &c);
        assert!(matches!(err, Err(Error::NoiseOverflow { .. })), "{err:?}");
    }
}
