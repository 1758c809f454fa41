//! Multi-key BGV: ciphertext extension, helper material and extended
//! evaluation keys.
//!
//! An extended ciphertext over the ordered key set `(k_1, ..., k_K)` holds
//! one `(c0, c1)` sub-vector per key and decrypts under the concatenated key
//! `s = (1, -s'_1, ..., 1, -s'_K)`.

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;

use crate::bgv::{
    ensure_decryptable, eval_mult, level_down, KeySwitchKey, LeveledCiphertext, PublicKey,
    SecretKey,
};
use crate::error::{Error, Result};
use crate::noise::NoiseEstimate;
use crate::params::RingParams;
use crate::rgsw::{rgsw_enc, rgsw_extend, Decomposition, RandomnessEncryption, RgswCiphertext, RowSet};
use crate::ring::{sample_uniform, Evaluation, RingContext, RingElement};
use crate::threshold::{combine_shares, SecretShare};
use crate::KeyId;

use std::sync::Arc;

/// A GSW ciphertext with the encryption of its randomness.
#[derive(Clone, Debug, PartialEq)]
pub struct GswPair {
    pub ciphertext: RgswCiphertext,
    pub randomness: RandomnessEncryption,
}

/// Helper material for one level `l >= 1`, all under `s_{l-1}` modulo `q_l`.
///
/// `theta[k]` encrypts `2^k * s_1` and `psi[j]` encrypts bit `j` of `s_1`,
/// where `s_1 = -s'_l` is the secret component of `s_l = (1, s_1)`. The
/// entries for the constant component `1` are public and never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct HelperLevel {
    level: usize,
    theta: Vec<GswPair>,
    psi: Vec<GswPair>,
}

impl HelperLevel {
    pub fn from_parts(level: usize, theta: Vec<GswPair>, psi: Vec<GswPair>) -> Result<Self> {
        let width = theta
            .first()
            .map(|p| p.ciphertext.gadget().width())
            .ok_or_else(|| Error::ShapeMismatch("empty helper level".into()))?;
        if theta.len() != width || psi.len() != width {
            return Err(Error::ShapeMismatch(format!(
                "helper level needs {width} entries per family"
            )));
        }
        Ok(Self { level, theta, psi })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn theta(&self) -> &[GswPair] {
        &self.theta
    }

    pub fn psi(&self) -> &[GswPair] {
        &self.psi
    }
}

/// One party's helper material for levels `1..=L`.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalHelper {
    owner: KeyId,
    levels: Vec<HelperLevel>,
}

impl EvalHelper {
    pub fn from_parts(owner: KeyId, levels: Vec<HelperLevel>) -> Result<Self> {
        if levels.iter().enumerate().any(|(i, h)| h.level != i + 1) {
            return Err(Error::ShapeMismatch("helper levels must run 1..=L".into()));
        }
        Ok(Self { owner, levels })
    }

    pub fn owner(&self) -> KeyId {
        self.owner
    }

    pub fn levels(&self) -> &[HelperLevel] {
        &self.levels
    }

    pub fn level(&self, level: usize) -> Result<&HelperLevel> {
        level
            .checked_sub(1)
            .and_then(|i| self.levels.get(i))
            .ok_or_else(|| Error::MissingMaterial(format!("helper for {} at level {level}", self.owner)))
    }
}

pub fn gen_helper<R: Rng + ?Sized>(
    params: &RingParams,
    sk: &SecretKey,
    pk: &PublicKey,
    rng: &mut R,
) -> Result<EvalHelper> {
    if sk.id() != pk.id() {
        return Err(Error::KeysetMismatch);
    }
    let mut levels = Vec::with_capacity(params.max_level());
    for l in 1..=params.max_level() {
        let ctx = params.context(l)?;
        let s1 = sk.s_prime(l).neg().to_element(ctx);
        let mut encrypt = |mu: &RingElement| {
            rgsw_enc(params, pk, RowSet::Switching, l, mu, rng).map(|(ciphertext, randomness)| {
                GswPair {
                    ciphertext,
                    randomness,
                }
            })
        };
        let theta = s1
            .powers_of_two()
            .iter()
            .map(&mut encrypt)
            .collect::<Result<Vec<_>>>()?;
        let psi = s1
            .bit_decomp()
            .iter()
            .map(&mut encrypt)
            .collect::<Result<Vec<_>>>()?;
        levels.push(HelperLevel::from_parts(l, theta, psi)?);
    }
    EvalHelper::from_parts(sk.id(), levels)
}

/// Places the sub-vectors of `c` at their keys' positions in `keys` and
/// zeros elsewhere.
pub fn extend(
    params: &RingParams,
    c: &LeveledCiphertext,
    keys: &[&PublicKey],
) -> Result<LeveledCiphertext> {
    let ids: Vec<KeyId> = keys.iter().map(|pk| pk.id()).collect();
    for (i, id) in ids.iter().enumerate() {
        if ids[..i].contains(id) {
            return Err(Error::ShapeMismatch(format!("key {id} listed twice")));
        }
    }
    let zero = RingElement::zero(c.context());
    let mut parts = vec![[zero.clone(), zero]; ids.len()];
    for (id, part) in c.keyset().iter().zip(c.parts()) {
        let slot = ids
            .iter()
            .position(|k| k == id)
            .ok_or(Error::KeyNotInSet(*id))?;
        parts[slot] = part.clone();
    }
    let key_variance = keys
        .iter()
        .map(|pk| pk.weight() as f64 * params.sigma2())
        .sum();
    LeveledCiphertext::from_parts(parts, ids, c.key_level(), *c.noise(), key_variance)
}

/// Evaluation keys for extended ciphertexts at one level: relinearization
/// from `s_l (x) s_l` and the plain level-down key from `s_l`, both to the
/// concatenated key at `l - 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedEvalKey {
    level: usize,
    keyset: Vec<KeyId>,
    relinearize: KeySwitchKey,
    lower: KeySwitchKey,
}

impl ExtendedEvalKey {
    pub fn from_parts(relinearize: KeySwitchKey, lower: KeySwitchKey) -> Result<Self> {
        let keyset = relinearize.target().to_vec();
        let k = 2 * keyset.len();
        if lower.target() != keyset
            || relinearize.level() != lower.level()
            || relinearize.source_len() != k * k
            || lower.source_len() != k
        {
            return Err(Error::ShapeMismatch(
                "relinearization and level-down keys do not match".into(),
            ));
        }
        Ok(Self {
            level: relinearize.level(),
            keyset,
            relinearize,
            lower,
        })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn keyset(&self) -> &[KeyId] {
        &self.keyset
    }

    pub fn relinearize(&self) -> &KeySwitchKey {
        &self.relinearize
    }

    pub fn lower(&self) -> &KeySwitchKey {
        &self.lower
    }

    /// Number of relinearization hints, `(2K)^2 * width`.
    pub fn hint_count(&self) -> usize {
        self.relinearize.hints().len()
    }
}

fn pad(pair: &[RingElement], block: usize, blocks: usize, ctx: &Arc<RingContext>) -> Vec<RingElement> {
    let mut out = vec![RingElement::zero(ctx); 2 * blocks];
    out[2 * block] = pair[0].clone();
    out[2 * block + 1] = pair[1].clone();
    out
}

/// Noiseless encryption of a public constant `2^power`.
fn trivial(power: usize, blocks: usize, ctx: &Arc<RingContext>) -> Vec<RingElement> {
    let mut out = vec![RingElement::zero(ctx); 2 * blocks];
    out[0] = RingElement::constant(ctx, 1).scalar_mul(1u64 << power);
    out
}

/// Builds the extended evaluation key at `level` from each party's public
/// key and helper. The order of `parties` fixes the key set.
///
/// Every tensor entry `s_i * s_j` is a product of two key components. Entries
/// with a constant component reuse row 0 of a `theta` ciphertext (or a
/// trivial encryption); each distinct product of two secret components is
/// computed once as `sum_j theta_u[k]_row(j) x extend(psi_v[j])`.
pub fn extended_evalkgen(
    params: &RingParams,
    level: usize,
    parties: &[(&PublicKey, &EvalHelper)],
) -> Result<ExtendedEvalKey> {
    if level == 0 {
        return Err(Error::LevelExhausted(0));
    }
    let ctx = params.context(level)?.clone();
    let width = ctx.width();
    let blocks = parties.len();
    let degree = params.degree() as f64;
    let pks: Vec<&PublicKey> = parties.iter().map(|(pk, _)| *pk).collect();
    let helpers = parties
        .iter()
        .map(|(pk, h)| {
            if h.owner() != pk.id() {
                return Err(Error::KeysetMismatch);
            }
            h.level(level)
        })
        .collect::<Result<Vec<_>>>()?;
    let theta_var = helpers
        .iter()
        .flat_map(|h| h.theta.iter().map(|p| p.ciphertext.noise_variance()))
        .fold(0.0, f64::max);

    // psi of every key but the first, extended to the whole key set.
    let mut extended: Vec<Option<Vec<RgswCiphertext>>> = vec![None; blocks];
    for v in 1..blocks {
        extended[v] = Some(
            helpers[v]
                .psi
                .par_iter()
                .map(|p| rgsw_extend(params, &p.ciphertext, &p.randomness, &pks, RowSet::Switching))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    let mut products: HashMap<(usize, usize), Vec<Vec<RingElement>>> = HashMap::new();
    let mut product_var: f64 = 0.0;
    let mut coherent_var: f64 = 0.0;
    let w = width as f64;
    for u in 0..blocks {
        // For v == u the product stays inside block u and uses psi as is.
        let mut partners = Vec::with_capacity(blocks - u);
        for v in u..blocks {
            let psi: Vec<&RgswCiphertext> = match (v == u, &extended[v]) {
                (false, Some(ext)) => ext.iter().collect(),
                _ => helpers[v].psi.iter().map(|p| &p.ciphertext).collect(),
            };
            let psi_var = psi.iter().map(|c| c.product_variance(2 * width)).fold(0.0, f64::max);
            product_var = product_var.max(w * (degree / 2.0 * theta_var + psi_var));
            if v != u {
                // The 2w hints of this product share every psi correction;
                // their contributions to a switch add up coherently.
                let f_var = psi.iter().map(|c| c.correction_variance()).fold(0.0, f64::max);
                let shared = 2.0 * w * degree / 2.0 * (2.0 * w * degree / 4.0);
                coherent_var += w * w * degree * shared * shared * f_var;
            }
            let block = if v == u { 0 } else { u };
            partners.push((v, block, psi.iter().map(|c| c.evaluated()).collect::<Vec<_>>()));
        }
        let hints = (0..width)
            .into_par_iter()
            .map(|k| {
                let theta = helpers[u].theta[k].ciphertext.rows();
                let mut accs: Vec<Vec<Evaluation>> = partners
                    .iter()
                    .map(|(_, _, psi)| (0..psi[0].cols()).map(|_| Evaluation::zero(&ctx)).collect())
                    .collect();
                for j in 0..width {
                    let planes = Decomposition::new(&theta[2 * j]);
                    for ((_, block, psi), acc) in partners.iter().zip(accs.iter_mut()) {
                        planes.accumulate(*block, &psi[j], acc, &ctx);
                    }
                }
                accs.into_iter()
                    .map(|acc| acc.into_iter().map(|x| x.into_element(&ctx)).collect::<Vec<_>>())
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<_>>();
        for (i, (v, _, _)) in partners.iter().enumerate() {
            let group = hints
                .iter()
                .map(|per_k| match *v == u {
                    true => pad(&per_k[i], u, blocks, &ctx),
                    false => per_k[i].clone(),
                })
                .collect();
            products.insert((u, *v), group);
        }
    }

    let component = |block: usize, comp: usize, k: usize| -> Vec<RingElement> {
        match comp {
            0 => trivial(k, blocks, &ctx),
            _ => pad(&helpers[block].theta[k].ciphertext.rows()[0], block, blocks, &ctx),
        }
    };
    let n = 2 * blocks;
    let mut relin_hints = Vec::with_capacity(n * n * width);
    for i in 0..n {
        for j in 0..n {
            let (u, c) = (i / 2, i % 2);
            let (v, d) = (j / 2, j % 2);
            relin_hints.extend((0..width).map(|k| match (c, d) {
                (0, _) => component(v, d, k),
                (_, 0) => component(u, c, k),
                _ => products[&(u.min(v), u.max(v))][k].clone(),
            }));
        }
    }
    let lower_hints = (0..n)
        .flat_map(|i| (0..width).map(move |k| (i, k)))
        .map(|(i, k)| component(i / 2, i % 2, k))
        .collect();
    let ids: Vec<KeyId> = pks.iter().map(|pk| pk.id()).collect();
    let target_variance = pks
        .iter()
        .map(|pk| pk.weight() as f64 * params.sigma2())
        .sum();
    ExtendedEvalKey::from_parts(
        KeySwitchKey::from_hints(
            level,
            n * n,
            ids.clone(),
            level - 1,
            relin_hints,
            product_var.max(theta_var),
            target_variance,
        )?
        .with_coherent_variance(coherent_var),
        KeySwitchKey::from_hints(level, n, ids, level - 1, lower_hints, theta_var, target_variance)?,
    )
}

/// Concatenated key vector `(1, -s'_1, ..., 1, -s'_K)` at `key_level`.
pub fn concatenated_key(keys: &[&SecretKey], key_level: usize, ctx: &Arc<RingContext>) -> Vec<RingElement> {
    keys.iter().flat_map(|k| k.key_vector(key_level, ctx)).collect()
}

/// Hints for `source` under the concatenated key of `targets`.
fn encrypt_hints<R: Rng + ?Sized>(
    params: &RingParams,
    source: &[RingElement],
    targets: &[&SecretKey],
    target_key_level: usize,
    rng: &mut R,
) -> Result<KeySwitchKey> {
    let ctx = source[0].context().clone();
    let secrets: Vec<RingElement> = targets
        .iter()
        .map(|k| k.s_prime(target_key_level).to_element(&ctx))
        .collect();
    let mut hints = Vec::with_capacity(source.len() * ctx.width());
    for x in source {
        for p in x.powers_of_two() {
            let mut hint = Vec::with_capacity(2 * targets.len());
            for s in &secrets {
                let a = sample_uniform(rng, &ctx);
                let e = params.noise().sample_poly(rng, params.degree()).to_element(&ctx);
                hint.push(a.mul(s)?.add(&e.scalar_mul(params.t()))?);
                hint.push(a);
            }
            hint[0].add_assign(&p)?;
            hints.push(hint);
        }
    }
    let blocks = targets.len() as f64;
    KeySwitchKey::from_hints(
        ctx.level(),
        source.len(),
        targets.iter().map(|k| k.id()).collect(),
        target_key_level,
        hints,
        blocks * NoiseEstimate::secret_encryption(params.t(), params.sigma2()).variance,
        targets.iter().map(|k| k.variance(params)).sum(),
    )
}

/// Reference construction of the extended evaluation key by a party that
/// holds every secret. Test and cross-check use only.
pub fn extended_evalkgen_oracle<R: Rng + ?Sized>(
    params: &RingParams,
    level: usize,
    keys: &[&SecretKey],
    rng: &mut R,
) -> Result<ExtendedEvalKey> {
    if level == 0 {
        return Err(Error::LevelExhausted(0));
    }
    let ctx = params.context(level)?;
    let s = concatenated_key(keys, level, ctx);
    let mut tensored = Vec::with_capacity(s.len() * s.len());
    for x in &s {
        for y in &s {
            tensored.push(x.mul(y)?);
        }
    }
    ExtendedEvalKey::from_parts(
        encrypt_hints(params, &tensored, keys, level - 1, rng)?,
        encrypt_hints(params, &s, keys, level - 1, rng)?,
    )
}

pub fn eval_add_ext(c1: &LeveledCiphertext, c2: &LeveledCiphertext) -> Result<LeveledCiphertext> {
    crate::bgv::eval_add(c1, c2)
}

pub fn eval_sub_ext(c1: &LeveledCiphertext, c2: &LeveledCiphertext) -> Result<LeveledCiphertext> {
    crate::bgv::eval_sub(c1, c2)
}

pub fn eval_mult_ext(
    params: &RingParams,
    c1: &LeveledCiphertext,
    c2: &LeveledCiphertext,
    eek: &ExtendedEvalKey,
) -> Result<LeveledCiphertext> {
    if c1.keyset() != eek.keyset() {
        return Err(Error::KeysetMismatch);
    }
    eval_mult(params, c1, c2, &eek.relinearize)
}

/// Drops an extended ciphertext one level without multiplying.
pub fn level_down_ext(
    params: &RingParams,
    c: &LeveledCiphertext,
    eek: &ExtendedEvalKey,
) -> Result<LeveledCiphertext> {
    level_down(params, c, &eek.lower)
}

/// Decrypts an extended ciphertext with every secret in hand: ordinary keys
/// for some blocks and the owners' shares for the joint block. Test oracle.
pub fn dec_joint(
    params: &RingParams,
    c: &LeveledCiphertext,
    keys: &[&SecretKey],
    shares: &[&SecretShare],
) -> Result<Vec<u64>> {
    ensure_decryptable(c, 0.0)?;
    let mut all: Vec<SecretKey> = keys.iter().map(|k| (*k).clone()).collect();
    if !shares.is_empty() {
        all.push(combine_shares(shares)?);
    }
    let refs: Vec<&SecretKey> = all.iter().collect();
    Ok(params.decode(&c.phase(&refs)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bgv::{dec, enc, enc_at_level, kgen, CommonReference};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    struct Fixture {
        params: RingParams,
        client: (SecretKey, PublicKey, EvalHelper),
        model: (SecretKey, PublicKey, EvalHelper),
        rng: ChaCha20Rng,
    }

    fn fixture(t: u64) -> Fixture {
        let params = RingParams::builder(16, t).build().unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        let crs = CommonReference::generate(&params, &mut rng);
        let mut party = |id| {
            let (sk, pk) = kgen(&params, &crs, KeyId(id), &mut rng).unwrap();
            let helper = gen_helper(&params, &sk, &pk, &mut rng).unwrap();
            (sk, pk, helper)
        };
        let client = party(1);
        let model = party(0);
        Fixture {
            params,
            client,
            model,
            rng,
        }
    }

    impl Fixture {
        fn pks(&self) -> [&PublicKey; 2] {
            [&self.client.1, &self.model.1]
        }

        fn sks(&self) -> [&SecretKey; 2] {
            [&self.client.0, &self.model.0]
        }

        fn eek(&self, level: usize) -> ExtendedEvalKey {
            extended_evalkgen(
                &self.params,
                level,
                &[(&self.client.1, &self.client.2), (&self.model.1, &self.model.2)],
            )
            .unwrap()
        }

        fn enc_ext(&mut self, owner_is_client: bool, bit: u64) -> LeveledCiphertext {
            let pk = if owner_is_client { &self.client.1 } else { &self.model.1 };
            let c = enc(&self.params, pk, &[bit], &mut self.rng).unwrap();
            extend(&self.params, &c, &self.pks()).unwrap()
        }

        fn enc_ext_at(&mut self, owner_is_client: bool, bit: u64, level: usize) -> LeveledCiphertext {
            let pk = if owner_is_client { &self.client.1 } else { &self.model.1 };
            let c = enc_at_level(&self.params, pk, level, &[bit], &mut self.rng).unwrap();
            extend(&self.params, &c, &self.pks()).unwrap()
        }

        fn dec(&self, c: &LeveledCiphertext) -> u64 {
            dec_joint(&self.params, c, &self.sks(), &[]).unwrap()[0]
        }
    }

    #[test]
    fn helper_entries_satisfy_invariant() {
        let f = fixture(2);
        let level = 2;
        let ctx = f.params.context(level).unwrap().clone();
        let h = f.model.2.level(level).unwrap();
        let s1 = f.model.0.s_prime(level).neg().to_element(&ctx);
        let powers = s1.powers_of_two();
        let bits = s1.bit_decomp();
        for (k, pair) in h.theta().iter().enumerate().step_by(7) {
            let res = pair.ciphertext.residuals(&powers[k], &[&f.model.0]).unwrap();
            let limit = 10.0 * pair.ciphertext.noise_variance().sqrt();
            assert!(res.iter().all(|r| r.centered().iter().all(|c| c % 2 == 0 && (c.abs() as f64) < limit)));
            assert_eq!(pair.ciphertext.key_level(), level - 1);
        }
        for (j, pair) in h.psi().iter().enumerate().step_by(7) {
            let res = pair.ciphertext.residuals(&bits[j], &[&f.model.0]).unwrap();
            assert!(res.iter().all(|r| r.centered().iter().all(|c| c % 2 == 0)));
        }
        assert!(f.model.2.level(0).is_err());
    }

    #[test]
    fn extension_places_subvectors() {
        let mut f = fixture(2);
        let x = f.enc_ext(true, 1);
        assert_eq!(x.subvector_count(), 2);
        assert!(x.parts()[1].iter().all(|e| e.is_zero()));
        let y = f.enc_ext(false, 1);
        assert!(y.parts()[0].iter().all(|e| e.is_zero()));
        assert_eq!(f.dec(&x), 1);
        assert_eq!(f.dec(&y), 1);
        let c = enc(&f.params, &f.client.1, &[1], &mut f.rng).unwrap();
        let same = extend(&f.params, &c, &[&f.client.1]).unwrap();
        assert_eq!(same, c);
        assert_eq!(
            extend(&f.params, &c, &[&f.model.1]),
            Err(Error::KeyNotInSet(KeyId(1)))
        );
        assert_eq!(dec(&f.params, &f.client.0, &c).unwrap()[0], 1);
    }

    #[test]
    fn extended_truth_tables_with_helper_key() {
        let mut f = fixture(2);
        let top = f.params.max_level();
        let eek = f.eek(top);
        assert_eq!(eek.hint_count(), 16 * f.params.width(top));
        for (x, y) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let cx = f.enc_ext(true, x);
            let cy = f.enc_ext(false, y);
            let sum = eval_add_ext(&cx, &cy).unwrap();
            assert_eq!(f.dec(&sum), x ^ y);
            let prod = eval_mult_ext(&f.params, &cx, &cy, &eek).unwrap();
            assert_eq!(prod.level(), top - 1);
            assert_eq!(prod.subvector_count(), 2);
            assert_eq!(f.dec(&prod), x & y);
            let measured = prod.measured_noise(&f.sks()).unwrap() as f64;
            assert!(measured <= prod.noise().bound());
        }
    }

    #[test]
    fn helper_key_matches_oracle_key() {
        let mut f = fixture(2);
        let level = 2;
        let helper = f.eek(level);
        let (client, model) = (f.client.0.clone(), f.model.0.clone());
        let oracle = extended_evalkgen_oracle(&f.params, level, &[&client, &model], &mut f.rng).unwrap();
        assert_eq!(oracle.hint_count(), helper.hint_count());
        for _ in 0..4 {
            let x = f.rng.gen_range(0..2);
            let y = f.rng.gen_range(0..2);
            let cx = f.enc_ext_at(true, x, level);
            let cy = f.enc_ext_at(false, y, level);
            let a = eval_mult_ext(&f.params, &cx, &cy, &helper).unwrap();
            let b = eval_mult_ext(&f.params, &cx, &cy, &oracle).unwrap();
            assert_eq!(f.dec(&a), f.dec(&b));
            assert_eq!(f.dec(&a), x & y);
        }
    }

    #[test]
    fn level_down_then_combine() {
        let mut f = fixture(8);
        let top = f.params.max_level();
        let eek = f.eek(top);
        let cx = f.enc_ext(true, 3);
        let cy = f.enc_ext(false, 5);
        let prod = eval_mult_ext(&f.params, &cx, &cy, &eek).unwrap();
        let one = f.enc_ext(false, 1);
        assert_eq!(eval_add_ext(&prod, &one), Err(Error::LevelMismatch { left: top - 1, right: top }));
        let lowered = level_down_ext(&f.params, &one, &eek).unwrap();
        assert_eq!(lowered.key_level(), top - 1);
        assert_eq!(f.dec(&eval_add_ext(&prod, &lowered).unwrap()), 0);
    }

    #[test]
    fn keyset_mismatch_rejected() {
        let mut f = fixture(2);
        let eek = f.eek(f.params.max_level());
        let c = enc(&f.params, &f.client.1, &[1], &mut f.rng).unwrap();
        assert_eq!(
            eval_mult_ext(&f.params, &c, &c, &eek),
            Err(Error::KeysetMismatch)
        );
        assert_eq!(
            extended_evalkgen(&f.params, 0, &[(&f.client.1, &f.client.2)]).unwrap_err(),
            Error::LevelExhausted(0)
        );
    }
}
