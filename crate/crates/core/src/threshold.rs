//! The model owners' joint key: dealer key generation, public-key
//! aggregation and smudged partial decryption.

use rand::Rng;

use crate::bgv::{ensure_decryptable, kgen, CommonReference, LeveledCiphertext, PublicKey, PublicLevel, SecretKey};
use crate::error::{Error, Result};
use crate::mkbgv::{gen_helper, EvalHelper};
use crate::params::RingParams;
use crate::ring::{sample_bounded_uniform, RingElement, SmallPoly};
use crate::{KeyId, OwnerId};

/// One owner's additive share of the joint secret. The inner key carries
/// the joint key's id.
#[derive(Clone, Debug, PartialEq)]
pub struct SecretShare {
    owner: OwnerId,
    key: SecretKey,
}

impl SecretShare {
    pub fn from_parts(owner: OwnerId, key: SecretKey) -> Self {
        Self { owner, key }
    }

    pub fn owner(&self) -> OwnerId {
        self.owner
    }

    pub fn joint(&self) -> KeyId {
        self.key.id()
    }

    pub fn key(&self) -> &SecretKey {
        &self.key
    }
}

/// Sums shares into the joint secret. Test and oracle use only: no party in
/// the protocol ever holds this value.
pub fn combine_shares(shares: &[&SecretShare]) -> Result<SecretKey> {
    let first = shares
        .first()
        .ok_or_else(|| Error::MissingMaterial("no secret shares".into()))?;
    let joint = first.joint();
    if shares.iter().any(|s| s.joint() != joint) {
        return Err(Error::KeysetMismatch);
    }
    let levels = first.key.levels().len();
    let degree = first.key.levels()[0].degree();
    let mut sum = vec![SmallPoly::zero(degree); levels];
    for share in shares {
        for (acc, s) in sum.iter_mut().zip(share.key.levels()) {
            *acc = acc.add(s);
        }
    }
    let weight = shares.iter().map(|s| s.key.weight()).sum();
    Ok(SecretKey::from_parts(joint, sum, weight))
}

/// Everything the dealer hands out.
#[derive(Clone, Debug, PartialEq)]
pub struct JointKeyMaterial {
    joint_pk: PublicKey,
    joint_helper: EvalHelper,
    shares: Vec<SecretShare>,
}

impl JointKeyMaterial {
    pub fn joint_pk(&self) -> &PublicKey {
        &self.joint_pk
    }

    pub fn joint_helper(&self) -> &EvalHelper {
        &self.joint_helper
    }

    pub fn shares(&self) -> &[SecretShare] {
        &self.shares
    }

    pub fn n_owners(&self) -> usize {
        self.shares.len()
    }

    pub fn into_parts(self) -> (PublicKey, EvalHelper, Vec<SecretShare>) {
        (self.joint_pk, self.joint_helper, self.shares)
    }
}

/// Trusted-dealer setup: `n_owners` independent key pairs over the common
/// reference, their public keys aggregated, and the joint helper generated
/// from the summed secret.
pub fn dealer_keygen<R: Rng + ?Sized>(
    params: &RingParams,
    crs: &CommonReference,
    joint: KeyId,
    n_owners: usize,
    rng: &mut R,
) -> Result<JointKeyMaterial> {
    if n_owners == 0 {
        return Err(Error::InvalidParams("at least one model owner is required".into()));
    }
    let mut shares = Vec::with_capacity(n_owners);
    let mut pks = Vec::with_capacity(n_owners);
    for i in 0..n_owners {
        let (sk, pk) = kgen(params, crs, joint, rng)?;
        shares.push(SecretShare::from_parts(OwnerId(i as u32), sk));
        pks.push(pk);
    }
    let joint_pk = aggregate_public_keys(joint, &pks.iter().collect::<Vec<_>>())?;
    let joint_sk = combine_shares(&shares.iter().collect::<Vec<_>>())?;
    let joint_helper = gen_helper(params, &joint_sk, &joint_pk, rng)?;
    Ok(JointKeyMaterial {
        joint_pk,
        joint_helper,
        shares,
    })
}

/// Sums the `b` and switching rows of keys that share the same `a` rows.
pub fn aggregate_public_keys(joint: KeyId, pks: &[&PublicKey]) -> Result<PublicKey> {
    let first = pks
        .first()
        .ok_or_else(|| Error::MissingMaterial("no public keys to aggregate".into()))?;
    for pk in pks {
        if pk.levels().len() != first.levels().len()
            || pk.levels().iter().zip(first.levels()).any(|(x, y)| x.a != y.a)
        {
            return Err(Error::ReferenceMismatch);
        }
    }
    let mut levels: Vec<PublicLevel> = first.levels().to_vec();
    for pk in &pks[1..] {
        for (acc, lvl) in levels.iter_mut().zip(pk.levels()) {
            for (x, y) in acc.b.iter_mut().zip(&lvl.b) {
                x.add_assign(y)?;
            }
            if let (Some(acc), Some(rows)) = (acc.switch.as_mut(), lvl.switch.as_ref()) {
                for (x, y) in acc.iter_mut().zip(rows) {
                    x.add_assign(y)?;
                }
            }
        }
    }
    let weight = pks.iter().map(|pk| pk.weight()).sum();
    Ok(PublicKey::from_parts(joint, levels, weight, true))
}

/// `rho_i = c1 * s'_i + t * e_i` with `e_i` uniform in `[-bound, bound]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialDecryption {
    owner: OwnerId,
    request: u64,
    rho: RingElement,
}

impl PartialDecryption {
    pub fn from_parts(owner: OwnerId, request: u64, rho: RingElement) -> Self {
        Self { owner, request, rho }
    }

    pub fn owner(&self) -> OwnerId {
        self.owner
    }

    pub fn request(&self) -> u64 {
        self.request
    }

    pub fn rho(&self) -> &RingElement {
        &self.rho
    }
}

/// Answers decryption request `request` for the joint-key component `c1`
/// (taken modulo the level it lives at).
pub fn partial_decrypt<R: Rng + ?Sized>(
    params: &RingParams,
    share: &SecretShare,
    c1: &RingElement,
    request: u64,
    rng: &mut R,
) -> Result<PartialDecryption> {
    let ctx = c1.context();
    let s = share.key.s_prime(ctx.level()).to_element(ctx);
    let smudge = sample_bounded_uniform(rng, params.degree(), params.smudging_bound()).to_element(ctx);
    let rho = c1.mul(&s)?.add(&smudge.scalar_mul(params.t()))?;
    Ok(PartialDecryption {
        owner: share.owner,
        request,
        rho,
    })
}

/// Sums one partial decryption per expected owner.
pub fn aggregate_partials(
    parts: &[PartialDecryption],
    owners: &[OwnerId],
    request: u64,
) -> Result<RingElement> {
    let mut seen = Vec::with_capacity(parts.len());
    for p in parts {
        if p.request != request {
            return Err(Error::RequestMismatch {
                expected: request,
                got: p.request,
            });
        }
        if !owners.contains(&p.owner) {
            return Err(Error::Protocol(format!("unexpected owner {}", p.owner)));
        }
        if seen.contains(&p.owner) {
            return Err(Error::DuplicatePartial(p.owner));
        }
        seen.push(p.owner);
    }
    if let Some(missing) = owners.iter().find(|o| !seen.contains(o)) {
        return Err(Error::MissingPartial(*missing));
    }
    let first = parts
        .first()
        .ok_or_else(|| Error::MissingMaterial("no partial decryptions".into()))?;
    let mut acc = first.rho.clone();
    for p in &parts[1..] {
        acc.add_assign(&p.rho)?;
    }
    Ok(acc)
}

/// Finishes decryption of `c` given the aggregated `rho` for the `joint`
/// block and the secrets of every other block:
/// `sum_k <c_k, s_k> + c_joint,0 - rho`.
pub fn finish_decryption(
    params: &RingParams,
    c: &LeveledCiphertext,
    keys: &[&SecretKey],
    joint: KeyId,
    rho: &RingElement,
    n_owners: usize,
) -> Result<Vec<u64>> {
    let smudge = (params.t() as f64) * (n_owners as f64) * params.smudging_bound() as f64;
    ensure_decryptable(c, smudge)?;
    let ctx = c.context();
    let mut acc = RingElement::zero(ctx);
    let mut joint_seen = false;
    for (id, [c0, c1]) in c.keyset().iter().zip(c.parts()) {
        acc.add_assign(c0)?;
        if *id == joint {
            acc.sub_assign(rho)?;
            joint_seen = true;
            continue;
        }
        let key = keys
            .iter()
            .find(|k| k.id() == *id)
            .ok_or(Error::KeyNotInSet(*id))?;
        acc.sub_assign(&c1.mul(&key.s_prime(c.level()).to_element(ctx))?)?;
    }
    if !joint_seen {
        return Err(Error::KeyNotInSet(joint));
    }
    Ok(params.decode(&acc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bgv::{dec, enc};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    const JOINT: KeyId = KeyId(0);

    fn setup(n: usize, seed: u64) -> (RingParams, CommonReference, JointKeyMaterial, ChaCha20Rng) {
        let params = RingParams::builder(16, 2).build().unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let crs = CommonReference::generate(&params, &mut rng);
        let jkm = dealer_keygen(&params, &crs, JOINT, n, &mut rng).unwrap();
        (params, crs, jkm, rng)
    }

    fn shares(jkm: &JointKeyMaterial) -> Vec<&SecretShare> {
        jkm.shares().iter().collect()
    }

    #[test]
    fn single_owner_is_plain_keygen() {
        let params = RingParams::builder(16, 2).build().unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let crs = CommonReference::generate(&params, &mut rng);
        let mut fork = rng.clone();
        let jkm = dealer_keygen(&params, &crs, JOINT, 1, &mut rng).unwrap();
        let (sk, pk) = kgen(&params, &crs, JOINT, &mut fork).unwrap();
        assert_eq!(jkm.joint_pk(), &pk);
        assert_eq!(jkm.shares()[0].key(), &sk);
        assert_eq!(jkm.n_owners(), 1);
    }

    #[test]
    fn share_sum_and_joint_roundtrip() {
        let (params, _, jkm, mut rng) = setup(3, 4);
        let joint = combine_shares(&shares(&jkm)).unwrap();
        for l in 0..=params.max_level() {
            let expected: Vec<i64> = (0..params.degree())
                .map(|i| jkm.shares().iter().map(|s| s.key().s_prime(l).coeffs()[i]).sum())
                .collect();
            assert_eq!(joint.s_prime(l).coeffs(), &expected[..]);
        }
        assert_eq!(joint.weight(), 3);
        for bit in [0, 1] {
            let c = enc(&params, jkm.joint_pk(), &[bit], &mut rng).unwrap();
            assert_eq!(dec(&params, &joint, &c).unwrap()[0], bit);
        }
    }

    #[test]
    fn aggregate_matches_dealer() {
        let params = RingParams::builder(16, 2).build().unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let crs = CommonReference::generate(&params, &mut rng);
        let mut fork = rng.clone();
        let jkm = dealer_keygen(&params, &crs, JOINT, 2, &mut rng).unwrap();
        let (_, pk1) = kgen(&params, &crs, KeyId(5), &mut fork).unwrap();
        let (_, pk2) = kgen(&params, &crs, KeyId(6), &mut fork).unwrap();
        assert_eq!(&aggregate_public_keys(JOINT, &[&pk1, &pk2]).unwrap(), jkm.joint_pk());
        let single = aggregate_public_keys(KeyId(5), &[&pk1]).unwrap();
        assert_eq!(single, pk1);
        let other = CommonReference::generate(&params, &mut rng);
        let (_, foreign) = kgen(&params, &other, KeyId(7), &mut rng).unwrap();
        assert_eq!(
            aggregate_public_keys(JOINT, &[&pk1, &foreign]),
            Err(Error::ReferenceMismatch)
        );
    }

    #[test]
    fn partials_aggregate_to_joint_product() {
        let (params, _, jkm, mut rng) = setup(3, 9);
        let joint = combine_shares(&shares(&jkm)).unwrap();
        let c = enc(&params, jkm.joint_pk(), &[1], &mut rng).unwrap();
        let c1 = &c.parts()[0][1];
        let owners: Vec<OwnerId> = jkm.shares().iter().map(|s| s.owner()).collect();
        let parts: Vec<_> = jkm
            .shares()
            .iter()
            .map(|s| partial_decrypt(&params, s, c1, 7, &mut rng).unwrap())
            .collect();
        let rho = aggregate_partials(&parts, &owners, 7).unwrap();
        let exact = c1.mul(&joint.s_prime(3).to_element(c1.context())).unwrap();
        let limit = 2 * 3 * params.smudging_bound() as i64;
        for d in rho.sub(&exact).unwrap().centered() {
            assert_eq!(d % 2, 0);
            assert!(d.abs() <= limit);
        }
        let out = finish_decryption(&params, &c, &[], JOINT, &rho, 3).unwrap();
        assert_eq!(out[0], 1);

        assert_eq!(
            aggregate_partials(&parts[..2], &owners, 7),
            Err(Error::MissingPartial(OwnerId(2)))
        );
        let dup = vec![parts[0].clone(), parts[0].clone(), parts[1].clone()];
        assert_eq!(
            aggregate_partials(&dup, &owners, 7),
            Err(Error::DuplicatePartial(OwnerId(0)))
        );
        assert_eq!(
            aggregate_partials(&parts, &owners, 8),
            Err(Error::RequestMismatch { expected: 8, got: 7 })
        );
    }

    #[test]
    fn zero_component_and_zero_bound() {
        let (params, _, jkm, mut rng) = setup(2, 10);
        let ctx = params.context(3).unwrap();
        let zero = RingElement::zero(ctx);
        let p = partial_decrypt(&params, &jkm.shares()[0], &zero, 0, &mut rng).unwrap();
        assert!(p.rho().centered().iter().all(|x| x % 2 == 0));

        let exact_params = RingParams::builder(16, 2).smudging_bound(0).build().unwrap();
        let c1 = crate::ring::sample_uniform(&mut rng, exact_params.context(3).unwrap());
        let share = &jkm.shares()[1];
        let p = partial_decrypt(&exact_params, share, &c1, 0, &mut rng).unwrap();
        let s = share.key().s_prime(3).to_element(c1.context());
        assert_eq!(p.rho(), &c1.mul(&s).unwrap());
    }
}
