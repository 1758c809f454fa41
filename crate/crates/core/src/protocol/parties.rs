use std::collections::BTreeMap;

use rand_chacha::ChaCha20Rng;

use crate::bgv::{enc, kgen, CommonReference, LeveledCiphertext, PublicKey, SecretKey};
use crate::error::{Error, Result};
use crate::mkbgv::{
    eval_add_ext, eval_mult_ext, eval_sub_ext, extend, extended_evalkgen, gen_helper,
    level_down_ext, EvalHelper, ExtendedEvalKey,
};
use crate::params::RingParams;
use crate::threshold::{aggregate_partials, finish_decryption, partial_decrypt, PartialDecryption, SecretShare};
use crate::{KeyId, OwnerId};

use super::forest::{majority, DecisionStump};
use super::network::{Payload, ProtocolMessage, Role};
use super::transcript::PayloadKind;

/// The owners' joint key.
pub const JOINT_KEY: KeyId = KeyId(0);
pub const CLIENT_KEY: KeyId = KeyId(1);

/// Secrets and messages a party holds, for role-isolation checks.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Inventory {
    pub secret_keys: Vec<KeyId>,
    pub shares: Vec<OwnerId>,
    pub received: Vec<PayloadKind>,
}

fn unexpected(role: Role, msg: &ProtocolMessage) -> Error {
    Error::Protocol(format!(
        "{role} cannot handle {} from {}",
        msg.payload.kind().as_str(),
        msg.sender
    ))
}

pub struct ModelOwner {
    id: OwnerId,
    params: RingParams,
    rng: ChaCha20Rng,
    share: Option<SecretShare>,
    joint_pk: Option<PublicKey>,
    received: Vec<PayloadKind>,
}

impl ModelOwner {
    pub fn new(id: OwnerId, params: &RingParams, rng: ChaCha20Rng) -> Self {
        Self {
            id,
            params: params.clone(),
            rng,
            share: None,
            joint_pk: None,
            received: Vec::new(),
        }
    }

    pub fn id(&self) -> OwnerId {
        self.id
    }

    pub fn role(&self) -> Role {
        Role::Owner(self.id)
    }

    /// Handles a message, returning the reply if one is due.
    pub fn receive(&mut self, msg: ProtocolMessage) -> Result<Option<(Role, Payload)>> {
        self.received.push(msg.payload.kind());
        match msg.payload {
            Payload::KeyShare { share, joint_pk } if msg.sender == Role::Dealer => {
                if share.owner() != self.id {
                    return Err(Error::Protocol(format!("{} got the share of {}", self.id, share.owner())));
                }
                self.share = Some(share);
                self.joint_pk = Some(joint_pk);
                Ok(None)
            }
            Payload::DecryptRequest { request, ref c1 } => {
                let share = self
                    .share
                    .as_ref()
                    .ok_or_else(|| Error::MissingMaterial(format!("{} has no key share", self.id)))?;
                let part = partial_decrypt(&self.params, share, c1, request, &mut self.rng)?;
                Ok(Some((msg.sender, Payload::Partial(part))))
            }
            _ => Err(unexpected(self.role(), &msg)),
        }
    }

    /// Encrypts the stump's threshold and labels under the joint key.
    pub fn upload_model(&mut self, stump: &DecisionStump) -> Result<Payload> {
        if stump.owner() != self.id {
            return Err(Error::Protocol(format!("{} cannot upload the stump of {}", self.id, stump.owner())));
        }
        let pk = self
            .joint_pk
            .as_ref()
            .ok_or_else(|| Error::MissingMaterial(format!("{} has no joint key", self.id)))?;
        let mut bit = |b: u8| enc(&self.params, pk, &[b as u64], &mut self.rng);
        Ok(Payload::Model {
            threshold: bit(stump.threshold())?,
            a: bit(stump.a())?,
            b: bit(stump.b())?,
        })
    }

    pub fn inventory(&self) -> Inventory {
        Inventory {
            secret_keys: Vec::new(),
            shares: self.share.iter().map(|s| s.owner()).collect(),
            received: self.received.clone(),
        }
    }
}

/// What the client learns from one query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClientOutput {
    pub request: u64,
    pub plaintext: Vec<u64>,
    pub tally: u64,
    pub label: u8,
}

pub struct Client {
    params: RingParams,
    rng: ChaCha20Rng,
    n_owners: usize,
    sk: SecretKey,
    pk: PublicKey,
    received: Vec<PayloadKind>,
}

impl Client {
    /// Generates the client key pair and helper; the returned payload is
    /// for the evaluator.
    pub fn new(
        params: &RingParams,
        crs: &CommonReference,
        n_owners: usize,
        mut rng: ChaCha20Rng,
    ) -> Result<(Self, Payload)> {
        let (sk, pk) = kgen(params, crs, CLIENT_KEY, &mut rng)?;
        let helper = gen_helper(params, &sk, &pk, &mut rng)?;
        let payload = Payload::ClientKeys {
            pk: pk.clone(),
            helper,
        };
        let client = Self {
            params: params.clone(),
            rng,
            n_owners,
            sk,
            pk,
            received: Vec::new(),
        };
        Ok((client, payload))
    }

    pub fn query(&mut self, x: u8) -> Result<Payload> {
        if x > 1 {
            return Err(Error::Protocol(format!("client input must be a bit, got {x}")));
        }
        Ok(Payload::Query(enc(&self.params, &self.pk, &[x as u64], &mut self.rng)?))
    }

    /// Finishes decryption of a delivered result:
    /// `<c_C, s_C> + c_{M,0} - rho`.
    pub fn receive(&mut self, msg: ProtocolMessage) -> Result<ClientOutput> {
        self.received.push(msg.payload.kind());
        match msg.payload {
            Payload::Result {
                request,
                ref result,
                ref rho,
            } if msg.sender == Role::Evaluator => {
                let plaintext = finish_decryption(
                    &self.params,
                    result,
                    &[&self.sk],
                    JOINT_KEY,
                    rho,
                    self.n_owners,
                )?;
                let tally = plaintext[0];
                Ok(ClientOutput {
                    request,
                    tally,
                    label: majority(tally, self.n_owners),
                    plaintext,
                })
            }
            _ => Err(unexpected(Role::Client, &msg)),
        }
    }

    /// For the simulation harness's oracle only.
    pub(crate) fn oracle_secret(&self) -> &SecretKey {
        &self.sk
    }

    pub fn inventory(&self) -> Inventory {
        Inventory {
            secret_keys: vec![self.sk.id()],
            shares: Vec::new(),
            received: self.received.clone(),
        }
    }
}

/// An owner's uploaded model, extended to `[Client, Joint]`.
#[derive(Clone, Debug, PartialEq)]
pub struct StoredModel {
    pub threshold: LeveledCiphertext,
    pub a: LeveledCiphertext,
    pub b: LeveledCiphertext,
}

impl StoredModel {
    pub fn ciphertexts(&self) -> [&LeveledCiphertext; 3] {
        [&self.threshold, &self.a, &self.b]
    }
}

struct PendingDecryption {
    request: u64,
    result: LeveledCiphertext,
    partials: Vec<PartialDecryption>,
}

/// Holds public material only. Keys for the extended evaluation are built
/// from the two parties' helpers.
pub struct Evaluator {
    params: RingParams,
    rng: ChaCha20Rng,
    n_owners: usize,
    joint: Option<(PublicKey, EvalHelper)>,
    client: Option<(PublicKey, EvalHelper)>,
    eval_keys: BTreeMap<usize, ExtendedEvalKey>,
    models: BTreeMap<OwnerId, StoredModel>,
    one: BTreeMap<usize, LeveledCiphertext>,
    query: Option<LeveledCiphertext>,
    pending: Option<PendingDecryption>,
    last_partials: Vec<PartialDecryption>,
    next_request: u64,
    received: Vec<PayloadKind>,
}

impl Evaluator {
    pub fn new(params: &RingParams, n_owners: usize, rng: ChaCha20Rng) -> Self {
        Self {
            params: params.clone(),
            rng,
            n_owners,
            joint: None,
            client: None,
            eval_keys: BTreeMap::new(),
            models: BTreeMap::new(),
            one: BTreeMap::new(),
            query: None,
            pending: None,
            last_partials: Vec::new(),
            next_request: 0,
            received: Vec::new(),
        }
    }

    pub fn receive(&mut self, msg: ProtocolMessage) -> Result<()> {
        self.received.push(msg.payload.kind());
        match (msg.sender, msg.payload) {
            (Role::Dealer, Payload::JointKeys { pk, helper }) => self.register_joint(pk, helper),
            (Role::Client, Payload::ClientKeys { pk, helper }) => self.register_client(pk, helper),
            (Role::Owner(owner), Payload::Model { threshold, a, b }) => {
                self.store_model(owner, &threshold, &a, &b)
            }
            (Role::Client, Payload::Query(c)) => self.store_query(&c),
            (Role::Owner(owner), Payload::Partial(part)) => {
                let pending = self
                    .pending
                    .as_mut()
                    .ok_or_else(|| Error::Protocol(format!("unsolicited partial decryption from {owner}")))?;
                if part.owner() != owner {
                    return Err(Error::Protocol(format!("{owner} sent a partial labelled {}", part.owner())));
                }
                pending.partials.push(part);
                Ok(())
            }
            (sender, payload) => Err(Error::Protocol(format!(
                "evaluator cannot handle {} from {sender}",
                payload.kind().as_str()
            ))),
        }
    }

    pub fn register_joint(&mut self, pk: PublicKey, helper: EvalHelper) -> Result<()> {
        if pk.id() != JOINT_KEY || helper.owner() != JOINT_KEY {
            return Err(Error::KeysetMismatch);
        }
        self.joint = Some((pk, helper));
        Ok(())
    }

    pub fn register_client(&mut self, pk: PublicKey, helper: EvalHelper) -> Result<()> {
        if pk.id() != CLIENT_KEY || helper.owner() != CLIENT_KEY {
            return Err(Error::KeysetMismatch);
        }
        self.client = Some((pk, helper));
        Ok(())
    }

    /// Extends and stores an owner's fresh model ciphertexts, replacing any
    /// earlier upload.
    pub fn store_model(
        &mut self,
        owner: OwnerId,
        threshold: &LeveledCiphertext,
        a: &LeveledCiphertext,
        b: &LeveledCiphertext,
    ) -> Result<()> {
        if owner.0 as usize >= self.n_owners {
            return Err(Error::Protocol(format!("unknown owner {owner}")));
        }
        for c in [threshold, a, b] {
            if c.keyset() != [JOINT_KEY] {
                return Err(Error::KeysetMismatch);
            }
        }
        let model = StoredModel {
            threshold: self.extend(threshold)?,
            a: self.extend(a)?,
            b: self.extend(b)?,
        };
        self.models.insert(owner, model);
        Ok(())
    }

    pub fn store_query(&mut self, c: &LeveledCiphertext) -> Result<()> {
        if c.keyset() != [CLIENT_KEY] {
            return Err(Error::KeysetMismatch);
        }
        self.query = Some(self.extend(c)?);
        Ok(())
    }

    /// Adds a previously built evaluation key.
    pub fn insert_eval_key(&mut self, eek: ExtendedEvalKey) -> Result<()> {
        if eek.keyset() != self.keyset() {
            return Err(Error::KeysetMismatch);
        }
        self.eval_keys.insert(eek.level(), eek);
        Ok(())
    }

    pub fn eval_keys(&self) -> impl Iterator<Item = &ExtendedEvalKey> {
        self.eval_keys.values()
    }

    fn public_keys(&self) -> Result<[&PublicKey; 2]> {
        match (&self.client, &self.joint) {
            (Some(c), Some(j)) => Ok([&c.0, &j.0]),
            _ => Err(Error::MissingMaterial("evaluator lacks a public key".into())),
        }
    }

    /// The two-key set every stored ciphertext is extended to.
    pub fn keyset(&self) -> [KeyId; 2] {
        [CLIENT_KEY, JOINT_KEY]
    }

    fn extend(&self, c: &LeveledCiphertext) -> Result<LeveledCiphertext> {
        extend(&self.params, c, &self.public_keys()?)
    }

    /// Builds the extended evaluation key for `level` if it is not cached.
    pub fn prepare_eval_key(&mut self, level: usize) -> Result<()> {
        if self.eval_keys.contains_key(&level) {
            return Ok(());
        }
        let (client, joint) = match (&self.client, &self.joint) {
            (Some(c), Some(j)) => (c, j),
            _ => return Err(Error::MissingMaterial("evaluator lacks a helper".into())),
        };
        let eek = extended_evalkgen(
            &self.params,
            level,
            &[(&client.0, &client.1), (&joint.0, &joint.1)],
        )?;
        self.eval_keys.insert(level, eek);
        Ok(())
    }

    pub fn eval_key(&mut self, level: usize) -> Result<&ExtendedEvalKey> {
        self.prepare_eval_key(level)?;
        Ok(&self.eval_keys[&level])
    }

    pub fn mult(&mut self, c1: &LeveledCiphertext, c2: &LeveledCiphertext) -> Result<LeveledCiphertext> {
        self.prepare_eval_key(c1.level())?;
        eval_mult_ext(&self.params, c1, c2, &self.eval_keys[&c1.level()])
    }

    pub fn lower_to(&mut self, c: &LeveledCiphertext, level: usize) -> Result<LeveledCiphertext> {
        let mut out = c.clone();
        while out.level() > level {
            self.prepare_eval_key(out.level())?;
            out = level_down_ext(&self.params, &out, &self.eval_keys[&out.level()])?;
        }
        Ok(out)
    }

    /// `[[1]]` under the joint key, extended and lowered to `level`.
    fn one_at(&mut self, level: usize) -> Result<LeveledCiphertext> {
        let top = self.params.max_level();
        if !self.one.contains_key(&top) {
            let joint = self.public_keys()?[1].clone();
            let fresh = enc(&self.params, &joint, &[1], &mut self.rng)?;
            let one = self.extend(&fresh)?;
            self.one.insert(top, one);
        }
        if !self.one.contains_key(&level) {
            let one = self.lower_to(&self.one[&top].clone(), level)?;
            self.one.insert(level, one);
        }
        Ok(self.one[&level].clone())
    }

    /// `[[1]]` at the top level.
    pub fn encrypted_one(&mut self) -> Result<LeveledCiphertext> {
        self.one_at(self.params.max_level())
    }

    /// `[[v_i]] = [[b_i]] [[A]] + ([[1]] - [[b_i]]) [[B]]`, where
    /// `[[b_i]]` is `x + y_i` at `t = 2` and `(x - y_i)^2` otherwise.
    pub fn eval_stump(&mut self, owner: OwnerId) -> Result<LeveledCiphertext> {
        let model = self
            .models
            .get(&owner)
            .cloned()
            .ok_or_else(|| Error::MissingMaterial(format!("no model from {owner}")))?;
        let x = self
            .query
            .clone()
            .ok_or_else(|| Error::MissingMaterial("no client query".into()))?;
        let b = match self.params.t() {
            2 => eval_add_ext(&x, &model.threshold)?,
            _ => {
                let d = eval_sub_ext(&x, &model.threshold)?;
                self.mult(&d, &d)?
            }
        };
        let level = b.level();
        let label_a = self.lower_to(&model.a, level)?;
        let label_b = self.lower_to(&model.b, level)?;
        let one = self.one_at(level)?;
        let take_a = self.mult(&b, &label_a)?;
        let not_b = eval_sub_ext(&one, &b)?;
        let take_b = self.mult(&not_b, &label_b)?;
        eval_add_ext(&take_a, &take_b)
    }

    /// `sum_i [[v_i]]` over every owner's stump.
    pub fn eval_forest(&mut self) -> Result<LeveledCiphertext> {
        if self.params.t() as usize <= self.n_owners {
            return Err(Error::TallyOverflow {
                t: self.params.t(),
                owners: self.n_owners,
            });
        }
        let mut tally: Option<LeveledCiphertext> = None;
        for i in 0..self.n_owners {
            let v = self.eval_stump(OwnerId(i as u32))?;
            tally = Some(match tally {
                None => v,
                Some(acc) => eval_add_ext(&acc, &v)?,
            });
        }
        tally.ok_or_else(|| Error::MissingMaterial("no owners".into()))
    }

    /// One request per owner for the joint-key component of `result`.
    pub fn start_decryption(&mut self, result: &LeveledCiphertext) -> Result<Vec<(Role, Payload)>> {
        let position = result
            .keyset()
            .iter()
            .position(|&k| k == JOINT_KEY)
            .ok_or(Error::KeyNotInSet(JOINT_KEY))?;
        if result.keyset() != self.keyset() {
            return Err(Error::KeysetMismatch);
        }
        let request = self.next_request;
        self.next_request += 1;
        let c1 = result.parts()[position][1].clone();
        self.pending = Some(PendingDecryption {
            request,
            result: result.clone(),
            partials: Vec::new(),
        });
        Ok((0..self.n_owners)
            .map(|i| {
                (
                    Role::Owner(OwnerId(i as u32)),
                    Payload::DecryptRequest {
                        request,
                        c1: c1.clone(),
                    },
                )
            })
            .collect())
    }

    /// Aggregates the partials into `rho` and addresses the result to the
    /// client.
    pub fn finish_decryption(&mut self) -> Result<(Role, Payload)> {
        let pending = self
            .pending
            .take()
            .ok_or_else(|| Error::Protocol("no decryption in progress".into()))?;
        let owners: Vec<OwnerId> = (0..self.n_owners).map(|i| OwnerId(i as u32)).collect();
        let rho = aggregate_partials(&pending.partials, &owners, pending.request)?;
        self.last_partials = pending.partials;
        Ok((
            Role::Client,
            Payload::Result {
                request: pending.request,
                result: pending.result,
                rho,
            },
        ))
    }

    /// Partials from the most recent completed decryption.
    pub fn last_partials(&self) -> &[PartialDecryption] {
        &self.last_partials
    }

    pub fn models(&self) -> &BTreeMap<OwnerId, StoredModel> {
        &self.models
    }

    /// Every ciphertext the evaluator currently stores.
    pub fn stored_ciphertexts(&self) -> Vec<&LeveledCiphertext> {
        self.models
            .values()
            .flat_map(|m| m.ciphertexts())
            .chain(self.one.values())
            .chain(self.query.iter())
            .collect()
    }

    pub fn inventory(&self) -> Inventory {
        Inventory {
            secret_keys: Vec::new(),
            shares: Vec::new(),
            received: self.received.clone(),
        }
    }
}
