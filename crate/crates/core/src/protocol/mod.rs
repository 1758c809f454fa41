//! Simulation of the collaborative forest evaluation: a dealer, `N` model
//! owners, a client and an evaluator exchanging messages over in-memory
//! channels.
//!
//! Key ids are fixed: the owners' joint key is [`JOINT_KEY`], the client's
//! is [`CLIENT_KEY`], and extended ciphertexts use the order
//! `[CLIENT_KEY, JOINT_KEY]`.

mod forest;
mod network;
mod parties;
mod transcript;

use std::fmt;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub use forest::{majority, plaintext_forest, DecisionStump};
pub use network::{Network, Payload, ProtocolMessage, Role};
pub use parties::{
    Client, ClientOutput, Evaluator, Inventory, ModelOwner, StoredModel, CLIENT_KEY, JOINT_KEY,
};
pub use transcript::{PayloadKind, Phase, Transcript, TranscriptRecord};

use crate::bgv::{CommonReference, LeveledCiphertext, SecretKey};
use crate::error::{Error, Result};
use crate::mkbgv::dec_joint;
use crate::params::RingParams;
use crate::presets::ParameterPreset;
use crate::threshold::{dealer_keygen, SecretShare};
use crate::OwnerId;

/// Secrets gathered by the simulation harness for checking results. No
/// party holds this.
pub struct Oracle {
    pub client: SecretKey,
    pub shares: Vec<SecretShare>,
}

impl Oracle {
    /// Decrypts with the client key and the summed shares.
    pub fn decrypt(&self, params: &RingParams, c: &LeveledCiphertext) -> Result<Vec<u64>> {
        dec_joint(params, c, &[&self.client], &self.shares.iter().collect::<Vec<_>>())
    }

    /// Infinity norm of the phase, in bits.
    pub fn measured_noise_bits(&self, c: &LeveledCiphertext) -> Result<f64> {
        let joint = crate::threshold::combine_shares(&self.shares.iter().collect::<Vec<_>>())?;
        let norm = c.measured_noise(&[&self.client, &joint])?;
        Ok((norm.max(1) as f64).log2())
    }
}

/// Wall-clock time spent per phase.
#[derive(Clone, Copy, Debug, Default)]
pub struct Timings {
    pub setup: Duration,
    pub encrypt: Duration,
    pub evaluate: Duration,
    pub decrypt: Duration,
}

pub struct SystemState {
    preset: ParameterPreset,
    n_owners: usize,
    owners: Vec<ModelOwner>,
    client: Client,
    evaluator: Evaluator,
    network: Network,
    oracle: Oracle,
    timings: Timings,
}

impl SystemState {
    pub fn params(&self) -> &RingParams {
        self.preset.params()
    }

    pub fn preset(&self) -> &ParameterPreset {
        &self.preset
    }

    pub fn n_owners(&self) -> usize {
        self.n_owners
    }

    pub fn owners(&self) -> &[ModelOwner] {
        &self.owners
    }

    pub fn client(&self) -> &Client {
        &self.client
    }

    pub fn evaluator(&self) -> &Evaluator {
        &self.evaluator
    }

    pub fn evaluator_mut(&mut self) -> &mut Evaluator {
        &mut self.evaluator
    }

    pub fn transcript(&self) -> &Transcript {
        self.network.transcript()
    }

    pub fn oracle(&self) -> &Oracle {
        &self.oracle
    }

    pub fn timings(&self) -> Timings {
        self.timings
    }

    fn deliver_to_evaluator(&mut self) -> Result<()> {
        while let Some(msg) = self.network.recv(Role::Evaluator) {
            self.evaluator.receive(msg)?;
        }
        Ok(())
    }
}

fn party_rng<R: Rng + ?Sized>(rng: &mut R) -> ChaCha20Rng {
    ChaCha20Rng::from_seed(rng.gen())
}

/// Dealer key distribution, client key generation and the evaluator's
/// extended evaluation keys for the two levels the forest uses.
pub fn run_setup<R: Rng + ?Sized>(
    n_owners: usize,
    preset: &ParameterPreset,
    keep_payloads: bool,
    rng: &mut R,
) -> Result<SystemState> {
    let start = Instant::now();
    if n_owners == 0 {
        return Err(Error::InvalidParams("at least one model owner is required".into()));
    }
    if n_owners > preset.max_owners() {
        return Err(Error::InvalidParams(format!(
            "preset {} supports at most {} owners",
            preset.name(),
            preset.max_owners()
        )));
    }
    let params = preset.params();
    let crs = CommonReference::generate(params, rng);
    let mut network = Network::new(preset.name(), params, keep_payloads);

    let material = dealer_keygen(params, &crs, JOINT_KEY, n_owners, &mut party_rng(rng))?;
    let (joint_pk, joint_helper, shares) = material.into_parts();
    let mut owners = Vec::with_capacity(n_owners);
    for share in &shares {
        let owner = ModelOwner::new(share.owner(), params, party_rng(rng));
        let payload = Payload::KeyShare {
            share: share.clone(),
            joint_pk: joint_pk.clone(),
        };
        network.send(Role::Dealer, owner.role(), payload)?;
        owners.push(owner);
    }
    network.send(
        Role::Dealer,
        Role::Evaluator,
        Payload::JointKeys {
            pk: joint_pk,
            helper: joint_helper,
        },
    )?;

    let (client, client_keys) = Client::new(params, &crs, n_owners, party_rng(rng))?;
    network.send(Role::Client, Role::Evaluator, client_keys)?;
    let oracle = Oracle {
        client: client.oracle_secret().clone(),
        shares,
    };

    let mut state = SystemState {
        preset: preset.clone(),
        n_owners,
        owners,
        client,
        evaluator: Evaluator::new(params, n_owners, party_rng(rng)),
        network,
        oracle,
        timings: Timings::default(),
    };
    for owner in &mut state.owners {
        while let Some(msg) = state.network.recv(owner.role()) {
            owner.receive(msg)?;
        }
    }
    state.deliver_to_evaluator()?;
    let top = params.max_level();
    state.evaluator.prepare_eval_key(top)?;
    if top >= 2 {
        state.evaluator.prepare_eval_key(top - 1)?;
    }
    state.network.ensure_idle()?;
    state.timings.setup = start.elapsed();
    Ok(state)
}

/// Owners upload their encrypted stumps; the client submits `[x]`. The
/// evaluator keeps one extended copy of each model, replacing any earlier
/// upload.
pub fn run_encryption(state: &mut SystemState, stumps: &[DecisionStump], x: u8) -> Result<()> {
    let start = Instant::now();
    if stumps.len() != state.n_owners {
        return Err(Error::Protocol(format!(
            "{} stumps for {} owners",
            stumps.len(),
            state.n_owners
        )));
    }
    for stump in stumps {
        let owner = state
            .owners
            .get_mut(stump.owner().0 as usize)
            .ok_or_else(|| Error::Protocol(format!("no owner {}", stump.owner())))?;
        let payload = owner.upload_model(stump)?;
        state.network.send(owner.role(), Role::Evaluator, payload)?;
    }
    let query = state.client.query(x)?;
    state.network.send(Role::Client, Role::Evaluator, query)?;
    state.deliver_to_evaluator()?;
    if state.evaluator.models().len() != state.n_owners {
        return Err(Error::Protocol("an owner uploaded more than one stump".into()));
    }
    state.timings.encrypt += start.elapsed();
    Ok(())
}

/// `[[v_i]]` for owner `i`.
pub fn eval_stump(state: &mut SystemState, owner: usize) -> Result<LeveledCiphertext> {
    let start = Instant::now();
    let out = state.evaluator.eval_stump(OwnerId(owner as u32));
    state.timings.evaluate += start.elapsed();
    out
}

/// The encrypted tally `sum_i [[v_i]]`.
pub fn eval_forest(state: &mut SystemState) -> Result<LeveledCiphertext> {
    let start = Instant::now();
    let out = state.evaluator.eval_forest();
    state.timings.evaluate += start.elapsed();
    out
}

/// Requests, partial decryptions, and the client's final step.
pub fn run_decryption(state: &mut SystemState, result: &LeveledCiphertext) -> Result<ClientOutput> {
    let start = Instant::now();
    for (to, payload) in state.evaluator.start_decryption(result)? {
        state.network.send(Role::Evaluator, to, payload)?;
    }
    for owner in &mut state.owners {
        while let Some(msg) = state.network.recv(owner.role()) {
            if let Some((to, reply)) = owner.receive(msg)? {
                state.network.send(owner.role(), to, reply)?;
            }
        }
    }
    state.deliver_to_evaluator()?;
    let (to, payload) = state.evaluator.finish_decryption()?;
    state.network.send(Role::Evaluator, to, payload)?;
    let msg = state
        .network
        .recv(Role::Client)
        .ok_or_else(|| Error::Protocol("result was not delivered".into()))?;
    let out = state.client.receive(msg);
    state.network.ensure_idle()?;
    state.timings.decrypt += start.elapsed();
    out
}

pub struct DemoConfig {
    pub preset: ParameterPreset,
    pub owners: usize,
    pub seed: u64,
    pub inputs: Vec<u8>,
    pub stumps: Option<Vec<DecisionStump>>,
    pub keep_payloads: bool,
    pub search_path: Vec<PathBuf>,
}

impl DemoConfig {
    pub fn new(preset: ParameterPreset, owners: usize, seed: u64) -> Self {
        Self {
            preset,
            owners,
            seed,
            inputs: vec![0, 1],
            stumps: None,
            keep_payloads: false,
            search_path: Vec::new(),
        }
    }
}

/// One client query in a demo run. `output` is `None` when decryption was
/// refused for noise overflow.
#[derive(Clone, Debug, PartialEq)]
pub struct DemoRow {
    pub x: u8,
    pub output: Option<ClientOutput>,
    pub expected_tally: u64,
    pub expected_label: u8,
    pub oracle_tally: Option<u64>,
    pub tracked_bits: f64,
    pub measured_bits: f64,
    pub budget_bits: f64,
}

impl DemoRow {
    pub fn matches(&self) -> bool {
        self.output
            .as_ref()
            .is_some_and(|o| o.tally == self.expected_tally && o.label == self.expected_label)
            && self.oracle_tally == Some(self.expected_tally)
    }
}

pub struct DemoReport {
    pub requested_preset: String,
    pub preset: ParameterPreset,
    pub owners: usize,
    pub seed: u64,
    pub stumps: Vec<DecisionStump>,
    pub rows: Vec<DemoRow>,
    pub transcript: Transcript,
    pub timings: Timings,
    pub model_copies: Vec<usize>,
    pub max_stored_subvectors: usize,
}

impl DemoReport {
    pub fn overflow_events(&self) -> usize {
        self.rows.iter().filter(|r| r.output.is_none()).count()
    }

    pub fn all_match(&self) -> bool {
        self.rows.iter().all(DemoRow::matches)
    }

    pub fn setup_owner_interactions(&self) -> usize {
        self.transcript
            .interactions(Phase::Setup, |p| p.starts_with('M'))
    }

    pub fn max_transcript_subvectors(&self) -> usize {
        self.transcript.max_subvectors()
    }
}

impl fmt::Display for DemoReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.preset.params();
        let n = self.owners;
        write!(f, "preset: {}", self.requested_preset)?;
        if self.preset.name() != self.requested_preset {
            write!(f, " (running {} for the tally)", self.preset.name())?;
        }
        writeln!(f)?;
        if self.preset.insecure() {
            writeln!(f, "warning: toy parameters, not secure")?;
        }
        writeln!(
            f,
            "ring: degree {}, t = {}, levels 0..={}, q_0 = {}",
            p.degree(),
            p.t(),
            p.max_level(),
            p.q(0)
        )?;
        writeln!(f, "owners: {n}, seed: {}", self.seed)?;
        for s in &self.stumps {
            writeln!(f, "  stump {}: y = {}, A = {}, B = {}", s.owner(), s.threshold(), s.a(), s.b())?;
        }
        writeln!(f, "results:")?;
        for r in &self.rows {
            let got = match &r.output {
                Some(o) => format!("tally {} label {}", o.tally, o.label),
                None => "noise overflow".to_string(),
            };
            writeln!(
                f,
                "  x = {}: {got}; expected tally {} label {}; {}",
                r.x,
                r.expected_tally,
                r.expected_label,
                if r.matches() { "ok" } else { "MISMATCH" }
            )?;
        }
        writeln!(f, "noise (bits, tracked / measured / budget):")?;
        for r in &self.rows {
            writeln!(
                f,
                "  x = {}: {:.1} / {:.1} / {:.1}",
                r.x, r.tracked_bits, r.measured_bits, r.budget_bits
            )?;
        }
        writeln!(f, "noise-overflow events: {}", self.overflow_events())?;
        writeln!(f, "dimensions:")?;
        writeln!(f, "  fresh ciphertext: 1x2")?;
        writeln!(
            f,
            "  extended ciphertext: {}x2 (one block per owner would give {}x2)",
            self.max_stored_subvectors,
            n + 1
        )?;
        writeln!(
            f,
            "  encrypted model copies per owner: {}",
            self.model_copies.iter().max().copied().unwrap_or(0)
        )?;
        writeln!(f, "messages:")?;
        for phase in Phase::ALL {
            writeln!(f, "  {phase}: {}", self.transcript.count(phase))?;
        }
        writeln!(f, "setup owner interactions: {}", self.setup_owner_interactions())?;
        writeln!(f, "decrypt messages: {}", self.transcript.count(Phase::Decrypt) / self.rows.len().max(1))?;
        writeln!(
            f,
            "time: setup {:.0?}, encrypt {:.0?}, evaluate {:.0?}, decrypt {:.0?}",
            self.timings.setup, self.timings.encrypt, self.timings.evaluate, self.timings.decrypt
        )?;
        write!(f, "all results match: {}", self.all_match())
    }
}

/// Runs every phase once per client input and compares against the
/// plaintext forest and the joint-key oracle.
pub fn run_demo(config: &DemoConfig) -> Result<DemoReport> {
    let preset = config.preset.for_tally(config.owners, &config.search_path)?;
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let mut state = run_setup(config.owners, &preset, config.keep_payloads, &mut rng)?;
    let stumps = match &config.stumps {
        Some(s) => s.clone(),
        None => (0..config.owners)
            .map(|i| DecisionStump::random(OwnerId(i as u32), &mut rng))
            .collect(),
    };
    let mut rows = Vec::with_capacity(config.inputs.len());
    let mut max_stored_subvectors = 0;
    for &x in &config.inputs {
        run_encryption(&mut state, &stumps, x)?;
        let result = eval_forest(&mut state)?;
        max_stored_subvectors = state
            .evaluator
            .stored_ciphertexts()
            .iter()
            .map(|c| c.subvector_count())
            .chain([result.subvector_count(), max_stored_subvectors])
            .max()
            .unwrap_or(0);
        let output = match run_decryption(&mut state, &result) {
            Ok(o) => Some(o),
            Err(Error::NoiseOverflow { .. }) => None,
            Err(e) => return Err(e),
        };
        let (expected_tally, expected_label) = plaintext_forest(&stumps, x);
        let oracle_tally = state.oracle.decrypt(state.params(), &result).ok().map(|p| p[0]);
        rows.push(DemoRow {
            x,
            output,
            expected_tally,
            expected_label,
            oracle_tally,
            tracked_bits: result.noise().bits(),
            measured_bits: state.oracle.measured_noise_bits(&result)?,
            budget_bits: (result.context().q() as f64 / 2.0).log2(),
        });
    }
    let model_copies = (0..config.owners)
        .map(|i| state.evaluator.models().contains_key(&OwnerId(i as u32)) as usize)
        .collect();
    Ok(DemoReport {
        requested_preset: config.preset.name().to_string(),
        preset,
        owners: config.owners,
        seed: config.seed,
        stumps,
        rows,
        transcript: state.transcript().clone(),
        timings: state.timings,
        model_copies,
        max_stored_subvectors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wire::{decode, encode};

    fn toy() -> ParameterPreset {
        ParameterPreset::builtin("toy").unwrap()
    }

    fn stumps(rows: &[(u8, u8, u8)]) -> Vec<DecisionStump> {
        rows.iter()
            .enumerate()
            .map(|(i, &(y, a, b))| DecisionStump::new(OwnerId(i as u32), y, a, b).unwrap())
            .collect()
    }

    #[test]
    fn demo_matches_plaintext_forest() {
        let report = run_demo(&DemoConfig::new(toy(), 3, 7)).unwrap();
        println!("{report}");
        assert!(report.all_match());
        assert_eq!(report.preset.name(), "toy-tally");
        assert_eq!(report.overflow_events(), 0);
        assert_eq!(report.transcript.count(Phase::Decrypt), 2 * 3 * 2);
        assert!(report.setup_owner_interactions() <= 3);
        assert_eq!(report.max_transcript_subvectors(), 2);
        assert_eq!(report.max_stored_subvectors, 2);
        assert_eq!(report.model_copies, vec![1, 1, 1]);
        assert!(report.to_string().contains("decrypt messages: 6"));
        for row in &report.rows {
            assert!(row.measured_bits <= row.tracked_bits, "{row:?}");
        }
    }

    #[test]
    fn stump_truth_table_through_protocol() {
        for preset in [toy(), ParameterPreset::builtin("toy-tally").unwrap()] {
            let mut rng = ChaCha20Rng::seed_from_u64(11);
            let mut state = run_setup(1, &preset, false, &mut rng).unwrap();
            for bits in 0..16u8 {
                let (x, y, a, b) = (bits & 1, bits >> 1 & 1, bits >> 2 & 1, bits >> 3 & 1);
                let forest = stumps(&[(y, a, b)]);
                run_encryption(&mut state, &forest, x).unwrap();
                let v = eval_stump(&mut state, 0).unwrap();
                let expected = if x != y { a } else { b };
                assert_eq!(state.oracle().decrypt(state.params(), &v).unwrap()[0], expected as u64);
                let out = run_decryption(&mut state, &v).unwrap();
                assert_eq!(out.tally, expected as u64, "t={} x={x} y={y} A={a} B={b}", preset.params().t());
            }
        }
    }

    #[test]
    fn roles_hold_only_their_material() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let mut state = run_setup(2, &ParameterPreset::builtin("toy-tally").unwrap(), false, &mut rng).unwrap();
        run_encryption(&mut state, &stumps(&[(0, 1, 0), (1, 1, 0)]), 1).unwrap();
        let tally = eval_forest(&mut state).unwrap();
        let out = run_decryption(&mut state, &tally).unwrap();
        assert_eq!((out.tally, out.label), (1, 0), "1 of 2 is a tie");

        let client = state.client().inventory();
        assert_eq!(client.secret_keys, vec![CLIENT_KEY]);
        assert!(client.shares.is_empty());
        assert_eq!(client.received, vec![PayloadKind::Result]);
        let evaluator = state.evaluator().inventory();
        assert!(evaluator.secret_keys.is_empty() && evaluator.shares.is_empty());
        for owner in state.owners() {
            let inv = owner.inventory();
            assert_eq!(inv.shares, vec![owner.id()]);
            assert!(inv.secret_keys.is_empty());
            assert!(inv
                .received
                .iter()
                .all(|k| matches!(k, PayloadKind::KeyShare | PayloadKind::DecryptRequest)));
        }
        let one = state.evaluator_mut().encrypted_one().unwrap();
        assert_eq!(state.oracle().decrypt(state.params(), &one).unwrap()[0], 1);
    }

    #[test]
    fn tally_needs_room() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let mut state = run_setup(3, &toy(), false, &mut rng).unwrap();
        run_encryption(&mut state, &stumps(&[(0, 1, 1); 3]), 0).unwrap();
        assert_eq!(
            eval_forest(&mut state).unwrap_err(),
            Error::TallyOverflow { t: 2, owners: 3 }
        );
        assert!(run_encryption(&mut state, &stumps(&[(0, 1, 1); 2]), 0).is_err());
        assert!(run_encryption(&mut state, &stumps(&[(0, 1, 1); 3]), 2).is_err());
    }

    #[test]
    fn demo_is_deterministic_and_transcript_roundtrips() {
        let mut config = DemoConfig::new(toy(), 2, 99);
        config.inputs = vec![1];
        config.keep_payloads = true;
        let a = run_demo(&config).unwrap();
        let b = run_demo(&config).unwrap();
        assert_eq!(a.transcript.to_json_lines(), b.transcript.to_json_lines());
        let parsed = Transcript::from_json_lines(&a.transcript.to_json_lines()).unwrap();
        assert_eq!(parsed, a.transcript);
        let params = a.preset.params();
        let bytes = encode(&a.transcript, a.preset.name(), params).unwrap();
        assert_eq!(decode::<Transcript>(&bytes, params).unwrap(), a.transcript);
        let first = a.transcript.to_json_lines_without_payloads();
        assert!(first.lines().next().unwrap().starts_with(r#"{"seq":0,"sender":"dealer","receiver":"M0","phase":"setup""#));
    }

    #[test]
    fn transcript_rejects_out_of_order_and_wrong_phase() {
        let record = |seq, phase| TranscriptRecord {
            seq,
            sender: "client".into(),
            receiver: "evaluator".into(),
            phase,
            payload_type: PayloadKind::Query,
            payload_bytes: 8,
            subvectors: vec![1],
            payload: None,
        };
        let mut t = Transcript::default();
        t.push(record(3, Phase::Encrypt)).unwrap();
        assert!(t.push(record(3, Phase::Encrypt)).is_err());
        assert!(t.push(record(4, Phase::Evaluate)).is_err());
    }
}
