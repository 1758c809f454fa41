use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use mkthe::bgv::{enc, kgen, CommonReference, LeveledCiphertext, PublicKey};
use mkthe::mkbgv::{gen_helper, EvalHelper, ExtendedEvalKey};
use mkthe::presets::{parse_pairs, ParameterPreset};
use mkthe::protocol::{
    majority, run_demo, DecisionStump, DemoConfig, Evaluator, CLIENT_KEY, JOINT_KEY,
};
use mkthe::threshold::{aggregate_partials, dealer_keygen, finish_decryption, partial_decrypt, SecretShare};
use mkthe::wire::encode;
use mkthe::{Error, OwnerId};

use crate::session::Session;
use crate::{Command, GlobalArgs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    BadArgs(String),
    #[error("{0}")]
    BadFile(String),
    #[error("{0}")]
    Crypto(Error),
    #[error("{0}")]
    NoiseOverflow(String),
}

impl CliError {
    pub fn category(&self) -> &'static str {
        match self {
            CliError::BadArgs(_) => "bad-args",
            CliError::BadFile(_) => "bad-file",
            CliError::Crypto(_) => "crypto-failure",
            CliError::NoiseOverflow(_) => "noise-overflow",
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::BadArgs(_) => 2,
            CliError::BadFile(_) => 3,
            CliError::Crypto(_) => 4,
            CliError::NoiseOverflow(_) => 5,
        })
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NoiseOverflow { .. } => CliError::NoiseOverflow(e.to_string()),
            Error::InvalidParams(_) | Error::TallyOverflow { .. } => CliError::BadArgs(e.to_string()),
            Error::Decode(_) => CliError::BadFile(e.to_string()),
            other => CliError::Crypto(other),
        }
    }
}

const DEFAULT_PRESET: &str = "toy";
const DEFAULT_OWNERS: usize = 3;

/// Flags merged over the `--config` file.
struct Settings {
    preset: Option<String>,
    overrides: Vec<(String, String)>,
    owners: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    threads: Option<usize>,
    search_path: Vec<PathBuf>,
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::BadArgs(format!("config: {key} = {value:?} is not valid")))
}

impl Settings {
    fn load(global: GlobalArgs, owners: Option<usize>) -> Result<Self, CliError> {
        let mut s = Settings {
            preset: None,
            overrides: Vec::new(),
            owners: None,
            seed: None,
            out: None,
            threads: None,
            search_path: std::env::var_os("MKTHE_PRESET_PATH")
                .map(|p| std::env::split_paths(&p).collect())
                .unwrap_or_default(),
        };
        if let Some(path) = &global.config {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::BadArgs(format!("{}: {e}", path.display())))?;
            let pairs = parse_pairs(&text).map_err(|e| CliError::BadArgs(format!("{}: {e}", path.display())))?;
            for (key, value) in pairs {
                match key.as_str() {
                    "preset" => s.preset = Some(value),
                    "owners" => s.owners = Some(parse_value(&key, &value)?),
                    "seed" => s.seed = Some(parse_value(&key, &value)?),
                    "out" => s.out = Some(PathBuf::from(value)),
                    "threads" => s.threads = Some(parse_value(&key, &value)?),
                    _ => s.overrides.push((key, value)),
                }
            }
        }
        s.preset = global.preset.or(s.preset);
        s.owners = owners.or(s.owners);
        s.seed = global.seed.or(s.seed);
        s.out = global.out.or(s.out);
        s.threads = global.threads.or(s.threads);
        Ok(s)
    }

    fn preset(&self) -> Result<ParameterPreset, CliError> {
        let name = self.preset.as_deref().unwrap_or(DEFAULT_PRESET);
        let preset = ParameterPreset::find(name, &self.search_path)?;
        match self.overrides.is_empty() {
            true => Ok(preset),
            false => Ok(preset.with_overrides(&self.overrides)?),
        }
    }

    fn owners(&self) -> usize {
        self.owners.unwrap_or(DEFAULT_OWNERS)
    }

    fn out(&self) -> Result<&Path, CliError> {
        self.out
            .as_deref()
            .ok_or_else(|| CliError::BadArgs("--out DIR is required".into()))
    }

    /// A generator for one command role. Without `--seed` the seed is drawn
    /// from the operating system.
    fn rng(&self, stream: u64) -> ChaCha20Rng {
        let seed = self.seed.unwrap_or_else(|| rand::thread_rng().gen());
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        rng
    }

    fn session(&self) -> Result<Session, CliError> {
        Session::open(self.out()?)
    }
}

const SETUP_STREAM: u64 = 1;
const KEYGEN_STREAM: u64 = 2;
const QUERY_STREAM: u64 = 3;
const EVALUATE_STREAM: u64 = 4;
const DECRYPT_STREAM: u64 = 5;
const OWNER_STREAM: u64 = 1 << 32;

pub fn run(global: GlobalArgs, command: Command) -> Result<(), CliError> {
    let owners = match &command {
        Command::Setup { owners } | Command::Demo { owners, .. } => *owners,
        _ => None,
    };
    let settings = Settings::load(global, owners)?;
    if let Some(n) = settings.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::BadArgs(format!("--threads: {e}")))?;
    }
    match command {
        Command::Setup { .. } => setup(&settings),
        Command::Keygen => keygen(&settings),
        Command::Encrypt {
            owner,
            stump,
            client,
        } => encrypt(&settings, owner, stump.as_deref(), client),
        Command::Evaluate => evaluate(&settings),
        Command::Decrypt { input } => decrypt(&settings, input),
        Command::Demo { dump_transcript, .. } => demo(&settings, dump_transcript),
    }
}

fn owner_file(i: usize) -> String {
    format!("owner-{i}.share")
}

fn model_file(i: usize, part: &str) -> String {
    format!("model-{i}-{part}.ct")
}

fn setup(s: &Settings) -> Result<(), CliError> {
    let owners = s.owners();
    let preset = s.preset()?.for_tally(owners, &s.search_path)?;
    if owners == 0 || owners > preset.max_owners() {
        return Err(CliError::BadArgs(format!(
            "preset {} supports 1 to {} owners",
            preset.name(),
            preset.max_owners()
        )));
    }
    let session = Session::create(s.out()?, &preset, owners)?;
    let mut rng = s.rng(SETUP_STREAM);
    let params = session.params();
    let crs = CommonReference::generate(params, &mut rng);
    let (pk, helper, shares) = dealer_keygen(params, &crs, JOINT_KEY, owners, &mut rng)?.into_parts();
    session.write("joint.pk", &pk)?;
    session.write("joint.helper", &helper)?;
    for (i, share) in shares.iter().enumerate() {
        session.write(&owner_file(i), share)?;
    }
    println!("preset: {}, owners: {owners}", preset.name());
    Ok(())
}

fn keygen(s: &Settings) -> Result<(), CliError> {
    let session = s.session()?;
    let params = session.params();
    let joint: PublicKey = session.read("joint.pk")?;
    let crs = CommonReference::from_rows(joint.levels().iter().map(|l| l.a.clone()).collect());
    let mut rng = s.rng(KEYGEN_STREAM);
    let (sk, pk) = kgen(params, &crs, CLIENT_KEY, &mut rng)?;
    let helper = gen_helper(params, &sk, &pk, &mut rng)?;
    session.write("client.pk", &pk)?;
    session.write("client.sk", &SecretShare::from_parts(OwnerId(0), sk))?;
    session.write("client.helper", &helper)?;
    Ok(())
}

fn parse_stump(owner: u32, text: &str) -> Result<DecisionStump, CliError> {
    let bits: Vec<u8> = text
        .split(',')
        .map(|b| b.trim().parse())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::BadArgs(format!("--stump {text:?}: expected y,A,B")))?;
    match bits[..] {
        [y, a, b] => DecisionStump::new(OwnerId(owner), y, a, b).map_err(|e| CliError::BadArgs(e.to_string())),
        _ => Err(CliError::BadArgs(format!("--stump {text:?}: expected y,A,B"))),
    }
}

fn encrypt(s: &Settings, owner: Option<u32>, stump: Option<&str>, client: Option<u8>) -> Result<(), CliError> {
    let session = s.session()?;
    let params = session.params();
    match (owner, stump, client) {
        (Some(i), Some(text), None) => {
            if i as usize >= session.owners() {
                return Err(CliError::BadArgs(format!("owner {i} outside 0..{}", session.owners())));
            }
            let stump = parse_stump(i, text)?;
            let pk: PublicKey = session.read("joint.pk")?;
            let mut rng = s.rng(OWNER_STREAM + i as u64);
            for (part, bit) in [("y", stump.threshold()), ("a", stump.a()), ("b", stump.b())] {
                let c = enc(params, &pk, &[bit as u64], &mut rng)?;
                session.write(&model_file(i as usize, part), &c)?;
            }
            Ok(())
        }
        (None, None, Some(x)) => {
            if x > 1 {
                return Err(CliError::BadArgs(format!("--client {x}: expected a bit")));
            }
            let pk: PublicKey = session.read("client.pk")?;
            let c = enc(params, &pk, &[x as u64], &mut s.rng(QUERY_STREAM))?;
            session.write("query.ct", &c)
        }
        _ => Err(CliError::BadArgs(
            "use either --owner I --stump y,A,B or --client X".into(),
        )),
    }
}

fn evalkey_file(level: usize) -> String {
    format!("evalkey-{level}.key")
}

fn evaluate(s: &Settings) -> Result<(), CliError> {
    let session = s.session()?;
    let params = session.params();
    let mut evaluator = Evaluator::new(params, session.owners(), s.rng(EVALUATE_STREAM));
    evaluator.register_joint(session.read("joint.pk")?, session.read::<EvalHelper>("joint.helper")?)?;
    evaluator.register_client(session.read("client.pk")?, session.read::<EvalHelper>("client.helper")?)?;
    let top = params.max_level();
    let levels: Vec<usize> = (top.saturating_sub(1).max(1)..=top).collect();
    for &level in &levels {
        let name = evalkey_file(level);
        if session.exists(&name) {
            evaluator.insert_eval_key(session.read::<ExtendedEvalKey>(&name)?)?;
        } else {
            evaluator.prepare_eval_key(level)?;
            let eek = evaluator.eval_key(level)?.clone();
            session.write(&name, &eek)?;
        }
    }
    for i in 0..session.owners() {
        let read = |part| session.read::<LeveledCiphertext>(&model_file(i, part));
        evaluator.store_model(OwnerId(i as u32), &read("y")?, &read("a")?, &read("b")?)?;
    }
    evaluator.store_query(&session.read("query.ct")?)?;
    let result = evaluator.eval_forest()?;
    session.write("result.ct", &result)?;
    println!(
        "result: level {}, {} sub-vectors, noise bound 2^{:.1}",
        result.level(),
        result.subvector_count(),
        result.noise().bits()
    );
    Ok(())
}

fn decrypt(s: &Settings, input: Option<PathBuf>) -> Result<(), CliError> {
    let session = s.session()?;
    let params = session.params();
    let result: LeveledCiphertext = match input {
        Some(path) => crate::session::read_file(&path, session.preset())?,
        None => session.read("result.ct")?,
    };
    let position = result
        .keyset()
        .iter()
        .position(|&k| k == JOINT_KEY)
        .ok_or(Error::KeyNotInSet(JOINT_KEY))?;
    let c1 = &result.parts()[position][1];
    let request = 0;
    let mut rng = s.rng(DECRYPT_STREAM);
    let n = session.owners();
    let mut partials = Vec::with_capacity(n);
    for i in 0..n {
        let share: SecretShare = session.read(&owner_file(i))?;
        partials.push(partial_decrypt(params, &share, c1, request, &mut rng)?);
    }
    let owners: Vec<OwnerId> = (0..n).map(|i| OwnerId(i as u32)).collect();
    let rho = aggregate_partials(&partials, &owners, request)?;
    let client: SecretShare = session.read("client.sk")?;
    if client.joint() != CLIENT_KEY {
        return Err(CliError::BadFile("client.sk does not hold the client key".into()));
    }
    let plaintext = finish_decryption(params, &result, &[client.key()], JOINT_KEY, &rho, n)?;
    println!("tally: {}", plaintext[0]);
    println!("label: {}", majority(plaintext[0], n));
    println!("decrypt messages: {}", 2 * n);
    Ok(())
}

fn demo(s: &Settings, dump: Option<PathBuf>) -> Result<(), CliError> {
    let owners = s.owners();
    let mut config = DemoConfig::new(s.preset()?, owners, s.seed.unwrap_or(0));
    config.keep_payloads = dump.is_some();
    config.search_path = s.search_path.clone();
    let report = run_demo(&config)?;
    println!("{report}");
    if let Some(path) = dump {
        fs::write(&path, report.transcript.to_json_lines())
            .map_err(|e| CliError::BadFile(format!("{}: {e}", path.display())))?;
        println!("wrote {}", path.display());
    }
    if let Some(dir) = &s.out {
        fs::create_dir_all(dir).map_err(|e| CliError::BadFile(format!("{}: {e}", dir.display())))?;
        let bytes = encode(&report.transcript, report.preset.name(), report.preset.params())?;
        for (name, data) in [
            ("transcript.bin", bytes),
            ("transcript.jsonl", report.transcript.to_json_lines_without_payloads().into_bytes()),
        ] {
            let path = dir.join(name);
            fs::write(&path, data).map_err(|e| CliError::BadFile(format!("{}: {e}", path.display())))?;
        }
    }
    if report.overflow_events() > 0 {
        return Err(CliError::NoiseOverflow(format!(
            "{} queries could not be decrypted",
            report.overflow_events()
        )));
    }
    if !report.all_match() {
        return Err(CliError::Crypto(Error::Protocol(
            "protocol output differs from the plaintext forest".into(),
        )));
    }
    Ok(())
}
