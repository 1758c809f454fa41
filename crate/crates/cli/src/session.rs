//! A session directory: the parameter set chosen at setup plus one file per
//! key, helper and ciphertext.

use std::fs;
use std::path::{Path, PathBuf};

use mkthe::presets::{parse_pairs, ParameterPreset};
use mkthe::wire::{decode, encode, peek_header, WireObject};
use mkthe::RingParams;

use crate::commands::CliError;

const SESSION_FILE: &str = "session.cfg";

pub struct Session {
    dir: PathBuf,
    preset: ParameterPreset,
    owners: usize,
}

impl Session {
    pub fn create(dir: &Path, preset: &ParameterPreset, owners: usize) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::BadFile(format!("{}: {e}", dir.display())))?;
        let text = format!("{}owners = {owners}\n", preset.to_text());
        let session = Self {
            dir: dir.to_path_buf(),
            preset: preset.clone(),
            owners,
        };
        session.write_text(SESSION_FILE, &text)?;
        Ok(session)
    }

    pub fn open(dir: &Path) -> Result<Self, CliError> {
        let path = dir.join(SESSION_FILE);
        let text = fs::read_to_string(&path).map_err(|e| {
            CliError::BadFile(format!("{}: {e} (run `mkthe setup` first)", path.display()))
        })?;
        let bad = |e: mkthe::Error| CliError::BadFile(format!("{}: {e}", path.display()));
        let mut pairs = parse_pairs(&text).map_err(bad)?;
        let owners = pairs
            .iter()
            .find(|(k, _)| k == "owners")
            .and_then(|(_, v)| v.parse().ok())
            .ok_or_else(|| CliError::BadFile(format!("{}: no owner count", path.display())))?;
        pairs.retain(|(k, _)| k != "owners");
        Ok(Self {
            dir: dir.to_path_buf(),
            preset: ParameterPreset::from_pairs(&pairs).map_err(bad)?,
            owners,
        })
    }

    pub fn params(&self) -> &RingParams {
        self.preset.params()
    }

    pub fn preset(&self) -> &ParameterPreset {
        &self.preset
    }

    pub fn owners(&self) -> usize {
        self.owners
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn exists(&self, name: &str) -> bool {
        self.path(name).is_file()
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<(), CliError> {
        let path = self.path(name);
        fs::write(&path, text).map_err(|e| CliError::BadFile(format!("{}: {e}", path.display())))
    }

    pub fn write<T: WireObject>(&self, name: &str, obj: &T) -> Result<(), CliError> {
        let bytes = encode(obj, self.preset.name(), self.params())?;
        let path = self.path(name);
        fs::write(&path, bytes).map_err(|e| CliError::BadFile(format!("{}: {e}", path.display())))?;
        println!("wrote {}", path.display());
        Ok(())
    }

    /// Reads and checksum-verifies a file written under this session's
    /// parameter set.
    pub fn read<T: WireObject>(&self, name: &str) -> Result<T, CliError> {
        read_file(&self.path(name), &self.preset)
    }
}

pub fn read_file<T: WireObject>(path: &Path, preset: &ParameterPreset) -> Result<T, CliError> {
    let bad = |msg: String| CliError::BadFile(format!("{}: {msg}", path.display()));
    let bytes = fs::read(path).map_err(|e| bad(e.to_string()))?;
    let header = peek_header(&bytes).map_err(|e| bad(e.to_string()))?;
    if header.preset != preset.name() {
        return Err(bad(format!(
            "written under preset {}, session uses {}",
            header.preset,
            preset.name()
        )));
    }
    decode(&bytes, preset.params()).map_err(|e| bad(e.to_string()))
}
