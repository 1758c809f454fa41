//! Named parameter sets and their `key = value` text form.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::noise::NoiseEstimate;
use crate::params::{RingParams, DEFAULT_NOISE_BOUND, DEFAULT_STDDEV};

/// What a preset's plaintext modulus is sized for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PresetUsage {
    /// `t = 2`: comparisons by XOR, no counting.
    Stump,
    /// `t > N`: room for a tally of stump outputs.
    Tally,
}

impl PresetUsage {
    fn as_str(self) -> &'static str {
        match self {
            PresetUsage::Stump => "stump",
            PresetUsage::Tally => "tally",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParameterPreset {
    name: String,
    params: RingParams,
    usage: PresetUsage,
    insecure: bool,
    companion: Option<String>,
    max_owners: usize,
}

const BUILTIN: &[(&str, usize, u64, Option<&str>)] = &[
    ("toy", 16, 2, Some("toy-tally")),
    ("toy-tally", 16, 8, None),
    ("toy64", 64, 2, Some("toy64-tally")),
    ("toy64-tally", 64, 8, None),
];

impl ParameterPreset {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &RingParams {
        &self.params
    }

    pub fn usage(&self) -> PresetUsage {
        self.usage
    }

    pub fn insecure(&self) -> bool {
        self.insecure
    }

    /// The preset to use for the other half of the protocol, if any.
    pub fn companion(&self) -> Option<&str> {
        self.companion.as_deref()
    }

    pub fn max_owners(&self) -> usize {
        self.max_owners
    }

    pub fn builtin_names() -> impl Iterator<Item = &'static str> {
        BUILTIN.iter().map(|b| b.0)
    }

    pub fn builtin(name: &str) -> Result<Self> {
        let &(name, degree, t, companion) = BUILTIN
            .iter()
            .find(|b| b.0 == name)
            .ok_or_else(|| Error::InvalidParams(format!("unknown preset {name:?}")))?;
        let mut text = format!("name = {name}\ndegree = {degree}\nt = {t}\ninsecure = true\n");
        if let Some(c) = companion {
            writeln!(text, "companion = {c}").expect("writing to a String");
        }
        Self::parse(&text)
    }

    /// Looks `name` up among the built-ins, then as `<dir>/<name>.preset` in
    /// each search directory.
    pub fn find(name: &str, search: &[PathBuf]) -> Result<Self> {
        if BUILTIN.iter().any(|b| b.0 == name) {
            return Self::builtin(name);
        }
        for dir in search {
            let path = dir.join(format!("{name}.preset"));
            if path.is_file() {
                return Self::load(&path);
            }
        }
        Err(Error::InvalidParams(format!("unknown preset {name:?}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Decode(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_pairs(&parse_pairs(text)?)
    }

    /// Builds a preset from `key = value` pairs; later pairs win.
    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self> {
        let get = |key: &str| {
            pairs
                .iter()
                .rev()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.as_str())
        };
        for (key, _) in pairs {
            if !KEYS.contains(&key.as_str()) {
                return Err(Error::InvalidParams(format!("unknown preset key {key:?}")));
            }
        }
        let name = get("name")
            .ok_or_else(|| Error::InvalidParams("preset without a name".into()))?
            .to_string();
        let degree: usize = number(get("degree"), "degree")?
            .ok_or_else(|| Error::InvalidParams("preset without a degree".into()))?;
        let t: u64 = number(get("t"), "t")?
            .ok_or_else(|| Error::InvalidParams("preset without t".into()))?;
        let stddev: f64 = number(get("stddev"), "stddev")?.unwrap_or(DEFAULT_STDDEV);
        let bound: u64 = number(get("noise_bound"), "noise_bound")?.unwrap_or(DEFAULT_NOISE_BOUND);
        let mut builder = RingParams::builder(degree, t).noise(stddev, bound);
        if let Some(bits) = get("modulus_bits") {
            builder = builder.modulus_bits(&list(bits, "modulus_bits")?);
        }
        if let Some(moduli) = get("moduli") {
            builder = builder.moduli(&list(moduli, "moduli")?);
        }
        if let Some(b) = number(get("smudging_bound"), "smudging_bound")? {
            builder = builder.smudging_bound(b);
        }
        let params = builder.build()?;
        let usage = match get("usage") {
            None if t == 2 => PresetUsage::Stump,
            None => PresetUsage::Tally,
            Some("stump") => PresetUsage::Stump,
            Some("tally") => PresetUsage::Tally,
            Some(other) => return Err(Error::InvalidParams(format!("unknown usage {other:?}"))),
        };
        if usage == PresetUsage::Stump && t != 2 {
            return Err(Error::InvalidParams("stump presets need t = 2".into()));
        }
        let insecure = match get("insecure") {
            None => false,
            Some("true") => true,
            Some("false") => false,
            Some(other) => return Err(Error::InvalidParams(format!("insecure = {other:?}"))),
        };
        if name.starts_with("toy") && !insecure {
            return Err(Error::InvalidParams("toy presets must be flagged insecure".into()));
        }
        let limit = smudging_capacity(&params);
        let max_owners = match number(get("max_owners"), "max_owners")? {
            Some(n) if n > limit => {
                return Err(Error::InvalidParams(format!(
                    "smudging for {n} owners does not fit below q_0/4 (at most {limit})"
                )))
            }
            Some(n) => n,
            None => limit.min(match usage {
                PresetUsage::Tally => (t - 1) as usize,
                PresetUsage::Stump => 64,
            }),
        };
        if max_owners == 0 {
            return Err(Error::InvalidParams("preset admits no owners".into()));
        }
        if usage == PresetUsage::Tally && max_owners as u64 >= t {
            return Err(Error::TallyOverflow {
                t,
                owners: max_owners,
            });
        }
        Ok(Self {
            name,
            params,
            usage,
            insecure,
            companion: get("companion").map(str::to_string),
            max_owners,
        })
    }

    /// The `key = value` form; `parse(to_text())` reproduces the preset.
    pub fn to_text(&self) -> String {
        let p = &self.params;
        let moduli: Vec<String> = p.moduli().iter().map(u64::to_string).collect();
        let mut out = String::new();
        let mut line = |k: &str, v: String| writeln!(out, "{k} = {v}").expect("writing to a String");
        line("name", self.name.clone());
        line("degree", p.degree().to_string());
        line("t", p.t().to_string());
        line("moduli", moduli.join(","));
        line("stddev", p.noise().stddev.to_string());
        line("noise_bound", p.noise().bound.to_string());
        line("smudging_bound", p.smudging_bound().to_string());
        line("usage", self.usage.as_str().to_string());
        line("insecure", self.insecure.to_string());
        if let Some(c) = &self.companion {
            line("companion", c.clone());
        }
        line("max_owners", self.max_owners.to_string());
        out
    }

    /// Re-validates the preset with `overrides` applied on top.
    pub fn with_overrides(&self, overrides: &[(String, String)]) -> Result<Self> {
        let mut pairs = parse_pairs(&self.to_text())?;
        if overrides.iter().any(|(k, _)| k == "modulus_bits") {
            pairs.retain(|(k, _)| k != "moduli");
        }
        if overrides.iter().any(|(k, _)| k == "t" || k == "degree") {
            pairs.retain(|(k, _)| k != "moduli" && k != "max_owners" && k != "smudging_bound");
        }
        pairs.extend(overrides.iter().cloned());
        Self::from_pairs(&pairs)
    }

    /// The preset able to hold a tally of `owners` votes: this one if
    /// `t > owners`, else its companion.
    pub fn for_tally(&self, owners: usize, search: &[PathBuf]) -> Result<Self> {
        if self.params.t() as usize > owners {
            return Ok(self.clone());
        }
        match &self.companion {
            Some(c) => Self::find(c, search)?.for_tally(owners, &[]),
            None => Err(Error::TallyOverflow {
                t: self.params.t(),
                owners,
            }),
        }
    }
}

const KEYS: &[&str] = &[
    "name",
    "degree",
    "t",
    "modulus_bits",
    "moduli",
    "stddev",
    "noise_bound",
    "smudging_bound",
    "usage",
    "insecure",
    "companion",
    "max_owners",
];

/// Largest owner count whose smudging terms stay below `q_0 / 4`, leaving
/// the other half of the budget to ciphertext noise.
fn smudging_capacity(params: &RingParams) -> usize {
    let per_owner = params.t() as f64 * params.smudging_bound().max(1) as f64;
    let fresh = NoiseEstimate::public_encryption(
        params.t(),
        params.degree(),
        params.sigma2(),
        params.sigma2(),
        params.sigma2(),
    );
    let room = params.q(0) as f64 / 4.0 - fresh.bound();
    (room / per_owner).max(0.0).floor().min(65536.0) as usize
}

/// Splits `key = value` lines. Blank lines and `#` comments are skipped.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    text.lines()
        .enumerate()
        .map(|(i, line)| (i, line.split('#').next().unwrap_or("").trim()))
        .filter(|(_, line)| !line.is_empty())
        .map(|(i, line)| {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Decode(format!("line {}: expected key = value", i + 1)))?;
            Ok((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

fn number<T: std::str::FromStr>(value: Option<&str>, key: &str) -> Result<Option<T>> {
    value
        .map(|v| {
            v.parse()
                .map_err(|_| Error::InvalidParams(format!("{key} = {v:?} is not a number")))
        })
        .transpose()
}

fn list<T: std::str::FromStr>(value: &str, key: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| Error::InvalidParams(format!("{key}: {v:?} is not a number")))
        })
        .collect()
}
