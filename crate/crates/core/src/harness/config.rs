//! Experiment description, read from TOML.
//!
//! ```toml
//! n = 128
//! p_max = 1e-4
//! sigma2_n = 2e-6
//! power_grid = [1e-5, 2e-5, 5e-5]
//! taps = [0.4, 0.3, 0.3]
//! cp_len = 4
//!
//! [[scheme]]
//! kind = "dcr-hcm"
//! m = 2
//! equalizer = "mmse"
//! interleaver = "search"
//! ```

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelTaps, DEFAULT_GAMMA};
use crate::error::{Error, Result};

pub const DEFAULT_TARGET_ERRORS: u64 = 200;
pub const MIN_TARGET_ERRORS: u64 = 100;
pub const DEFAULT_MAX_SYMBOLS: u64 = 1_000_000;
pub const DEFAULT_DCR_TRIALS: usize = 20_000;
pub const DEFAULT_INTERLEAVER_BUDGET: usize = 2_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    Hcm,
    DcrHcm,
    AcoOfdm,
    DcoOfdm,
}

impl SchemeKind {
    pub fn is_hcm(self) -> bool {
        matches!(self, SchemeKind::Hcm | SchemeKind::DcrHcm)
    }

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Hcm => "hcm",
            SchemeKind::DcrHcm => "dcr-hcm",
            SchemeKind::AcoOfdm => "aco-ofdm",
            SchemeKind::DcoOfdm => "dco-ofdm",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Equalizer {
    #[default]
    None,
    Mmse,
    OneTap,
}

/// Interleaver choice: `"identity"`, `"search"` or a path to a permutation file.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum InterleaverChoice {
    #[default]
    Identity,
    Search,
    File(PathBuf),
}

impl Serialize for InterleaverChoice {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            InterleaverChoice::Identity => s.serialize_str("identity"),
            InterleaverChoice::Search => s.serialize_str("search"),
            InterleaverChoice::File(p) => s.serialize_str(&p.to_string_lossy()),
        }
    }
}

impl<'de> Deserialize<'de> for InterleaverChoice {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(match s.as_str() {
            "identity" => InterleaverChoice::Identity,
            "search" => InterleaverChoice::Search,
            _ => InterleaverChoice::File(PathBuf::from(s)),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    pub kind: SchemeKind,
    /// PAM order for HCM kinds, QAM order for OFDM kinds.
    pub m: usize,
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub equalizer: Equalizer,
    #[serde(default)]
    pub interleaver: InterleaverChoice,
    #[serde(default = "default_budget")]
    pub interleaver_budget: usize,
}

impl SchemeConfig {
    pub fn new(kind: SchemeKind, m: usize) -> Self {
        Self {
            kind,
            m,
            label: None,
            equalizer: Equalizer::None,
            interleaver: InterleaverChoice::Identity,
            interleaver_budget: DEFAULT_INTERLEAVER_BUDGET,
        }
    }

    pub fn label(&self) -> String {
        if let Some(l) = &self.label {
            return l.clone();
        }
        let mut l = format!("{}-{}", self.kind, self.m);
        match self.equalizer {
            Equalizer::None => {}
            Equalizer::Mmse => l.push_str("-mmse"),
            Equalizer::OneTap => l.push_str("-onetap"),
        }
        match &self.interleaver {
            InterleaverChoice::Identity => {}
            InterleaverChoice::Search => l.push_str("-interleaved"),
            InterleaverChoice::File(_) => l.push_str("-interleaved"),
        }
        l
    }
}

fn default_budget() -> usize {
    DEFAULT_INTERLEAVER_BUDGET
}
fn default_gamma() -> f64 {
    DEFAULT_GAMMA
}
fn default_target_errors() -> u64 {
    DEFAULT_TARGET_ERRORS
}
fn default_max_symbols() -> u64 {
    DEFAULT_MAX_SYMBOLS
}
fn default_dcr_trials() -> usize {
    DEFAULT_DCR_TRIALS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Symbol length: Hadamard order for HCM, FFT size for OFDM.
    pub n: usize,
    pub p_max: f64,
    /// Average optical power targets in watts.
    #[serde(default)]
    pub power_grid: Vec<f64>,
    /// Quoted noise figure, applied as the per-sample noise standard deviation.
    pub sigma2_n: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default)]
    pub taps: Option<Vec<f64>>,
    #[serde(default)]
    pub taps_file: Option<PathBuf>,
    #[serde(default)]
    pub cp_len: usize,
    #[serde(default = "default_target_errors")]
    pub target_errors: u64,
    #[serde(default = "default_max_symbols")]
    pub max_symbols: u64,
    #[serde(default)]
    pub master_seed: u64,
    /// Symbols used to estimate DC-reduction statistics.
    #[serde(default = "default_dcr_trials")]
    pub dcr_trials: usize,
    #[serde(rename = "scheme", default)]
    pub schemes: Vec<SchemeConfig>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file; relative `taps_file` and interleaver paths are
    /// resolved against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        let mut cfg: Self = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_owned(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = cfg.taps_file.as_mut() {
            resolve(p);
        }
        for s in &mut cfg.schemes {
            if let InterleaverChoice::File(p) = &mut s.interleaver {
                resolve(p);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn channel_taps(&self) -> Result<ChannelTaps> {
        match (&self.taps, &self.taps_file) {
            (Some(_), Some(_)) => Err(Error::Config(
                "give either taps or taps_file, not both".into(),
            )),
            (Some(t), None) => ChannelTaps::new(t.clone()),
            (None, Some(p)) => ChannelTaps::load(p),
            (None, None) => Ok(ChannelTaps::identity()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n < 8 || !self.n.is_power_of_two() {
            return bad(format!("n = {} must be a power of two >= 8", self.n));
        }
        if !(self.p_max > 0.0) || !self.p_max.is_finite() {
            return bad(format!("p_max = {} must be positive", self.p_max));
        }
        if !(self.sigma2_n >= 0.0) {
            return bad(format!("sigma2_n = {} must be non-negative", self.sigma2_n));
        }
        if !(self.gamma >= 1.0) {
            return bad(format!("gamma = {} must be >= 1", self.gamma));
        }
        for &p in &self.power_grid {
            if !(p > 0.0 && p <= self.p_max) {
                return Err(Error::Range {
                    target: p,
                    bound: self.p_max,
                });
            }
        }
        if self.target_errors < MIN_TARGET_ERRORS {
            return bad(format!(
                "target_errors = {} is below the minimum of {MIN_TARGET_ERRORS}",
                self.target_errors
            ));
        }
        if self.max_symbols == 0 {
            return bad("max_symbols must be positive".into());
        }
        let taps = self.channel_taps()?;
        if self.cp_len < taps.memory() {
            return bad(format!(
                "cp_len = {} is shorter than the channel memory {}",
                self.cp_len,
                taps.memory()
            ));
        }
        if self.cp_len >= self.n {
            return bad(format!(
                "cp_len = {} must be shorter than n = {}",
                self.cp_len, self.n
            ));
        }
        let mut labels = HashSet::new();
        for s in &self.schemes {
            if s.kind.is_hcm() {
                crate::pam::GrayPam::new(s.m)?;
                if s.equalizer == Equalizer::OneTap {
                    return bad(format!(
                        "{}: one-tap equalisation applies to OFDM only",
                        s.label()
                    ));
                }
            } else {
                crate::ofdm::GrayQam::new(s.m)?;
                if s.equalizer == Equalizer::Mmse {
                    return bad(format!(
                        "{}: MMSE equalisation applies to HCM only",
                        s.label()
                    ));
                }
                if s.interleaver != InterleaverChoice::Identity {
                    return bad(format!("{}: interleaving applies to HCM only", s.label()));
                }
            }
            if s.interleaver_budget == 0 {
                return bad(format!(
                    "{}: interleaver_budget must be positive",
                    s.label()
                ));
            }
            if !labels.insert(s.label()) {
                return bad(format!("duplicate scheme label {}", s.label()));
            }
        }
        if self.dcr_trials == 0 {
            return bad("dcr_trials must be positive".into());
        }
        Ok(())
    }
}
