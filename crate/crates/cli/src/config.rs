//! Run configuration for `detect`: explicit values or `auto` rules, merged
//! from an optional TOML file and command line flags, then resolved against
//! the data.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use fdrel_core::tuning::{DEFAULT_ALPHA, DEFAULT_C, DEFAULT_REPLICATES};
use fdrel_core::{BlockLengthRegistry, FunctionalSeries, TuningDefaults};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// A real parameter that is either given or chosen from the data.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Setting {
    #[default]
    Auto,
    Value(f64),
}

impl FromStr for Setting {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Setting::Auto);
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() && v >= 0.0 => Ok(Setting::Value(v)),
            _ => Err(CliError::Argument(format!("expected `auto` or a non-negative number, got {s:?}"))),
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Setting::Auto => f.write_str("auto"),
            Setting::Value(v) => write!(f, "{v}"),
        }
    }
}

/// Block length: a fixed integer or `auto:<rule>`.
#[derive(Debug, Clone, PartialEq)]
pub enum BlockChoice {
    Rule(String),
    Fixed(usize),
}

impl Default for BlockChoice {
    fn default() -> Self {
        BlockChoice::Rule(TuningDefaults::default().block_rule)
    }
}

impl FromStr for BlockChoice {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(BlockChoice::default());
        }
        if let Some(rule) = s.strip_prefix("auto:") {
            return Ok(BlockChoice::Rule(rule.to_string()));
        }
        match s.parse::<usize>() {
            Ok(l) if l >= 1 => Ok(BlockChoice::Fixed(l)),
            _ => Err(CliError::Argument(format!(
                "expected a positive block length or `auto:<rule>`, got {s:?}"
            ))),
        }
    }
}

impl fmt::Display for BlockChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlockChoice::Rule(r) => write!(f, "auto:{r}"),
            BlockChoice::Fixed(l) => write!(f, "{l}"),
        }
    }
}

macro_rules! string_serde {
    ($ty:ty) => {
        impl Serialize for $ty {
            fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                #[derive(Deserialize)]
                #[serde(untagged)]
                enum Raw {
                    Text(String),
                    Number(f64),
                }
                let text = match Raw::deserialize(d)? {
                    Raw::Text(t) => t,
                    Raw::Number(v) => v.to_string(),
                };
                text.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

string_serde!(Setting);
string_serde!(BlockChoice);

/// Keys accepted in a `--config` TOML file; all optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub alpha: Option<f64>,
    pub delta: Option<Setting>,
    pub xi: Option<Setting>,
    #[serde(rename = "L")]
    pub block_len: Option<BlockChoice>,
    #[serde(rename = "R")]
    pub replicates: Option<usize>,
    pub c: Option<f64>,
    pub seed: Option<u64>,
    pub min_seg: Option<usize>,
    pub grid_size: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::ConfigFile {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

/// Requested settings of one `detect` run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub input: PathBuf,
    #[serde(skip)]
    pub out: PathBuf,
    pub alpha: f64,
    pub delta: Setting,
    pub xi: Setting,
    #[serde(rename = "L")]
    pub block_len: BlockChoice,
    #[serde(rename = "R")]
    pub replicates: usize,
    pub c: f64,
    pub seed: u64,
    pub min_seg: Option<usize>,
    pub grid_size: Option<usize>,
}

impl RunConfig {
    pub fn new(input: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        Self {
            input: input.into(),
            out: out.into(),
            alpha: DEFAULT_ALPHA,
            delta: Setting::Auto,
            xi: Setting::Auto,
            block_len: BlockChoice::default(),
            replicates: DEFAULT_REPLICATES,
            c: DEFAULT_C,
            seed: 0,
            min_seg: None,
            grid_size: None,
        }
    }

    /// Fills every field the file sets.
    pub fn apply_file(&mut self, file: FileConfig) {
        let FileConfig {
            alpha,
            delta,
            xi,
            block_len,
            replicates,
            c,
            seed,
            min_seg,
            grid_size,
        } = file;
        self.alpha = alpha.unwrap_or(self.alpha);
        self.delta = delta.unwrap_or(self.delta);
        self.xi = xi.unwrap_or(self.xi);
        self.block_len = block_len.unwrap_or(self.block_len.clone());
        self.replicates = replicates.unwrap_or(self.replicates);
        self.c = c.unwrap_or(self.c);
        self.seed = seed.unwrap_or(self.seed);
        self.min_seg = min_seg.or(self.min_seg);
        self.grid_size = grid_size.or(self.grid_size);
    }

    /// Turns every `auto` into a number using the data.
    pub fn resolve(&self, x: &FunctionalSeries) -> Result<ResolvedConfig> {
        let defaults = TuningDefaults::default();
        let delta = match self.delta {
            Setting::Value(v) => v,
            Setting::Auto => fdrel_core::select_delta(x, defaults.edge_fraction, defaults.delta_fraction)?,
        };
        let xi = match self.xi {
            Setting::Value(v) => v,
            Setting::Auto => fdrel_core::default_xi(x)?,
        };
        let (block_len, block_rule) = match &self.block_len {
            BlockChoice::Fixed(l) => (*l, None),
            BlockChoice::Rule(name) => {
                let rule = BlockLengthRegistry::default().get(name)?;
                (rule.select(x)?, Some(name.clone()))
            }
        };
        let cfg = fdrel_core::BootstrapConfig {
            replicates: self.replicates,
            block_len,
            alpha: self.alpha,
            c: self.c,
            seed: self.seed,
            min_seg: self.min_seg,
        };
        cfg.validate()?;
        Ok(ResolvedConfig {
            requested: self.clone(),
            delta,
            xi,
            block_len,
            block_rule,
            min_seg: cfg.min_segment(),
            bootstrap: cfg,
        })
    }
}

/// Concrete values used by a run, alongside what was requested.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedConfig {
    pub requested: RunConfig,
    pub delta: f64,
    pub xi: f64,
    #[serde(rename = "L")]
    pub block_len: usize,
    pub block_rule: Option<String>,
    pub min_seg: usize,
    #[serde(skip)]
    pub bootstrap: fdrel_core::BootstrapConfig,
}
