//! Run configuration: command-line flags layered over an optional
//! `key=value` config file, validated before any computation starts.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use bkshoot_core::{IntegrationConfig, Scheme};
use clap::{Args, ValueEnum};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: expected key=value, got '{text}'")]
    Syntax { path: PathBuf, line: usize, text: String },
    #[error("unknown config key '{0}'")]
    UnknownKey(String),
    #[error("invalid value '{value}' for {key}: {reason}")]
    Value { key: String, value: String, reason: String },
    #[error("missing required setting: {0}")]
    Missing(&'static str),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <Format as ValueEnum>::from_str(s, true)
    }
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct SharedArgs {
    /// Shooting parameter λ = -w''(0).
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    /// Lower end of the shooting bracket.
    #[arg(long, global = true)]
    pub lo: Option<f64>,
    /// Upper end of the shooting bracket.
    #[arg(long, global = true)]
    pub hi: Option<f64>,
    /// Bisection tolerance on λ.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long = "r-max", global = true)]
    pub r_max: Option<f64>,
    /// Ignition radius for the series start.
    #[arg(long, global = true)]
    pub r0: Option<f64>,
    #[arg(long = "rel-tol", global = true)]
    pub rel_tol: Option<f64>,
    #[arg(long = "abs-tol", global = true)]
    pub abs_tol: Option<f64>,
    #[arg(long = "a-min", global = true)]
    pub a_min: Option<f64>,
    #[arg(long = "wp-blowup", global = true)]
    pub wp_blowup: Option<f64>,
    #[arg(long = "min-step", global = true)]
    pub min_step: Option<f64>,
    #[arg(long = "max-steps", global = true)]
    pub max_steps: Option<usize>,
    #[arg(long = "series-order", global = true)]
    pub series_order: Option<u32>,
    /// Runge-Kutta pair: dormand_prince_54 or cash_karp_45.
    #[arg(long, global = true)]
    pub scheme: Option<String>,
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// key=value file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (falls back to BKSHOOT_THREADS).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

/// Parsed `key=value` lines. Keys accept `-` or `_` separators.
pub fn parse_config_file(path: &Path) -> Result<BTreeMap<String, String>, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Read { path: path.to_owned(), source })?;
    parse_config_text(&text, path)
}

pub fn parse_config_text(text: &str, path: &Path) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            path: path.to_owned(),
            line: i + 1,
            text: raw.to_owned(),
        })?;
        let key = key.trim().replace('-', "_");
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey(key));
        }
        map.insert(key, value.trim().to_owned());
    }
    Ok(map)
}

const KNOWN_KEYS: &[&str] = &[
    "lambda",
    "lo",
    "hi",
    "tol",
    "r_max",
    "r0",
    "rel_tol",
    "abs_tol",
    "a_min",
    "wp_blowup",
    "min_step",
    "max_steps",
    "series_order",
    "scheme",
    "format",
    "out",
    "threads",
    "from",
    "to",
    "step",
    "grid",
    "plot",
];

/// Flag value if given, otherwise the config-file value, otherwise `None`.
pub struct Layered<'a> {
    file: &'a BTreeMap<String, String>,
}

impl<'a> Layered<'a> {
    pub fn new(file: &'a BTreeMap<String, String>) -> Self {
        Self { file }
    }

    pub fn get<T: FromStr>(&self, key: &str, flag: Option<T>) -> Result<Option<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            None => Ok(None),
            Some(v) => v.parse::<T>().map(Some).map_err(|e| ConfigError::Value {
                key: key.to_owned(),
                value: v.clone(),
                reason: e.to_string(),
            }),
        }
    }
}

/// Everything a command needs, fully resolved.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub integration: IntegrationConfig,
    pub lambda: Option<f64>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub tol: Option<f64>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn resolve(args: &SharedArgs) -> Result<(Self, BTreeMap<String, String>), ConfigError> {
        let file = match &args.config {
            Some(p) => parse_config_file(p)?,
            None => BTreeMap::new(),
        };
        let layer = Layered::new(&file);
        let mut integration = IntegrationConfig::default();
        if let Some(v) = layer.get("rel_tol", args.rel_tol)? {
            integration.rel_tol = v;
        }
        if let Some(v) = layer.get("abs_tol", args.abs_tol)? {
            integration.abs_tol = v;
        }
        if let Some(v) = layer.get("r_max", args.r_max)? {
            integration.r_max = v;
        }
        if let Some(v) = layer.get("r0", args.r0)? {
            integration.r0 = v;
        }
        if let Some(v) = layer.get("a_min", args.a_min)? {
            integration.a_min = v;
        }
        if let Some(v) = layer.get("wp_blowup", args.wp_blowup)? {
            integration.wp_blowup = v;
        }
        if let Some(v) = layer.get("min_step", args.min_step)? {
            integration.min_step = v;
        }
        if let Some(v) = layer.get("max_steps", args.max_steps)? {
            integration.max_steps = v;
        }
        if let Some(v) = layer.get("series_order", args.series_order)? {
            integration.series_order = v;
        }
        if let Some(v) = layer.get::<Scheme>(
            "scheme",
            args.scheme.as_deref().map(str::parse).transpose().map_err(|reason: String| {
                ConfigError::Value {
                    key: "scheme".into(),
                    value: args.scheme.clone().unwrap_or_default(),
                    reason,
                }
            })?,
        )? {
            integration.scheme = v;
        }
        integration.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;

        let threads = match layer.get("threads", args.threads)? {
            Some(t) => Some(t),
            None => match std::env::var("BKSHOOT_THREADS") {
                Ok(v) if !v.trim().is_empty() => {
                    Some(v.trim().parse::<usize>().map_err(|e| ConfigError::Value {
                        key: "BKSHOOT_THREADS".into(),
                        value: v.clone(),
                        reason: e.to_string(),
                    })?)
                }
                _ => None,
            },
        };
        if threads == Some(0) {
            return Err(ConfigError::Invalid("thread count must be positive".into()));
        }

        let cfg = RunConfig {
            integration,
            lambda: layer.get("lambda", args.lambda)?,
            lo: layer.get("lo", args.lo)?,
            hi: layer.get("hi", args.hi)?,
            tol: layer.get("tol", args.tol)?,
            format: layer.get("format", args.format)?,
            out: layer.get("out", args.out.clone())?,
            threads,
        };
        if let Some(l) = cfg.lambda {
            if !(l.is_finite() && l >= 0.0) {
                return Err(ConfigError::Invalid(format!("lambda = {l} must be finite and >= 0")));
            }
        }
        if let Some(t) = cfg.tol {
            if !(t.is_finite() && t > 0.0) {
                return Err(ConfigError::Invalid(format!("tol = {t} must be positive")));
            }
        }
        Ok((cfg, file))
    }
}

/// Inclusive arithmetic grid `from, from + step, …, ≤ to`.
pub fn arithmetic_grid(from: f64, to: f64, step: f64) -> Result<Vec<f64>, ConfigError> {
    if !(from.is_finite() && to.is_finite() && step.is_finite()) || step <= 0.0 {
        return Err(ConfigError::Invalid(format!("bad grid from={from} to={to} step={step}")));
    }
    if to < from {
        return Ok(Vec::new());
    }
    let n = ((to - from) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| from + i as f64 * step).collect())
}

pub fn parse_grid_list(text: &str) -> Result<Vec<f64>, ConfigError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>().map_err(|e| ConfigError::Value {
                key: "grid".into(),
                value: s.to_owned(),
                reason: e.to_string(),
            })
        })
        .collect()
}
