//! Run configuration: defaults, an optional `key=value` file, then flags.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use conecut::sampling::DEFAULT_SEED;
use conecut::verify::{self, DEFAULT_SAMPLES};

pub const SEED_ENV: &str = "CONECUT_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = UsageError;

    fn from_str(s: &str) -> Result<Self, UsageError> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(UsageError(format!("unknown format {other:?} (expected csv or json)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub samples: usize,
    pub tolerances: BTreeMap<String, f64>,
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: DEFAULT_SEED,
            samples: DEFAULT_SAMPLES,
            tolerances: BTreeMap::new(),
            out: None,
            format: Format::Json,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Flags shared by every subcommand; `None` leaves the layer below in place.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub tolerances: BTreeMap<String, f64>,
}

impl RunConfig {
    /// Defaults, then `CONECUT_SEED`, then the config file, then flags.
    pub fn resolve(env_seed: Option<&str>, file: Option<&Path>, flags: Overrides) -> Result<Self, UsageError> {
        let mut cfg = RunConfig::default();
        if let Some(raw) = env_seed {
            cfg.seed = parse_number(SEED_ENV, raw)?;
        }
        if let Some(path) = file {
            let text = fs::read_to_string(path)
                .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
            cfg.apply(parse_config_file(&text)?);
        }
        cfg.apply(flags);
        for suite in cfg.tolerances.keys() {
            if !verify::suite_names().contains(&suite.as_str()) {
                return Err(UsageError(format!(
                    "unknown suite {suite:?} in tolerance override (known: {})",
                    verify::suite_names().join(", ")
                )));
            }
        }
        Ok(cfg)
    }

    fn apply(&mut self, o: Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(n) = o.samples {
            self.samples = n;
        }
        if o.out.is_some() {
            self.out = o.out;
        }
        if let Some(f) = o.format {
            self.format = f;
        }
        self.tolerances.extend(o.tolerances);
    }

    pub fn verify_config(&self) -> verify::VerifyConfig {
        verify::VerifyConfig {
            seed: self.seed,
            samples: self.samples,
            tolerances: self.tolerances.clone(),
        }
    }
}

fn parse_number<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T, UsageError> {
    raw.trim()
        .parse()
        .map_err(|_| UsageError(format!("invalid value {raw:?} for {key}")))
}

fn parse_tolerance(key: &str, raw: &str) -> Result<f64, UsageError> {
    let v: f64 = parse_number(key, raw)?;
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(UsageError(format!(
            "tolerance for {key} must be finite and non-negative"
        )))
    }
}

/// Lines of `key = value`; `#` starts a comment.
pub fn parse_config_file(text: &str) -> Result<Overrides, UsageError> {
    let mut o = Overrides::default();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| UsageError(format!("config line {}: expected key=value", lineno + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "seed" => o.seed = Some(parse_number(key, value)?),
            "samples" => o.samples = Some(parse_number(key, value)?),
            "out" => o.out = Some(PathBuf::from(value)),
            "format" => o.format = Some(value.parse()?),
            _ => match key.strip_prefix("tol.") {
                Some(suite) => {
                    o.tolerances.insert(suite.to_string(), parse_tolerance(key, value)?);
                }
                None => return Err(UsageError(format!("config line {}: unknown key {key:?}", lineno + 1))),
            },
        }
    }
    Ok(o)
}

/// Removes `--tol.<suite> v` and `--tol.<suite>=v` from `args`.
pub fn extract_tolerances(args: Vec<String>) -> Result<(Vec<String>, BTreeMap<String, f64>), UsageError> {
    let mut rest = Vec::with_capacity(args.len());
    let mut tols = BTreeMap::new();
    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        let Some(spec) = arg.strip_prefix("--tol.") else {
            rest.push(arg);
            continue;
        };
        let (suite, value) = match spec.split_once('=') {
            Some((s, v)) => (s.to_string(), v.to_string()),
            None => {
                let v = it.next().ok_or_else(|| UsageError(format!("{arg} needs a value")))?;
                (spec.to_string(), v)
            }
        };
        if suite.is_empty() {
            return Err(UsageError("--tol. needs a suite name".into()));
        }
        let v = parse_tolerance(&arg, &value)?;
        tols.insert(suite, v);
    }
    Ok((rest, tols))
}
