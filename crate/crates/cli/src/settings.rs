//! Flag resolution: command line over environment over config file over
//! built-in default.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use pedattr_core::metrics::ZeroDivisionPolicy;
use pedattr_core::synth::SynthConfig;

use crate::args::ZeroDivisionArg;

/// Prefix of environment overrides, e.g. `PEDATTR_SEED`, `PEDATTR_T_ATTR`.
pub const ENV_PREFIX: &str = "PEDATTR_";

/// Optional TOML config file. Top-level keys mirror the shared flags;
/// sections hold per-command defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub report: Option<PathBuf>,
    pub split: SplitSection,
    pub eval: EvalSection,
    pub synth: Option<SynthConfig>,
    pub demo: DemoSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitSection {
    pub t_id: Option<u64>,
    pub t_img: Option<u64>,
    pub t_attr: Option<f64>,
    pub max_trials: Option<u64>,
    pub versions: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub threshold: Option<f64>,
    pub zero_division: Option<String>,
    pub stratify: Option<bool>,
    pub skip_degenerate: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DemoSection {
    pub pairs: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config file {}", path.display()))?;
                toml::from_str(&text)
                    .with_context(|| format!("parsing config file {}", path.display()))
            }
        }
    }
}

/// `flag` beats `PEDATTR_<env_key>` beats `file`; `None` when all absent.
pub fn resolve_opt<T>(flag: Option<T>, env_key: &str, file: Option<T>) -> Result<Option<T>>
where
    T: FromStr,
    <T as FromStr>::Err: std::fmt::Display,
{
    if flag.is_some() {
        return Ok(flag);
    }
    let var = format!("{ENV_PREFIX}{env_key}");
    if let Ok(raw) = std::env::var(&var) {
        return raw
            .parse()
            .map(Some)
            .map_err(|e| anyhow::anyhow!("invalid {var}={raw}: {e}"));
    }
    Ok(file)
}

/// `flag` beats `PEDATTR_<env_key>` beats `file` beats `default`.
pub fn resolve<T>(flag: Option<T>, env_key: &str, file: Option<T>, default: T) -> Result<T>
where
    T: FromStr,
    <T as FromStr>::Err: std::fmt::Display,
{
    Ok(resolve_opt(flag, env_key, file)?.unwrap_or(default))
}

pub fn resolve_policy(
    flag: Option<ZeroDivisionArg>,
    file: Option<&str>,
) -> Result<ZeroDivisionPolicy> {
    if let Some(arg) = flag {
        return Ok(match arg {
            ZeroDivisionArg::EpsZero => ZeroDivisionPolicy::EpsZero,
            ZeroDivisionArg::One => ZeroDivisionPolicy::One,
            ZeroDivisionArg::Skip => ZeroDivisionPolicy::Skip,
        });
    }
    let raw = match std::env::var(format!("{ENV_PREFIX}ZERO_DIVISION")) {
        Ok(value) => Some(value),
        Err(_) => file.map(str::to_owned),
    };
    match raw.as_deref() {
        None => Ok(ZeroDivisionPolicy::EpsZero),
        Some("eps-zero") => Ok(ZeroDivisionPolicy::EpsZero),
        Some("one") => Ok(ZeroDivisionPolicy::One),
        Some("skip") => Ok(ZeroDivisionPolicy::Skip),
        Some(other) => bail!("unknown zero-division policy `{other}`"),
    }
}

/// Report path: flag, `PEDATTR_REPORT`, config file, then the default.
pub fn resolve_report(flag: Option<PathBuf>, file: Option<PathBuf>) -> Result<PathBuf> {
    resolve(
        flag,
        "REPORT",
        file,
        PathBuf::from("pedattr-report.json"),
    )
}
