//! Flat key=value run configuration.
//!
//! A config file is UTF-8 text: one `key = value` pair per line, `#`
//! starts a full-line comment, blank lines are ignored. Values for
//! `message` keep everything after the first `=` (trimmed), so messages
//! may contain spaces and `=`. Unknown and repeated keys are errors: a
//! typo should fail the run, not silently fall back to a default.
//!
//! The seed has no default. Every run is reproducible or it does not run.

use crate::protocol::{ParsePhysicsModeError, PhysicsMode};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected key=value, got {text:?}")]
    Malformed { line: usize, text: String },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key {key:?}")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: bad value for {key}: {reason}")]
    BadValue {
        line: usize,
        key: String,
        reason: String,
    },
    #[error("seed is required: set seed= in the config file or pass --seed")]
    MissingSeed,
    #[error("r_c must be at least 1")]
    BadRc,
    #[error("p_target {0} outside (0.5, 1)")]
    BadPTarget(f64),
    #[error("visibility {0} outside [0, 1]")]
    BadVisibility(f64),
    #[error("n_trials must be at least 1")]
    BadTrials,
    #[error("message of {0} bytes exceeds the one-byte length field")]
    MessageTooLong(usize),
    #[error("hops must be at least 1")]
    BadHops,
    #[error("hop_delay_ms must be positive and finite, got {0}")]
    BadHopDelay(f64),
    #[error("hop_distance_lightseconds must be non-negative and finite, got {0}")]
    BadHopDistance(f64),
    #[error(transparent)]
    Mode(#[from] ParsePhysicsModeError),
}

/// Raw parse result: everything optional, nothing validated beyond type.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct PartialConfig {
    pub seed: Option<u64>,
    pub mode: Option<PhysicsMode>,
    pub r_c: Option<u32>,
    pub p_target: Option<f64>,
    pub visibility: Option<f64>,
    pub n_trials: Option<u64>,
    pub message: Option<String>,
    pub hops: Option<u32>,
    pub hop_delay_ms: Option<f64>,
    pub hop_distance_lightseconds: Option<f64>,
}

impl PartialConfig {
    /// Command-line overrides win over file values.
    pub fn with_overrides(mut self, seed: Option<u64>, mode: Option<PhysicsMode>) -> Self {
        if seed.is_some() {
            self.seed = seed;
        }
        if mode.is_some() {
            self.mode = mode;
        }
        self
    }
}

fn parse_number<T: std::str::FromStr>(
    line: usize,
    key: &str,
    value: &str,
) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::BadValue {
        line,
        key: key.to_string(),
        reason: e.to_string(),
    })
}

/// Parses config text. Returns the first error with its 1-based line
/// number.
pub fn parse_config_str(text: &str) -> Result<PartialConfig, ConfigError> {
    let mut config = PartialConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some((key, value)) = trimmed.split_once('=') else {
            return Err(ConfigError::Malformed {
                line,
                text: trimmed.to_string(),
            });
        };
        let key = key.trim();
        let value = value.trim();
        macro_rules! set {
            ($field:ident, $parsed:expr) => {{
                if config.$field.is_some() {
                    return Err(ConfigError::DuplicateKey {
                        line,
                        key: key.to_string(),
                    });
                }
                config.$field = Some($parsed);
            }};
        }
        match key {
            "seed" => set!(seed, parse_number(line, key, value)?),
            "mode" => set!(mode, value.parse::<PhysicsMode>()?),
            "r_c" => set!(r_c, parse_number(line, key, value)?),
            "p_target" => set!(p_target, parse_number(line, key, value)?),
            "visibility" => set!(visibility, parse_number(line, key, value)?),
            "n_trials" => set!(n_trials, parse_number(line, key, value)?),
            "message" => set!(message, value.to_string()),
            "hops" => set!(hops, parse_number(line, key, value)?),
            "hop_delay_ms" => set!(hop_delay_ms, parse_number(line, key, value)?),
            "hop_distance_lightseconds" => {
                set!(hop_distance_lightseconds, parse_number(line, key, value)?)
            }
            other => {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: other.to_string(),
                })
            }
        }
    }
    Ok(config)
}

/// Validated parameters for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub mode: PhysicsMode,
    pub r_c: u32,
    pub p_target: f64,
    pub visibility: f64,
    pub n_trials: u64,
    pub message: Vec<u8>,
    pub hops: u32,
    pub hop_delay_ms: f64,
    pub hop_distance_lightseconds: f64,
}

impl RunConfig {
    /// Applies defaults and range checks. The seed is the one parameter
    /// without a default.
    pub fn build(partial: PartialConfig) -> Result<Self, ConfigError> {
        let config = Self {
            seed: partial.seed.ok_or(ConfigError::MissingSeed)?,
            mode: partial.mode.unwrap_or(PhysicsMode::PaperIdealized),
            r_c: partial.r_c.unwrap_or(148),
            p_target: partial.p_target.unwrap_or(0.99),
            visibility: partial.visibility.unwrap_or(1.0),
            n_trials: partial.n_trials.unwrap_or(10_000),
            message: partial
                .message
                .unwrap_or_else(|| "FASTER".to_string())
                .into_bytes(),
            hops: partial.hops.unwrap_or(2),
            hop_delay_ms: partial.hop_delay_ms.unwrap_or(1.0),
            hop_distance_lightseconds: partial
                .hop_distance_lightseconds
                .unwrap_or(crate::multihop::LIGHT_MONTH_SECONDS),
        };
        if config.r_c == 0 {
            return Err(ConfigError::BadRc);
        }
        if !(config.p_target > 0.5 && config.p_target < 1.0) {
            return Err(ConfigError::BadPTarget(config.p_target));
        }
        if !(0.0..=1.0).contains(&config.visibility) || !config.visibility.is_finite() {
            return Err(ConfigError::BadVisibility(config.visibility));
        }
        if config.n_trials == 0 {
            return Err(ConfigError::BadTrials);
        }
        if config.message.len() > 255 {
            return Err(ConfigError::MessageTooLong(config.message.len()));
        }
        if config.hops == 0 {
            return Err(ConfigError::BadHops);
        }
        if !(config.hop_delay_ms > 0.0 && config.hop_delay_ms.is_finite()) {
            return Err(ConfigError::BadHopDelay(config.hop_delay_ms));
        }
        if !(config.hop_distance_lightseconds >= 0.0
            && config.hop_distance_lightseconds.is_finite())
        {
            return Err(ConfigError::BadHopDistance(config.hop_distance_lightseconds));
        }
        Ok(config)
    }
}
