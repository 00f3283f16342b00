//! Analysis and service settings.
//!
//! Settings come from a plain `key = value` text file (one per line, `#`
//! starts a comment), from `DRIVEFIT_*` environment variables and from
//! command-line flags, in increasing precedence. Environment variable names
//! are the key upper-cased with dots replaced by underscores, so
//! `comfort.a_lo` is overridden by `DRIVEFIT_COMFORT_A_LO`.
//!
//! | key | default | accepted range |
//! |-----|---------|----------------|
//! | `bind` | `127.0.0.1:8080` | `host:port` |
//! | `store` | unset | path |
//! | `rate_hz` | 10 | 1 ..= 100 |
//! | `smooth_accel` | false | bool |
//! | `smooth_window` | 5 | odd, 1 ..= 101 |
//! | `v_eps` | 0.1 | (0, 5] m/s |
//! | `no_lead` | exclude | `exclude` or `safe` |
//! | `zone.alert_max` | 1 | (0, 60] s |
//! | `zone.attention_max` | 2 | (alert_max, 60] s |
//! | `comfort.a_hi` | 2 | (0, 20] m/s² |
//! | `comfort.a_lo` | -3.5 | [-20, 0) m/s² |
//! | `comfort.j_abs` | 5 | (0, 100] m/s³ |
//! | `fuel.a` | 5 | > 0 |
//! | `fuel.b` | 0.05 | >= 0 |
//! | `fuel.c` | 0.001 | >= 0 |
//! | `fuel.d` | 0.2 | finite |
//! | `window` | 5 | 1 ..= 1000 rides |
//! | `window_includes_recent` | false | bool |

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::comfort::ComfortThresholds;
use crate::fuel::FuelParams;
use crate::safety::{NoLeadPolicy, ZoneBounds, DEFAULT_V_EPS};
use crate::trace::{AccelSmoothing, DEFAULT_RATE_HZ, MAX_RATE_HZ, MIN_RATE_HZ};

pub const ENV_PREFIX: &str = "DRIVEFIT_";
pub const DEFAULT_BIND: &str = "127.0.0.1:8080";
pub const DEFAULT_WINDOW: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("config key `{key}`: cannot parse {value:?}")]
    BadValue { key: String, value: String },
    #[error("config line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("config key `{key}`: {reason}")]
    OutOfRange { key: &'static str, reason: String },
}

/// Everything the metric kernels need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub rate_hz: f64,
    pub smoothing: Option<AccelSmoothing>,
    pub v_eps: f64,
    pub no_lead: NoLeadPolicy,
    pub zones: ZoneBounds,
    pub comfort: ComfortThresholds,
    pub fuel: FuelParams,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            rate_hz: DEFAULT_RATE_HZ,
            smoothing: None,
            v_eps: DEFAULT_V_EPS,
            no_lead: NoLeadPolicy::Exclude,
            zones: ZoneBounds::default(),
            comfort: ComfortThresholds::default(),
            fuel: FuelParams::default(),
        }
    }
}

/// Comparison-report window settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub window: usize,
    pub window_includes_recent: bool,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            window_includes_recent: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub bind: String,
    pub store: Option<PathBuf>,
    pub analysis: AnalysisConfig,
    pub report: ReportConfig,
    smooth_accel: bool,
    smooth_window: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            bind: DEFAULT_BIND.to_owned(),
            store: None,
            analysis: AnalysisConfig::default(),
            report: ReportConfig::default(),
            smooth_accel: false,
            smooth_window: AccelSmoothing::default().window,
        }
    }
}

pub const KEYS: &[&str] = &[
    "bind",
    "store",
    "rate_hz",
    "smooth_accel",
    "smooth_window",
    "v_eps",
    "no_lead",
    "zone.alert_max",
    "zone.attention_max",
    "comfort.a_hi",
    "comfort.a_lo",
    "comfort.j_abs",
    "fuel.a",
    "fuel.b",
    "fuel.c",
    "fuel.d",
    "window",
    "window_includes_recent",
];

impl Settings {
    /// Sets one key. Range checks happen in [`Settings::validate`].
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value = value.trim();
        let bad = || ConfigError::BadValue {
            key: key.to_owned(),
            value: value.to_owned(),
        };
        let num = || value.parse::<f64>().map_err(|_| bad());
        let int = || value.parse::<usize>().map_err(|_| bad());
        let flag = || match value.to_ascii_lowercase().as_str() {
            "1" | "true" | "yes" | "on" => Ok(true),
            "0" | "false" | "no" | "off" => Ok(false),
            _ => Err(bad()),
        };
        match key {
            "bind" => self.bind = value.to_owned(),
            "store" => self.store = Some(PathBuf::from(value)),
            "rate_hz" => self.analysis.rate_hz = num()?,
            "smooth_accel" => self.smooth_accel = flag()?,
            "smooth_window" => self.smooth_window = int()?,
            "v_eps" => self.analysis.v_eps = num()?,
            "no_lead" => {
                self.analysis.no_lead = match value {
                    "exclude" => NoLeadPolicy::Exclude,
                    "safe" => NoLeadPolicy::Safe,
                    _ => return Err(bad()),
                }
            }
            "zone.alert_max" => self.analysis.zones.alert_max = num()?,
            "zone.attention_max" => self.analysis.zones.attention_max = num()?,
            "comfort.a_hi" => self.analysis.comfort.a_hi = num()?,
            "comfort.a_lo" => self.analysis.comfort.a_lo = num()?,
            "comfort.j_abs" => self.analysis.comfort.j_abs = num()?,
            "fuel.a" => self.analysis.fuel.a = num()?,
            "fuel.b" => self.analysis.fuel.b = num()?,
            "fuel.c" => self.analysis.fuel.c = num()?,
            "fuel.d" => self.analysis.fuel.d = num()?,
            "window" => self.report.window = int()?,
            "window_includes_recent" => self.report.window_includes_recent = flag()?,
            other => return Err(ConfigError::UnknownKey(other.to_owned())),
        }
        self.analysis.smoothing = self
            .smooth_accel
            .then_some(AccelSmoothing {
                window: self.smooth_window,
            });
        Ok(())
    }

    /// Applies a `key = value` document.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or(ConfigError::Syntax { line: idx + 1 })?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    /// Applies `DRIVEFIT_*` variables from an environment snapshot.
    /// `DRIVEFIT_CONFIG` names the config file and is skipped here; any other
    /// prefixed variable that is not a key is an error.
    pub fn apply_env<I, K, V>(&mut self, vars: I) -> Result<(), ConfigError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        for (name, value) in vars {
            let Some(suffix) = name.as_ref().strip_prefix(ENV_PREFIX) else {
                continue;
            };
            if suffix == "CONFIG" {
                continue;
            }
            let key = KEYS
                .iter()
                .find(|k| env_name(k) == suffix)
                .ok_or_else(|| ConfigError::UnknownKey(name.as_ref().to_owned()))?;
            self.set(key, value.as_ref())?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let a = &self.analysis;
        let range = |key: &'static str, ok: bool, reason: String| {
            if ok {
                Ok(())
            } else {
                Err(ConfigError::OutOfRange { key, reason })
            }
        };
        range(
            "rate_hz",
            (MIN_RATE_HZ..=MAX_RATE_HZ).contains(&a.rate_hz),
            format!("{} is outside [1, 100]", a.rate_hz),
        )?;
        range(
            "smooth_window",
            self.smooth_window % 2 == 1 && self.smooth_window <= 101,
            format!("{} must be odd and at most 101", self.smooth_window),
        )?;
        range(
            "v_eps",
            a.v_eps > 0.0 && a.v_eps <= 5.0,
            format!("{} is outside (0, 5]", a.v_eps),
        )?;
        range(
            "zone.alert_max",
            a.zones.alert_max > 0.0 && a.zones.alert_max <= 60.0,
            format!("{} is outside (0, 60]", a.zones.alert_max),
        )?;
        range(
            "zone.attention_max",
            a.zones.attention_max > a.zones.alert_max && a.zones.attention_max <= 60.0,
            format!(
                "{} must exceed zone.alert_max ({}) and be at most 60",
                a.zones.attention_max, a.zones.alert_max
            ),
        )?;
        range(
            "comfort.a_hi",
            a.comfort.a_hi > 0.0 && a.comfort.a_hi <= 20.0,
            format!("{} is outside (0, 20]", a.comfort.a_hi),
        )?;
        range(
            "comfort.a_lo",
            a.comfort.a_lo < 0.0 && a.comfort.a_lo >= -20.0,
            format!("{} is outside [-20, 0)", a.comfort.a_lo),
        )?;
        range(
            "comfort.j_abs",
            a.comfort.j_abs > 0.0 && a.comfort.j_abs <= 100.0,
            format!("{} is outside (0, 100]", a.comfort.j_abs),
        )?;
        a.fuel.validate().map_err(|e| ConfigError::OutOfRange {
            key: "fuel",
            reason: e.to_string(),
        })?;
        range(
            "window",
            (1..=1000).contains(&self.report.window),
            format!("{} is outside [1, 1000]", self.report.window),
        )?;
        Ok(())
    }
}

pub fn env_name(key: &str) -> String {
    key.replace('.', "_").to_ascii_uppercase()
}
