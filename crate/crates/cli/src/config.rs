//! Experiment configuration: one TOML or JSON document with `mode`,
//! `[params]`, `[analysis]`, `[sim]` and an optional `[sweep]`.
//!
//! Power and frequency fields accept unit strings (`"30 dBm"`, `"28 GHz"`).
//! They are converted to SI exactly once, here, before the typed structs
//! ever see them; everything downstream works in watts and hertz.

use std::fs;
use std::path::{Path, PathBuf};

use pinchnet_core::params::{dbm_to_watts, thermal_noise_watts};
use pinchnet_core::{AnalysisConfig, SimConfig, SystemParams};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("bad override `{assignment}`: {reason}")]
    Override { assignment: String, reason: String },
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("invalid configuration: {0}")]
    Schema(String),
    #[error(transparent)]
    Model(#[from] pinchnet_core::Error),
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field: field.into(), reason: reason.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Spatially averaged outage plus both bounds.
    Analyze,
    /// Monte Carlo outage and rate.
    Simulate,
    /// Both engines, with a per-point agreement flag.
    Compare,
    /// Bounds only.
    Bounds,
    /// Analytical ergodic rate.
    Rate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    /// Serialized name of a [`SystemParams`] field (`P`, `Np`, `beta`, ...).
    pub param: String,
    /// Values in SI units.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    #[serde(default)]
    pub params: SystemParams,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
}

impl ExperimentConfig {
    /// Parameter sets of every sweep point, paired with the swept value;
    /// a single unswept point otherwise.
    pub fn points(&self) -> Result<Vec<(Option<f64>, SystemParams)>, ConfigError> {
        match &self.sweep {
            None => Ok(vec![(None, self.params.clone())]),
            Some(sweep) => sweep
                .values
                .iter()
                .map(|&v| Ok((Some(v), with_param(&self.params, &sweep.param, v)?)))
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.analysis.validate()?;
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(invalid("sweep.values", "at least one value is required"));
            }
        }
        for (value, params) in self.points()? {
            let at = |e: pinchnet_core::Error| match value {
                Some(v) => invalid("sweep.values", format!("at {v}: {e}")),
                None => ConfigError::Model(e),
            };
            params.validate().map_err(at)?;
            self.sim.validate(&params).map_err(at)?;
        }
        Ok(())
    }
}

/// Copy of `params` with the field serialized as `name` set to `value`.
pub fn with_param(params: &SystemParams, name: &str, value: f64) -> Result<SystemParams, ConfigError> {
    let mut tree = serde_json::to_value(params).map_err(|e| ConfigError::Schema(e.to_string()))?;
    let slot = tree
        .get_mut(name)
        .ok_or_else(|| invalid("sweep.param", format!("`{name}` is not a system parameter")))?;
    *slot = if slot.is_u64() {
        if value < 0.0 || value.fract() != 0.0 || value > f64::from(u32::MAX) {
            return Err(invalid(name, format!("expects a non-negative integer, got {value}")));
        }
        Value::from(value as u64)
    } else {
        Value::from(value)
    };
    serde_json::from_value(tree).map_err(|e| invalid(name, e.to_string()))
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    load_config_with(path, &[])
}

/// Loads `path` (TOML, or JSON by extension) and applies `key=value`
/// overrides before validation. A `report.json` written by a previous run
/// loads as the configuration it echoes.
pub fn load_config_with(path: &Path, overrides: &[String]) -> Result<ExperimentConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let tree = parse_tree(&text, is_json).map_err(|message| ConfigError::Parse { path: path.to_path_buf(), message })?;
    resolve(tree, overrides)
}

/// Parses a configuration document into its raw key/value tree.
pub fn parse_tree(text: &str, is_json: bool) -> Result<Value, String> {
    let tree: Value = if is_json {
        serde_json::from_str(text).map_err(|e| e.to_string())?
    } else {
        toml::from_str(text).map_err(|e| e.to_string())?
    };
    match tree {
        Value::Object(mut map) if map.contains_key("config") && map.contains_key("rows") => {
            Ok(map.remove("config").unwrap_or_default())
        }
        other => Ok(other),
    }
}

/// Applies overrides, converts units and builds the validated configuration.
pub fn resolve(mut tree: Value, overrides: &[String]) -> Result<ExperimentConfig, ConfigError> {
    for assignment in overrides {
        apply_override(&mut tree, assignment)?;
    }
    normalize_units(&mut tree)?;
    let cfg: ExperimentConfig = serde_json::from_value(tree).map_err(|e| ConfigError::Schema(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// `a.b.c=value`; the value is read as a TOML literal, falling back to a
/// bare string (so `params.P=30 dBm` works without quotes).
pub fn apply_override(tree: &mut Value, assignment: &str) -> Result<(), ConfigError> {
    let bad = |reason: &str| ConfigError::Override { assignment: assignment.to_string(), reason: reason.to_string() };
    let (key, raw) = assignment.split_once('=').ok_or_else(|| bad("expected key=value"))?;
    let key = key.trim();
    let raw = raw.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(bad("empty key segment"));
    }
    let value = toml::from_str::<Map<String, Value>>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut m| m.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()));
    let mut node = tree;
    let mut segments = key.split('.').peekable();
    while let Some(segment) = segments.next() {
        let map = match node {
            Value::Object(map) => map,
            _ => return Err(bad("path runs through a non-table value")),
        };
        if segments.peek().is_none() {
            map.insert(segment.to_string(), value);
            return Ok(());
        }
        node = map.entry(segment.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dimension {
    Power,
    Frequency,
}

fn dimension_of(field: &str) -> Option<Dimension> {
    match field {
        "P" | "sigma2" => Some(Dimension::Power),
        "f_c" | "bandwidth" => Some(Dimension::Frequency),
        _ => None,
    }
}

fn normalize_units(tree: &mut Value) -> Result<(), ConfigError> {
    let Value::Object(root) = tree else {
        return Err(ConfigError::Schema("top level must be a table".into()));
    };
    if let Some(Value::Object(params)) = root.get_mut("params") {
        for (field, value) in params.iter_mut() {
            if let Some(dim) = dimension_of(field) {
                *value = Value::from(to_si(value, dim, &format!("params.{field}"))?);
            }
        }
        if let Some(bandwidth) = params.remove("bandwidth") {
            if params.contains_key("sigma2") {
                return Err(invalid("params.bandwidth", "give either sigma2 or bandwidth, not both"));
            }
            let hz = bandwidth.as_f64().unwrap_or(f64::NAN);
            if !(hz > 0.0) || !hz.is_finite() {
                return Err(invalid("params.bandwidth", format!("must be positive, got {hz}")));
            }
            params.insert("sigma2".into(), Value::from(thermal_noise_watts(hz)));
        }
    }
    if let Some(Value::Object(sweep)) = root.get_mut("sweep") {
        let dim = sweep.get("param").and_then(Value::as_str).and_then(dimension_of);
        if let (Some(dim), Some(Value::Array(values))) = (dim, sweep.get_mut("values")) {
            for value in values.iter_mut() {
                *value = Value::from(to_si(value, dim, "sweep.values")?);
            }
        }
    }
    Ok(())
}

fn to_si(value: &Value, dim: Dimension, field: &str) -> Result<f64, ConfigError> {
    match value {
        Value::Number(n) => n.as_f64().ok_or_else(|| invalid(field, "not a finite number")),
        Value::String(s) => parse_quantity(s, dim).map_err(|reason| invalid(field, reason)),
        other => Err(invalid(field, format!("expected a number or a quantity string, got {other}"))),
    }
}

type UnitScale = (&'static str, fn(f64) -> f64);

/// Parses `"<number> <unit>"` into watts or hertz. A bare number is SI.
fn parse_quantity(text: &str, dim: Dimension) -> Result<f64, String> {
    let units: &[UnitScale] = match dim {
        Dimension::Power => &[
            ("dBm", dbm_to_watts),
            ("dBW", |x| 10f64.powf(x / 10.0)),
            ("mW", |x| x * 1e-3),
            ("W", |x| x),
        ],
        Dimension::Frequency => &[
            ("GHz", |x| x * 1e9),
            ("MHz", |x| x * 1e6),
            ("kHz", |x| x * 1e3),
            ("Hz", |x| x),
        ],
    };
    let text = text.trim();
    let (number, convert) = units
        .iter()
        .find_map(|&(unit, convert)| text.strip_suffix(unit).map(|n| (n, convert)))
        .unwrap_or((text, |x| x));
    let names: Vec<&str> = units.iter().map(|(u, _)| *u).collect();
    let x: f64 = number
        .trim()
        .parse()
        .map_err(|_| format!("cannot read `{text}` as a number with one of the units {}", names.join(", ")))?;
    let si = convert(x);
    if si.is_finite() {
        Ok(si)
    } else {
        Err(format!("`{text}` is not finite"))
    }
}
