//! Sectioned `key = value` run configuration.
//!
//! ```text
//! [medium]
//! c = 1
//! alpha0 = 0.01
//! y = 1
//! ```
//!
//! Lines starting with `#` or `;` are comments. Every key must be known for
//! its section; unknown keys and sections are rejected with their line number.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use crate::attenuation_lab::{ExperimentSetup, PulseKind, PulseSpec};
use crate::burgers_models::{BurgersParams, BurgersVariant};
use crate::error::Error;
use crate::frac_laplacian::{Boundary, Grid1D};
use crate::wave_models::{MediumParams, ModelKind, SolverOptions, SpatialPath, TemporalScheme};

/// `(section, key, default)`; `None` marks a required key.
const KEYS: &[(&str, &str, Option<&str>)] = &[
    ("medium", "c", None),
    ("medium", "alpha0", None),
    ("medium", "y", None),
    ("grid", "n", Some("1024")),
    ("grid", "h", Some("0.05")),
    ("grid", "boundary", Some("periodic")),
    ("model", "family", Some("wave")),
    ("model", "name", Some("temporal_complex")),
    ("model", "eta", Some("0")),
    ("model", "spatial_path", Some("matrix")),
    ("model", "temporal_scheme", Some("auto")),
    ("model", "history_window", Some("full")),
    ("model", "variant", Some("frac_complex")),
    ("pulse", "kind", Some("modulated")),
    ("pulse", "f0", Some("0.79577471545947668")),
    ("pulse", "bandwidth", Some("1.25")),
    ("pulse", "amplitude", Some("1")),
    ("pulse", "analytic", Some("true")),
    ("experiment", "source", Some("2")),
    ("experiment", "source_kind", Some("driven")),
    ("experiment", "x1", Some("6")),
    ("experiment", "x2", Some("16")),
    ("experiment", "probes", Some("6,16")),
    ("experiment", "duration", Some("auto")),
    ("experiment", "dt", Some("auto")),
    ("experiment", "snr_gate", Some("0.01")),
    ("experiment", "taper", Some("0.1")),
    ("experiment", "window_sigmas", Some("12")),
    ("experiment", "omega_min", Some("1")),
    ("experiment", "omega_max", Some("10")),
    ("experiment", "omega_count", Some("50")),
    (
        "experiment",
        "sweep_models",
        Some("temporal_complex,spatial_complex"),
    ),
    ("experiment", "sweep_y", Some("0.5,1,1.5")),
    ("experiment", "sweep_alpha0", Some("0.01")),
    ("experiment", "tolerance", Some("0.1")),
    ("experiment", "operator_r", Some("0.5")),
    ("experiment", "t_end", Some("1")),
    ("experiment", "cfl_fraction", Some("0.5")),
    ("experiment", "snapshot_every", Some("50")),
    ("experiment", "initial_amplitude", Some("1")),
    ("experiment", "initial_offset", Some("0")),
    ("output", "prefix", Some("")),
];

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn at_line(line: usize, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            key: None,
            message: message.into(),
        }
    }

    fn at_key(section: &str, key: &str, message: impl Into<String>) -> Self {
        Self {
            line: None,
            key: Some(format!("{section}.{key}")),
            message: message.into(),
        }
    }

    fn from_domain(section: &str, err: Error) -> Self {
        match &err {
            Error::InvalidParameter { name, reason } => Self::at_key(section, name, reason.clone()),
            _ => Self {
                line: None,
                key: Some(section.to_string()),
                message: err.to_string(),
            },
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.line, &self.key) {
            (Some(l), Some(k)) => write!(f, "line {l}: {k}: {}", self.message),
            (Some(l), None) => write!(f, "line {l}: {}", self.message),
            (None, Some(k)) => write!(f, "{k}: {}", self.message),
            (None, None) => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

pub type ConfigResult<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<(String, String), String>,
}

impl RunConfig {
    pub fn parse(text: &str) -> ConfigResult<Self> {
        let mut given: BTreeMap<(String, String), String> = BTreeMap::new();
        let mut section: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| ConfigError::at_line(line_no, "unterminated section header"))?
                    .trim();
                if !KEYS.iter().any(|(s, _, _)| *s == name) {
                    return Err(ConfigError::at_line(
                        line_no,
                        format!("unknown section [{name}]"),
                    ));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                ConfigError::at_line(line_no, format!("expected key = value, got `{line}`"))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let sec = section.as_deref().ok_or_else(|| {
                ConfigError::at_line(line_no, format!("key `{key}` outside any section"))
            })?;
            if !KEYS.iter().any(|(s, k, _)| *s == sec && *k == key) {
                return Err(ConfigError::at_line(
                    line_no,
                    format!("unknown key `{key}` in [{sec}]"),
                ));
            }
            let slot = (sec.to_string(), key.to_string());
            if given.contains_key(&slot) {
                return Err(ConfigError::at_line(
                    line_no,
                    format!("duplicate key {sec}.{key}"),
                ));
            }
            given.insert(slot, value.to_string());
        }
        let mut values = BTreeMap::new();
        for (s, k, default) in KEYS {
            let slot = (s.to_string(), k.to_string());
            match (given.remove(&slot), default) {
                (Some(v), _) => {
                    values.insert(slot, v);
                }
                (None, Some(d)) => {
                    values.insert(slot, d.to_string());
                }
                (None, None) => return Err(ConfigError::at_key(s, k, "missing required key")),
            }
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> ConfigResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            line: None,
            key: None,
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::parse(&text)
    }

    /// Every resolved key in declaration order, as `section.key = value`.
    pub fn echo(&self) -> Vec<String> {
        KEYS.iter()
            .map(|(s, k, _)| format!("{s}.{k} = {}", self.raw(s, k)))
            .collect()
    }

    pub fn raw(&self, section: &str, key: &str) -> &str {
        self.values
            .get(&(section.to_string(), key.to_string()))
            .map(String::as_str)
            .expect("key declared in table")
    }

    pub fn f64(&self, section: &str, key: &str) -> ConfigResult<f64> {
        let v = self.raw(section, key);
        v.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| {
                ConfigError::at_key(section, key, format!("expected a number, got `{v}`"))
            })
    }

    /// `auto` maps to `None`.
    pub fn f64_or_auto(&self, section: &str, key: &str) -> ConfigResult<Option<f64>> {
        if self.raw(section, key) == "auto" {
            Ok(None)
        } else {
            self.f64(section, key).map(Some)
        }
    }

    pub fn usize(&self, section: &str, key: &str) -> ConfigResult<usize> {
        let v = self.raw(section, key);
        v.parse::<usize>().map_err(|_| {
            ConfigError::at_key(
                section,
                key,
                format!("expected a nonnegative integer, got `{v}`"),
            )
        })
    }

    pub fn bool(&self, section: &str, key: &str) -> ConfigResult<bool> {
        match self.raw(section, key) {
            "true" => Ok(true),
            "false" => Ok(false),
            v => Err(ConfigError::at_key(
                section,
                key,
                format!("expected true or false, got `{v}`"),
            )),
        }
    }

    pub fn list_f64(&self, section: &str, key: &str) -> ConfigResult<Vec<f64>> {
        self.list_str(section, key)
            .into_iter()
            .map(|v| {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| {
                        ConfigError::at_key(section, key, format!("expected a number, got `{v}`"))
                    })
            })
            .collect()
    }

    pub fn list_str(&self, section: &str, key: &str) -> Vec<&str> {
        self.raw(section, key)
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .collect()
    }

    pub fn medium(&self) -> ConfigResult<MediumParams> {
        MediumParams::new(
            self.f64("medium", "c")?,
            self.f64("medium", "alpha0")?,
            self.f64("medium", "y")?,
        )
        .map_err(|e| match e {
            Error::InvalidOrder { .. } => ConfigError::at_key("medium", "y", e.to_string()),
            e => ConfigError::from_domain("medium", e),
        })
    }

    pub fn grid(&self) -> ConfigResult<Grid1D> {
        let boundary: Boundary = self
            .raw("grid", "boundary")
            .parse()
            .map_err(|e| ConfigError::from_domain("grid", e))?;
        Grid1D::new(self.usize("grid", "n")?, self.f64("grid", "h")?, boundary)
            .map_err(|e| ConfigError::from_domain("grid", e))
    }

    pub fn is_burgers(&self) -> ConfigResult<bool> {
        match self.raw("model", "family") {
            "wave" => Ok(false),
            "burgers" => Ok(true),
            v => Err(ConfigError::at_key(
                "model",
                "family",
                format!("expected wave or burgers, got `{v}`"),
            )),
        }
    }

    pub fn model(&self) -> ConfigResult<ModelKind> {
        self.model_named(self.raw("model", "name"))
    }

    pub fn model_named(&self, name: &str) -> ConfigResult<ModelKind> {
        let eta = self.f64("model", "eta")?;
        ModelKind::parse(name, eta).map_err(|e| match e {
            Error::InvalidParameter {
                name: "model",
                reason,
            } => ConfigError::at_key("model", "name", reason),
            e => ConfigError::from_domain("model", e),
        })
    }

    pub fn sweep_models(&self) -> ConfigResult<Vec<ModelKind>> {
        self.list_str("experiment", "sweep_models")
            .into_iter()
            .map(|n| {
                self.model_named(n).map_err(|mut e| {
                    e.key = Some("experiment.sweep_models".into());
                    e
                })
            })
            .collect()
    }

    pub fn solver_options(&self) -> ConfigResult<SolverOptions> {
        let spatial_path = match self.raw("model", "spatial_path") {
            "matrix" => SpatialPath::Matrix,
            "spectral" => SpatialPath::Spectral,
            v => {
                return Err(ConfigError::at_key(
                    "model",
                    "spatial_path",
                    format!("expected matrix or spectral, got `{v}`"),
                ))
            }
        };
        let temporal_scheme: TemporalScheme = self
            .raw("model", "temporal_scheme")
            .parse()
            .map_err(|e: Error| ConfigError::at_key("model", "temporal_scheme", e.to_string()))?;
        let history_window = match self.raw("model", "history_window") {
            "full" => None,
            _ => Some(self.usize("model", "history_window")?),
        };
        Ok(SolverOptions {
            spatial_path,
            temporal_scheme,
            history_window,
        })
    }

    pub fn burgers(&self) -> ConfigResult<(BurgersParams, BurgersVariant)> {
        let variant: BurgersVariant = self
            .raw("model", "variant")
            .parse()
            .map_err(|e: Error| ConfigError::at_key("model", "variant", e.to_string()))?;
        let params = BurgersParams::new(self.f64("medium", "alpha0")?, self.f64("medium", "y")?)
            .map_err(|e| ConfigError::at_key("medium", "y", e.to_string()))?;
        Ok((params, variant))
    }

    pub fn pulse(&self) -> ConfigResult<PulseSpec> {
        let kind: PulseKind = self
            .raw("pulse", "kind")
            .parse()
            .map_err(|e: Error| ConfigError::at_key("pulse", "kind", e.to_string()))?;
        PulseSpec::new(
            kind,
            self.f64("pulse", "f0")?,
            self.f64("pulse", "bandwidth")?,
            self.f64("pulse", "amplitude")?,
            self.bool("pulse", "analytic")?,
        )
        .map_err(|e| ConfigError::from_domain("pulse", e))
    }

    pub fn position(&self, grid: &Grid1D, key: &str) -> ConfigResult<usize> {
        let x = self.f64("experiment", key)?;
        grid.index_of(x)
            .map_err(|e| ConfigError::at_key("experiment", key, e.to_string()))
    }

    pub fn probes(&self, grid: &Grid1D) -> ConfigResult<Vec<usize>> {
        self.list_f64("experiment", "probes")?
            .into_iter()
            .map(|x| {
                grid.index_of(x)
                    .map_err(|e| ConfigError::at_key("experiment", "probes", e.to_string()))
            })
            .collect()
    }

    pub fn experiment(&self) -> ConfigResult<ExperimentSetup> {
        let grid = self.grid()?;
        Ok(ExperimentSetup {
            source: self.position(&grid, "source")?,
            x1: self.position(&grid, "x1")?,
            x2: self.position(&grid, "x2")?,
            pulse: self.pulse()?,
            duration: self.f64_or_auto("experiment", "duration")?,
            dt: self.f64_or_auto("experiment", "dt")?,
            snr_gate: self.f64("experiment", "snr_gate")?,
            taper: self.f64("experiment", "taper")?,
            window_sigmas: self.f64("experiment", "window_sigmas")?,
            scheme: self.solver_options()?.temporal_scheme,
            grid,
        })
    }
}
