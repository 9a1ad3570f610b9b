//! Experiment documents: flat TOML keys, embedded presets and overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::scheme::SchemeDescriptor;

/// Embedded preset documents, keyed by id.
pub const PRESETS: &[(&str, &str)] = &[
    ("fig1", include_str!("../presets/fig1.toml")),
    ("fig2", include_str!("../presets/fig2.toml")),
    ("fig3", include_str!("../presets/fig3.toml")),
    ("fig4", include_str!("../presets/fig4.toml")),
    ("fig5", include_str!("../presets/fig5.toml")),
    ("fig6", include_str!("../presets/fig6.toml")),
    ("fig7", include_str!("../presets/fig7.toml")),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// Contention intensity.
    Lambda,
    /// Probability of the first of two power levels (`eta2 = 1 - eta1`).
    Eta1,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::Lambda => "lambda",
            SweepVariable::Eta1 => "eta1",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepScale {
    #[default]
    Log,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Receivers {
    /// Every receiver at `distance`.
    Fixed,
    /// Area-uniform over the annulus `(inner_radius, s]`.
    #[default]
    Cluster,
    /// Equally likely at the listed `locations`.
    Locations,
}

/// Quantities an experiment can report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Outage averaged over receiver classes.
    Outage,
    /// Outage per layer or power level (`outage_1`, `outage_2`, ...).
    OutageClasses,
    /// Class-averaged closed-form outage bounds (`bound_lower`, `bound_upper`).
    OutageBounds,
    SpatialReuse,
    /// Spatial reuse per power level (`spatial_reuse_1`, ...).
    SpatialReuseLevels,
    /// Throughput density `gamma lambda sum_k w_k (1 - q_k)`.
    Tc,
    /// Sum of the designed powers (max-normalized).
    SumPower,
    /// Feasible power-ratio interval of a two-level scheme (`ratio_lower`, `ratio_upper`).
    Region,
}

impl Metric {
    fn sweeps(self) -> SweepVariable {
        match self {
            Metric::Region => SweepVariable::Eta1,
            _ => SweepVariable::Lambda,
        }
    }
}

fn default_alpha() -> f64 {
    3.5
}
fn default_one() -> f64 {
    1.0
}
fn default_epsilon() -> f64 {
    0.1
}
fn default_s() -> f64 {
    20.0
}
fn default_layers() -> usize {
    5
}
fn default_rho0() -> f64 {
    1.29
}
fn default_trials() -> usize {
    layerpc::montecarlo::DEFAULT_TRIALS
}
fn default_sweep() -> SweepVariable {
    SweepVariable::Lambda
}

/// One experiment: a sweep, the schemes to compare and the metrics to report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    #[serde(default)]
    pub description: String,

    #[serde(default = "default_sweep")]
    pub sweep: SweepVariable,
    pub sweep_min: f64,
    pub sweep_max: f64,
    pub sweep_points: usize,
    #[serde(default)]
    pub sweep_scale: SweepScale,

    #[serde(default)]
    pub schemes: Vec<String>,
    pub metrics: Vec<Metric>,

    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_one")]
    pub beta: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_one")]
    pub gamma: f64,
    /// Cluster radius.
    #[serde(default = "default_s")]
    pub s: f64,

    #[serde(default)]
    pub receivers: Receivers,
    /// Link distance for fixed receivers.
    pub distance: Option<f64>,
    /// Inner radius of the cluster annulus. When zero, `dpc:thm3-upper`
    /// uses `s / (10 N)` for its own layers.
    #[serde(default)]
    pub inner_radius: f64,
    /// Layer count for DPC designs that do not name one.
    #[serde(default = "default_layers")]
    pub layers: usize,
    #[serde(default)]
    pub locations: Vec<f64>,
    /// `E[I] E[1/I]` used by the optimal design and the feasibility region.
    #[serde(default = "default_rho0")]
    pub rho0: f64,

    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    pub window_radius: Option<f64>,
    pub out: Option<PathBuf>,
}

impl ExperimentSpec {
    /// Parses a TOML document.
    pub fn from_toml(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e| CliError::config(format!("{e}")))?;
        Self::from_table(table)
    }

    pub fn from_table(table: toml::Table) -> Result<Self> {
        let spec: ExperimentSpec = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::config(e.message().to_string()))?;
        spec.check()?;
        Ok(spec)
    }

    /// Preset by id, or `None` when unknown.
    pub fn preset(id: &str) -> Option<Self> {
        let (_, text) = PRESETS.iter().find(|(k, _)| *k == id)?;
        Some(Self::from_toml(text).expect("embedded presets are valid"))
    }

    /// The sweep values in order; repeated when `sweep_min == sweep_max`.
    pub fn sweep_values(&self) -> Vec<f64> {
        let n = self.sweep_points;
        let (lo, hi) = (self.sweep_min, self.sweep_max);
        (0..n)
            .map(|k| {
                let t = k as f64 / (n - 1) as f64;
                let v = match self.sweep_scale {
                    SweepScale::Log => lo * (hi / lo).powf(t),
                    SweepScale::Linear => lo + t * (hi - lo),
                };
                if k == n - 1 {
                    hi
                } else {
                    v
                }
            })
            .collect()
    }

    /// Parsed scheme descriptors.
    pub fn scheme_descriptors(&self) -> Result<Vec<SchemeDescriptor>> {
        self.schemes.iter().map(|s| s.parse()).collect()
    }

    /// Structural checks that need no numerics from the core crate.
    fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(CliError::config(msg));
        if !(self.sweep_min > 0.0 && self.sweep_min.is_finite()) {
            return bad(format!("sweep_min must be positive, got {}", self.sweep_min));
        }
        if !(self.sweep_max >= self.sweep_min && self.sweep_max.is_finite()) {
            return bad(format!("sweep_max {} is below sweep_min {}", self.sweep_max, self.sweep_min));
        }
        if self.sweep_points < 2 {
            return bad(format!("sweep_points must be at least 2, got {}", self.sweep_points));
        }
        if self.sweep == SweepVariable::Eta1 && self.sweep_max >= 1.0 {
            return bad("eta1 sweeps must stay below 1".into());
        }
        if self.metrics.is_empty() {
            return bad("no metrics requested".into());
        }
        if let Some(m) = self.metrics.iter().find(|m| m.sweeps() != self.sweep) {
            return bad(format!("metric {m:?} cannot be swept over {}", self.sweep.name()));
        }
        match self.sweep {
            SweepVariable::Lambda if self.schemes.is_empty() => return bad("no schemes listed".into()),
            SweepVariable::Eta1 if !self.schemes.is_empty() => {
                return bad("eta1 sweeps describe two-level schemes implicitly; drop `schemes`".into())
            }
            _ => {}
        }
        if self.trials < layerpc::montecarlo::MIN_TRIALS {
            return bad(format!(
                "trials must be at least {}, got {}",
                layerpc::montecarlo::MIN_TRIALS,
                self.trials
            ));
        }
        match self.receivers {
            Receivers::Fixed if self.distance.is_none() => return bad("fixed receivers need `distance`".into()),
            Receivers::Locations if self.locations.is_empty() => {
                return bad("location receivers need `locations`".into())
            }
            _ => {}
        }
        if self.layers == 0 {
            return bad("layers must be at least 1".into());
        }
        let mut seen = std::collections::HashSet::new();
        for s in &self.schemes {
            if !seen.insert(s) {
                return bad(format!("scheme {s} listed twice"));
            }
            if s.contains([',', '"', '\n', '\r']) {
                return bad(format!("scheme {s:?} contains a CSV metacharacter"));
            }
        }
        self.scheme_descriptors().map(|_| ())
    }
}

/// Loads `source` as a preset id, falling back to a file path.
pub fn load_document(source: &str) -> Result<toml::Table> {
    let text = match PRESETS.iter().find(|(k, _)| *k == source) {
        Some((_, text)) => text.to_string(),
        None => {
            let path = Path::new(source);
            if !path.exists() {
                return Err(CliError::config(format!("unknown preset or missing file: {source}")));
            }
            std::fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.to_path_buf(),
                source,
            })?
        }
    };
    text.parse().map_err(|e| CliError::config(format!("{source}: {e}")))
}

/// Applies `key=value` overrides; values are TOML literals, and anything
/// that does not parse as one is taken as a bare string.
pub fn apply_overrides(table: &mut toml::Table, overrides: &[String]) -> Result<()> {
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("override {item:?} is not key=value")))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(CliError::config(format!("override {item:?} has an empty key")));
        }
        let value = match format!("v = {}", raw.trim()).parse::<toml::Table>() {
            Ok(mut t) => t.remove("v").expect("parsed key"),
            Err(_) => toml::Value::String(raw.trim().to_string()),
        };
        table.insert(key.to_string(), value);
    }
    Ok(())
}
