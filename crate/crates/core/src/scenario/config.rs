use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::electrical::{AmplifierParams, CoilParams, Interpolation};
use crate::magnetics::{ActuatorGeometry, ElementSpec, NetworkPreset};
use crate::mechanics::MechanicalConfig;
use crate::solver::SolverConfig;

use super::ScenarioError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Switch on at t = 0, off at `t_off`.
    Switch,
    /// Switching runs over a list of residual gaps on the hysteretic network.
    ResidualGapSweep,
    /// Per-shell flux density of the eddy ladder over a long tail.
    ShellFlux,
    /// The same switching run with and without eddy currents.
    EddyCompare,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 4] = [
        ScenarioKind::Switch,
        ScenarioKind::ResidualGapSweep,
        ScenarioKind::ShellFlux,
        ScenarioKind::EddyCompare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Switch => "switch",
            Self::ResidualGapSweep => "residual_gap_sweep",
            Self::ShellFlux => "shell_flux",
            Self::EddyCompare => "eddy_compare",
        }
    }

    pub fn default_preset(self) -> NetworkPreset {
        match self {
            Self::Switch => NetworkPreset::Full,
            Self::ResidualGapSweep => NetworkPreset::HysteresisSimplified,
            Self::ShellFlux | Self::EddyCompare => NetworkPreset::EddyLadder,
        }
    }

    pub fn default_t_end(self) -> f64 {
        match self {
            Self::Switch | Self::EddyCompare => 5e-3,
            Self::ResidualGapSweep => 10e-3,
            Self::ShellFlux => 20e-3,
        }
    }
}

impl std::fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ScenarioKind {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| ScenarioError::Config(format!("unknown scenario '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriveKind {
    #[default]
    Amplifier,
    Voltage,
    Current,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkSection {
    /// Defaults to the scenario's preset.
    pub preset: Option<NetworkPreset>,
    pub geometry: ActuatorGeometry,
    /// Explicit element list; overrides `preset`.
    pub elements: Option<Vec<ElementSpec>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ElectricalSection {
    pub mode: DriveKind,
    /// Setpoint while switched on (A for amplifier and current drive, V for
    /// voltage drive).
    pub level: f64,
    pub t_off: f64,
    /// Explicit (t, setpoint) pairs; replace `level` and `t_off`.
    pub breakpoints: Option<Vec<(f64, f64)>>,
    pub interpolation: Interpolation,
    pub coil: CoilParams<f64>,
    pub amplifier: AmplifierParams<f64>,
}

impl Default for ElectricalSection {
    fn default() -> Self {
        Self {
            mode: DriveKind::Amplifier,
            level: 8.0,
            t_off: 2e-3,
            breakpoints: None,
            interpolation: Interpolation::PiecewiseConstant,
            coil: CoilParams::paper(),
            amplifier: AmplifierParams::paper(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    /// Simulated time in s; defaults per scenario.
    pub t_end: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricOptions {
    /// The gap counts as closed at x ≤ x_min + this, in m.
    pub closed_tolerance: f64,
    /// The gap counts as open at x ≥ x_min + this fraction of the stroke.
    pub open_fraction: f64,
    /// Fraction of the switch-on flux density a shell must reach to count
    /// as settled.
    pub settle_fraction: f64,
    /// Fraction of its switch-off flux density below which the innermost
    /// shell counts as decayed.
    pub decay_fraction: f64,
}

impl Default for MetricOptions {
    fn default() -> Self {
        Self {
            closed_tolerance: 1e-7,
            open_fraction: 0.1,
            settle_fraction: 0.9,
            decay_fraction: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Dotted path into the configuration, e.g. `mechanics.x_min`.
    pub parameter: String,
    pub values: Vec<f64>,
}

impl std::str::FromStr for SweepSpec {
    type Err = ScenarioError;

    /// Parses `key=v1,v2,...`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (key, list) = s
            .split_once('=')
            .ok_or_else(|| ScenarioError::Config(format!("sweep '{s}' is not of the form key=v1,v2")))?;
        let values = list
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|e| ScenarioError::Config(format!("sweep value '{v}': {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            parameter: key.trim().to_string(),
            values,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    /// Material card, relative to the configuration file.
    #[serde(default)]
    pub material: Option<String>,
    #[serde(default)]
    pub network: NetworkSection,
    #[serde(default)]
    pub mechanics: MechanicalConfig<f64>,
    #[serde(default)]
    pub electrical: ElectricalSection,
    #[serde(default)]
    pub solver: SolverConfig<f64>,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub metrics: MetricOptions,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
}

impl ScenarioConfig {
    pub fn new(scenario: ScenarioKind) -> Self {
        Self {
            scenario,
            material: None,
            network: NetworkSection::default(),
            mechanics: MechanicalConfig::paper(),
            electrical: ElectricalSection::default(),
            solver: SolverConfig::default(),
            run: RunSection::default(),
            metrics: MetricOptions::default(),
            sweep: None,
        }
    }

    pub fn t_end(&self) -> f64 {
        self.run.t_end.unwrap_or_else(|| self.scenario.default_t_end())
    }

    pub fn preset(&self) -> NetworkPreset {
        self.network.preset.unwrap_or_else(|| self.scenario.default_preset())
    }

    /// The sweep to run: the configured one, or for the residual-gap
    /// scenario a default list around the latching threshold.
    pub fn effective_sweep(&self) -> Option<SweepSpec> {
        self.sweep.clone().or_else(|| {
            (self.scenario == ScenarioKind::ResidualGapSweep).then(|| SweepSpec {
                parameter: "mechanics.x_min".into(),
                values: vec![10e-6, 4e-6, 3.6e-6, 3.485e-6, 3.481e-6, 3.48e-6, 2e-6],
            })
        })
    }
}

/// A parsed configuration together with its raw table, so that sweep
/// overrides can be applied by path.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ScenarioConfig,
    raw: toml::Table,
    pub base_dir: PathBuf,
}

fn decode(raw: &toml::Table) -> Result<ScenarioConfig, ScenarioError> {
    ScenarioConfig::deserialize(toml::Value::Table(raw.clone()))
        .map_err(|e| ScenarioError::Config(e.to_string()))
}

fn lookup<'a>(raw: &'a toml::Table, keys: &[&str]) -> Option<&'a toml::Value> {
    let (last, parents) = keys.split_last()?;
    let mut table = raw;
    for k in parents {
        table = table.get(*k)?.as_table()?;
    }
    table.get(*last)
}

fn insert_path(raw: &mut toml::Table, keys: &[&str], value: toml::Value, path: &str) -> Result<(), ScenarioError> {
    let (last, parents) = keys.split_last().expect("non-empty path");
    let mut table = raw;
    for k in parents {
        table = table
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| ScenarioError::Config(format!("'{k}' in '{path}' is not a section")))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

impl LoadedConfig {
    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self, ScenarioError> {
        let raw: toml::Table = text.parse().map_err(|e: toml::de::Error| ScenarioError::Config(e.to_string()))?;
        let config = decode(&raw)?;
        Ok(Self {
            config,
            raw,
            base_dir: base_dir.into(),
        })
    }

    pub fn from_path(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ScenarioError::Config(format!("{}: {e}", path.display())))?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, dir)
    }

    /// Built-in defaults for a scenario.
    pub fn defaults(kind: ScenarioKind) -> Self {
        let mut raw = toml::Table::new();
        raw.insert("scenario".into(), toml::Value::String(kind.name().into()));
        Self {
            config: ScenarioConfig::new(kind),
            raw,
            base_dir: PathBuf::from("."),
        }
    }

    pub fn set_scenario(&mut self, kind: ScenarioKind) {
        self.raw.insert("scenario".into(), toml::Value::String(kind.name().into()));
        self.config.scenario = kind;
    }

    pub fn set_sweep(&mut self, sweep: SweepSpec) {
        self.config.sweep = Some(sweep);
    }

    fn edited(&self, path: &str, value: f64) -> Result<(toml::Table, ScenarioConfig), ScenarioError> {
        let keys: Vec<&str> = path.split('.').collect();
        if keys.iter().any(|k| k.is_empty()) {
            return Err(ScenarioError::Config(format!("bad parameter path '{path}'")));
        }
        // integral values may address integer fields; try that form second
        let mut forms = vec![toml::Value::Float(value)];
        if value.fract() == 0.0 && value.abs() < 9e15 {
            let int = toml::Value::Integer(value as i64);
            if matches!(lookup(&self.raw, &keys), Some(toml::Value::Integer(_))) {
                forms.insert(0, int);
            } else {
                forms.push(int);
            }
        }
        let mut last_err = None;
        for v in forms {
            let mut raw = self.raw.clone();
            insert_path(&mut raw, &keys, v, path)?;
            match decode(&raw) {
                Ok(mut cfg) => {
                    cfg.scenario = self.config.scenario;
                    cfg.sweep = self.config.sweep.clone();
                    return Ok((raw, cfg));
                }
                Err(e) => last_err = Some(e),
            }
        }
        let e = last_err.expect("at least one form tried");
        Err(ScenarioError::Config(format!("parameter '{path}' = {value}: {e}")))
    }

    /// Configuration with one value replaced, addressed by a dotted path.
    pub fn with_value(&self, path: &str, value: f64) -> Result<ScenarioConfig, ScenarioError> {
        let (_, mut cfg) = self.edited(path, value)?;
        cfg.sweep = None;
        Ok(cfg)
    }

    /// Replaces one value in place.
    pub fn set_value(&mut self, path: &str, value: f64) -> Result<(), ScenarioError> {
        let (raw, cfg) = self.edited(path, value)?;
        self.raw = raw;
        self.config = cfg;
        Ok(())
    }

    pub fn material_path(&self) -> Option<PathBuf> {
        self.config.material.as_ref().map(|m| self.base_dir.join(m))
    }

    /// Checks that can be made before any computation.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if let Some(p) = self.material_path() {
            if !p.is_file() {
                return Err(ScenarioError::Config(format!("material card {} not found", p.display())));
            }
        }
        let t_end = self.config.t_end();
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(ScenarioError::Config("run.t_end must be positive".into()));
        }
        let m = &self.config.metrics;
        if !(m.closed_tolerance > 0.0 && m.open_fraction > 0.0 && m.open_fraction < 1.0) {
            return Err(ScenarioError::Config(
                "metrics need closed_tolerance > 0 and 0 < open_fraction < 1".into(),
            ));
        }
        if let Some(s) = self.config.effective_sweep() {
            if s.values.is_empty() {
                return Err(ScenarioError::Config("sweep has no values".into()));
            }
            if let Some(v) = s.values.iter().find(|v| !v.is_finite()) {
                return Err(ScenarioError::Config(format!("sweep value {v} is not finite")));
            }
            for &v in &s.values {
                self.with_value(&s.parameter, v)?;
            }
        }
        Ok(())
    }
}
