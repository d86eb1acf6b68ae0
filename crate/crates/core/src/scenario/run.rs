use rayon::prelude::*;
use serde::Serialize;

use crate::electrical::{DriveMode, DriveWaveform};
use crate::magnetics::{assemble_network, NetworkPreset, NetworkSpec};
use crate::material::{io::load_material, Material};
use crate::solver::{
    energy_ledger, integrate, InitialConditions, IntegrationStats, Model, Motion, TimeSeries,
};

use super::config::{DriveKind, LoadedConfig, ScenarioConfig, ScenarioKind};
use super::metrics::{rms_difference, series_metrics, GapThresholds, RunMetrics};
use super::ScenarioError;

/// One planned integration.
#[derive(Debug, Clone)]
pub struct RunPlan {
    pub label: String,
    pub preset: Option<NetworkPreset>,
    /// Swept parameter and its value for this run.
    pub parameter: Option<(String, f64)>,
    pub config: ScenarioConfig,
    pub model: Model<f64>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub label: String,
    pub preset: Option<NetworkPreset>,
    pub parameter: Option<(String, f64)>,
    pub series: TimeSeries<f64>,
    pub metrics: RunMetrics,
    pub stats: IntegrationStats,
    pub thresholds: GapThresholds,
    pub t_off: f64,
}

impl RunOutput {
    /// `# key: value` lines written ahead of the CSV header.
    pub fn metadata(&self, scenario: ScenarioKind) -> Vec<(String, String)> {
        let mut m = vec![
            ("scenario".to_string(), scenario.name().to_string()),
            ("label".into(), self.label.clone()),
        ];
        if let Some(p) = self.preset {
            m.push(("preset".into(), format!("{p:?}").to_lowercase()));
        }
        if let Some((k, v)) = &self.parameter {
            m.push(("parameter".into(), format!("{k}={v:e}")));
        }
        m.extend([
            ("x_min".into(), format!("{:e}", self.thresholds.x_min)),
            ("x_max".into(), format!("{:e}", self.thresholds.x_max)),
            ("t_off".into(), format!("{:e}", self.t_off)),
        ]);
        m
    }

    pub fn to_csv(&self, scenario: ScenarioKind) -> String {
        self.series.to_csv(&self.metadata(scenario))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Summary {
    /// Label of the run opening delays refer to.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    /// Largest swept value that latched and smallest that reopened, when
    /// every latched value lies below every reopened one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub latching_bracket: Option<(f64, f64)>,
    /// RMS gap difference up to switch-off between the compared runs, in m.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closing_rms: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ScenarioOutput {
    pub scenario: ScenarioKind,
    pub runs: Vec<RunOutput>,
    pub summary: Summary,
}

#[derive(Serialize)]
struct RunRecord<'a> {
    label: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    parameter: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
    #[serde(flatten)]
    metrics: &'a RunMetrics,
    steps: usize,
}

#[derive(Serialize)]
struct MetricsFile<'a> {
    scenario: &'a str,
    summary: &'a Summary,
    runs: Vec<RunRecord<'a>>,
}

impl ScenarioOutput {
    /// Metrics of all runs as TOML.
    pub fn metrics_toml(&self) -> String {
        let file = MetricsFile {
            scenario: self.scenario.name(),
            summary: &self.summary,
            runs: self
                .runs
                .iter()
                .map(|r| RunRecord {
                    label: &r.label,
                    parameter: r.parameter.as_ref().map(|p| p.0.clone()),
                    value: r.parameter.as_ref().map(|p| p.1),
                    metrics: &r.metrics,
                    steps: r.stats.accepted,
                })
                .collect(),
        };
        toml::to_string(&file).expect("metrics serialize")
    }

    /// File name for a run's CSV.
    pub fn csv_name(&self, run: &RunOutput) -> String {
        if self.runs.len() == 1 {
            return format!("{}.csv", self.scenario.name());
        }
        let label: String = run
            .label
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
            .collect();
        format!("{}_{label}.csv", self.scenario.name())
    }

    pub fn run(&self, label: &str) -> Option<&RunOutput> {
        self.runs.iter().find(|r| r.label == label)
    }
}

pub fn load_scenario_material(loaded: &LoadedConfig) -> Result<Material<f64>, ScenarioError> {
    match loaded.material_path() {
        Some(p) => Ok(load_material(&p)?),
        None => Ok(Material::x6crmos17()),
    }
}

/// Builds the transient model for one configuration.
pub fn build_model(
    cfg: &ScenarioConfig,
    preset: Option<NetworkPreset>,
    material: &Material<f64>,
) -> Result<Model<f64>, ScenarioError> {
    let spec = match (&cfg.network.elements, preset) {
        (Some(list), None) => NetworkSpec::Explicit(list.clone()),
        (_, p) => NetworkSpec::Preset {
            preset: p.unwrap_or_else(|| cfg.preset()),
            geometry: cfg.network.geometry.clone(),
        },
    };
    let el = &cfg.electrical;
    let network = assemble_network(&spec, material, el.coil.turns)?;
    let waveform = match &el.breakpoints {
        Some(bp) => DriveWaveform::new(bp.clone(), el.interpolation)?,
        None => {
            if !(el.t_off > 0.0) {
                return Err(ScenarioError::Config("electrical.t_off must be positive".into()));
            }
            DriveWaveform::square(el.level, el.t_off)
        }
    };
    let drive = match el.mode {
        DriveKind::Amplifier => DriveMode::Amplifier(el.amplifier),
        DriveKind::Voltage => DriveMode::Voltage,
        DriveKind::Current => DriveMode::Current,
    };
    let model = Model {
        network,
        mechanics: cfg.mechanics,
        coil: el.coil,
        drive,
        waveform,
        motion: Motion::Free,
        initial: InitialConditions::default(),
    };
    model.validate()?;
    cfg.solver.validate()?;
    Ok(model)
}

fn short(v: f64) -> String {
    format!("{v:e}")
}

/// Validates the configuration and builds every model the scenario needs,
/// without integrating anything.
pub fn plan_scenario(loaded: &LoadedConfig) -> Result<Vec<RunPlan>, ScenarioError> {
    loaded.validate()?;
    let material = load_scenario_material(loaded)?;
    let base = &loaded.config;
    let variants: Vec<(Option<(String, f64)>, ScenarioConfig)> = match base.effective_sweep() {
        Some(s) => s
            .values
            .iter()
            .map(|&v| Ok((Some((s.parameter.clone(), v)), loaded.with_value(&s.parameter, v)?)))
            .collect::<Result<_, ScenarioError>>()?,
        None => vec![(None, base.clone())],
    };
    let mut plans = Vec::new();
    for (param, cfg) in variants {
        let presets: Vec<Option<NetworkPreset>> = match base.scenario {
            ScenarioKind::EddyCompare => vec![Some(NetworkPreset::EddyLadder), Some(NetworkPreset::Full)],
            _ if cfg.network.elements.is_some() && cfg.network.preset.is_none() => vec![None],
            _ => vec![Some(cfg.preset())],
        };
        for preset in presets {
            let mut label = Vec::new();
            if base.scenario == ScenarioKind::EddyCompare {
                label.push(format!("{:?}", preset.expect("compare presets")).to_lowercase());
            }
            if let Some((k, v)) = &param {
                let key = k.rsplit('.').next().unwrap_or(k);
                label.push(format!("{key}={}", short(*v)));
            }
            let label = if label.is_empty() {
                base.scenario.name().to_string()
            } else {
                label.join(",")
            };
            let model = build_model(&cfg, preset, &material)?;
            plans.push(RunPlan {
                label,
                preset: preset.or(cfg.network.elements.is_none().then(|| cfg.preset())),
                parameter: param.clone(),
                config: cfg.clone(),
                model,
            });
        }
    }
    Ok(plans)
}

fn execute(plan: &RunPlan) -> Result<RunOutput, ScenarioError> {
    let cfg = &plan.config;
    let run = integrate(&plan.model, cfg.t_end(), &cfg.solver)?;
    let series = run.series;
    let m = &cfg.mechanics;
    let th = GapThresholds {
        x_min: m.x_min,
        x_max: m.x_max,
        closed_tolerance: cfg.metrics.closed_tolerance,
        open_fraction: cfg.metrics.open_fraction,
    };
    let t_off = plan.model.waveform.switch_off_time().unwrap_or(f64::INFINITY);
    let ledger = energy_ledger(&series)?;
    let mut metrics = series_metrics(&series, &th, t_off, cfg.metrics.settle_fraction, cfg.metrics.decay_fraction)?;
    metrics.energy_residual = Some(ledger.relative_residual());
    Ok(RunOutput {
        label: plan.label.clone(),
        preset: plan.preset,
        parameter: plan.parameter.clone(),
        series,
        metrics,
        stats: run.stats,
        thresholds: th,
        t_off,
    })
}

/// Runs the planned integrations in parallel and derives the comparison
/// metrics. Results keep the plan order.
pub fn execute_plans(scenario: ScenarioKind, plans: &[RunPlan]) -> Result<ScenarioOutput, ScenarioError> {
    let results: Vec<Result<RunOutput, ScenarioError>> = plans.par_iter().map(execute).collect();
    let mut runs = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let mut summary = Summary::default();
    match scenario {
        ScenarioKind::EddyCompare => {
            // pair each eddy run with the no-eddy run of the same variant
            let mut closing = Vec::new();
            for k in 0..runs.len() {
                if runs[k].preset != Some(NetworkPreset::EddyLadder) {
                    continue;
                }
                let Some(r) = runs
                    .iter()
                    .position(|o| o.preset == Some(NetworkPreset::Full) && o.parameter == runs[k].parameter)
                else {
                    continue;
                };
                let delay = match (runs[k].metrics.opening_time, runs[r].metrics.opening_time) {
                    (Some(a), Some(b)) => Some(a - b),
                    _ => None,
                };
                let t1 = runs[k].t_off.min(runs[r].t_off);
                closing.push(rms_difference(&runs[k].series, &runs[r].series, "gap", 0.0, t1, 2001)?);
                runs[k].metrics.opening_delay = delay;
                summary.reference.get_or_insert_with(|| runs[r].label.clone());
            }
            summary.closing_rms = closing.into_iter().reduce(f64::max);
        }
        _ => {
            let reference = runs
                .iter()
                .enumerate()
                .filter(|(_, r)| r.metrics.opening_time.is_some())
                .filter_map(|(k, r)| Some((r.parameter.as_ref()?.1, k)))
                .max_by(|a, b| a.0.total_cmp(&b.0))
                .map(|(_, k)| k);
            if let Some(rk) = reference {
                let t_ref = runs[rk].metrics.opening_time.expect("reference opened");
                summary.reference = Some(runs[rk].label.clone());
                for r in runs.iter_mut() {
                    r.metrics.opening_delay = r.metrics.opening_time.map(|t| t - t_ref);
                }
            }
            summary.latching_bracket = latching_bracket(&runs);
        }
    }
    Ok(ScenarioOutput {
        scenario,
        runs,
        summary,
    })
}

fn latching_bracket(runs: &[RunOutput]) -> Option<(f64, f64)> {
    let value = |r: &RunOutput| r.parameter.as_ref().map(|p| p.1);
    let latched = runs.iter().filter(|r| r.metrics.latched).filter_map(value).reduce(f64::max)?;
    let opened = runs
        .iter()
        .filter(|r| r.metrics.opening_time.is_some())
        .filter_map(value)
        .reduce(f64::min)?;
    (latched < opened).then_some((latched, opened))
}

/// Plans and executes a scenario.
pub fn run_scenario(loaded: &LoadedConfig) -> Result<ScenarioOutput, ScenarioError> {
    let plans = plan_scenario(loaded)?;
    execute_plans(loaded.config.scenario, &plans)
}
