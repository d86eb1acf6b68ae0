use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};

use switchmag::material::io::{
    format_table, read_columns, FitSection, HysteresisSection, MaterialCard, ResistivitySection,
};
use switchmag::material::{
    build_table, fit_permeability, integrate_derivative_loop, split_loop, BHCurve, CurveKind, FitOptions,
};
use switchmag::scenario::metrics::{load_line, series_metrics};
use switchmag::scenario::{
    execute_plans, plan_scenario, GapThresholds, LoadedConfig, RunMetrics, ScenarioError, ScenarioKind, SweepSpec,
};
use switchmag::solver::{csv_metadata, TimeSeries};

#[derive(Parser)]
#[command(name = "switchmag", version, about = "Switching electromagnet simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the analytic permeability to a measured initial curve (H, J columns).
    FitMaterial(FitArgs),
    /// Prepare a hysteresis table from a major loop.
    BuildHystTable(TableArgs),
    /// Run a scenario and write its series and metrics.
    Simulate(SimulateArgs),
    /// Extract switching metrics from series files and compute load lines.
    Analyze(AnalyzeArgs),
}

#[derive(Args)]
struct FitArgs {
    /// Initial magnetization curve: H [A/m] and J [T] per line.
    #[arg(long)]
    input: PathBuf,
    /// Points with relative permeability above this are not fitted.
    #[arg(long, default_value_t = 1000.0)]
    threshold: f64,
    /// Material name stored in the card.
    #[arg(long)]
    name: Option<String>,
    /// Electrical resistivity in Ω·m.
    #[arg(long)]
    resistivity: Option<f64>,
    /// Hysteresis table path to reference from the card.
    #[arg(long)]
    table: Option<String>,
    /// Card file to write; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TableArgs {
    /// Either a loop traversal (H, J; falling then rising) or derivative
    /// data (H_fall, dJ_fall, H_rise, dJ_rise).
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 61)]
    count: usize,
    /// Table file to write; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scenario name; overrides the one in the configuration.
    #[arg(long)]
    scenario: Option<String>,
    /// Parameter sweep as `section.key=v1,v2,...`.
    #[arg(long)]
    sweep: Option<String>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Accepted for compatibility; the simulator uses no random numbers.
    #[arg(long)]
    seedless: bool,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Series CSV files written by `simulate`.
    files: Vec<PathBuf>,
    /// Run that opening delays refer to.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Residual gap in m; read from the file metadata when absent.
    #[arg(long)]
    x_min: Option<f64>,
    #[arg(long)]
    x_max: Option<f64>,
    /// Switch-off time in s.
    #[arg(long)]
    t_off: Option<f64>,
    #[arg(long, default_value_t = 1e-7)]
    closed_tolerance: f64,
    /// Opening threshold as a fraction of the stroke.
    #[arg(long, default_value_t = 0.1)]
    open_fraction: f64,
    #[arg(long, default_value_t = 0.9)]
    settle_fraction: f64,
    #[arg(long, default_value_t = 0.05)]
    decay_fraction: f64,
    /// Iron path length in m for load lines.
    #[arg(long)]
    iron_path: Option<f64>,
    /// Residual gaps in m for load lines.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    residual_gap: Vec<f64>,
    /// Field values in A/m for load lines.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    field: Vec<f64>,
    /// Output directory; results go to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seedless: bool,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Config(anyhow::Error),
    Solver(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Config(e)
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        if e.is_solver_failure() {
            Failure::Solver(e.into())
        } else {
            Failure::Config(e.into())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::FitMaterial(a) => fit_material(a).map_err(Failure::from),
        Command::BuildHystTable(a) => build_hyst_table(a).map_err(Failure::from),
        Command::Simulate(a) => simulate(a),
        Command::Analyze(a) => analyze(a).map_err(Failure::from),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(e)) => {
            eprintln!("solver failure: {e:#}");
            ExitCode::from(3)
        }
    }
}

fn write_output(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn fit_material(a: FitArgs) -> anyhow::Result<()> {
    let rows = read_columns(&a.input, &[2])?;
    let curve = BHCurve::new(rows.iter().map(|r| (r[0], r[1])).collect(), CurveKind::Initial)?;
    let opts = FitOptions {
        exclude_above_mu: a.threshold,
        b_mu_max_hint: None,
    };
    let report = fit_permeability(&curve, opts)?;
    let mut card = MaterialCard::from_fit(&report.fit);
    card.name = a.name;
    card.resistivity = a.resistivity.map(|rho| ResistivitySection { rho });
    card.hysteresis = a.table.map(|table| HysteresisSection { table });
    card.fit = Some(FitSection {
        residual_rms: report.residual_rms,
        used_points: report.used_points,
        excluded_points: report.excluded_points,
        exclude_above_mu: a.threshold,
    });
    eprintln!(
        "fitted {} points ({} excluded above mu_r = {}), relative rms residual {:.3e}",
        report.used_points, report.excluded_points, a.threshold, report.residual_rms
    );
    write_output(a.out.as_deref(), &card.to_toml())
}

fn build_hyst_table(a: TableArgs) -> anyhow::Result<()> {
    let rows = read_columns(&a.input, &[2, 4])?;
    let (falling, rising) = if rows[0].len() == 2 {
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[1])).collect();
        split_loop(&pts)?
    } else {
        let col = |k: usize| rows.iter().map(|r| r[k]).collect::<Vec<f64>>();
        integrate_derivative_loop(&col(0), &col(1), &col(2), &col(3))?
    };
    let table = build_table(&falling, &rising, a.count)?;
    let header = format!("hysteresis table, {} points, from {}", a.count, a.input.display());
    write_output(a.out.as_deref(), &format_table(&table, &header))
}

fn simulate(a: SimulateArgs) -> Result<(), Failure> {
    let mut loaded = match &a.config {
        Some(p) => LoadedConfig::from_path(p)?,
        None => {
            let name = a
                .scenario
                .as_deref()
                .ok_or_else(|| anyhow!("either --config or --scenario is required"))?;
            LoadedConfig::defaults(name.parse()?)
        }
    };
    if let Some(name) = &a.scenario {
        let kind: ScenarioKind = name.parse()?;
        loaded.set_scenario(kind);
    }
    if let Some(s) = &a.sweep {
        loaded.set_sweep(s.parse::<SweepSpec>()?);
    }
    // everything is validated and built before the first integration
    let plans = plan_scenario(&loaded)?;
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let output = execute_plans(loaded.config.scenario, &plans)?;
    for run in &output.runs {
        let path = a.out.join(output.csv_name(run));
        std::fs::write(&path, run.to_csv(output.scenario)).with_context(|| format!("writing {}", path.display()))?;
    }
    let metrics = a.out.join("metrics.toml");
    std::fs::write(&metrics, output.metrics_toml()).with_context(|| format!("writing {}", metrics.display()))?;
    for run in &output.runs {
        let m = &run.metrics;
        eprintln!(
            "{}: closing {} opening {} latched {}",
            run.label,
            fmt_time(m.closing_time),
            fmt_time(m.opening_time),
            m.latched
        );
    }
    Ok(())
}

fn fmt_time(t: Option<f64>) -> String {
    t.map(|t| format!("{:.4} ms", t * 1e3)).unwrap_or_else(|| "-".into())
}

struct Loaded {
    path: PathBuf,
    series: TimeSeries<f64>,
    thresholds: GapThresholds,
    t_off: f64,
}

fn load_series(path: &Path, a: &AnalyzeArgs) -> anyhow::Result<Loaded> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let series = TimeSeries::from_csv(&text).with_context(|| format!("parsing {}", path.display()))?;
    let meta = csv_metadata(&text);
    let from_meta = |key: &str, flag: Option<f64>| -> anyhow::Result<f64> {
        if let Some(v) = flag {
            return Ok(v);
        }
        let (_, v) = meta
            .iter()
            .find(|(k, _)| k == key)
            .ok_or_else(|| anyhow!("{}: no '{key}' metadata; pass --{}", path.display(), key.replace('_', "-")))?;
        v.parse().with_context(|| format!("{}: metadata '{key}'", path.display()))
    };
    let thresholds = GapThresholds {
        x_min: from_meta("x_min", a.x_min)?,
        x_max: from_meta("x_max", a.x_max)?,
        closed_tolerance: a.closed_tolerance,
        open_fraction: a.open_fraction,
    };
    let t_off = from_meta("t_off", a.t_off)?;
    Ok(Loaded {
        path: path.to_path_buf(),
        series,
        thresholds,
        t_off,
    })
}

fn analyze(a: AnalyzeArgs) -> anyhow::Result<()> {
    if !(a.closed_tolerance > 0.0 && a.open_fraction > 0.0 && a.open_fraction < 1.0) {
        bail!("need --closed-tolerance > 0 and 0 < --open-fraction < 1");
    }
    let has_load_lines = a.iron_path.is_some() || !a.residual_gap.is_empty();
    if a.files.is_empty() && !has_load_lines {
        bail!("nothing to analyze: give series files or --iron-path with --residual-gap");
    }

    let metrics_of = |l: &Loaded| -> anyhow::Result<RunMetrics> {
        series_metrics(&l.series, &l.thresholds, l.t_off, a.settle_fraction, a.decay_fraction)
            .with_context(|| format!("{}", l.path.display()))
    };
    let reference_opening = match &a.reference {
        Some(p) => {
            let r = load_series(p, &a)?;
            let m = metrics_of(&r)?;
            Some(m.opening_time.ok_or_else(|| anyhow!("reference {} never opens", p.display()))?)
        }
        None => None,
    };

    let mut doc = toml::Table::new();
    let mut runs = Vec::new();
    for path in &a.files {
        let l = load_series(path, &a)?;
        let mut m = metrics_of(&l)?;
        if let Some(t_ref) = reference_opening {
            m.opening_delay = m.opening_time.map(|t| t - t_ref);
        }
        let mut entry = toml::Table::try_from(&m).context("serializing metrics")?;
        entry.insert("file".into(), toml::Value::String(path.display().to_string()));
        runs.push(toml::Value::Table(entry));
    }
    if !runs.is_empty() {
        doc.insert("runs".into(), toml::Value::Array(runs));
    }

    let mut load_csv = None;
    if has_load_lines {
        let l_fe = a.iron_path.ok_or_else(|| anyhow!("load lines need --iron-path"))?;
        if a.residual_gap.is_empty() {
            bail!("load lines need --residual-gap");
        }
        if !(l_fe > 0.0) || a.residual_gap.iter().any(|d| !(*d > 0.0)) {
            bail!("iron path and residual gaps must be positive");
        }
        let fields = if a.field.is_empty() {
            (0..=15).map(|k| -150.0 + 10.0 * k as f64).collect()
        } else {
            a.field.clone()
        };
        let mut csv = String::from("H[A/m]");
        for d in &a.residual_gap {
            csv.push_str(&format!(",B_d{d:e}[T]"));
        }
        csv.push('\n');
        let mut lines = Vec::new();
        for &h in &fields {
            csv.push_str(&format!("{h:.9e}"));
            for &d in &a.residual_gap {
                let b = load_line(l_fe, d, h);
                csv.push_str(&format!(",{b:.9e}"));
                let mut row = toml::Table::new();
                row.insert("residual_gap".into(), d.into());
                row.insert("h".into(), h.into());
                row.insert("b".into(), b.into());
                lines.push(toml::Value::Table(row));
            }
            csv.push('\n');
        }
        doc.insert("load_line".into(), toml::Value::Array(lines));
        load_csv = Some(csv);
    }

    let text = toml::to_string(&doc).context("serializing results")?;
    match &a.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            write_output(Some(&dir.join("analysis.toml")), &text)?;
            if let Some(csv) = load_csv {
                write_output(Some(&dir.join("load_lines.csv")), &csv)?;
            }
        }
        None => print!("{text}"),
    }
    Ok(())
}
