//! Executes an experiment and writes `results.csv` and `report.json`.
//!
//! The CSV holds only quantities that are a deterministic function of the
//! configuration, so equal configs give byte-identical files regardless of
//! worker count. Wall times go to the report only.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use pinchnet_core::{OutageAnalyzer, Simulator, SystemParams};
use serde::Serialize;

use crate::config::{ExperimentConfig, Mode};

pub const CSV_HEADER: [&str; 11] = [
    "swept_value",
    "analytic_outage",
    "sim_outage",
    "sim_std_error",
    "analytic_rate",
    "sim_rate",
    "sim_rate_std_error",
    "upper_bound",
    "lower_bound",
    "agree",
    "error",
];

/// One sweep point. Fields a mode does not compute stay `None`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ResultRow {
    pub swept_value: Option<f64>,
    pub analytic_outage: Option<f64>,
    pub sim_outage: Option<f64>,
    pub sim_std_error: Option<f64>,
    pub analytic_rate: Option<f64>,
    pub sim_rate: Option<f64>,
    pub sim_rate_std_error: Option<f64>,
    pub upper_bound: Option<f64>,
    pub lower_bound: Option<f64>,
    /// Compare mode: `|analytic - simulated outage| ≤ max(0.01, 3 std errors)`.
    pub agree: Option<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct WallTimes {
    pub analysis_s: f64,
    pub simulation_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowRecord {
    #[serde(flatten)]
    pub row: ResultRow,
    pub params: SystemParams,
    pub wall_times: WallTimes,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub records: Vec<RowRecord>,
    pub wall_time_s: f64,
}

impl RunOutput {
    pub fn rows(&self) -> impl Iterator<Item = &ResultRow> {
        self.records.iter().map(|r| &r.row)
    }

    pub fn has_errors(&self) -> bool {
        self.rows().any(|r| r.error.is_some())
    }
}

/// Outage agreement rule of compare mode.
pub fn agrees(analytic: f64, simulated: f64, std_error: f64) -> bool {
    (analytic - simulated).abs() <= f64::max(0.01, 3.0 * std_error)
}

pub fn run(cfg: &ExperimentConfig) -> RunOutput {
    let start = Instant::now();
    let points = match cfg.points() {
        Ok(points) => points,
        Err(e) => {
            // Configs are validated at load; this only triggers for hand-built ones.
            let row = ResultRow { error: Some(e.to_string()), ..ResultRow::default() };
            return RunOutput {
                records: vec![RowRecord { row, params: cfg.params.clone(), wall_times: WallTimes::default() }],
                wall_time_s: start.elapsed().as_secs_f64(),
            };
        }
    };
    let records = points
        .into_iter()
        .map(|(value, params)| run_point(cfg, value, params))
        .collect();
    RunOutput { records, wall_time_s: start.elapsed().as_secs_f64() }
}

fn run_point(cfg: &ExperimentConfig, value: Option<f64>, params: SystemParams) -> RowRecord {
    let mut row = ResultRow { swept_value: value, ..ResultRow::default() };
    let mut times = WallTimes::default();
    let mut errors = Vec::new();
    let eps = params.sinr_threshold();

    let analytic = matches!(cfg.mode, Mode::Analyze | Mode::Compare | Mode::Bounds | Mode::Rate);
    if analytic {
        let t = Instant::now();
        let result = OutageAnalyzer::from_params(&params, &cfg.analysis).and_then(|a| {
            if matches!(cfg.mode, Mode::Analyze | Mode::Compare) {
                row.analytic_outage = Some(a.outage_probability(eps)?);
            }
            if matches!(cfg.mode, Mode::Analyze | Mode::Bounds) {
                row.upper_bound = Some(a.outage_upper_bound(eps)?);
                row.lower_bound = Some(a.outage_lower_bound(eps)?);
            }
            if matches!(cfg.mode, Mode::Compare | Mode::Rate) {
                row.analytic_rate = Some(a.ergodic_rate()?);
            }
            Ok(())
        });
        if let Err(e) = result {
            errors.push(format!("analysis: {e}"));
        }
        times.analysis_s = t.elapsed().as_secs_f64();
    }

    if matches!(cfg.mode, Mode::Simulate | Mode::Compare) {
        let t = Instant::now();
        match Simulator::new(&params, &cfg.sim) {
            Ok(sim) => {
                let (outage, rate) = sim.estimate_outage_and_rate();
                row.sim_outage = Some(outage.estimate);
                row.sim_std_error = Some(outage.std_error);
                row.sim_rate = Some(rate.estimate);
                row.sim_rate_std_error = Some(rate.std_error);
            }
            Err(e) => errors.push(format!("simulation: {e}")),
        }
        times.simulation_s = t.elapsed().as_secs_f64();
    }

    if cfg.mode == Mode::Compare {
        if let (Some(a), Some(s), Some(se)) = (row.analytic_outage, row.sim_outage, row.sim_std_error) {
            row.agree = Some(agrees(a, s, se));
        }
    }
    if !errors.is_empty() {
        let at = match (&cfg.sweep, value) {
            (Some(sweep), Some(v)) => format!("{} = {}: ", sweep.param, v),
            _ => String::new(),
        };
        row.error = Some(format!("{at}{}", errors.join("; ")));
    }
    RowRecord { row, params, wall_times: times }
}

/// Decimal notation with 9 significant digits; no exponent, no locale.
pub fn format_sig9(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    // Round first in scientific form so the exponent accounts for carries.
    let sci = format!("{x:.8e}");
    let exp: i32 = sci.rsplit_once('e').and_then(|(_, e)| e.parse().ok()).unwrap_or(0);
    let decimals = (8 - exp).max(0) as usize;
    let rounded: f64 = sci.parse().unwrap_or(x);
    format!("{rounded:.decimals$}")
}

fn field(x: Option<f64>) -> String {
    x.map(format_sig9).unwrap_or_default()
}

pub fn write_csv<W: Write>(rows: impl IntoIterator<Item = impl std::borrow::Borrow<ResultRow>>, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        let r = row.borrow();
        w.write_record([
            field(r.swept_value),
            field(r.analytic_outage),
            field(r.sim_outage),
            field(r.sim_std_error),
            field(r.analytic_rate),
            field(r.sim_rate),
            field(r.sim_rate_std_error),
            field(r.upper_bound),
            field(r.lower_bound),
            r.agree.map(|a| a.to_string()).unwrap_or_default(),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Report<'a> {
    tool: &'static str,
    version: &'static str,
    core_version: &'static str,
    seed: u64,
    config: &'a ExperimentConfig,
    rows: &'a [RowRecord],
    wall_time_s: f64,
}

pub fn report_json(cfg: &ExperimentConfig, output: &RunOutput) -> serde_json::Result<String> {
    serde_json::to_string_pretty(&Report {
        tool: "pinchnet",
        version: env!("CARGO_PKG_VERSION"),
        core_version: pinchnet_core::VERSION,
        seed: cfg.sim.seed,
        config: cfg,
        rows: &output.records,
        wall_time_s: output.wall_time_s,
    })
}

/// Writes `results.csv` and `report.json` into `dir`, creating it if needed.
pub fn write_outputs(dir: &Path, cfg: &ExperimentConfig, output: &RunOutput) -> io::Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let csv_path = dir.join("results.csv");
    let json_path = dir.join("report.json");
    write_csv(output.rows(), io::BufWriter::new(fs::File::create(&csv_path)?)).map_err(io::Error::other)?;
    fs::write(&json_path, report_json(cfg, output).map_err(io::Error::other)? + "\n")?;
    Ok((csv_path, json_path))
}
