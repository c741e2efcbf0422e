//! Parameter sweeps, persistence and configuration loading.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{classify, ClassificationReport, NumericSettings};
use crate::error::{Error, Result};
use crate::geometry::{ModelConfig, ModelParams};

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "LTB_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Logarithmic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub n_values: Vec<u32>,
    pub a_min: f64,
    pub a_max: f64,
    pub a_steps: usize,
    pub spacing: Spacing,
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        if self.n_values.iter().any(|&n| n < 1) {
            return Err(Error::InvalidArgument("every n must be >= 1".into()));
        }
        if !(self.a_min > 0.0 && self.a_min < self.a_max && self.a_max.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < a_min < a_max, got [{}, {}]",
                self.a_min, self.a_max
            )));
        }
        if self.a_steps < 2 {
            return Err(Error::InvalidArgument(format!("a_steps must be >= 2, got {}", self.a_steps)));
        }
        Ok(())
    }

    pub fn a_values(&self) -> Vec<f64> {
        let m = self.a_steps;
        (0..m)
            .map(|i| {
                if i == 0 {
                    return self.a_min;
                }
                if i + 1 == m {
                    return self.a_max;
                }
                let f = i as f64 / (m - 1) as f64;
                match self.spacing {
                    Spacing::Linear => self.a_min + (self.a_max - self.a_min) * f,
                    Spacing::Logarithmic => self.a_min * (self.a_max / self.a_min).powf(f),
                }
            })
            .collect()
    }

    /// Grid points in row-major order: `n` outer, `a` inner.
    pub fn points(&self) -> Vec<(u32, f64)> {
        let a = self.a_values();
        self.n_values
            .iter()
            .flat_map(|&n| a.iter().map(move |&a| (n, a)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    pub r_max: f64,
    pub numeric: NumericSettings,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings {
            r_max: 0.1,
            numeric: NumericSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: u32,
    pub a: f64,
    pub report: Option<ClassificationReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    pub grid: SweepGrid,
    pub settings: SweepSettings,
    pub timestamp: String,
    pub workers: usize,
    /// Per-row wall time, in row order.
    pub wall_times_s: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub provenance: Provenance,
}

/// Worker count from `LTB_WORKERS`, if set and positive.
pub fn workers_from_env() -> Option<usize> {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&w| w > 0)
}

fn run_point(n: u32, a: f64, settings: &SweepSettings) -> (SweepRow, f64) {
    let started = Instant::now();
    let row = match ModelParams::power_law(n, a, settings.r_max) {
        Ok(params) => SweepRow {
            n,
            a,
            report: Some(classify(&params, &settings.numeric)),
            error: None,
        },
        Err(e) => SweepRow {
            n,
            a,
            report: None,
            error: Some(e.to_string()),
        },
    };
    (row, started.elapsed().as_secs_f64())
}

/// Classifies every grid point. Row order is grid order whatever the worker
/// count; `workers = None` falls back to `LTB_WORKERS`, then to rayon's
/// default.
pub fn run_sweep(grid: &SweepGrid, settings: &SweepSettings, workers: Option<usize>) -> Result<SweepResult> {
    grid.validate()?;
    let workers = workers.or_else(workers_from_env).unwrap_or_else(rayon::current_num_threads);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
    let points = grid.points();
    let (rows, wall_times_s): (Vec<SweepRow>, Vec<f64>) = pool.install(|| {
        points
            .par_iter()
            .map(|&(n, a)| run_point(n, a, settings))
            .collect::<Vec<_>>()
            .into_iter()
            .unzip()
    });
    Ok(SweepResult {
        rows,
        provenance: Provenance {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            grid: grid.clone(),
            settings: settings.clone(),
            timestamp: chrono::Utc::now().to_rfc3339(),
            workers,
            wall_times_s,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

pub const CSV_HEADER: &str = "n,a,analytic,rule,numeric,agree,x0,alpha,termination,r_escape";

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

pub fn to_csv(result: &SweepResult) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in &result.rows {
        match &row.report {
            Some(rep) => {
                let ev = &rep.numeric.evidence;
                let _ = writeln!(
                    out,
                    "{},{:e},{},{},{},{},{},{},{},{}",
                    row.n,
                    row.a,
                    rep.analytic.endstate.verdict.as_str(),
                    rep.analytic.rule.as_str(),
                    rep.numeric.verdict.as_str(),
                    rep.agree,
                    opt(ev.start.map(|s| s.x0)),
                    opt(ev.start.map(|s| s.alpha)),
                    ev.termination.map(|t| t.label()).unwrap_or(""),
                    opt(ev.r_escape),
                );
            }
            None => {
                let _ = writeln!(out, "{},{:e},,,error,false,,,,", row.n, row.a);
            }
        }
    }
    out
}

pub fn to_json(result: &SweepResult) -> Result<String> {
    Ok(serde_json::to_string_pretty(result)?)
}

pub fn from_json(text: &str) -> Result<SweepResult> {
    Ok(serde_json::from_str(text)?)
}

pub fn render(result: &SweepResult, format: Format) -> Result<String> {
    match format {
        Format::Csv => Ok(to_csv(result)),
        Format::Json => to_json(result),
    }
}

/// Writes the sweep to `destination` in the given format.
pub fn emit(result: &SweepResult, format: Format, destination: &Path) -> Result<()> {
    let text = render(result, format)?;
    std::fs::write(destination, text).map_err(|source| Error::Io {
        path: destination.to_path_buf(),
        source,
    })
}

/// Reads and validates a JSON model configuration.
pub fn load_model_config(path: &Path) -> Result<ModelParams> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_model_config(&text).map_err(|e| match e {
        Error::Json(source) => Error::Parse {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}

pub fn parse_model_config(text: &str) -> Result<ModelParams> {
    let cfg: ModelConfig = serde_json::from_str(text)?;
    ModelParams::try_from(cfg)
}
