//! Named, reproducible numerical experiments on top of `grw-core`.
//!
//! Each scenario is a pure function of its [`ScenarioConfig`]: the same
//! configuration and seed yield the same [`Report`] apart from `wall_ms`.
//! A report passes iff every one of its metrics is within tolerance.

mod report;
mod scenarios;

use std::time::Instant;

use grw_core::kv::KeyValues;
use thiserror::Error;

pub use report::{emit_report, Check, Format, MeshStats, Metric, Report, Status, Table};

#[derive(Debug, Error)]
pub enum LabError {
    #[error("unknown scenario {0:?}")]
    UnknownScenario(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] grw_core::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("report: {0}")]
    Report(String),
}

impl From<csv::Error> for LabError {
    fn from(e: csv::Error) -> Self {
        LabError::Report(e.to_string())
    }
}

/// Catalogue entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScenarioInfo {
    pub id: &'static str,
    pub title: &'static str,
    /// The statement the scenario exercises.
    pub anchor: &'static str,
    /// Meaning of `res` for this scenario and its default.
    pub res_meaning: &'static str,
    pub default_res: usize,
}

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: String,
    /// Primary resolution; `None` uses the scenario default.
    pub res: Option<usize>,
    /// Multiplies every metric tolerance.
    pub tol_scale: f64,
    pub seed: u64,
    /// Remaining keys, e.g. ambient parameters for `graph-identity-convergence`.
    pub params: KeyValues,
}

impl ScenarioConfig {
    pub fn new(scenario: &str) -> Self {
        Self { scenario: scenario.into(), res: None, tol_scale: 1.0, seed: DEFAULT_SEED, params: KeyValues::default() }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_res(mut self, res: usize) -> Self {
        self.res = Some(res);
        self
    }

    /// Reads `scenario`, `res`, `tol`, `seed` from a key-value file; all
    /// other keys are kept in `params`.
    pub fn from_kv(kv: &KeyValues) -> Result<Self, LabError> {
        let scenario = kv.get_str("scenario").unwrap_or_default().to_string();
        let mut cfg = Self::new(&scenario);
        cfg.res = kv.get("res")?;
        cfg.tol_scale = kv.get_or("tol", 1.0)?;
        cfg.seed = kv.get_or("seed", DEFAULT_SEED)?;
        let mut params = KeyValues::default();
        for key in kv.keys().filter(|k| !matches!(*k, "scenario" | "res" | "tol" | "seed" | "out" | "format")) {
            params.insert(key, kv.get_str(key).unwrap_or_default());
        }
        cfg.params = params;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), LabError> {
        if !(self.tol_scale.is_finite() && self.tol_scale > 0.0) {
            return Err(LabError::Usage(format!("tolerance scale must be positive, got {}", self.tol_scale)));
        }
        if self.res == Some(0) {
            return Err(LabError::Usage("res must be positive".into()));
        }
        Ok(())
    }
}

pub fn list_scenarios() -> &'static [ScenarioInfo] {
    scenarios::CATALOGUE
}

pub fn scenario_info(id: &str) -> Option<&'static ScenarioInfo> {
    list_scenarios().iter().find(|s| s.id == id)
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<Report, LabError> {
    let info = scenario_info(&cfg.scenario).ok_or_else(|| LabError::UnknownScenario(cfg.scenario.clone()))?;
    cfg.validate()?;
    let start = Instant::now();
    let mut report = scenarios::run(info, cfg)?;
    report.wall_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}
