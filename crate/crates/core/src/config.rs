//! Run configuration: one JSON document with every default written out.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::forecast::LagSpec;
use crate::optimize::SolverBackend;
use crate::sim::Policy;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPaths {
    pub loads: PathBuf,
    pub transformers: PathBuf,
    pub lmp: PathBuf,
    pub fuel_stats: PathBuf,
    /// Emission factors; the built-in table is used when absent.
    #[serde(default)]
    pub fuel_table: Option<PathBuf>,
    #[serde(default)]
    pub temperature: Option<PathBuf>,
    pub output_dir: PathBuf,
}

impl Default for DataPaths {
    fn default() -> Self {
        DataPaths {
            loads: "data/loads.csv".into(),
            transformers: "data/transformers.csv".into(),
            lmp: "data/lmp.csv".into(),
            fuel_stats: "data/fuel_stats.csv".into(),
            fuel_table: None,
            temperature: Some("data/temperature.csv".into()),
            output_dir: "out".into(),
        }
    }
}

impl DataPaths {
    /// Paths relative to `base`, as laid out by the synthetic generator.
    pub fn under(base: &std::path::Path) -> Self {
        DataPaths {
            loads: base.join("loads.csv"),
            transformers: base.join("transformers.csv"),
            lmp: base.join("lmp.csv"),
            fuel_stats: base.join("fuel_stats.csv"),
            fuel_table: None,
            temperature: Some(base.join("temperature.csv")),
            output_dir: base.join("out"),
        }
    }

    /// Input files that must exist before a run.
    pub fn inputs(&self) -> Vec<&PathBuf> {
        let mut v = vec![&self.loads, &self.transformers, &self.lmp, &self.fuel_stats];
        v.extend(self.fuel_table.iter());
        v.extend(self.temperature.iter());
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForecastConfig {
    pub lags: LagSpec,
    pub ridge: f64,
    pub deviation_window_days: usize,
    pub deviation_multiplier: f64,
    /// Days between model refits.
    pub refit_every_days: usize,
    /// Trailing days of history each fit uses.
    pub training_window_days: usize,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        ForecastConfig {
            lags: LagSpec::default(),
            ridge: 1e-3,
            deviation_window_days: 28,
            deviation_multiplier: 1.5,
            refit_every_days: 7,
            training_window_days: 56,
        }
    }
}

impl ForecastConfig {
    pub fn validate(&self) -> Result<()> {
        self.lags.validate()?;
        if !(self.ridge.is_finite() && self.ridge >= 0.0) {
            return Err(Error::Config(format!("ridge must be nonnegative, got {}", self.ridge)));
        }
        if self.deviation_window_days < 7 {
            return Err(Error::Config(format!(
                "deviation window must be at least 7 days, got {}",
                self.deviation_window_days
            )));
        }
        if !(self.deviation_multiplier.is_finite() && self.deviation_multiplier >= 0.0) {
            return Err(Error::Config("deviation multiplier must be nonnegative".into()));
        }
        if self.refit_every_days == 0 {
            return Err(Error::Config("refit interval must be at least one day".into()));
        }
        if self.training_window_days < 7 {
            return Err(Error::Config("training window must be at least 7 days".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub paths: DataPaths,
    pub slot_minutes: u32,
    pub policies: Vec<Policy>,
    pub gamma: f64,
    /// Storage capacity as hours of the transformer's peak load.
    pub battery_hours: f64,
    /// Rate limit as hours of peak load; `None` means a full charge in one hour.
    pub rate_hours: Option<f64>,
    /// Fraction of transformers fitted with storage.
    pub penetration: f64,
    /// Overload margin as a fraction of transformer capacity.
    pub eta_fraction: f64,
    pub seed: u64,
    /// Days of data reserved for the first model fit.
    pub warmup_days: usize,
    /// Evaluation days after the warmup; `None` uses all remaining data.
    pub horizon_days: Option<usize>,
    pub forecast: ForecastConfig,
    pub solver: SolverBackend,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            paths: DataPaths::default(),
            slot_minutes: 5,
            policies: Policy::ALL.to_vec(),
            gamma: 15.0,
            battery_hours: 1.0,
            rate_hours: None,
            penetration: 1.0,
            eta_fraction: 0.01,
            seed: 42,
            warmup_days: 56,
            horizon_days: None,
            forecast: ForecastConfig::default(),
            solver: SolverBackend::Dp,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn validate(&self) -> Result<()> {
        if self.slot_minutes == 0 || 1440 % self.slot_minutes != 0 {
            return Err(Error::Config(format!("slot length {} does not divide a day", self.slot_minutes)));
        }
        if self.policies.is_empty() {
            return Err(Error::Config("at least one policy is required".into()));
        }
        let slots = 1440 / self.slot_minutes;
        if !(self.gamma.is_finite() && self.gamma >= 0.0 && self.gamma <= slots as f64) {
            return Err(Error::Config(format!("budget {} outside [0, {slots}]", self.gamma)));
        }
        if !(self.battery_hours.is_finite() && self.battery_hours >= 0.0) {
            return Err(Error::Config(format!("battery hours must be nonnegative, got {}", self.battery_hours)));
        }
        if let Some(r) = self.rate_hours {
            if !(r.is_finite() && r >= 0.0) {
                return Err(Error::Config(format!("rate hours must be nonnegative, got {r}")));
            }
        }
        if !(self.penetration.is_finite() && (0.0..=1.0).contains(&self.penetration)) {
            return Err(Error::Config(format!("penetration {} outside [0, 1]", self.penetration)));
        }
        if !(self.eta_fraction > 0.0 && self.eta_fraction <= 0.1) {
            return Err(Error::Config(format!("overload margin fraction {} outside (0, 0.1]", self.eta_fraction)));
        }
        if self.horizon_days == Some(0) {
            return Err(Error::Config("horizon must be at least one day".into()));
        }
        self.forecast.validate()
    }

    /// Fails with the first input path that does not exist.
    pub fn check_inputs_exist(&self) -> Result<()> {
        for p in self.paths.inputs() {
            if !p.exists() {
                return Err(Error::io(
                    p.clone(),
                    std::io::Error::new(std::io::ErrorKind::NotFound, "input file not found"),
                ));
            }
        }
        Ok(())
    }
}
