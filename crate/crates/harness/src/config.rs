//! Scenario files (TOML).
//!
//! Powers are given in dBm here and converted to watts on load; everything
//! downstream is SI.

use std::path::Path;

use nomafl_core::SchemeId;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const SCHEMA_VERSION: u32 = 1;

pub fn dbm_to_w(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Closed interval for a uniform draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub const fn fixed(v: f64) -> Self {
        Self { min: v, max: v }
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite() && self.min <= self.max) {
            return Err(HarnessError::Config(format!(
                "{name}: range [{}, {}] is invalid",
                self.min, self.max
            )));
        }
        Ok(())
    }
}

/// Parameters a sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    BsPowerDbm,
    DgenTotalSamples,
    TMaxS,
    ModelSizeBits,
    EMaxJ,
    KDevices,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::BsPowerDbm => "bs_power_dbm",
            SweepParam::DgenTotalSamples => "dgen_total_samples",
            SweepParam::TMaxS => "t_max_s",
            SweepParam::ModelSizeBits => "model_size_bits",
            SweepParam::EMaxJ => "e_max_j",
            SweepParam::KDevices => "k_devices",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

/// System-wide constants and the ranges of per-drop draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    pub bandwidth_hz: f64,
    pub noise_dbm_per_hz: f64,
    pub rounds_n: u32,
    pub t_max_s: f64,
    pub tau_epochs: u32,
    pub zeta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub bs_power_dbm: f64,
    pub synth_rate_s_per_sample: f64,
    pub sample_size_bits: f64,
    pub model_size_bits: Range,
    pub dgen_total_samples: Range,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            bandwidth_hz: 1e6,
            noise_dbm_per_hz: -160.0,
            rounds_n: 100,
            t_max_s: 900.0,
            tau_epochs: 1,
            zeta: 50.0,
            alpha: 3.819,
            beta: 0.198,
            gamma: 0.231,
            bs_power_dbm: 35.0,
            synth_rate_s_per_sample: 0.0646,
            sample_size_bits: 20e3,
            model_size_bits: Range::new(1.5e6, 2.5e6),
            dgen_total_samples: Range::new(3000.0, 5000.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceConfig {
    pub d_loc_samples: Range,
    pub f_max_hz: Range,
    pub w_cycles_per_sample: Range,
    pub q_max_dbm: f64,
    pub e_max_j: f64,
    pub varpi: f64,
}

impl Default for DeviceConfig {
    fn default() -> Self {
        Self {
            d_loc_samples: Range::new(300.0, 500.0),
            f_max_hz: Range::new(1e9, 2e9),
            w_cycles_per_sample: Range::new(1e6, 2e6),
            q_max_dbm: 20.0,
            e_max_j: 1.2,
            varpi: 1e-27,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub seed: u64,
    #[serde(default = "default_k")]
    pub k_devices: usize,
    #[serde(default = "default_distance")]
    pub distance_range_m: Range,
    #[serde(default = "default_drops")]
    pub drops: usize,
    #[serde(default = "default_schemes")]
    pub schemes: Vec<SchemeId>,
    pub sweep: Sweep,
    #[serde(default)]
    pub system: SystemConfig,
    #[serde(default)]
    pub devices: DeviceConfig,
}

fn default_k() -> usize {
    15
}

fn default_distance() -> Range {
    Range::new(150.0, 300.0)
}

fn default_drops() -> usize {
    100
}

fn default_schemes() -> Vec<SchemeId> {
    SchemeId::ALL.to_vec()
}

impl ScenarioConfig {
    /// Default simulation settings with the given sweep.
    pub fn with_sweep(seed: u64, param: SweepParam, values: Vec<f64>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed,
            k_devices: default_k(),
            distance_range_m: default_distance(),
            drops: default_drops(),
            schemes: default_schemes(),
            sweep: Sweep { param, values },
            system: SystemConfig::default(),
            devices: DeviceConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(HarnessError::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.sweep.values.is_empty() {
            return Err(HarnessError::Config("sweep.values is empty".into()));
        }
        if self.drops == 0 {
            return Err(HarnessError::Config("drops must be at least 1".into()));
        }
        if self.schemes.is_empty() {
            return Err(HarnessError::Config("schemes is empty".into()));
        }
        if self.k_devices == 0 && self.sweep.param != SweepParam::KDevices {
            return Err(HarnessError::Config("k_devices must be at least 1".into()));
        }
        if self.sweep.param == SweepParam::KDevices
            && self
                .sweep
                .values
                .iter()
                .any(|&v| !(v >= 1.0 && v.fract() == 0.0))
        {
            return Err(HarnessError::Config(
                "k_devices sweep values must be positive integers".into(),
            ));
        }
        self.distance_range_m.validate("distance_range_m")?;
        if self.distance_range_m.min <= 0.0 {
            return Err(HarnessError::Config("distances must be positive".into()));
        }
        self.system
            .model_size_bits
            .validate("system.model_size_bits")?;
        self.system
            .dgen_total_samples
            .validate("system.dgen_total_samples")?;
        self.devices
            .d_loc_samples
            .validate("devices.d_loc_samples")?;
        self.devices.f_max_hz.validate("devices.f_max_hz")?;
        self.devices
            .w_cycles_per_sample
            .validate("devices.w_cycles_per_sample")?;
        Ok(())
    }
}
