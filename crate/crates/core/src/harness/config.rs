//! Run configuration, loaded from TOML with `[plant]`, `[dcrab]`, `[scan]`
//! and `[output]` sections. Every key is optional.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::scan::ScanSpec;
use crate::dcrab::DcrabConfig;
use crate::error::{Error, Result};
use crate::plant::{SimPlantConfig, DEFAULT_REPETITIONS};
use crate::qubit::PlantParams;
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantSection {
    pub rabi_mhz: f64,
    /// Δ/Ω
    pub detuning_rel: f64,
    /// T/T_π
    pub duration_rel: f64,
    pub noise: bool,
    pub shots: u64,
    /// True Rabi frequency = nominal × scale.
    pub amp_scale: f64,
    /// Extra true detuning in units of the nominal Ω.
    pub detuning_offset_rel: f64,
}

impl Default for PlantSection {
    fn default() -> Self {
        Self {
            rabi_mhz: 5.0,
            detuning_rel: 0.0,
            duration_rel: 1.5,
            noise: false,
            shots: DEFAULT_REPETITIONS,
            amp_scale: 1.0,
            detuning_offset_rel: 0.0,
        }
    }
}

impl PlantSection {
    pub fn params(&self) -> Result<PlantParams> {
        PlantParams::from_relative(self.rabi_mhz, self.detuning_rel, self.duration_rel)
    }

    /// Plant configuration; the shot-noise seed is derived from `seed`.
    pub fn sim_config(&self, seed: u64) -> Result<SimPlantConfig> {
        let nominal = self.params()?;
        let base = if self.noise {
            SimPlantConfig::noisy(nominal, self.shots, plant_seed(seed))
        } else {
            SimPlantConfig { repetitions: self.shots, ..SimPlantConfig::noiseless(nominal) }
        };
        let cfg = base.with_perturbation(self.amp_scale, self.detuning_offset_rel * self.rabi_mhz);
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Seed of the plant's measurement noise for a run seeded with `seed`.
pub fn plant_seed(seed: u64) -> u64 {
    seed::derive(seed, &[0x0050_4c41_4e54])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSection {
    pub durations_rel: Vec<f64>,
    pub detunings_rel: Vec<f64>,
    pub runs: usize,
    pub master_seed: u64,
    /// 0 means one worker per core.
    pub workers: usize,
}

impl Default for ScanSection {
    fn default() -> Self {
        Self {
            durations_rel: vec![0.5, 0.75, 1.0, 1.25, 1.5, 2.0, 2.5, 3.0],
            detunings_rel: vec![0.0, 0.2, 0.5, 1.0, 2.0, 4.0, 6.0, 10.0],
            runs: 20,
            master_seed: 0,
            workers: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub plant: PlantSection,
    pub dcrab: DcrabConfig,
    pub scan: ScanSection,
    pub output: OutputSection,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::NotFound(path.to_path_buf()));
        }
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn scan_spec(&self) -> ScanSpec {
        ScanSpec {
            durations_rel: self.scan.durations_rel.clone(),
            detunings_rel: self.scan.detunings_rel.clone(),
            runs: self.scan.runs,
            dcrab: self.dcrab,
            master_seed: self.scan.master_seed,
            rabi_mhz: self.plant.rabi_mhz,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |e: Error| Error::Config(e.to_string());
        self.plant.sim_config(self.dcrab.seed).map_err(cfg_err)?;
        self.dcrab.validate().map_err(cfg_err)?;
        let s = &self.scan;
        if s.durations_rel.is_empty() || s.detunings_rel.is_empty() {
            return Err(Error::Config("scan grids must be non-empty".into()));
        }
        if s.durations_rel.iter().chain(&s.detunings_rel).any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Config("scan grid values must be finite and >= 0".into()));
        }
        if s.durations_rel.contains(&0.0) {
            return Err(Error::Config("scan durations must be positive".into()));
        }
        if s.runs == 0 {
            return Err(Error::Config("scan needs at least one run per cell".into()));
        }
        Ok(())
    }
}
