//! Transfer of nominally optimised pulses to a miscalibrated plant, against
//! closed-loop optimisation on that plant.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scan::{mean_std, read_scan, RunRecord, ScanSpec};
use crate::dcrab::{evaluate_pulse_open_loop, run_dcrab, FomKind};
use crate::error::{Error, Result};
use crate::plant::{SimPlant, SimPlantConfig};
use crate::qubit::PlantParams;

pub const COMPARISON_CSV: &str = "comparison.csv";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub amp_scale: f64,
    /// In units of the nominal Rabi frequency.
    pub detuning_offset_rel: f64,
}

impl Perturbation {
    pub fn none() -> Self {
        Self { amp_scale: 1.0, detuning_offset_rel: 0.0 }
    }

    pub fn plant(&self, nominal: PlantParams) -> Result<SimPlantConfig> {
        let cfg = SimPlantConfig::noiseless(nominal)
            .with_perturbation(self.amp_scale, self.detuning_offset_rel * nominal.rabi_mhz);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub detuning_rel: f64,
    /// Fidelity recorded by the nominal scan.
    pub nominal_mean: f64,
    pub open_loop_mean: f64,
    pub open_loop_std: f64,
    pub closed_loop_mean: f64,
    pub closed_loop_std: f64,
    pub runs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub duration_rel: f64,
    pub perturbation: Perturbation,
    pub rows: Vec<ComparisonRow>,
}

struct Pair {
    open: f64,
    closed: f64,
}

fn compare_run(spec: &ScanSpec, rec: &RunRecord, perturbation: &Perturbation, closed_loop: bool) -> Result<Pair> {
    let nominal = PlantParams::from_relative(spec.rabi_mhz, rec.detuning_rel, rec.duration_rel)?;
    let plant_cfg = perturbation.plant(nominal)?;
    let open = match &rec.ledger {
        Some(ledger) => {
            let pulse = ledger.pulse(&nominal)?;
            evaluate_pulse_open_loop(&pulse, &plant_cfg.true_params()?, FomKind::StateTransfer).value
        }
        None => 0.0,
    };
    let closed = if closed_loop {
        let mut plant = SimPlant::new(plant_cfg)?;
        run_dcrab(&mut plant, FomKind::StateTransfer, &spec.dcrab.with_seed(rec.seed))?.best.value
    } else {
        f64::NAN
    };
    Ok(Pair { open, closed })
}

/// Compares, per detuning, the nominal pulses of the scan cells at
/// `duration_rel` applied open-loop to the perturbed plant with fresh
/// closed-loop optimisations on it (same seeds and settings).
pub fn compare_records(
    spec: &ScanSpec,
    records: &[RunRecord],
    duration_rel: f64,
    perturbation: &Perturbation,
    closed_loop: bool,
    workers: usize,
) -> Result<ComparisonTable> {
    let selected: Vec<&RunRecord> =
        records.iter().filter(|r| (r.duration_rel - duration_rel).abs() < 1e-12).collect();
    if selected.is_empty() {
        return Err(Error::Config(format!("scan has no runs at T/T_pi = {duration_rel}")));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let pairs: Vec<Pair> = pool.install(|| {
        selected.par_iter().map(|r| compare_run(spec, r, perturbation, closed_loop)).collect::<Result<_>>()
    })?;

    let mut detunings: Vec<f64> = selected.iter().map(|r| r.detuning_rel).collect();
    detunings.sort_by(f64::total_cmp);
    detunings.dedup();
    let rows = detunings
        .into_iter()
        .map(|d| {
            let idx: Vec<usize> = (0..selected.len()).filter(|&k| selected[k].detuning_rel == d).collect();
            let nominal: Vec<f64> = idx.iter().map(|&k| selected[k].fidelity).collect();
            let open: Vec<f64> = idx.iter().map(|&k| pairs[k].open).collect();
            let closed: Vec<f64> = idx.iter().map(|&k| pairs[k].closed).collect();
            let (open_loop_mean, open_loop_std) = mean_std(&open);
            let (closed_loop_mean, closed_loop_std) = mean_std(&closed);
            ComparisonRow {
                detuning_rel: d,
                nominal_mean: mean_std(&nominal).0,
                open_loop_mean,
                open_loop_std,
                closed_loop_mean,
                closed_loop_std,
                runs: idx.len(),
            }
        })
        .collect();
    Ok(ComparisonTable { duration_rel, perturbation: *perturbation, rows })
}

/// [`compare_records`] on the artifacts of a scan directory.
pub fn run_openloop_comparison(
    scan_dir: &Path,
    duration_rel: f64,
    perturbation: &Perturbation,
    workers: usize,
) -> Result<ComparisonTable> {
    let (spec, records) = read_scan(scan_dir)?;
    compare_records(&spec, &records, duration_rel, perturbation, true, workers)
}

pub fn write_comparison(path: &Path, table: &ComparisonTable) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in &table.rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
