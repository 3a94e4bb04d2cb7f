//! Robustness scan over (T/T_π, Δ/Ω) of open-loop state-transfer
//! optimisations against the exact model.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::io::{read_json, read_jsonl, write_json, write_jsonl};
use crate::dcrab::{run_dcrab_open_loop, DcrabConfig, DcrabLedger, FomKind};
use crate::error::{Error, Result};
use crate::qubit::PlantParams;
use crate::seed;

pub const SCAN_CSV: &str = "scan.csv";
pub const RUNS_JSONL: &str = "runs.jsonl";
pub const SCAN_MANIFEST: &str = "scan_manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanSpec {
    pub durations_rel: Vec<f64>,
    pub detunings_rel: Vec<f64>,
    pub runs: usize,
    pub dcrab: DcrabConfig,
    pub master_seed: u64,
    pub rabi_mhz: f64,
}

impl ScanSpec {
    pub fn validate(&self) -> Result<()> {
        if self.durations_rel.is_empty() || self.detunings_rel.is_empty() {
            return Err(Error::Config("scan grids must be non-empty".into()));
        }
        if self.durations_rel.iter().chain(&self.detunings_rel).any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Config("scan grid values must be finite and >= 0".into()));
        }
        if self.runs == 0 {
            return Err(Error::Config("scan needs at least one run per cell".into()));
        }
        self.dcrab.validate()?;
        for &t in &self.durations_rel {
            for &d in &self.detunings_rel {
                PlantParams::from_relative(self.rabi_mhz, d, t)?;
            }
        }
        Ok(())
    }

    /// Seed of run `run` in cell (`i`, `j`).
    pub fn run_seed(&self, i: usize, j: usize, run: usize) -> u64 {
        seed::derive(self.master_seed, &[i as u64, j as u64, run as u64])
    }
}

/// One optimisation of the scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub duration_rel: f64,
    pub detuning_rel: f64,
    pub run: usize,
    pub seed: u64,
    pub fidelity: f64,
    pub failed: bool,
    /// Reproduces the best pulse; absent for failed runs.
    pub ledger: Option<DcrabLedger>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanCell {
    pub duration_rel: f64,
    pub detuning_rel: f64,
    pub mean: f64,
    pub std: f64,
    pub best: f64,
    pub runs: usize,
    pub failed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub spec: ScanSpec,
    pub cells: Vec<ScanCell>,
    pub records: Vec<RunRecord>,
}

impl ScanResult {
    pub fn cell(&self, duration_rel: f64, detuning_rel: f64) -> Option<&ScanCell> {
        self.cells.iter().find(|c| c.duration_rel == duration_rel && c.detuning_rel == detuning_rel)
    }
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Runs every cell; `workers = 0` uses all cores. The result does not
/// depend on the worker count.
pub fn run_scan(spec: &ScanSpec, workers: usize) -> Result<ScanResult> {
    spec.validate()?;
    let jobs: Vec<(usize, usize, usize)> = (0..spec.durations_rel.len())
        .flat_map(|i| (0..spec.detunings_rel.len()).flat_map(move |j| (0..spec.runs).map(move |r| (i, j, r))))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let records: Vec<RunRecord> = pool.install(|| jobs.par_iter().map(|&(i, j, r)| scan_run(spec, i, j, r)).collect());

    let mut cells = Vec::new();
    for &t in &spec.durations_rel {
        for &d in &spec.detunings_rel {
            let rs: Vec<&RunRecord> = records.iter().filter(|r| r.duration_rel == t && r.detuning_rel == d).collect();
            let values: Vec<f64> = rs.iter().map(|r| r.fidelity).collect();
            let (mean, std) = mean_std(&values);
            cells.push(ScanCell {
                duration_rel: t,
                detuning_rel: d,
                mean,
                std,
                best: values.iter().copied().fold(0.0, f64::max),
                runs: rs.len(),
                failed: rs.iter().filter(|r| r.failed).count(),
            });
        }
    }
    Ok(ScanResult { spec: spec.clone(), cells, records })
}

fn scan_run(spec: &ScanSpec, i: usize, j: usize, run: usize) -> RunRecord {
    let (t, d) = (spec.durations_rel[i], spec.detunings_rel[j]);
    let seed = spec.run_seed(i, j, run);
    let outcome = PlantParams::from_relative(spec.rabi_mhz, d, t)
        .and_then(|p| run_dcrab_open_loop(&p, FomKind::StateTransfer, &spec.dcrab.with_seed(seed)));
    match outcome {
        Ok(r) => RunRecord {
            duration_rel: t,
            detuning_rel: d,
            run,
            seed,
            fidelity: r.best.value,
            failed: false,
            ledger: Some(r.best_ledger),
        },
        Err(e) => {
            log::warn!("scan run T/T_pi={t} detuning/Omega={d} #{run} failed: {e}");
            RunRecord { duration_rel: t, detuning_rel: d, run, seed, fidelity: 0.0, failed: true, ledger: None }
        }
    }
}

#[derive(Serialize)]
struct CsvRow {
    t_rel: f64,
    detuning_rel: f64,
    mean: f64,
    std: f64,
    best: f64,
}

/// Writes scan.csv, runs.jsonl and the scan manifest into `dir`.
pub fn write_scan(dir: &Path, result: &ScanResult) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join(SCAN_CSV))?;
    for c in &result.cells {
        w.serialize(CsvRow { t_rel: c.duration_rel, detuning_rel: c.detuning_rel, mean: c.mean, std: c.std, best: c.best })?;
    }
    w.flush()?;
    write_jsonl(&dir.join(RUNS_JSONL), &result.records)?;
    write_json(&dir.join(SCAN_MANIFEST), &result.spec)
}

/// Loads the scan settings and per-run records of a finished scan.
pub fn read_scan(dir: &Path) -> Result<(ScanSpec, Vec<RunRecord>)> {
    if !dir.is_dir() {
        return Err(Error::NotFound(dir.to_path_buf()));
    }
    Ok((read_json(&dir.join(SCAN_MANIFEST))?, read_jsonl(&dir.join(RUNS_JSONL))?))
}
