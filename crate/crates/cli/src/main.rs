//! `autocal`: closed-loop calibration runs, robustness scans, open-loop
//! comparison and process tomography on a simulated spin qubit.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use autocal::harness::compare::write_comparison;
use autocal::harness::demo::{write_chi, write_run, MANIFEST_JSON};
use autocal::harness::io::write_json;
use autocal::harness::scan::write_scan;
use autocal::harness::{
    run_gate_demo, run_openloop_comparison, run_qpt, run_scan, run_state_transfer_demo, ChiReport, ComparisonTable,
    Manifest, Perturbation, RunConfig,
};
use autocal::{Error, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "autocal", version, about = "Closed-loop calibration of a simulated spin qubit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-loop optimisation of the |0> -> |-1> inversion.
    Invert(RunArgs),
    /// Closed-loop optimisation of the gate G, then process tomography of the best pulse.
    Gate(RunArgs),
    /// Open-loop robustness scan over T/T_pi and detuning.
    Scan(ScanArgs),
    /// Applies the nominal scan pulses to a miscalibrated plant and compares with closed-loop runs on it.
    CompareOpenloop(CompareArgs),
    /// Process tomography of a pulse file.
    Qpt(QptArgs),
}

#[derive(Args)]
struct PlantArgs {
    /// TOML file with [plant], [dcrab], [scan] and [output] sections; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Detuning in units of the Rabi frequency.
    #[arg(long)]
    detuning_rel: Option<f64>,
    #[arg(long)]
    rabi_mhz: Option<f64>,
    /// Enable binomial shot noise on the readout.
    #[arg(long)]
    noise: bool,
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    plant: PlantArgs,
    /// Pulse duration in units of T_pi.
    #[arg(long)]
    dt_rel: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    super_iterations: Option<usize>,
    /// Evaluation budget per super-iteration.
    #[arg(long)]
    evals: Option<usize>,
    /// Re-measure the best pulse once at the end.
    #[arg(long)]
    verify: bool,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    master_seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Output directory of a finished scan.
    #[arg(long)]
    scan: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    amp_scale: f64,
    /// Extra true detuning in units of the nominal Rabi frequency.
    #[arg(long, default_value_t = 0.0)]
    detuning_offset_rel: f64,
    /// Scan duration whose pulses are compared.
    #[arg(long, default_value_t = 1.5)]
    dt_rel: f64,
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Defaults to the scan directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct QptArgs {
    #[command(flatten)]
    plant: PlantArgs,
    #[arg(long)]
    pulse: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn apply_plant(cfg: &mut RunConfig, a: &PlantArgs) {
    if let Some(v) = a.detuning_rel {
        cfg.plant.detuning_rel = v;
    }
    if let Some(v) = a.rabi_mhz {
        cfg.plant.rabi_mhz = v;
    }
    if a.noise {
        cfg.plant.noise = true;
    }
    if let Some(v) = a.shots {
        cfg.plant.shots = v;
    }
    if let Some(v) = &a.out {
        cfg.output.dir = v.clone();
    }
}

fn run_config(a: &RunArgs, default_dt_rel: f64) -> Result<RunConfig> {
    let mut cfg = load_config(a.plant.config.as_deref())?;
    if a.plant.config.is_none() {
        cfg.plant.duration_rel = default_dt_rel;
    }
    apply_plant(&mut cfg, &a.plant);
    if let Some(v) = a.dt_rel {
        cfg.plant.duration_rel = v;
    }
    if let Some(v) = a.seed {
        cfg.dcrab.seed = v;
    }
    if let Some(v) = a.super_iterations {
        cfg.dcrab.super_iterations = v;
    }
    if let Some(v) = a.evals {
        cfg.dcrab.evals_per_super_iteration = v;
    }
    if a.verify {
        cfg.dcrab.verify_best = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn invert(a: &RunArgs) -> Result<()> {
    let cfg = run_config(a, 1.5)?;
    let result = run_state_transfer_demo(&cfg)?;
    let manifest = Manifest::new("invert", &cfg, cfg.plant.sim_config(cfg.dcrab.seed)?);
    write_run(&cfg.output.dir, &result, &manifest)?;
    println!(
        "best state-transfer fidelity {:.6} ± {:.6} after {} evaluations",
        result.best.value,
        result.best.sigma,
        result.evaluations()
    );
    if let Some(v) = result.verified {
        println!("verified {:.6} ± {:.6}", v.value, v.sigma);
    }
    println!("outputs in {}", cfg.output.dir.display());
    Ok(())
}

fn print_chi(report: &ChiReport) {
    for (title, m) in [("Re chi", &report.real), ("Im chi", &report.imag)] {
        println!("{title:<8}{}", report.basis.iter().map(|b| format!("{b:>8}")).collect::<String>());
        for (label, row) in report.basis.iter().zip(m) {
            println!("{label:<8}{}", row.iter().map(|v| format!("{v:>8.3}")).collect::<String>());
        }
    }
    println!("max |chi - chi_G| = {:.4}", report.max_deviation_from_target);
}

fn gate(a: &RunArgs) -> Result<()> {
    let cfg = run_config(a, 1.0)?;
    let (result, report) = run_gate_demo(&cfg)?;
    let manifest = Manifest::new("gate", &cfg, cfg.plant.sim_config(cfg.dcrab.seed)?);
    write_run(&cfg.output.dir, &result, &manifest)?;
    write_chi(&cfg.output.dir, &report)?;
    println!(
        "best gate fidelity {:.6} ± {:.6} after {} evaluations",
        result.best.value,
        result.best.sigma,
        result.evaluations()
    );
    print_chi(&report);
    println!("outputs in {}", cfg.output.dir.display());
    Ok(())
}

fn scan(a: &ScanArgs) -> Result<()> {
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(v) = a.workers {
        cfg.scan.workers = v;
    }
    if let Some(v) = a.runs {
        cfg.scan.runs = v;
    }
    if let Some(v) = a.master_seed {
        cfg.scan.master_seed = v;
    }
    if let Some(v) = &a.out {
        cfg.output.dir = v.clone();
    }
    cfg.validate()?;
    let spec = cfg.scan_spec();
    spec.validate().map_err(|e| Error::Config(e.to_string()))?;
    let result = run_scan(&spec, cfg.scan.workers)?;
    write_scan(&cfg.output.dir, &result)?;
    write_json(&cfg.output.dir.join(MANIFEST_JSON), &ScanManifest { command: "scan", config: &cfg })?;
    println!("{:>8} {:>8} {:>9} {:>9} {:>9}", "T/T_pi", "D/Omega", "mean", "std", "best");
    for c in &result.cells {
        println!(
            "{:>8.3} {:>8.3} {:>9.5} {:>9.5} {:>9.5}",
            c.duration_rel, c.detuning_rel, c.mean, c.std, c.best
        );
    }
    println!("outputs in {}", cfg.output.dir.display());
    Ok(())
}

#[derive(Serialize)]
struct ScanManifest<'a> {
    command: &'static str,
    config: &'a RunConfig,
}

#[derive(Serialize)]
struct CompareManifest<'a> {
    command: &'static str,
    scan: &'a Path,
    table: &'a ComparisonTable,
}

fn compare(a: &CompareArgs) -> Result<()> {
    let perturbation = Perturbation { amp_scale: a.amp_scale, detuning_offset_rel: a.detuning_offset_rel };
    if !(a.amp_scale.is_finite() && a.amp_scale > 0.0 && a.detuning_offset_rel.is_finite()) {
        return Err(Error::Config("perturbation must be finite with a positive amplitude scale".into()));
    }
    let table = run_openloop_comparison(&a.scan, a.dt_rel, &perturbation, a.workers)?;
    let out = a.out.clone().unwrap_or_else(|| a.scan.clone());
    std::fs::create_dir_all(&out)?;
    write_comparison(&out.join("comparison.csv"), &table)?;
    write_json(
        &out.join("comparison_manifest.json"),
        &CompareManifest { command: "compare-openloop", scan: &a.scan, table: &table },
    )?;
    println!("{:>8} {:>9} {:>16} {:>16}", "D/Omega", "nominal", "open loop", "closed loop");
    for r in &table.rows {
        println!(
            "{:>8.3} {:>9.5} {:>8.5} ± {:<5.3} {:>8.5} ± {:<5.3}",
            r.detuning_rel, r.nominal_mean, r.open_loop_mean, r.open_loop_std, r.closed_loop_mean, r.closed_loop_std
        );
    }
    println!("outputs in {}", out.display());
    Ok(())
}

fn qpt(a: &QptArgs) -> Result<()> {
    let mut cfg = load_config(a.plant.config.as_deref())?;
    apply_plant(&mut cfg, &a.plant);
    if let Some(v) = a.seed {
        cfg.dcrab.seed = v;
    }
    let (pulse, report) = run_qpt(&cfg, &a.pulse)?;
    let mut resolved = cfg.clone();
    resolved.plant.duration_rel = pulse.duration() * 2.0 * cfg.plant.rabi_mhz;
    write_chi(&cfg.output.dir, &report)?;
    let manifest = Manifest::new("qpt", &resolved, resolved.plant.sim_config(resolved.dcrab.seed)?);
    write_json(&cfg.output.dir.join(MANIFEST_JSON), &manifest)?;
    print_chi(&report);
    println!("outputs in {}", cfg.output.dir.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Invert(a) => invert(a),
        Command::Gate(a) => gate(a),
        Command::Scan(a) => scan(a),
        Command::CompareOpenloop(a) => compare(a),
        Command::Qpt(a) => qpt(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { EXIT_CONFIG } else { EXIT_RUNTIME })
        }
    }
}
