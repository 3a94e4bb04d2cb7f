//! Dressed chopped-random-basis (DCRAB) pulse optimisation.
//!
//! Each super-iteration draws a fresh randomised basis term, optimises its
//! zero-initialised coefficients with Nelder-Mead and then freezes them.
//! Because the new term starts at zero, the first pulse of a super-iteration
//! is exactly the best pulse of the previous one.

pub mod basis;
pub mod nelder_mead;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use basis::{assemble_pulse, draw_basis, BasisTerm, DcrabLedger, GuessPulse, Window};
pub use nelder_mead::{nelder_mead, NelderMeadOptions, StopReason};

use crate::error::{invalid, Result};
use crate::plant::Plant;
use crate::qubit::{pulse_propagator, PlantParams, PulseWaveform, DEFAULT_SAMPLES};
use crate::tomography::{
    exact_gate_fidelity, exact_state_transfer_fidelity, gate_fom, gate_g, state_transfer_fom, FidelityEstimate,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DcrabConfig {
    /// Frequency components per super-iteration (N).
    pub components: usize,
    /// Super-iterations (K).
    pub super_iterations: usize,
    /// Evaluation budget per super-iteration (J).
    pub evals_per_super_iteration: usize,
    pub target_fidelity: f64,
    pub simplex_tol: f64,
    /// Initial simplex offset (A).
    pub initial_scale: f64,
    pub seed: u64,
    pub guess: GuessPulse,
    pub samples: usize,
    /// Re-measure the best pulse once after the run.
    pub verify_best: bool,
}

impl Default for DcrabConfig {
    fn default() -> Self {
        Self {
            components: 1,
            super_iterations: 6,
            evals_per_super_iteration: 40,
            target_fidelity: 0.999,
            simplex_tol: 1e-4,
            initial_scale: 1.0,
            seed: 0,
            guess: GuessPulse::default(),
            samples: DEFAULT_SAMPLES,
            verify_best: false,
        }
    }
}

impl DcrabConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.components < 1 {
            return Err(invalid("N must be at least 1"));
        }
        if self.super_iterations < 1 {
            return Err(invalid("K must be at least 1"));
        }
        let need = 4 * self.components + 1;
        if self.evals_per_super_iteration < need {
            return Err(invalid(format!("J must be at least 4N + 1 = {need}, got {}", self.evals_per_super_iteration)));
        }
        if !(self.target_fidelity > 0.0 && self.target_fidelity <= 1.0) {
            return Err(invalid(format!("target fidelity must lie in (0, 1], got {}", self.target_fidelity)));
        }
        if !(self.simplex_tol.is_finite() && self.simplex_tol >= 0.0) {
            return Err(invalid("simplex tolerance must be finite and non-negative"));
        }
        if !(self.initial_scale.is_finite() && self.initial_scale != 0.0) {
            return Err(invalid("initial coefficient scale must be finite and non-zero"));
        }
        if !(self.guess.re.is_finite() && self.guess.im.is_finite()) {
            return Err(invalid("guess pulse must be finite"));
        }
        if self.samples < 2 {
            return Err(invalid("pulses need at least two samples"));
        }
        Ok(())
    }
}

/// Which figure of merit the loop maximises.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FomKind {
    /// Population of |−1⟩ after starting in |0⟩.
    StateTransfer,
    /// Average gate fidelity against G = (𝟙 − iσx)/√2.
    GateG,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoopKind {
    ClosedLoop,
    OpenLoop,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataKind {
    /// Measured on a (simulated) plant through tomography.
    ExperimentalSim,
    /// Exact evaluation of the model.
    Theoretical,
}

/// One objective evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub index: usize,
    pub super_iteration: usize,
    pub coefficients: Vec<f64>,
    /// Measured value (the internal algorithmic figure of merit).
    pub fom: f64,
    pub sigma: f64,
    pub running_best: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuperIterationSummary {
    pub index: usize,
    pub omega_x: Vec<f64>,
    pub omega_y: Vec<f64>,
    pub best_coefficients: Vec<f64>,
    pub best_fom: f64,
    pub evaluations: usize,
    pub stop: StopReason,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub loop_kind: LoopKind,
    pub data_kind: DataKind,
    pub fom_kind: FomKind,
    pub params: PlantParams,
    pub best: FidelityEstimate,
    pub best_pulse: PulseWaveform,
    /// Ledger whose stored coefficients reproduce `best_pulse`.
    pub best_ledger: DcrabLedger,
    /// Final ledger, all terms frozen.
    pub ledger: DcrabLedger,
    pub trace: Vec<TraceRecord>,
    pub super_iterations: Vec<SuperIterationSummary>,
    pub target_reached: bool,
    pub verified: Option<FidelityEstimate>,
}

impl OptimizationResult {
    pub fn evaluations(&self) -> usize {
        self.trace.len()
    }

    /// Running best after the first `n` evaluations.
    pub fn best_within(&self, n: usize) -> f64 {
        self.trace.iter().take(n).map(|r| r.fom).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Runs DCRAB against an arbitrary pulse evaluator. Evaluation errors
/// score 0 and are logged.
pub fn optimize<E>(
    params: &PlantParams,
    fom_kind: FomKind,
    config: &DcrabConfig,
    kinds: (LoopKind, DataKind),
    mut evaluate: E,
) -> Result<OptimizationResult>
where
    E: FnMut(&PulseWaveform) -> Result<FidelityEstimate>,
{
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut ledger = DcrabLedger::new(config.samples, config.guess);
    let mut trace: Vec<TraceRecord> = Vec::new();
    let mut summaries = Vec::new();
    let mut best: Option<(FidelityEstimate, PulseWaveform, DcrabLedger)> = None;
    let mut target_reached = false;

    let mut score = |ledger: &DcrabLedger, coeffs: &[f64], si: usize, trace: &mut Vec<TraceRecord>| -> f64 {
        let pulse = assemble_pulse(ledger, coeffs, params);
        let outcome = match &pulse {
            Ok(p) => evaluate(p),
            Err(e) => Err(crate::Error::Contract(e.to_string())),
        };
        let est = outcome.unwrap_or_else(|e| {
            log::warn!("evaluation {} failed, scored 0: {e}", trace.len());
            FidelityEstimate::failed()
        });
        let prev = trace.last().map_or(f64::NEG_INFINITY, |r| r.running_best);
        if est.value > prev {
            if let Ok(p) = pulse {
                best = Some((est, p, ledger.snapshot(coeffs).expect("coefficient length checked")));
            }
        }
        trace.push(TraceRecord {
            index: trace.len(),
            super_iteration: si,
            coefficients: coeffs.to_vec(),
            fom: est.value,
            sigma: est.sigma,
            running_best: prev.max(est.value),
        });
        est.value
    };

    for si in 0..config.super_iterations {
        let term = draw_basis(config.components, params.duration_us, &mut rng)?;
        let dim = term.dimension();
        ledger.active = Some(term);
        let opts = NelderMeadOptions::new(config.initial_scale, config.evals_per_super_iteration, config.simplex_tol)
            .with_target(config.target_fidelity);
        let start = trace.len();
        let out = nelder_mead(|c: &[f64]| score(&ledger, c, si, &mut trace), &vec![0.0; dim], &opts)?;
        let term = ledger.active.as_ref().expect("active term");
        summaries.push(SuperIterationSummary {
            index: si,
            omega_x: term.omega_x.clone(),
            omega_y: term.omega_y.clone(),
            best_coefficients: out.best_x.clone(),
            best_fom: out.best_fom,
            evaluations: trace.len() - start,
            stop: out.stop,
        });
        log::debug!("super-iteration {si}: best {:.6} after {} evaluations ({:?})", out.best_fom, trace.len() - start, out.stop);
        ledger.freeze(&out.best_x)?;
        if out.stop == StopReason::Target {
            target_reached = true;
            break;
        }
    }

    let (best, best_pulse, best_ledger) = match best {
        Some(b) => b,
        None => {
            let pulse = ledger.pulse(params)?;
            (FidelityEstimate::failed(), pulse, ledger.clone())
        }
    };
    let verified = if config.verify_best {
        Some(evaluate(&best_pulse).unwrap_or_else(|e| {
            log::warn!("verification of the best pulse failed: {e}");
            FidelityEstimate::failed()
        }))
    } else {
        None
    };
    Ok(OptimizationResult {
        loop_kind: kinds.0,
        data_kind: kinds.1,
        fom_kind,
        params: *params,
        best,
        best_pulse,
        best_ledger,
        ledger,
        trace,
        super_iterations: summaries,
        target_reached,
        verified,
    })
}

/// Closed-loop optimisation on a plant; every evaluation goes through
/// state tomography.
pub fn run_dcrab<P: Plant + ?Sized>(plant: &mut P, fom: FomKind, config: &DcrabConfig) -> Result<OptimizationResult> {
    let params = *plant.nominal();
    let reps = plant.repetitions();
    let target = gate_g();
    optimize(&params, fom, config, (LoopKind::ClosedLoop, DataKind::ExperimentalSim), |pulse| match fom {
        FomKind::StateTransfer => state_transfer_fom(plant, pulse, reps),
        FomKind::GateG => gate_fom(plant, pulse, &target, reps),
    })
}

/// Optimisation against the exact model at `params`.
pub fn run_dcrab_open_loop(params: &PlantParams, fom: FomKind, config: &DcrabConfig) -> Result<OptimizationResult> {
    optimize(params, fom, config, (LoopKind::OpenLoop, DataKind::Theoretical), |pulse| {
        Ok(evaluate_pulse_open_loop(pulse, params, fom))
    })
}

/// Exact, noiseless figure of merit of `pulse` under `params`.
pub fn evaluate_pulse_open_loop(pulse: &PulseWaveform, params: &PlantParams, fom: FomKind) -> FidelityEstimate {
    let u = pulse_propagator(pulse, params.rabi_mhz, params.detuning_mhz);
    FidelityEstimate::exact(match fom {
        FomKind::StateTransfer => exact_state_transfer_fidelity(&u),
        FomKind::GateG => exact_gate_fidelity(&u, &gate_g()),
    })
}
