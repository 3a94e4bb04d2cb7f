//! State tomography on a plant and the two figures of merit built on it.

use serde::{Deserialize, Serialize};

use super::fit::fit_rabi;
use super::mle::{mle_project, StateEstimate};
use crate::error::{invalid, Result};
use crate::plant::{default_rabi_times, run_rabi_scan, Axis, Plant, Preparation};
use crate::qubit::{ComplexMat2, DensityMatrix, PulseWaveform};
use crate::Complex64;

/// Figure-of-merit value with its error bar.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityEstimate {
    /// Clamped to [0, 1].
    pub value: f64,
    pub sigma: f64,
    /// Number of state tomographies consumed.
    pub evaluations: u32,
}

impl FidelityEstimate {
    pub fn new(value: f64, sigma: f64, evaluations: u32) -> Self {
        let value = if value.is_nan() { 0.0 } else { value.clamp(0.0, 1.0) };
        Self { value, sigma: sigma.max(0.0), evaluations }
    }

    /// Exact, tomography-free value.
    pub fn exact(value: f64) -> Self {
        Self::new(value, 0.0, 0)
    }

    pub fn failed() -> Self {
        Self::new(0.0, 0.0, 0)
    }
}

/// Reconstructs the plant's current post-sequence state from x and y Rabi
/// scans over the default time grid.
pub fn state_tomography<P: Plant + ?Sized>(plant: &mut P, repetitions: u64) -> Result<StateEstimate> {
    let times = default_rabi_times(plant.nominal().rabi_mhz);
    state_tomography_with(plant, &times, repetitions)
}

pub fn state_tomography_with<P: Plant + ?Sized>(plant: &mut P, times: &[f64], repetitions: u64) -> Result<StateEstimate> {
    let x = run_rabi_scan(plant, Axis::X, times, repetitions)?;
    let y = run_rabi_scan(plant, Axis::Y, times, repetitions)?;
    let fit = fit_rabi(&x, &y, times, plant.nominal().rabi_mhz)?;
    Ok(mle_project(&fit))
}

/// F = ρ_{−1,−1} ± σ after applying `pulse` to |0⟩.
pub fn state_transfer_fom<P: Plant + ?Sized>(plant: &mut P, pulse: &PulseWaveform, repetitions: u64) -> Result<FidelityEstimate> {
    plant.prepare(Preparation::Psi1);
    plant.apply(pulse)?;
    let est = state_tomography(plant, repetitions)?;
    Ok(FidelityEstimate::new(est.rho.a(), est.sigma, 1))
}

/// Gate fidelity averaged over ψ₁…ψ₄: each input is prepared, the pulse
/// and then the ideal inverse gate are applied, and the population of the
/// input state is read from state tomography.
pub fn gate_fom<P: Plant + ?Sized>(
    plant: &mut P,
    pulse: &PulseWaveform,
    ideal_gate: &ComplexMat2,
    repetitions: u64,
) -> Result<FidelityEstimate> {
    if !ideal_gate.is_unitary(1e-9) {
        return Err(invalid("ideal gate must be unitary"));
    }
    let inverse = ideal_gate.adjoint();
    let mut value = 0.0;
    let mut sigma = 0.0;
    for prep in Preparation::ALL {
        plant.prepare(prep);
        plant.apply(pulse)?;
        plant.apply_ideal(&inverse)?;
        let est = state_tomography(plant, repetitions)?;
        value += est.rho.expectation(prep.ket());
        sigma += est.sigma;
    }
    Ok(FidelityEstimate::new(value / 4.0, sigma / 4.0, 4))
}

/// G = (𝟙 − iσx)/√2, the gate calibrated by the gate demo.
pub fn gate_g() -> ComplexMat2 {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMat2::new(Complex64::new(h, 0.0), Complex64::new(0.0, -h), Complex64::new(0.0, -h), Complex64::new(h, 0.0))
}

/// Exact |−1⟩ population after `u` acts on |0⟩.
pub fn exact_state_transfer_fidelity(u: &ComplexMat2) -> f64 {
    u.get(1, 0).norm_sqr().clamp(0.0, 1.0)
}

/// Exact counterpart of [`gate_fom`] for a known propagator.
pub fn exact_gate_fidelity(u: &ComplexMat2, ideal_gate: &ComplexMat2) -> f64 {
    let v = ideal_gate.adjoint() * *u;
    let total: f64 = Preparation::ALL
        .iter()
        .map(|p| DensityMatrix::from_ket(p.ket()).expect("valid ket").transformed(&v).expectation(p.ket()))
        .sum();
    (total / 4.0).clamp(0.0, 1.0)
}
