//! The experiment as seen by the closed loop.
//!
//! A [`Plant`] is driven through a preparation, a sequence of operations and
//! a population measurement. Measurements replay the recorded sequence, so a
//! readout rotation appended to one measurement does not disturb the stored
//! post-sequence state; this is what a Rabi scan needs, where every time
//! point re-runs the same preparation and pulse.
//!
//! [`SimPlant`] is the simulated implementation. Its true parameters may be
//! offset from the nominal ones the optimiser knows about.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::distributions::{Bernoulli, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::qubit::{
    check_duration, constant_propagator, population, pulse_propagator, ComplexMat2, DensityMatrix, Level,
    PlantParams, PulseWaveform,
};

/// Default shot count per measurement; σ ≈ 0.005 at p = 0.5.
pub const DEFAULT_REPETITIONS: u64 = 10_000;

/// Default number of points in a Rabi scan.
pub const DEFAULT_RABI_POINTS: usize = 41;

/// The four input states ψ₁…ψ₄ used for gate fidelity and process
/// tomography.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Preparation {
    /// |0⟩
    Psi1,
    /// |−1⟩
    Psi2,
    /// (|0⟩ − i|−1⟩)/√2
    Psi3,
    /// (|0⟩ + |−1⟩)/√2
    Psi4,
}

impl Preparation {
    pub const ALL: [Preparation; 4] = [Self::Psi1, Self::Psi2, Self::Psi3, Self::Psi4];

    /// Amplitudes `[⟨0|ψ⟩, ⟨−1|ψ⟩]`.
    pub fn ket(self) -> [Complex64; 2] {
        let h = FRAC_1_SQRT_2;
        match self {
            Self::Psi1 => [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            Self::Psi2 => [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
            Self::Psi3 => [Complex64::new(h, 0.0), Complex64::new(0.0, -h)],
            Self::Psi4 => [Complex64::new(h, 0.0), Complex64::new(h, 0.0)],
        }
    }

    pub fn density(self) -> DensityMatrix {
        match self {
            Self::Psi1 => DensityMatrix::ground(),
            Self::Psi2 => DensityMatrix::excited(),
            Self::Psi3 => DensityMatrix::from_entries(0.5, 0.0, 0.5, 0.5).expect("valid"),
            Self::Psi4 => DensityMatrix::from_entries(0.5, 0.5, 0.0, 0.5).expect("valid"),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Rotation axis of a tomography readout drive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

/// A resonant constant readout drive applied just before measuring.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Readout {
    pub axis: Axis,
    pub duration_us: f64,
}

/// Closed-loop view of an experiment.
pub trait Plant {
    /// Parameters the controller believes in.
    fn nominal(&self) -> &PlantParams;

    /// Starts a new sequence from one of the calibrated input states.
    fn prepare(&mut self, prep: Preparation);

    /// Appends a shaped pulse to the sequence.
    fn apply(&mut self, pulse: &PulseWaveform) -> Result<()>;

    /// Appends a calibrated (ideal) unitary operation.
    fn apply_ideal(&mut self, gate: &ComplexMat2) -> Result<()>;

    /// Measures the population of `level` after the recorded sequence,
    /// optionally followed by a readout rotation.
    fn measure(&mut self, readout: Option<Readout>, level: Level, repetitions: u64) -> Result<f64>;

    fn measure_population(&mut self, level: Level, repetitions: u64) -> Result<f64> {
        self.measure(None, level, repetitions)
    }

    /// Shots per measurement the plant is configured for.
    fn repetitions(&self) -> u64 {
        DEFAULT_REPETITIONS
    }
}

/// Configuration of the simulated plant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimPlantConfig {
    pub nominal: PlantParams,
    /// True detuning = nominal + offset (MHz).
    pub detuning_offset_mhz: f64,
    /// True Rabi frequency = nominal × scale.
    pub amplitude_scale: f64,
    /// Return exact probabilities instead of binomial estimates.
    pub noiseless: bool,
    pub repetitions: u64,
    pub seed: u64,
}

impl SimPlantConfig {
    pub fn noiseless(nominal: PlantParams) -> Self {
        Self {
            nominal,
            detuning_offset_mhz: 0.0,
            amplitude_scale: 1.0,
            noiseless: true,
            repetitions: DEFAULT_REPETITIONS,
            seed: 0,
        }
    }

    pub fn noisy(nominal: PlantParams, repetitions: u64, seed: u64) -> Self {
        Self { noiseless: false, repetitions, seed, ..Self::noiseless(nominal) }
    }

    pub fn with_perturbation(mut self, amplitude_scale: f64, detuning_offset_mhz: f64) -> Self {
        self.amplitude_scale = amplitude_scale;
        self.detuning_offset_mhz = detuning_offset_mhz;
        self
    }

    /// Parameters the qubit actually experiences.
    pub fn true_params(&self) -> Result<PlantParams> {
        PlantParams::new(
            self.nominal.rabi_mhz * self.amplitude_scale,
            self.nominal.detuning_mhz + self.detuning_offset_mhz,
            self.nominal.duration_us,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude_scale.is_finite() && self.amplitude_scale > 0.0) {
            return Err(invalid(format!("amplitude scale must be positive, got {}", self.amplitude_scale)));
        }
        if !self.detuning_offset_mhz.is_finite() {
            return Err(invalid("detuning offset must be finite"));
        }
        if !self.noiseless && self.repetitions == 0 {
            return Err(invalid("a noisy plant needs at least one repetition"));
        }
        self.true_params().map(|_| ())
    }
}

/// Simulated single-spin experiment.
#[derive(Clone, Debug)]
pub struct SimPlant {
    config: SimPlantConfig,
    truth: PlantParams,
    state: Option<DensityMatrix>,
    rng: ChaCha8Rng,
}

impl SimPlant {
    pub fn new(config: SimPlantConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            truth: config.true_params()?,
            config,
            state: None,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
        })
    }

    pub fn config(&self) -> &SimPlantConfig {
        &self.config
    }

    pub fn truth(&self) -> &PlantParams {
        &self.truth
    }

    /// The current post-sequence state, if prepared.
    pub fn state(&self) -> Option<&DensityMatrix> {
        self.state.as_ref()
    }

    /// Places the plant in an arbitrary state (test and oracle use).
    pub fn set_state(&mut self, rho: DensityMatrix) {
        self.state = Some(rho);
    }

    fn current(&self) -> Result<DensityMatrix> {
        self.state.ok_or_else(|| Error::Contract("plant has not been prepared".into()))
    }

    fn sample(&mut self, p: f64, repetitions: u64) -> Result<f64> {
        if self.config.noiseless {
            return Ok(p);
        }
        if repetitions == 0 {
            return Err(invalid("noisy measurement needs at least one repetition"));
        }
        // Integer-threshold Bernoulli draws keep the sampling path free of
        // platform-dependent floating point.
        let coin = Bernoulli::new(p).map_err(|e| invalid(e.to_string()))?;
        let hits = (0..repetitions).filter(|_| coin.sample(&mut self.rng)).count();
        Ok(hits as f64 / repetitions as f64)
    }
}

impl Plant for SimPlant {
    fn nominal(&self) -> &PlantParams {
        &self.config.nominal
    }

    fn prepare(&mut self, prep: Preparation) {
        self.state = Some(prep.density());
    }

    fn repetitions(&self) -> u64 {
        self.config.repetitions
    }

    fn apply(&mut self, pulse: &PulseWaveform) -> Result<()> {
        let rho = self.current()?;
        check_duration(pulse, &self.truth)?;
        let u = pulse_propagator(pulse, self.truth.rabi_mhz, self.truth.detuning_mhz);
        self.state = Some(rho.transformed(&u));
        Ok(())
    }

    fn apply_ideal(&mut self, gate: &ComplexMat2) -> Result<()> {
        let rho = self.current()?;
        if !gate.is_unitary(1e-9) {
            return Err(invalid("ideal operation must be unitary"));
        }
        self.state = Some(rho.transformed(gate));
        Ok(())
    }

    fn measure(&mut self, readout: Option<Readout>, level: Level, repetitions: u64) -> Result<f64> {
        let mut rho = self.current()?;
        if let Some(r) = readout {
            if !(r.duration_us.is_finite() && r.duration_us >= 0.0) {
                return Err(invalid(format!("readout duration must be >= 0, got {}", r.duration_us)));
            }
            let (x, y) = match r.axis {
                Axis::X => (1.0, 0.0),
                Axis::Y => (0.0, 1.0),
            };
            let u = constant_propagator(x, y, self.truth.rabi_mhz, 0.0, r.duration_us);
            rho = rho.transformed(&u);
        }
        self.sample(population(&rho, level), repetitions)
    }
}

/// Evenly spaced Rabi-scan times covering two nominal Rabi periods.
pub fn default_rabi_times(rabi_mhz: f64) -> Vec<f64> {
    let span = 2.0 / rabi_mhz;
    let n = DEFAULT_RABI_POINTS;
    (0..n).map(|i| span * i as f64 / (n - 1) as f64).collect()
}

/// Samples P(|0⟩, t) after a resonant readout drive of duration t about
/// `axis`, re-running the stored sequence for every t.
pub fn run_rabi_scan<P: Plant + ?Sized>(plant: &mut P, axis: Axis, times: &[f64], repetitions: u64) -> Result<Vec<f64>> {
    if times.is_empty() {
        return Err(invalid("Rabi scan needs at least one time point"));
    }
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(invalid("Rabi scan times must be finite and non-negative"));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("Rabi scan times must be strictly increasing"));
    }
    times
        .iter()
        .map(|&t| plant.measure(Some(Readout { axis, duration_us: t }), Level::Zero, repetitions))
        .collect()
}
