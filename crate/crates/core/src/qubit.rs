//! Two-level system: 2×2 complex algebra, spin operators, propagators and
//! piecewise-constant time evolution.
//!
//! Matrices are written in the level order (|0⟩, |−1⟩): index 0 is
//! |m_s = 0⟩ and index 1 is |m_s = −1⟩. The spin operators follow the
//! convention in which |−1⟩ is the +½ eigenstate of Ŝz, which in this
//! ordering reads Ŝx = σx/2, Ŝy = −σy/2, Ŝz = −σz/2. With it the x- and
//! y-Rabi curves used for tomography take their standard form
//! (see [`crate::tomography::fit`]).
//!
//! Units: frequencies in MHz, times in µs. A Rabi frequency Ω drives a
//! rotation at angular rate 2πΩ rad/µs.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const IM: Complex64 = Complex64::new(0.0, 1.0);

/// Allowed rounding slack on the |X + Y| ≤ 1 amplitude constraint.
pub const AMPLITUDE_TOL: f64 = 1e-12;

/// Default number of waveform samples per pulse.
pub const DEFAULT_SAMPLES: usize = 1000;

/// Dense 2×2 complex matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexMat2(pub [[Complex64; 2]; 2]);

impl ComplexMat2 {
    pub const fn new(m00: Complex64, m01: Complex64, m10: Complex64, m11: Complex64) -> Self {
        Self([[m00, m01], [m10, m11]])
    }

    pub const fn identity() -> Self {
        Self::new(ONE, ZERO, ZERO, ONE)
    }

    pub const fn zero() -> Self {
        Self::new(ZERO, ZERO, ZERO, ZERO)
    }

    pub const fn sigma_x() -> Self {
        Self::new(ZERO, ONE, ONE, ZERO)
    }

    pub const fn sigma_y() -> Self {
        Self::new(ZERO, Complex64::new(0.0, -1.0), IM, ZERO)
    }

    pub const fn sigma_z() -> Self {
        Self::new(ONE, ZERO, ZERO, Complex64::new(-1.0, 0.0))
    }

    pub fn spin_x() -> Self {
        Self::sigma_x().scale(0.5)
    }

    pub fn spin_y() -> Self {
        Self::sigma_y().scale(-0.5)
    }

    pub fn spin_z() -> Self {
        Self::sigma_z().scale(-0.5)
    }

    /// Outer product |u⟩⟨v|.
    pub fn outer(u: [Complex64; 2], v: [Complex64; 2]) -> Self {
        Self::new(
            u[0] * v[0].conj(),
            u[0] * v[1].conj(),
            u[1] * v[0].conj(),
            u[1] * v[1].conj(),
        )
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0[row][col]
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Self::new(m[0][0].conj(), m[1][0].conj(), m[0][1].conj(), m[1][1].conj())
    }

    pub fn scale(&self, s: f64) -> Self {
        self.scale_c(Complex64::new(s, 0.0))
    }

    pub fn scale_c(&self, s: Complex64) -> Self {
        let m = &self.0;
        Self::new(m[0][0] * s, m[0][1] * s, m[1][0] * s, m[1][1] * s)
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn determinant(&self) -> Complex64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        let m = &self.0;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    /// Conjugate the level order, i.e. swap both rows and columns.
    pub fn swap_levels(&self) -> Self {
        let m = &self.0;
        Self::new(m[1][1], m[1][0], m[0][1], m[0][0])
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst = 0.0_f64;
        for r in 0..2 {
            for c in 0..2 {
                worst = worst.max((self.0[r][c] - other.0[r][c]).norm());
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// ‖U†U − 𝟙‖_max.
    pub fn unitarity_defect(&self) -> f64 {
        (self.adjoint() * *self).max_abs_diff(&Self::identity())
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.is_finite() && self.unitarity_defect() <= tol
    }

    /// Hilbert–Schmidt inner product tr(A† B).
    pub fn inner(&self, other: &Self) -> Complex64 {
        (self.adjoint() * *other).trace()
    }
}

impl Mul for ComplexMat2 {
    type Output = ComplexMat2;

    #[inline]
    fn mul(self, rhs: Self) -> Self {
        let a = &self.0;
        let b = &rhs.0;
        Self::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

impl Add for ComplexMat2 {
    type Output = ComplexMat2;

    fn add(self, rhs: Self) -> Self {
        let a = &self.0;
        let b = &rhs.0;
        Self::new(a[0][0] + b[0][0], a[0][1] + b[0][1], a[1][0] + b[1][0], a[1][1] + b[1][1])
    }
}

impl Sub for ComplexMat2 {
    type Output = ComplexMat2;

    fn sub(self, rhs: Self) -> Self {
        self + rhs.scale(-1.0)
    }
}

/// Closed-form U = exp(−i(hx Ŝx + hy Ŝy + hz Ŝz)·dt).
///
/// Coefficients are angular frequencies in rad/µs and `dt` is in µs.
pub fn pauli_rotation_propagator(hx: f64, hy: f64, hz: f64, dt: f64) -> Result<ComplexMat2> {
    if !(hx.is_finite() && hy.is_finite() && hz.is_finite() && dt.is_finite()) {
        return Err(invalid("propagator coefficients must be finite"));
    }
    if dt <= 0.0 {
        return Err(invalid(format!("propagator step must be positive, got {dt}")));
    }
    Ok(rotation(hx, hy, hz, dt))
}

#[inline]
fn rotation(hx: f64, hy: f64, hz: f64, dt: f64) -> ComplexMat2 {
    // In σ components the generator is ½(hx σx − hy σy − hz σz).
    let (vx, vy, vz) = (hx, -hy, -hz);
    let norm = (vx * vx + vy * vy + vz * vz).sqrt();
    if norm == 0.0 {
        return ComplexMat2::identity();
    }
    let half = 0.5 * norm * dt;
    let (s, c) = half.sin_cos();
    let k = s / norm;
    // cos(θ/2)·𝟙 − i sin(θ/2)·(n̂·σ)
    ComplexMat2::new(
        Complex64::new(c, -k * vz),
        Complex64::new(-k * vy, -k * vx),
        Complex64::new(k * vy, -k * vx),
        Complex64::new(c, k * vz),
    )
}

/// Which level a population refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Level {
    /// |m_s = 0⟩
    Zero,
    /// |m_s = −1⟩
    MinusOne,
}

/// Density matrix of the qubit.
///
/// Stored through its entries `a = ρ_{−1,−1}`, `d = ρ_{0,0}` and the
/// coherence `b + ic = ⟨0|ρ|−1⟩`, so Hermiticity holds by construction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

impl DensityMatrix {
    pub const TRACE_TOL: f64 = 1e-12;
    pub const EIGEN_FLOOR: f64 = -1e-9;

    /// Validating constructor.
    pub fn from_entries(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let rho = Self { a, b, c, d };
        rho.validate()?;
        Ok(rho)
    }

    /// Builds from a Hermitian matrix in (|0⟩, |−1⟩) order.
    pub fn from_matrix(m: &ComplexMat2) -> Result<Self> {
        if !m.is_finite() {
            return Err(invalid("density matrix entries must be finite"));
        }
        let herm = (m.get(0, 1) - m.get(1, 0).conj()).norm();
        if herm > 1e-12 || m.get(0, 0).im.abs() > 1e-12 || m.get(1, 1).im.abs() > 1e-12 {
            return Err(invalid(format!("matrix is not Hermitian (defect {herm:.3e})")));
        }
        Self::from_entries(m.get(1, 1).re, m.get(0, 1).re, m.get(0, 1).im, m.get(0, 0).re)
    }

    /// Projector onto a (not necessarily normalised) ket with amplitudes
    /// `[⟨0|ψ⟩, ⟨−1|ψ⟩]`.
    pub fn from_ket(ket: [Complex64; 2]) -> Result<Self> {
        let norm = (ket[0].norm_sqr() + ket[1].norm_sqr()).sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(invalid("ket must be non-zero and finite"));
        }
        let u = [ket[0] / norm, ket[1] / norm];
        let coh = u[0] * u[1].conj();
        Ok(Self { a: u[1].norm_sqr(), b: coh.re, c: coh.im, d: u[0].norm_sqr() })
    }

    /// |0⟩⟨0|
    pub fn ground() -> Self {
        Self { a: 0.0, b: 0.0, c: 0.0, d: 1.0 }
    }

    /// |−1⟩⟨−1|
    pub fn excited() -> Self {
        Self { a: 1.0, b: 0.0, c: 0.0, d: 0.0 }
    }

    pub fn maximally_mixed() -> Self {
        Self { a: 0.5, b: 0.0, c: 0.0, d: 0.5 }
    }

    /// Pure state with Bloch vector `n` (spin frame, |−1⟩ = +z).
    pub(crate) fn from_bloch_unchecked(n: [f64; 3]) -> Self {
        Self { a: 0.5 * (1.0 + n[2]), b: 0.5 * n[0], c: 0.5 * n[1], d: 0.5 * (1.0 - n[2]) }
    }

    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn d(&self) -> f64 {
        self.d
    }

    /// Matrix in (|0⟩, |−1⟩) order.
    pub fn to_matrix(&self) -> ComplexMat2 {
        let coh = Complex64::new(self.b, self.c);
        ComplexMat2::new(Complex64::new(self.d, 0.0), coh, coh.conj(), Complex64::new(self.a, 0.0))
    }

    /// Matrix in (|−1⟩, |0⟩) order, `[[a, b − ic], [b + ic, d]]`.
    pub fn to_swapped_matrix(&self) -> ComplexMat2 {
        self.to_matrix().swap_levels()
    }

    /// Bloch vector ⟨2Ŝ⟩ = (2b, 2c, a − d).
    pub fn bloch(&self) -> [f64; 3] {
        [2.0 * self.b, 2.0 * self.c, self.a - self.d]
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let mid = 0.5 * (self.a + self.d);
        let half = 0.5 * (self.a - self.d);
        let r = (half * half + self.b * self.b + self.c * self.c).sqrt();
        [mid - r, mid + r]
    }

    pub fn purity(&self) -> f64 {
        self.a * self.a + self.d * self.d + 2.0 * (self.b * self.b + self.c * self.c)
    }

    /// ⟨ψ|ρ|ψ⟩ for a normalised ket.
    pub fn expectation(&self, ket: [Complex64; 2]) -> f64 {
        let rv = self.to_matrix().apply(ket);
        (ket[0].conj() * rv[0] + ket[1].conj() * rv[1]).re
    }

    /// ½‖ρ − σ‖₁
    pub fn trace_distance(&self, other: &Self) -> f64 {
        let da = self.a - other.a;
        let dd = self.d - other.d;
        let db = self.b - other.b;
        let dc = self.c - other.c;
        let mid = 0.5 * (da + dd);
        let r = (0.25 * (da - dd).powi(2) + db * db + dc * dc).sqrt();
        0.5 * ((mid - r).abs() + (mid + r).abs())
    }

    /// U ρ U†.
    pub fn transformed(&self, u: &ComplexMat2) -> Self {
        let m = *u * self.to_matrix() * u.adjoint();
        let coh = m.get(0, 1);
        Self { a: m.get(1, 1).re, b: coh.re, c: coh.im, d: m.get(0, 0).re }
    }

    pub fn validate(&self) -> Result<()> {
        let vals = [self.a, self.b, self.c, self.d];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(invalid("density matrix entries must be finite"));
        }
        if (self.trace() - 1.0).abs() > Self::TRACE_TOL {
            return Err(invalid(format!("trace {} differs from 1", self.trace())));
        }
        if self.eigenvalues()[0] < Self::EIGEN_FLOOR {
            return Err(invalid(format!(
                "density matrix is not positive semidefinite (min eigenvalue {})",
                self.eigenvalues()[0]
            )));
        }
        Ok(())
    }
}

/// Population of `level`, clamped to [0, 1].
pub fn population(rho: &DensityMatrix, level: Level) -> f64 {
    let p = match level {
        Level::Zero => rho.d,
        Level::MinusOne => rho.a,
    };
    p.clamp(0.0, 1.0)
}

/// Nominal drive and timing parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantParams {
    /// Ω in MHz.
    pub rabi_mhz: f64,
    /// Δ in MHz.
    pub detuning_mhz: f64,
    /// T in µs.
    pub duration_us: f64,
}

impl PlantParams {
    pub const MAX_RABI_MHZ: f64 = 10.0;

    pub fn new(rabi_mhz: f64, detuning_mhz: f64, duration_us: f64) -> Result<Self> {
        if !(0.0..=Self::MAX_RABI_MHZ).contains(&rabi_mhz) {
            return Err(invalid(format!(
                "Rabi frequency {rabi_mhz} MHz outside [0, {}] MHz",
                Self::MAX_RABI_MHZ
            )));
        }
        if !detuning_mhz.is_finite() {
            return Err(invalid("detuning must be finite"));
        }
        if !(duration_us.is_finite() && duration_us > 0.0) {
            return Err(invalid(format!("duration must be positive, got {duration_us}")));
        }
        Ok(Self { rabi_mhz, detuning_mhz, duration_us })
    }

    /// Parameters from relative detuning Δ/Ω and relative time T/T_π.
    pub fn from_relative(rabi_mhz: f64, detuning_rel: f64, duration_rel: f64) -> Result<Self> {
        if !(rabi_mhz > 0.0) {
            return Err(invalid("relative parameters need a positive Rabi frequency"));
        }
        Self::new(rabi_mhz, detuning_rel * rabi_mhz, duration_rel / (2.0 * rabi_mhz))
    }

    /// T_π = 1/(2Ω).
    pub fn t_pi(&self) -> f64 {
        1.0 / (2.0 * self.rabi_mhz)
    }

    pub fn detuning_rel(&self) -> f64 {
        self.detuning_mhz / self.rabi_mhz
    }

    pub fn duration_rel(&self) -> f64 {
        self.duration_us / self.t_pi()
    }
}

/// Sampled control channels X(t), Y(t) held constant over each sample.
///
/// Sample `i` covers `[i·dt, (i + 1)·dt)` with `dt = T / n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseWaveform {
    duration_us: f64,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl PulseWaveform {
    pub fn new(duration_us: f64, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if !(duration_us.is_finite() && duration_us > 0.0) {
            return Err(invalid(format!("pulse duration must be positive, got {duration_us}")));
        }
        if x.len() != y.len() {
            return Err(invalid(format!("channel lengths differ: {} vs {}", x.len(), y.len())));
        }
        if x.len() < 2 {
            return Err(invalid("a pulse needs at least 2 samples"));
        }
        for (i, (&xi, &yi)) in x.iter().zip(&y).enumerate() {
            if !(xi.is_finite() && yi.is_finite()) {
                return Err(invalid(format!("non-finite amplitude at sample {i}")));
            }
            if (xi + yi).abs() > 1.0 + AMPLITUDE_TOL {
                return Err(invalid(format!(
                    "amplitude constraint |X + Y| <= 1 violated at sample {i}: {}",
                    (xi + yi).abs()
                )));
            }
        }
        Ok(Self { duration_us, x, y })
    }

    /// Builds a pulse, rescaling every sample with |X + Y| > 1 by
    /// 1/|X + Y|.
    pub fn clipped(duration_us: f64, mut x: Vec<f64>, mut y: Vec<f64>) -> Result<Self> {
        for (xi, yi) in x.iter_mut().zip(y.iter_mut()) {
            let sum = (*xi + *yi).abs();
            if sum > 1.0 {
                *xi /= sum;
                *yi /= sum;
                // Division can land an ulp above the bound; with large
                // opposite-sign channels a single-ulp shrink may round away.
                let mut shrink = f64::EPSILON;
                while (*xi + *yi).abs() > 1.0 {
                    *xi *= 1.0 - shrink;
                    *yi *= 1.0 - shrink;
                    shrink *= 2.0;
                }
            }
        }
        Self::new(duration_us, x, y)
    }

    /// Constant drive on both channels.
    pub fn rectangular(duration_us: f64, samples: usize, x: f64, y: f64) -> Result<Self> {
        Self::new(duration_us, vec![x; samples], vec![y; samples])
    }

    pub fn zero(duration_us: f64, samples: usize) -> Result<Self> {
        Self::rectangular(duration_us, samples, 0.0, 0.0)
    }

    pub fn duration(&self) -> f64 {
        self.duration_us
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.duration_us / self.x.len() as f64
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Start time of each sample.
    pub fn times(&self) -> Vec<f64> {
        let dt = self.dt();
        (0..self.len()).map(|i| i as f64 * dt).collect()
    }

    /// Largest |X + Y| over the samples.
    pub fn peak_constraint(&self) -> f64 {
        self.x.iter().zip(&self.y).map(|(x, y)| (x + y).abs()).fold(0.0, f64::max)
    }

    /// Time-reversed pulse with both channels negated.
    pub fn reversed_negated(&self) -> Self {
        Self {
            duration_us: self.duration_us,
            x: self.x.iter().rev().map(|v| -v).collect(),
            y: self.y.iter().rev().map(|v| -v).collect(),
        }
    }
}

/// Total propagator of `pulse` under generator
/// 2π[Δ Ŝz + Ω(X Ŝx + Y Ŝy)].
pub fn pulse_propagator(pulse: &PulseWaveform, rabi_mhz: f64, detuning_mhz: f64) -> ComplexMat2 {
    let dt = pulse.dt();
    let w_rabi = 2.0 * PI * rabi_mhz;
    let w_det = 2.0 * PI * detuning_mhz;
    pulse.x.iter().zip(&pulse.y).fold(ComplexMat2::identity(), |acc, (&x, &y)| {
        rotation(w_rabi * x, w_rabi * y, w_det, dt) * acc
    })
}

/// Propagator of a constant drive (X, Y) held for `duration_us`.
pub fn constant_propagator(x: f64, y: f64, rabi_mhz: f64, detuning_mhz: f64, duration_us: f64) -> ComplexMat2 {
    if duration_us <= 0.0 {
        return ComplexMat2::identity();
    }
    let w = 2.0 * PI * rabi_mhz;
    rotation(w * x, w * y, 2.0 * PI * detuning_mhz, duration_us)
}

/// Evolves `rho0` under `pulse` with the drive parameters `params`.
pub fn evolve_density(rho0: &DensityMatrix, pulse: &PulseWaveform, params: &PlantParams) -> Result<DensityMatrix> {
    check_duration(pulse, params)?;
    let u = pulse_propagator(pulse, params.rabi_mhz, params.detuning_mhz);
    Ok(rho0.transformed(&u))
}

pub(crate) fn check_duration(pulse: &PulseWaveform, params: &PlantParams) -> Result<()> {
    let rel = (pulse.duration() - params.duration_us).abs() / params.duration_us;
    if rel > 1e-9 {
        return Err(Error::Contract(format!(
            "pulse duration {} µs does not match plant duration {} µs",
            pulse.duration(),
            params.duration_us
        )));
    }
    Ok(())
}
