//! Randomised trigonometric basis and pulse assembly.
//!
//! Per channel the update is
//! g(t) = w(t)·Σ_terms Σ_n [a_n sin(ω_n t) + b_n cos(ω_n t)]
//! with the window w(t) = sin(πt/T), and the emitted waveform is the guess
//! envelope Γ₀ = Γx + iΓy times g_X + i g_Y.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::qubit::{PlantParams, PulseWaveform};

/// Boundary window applied to the expansion.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    /// w(t) = sin(πt/T)
    #[default]
    Sine,
}

impl Window {
    pub fn eval(self, t: f64, duration: f64) -> f64 {
        match self {
            Window::Sine => (PI * t / duration).sin(),
        }
    }
}

/// Complex guess envelope Γ₀ = re + i·im, constant over the pulse.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GuessPulse {
    pub re: f64,
    pub im: f64,
}

impl Default for GuessPulse {
    fn default() -> Self {
        Self { re: 1.0, im: 0.0 }
    }
}

/// One super-iteration's worth of basis functions.
///
/// `coefficients` has length 4N laid out as
/// `[aX₀, bX₀, …, aX_{N−1}, bX_{N−1}, aY₀, bY₀, …]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisTerm {
    pub omega_x: Vec<f64>,
    pub omega_y: Vec<f64>,
    pub coefficients: Vec<f64>,
}

impl BasisTerm {
    pub fn components(&self) -> usize {
        self.omega_x.len()
    }

    pub fn dimension(&self) -> usize {
        4 * self.components()
    }

    pub fn with_coefficients(&self, coefficients: &[f64]) -> Result<Self> {
        if coefficients.len() != self.dimension() {
            return Err(Error::Contract(format!(
                "expected {} coefficients, got {}",
                self.dimension(),
                coefficients.len()
            )));
        }
        Ok(Self { coefficients: coefficients.to_vec(), ..self.clone() })
    }

    fn channel(omegas: &[f64], coeffs: &[f64], t: f64) -> f64 {
        omegas.iter().enumerate().fold(0.0, |acc, (n, w)| {
            let (s, c) = (w * t).sin_cos();
            acc + coeffs[2 * n] * s + coeffs[2 * n + 1] * c
        })
    }

    /// Un-windowed (X, Y) contribution at time `t`.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let n = self.components();
        let (cx, cy) = self.coefficients.split_at(2 * n);
        (Self::channel(&self.omega_x, cx, t), Self::channel(&self.omega_y, cy, t))
    }
}

/// Draws ω_n = 2π(n + r)/T per channel with r uniform on the open interval
/// (−½, ½). Coefficients start at zero.
pub fn draw_basis<R: Rng + ?Sized>(components: usize, duration_us: f64, rng: &mut R) -> Result<BasisTerm> {
    if components == 0 {
        return Err(invalid("a basis term needs at least one component"));
    }
    if !(duration_us.is_finite() && duration_us > 0.0) {
        return Err(invalid(format!("pulse duration must be positive, got {duration_us}")));
    }
    let mut draw = |n: usize| {
        let r = loop {
            let r: f64 = rng.gen_range(-0.5..0.5);
            if r > -0.5 {
                break r;
            }
        };
        TAU * (n as f64 + r) / duration_us
    };
    let omega_x = (0..components).map(&mut draw).collect();
    let omega_y = (0..components).map(&mut draw).collect();
    Ok(BasisTerm { omega_x, omega_y, coefficients: vec![0.0; 4 * components] })
}

/// Super-iteration bookkeeping: completed terms and the term being optimised.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DcrabLedger {
    pub samples: usize,
    pub window: Window,
    pub guess: GuessPulse,
    pub frozen: Vec<BasisTerm>,
    pub active: Option<BasisTerm>,
}

impl DcrabLedger {
    pub fn new(samples: usize, guess: GuessPulse) -> Self {
        Self { samples, window: Window::Sine, guess, frozen: Vec::new(), active: None }
    }

    /// Moves the active term, with `coefficients`, into the frozen list.
    pub fn freeze(&mut self, coefficients: &[f64]) -> Result<()> {
        let term = self.active.take().ok_or_else(|| Error::Contract("no active term to freeze".into()))?;
        self.frozen.push(term.with_coefficients(coefficients)?);
        Ok(())
    }

    /// The ledger with the active term's coefficients filled in.
    pub fn snapshot(&self, active_coeffs: &[f64]) -> Result<Self> {
        let mut out = self.clone();
        if let Some(term) = &self.active {
            out.active = Some(term.with_coefficients(active_coeffs)?);
        }
        Ok(out)
    }

    /// Pulse from the stored coefficients of all terms.
    pub fn pulse(&self, params: &PlantParams) -> Result<PulseWaveform> {
        let coeffs = self.active.as_ref().map(|t| t.coefficients.clone()).unwrap_or_default();
        assemble_pulse(self, &coeffs, params)
    }
}

/// Samples the update at left-edge times iΔt and applies the amplitude
/// constraint by rescaling violating samples.
pub fn assemble_pulse(ledger: &DcrabLedger, active_coeffs: &[f64], params: &PlantParams) -> Result<PulseWaveform> {
    let expected = ledger.active.as_ref().map_or(0, BasisTerm::dimension);
    if active_coeffs.len() != expected {
        return Err(Error::Contract(format!("expected {expected} active coefficients, got {}", active_coeffs.len())));
    }
    if ledger.samples < 2 {
        return Err(invalid("a pulse needs at least two samples"));
    }
    let duration = params.duration_us;
    let dt = duration / ledger.samples as f64;
    let Some(active) = &ledger.active else {
        return sample(ledger, duration, dt, |_| (0.0, 0.0));
    };
    let n = active.components();
    let (cx, cy) = active_coeffs.split_at(2 * n);
    sample(ledger, duration, dt, |t| {
        (BasisTerm::channel(&active.omega_x, cx, t), BasisTerm::channel(&active.omega_y, cy, t))
    })
}

fn sample(ledger: &DcrabLedger, duration: f64, dt: f64, active: impl Fn(f64) -> (f64, f64)) -> Result<PulseWaveform> {
    let mut x = Vec::with_capacity(ledger.samples);
    let mut y = Vec::with_capacity(ledger.samples);
    let GuessPulse { re, im } = ledger.guess;
    for i in 0..ledger.samples {
        let t = i as f64 * dt;
        let (mut gx, mut gy) = (0.0, 0.0);
        for term in &ledger.frozen {
            let (vx, vy) = term.eval(t);
            gx += vx;
            gy += vy;
        }
        let (vx, vy) = active(t);
        gx += vx;
        gy += vy;
        let w = ledger.window.eval(t, duration);
        let (gx, gy) = (w * gx, w * gy);
        x.push(re * gx - im * gy);
        y.push(re * gy + im * gx);
    }
    PulseWaveform::clipped(duration, x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params() -> PlantParams {
        PlantParams::new(5.0, 0.0, 1.0).unwrap()
    }

    fn ledger_with(term: BasisTerm) -> DcrabLedger {
        let mut l = DcrabLedger::new(1000, GuessPulse::default());
        l.active = Some(term);
        l
    }

    #[test]
    fn single_component_band() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let b = draw_basis(1, 1.0, &mut rng).unwrap();
            assert!(b.omega_x[0].abs() < PI && b.omega_y[0].abs() < PI);
            assert_eq!(b.coefficients, vec![0.0; 4]);
        }
    }

    #[test]
    fn bands_are_disjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = 0.3;
        for _ in 0..200 {
            let b = draw_basis(3, t, &mut rng).unwrap();
            for (n, (&wx, &wy)) in b.omega_x.iter().zip(&b.omega_y).enumerate() {
                let lo = TAU * (n as f64 - 0.5) / t;
                let hi = TAU * (n as f64 + 0.5) / t;
                assert!(wx > lo && wx < hi && wy > lo && wy < hi);
            }
        }
    }

    #[test]
    fn draws_are_deterministic() {
        let a = draw_basis(2, 1.0, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = draw_basis(2, 1.0, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        assert!(draw_basis(0, 1.0, &mut ChaCha8Rng::seed_from_u64(9)).is_err());
        assert!(draw_basis(1, 0.0, &mut ChaCha8Rng::seed_from_u64(9)).is_err());
    }

    #[test]
    fn zero_coefficients_give_zero_pulse() {
        let term = draw_basis(1, 1.0, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let p = assemble_pulse(&ledger_with(term), &[0.0; 4], &params()).unwrap();
        assert!(p.x().iter().chain(p.y()).all(|v| *v == 0.0));
    }

    #[test]
    fn cosine_term_at_zero_frequency_is_the_window() {
        let term = BasisTerm { omega_x: vec![0.0], omega_y: vec![0.0], coefficients: vec![0.0; 4] };
        let p = assemble_pulse(&ledger_with(term), &[0.0, 1.0, 0.0, 0.0], &params()).unwrap();
        let times = p.times();
        for (i, &t) in times.iter().enumerate() {
            assert!((p.x()[i] - (PI * t).sin()).abs() < 1e-15);
            assert_eq!(p.y()[i], 0.0);
        }
        assert_eq!(times[500], 0.5);
        assert!((p.x()[500] - 1.0).abs() < 1e-15);
        assert_eq!(p.x()[0], 0.0);
    }

    #[test]
    fn complex_guess_rotates_channels() {
        let term = BasisTerm { omega_x: vec![0.0], omega_y: vec![0.0], coefficients: vec![0.0; 4] };
        let mut l = ledger_with(term);
        l.guess = GuessPulse { re: 0.0, im: 0.5 };
        let p = assemble_pulse(&l, &[0.0, 1.0, 0.0, 0.0], &params()).unwrap();
        assert_eq!(p.x()[500], 0.0);
        assert!((p.y()[500] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn violating_samples_are_rescaled() {
        let term = BasisTerm { omega_x: vec![0.0], omega_y: vec![0.0], coefficients: vec![0.0; 4] };
        let p = assemble_pulse(&ledger_with(term), &[0.0, 2.0, 0.0, 1.0], &params()).unwrap();
        // Raw |X + Y| = 3 at T/2.
        assert!((p.x()[500] + p.y()[500]).abs() <= 1.0);
        assert!((p.x()[500] / p.y()[500] - 2.0).abs() < 1e-12);
        assert!(p.peak_constraint() <= 1.0);
    }

    #[test]
    fn wrong_coefficient_count_is_a_contract_error() {
        let term = draw_basis(1, 1.0, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let err = assemble_pulse(&ledger_with(term), &[0.0; 3], &params()).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn freezing_preserves_the_pulse_bit_for_bit() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut l = DcrabLedger::new(500, GuessPulse::default());
        l.active = Some(draw_basis(1, 1.0, &mut rng).unwrap());
        let c = [0.3, -0.2, 0.1, 0.05];
        let before = assemble_pulse(&l, &c, &params()).unwrap();
        l.freeze(&c).unwrap();
        l.active = Some(draw_basis(1, 1.0, &mut rng).unwrap());
        let after = assemble_pulse(&l, &[0.0; 4], &params()).unwrap();
        assert_eq!(before, after);
        assert_eq!(l.frozen[0].coefficients, c.to_vec());
    }
}
