//! Joint least-squares fit of the x- and y-axis Rabi curves.
//!
//! For an initial state with entries a, d and coherence b + ic the
//! populations of |0⟩ after a resonant readout drive of duration t are
//!
//! ```text
//! x-axis: P(t) = (d + a)/2 + (d − a)/2·cos(2πωt) − c·sin(2πωt)
//! y-axis: P(t) = (d + a)/2 + (d − a)/2·cos(2πωt) + b·sin(2πωt)
//! ```
//!
//! The model is linear in (a, b, c, d) once ω is fixed. ω is located by a
//! coarse grid and golden-section search over [0.5Ω, 1.5Ω], and the full
//! five-parameter model is then polished with Gauss-Newton steps.

use std::f64::consts::PI;

use nalgebra::{Matrix4, Matrix5, Vector4, Vector5};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// RMS residual above which a fit is rejected.
pub const MAX_RMS_RESIDUAL: f64 = 0.15;
/// Allowed |a + d − 1| before projection.
pub const TRACE_TOL: f64 = 0.05;
/// Minimum number of points per curve.
pub const MIN_POINTS: usize = 8;

const GRID_POINTS: usize = 201;
const GOLDEN_ITERS: usize = 60;
const GN_ITERS: usize = 30;

/// Best-fit density-matrix entries and Rabi frequency.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RabiFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    /// Fitted Rabi frequency (MHz).
    pub omega_mhz: f64,
    /// RMS residual over both curves.
    pub residual: f64,
}

impl RabiFit {
    /// Noise-free fit of a known state (test and oracle use).
    pub fn exact(a: f64, b: f64, c: f64, d: f64, omega_mhz: f64) -> Self {
        Self { a, b, c, d, omega_mhz, residual: 0.0 }
    }
}

/// Model parameters: offset s = (a+d)/2, amplitude δ = (d−a)/2, c, b.
#[derive(Clone, Copy, Debug)]
struct Linear {
    s: f64,
    delta: f64,
    c: f64,
    b: f64,
}

struct Curves<'a> {
    x: &'a [f64],
    y: &'a [f64],
    t: &'a [f64],
}

impl Curves<'_> {
    fn solve_linear(&self, omega: f64) -> Linear {
        let mut ata = Matrix4::<f64>::zeros();
        let mut atb = Vector4::<f64>::zeros();
        for ((&t, &px), &py) in self.t.iter().zip(self.x).zip(self.y) {
            let (sn, cs) = (2.0 * PI * omega * t).sin_cos();
            for (row, p) in [(Vector4::new(1.0, cs, -sn, 0.0), px), (Vector4::new(1.0, cs, 0.0, sn), py)] {
                ata += row * row.transpose();
                atb += row * p;
            }
        }
        let sol = match ata.cholesky() {
            Some(ch) => ch.solve(&atb),
            None => ata.svd(true, true).solve(&atb, 1e-12).unwrap_or_else(|_| Vector4::zeros()),
        };
        Linear { s: sol[0], delta: sol[1], c: sol[2], b: sol[3] }
    }

    fn sse(&self, omega: f64, p: &Linear) -> f64 {
        self.t
            .iter()
            .zip(self.x)
            .zip(self.y)
            .map(|((&t, &px), &py)| {
                let (sn, cs) = (2.0 * PI * omega * t).sin_cos();
                let base = p.s + p.delta * cs;
                let rx = px - (base - p.c * sn);
                let ry = py - (base + p.b * sn);
                rx * rx + ry * ry
            })
            .sum()
    }

    fn profile(&self, omega: f64) -> (f64, Linear) {
        let p = self.solve_linear(omega);
        (self.sse(omega, &p), p)
    }

    /// One damped Gauss-Newton step on (s, δ, c, b, ω).
    fn gauss_newton_step(&self, omega: f64, p: &Linear) -> Option<(f64, Linear)> {
        let mut jtj = Matrix5::<f64>::zeros();
        let mut jtr = Vector5::<f64>::zeros();
        for ((&t, &px), &py) in self.t.iter().zip(self.x).zip(self.y) {
            let (sn, cs) = (2.0 * PI * omega * t).sin_cos();
            let base = p.s + p.delta * cs;
            let k = 2.0 * PI * t;
            let jx = Vector5::new(1.0, cs, -sn, 0.0, k * (-p.delta * sn - p.c * cs));
            let jy = Vector5::new(1.0, cs, 0.0, sn, k * (-p.delta * sn + p.b * cs));
            let rx = px - (base - p.c * sn);
            let ry = py - (base + p.b * sn);
            jtj += jx * jx.transpose() + jy * jy.transpose();
            jtr += jx * rx + jy * ry;
        }
        let step = jtj.svd(true, true).solve(&jtr, 1e-14).ok()?;
        if step.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let next = Linear { s: p.s + step[0], delta: p.delta + step[1], c: p.c + step[2], b: p.b + step[3] };
        Some((omega + step[4], next))
    }
}

/// Fits both Rabi curves sampled at `times`; `rabi_mhz` is the nominal
/// Rabi frequency bounding the ω search.
pub fn fit_rabi(x_curve: &[f64], y_curve: &[f64], times: &[f64], rabi_mhz: f64) -> Result<RabiFit> {
    if x_curve.len() != times.len() || y_curve.len() != times.len() {
        return Err(invalid("Rabi curves must share the time grid"));
    }
    if times.len() < MIN_POINTS {
        return Err(invalid(format!("Rabi fit needs at least {MIN_POINTS} points, got {}", times.len())));
    }
    if !(rabi_mhz.is_finite() && rabi_mhz > 0.0) {
        return Err(invalid("Rabi fit needs a positive nominal Rabi frequency"));
    }
    let curves = Curves { x: x_curve, y: y_curve, t: times };

    let (lo, hi) = (0.5 * rabi_mhz, 1.5 * rabi_mhz);
    let step = (hi - lo) / (GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..GRID_POINTS).map(|i| curves.profile(lo + step * i as f64).0).collect();
    let best = grid
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v < grid[best] { i } else { best });

    // Golden section inside the bracketing grid cells.
    let mut a = lo + step * best.saturating_sub(1) as f64;
    let mut b = lo + step * (best + 1).min(GRID_POINTS - 1) as f64;
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = curves.profile(x1).0;
    let mut f2 = curves.profile(x2).0;
    for _ in 0..GOLDEN_ITERS {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = curves.profile(x1).0;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = curves.profile(x2).0;
        }
    }
    let mut omega = 0.5 * (a + b);
    let (mut sse, mut params) = curves.profile(omega);
    let grid_best = lo + step * best as f64;
    if grid[best] < sse {
        omega = grid_best;
        (sse, params) = curves.profile(omega);
    }

    for _ in 0..GN_ITERS {
        let Some((w, p)) = curves.gauss_newton_step(omega, &params) else { break };
        let trial = curves.sse(w, &p);
        if !(trial < sse) {
            break;
        }
        let gain = sse - trial;
        omega = w;
        params = p;
        sse = trial;
        if gain <= 1e-30 {
            break;
        }
    }

    let residual = (sse / (2 * times.len()) as f64).sqrt();
    let fit = RabiFit {
        a: params.s - params.delta,
        b: params.b,
        c: params.c,
        d: params.s + params.delta,
        omega_mhz: omega,
        residual,
    };
    if ![fit.a, fit.b, fit.c, fit.d, fit.omega_mhz, residual].iter().all(|v| v.is_finite()) {
        return Err(Error::FitFailure { residual, reason: "non-finite parameters".into() });
    }
    if residual > MAX_RMS_RESIDUAL {
        return Err(Error::FitFailure { residual, reason: "residual above threshold".into() });
    }
    if (fit.a + fit.d - 1.0).abs() > TRACE_TOL {
        return Err(Error::FitFailure {
            residual,
            reason: format!("fitted trace {} outside 1 ± {TRACE_TOL}", fit.a + fit.d),
        });
    }
    Ok(fit)
}

/// Forward model: the two curves a state with entries (a, b, c, d)
/// produces at Rabi frequency `omega_mhz`.
pub fn model_curves(a: f64, b: f64, c: f64, d: f64, omega_mhz: f64, times: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let s = 0.5 * (d + a);
    let delta = 0.5 * (d - a);
    times
        .iter()
        .map(|&t| {
            let (sn, cs) = (2.0 * PI * omega_mhz * t).sin_cos();
            (s + delta * cs - c * sn, s + delta * cs + b * sn)
        })
        .unzip()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::default_rabi_times;
    use rand::distributions::{Bernoulli, Distribution};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const RABI: f64 = 5.0;

    fn close(fit: &RabiFit, want: [f64; 4], tol: f64) -> bool {
        let got = [fit.a, fit.b, fit.c, fit.d];
        got.iter().zip(want).all(|(g, w)| (g - w).abs() < tol)
    }

    #[test]
    fn recovers_equator_state() {
        let t = default_rabi_times(RABI);
        let (x, y) = model_curves(0.5, 0.5, 0.0, 0.5, RABI, &t);
        let fit = fit_rabi(&x, &y, &t, RABI).unwrap();
        assert!(close(&fit, [0.5, 0.5, 0.0, 0.5], 1e-6), "{fit:?}");
    }

    #[test]
    fn recovers_ground_state() {
        let t = default_rabi_times(RABI);
        let (x, y) = model_curves(0.0, 0.0, 0.0, 1.0, RABI, &t);
        for (ti, xi) in t.iter().zip(&x) {
            assert!((xi - (0.5 + 0.5 * (2.0 * PI * RABI * ti).cos())).abs() < 1e-15);
        }
        let fit = fit_rabi(&x, &y, &t, RABI).unwrap();
        assert!(close(&fit, [0.0, 0.0, 0.0, 1.0], 1e-6));
        assert!((fit.omega_mhz - RABI).abs() < 1e-9);
    }

    #[test]
    fn recovers_off_nominal_frequency() {
        let t = default_rabi_times(RABI);
        let (x, y) = model_curves(0.2, 0.3, -0.25, 0.8, 1.2 * RABI, &t);
        let fit = fit_rabi(&x, &y, &t, RABI).unwrap();
        assert!(close(&fit, [0.2, 0.3, -0.25, 0.8], 1e-9), "{fit:?}");
        assert!((fit.omega_mhz - 1.2 * RABI).abs() < 1e-9);
    }

    #[test]
    fn binomial_noise_recovery_rate() {
        // Monte-Carlo calibration: at 10^4 shots the parameters land within
        // 0.03 in at least 95% of trials.
        let t = default_rabi_times(RABI);
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let shots = 10_000u64;
        let mut ok = 0;
        for trial in 0..200 {
            let th = trial as f64 * 0.731;
            let ph = trial as f64 * 1.913;
            let n = [th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()];
            let (a, b, c, d) = (0.5 * (1.0 + n[2]), 0.5 * n[0], 0.5 * n[1], 0.5 * (1.0 - n[2]));
            let (x, y) = model_curves(a, b, c, d, RABI, &t);
            let mut draw = |p: f64| {
                let coin = Bernoulli::new(p.clamp(0.0, 1.0)).unwrap();
                (0..shots).filter(|_| coin.sample(&mut rng)).count() as f64 / shots as f64
            };
            let xn: Vec<f64> = x.iter().map(|&p| draw(p)).collect();
            let yn: Vec<f64> = y.iter().map(|&p| draw(p)).collect();
            if let Ok(fit) = fit_rabi(&xn, &yn, &t, RABI) {
                if close(&fit, [a, b, c, d], 0.03) {
                    ok += 1;
                }
            }
        }
        assert!(ok >= 190, "{ok}/200");
    }

    #[test]
    fn rejects_short_or_mismatched_input() {
        let t = [0.0, 0.1, 0.2];
        assert!(fit_rabi(&[0.0; 3], &[0.0; 3], &t, RABI).is_err());
        let t = default_rabi_times(RABI);
        assert!(fit_rabi(&t[..10], &t, &t, RABI).is_err());
    }

    #[test]
    fn divergent_data_is_a_fit_failure() {
        let t = default_rabi_times(RABI);
        let x: Vec<f64> = (0..t.len()).map(|i| if i % 2 == 0 { 1.0 } else { 0.0 }).collect();
        let y: Vec<f64> = (0..t.len()).map(|i| if i % 3 == 0 { 0.0 } else { 1.0 }).collect();
        match fit_rabi(&x, &y, &t, RABI) {
            Err(Error::FitFailure { residual, .. }) => assert!(residual > 0.0),
            other => panic!("expected fit failure, got {other:?}"),
        }
    }
}
