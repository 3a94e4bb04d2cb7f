//! Projection of a Rabi fit onto the nearest pure state.
//!
//! Pure states are parameterised as
//! ρ(ξ, ν) = e^{−iνŜy} e^{−iξŜx} |0⟩⟨0| e^{iξŜx} e^{iνŜy}
//! and the quadratic residual Σ_ij |ρ_ij − ρ_ij(ξ, ν)|² is minimised by a
//! coarse grid over ξ ∈ [0, 2π), ν ∈ [0, π) followed by local quadratic
//! refinement. Degenerate minima resolve to the lexicographically smallest
//! grid point.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::fit::RabiFit;
use crate::qubit::{ComplexMat2, DensityMatrix};

pub const XI_STEPS: usize = 360;
pub const NU_STEPS: usize = 180;

/// Relative spread below which residuals count as tied.
const TIE_TOL: f64 = 1e-13;

/// Pure-state estimate with its entry error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateEstimate {
    pub rho: DensityMatrix,
    pub xi: f64,
    pub nu: f64,
    /// σ(ρ_ij) = ¼·√(Σ_ij |ρ_ij − ρ_ij(ξ, ν)|²), shared by all entries.
    pub sigma: f64,
}

/// Bloch vector (spin frame) of ρ(ξ, ν).
pub fn pure_bloch(xi: f64, nu: f64) -> [f64; 3] {
    let (sx, cx) = xi.sin_cos();
    let (sn, cn) = nu.sin_cos();
    [-cx * sn, sx, -cx * cn]
}

/// ρ(ξ, ν) evaluated through the rotation matrices.
pub fn pure_state(xi: f64, nu: f64) -> DensityMatrix {
    let u = rotation_about(ComplexMat2::spin_y(), nu) * rotation_about(ComplexMat2::spin_x(), xi);
    DensityMatrix::ground().transformed(&u)
}

fn rotation_about(generator: ComplexMat2, angle: f64) -> ComplexMat2 {
    // e^{−iθŜ} = cos(θ/2)𝟙 − 2i sin(θ/2)Ŝ for a spin-½ component Ŝ.
    let (s, c) = (0.5 * angle).sin_cos();
    ComplexMat2::identity().scale(c) + generator.scale_c(num_complex::Complex64::new(0.0, -2.0 * s))
}

/// Σ_ij |ρ_ij − ρ_ij(ξ, ν)|² for the fitted entries.
pub fn quadratic_residual(fit: &RabiFit, xi: f64, nu: f64) -> f64 {
    residual_for(fit, pure_bloch(xi, nu))
}

#[inline]
fn residual_for(fit: &RabiFit, n: [f64; 3]) -> f64 {
    let da = fit.a - 0.5 * (1.0 + n[2]);
    let dd = fit.d - 0.5 * (1.0 - n[2]);
    let db = fit.b - 0.5 * n[0];
    let dc = fit.c - 0.5 * n[1];
    da * da + dd * dd + 2.0 * (db * db + dc * dc)
}

fn grid_minimum(fit: &RabiFit) -> (f64, f64, f64) {
    let xi_step = 2.0 * PI / XI_STEPS as f64;
    let nu_step = PI / NU_STEPS as f64;
    let nu_trig: Vec<(f64, f64)> = (0..NU_STEPS).map(|j| (nu_step * j as f64).sin_cos()).collect();
    let mut values = Vec::with_capacity(XI_STEPS * NU_STEPS);
    for i in 0..XI_STEPS {
        let (sx, cx) = (xi_step * i as f64).sin_cos();
        for &(sn, cn) in &nu_trig {
            values.push(residual_for(fit, [-cx * sn, sx, -cx * cn]));
        }
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let cutoff = min + TIE_TOL * min.max(1.0);
    let k = values.iter().position(|&v| v <= cutoff).unwrap_or(0);
    let (i, j) = (k / NU_STEPS, k % NU_STEPS);
    (xi_step * i as f64, nu_step * j as f64, values[k])
}

fn refine(fit: &RabiFit, mut xi: f64, mut nu: f64, mut best: f64) -> (f64, f64, f64) {
    let f = |x: f64, y: f64| quadratic_residual(fit, x, y);
    let mut h = PI / NU_STEPS as f64;
    let mut first = true;
    while h > 1e-10 {
        let mut stencil = [[0.0; 3]; 3];
        for (i, row) in stencil.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = f(xi + (i as f64 - 1.0) * h, nu + (j as f64 - 1.0) * h);
            }
        }
        if first {
            let (lo, hi) = stencil.iter().flatten().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
            if hi - lo <= TIE_TOL * hi.max(1.0) {
                // Flat landscape: keep the tie-broken grid point.
                break;
            }
            first = false;
        }
        let gx = (stencil[2][1] - stencil[0][1]) / (2.0 * h);
        let gy = (stencil[1][2] - stencil[1][0]) / (2.0 * h);
        let hxx = (stencil[2][1] - 2.0 * stencil[1][1] + stencil[0][1]) / (h * h);
        let hyy = (stencil[1][2] - 2.0 * stencil[1][1] + stencil[1][0]) / (h * h);
        let hxy = (stencil[2][2] - stencil[2][0] - stencil[0][2] + stencil[0][0]) / (4.0 * h * h);
        let det = hxx * hyy - hxy * hxy;

        let mut moved = false;
        if hxx > 0.0 && det > 0.0 {
            let dx = (-(hyy * gx) + hxy * gy) / det;
            let dy = (hxy * gx - hxx * gy) / det;
            let (dx, dy) = (dx.clamp(-h, h), dy.clamp(-h, h));
            let v = f(xi + dx, nu + dy);
            if v < best {
                xi += dx;
                nu += dy;
                best = v;
                moved = true;
            }
        }
        if !moved {
            let (mut bi, mut bj, mut bv) = (1, 1, best);
            for (i, row) in stencil.iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    if v < bv {
                        (bi, bj, bv) = (i, j, v);
                    }
                }
            }
            if bv < best {
                xi += (bi as f64 - 1.0) * h;
                nu += (bj as f64 - 1.0) * h;
                best = bv;
            }
        }
        h *= 0.5;
    }
    (xi.rem_euclid(2.0 * PI), nu.rem_euclid(2.0 * PI), best)
}

/// Nearest pure state to the fitted entries.
pub fn mle_project(fit: &RabiFit) -> StateEstimate {
    let (xi0, nu0, v0) = grid_minimum(fit);
    let (xi, nu, v) = refine(fit, xi0, nu0, v0);
    let n = pure_bloch(xi, nu);
    StateEstimate {
        rho: DensityMatrix::from_bloch_unchecked(n),
        xi,
        nu,
        sigma: 0.25 * v.max(0.0).sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fit_of(rho: &DensityMatrix) -> RabiFit {
        RabiFit::exact(rho.a(), rho.b(), rho.c(), rho.d(), 5.0)
    }

    #[test]
    fn bloch_formula_matches_rotation_matrices() {
        for &(xi, nu) in &[(0.0, 0.0), (0.3, 1.1), (2.5, 0.4), (4.0, 2.9), (PI / 2.0, 1.0)] {
            let m = pure_state(xi, nu);
            let n = pure_bloch(xi, nu);
            let b = m.bloch();
            for k in 0..3 {
                assert!((b[k] - n[k]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn ground_state_projects_to_origin() {
        let est = mle_project(&fit_of(&DensityMatrix::ground()));
        assert_eq!((est.xi, est.nu), (0.0, 0.0));
        assert_eq!(est.sigma, 0.0);
        assert!(est.rho.trace_distance(&DensityMatrix::ground()) < 1e-15);
    }

    #[test]
    fn excited_state_is_recovered() {
        let est = mle_project(&fit_of(&DensityMatrix::excited()));
        assert!(est.rho.trace_distance(&DensityMatrix::excited()) < 1e-12);
        assert!(est.sigma < 1e-7);
    }

    #[test]
    fn maximally_mixed_ties_break_to_origin() {
        let est = mle_project(&fit_of(&DensityMatrix::maximally_mixed()));
        // σ = ¼·√(2·0.25)
        assert!((est.sigma - 0.25 * 0.5f64.sqrt()).abs() < 1e-12);
        assert!((est.sigma - 0.177).abs() < 1e-3);
        assert_eq!((est.xi, est.nu), (0.0, 0.0));
    }

    #[test]
    fn projection_is_exactly_pure() {
        let fit = RabiFit::exact(0.3, 0.2, -0.1, 0.72, 5.0);
        let rho = mle_project(&fit).rho;
        let m = rho.to_matrix();
        assert!((m * m).max_abs_diff(&m) < 1e-10);
    }

    /// Brute-force residual minimum over a dense grid.
    fn brute_force_min(fit: &RabiFit, steps: usize) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..steps {
            let xi = 2.0 * PI * i as f64 / steps as f64;
            for j in 0..steps / 2 {
                let nu = PI * j as f64 / (steps / 2) as f64;
                best = best.min(quadratic_residual(fit, xi, nu));
            }
        }
        best
    }

    #[test]
    fn refined_minimum_beats_million_point_grid() {
        let fits = [
            RabiFit::exact(0.3, 0.2, -0.1, 0.72, 5.0),
            RabiFit::exact(0.55, -0.31, 0.12, 0.47, 5.0),
            RabiFit::exact(0.9, 0.05, 0.2, 0.12, 5.0),
        ];
        for fit in fits {
            let est = mle_project(&fit);
            let v = 16.0 * est.sigma * est.sigma;
            assert!(v <= brute_force_min(&fit, 1414) + 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn projection_matches_leading_eigenvector(a in 0.0f64..1.0, b in -0.5f64..0.5, c in -0.5f64..0.5, noise in -0.03f64..0.03) {
            // The nearest pure state maximises r·n, i.e. points along the
            // fitted Bloch vector.
            let fit = RabiFit::exact(a, b, c, 1.0 - a + noise, 5.0);
            let r = [2.0 * b, 2.0 * c, fit.a - fit.d];
            let norm = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
            prop_assume!(norm > 1e-3);
            let n = mle_project(&fit).rho.bloch();
            let dot = (n[0] * r[0] + n[1] * r[1] + n[2] * r[2]) / norm;
            prop_assert!(dot > 1.0 - 1e-12);
        }
    }
}
