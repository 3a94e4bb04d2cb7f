//! Single-qubit process tomography in the operator basis
//! {e₁ = 𝟙, e₂ = σx, e₃ = −iσy, e₄ = σz}.
//!
//! The Pauli matrices are taken in (|−1⟩, |0⟩) order, where σz|−1⟩ = |−1⟩.
//! Final states of the four preparations are first mapped to the images of
//! the matrix units |j⟩⟨k| through M⁻¹, then assembled into χ with
//! Λ = ½[[𝟙, σx], [σx, −𝟙]].

use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fidelity::state_tomography;
use crate::error::Result;
use crate::plant::{Plant, Preparation};
use crate::qubit::{ComplexMat2, DensityMatrix, PulseWaveform};

pub const BASIS_LABELS: [&str; 4] = ["1", "sigma_x", "-i sigma_y", "sigma_z"];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const HALF: Complex64 = Complex64::new(0.5, 0.0);
const HALF_I: Complex64 = Complex64::new(0.0, 0.5);

/// 4×4 process matrix, serialised as rows of `[re, im]` pairs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiMatrix(pub [[Complex64; 4]; 4]);

impl ChiMatrix {
    pub fn zero() -> Self {
        Self([[ZERO; 4]; 4])
    }

    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.0[m][n]
    }

    pub fn trace(&self) -> Complex64 {
        (0..4).map(|k| self.0[k][k]).sum()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for m in 0..4 {
            for n in 0..4 {
                worst = worst.max((self.0[m][n] - self.0[n][m].conj()).norm());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst = 0.0f64;
        for m in 0..4 {
            for n in 0..4 {
                worst = worst.max((self.0[m][n] - other.0[m][n]).norm());
            }
        }
        worst
    }

    pub fn real(&self) -> [[f64; 4]; 4] {
        self.0.map(|row| row.map(|z| z.re))
    }

    pub fn imag(&self) -> [[f64; 4]; 4] {
        self.0.map(|row| row.map(|z| z.im))
    }

    fn from_matrix4(m: &Matrix4<Complex64>) -> Self {
        let mut out = [[ZERO; 4]; 4];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = m[(r, c)];
            }
        }
        Self(out)
    }
}

/// Preparation states as coefficients over (|−1⟩⟨−1|, |−1⟩⟨0|, |0⟩⟨−1|, |0⟩⟨0|).
fn preparation_matrix() -> Matrix4<Complex64> {
    Matrix4::new(
        ZERO, ZERO, ZERO, ONE, //
        ONE, ZERO, ZERO, ZERO, //
        HALF, -HALF_I, HALF_I, HALF, //
        HALF, HALF, HALF, HALF,
    )
}

/// The same table with fourth row (0.5, −0.5, −0.5, 0.5), which does not
/// match ψ₄.
fn verbatim_preparation_matrix() -> Matrix4<Complex64> {
    let mut m = preparation_matrix();
    m[(3, 1)] = -HALF;
    m[(3, 2)] = -HALF;
    m
}

fn matrix_unit_images(rho_f: &[DensityMatrix; 4], m: &Matrix4<Complex64>) -> [ComplexMat2; 4] {
    let inv = m.try_inverse().expect("preparation matrix is invertible");
    let finals = rho_f.map(|r| r.to_swapped_matrix());
    std::array::from_fn(|j| {
        (0..4).fold(ComplexMat2::zero(), |acc, i| acc + finals[i].scale_c(inv[(j, i)]))
    })
}

fn block(blocks: [[ComplexMat2; 2]; 2]) -> Matrix4<Complex64> {
    Matrix4::from_fn(|r, c| blocks[r / 2][c / 2].get(r % 2, c % 2))
}

/// χ from the final states of ψ₁…ψ₄.
pub fn chi_from_final_states(rho_f: &[DensityMatrix; 4]) -> ChiMatrix {
    let [e11, e12, e21, e22] = matrix_unit_images(rho_f, &preparation_matrix());
    let id = ComplexMat2::identity();
    let sx = ComplexMat2::sigma_x();
    let lambda = block([[id.scale(0.5), sx.scale(0.5)], [sx.scale(0.5), id.scale(-0.5)]]);
    ChiMatrix::from_matrix4(&(lambda * block([[e11, e12], [e21, e22]]) * lambda))
}

/// The construction with that row and an unnormalised β = [[𝟙, 𝟙], [𝟙, −𝟙]].
/// Kept for comparison: it does not reproduce the identity process.
pub fn chi_verbatim(rho_f: &[DensityMatrix; 4]) -> ChiMatrix {
    let [e11, e12, e21, e22] = matrix_unit_images(rho_f, &verbatim_preparation_matrix());
    let id = ComplexMat2::identity();
    let beta = block([[id, id], [id, id.scale(-1.0)]]);
    ChiMatrix::from_matrix4(&(beta * block([[e11, e12], [e21, e22]]) * beta))
}

/// Analytic χ of ρ ↦ UρU†, χ_mn = c_m c_n* with U = Σ c_m e_m.
pub fn chi_of_unitary(u: &ComplexMat2) -> ChiMatrix {
    let up = u.swap_levels();
    let minus_i_sy = ComplexMat2::sigma_y().scale_c(Complex64::new(0.0, -1.0));
    let basis = [ComplexMat2::identity(), ComplexMat2::sigma_x(), minus_i_sy, ComplexMat2::sigma_z()];
    let coeff = basis.map(|e| (e.adjoint() * up).trace() * 0.5);
    let mut out = [[ZERO; 4]; 4];
    for (m, row) in out.iter_mut().enumerate() {
        for (n, v) in row.iter_mut().enumerate() {
            *v = coeff[m] * coeff[n].conj();
        }
    }
    ChiMatrix(out)
}

/// Final states of ψ₁…ψ₄ after `pulse`, reconstructed by state tomography.
pub fn final_states<P: Plant + ?Sized>(plant: &mut P, pulse: &PulseWaveform, repetitions: u64) -> Result<[DensityMatrix; 4]> {
    let mut out = [DensityMatrix::ground(); 4];
    for prep in Preparation::ALL {
        plant.prepare(prep);
        plant.apply(pulse)?;
        out[prep.index()] = state_tomography(plant, repetitions)?.rho;
    }
    Ok(out)
}

pub fn process_tomography<P: Plant + ?Sized>(plant: &mut P, pulse: &PulseWaveform, repetitions: u64) -> Result<ChiMatrix> {
    Ok(chi_from_final_states(&final_states(plant, pulse, repetitions)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::{SimPlant, SimPlantConfig};
    use crate::qubit::PlantParams;
    use proptest::prelude::*;
    use crate::tomography::fidelity::gate_g;

    fn outputs(u: &ComplexMat2) -> [DensityMatrix; 4] {
        Preparation::ALL.map(|p| p.density().transformed(u))
    }

    fn assert_single_unit(chi: &ChiMatrix, k: usize) {
        for m in 0..4 {
            for n in 0..4 {
                let want = if m == k && n == k { 1.0 } else { 0.0 };
                assert!((chi.get(m, n) - Complex64::new(want, 0.0)).norm() < 1e-9, "({m},{n}) = {}", chi.get(m, n));
            }
        }
    }

    #[test]
    fn identity_process() {
        let chi = chi_from_final_states(&outputs(&ComplexMat2::identity()));
        assert_single_unit(&chi, 0);
        assert!(chi.max_abs_diff(&chi_of_unitary(&ComplexMat2::identity())) < 1e-12);
    }

    #[test]
    fn pi_x_process() {
        let u = ComplexMat2::sigma_x().scale_c(Complex64::new(0.0, -1.0));
        assert_single_unit(&chi_from_final_states(&outputs(&u)), 1);
    }

    #[test]
    fn g_process() {
        let chi = chi_from_final_states(&outputs(&gate_g()));
        assert!(chi.max_abs_diff(&chi_of_unitary(&gate_g())) < 1e-12);
        let re = chi.real();
        let im = chi.imag();
        for (k, want) in [0.5, 0.5, 0.0, 0.0].iter().enumerate() {
            assert!((re[k][k] - want).abs() < 1e-12);
        }
        assert!((im[0][1] - 0.5).abs() < 1e-12);
        assert!((im[1][0] + 0.5).abs() < 1e-12);
        assert!((chi.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn verbatim_construction_misses_identity() {
        let rho = outputs(&ComplexMat2::identity());
        let deviation = chi_verbatim(&rho).max_abs_diff(&chi_from_final_states(&rho));
        assert!(deviation > 0.1, "deviation {deviation}");
    }

    #[test]
    fn tomography_of_g_pulse() {
        let p = PlantParams::from_relative(5.0, 0.0, 0.5).unwrap();
        let mut plant = SimPlant::new(SimPlantConfig::noiseless(p)).unwrap();
        let pulse = PulseWaveform::rectangular(p.duration_us, 50, 1.0, 0.0).unwrap();
        let chi = process_tomography(&mut plant, &pulse, 1).unwrap();
        assert!(chi.max_abs_diff(&chi_of_unitary(&gate_g())) < 1e-6);

        let id = PulseWaveform::zero(p.duration_us, 50).unwrap();
        let chi = process_tomography(&mut plant, &id, 1).unwrap();
        assert!(chi.max_abs_diff(&chi_of_unitary(&ComplexMat2::identity())) < 1e-6);
    }

    #[test]
    fn noisy_tomography_of_g_pulse() {
        let p = PlantParams::from_relative(5.0, 0.0, 0.5).unwrap();
        let pulse = PulseWaveform::rectangular(p.duration_us, 50, 1.0, 0.0).unwrap();
        let target = chi_of_unitary(&gate_g());
        let mut ok = 0;
        for seed in 0..10 {
            let mut plant = SimPlant::new(SimPlantConfig::noisy(p, 10_000, seed)).unwrap();
            let chi = process_tomography(&mut plant, &pulse, 10_000).unwrap();
            if chi.max_abs_diff(&target) < 0.05 {
                ok += 1;
            }
        }
        assert!(ok >= 9, "{ok}/10");
    }

    #[test]
    fn serialises_as_pairs() {
        let json = serde_json::to_string(&chi_of_unitary(&gate_g())).unwrap();
        assert!(json.starts_with("[[[0.5"), "{json}");
        let back: ChiMatrix = serde_json::from_str(&json).unwrap();
        assert_eq!(back, chi_of_unitary(&gate_g()));
    }

    fn arb_state() -> impl Strategy<Value = DensityMatrix> {
        (0.0f64..1.0, 0.0f64..std::f64::consts::TAU, 0.0f64..std::f64::consts::PI).prop_map(|(r, phi, theta)| {
            let n = [r * theta.sin() * phi.cos(), r * theta.sin() * phi.sin(), r * theta.cos()];
            DensityMatrix::from_entries(0.5 * (1.0 + n[2]), 0.5 * n[0], 0.5 * n[1], 0.5 * (1.0 - n[2])).unwrap()
        })
    }

    proptest! {
        #[test]
        fn chi_is_linear(a in prop::array::uniform4(arb_state()), b in prop::array::uniform4(arb_state()), t in 0.0f64..1.0) {
            let mix: [DensityMatrix; 4] = std::array::from_fn(|i| {
                let (x, y) = (a[i], b[i]);
                DensityMatrix::from_entries(
                    t * x.a() + (1.0 - t) * y.a(),
                    t * x.b() + (1.0 - t) * y.b(),
                    t * x.c() + (1.0 - t) * y.c(),
                    t * x.d() + (1.0 - t) * y.d(),
                ).unwrap()
            });
            let (ca, cb, cm) = (chi_from_final_states(&a), chi_from_final_states(&b), chi_from_final_states(&mix));
            for m in 0..4 {
                for n in 0..4 {
                    let lin = ca.get(m, n) * t + cb.get(m, n) * (1.0 - t);
                    prop_assert!((cm.get(m, n) - lin).norm() < 1e-12);
                }
            }
            prop_assert!(ca.hermiticity_defect() < 1e-9);
        }

        #[test]
        fn unitary_outputs_match_oracle(hx in -3.0f64..3.0, hy in -3.0f64..3.0, hz in -3.0f64..3.0) {
            let u = crate::qubit::pauli_rotation_propagator(hx, hy, hz, 1.0).unwrap();
            let chi = chi_from_final_states(&outputs(&u));
            prop_assert!(chi.max_abs_diff(&chi_of_unitary(&u)) < 1e-12);
            prop_assert!((chi.trace().re - 1.0).abs() < 1e-12);
        }
    }
}
