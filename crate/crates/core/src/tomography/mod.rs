//! State and process reconstruction from Rabi scans, and the figures of
//! merit fed to the optimizer.

pub mod fidelity;
pub mod fit;
pub mod mle;
pub mod process;

pub use fidelity::{
    exact_gate_fidelity, exact_state_transfer_fidelity, gate_fom, gate_g, state_tomography, state_tomography_with,
    state_transfer_fom, FidelityEstimate,
};
pub use fit::{fit_rabi, RabiFit};
pub use mle::{mle_project, StateEstimate};
pub use process::{chi_from_final_states, chi_of_unitary, chi_verbatim, process_tomography, ChiMatrix};
