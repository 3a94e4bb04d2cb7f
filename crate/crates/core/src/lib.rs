//! Closed-loop calibration of single spin-qubit operations.
//!
//! The crate is organised bottom-up:
//!
//! * [`qubit`] – exact 2×2 linear algebra and piecewise-constant time
//!   evolution of the driven two-level system.
//! * [`plant`] – the "experiment" seen by the closed loop: preparation,
//!   pulse application and shot-noise-limited population readout.
//! * [`tomography`] – Rabi-fit state tomography, pure-state maximum
//!   likelihood projection, fidelity estimators and χ-matrix process
//!   tomography.
//! * [`dcrab`] – dressed chopped-random-basis pulse optimisation with a
//!   Nelder-Mead inner search.
//! * [`harness`] – parameter scans, demo runs, open-loop comparison and
//!   file formats used by the `autocal` command-line tool.

pub mod dcrab;
pub mod error;
pub mod harness;
pub mod plant;
pub mod qubit;
pub mod seed;
pub mod tomography;

pub use error::{Error, Result};
pub use num_complex::Complex64;
