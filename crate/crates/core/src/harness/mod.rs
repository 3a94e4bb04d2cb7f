//! Reproduction harness: robustness scans, single closed-loop demos, the
//! open-loop transfer comparison, process tomography of pulse files, and
//! the flat-file formats behind them.

pub mod compare;
pub mod config;
pub mod demo;
pub mod io;
pub mod scan;

pub use compare::{compare_records, run_openloop_comparison, ComparisonTable, Perturbation};
pub use config::RunConfig;
pub use demo::{run_gate_demo, run_qpt, run_state_transfer_demo, ChiReport, Manifest};
pub use scan::{run_scan, ScanResult, ScanSpec};
