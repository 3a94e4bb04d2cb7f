use autocal::dcrab::{evaluate_pulse_open_loop, DcrabConfig, FomKind};
use autocal::harness::{run_gate_demo, run_scan, run_state_transfer_demo, Perturbation, RunConfig, ScanSpec};
use autocal::qubit::{PlantParams, PulseWaveform, DEFAULT_SAMPLES};

fn scan(durations: &[f64], detunings: &[f64], runs: usize) -> autocal::harness::ScanResult {
    let spec = ScanSpec {
        durations_rel: durations.to_vec(),
        detunings_rel: detunings.to_vec(),
        runs,
        dcrab: DcrabConfig::default(),
        master_seed: 1,
        rabi_mhz: 5.0,
    };
    run_scan(&spec, 0).unwrap()
}

#[test]
fn pi_time_cell_reaches_inversion() {
    let r = scan(&[1.0], &[0.0], 20);
    let cell = r.cell(1.0, 0.0).unwrap();
    assert!(cell.mean >= 0.999, "{cell:?}");
    assert_eq!(cell.failed, 0);
}

#[test]
fn scan_shows_plateau_and_detuning_degradation() {
    let r = scan(&[1.5, 2.0], &[0.0, 0.2, 4.0, 10.0], 5);
    for t in [1.5, 2.0] {
        for d in [0.0, 0.2] {
            assert!(r.cell(t, d).unwrap().mean >= 0.99, "{t} {d}");
        }
        assert!(r.cell(t, 10.0).unwrap().mean < r.cell(t, 0.0).unwrap().mean);
        assert!(r.cell(t, 10.0).unwrap().mean < r.cell(t, 4.0).unwrap().mean);
    }
}

#[test]
fn amplitude_miscalibrated_pi_pulse() {
    let p = PlantParams::from_relative(5.0, 0.0, 1.0).unwrap();
    let pulse = PulseWaveform::rectangular(p.duration_us, DEFAULT_SAMPLES, 1.0, 0.0).unwrap();
    let pert = Perturbation { amp_scale: 1.2, detuning_offset_rel: 0.0 };
    let truth = pert.plant(p).unwrap().true_params().unwrap();
    let f = evaluate_pulse_open_loop(&pulse, &truth, FomKind::StateTransfer).value;
    let oracle = (1.2 * std::f64::consts::FRAC_PI_2).sin().powi(2);
    assert!((f - oracle).abs() < 1e-9 && (f - 0.9045).abs() < 1e-4, "{f}");
}

fn demo_config(detuning_rel: f64, noise: bool, seed: u64) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.plant.detuning_rel = detuning_rel;
    cfg.plant.noise = noise;
    cfg.dcrab.seed = seed;
    cfg
}

#[test]
fn inversion_demos() {
    for (det, noise, floor) in [(0.0, false, 0.99), (0.2, false, 0.98), (0.2, true, 0.98)] {
        let r = run_state_transfer_demo(&demo_config(det, noise, 5)).unwrap();
        assert!(r.best.value >= floor, "{det} {noise}: {}", r.best.value);
    }
}

#[test]
fn noisy_trace_is_stochastic() {
    let r = run_state_transfer_demo(&demo_config(0.2, true, 5)).unwrap();
    assert!(r.trace.iter().any(|t| t.sigma > 0.0));
    // Repeated coefficient sets do not give repeated values.
    let mut clean = demo_config(0.2, false, 5);
    clean.dcrab.super_iterations = 1;
    let mut noisy = clean.clone();
    noisy.plant.noise = true;
    let a = run_state_transfer_demo(&clean).unwrap();
    let b = run_state_transfer_demo(&noisy).unwrap();
    assert_ne!(a.trace[0].fom, b.trace[0].fom);
}

#[test]
fn gate_demos_with_chi_report() {
    for (det, floor) in [(0.0, 0.98), (0.7, 0.96)] {
        let mut cfg = demo_config(det, false, 2);
        cfg.plant.duration_rel = 1.0;
        let (r, report) = run_gate_demo(&cfg).unwrap();
        assert!(r.best.value >= floor, "{det}: {}", r.best.value);
        let diag: Vec<f64> = (0..4).map(|i| report.real[i][i]).collect();
        for (got, want) in diag.iter().zip([0.5, 0.5, 0.0, 0.0]) {
            assert!((got - want).abs() < 0.05, "{diag:?}");
        }
        assert!((report.imag[0][1] - 0.5).abs() < 0.05 && (report.imag[1][0] + 0.5).abs() < 0.05);
        assert!(report.max_deviation_from_target < 0.05);
        assert!((report.trace - 1.0).abs() < 1e-9);
    }
}
