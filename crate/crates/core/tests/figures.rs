use std::sync::OnceLock;

use fwm_core::atom::{AtomScheme, DriveFields};
use fwm_core::pipeline::{HalfGaussianShape, Pipeline, SquareShape};
use fwm_core::pulses::{half_gaussian_pulse, square_pulse, Orientation, TimeGrid};
use fwm_core::spectra::{absorption_dip, bandwidth_fwhm, chi3_spectrum, FilterParams, FrequencyGrid, SweepMode};
use fwm_core::storage::{simulate_storage, StorageParams, TimingSequence};

fn pipeline() -> &'static Pipeline {
    static P: OnceLock<Pipeline> = OnceLock::new();
    P.get_or_init(|| {
        Pipeline::new(
            &AtomScheme::default(),
            &DriveFields::default(),
            SweepMode::TwoPhotonLocked,
            FilterParams::default(),
            TimeGrid::default(),
        )
        .unwrap()
    })
}

#[test]
fn side_peaks_follow_the_absorption_line() {
    let sweep = pipeline()
        .sweep_detuning(&[20.0, -20.0, 0.0, -10.0, 10.0], SquareShape::default())
        .unwrap();
    let c: Vec<f64> = sweep.rows.iter().map(|r| r.contrast).collect();
    assert_eq!(sweep.rows[0].param, -20.0);
    assert!(c[2] > 3.0, "{c:?}");
    assert!(c[0] < 1.2 && c[4] < 1.2, "{c:?}");
    for (a, b) in [(0, 4), (1, 3)] {
        assert!((c[a] - c[b]).abs() < 0.02 * c[a], "{c:?}");
    }
}

#[test]
fn sharper_edges_give_stronger_peaks() {
    let sweep = pipeline()
        .sweep_edge_steepness(&[0.1, 1.0, 10.0, 100.0], SquareShape::default())
        .unwrap();
    let c: Vec<f64> = sweep.rows.iter().map(|r| r.contrast).collect();
    assert!(c.windows(2).all(|w| w[1] >= w[0]), "{c:?}");
    assert!(c[0] < 1.1);
}

#[test]
fn broader_pulses_lose_less_to_the_filter_edges() {
    let widths = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
    let sweep = pipeline()
        .sweep_pulse_width(&widths, HalfGaussianShape::default())
        .unwrap();
    assert_eq!(sweep.rows.len(), 6);
    let e: Vec<f64> = sweep.rows.iter().map(|r| r.energy_fraction).collect();
    assert!(e.windows(2).all(|w| w[1] < w[0]), "{e:?}");
    assert!(e.iter().all(|&x| x > 0.0 && x < 1.0));
}

#[test]
fn storage_favors_gaps_over_the_sharp_edge() {
    let p = pipeline();
    let grid = p.grid();
    let params = StorageParams::default();
    let run = |probe, t_off: f64| {
        let timing = TimingSequence::coupling_gap(grid, t_off, t_off + 12.0);
        simulate_storage(p, &probe, &timing, &params).unwrap()
    };
    let square = run(square_pulse(15.0, 25.0, 100.0, grid).unwrap(), 24.9);
    let sharp = run(
        half_gaussian_pulse(25.0, 3.0, Orientation::SharpFall, grid).unwrap(),
        24.9,
    );
    let slow = run(
        half_gaussian_pulse(15.0, 3.0, Orientation::SharpRise, grid).unwrap(),
        20.9,
    );
    assert!(square.retrieval_energy > 10.0 * slow.retrieval_energy);
    assert!(sharp.retrieval_energy > 10.0 * slow.retrieval_energy);
    assert!(square.retrieval_energy > 0.05 * square.suppressed_energy);
    assert!(square.warnings.is_empty());

    let lossy = StorageParams { eta: 0.0, ..params };
    let timing = TimingSequence::coupling_gap(grid, 24.9, 36.9);
    let none = simulate_storage(p, &square_pulse(15.0, 25.0, 100.0, grid).unwrap(), &timing, &lossy).unwrap();
    assert_eq!(none.retrieval_energy, 0.0);
    assert!(none
        .composite
        .amplitude
        .iter()
        .zip(&none.leak.amplitude)
        .all(|(a, b)| a == b));
}

#[test]
fn default_coupling_meets_the_bandwidth_target() {
    let scheme = AtomScheme::default();
    let grid = FrequencyGrid::symmetric(40.0, 801).unwrap();
    let chi3 = chi3_spectrum(&scheme, &DriveFields::default(), SweepMode::FixedProbe, grid).unwrap();
    let width = bandwidth_fwhm(&chi3).unwrap();
    assert!((width - 10.0).abs() < 2.0, "{width}");
    let dip = bandwidth_fwhm(&absorption_dip(&FilterParams::default(), grid)).unwrap();
    assert!(width > dip, "{width} vs {dip}");
}
