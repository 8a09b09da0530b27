//! Named figure reproductions. Each preset is an ordinary
//! [`SimulationConfig`], so `--dump-preset` output can be edited and fed back.

use crate::config::{Shape, SimulationConfig, StorageCase, Task};
use crate::pulses::Orientation;
use crate::spectra::SweepMode;

pub const PRESET_NAMES: [&str; 10] = [
    "fig2a",
    "fig2b",
    "fig3",
    "fig4",
    "fig5a",
    "fig5b",
    "fig6a",
    "fig6b",
    "fig7",
    "calibrate",
];

/// Back edge of the square probe minus the shutoff lead time.
const SHUTOFF_US: f64 = 24.9;

fn base(name: &str, task: Task) -> SimulationConfig {
    let mut c = SimulationConfig::default();
    c.run.name = name.to_string();
    c.run.task = task;
    c
}

fn widths() -> Vec<f64> {
    (1..=6).map(f64::from).collect()
}

fn storage_case(label: &str, t_off_us: f64, shape: Shape, orientation: Orientation, t_cut_us: f64) -> StorageCase {
    let mut pulse = SimulationConfig::default().pulse;
    pulse.shape = shape;
    pulse.orientation = orientation;
    pulse.t_cut_us = t_cut_us;
    StorageCase {
        label: label.to_string(),
        t_off_us,
        pulse,
    }
}

pub fn preset(name: &str) -> Option<SimulationConfig> {
    let c = match name {
        "fig2a" => {
            let mut c = base(name, Task::Spectrum);
            c.filter.mode = SweepMode::FixedProbe;
            c.filter.alpha = 1.0;
            c
        }
        "fig2b" => base(name, Task::Spectrum),
        "fig3" => {
            let mut c = base(name, Task::Chain);
            c.sweep.values = vec![0.1, 1.0, 10.0, 100.0];
            c
        }
        "fig4" => {
            let mut c = base(name, Task::WidthSweep);
            c.filter.alpha = 0.01;
            c.pulse.shape = Shape::HalfGaussian;
            c.sweep.values = widths();
            c
        }
        "fig5a" => base(name, Task::SidePeaks),
        "fig5b" => {
            let mut c = base(name, Task::DetuningSweep);
            c.sweep.values = vec![-20.0, -10.0, 0.0, 10.0, 20.0];
            c
        }
        "fig6a" => {
            let mut c = base(name, Task::Storage);
            c.storage.cases = vec![storage_case(
                "square",
                SHUTOFF_US,
                Shape::Square,
                Orientation::SharpRise,
                5.0,
            )];
            c
        }
        "fig6b" => {
            let mut c = base(name, Task::Storage);
            let slow = SimulationConfig::default().pulse.delta_t_us;
            c.storage.cases = vec![
                storage_case("square", SHUTOFF_US, Shape::Square, Orientation::SharpRise, 5.0),
                storage_case(
                    "sharp_back",
                    SHUTOFF_US,
                    Shape::HalfGaussian,
                    Orientation::SharpFall,
                    25.0,
                ),
                // Shut off two widths into the slow back edge.
                storage_case(
                    "slow_back",
                    15.0 + 2.0 * slow - 0.1,
                    Shape::HalfGaussian,
                    Orientation::SharpRise,
                    15.0,
                ),
            ];
            c
        }
        "fig7" => {
            let mut c = base(name, Task::WidthSweep);
            c.pulse.shape = Shape::HalfGaussian;
            c.sweep.values = widths();
            c
        }
        "calibrate" => {
            let mut c = base(name, Task::Calibrate);
            c.filter.mode = SweepMode::FixedProbe;
            c
        }
        _ => return None,
    };
    Some(c)
}
