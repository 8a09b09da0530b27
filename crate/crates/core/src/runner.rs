//! Executes a [`SimulationConfig`] and collects everything it produces in
//! memory: CSV files, a JSON manifest and plot descriptions.

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{PulseConfig, Shape, SimulationConfig, Task};
use crate::csv;
use crate::error::Result;
use crate::pipeline::{central_half, detect_side_peaks, EdgeLabel, Pipeline, SidePeakReport};
use crate::pulses::{forward_transform, spectral_fraction_above, Orientation, PulseEnvelope, TimeGrid};
use crate::spectra::{
    absorption_dip, bandwidth_fwhm, calibrate_coupling, chi3_spectrum, combined_filter, transmission_spectrum,
    SpectralResponse, SweepMode,
};
use crate::storage::{simulate_storage, TimingSequence};
use crate::units::mhz;

#[derive(Debug, Clone, PartialEq)]
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// One figure panel.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub name: String,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub name: String,
    pub csv: Vec<OutputFile>,
    pub manifest: Value,
    pub plots: Vec<PlotSpec>,
    /// Human-readable result lines.
    pub summary: Vec<String>,
}

impl RunOutput {
    pub fn manifest_file(&self) -> OutputFile {
        let mut contents = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        contents.push('\n');
        OutputFile {
            name: format!("{}_manifest.json", self.name),
            contents,
        }
    }

    pub fn csv_file(&self, suffix: &str) -> Option<&OutputFile> {
        let name = format!("{}_{suffix}.csv", self.name);
        self.csv.iter().find(|f| f.name == name)
    }
}

struct Collector<'a> {
    config: &'a SimulationConfig,
    meta: String,
    out: RunOutput,
    derived: serde_json::Map<String, Value>,
}

fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).expect("value serializes")
}

fn magnitude_series(label: &str, xs: impl Iterator<Item = f64>, zs: &[num_complex::Complex64], scale: f64) -> Series {
    let s = if scale > 0.0 { scale } else { 1.0 };
    Series {
        label: label.to_string(),
        points: xs.zip(zs).map(|(x, z)| (x, z.norm() / s)).collect(),
    }
}

fn spectrum_series(label: &str, spec: &SpectralResponse, normalize: bool) -> Series {
    let scale = if normalize { spec.max_magnitude() } else { 1.0 };
    magnitude_series(label, spec.grid.points().into_iter(), &spec.amplitude, scale)
}

fn pulse_series(label: &str, p: &PulseEnvelope) -> Series {
    magnitude_series(label, p.grid.times().into_iter(), &p.amplitude, 1.0)
}

/// Edge times and plateau window used for side-peak detection.
fn edges(pulse: &PulseConfig) -> ([f64; 2], (f64, f64)) {
    match pulse.shape {
        Shape::Square => ([pulse.t_a_us, pulse.t_b_us], central_half(pulse.t_a_us, pulse.t_b_us)),
        Shape::HalfGaussian => {
            let (t, d) = (pulse.t_cut_us, pulse.delta_t_us);
            match pulse.orientation {
                Orientation::SharpRise => ([t, t + d], central_half(t, t + d)),
                Orientation::SharpFall => ([t - d, t], central_half(t - d, t)),
            }
        }
    }
}

fn side_peaks(output: &PulseEnvelope, pulse: &PulseConfig) -> Result<SidePeakReport> {
    let ([rise, fall], plateau) = edges(pulse);
    detect_side_peaks(
        output,
        &[(rise, EdgeLabel::Rising), (fall, EdgeLabel::Falling)],
        pulse.peak_window_us,
        plateau,
    )
}

fn label(prefix: &str, v: f64) -> String {
    format!("{prefix}{v}")
}

impl<'a> Collector<'a> {
    fn new(config: &'a SimulationConfig) -> Self {
        Self {
            config,
            meta: config.to_toml(),
            out: RunOutput {
                name: config.run.name.clone(),
                csv: Vec::new(),
                manifest: Value::Null,
                plots: Vec::new(),
                summary: Vec::new(),
            },
            derived: serde_json::Map::new(),
        }
    }

    fn file(&mut self, suffix: &str, contents: String) {
        self.out.csv.push(OutputFile {
            name: format!("{}_{suffix}.csv", self.out.name),
            contents,
        });
    }

    fn plot(&mut self, suffix: &str, title: &str, x: &str, y: &str, series: Vec<Series>) {
        self.out.plots.push(PlotSpec {
            name: format!("{}_{suffix}", self.out.name),
            title: title.to_string(),
            x_label: x.to_string(),
            y_label: y.to_string(),
            series,
        });
    }

    fn derive(&mut self, key: &str, v: impl Serialize) {
        self.derived.insert(key.to_string(), to_value(v));
    }

    fn say(&mut self, line: String) {
        self.out.summary.push(line);
    }

    fn pipeline(&self, grid: TimeGrid) -> Result<Pipeline> {
        let c = self.config;
        let mut p = Pipeline::new(&c.scheme()?, &c.drives(), c.filter.mode, c.filter_params(), grid)?;
        p.window = c.pulse.peak_window_us;
        Ok(p)
    }

    fn finish(mut self) -> RunOutput {
        let c = self.config;
        self.out.manifest = json!({
            "name": c.run.name,
            "task": to_value(c.run.task),
            "config": to_value(c),
            "derived": Value::Object(self.derived),
            "files": self.out.csv.iter().map(|f| f.name.clone()).collect::<Vec<_>>(),
        });
        self.out
    }

    fn spectrum(&mut self) -> Result<()> {
        let c = self.config;
        let grid = c.frequency_grid()?;
        let fp = c.filter_params();
        let chi3 = chi3_spectrum(&c.scheme()?, &c.drives(), c.filter.mode, grid)?;
        let trans = transmission_spectrum(&fp, grid);
        let dip = absorption_dip(&fp, grid);
        let filter = combined_filter(&chi3, &fp)?;
        let fwhm = bandwidth_fwhm(&chi3)?;
        let dip_fwhm = bandwidth_fwhm(&dip).ok();
        self.file("chi3", csv::spectrum(&self.meta, &chi3));
        self.file("transmission", csv::spectrum(&self.meta, &trans));
        self.file("absorption_dip", csv::spectrum(&self.meta, &dip));
        self.file("filter", csv::spectrum(&self.meta, &filter));
        self.derive("fwhm_mhz", fwhm);
        self.derive("absorption_fwhm_mhz", dip_fwhm);
        self.derive("filter_fwhm_mhz", bandwidth_fwhm(&filter).ok());
        self.say(format!("FWM bandwidth (FWHM): {fwhm:.4} MHz"));
        self.plot(
            "spectra",
            "FWM response and transmission",
            "detuning (MHz)",
            "normalized magnitude",
            vec![
                spectrum_series("|chi3|", &chi3, true),
                spectrum_series("|t|", &trans, false),
                spectrum_series("combined", &filter, true),
            ],
        );
        Ok(())
    }

    fn chain(&mut self) -> Result<()> {
        let c = self.config;
        let grid = c.time_grid()?;
        let pl = self.pipeline(grid)?;
        let probe = c.pulse.envelope(grid)?;
        let probe_spec = forward_transform(&probe);
        let mut filtered = probe_spec.clone();
        for (z, h) in filtered.amplitude.iter_mut().zip(&pl.filter().amplitude) {
            *z *= h;
        }
        let output = pl.run(&probe)?;
        let report = side_peaks(&output, &c.pulse)?;
        self.file("probe", csv::pulse(&self.meta, &probe));
        self.file("probe_spectrum", csv::spectrum(&self.meta, &probe_spec));
        self.file("filter", csv::spectrum(&self.meta, pl.filter()));
        self.file("output_spectrum", csv::spectrum(&self.meta, &filtered));
        self.file("output", csv::pulse(&self.meta, &output));
        self.derive("contrast", report.contrast);
        self.derive("side_peaks", &report);
        self.say(format!("side-peak contrast: {:.4}", report.contrast));
        let panels = [
            ("a_probe", "probe", vec![pulse_series("|probe|", &probe)], "time (us)"),
            (
                "b_probe_spectrum",
                "probe spectrum",
                vec![spectrum_series("|P|", &probe_spec, true)],
                "detuning (MHz)",
            ),
            (
                "c_filter",
                "filtering spectrum",
                vec![
                    spectrum_series("|H|", pl.filter(), true),
                    spectrum_series("|P H|", &filtered, true),
                ],
                "detuning (MHz)",
            ),
            (
                "d_output",
                "generated signal",
                vec![pulse_series("|signal|", &output)],
                "time (us)",
            ),
        ];
        for (suffix, title, series, x) in panels {
            self.plot(suffix, title, x, "normalized magnitude", series);
        }
        if !c.sweep.values.is_empty() {
            let sweep = pl.sweep_edge_steepness(&c.sweep.values, c.pulse.square())?;
            self.file("k_sweep", csv::sweep(&self.meta, &sweep));
            self.derive("k_sweep", &sweep.rows);
            self.plot(
                "k_sweep",
                "contrast vs edge coefficient",
                "k (1/us^2)",
                "contrast",
                vec![Series {
                    label: "contrast".into(),
                    points: sweep.rows.iter().map(|r| (r.param, r.contrast)).collect(),
                }],
            );
        }
        Ok(())
    }

    fn side_peaks(&mut self) -> Result<()> {
        let c = self.config;
        let grid = c.time_grid()?;
        let pl = self.pipeline(grid)?;
        let probe = c.pulse.envelope(grid)?;
        let output = pl.run(&probe)?;
        let report = side_peaks(&output, &c.pulse)?;
        self.file(
            "traces",
            csv::channels(&self.meta, &[("probe", &probe), ("signal", &output)]),
        );
        self.derive("contrast", report.contrast);
        self.derive("side_peaks", &report);
        for p in &report.peaks {
            self.say(format!("{:?} peak at {:.2} us, height {:.4}", p.edge, p.time, p.height));
        }
        self.say(format!(
            "plateau {:.4}, contrast {:.4}",
            report.plateau_level, report.contrast
        ));
        self.plot(
            "signal",
            "edge side peaks",
            "time (us)",
            "normalized magnitude",
            vec![pulse_series("probe", &probe), pulse_series("signal", &output)],
        );
        Ok(())
    }

    fn detuning_sweep(&mut self) -> Result<()> {
        let c = self.config;
        let grid = c.time_grid()?;
        let pl = self.pipeline(grid)?;
        let sweep = pl.sweep_detuning(&c.sweep.values, c.pulse.square())?;
        let probe = c.pulse.envelope(grid)?;
        let mut traces = Vec::new();
        for row in &sweep.rows {
            let fp = crate::spectra::FilterParams {
                center_offset: row.param,
                ..c.filter_params()
            };
            traces.push((label("offset_", row.param), pl.with_filter(fp)?.run(&probe)?));
        }
        let named: Vec<(&str, &PulseEnvelope)> = traces.iter().map(|(n, p)| (n.as_str(), p)).collect();
        self.file("sweep", csv::sweep(&self.meta, &sweep));
        self.file("traces", csv::channels(&self.meta, &named));
        self.derive("rows", &sweep.rows);
        for r in &sweep.rows {
            self.say(format!("offset {:>6} MHz: contrast {:.4}", r.param, r.contrast));
        }
        self.plot(
            "traces",
            "signal vs absorption-line offset",
            "time (us)",
            "normalized magnitude",
            traces.iter().map(|(n, p)| pulse_series(n, p)).collect(),
        );
        Ok(())
    }

    fn width_sweep(&mut self) -> Result<()> {
        let c = self.config;
        let grid = c.time_grid()?;
        let pl = self.pipeline(grid)?;
        let shape = c.pulse.half_gaussian();
        let sweep = pl.sweep_pulse_width(&c.sweep.values, shape)?;
        let mut traces = Vec::new();
        let mut fractions = Vec::new();
        for row in &sweep.rows {
            let probe = PulseConfig {
                delta_t_us: row.param,
                shape: Shape::HalfGaussian,
                ..c.pulse.clone()
            }
            .envelope(grid)?;
            fractions.push(vec![row.param, spectral_fraction_above(&probe, c.sweep.cutoff_mhz)]);
            traces.push((label("dt_", row.param), pl.run(&probe)?));
        }
        let named: Vec<(&str, &PulseEnvelope)> = traces.iter().map(|(n, p)| (n.as_str(), p)).collect();
        self.file("sweep", csv::sweep(&self.meta, &sweep));
        self.file(
            "spectral_fraction",
            csv::table(&self.meta, &["delta_t_us", "fraction_above"], &fractions),
        );
        self.file("traces", csv::channels(&self.meta, &named));
        self.derive("rows", &sweep.rows);
        self.derive(
            "spectral_fraction_above",
            fractions
                .iter()
                .map(|r| json!({"delta_t_us": r[0], "fraction": r[1]}))
                .collect::<Vec<_>>(),
        );
        for (r, f) in sweep.rows.iter().zip(&fractions) {
            self.say(format!(
                "dt {} us: peak {:.4}, energy fraction {:.4e}, spectral fraction above {} MHz {:.4e}",
                r.param, r.peak_falling, r.energy_fraction, c.sweep.cutoff_mhz, f[1]
            ));
        }
        self.plot(
            "traces",
            "signal vs pulse width",
            "time (us)",
            "normalized magnitude",
            traces.iter().map(|(n, p)| pulse_series(n, p)).collect(),
        );
        Ok(())
    }

    fn storage(&mut self) -> Result<()> {
        let c = self.config;
        let grid = c.time_grid()?;
        let pl = self.pipeline(grid)?;
        let params = c.storage_params();
        let mut cases = Vec::new();
        for case in &c.storage.cases {
            let probe = case.pulse.envelope(grid)?;
            let timing = TimingSequence::coupling_gap(grid, case.t_off_us, case.t_off_us + c.storage.gap_us);
            let run = simulate_storage(&pl, &probe, &timing, &params)?;
            self.file(
                &case.label,
                csv::channels(
                    &self.meta,
                    &[
                        ("reference", &run.reference),
                        ("leak", &run.leak),
                        ("retrieval", &run.retrieval),
                    ],
                ),
            );
            self.say(format!(
                "{}: suppressed energy {:.4e}, retrieval energy {:.4e}",
                case.label, run.suppressed_energy, run.retrieval_energy
            ));
            for w in &run.warnings {
                self.say(format!("warning ({}): {w}", case.label));
            }
            self.plot(
                &case.label,
                &format!("storage, {}", case.label),
                "time (us)",
                "normalized magnitude",
                vec![
                    pulse_series("reference", &run.reference),
                    pulse_series("leak + retrieval", &run.composite),
                ],
            );
            cases.push(json!({
                "label": case.label,
                "t_off_us": run.t_off,
                "t_on_us": run.t_on,
                "spin_wave": run.spin_wave,
                "suppressed_energy": run.suppressed_energy,
                "retrieval_energy": run.retrieval_energy,
                "warnings": run.warnings,
            }));
        }
        self.derive("cases", cases);
        Ok(())
    }

    fn calibrate(&mut self) -> Result<()> {
        let c = self.config;
        let scheme = c.scheme()?;
        let grid = c.frequency_grid()?;
        let cal = &c.calibration;
        let result = calibrate_coupling(
            &scheme,
            &c.drives(),
            grid,
            cal.target_fwhm_mhz,
            (cal.lo_mhz, cal.hi_mhz),
            cal.tol_mhz,
        )?;
        let mut drives = c.drives();
        drives.omega_c = mhz(result.omega_c_mhz).into();
        let chi3 = chi3_spectrum(&scheme, &drives, SweepMode::FixedProbe, grid)?;
        let dip = absorption_dip(&c.filter_params(), grid);
        let dip_fwhm = bandwidth_fwhm(&dip).ok();
        self.file("chi3", csv::spectrum(&self.meta, &chi3));
        self.file("absorption_dip", csv::spectrum(&self.meta, &dip));
        self.derive("omega_c_mhz", result.omega_c_mhz);
        self.derive("fwhm_mhz", result.fwhm_mhz);
        self.derive("target_mhz", result.target_mhz);
        self.derive("iterations", result.iterations);
        self.derive("absorption_fwhm_mhz", dip_fwhm);
        self.say(format!("omega_c_mhz = {}", result.omega_c_mhz));
        self.say(format!(
            "FWHM {:.6} MHz (target {} MHz) after {} iterations",
            result.fwhm_mhz, result.target_mhz, result.iterations
        ));
        self.plot(
            "spectrum",
            "calibrated FWM response",
            "detuning (MHz)",
            "normalized magnitude",
            vec![
                spectrum_series("|chi3|", &chi3, true),
                spectrum_series("absorption dip", &dip, false),
            ],
        );
        Ok(())
    }
}

/// Validates `config` and runs its task.
pub fn run(config: &SimulationConfig) -> Result<RunOutput> {
    config.validate()?;
    let mut col = Collector::new(config);
    match config.run.task {
        Task::Spectrum => col.spectrum()?,
        Task::Chain => col.chain()?,
        Task::SidePeaks => col.side_peaks()?,
        Task::DetuningSweep => col.detuning_sweep()?,
        Task::WidthSweep => col.width_sweep()?,
        Task::Storage => col.storage()?,
        Task::Calibrate => col.calibrate()?,
    }
    Ok(col.finish())
}
