//! Phenomenological write/read of the generated signal into the ground-state
//! spin wave while the coupling field is switched off.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::Pipeline;
use crate::pulses::{PulseEnvelope, TimeGrid};

/// On-interval of a control channel, μs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub t_on: f64,
    pub t_off: f64,
}

impl Interval {
    pub fn new(t_on: f64, t_off: f64) -> Self {
        Self { t_on, t_off }
    }
}

/// On-intervals per channel, ascending and non-overlapping.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingSequence {
    pub coupling: Vec<Interval>,
    pub pump: Vec<Interval>,
    pub probe: Vec<Interval>,
}

const TIME_EPS: f64 = 1e-9;

fn is_on(channel: &[Interval], t: f64) -> bool {
    channel
        .iter()
        .any(|iv| t >= iv.t_on - TIME_EPS && t < iv.t_off - TIME_EPS)
}

impl TimingSequence {
    /// Coupling off on [t_off, t_on); pump and probe on for the whole grid.
    pub fn coupling_gap(grid: TimeGrid, t_off: f64, t_on: f64) -> Self {
        let (start, end) = (grid.t_start, grid.end() + grid.dt);
        Self {
            coupling: vec![Interval::new(start, t_off), Interval::new(t_on, end)],
            pump: vec![Interval::new(start, end)],
            probe: vec![Interval::new(start, end)],
        }
    }

    pub fn validate(&self, grid: TimeGrid) -> Result<()> {
        let (start, end) = (grid.t_start, grid.end() + grid.dt);
        for (name, channel) in [
            ("timing.coupling", &self.coupling),
            ("timing.pump", &self.pump),
            ("timing.probe", &self.probe),
        ] {
            let mut last = f64::NEG_INFINITY;
            for iv in channel {
                if !(iv.t_on.is_finite() && iv.t_off.is_finite()) {
                    return Err(Error::NonFinite(name));
                }
                if iv.t_on >= iv.t_off || iv.t_on < last {
                    return Err(Error::invalid(name, "intervals must be ascending and non-overlapping"));
                }
                if iv.t_on < start - TIME_EPS || iv.t_off > end + TIME_EPS {
                    return Err(Error::invalid(name, "interval outside the time grid"));
                }
                last = iv.t_off;
            }
        }
        Ok(())
    }

    /// The single coupling off-gap (t_off, t_on).
    pub fn off_gap(&self) -> Result<(f64, f64)> {
        let gaps: Vec<(f64, f64)> = self
            .coupling
            .windows(2)
            .filter(|w| w[1].t_on > w[0].t_off)
            .map(|w| (w[0].t_off, w[1].t_on))
            .collect();
        match gaps.as_slice() {
            [gap] => Ok(*gap),
            _ => Err(Error::NoOffGap { gaps: gaps.len() }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StorageParams {
    pub eta: f64,
    /// μs
    pub tau_s: f64,
    /// μs
    pub write_window: f64,
    /// μs⁻¹
    pub readout_rate: f64,
}

impl Default for StorageParams {
    fn default() -> Self {
        Self {
            eta: 0.5,
            tau_s: 50.0,
            write_window: 1.0,
            readout_rate: 5.0,
        }
    }
}

impl StorageParams {
    pub fn validate(&self) -> Result<()> {
        let v = [self.eta, self.tau_s, self.write_window, self.readout_rate];
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("storage parameters"));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::invalid("storage.eta", "must lie in [0, 1]"));
        }
        for (name, x) in [
            ("storage.tau_s", self.tau_s),
            ("storage.write_window", self.write_window),
            ("storage.readout_rate", self.readout_rate),
        ] {
            if x <= 0.0 {
                return Err(Error::invalid(name, "must be > 0"));
            }
        }
        Ok(())
    }
}

/// Traces share one normalization: the larger peak of reference and
/// composite is 1.
#[derive(Debug, Clone, PartialEq)]
pub struct StorageRun {
    /// Signal with every field left on.
    pub reference: PulseEnvelope,
    /// Signal emitted while the control fields are on.
    pub leak: PulseEnvelope,
    pub retrieval: PulseEnvelope,
    pub composite: PulseEnvelope,
    /// Spin-wave amplitude at readout, in units of the unnormalized signal.
    pub spin_wave: f64,
    pub t_off: f64,
    pub t_on: f64,
    /// Reference energy inside the off-gap.
    pub suppressed_energy: f64,
    pub retrieval_energy: f64,
    pub warnings: Vec<String>,
}

/// Stores `signal` (already generated, max-normalized) across the coupling
/// off-gap of `timing`.
pub fn store_signal(signal: &PulseEnvelope, timing: &TimingSequence, params: &StorageParams) -> Result<StorageRun> {
    let grid = signal.grid;
    params.validate()?;
    timing.validate(grid)?;
    let (t_off, t_on) = timing.off_gap()?;
    let mut warnings = Vec::new();

    let mut leak = signal.clone();
    for (i, z) in leak.amplitude.iter_mut().enumerate() {
        let t = grid.t(i);
        if !(is_on(&timing.coupling, t) && is_on(&timing.pump, t)) {
            *z = C64::new(0.0, 0.0);
        }
    }

    let write = grid.index_range(t_off - TIME_EPS, t_off + params.write_window - TIME_EPS);
    let written: f64 = write.clone().map(|i| signal.amplitude[i].norm()).sum::<f64>() * grid.dt;
    if write.is_empty() || written <= 1e-6 * params.write_window {
        warnings.push(format!(
            "off-gap at {t_off} us misses the signal support; nothing is stored"
        ));
    }
    let spin_wave = written * (-(t_on - t_off) / params.tau_s).exp();

    let mut retrieval = PulseEnvelope::zeros(grid);
    let r = params.readout_rate;
    for (i, z) in retrieval.amplitude.iter_mut().enumerate() {
        let t = grid.t(i);
        if t >= t_on - TIME_EPS {
            *z = C64::from(params.eta * spin_wave * r * (-r * (t - t_on)).exp());
        }
    }

    let mut composite = leak.clone();
    for (c, s) in composite.amplitude.iter_mut().zip(&retrieval.amplitude) {
        *c += s;
    }

    let scale = signal.max_magnitude().max(composite.max_magnitude());
    let (reference, leak, retrieval, composite) = (
        signal.scaled(scale),
        leak.scaled(scale),
        retrieval.scaled(scale),
        composite.scaled(scale),
    );
    let suppressed_energy = retrieval_energy(&reference, (t_off, t_on))?;
    let retrieval_energy = retrieval_energy(&retrieval, (t_on.min(grid.end()), grid.end() + grid.dt))?;
    Ok(StorageRun {
        reference,
        leak,
        retrieval,
        composite,
        spin_wave,
        t_off,
        t_on,
        suppressed_energy,
        retrieval_energy,
        warnings,
    })
}

/// Generates the signal for `probe` and stores it across the off-gap.
pub fn simulate_storage(
    pipeline: &Pipeline,
    probe: &PulseEnvelope,
    timing: &TimingSequence,
    params: &StorageParams,
) -> Result<StorageRun> {
    timing.validate(probe.grid)?;
    timing.off_gap()?;
    store_signal(&pipeline.run(probe)?, timing, params)
}

/// Σ |a|² dt over samples with `from <= t < to`.
pub fn retrieval_energy(trace: &PulseEnvelope, window: (f64, f64)) -> Result<f64> {
    let grid = trace.grid;
    let (from, to) = window;
    let end = grid.end() + grid.dt;
    if !(from.is_finite() && to.is_finite()) || from > to || from < grid.t_start - TIME_EPS || to > end + TIME_EPS {
        return Err(Error::WindowOutsideGrid { from, to });
    }
    Ok(grid
        .index_range(from, to)
        .map(|i| trace.amplitude[i].norm_sqr())
        .sum::<f64>()
        * grid.dt)
}
