//! Storage/retrieval timeline and the figures of merit used to judge it.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::control::{ControlProfile, RampShape, SwitchEvent};
use crate::error::{Error, Result};
use crate::medium::MediumParams;
use crate::numeric::{fit_exponential, golden_section, lerp_samples};
use crate::photonstats::CoincidenceHistogram;
use crate::propagation::{self, spinwave_energy, MediumState, DEFAULT_NZ};
use crate::waveform::{TimeGrid, Waveform};

/// Default coupling switch-on/off duration.
pub const DEFAULT_RAMP: f64 = 50e-9;

/// When the coupling is switched off and back on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StorageSchedule {
    /// Midpoint of the switch-off ramp, seconds.
    pub t_off: f64,
    /// Midpoint of the switch-on ramp, seconds.
    pub t_on: f64,
    pub ramp: f64,
    pub shape: RampShape,
}

impl StorageSchedule {
    pub fn new(t_off: f64, t_on: f64, ramp: f64) -> Result<Self> {
        let schedule = StorageSchedule {
            t_off,
            t_on,
            ramp,
            shape: RampShape::default(),
        };
        schedule.validate()?;
        Ok(schedule)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_off.is_finite() && self.t_on.is_finite()) {
            return Err(Error::invalid("schedule", "switch times must be finite"));
        }
        if !(self.ramp.is_finite() && self.ramp > 0.0) {
            return Err(Error::invalid("schedule.ramp", "must be > 0"));
        }
        if self.t_on <= self.t_off {
            return Err(Error::invalid("schedule.t_on", "must be later than t_off"));
        }
        if self.t_on - self.t_off < self.ramp {
            return Err(Error::invalid(
                "schedule",
                "storage time must be at least one ramp so the ramps do not overlap",
            ));
        }
        Ok(())
    }

    pub fn storage_time(&self) -> f64 {
        self.t_on - self.t_off
    }

    /// Midpoint of the storage interval; the default time-reversal pivot.
    pub fn pivot(&self) -> f64 {
        0.5 * (self.t_off + self.t_on)
    }

    /// Start of the retrieval gate.
    pub fn retrieval_gate(&self) -> f64 {
        self.t_on - self.ramp
    }

    pub fn with_shape(self, shape: RampShape) -> Self {
        StorageSchedule { shape, ..self }
    }

    pub fn shifted(self, by: f64) -> Self {
        StorageSchedule {
            t_off: self.t_off + by,
            t_on: self.t_on + by,
            ..self
        }
    }

    /// Coupling profile: constant `omega_c`, ramped off at `t_off` and back
    /// on at `t_on`.
    pub fn control(&self, grid: TimeGrid, omega_c: f64) -> Result<ControlProfile> {
        let events = vec![
            SwitchEvent {
                time: self.t_off,
                target: 0.0,
                ramp: self.ramp,
            },
            SwitchEvent {
                time: self.t_on,
                target: omega_c,
                ramp: self.ramp,
            },
        ];
        ControlProfile::with_events(grid, omega_c, events, self.shape)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchedulePolicy {
    /// Switch off when the spin-wave energy under constant coupling peaks.
    Auto,
    /// Use the given switch-off time.
    Explicit { t_off: f64 },
}

/// How long the excitation is held in the medium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StorageTime {
    Fixed(f64),
    /// A multiple of the input pulse FWHM.
    PulseLengths(f64),
}

impl StorageTime {
    pub fn resolve(&self, psi: &Waveform) -> Result<f64> {
        match *self {
            StorageTime::Fixed(t) => Ok(t),
            StorageTime::PulseLengths(n) => psi
                .fwhm()
                .map(|w| n * w)
                .ok_or(Error::ZeroEnergy("storage time")),
        }
    }
}

/// Time at which the spin-wave energy peaks while `psi_in` propagates under
/// constant coupling: a scan over the solver's samples, refined by
/// golden-section search on the interpolated series.
pub fn spinwave_peak_time(psi_in: &Waveform, params: &MediumParams, n_z: usize) -> Result<(f64, f64)> {
    let grid = *psi_in.grid();
    let control = ControlProfile::constant(grid, params.omega_c)?;
    let (_, state) = propagation::propagate(psi_in, &control, params, n_z)?;
    peak_of_series(&state)
}

fn peak_of_series(state: &MediumState) -> Result<(f64, f64)> {
    let grid = *state.grid();
    let series = state.spin_energy_series();
    let (k, _) = series
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (k, &v)| if v > acc.1 { (k, v) } else { acc });
    let lo = grid.time(k.saturating_sub(1));
    let hi = grid.time((k + 1).min(grid.len() - 1));
    let found = golden_section(
        |t| -spinwave_energy(state, t).unwrap_or(0.0),
        lo,
        hi,
        1e-3 * grid.dt(),
        200,
    );
    Ok((found.x, -found.value))
}

pub fn make_schedule(
    psi_in: &Waveform,
    params: &MediumParams,
    policy: SchedulePolicy,
    storage_time: f64,
    ramp: f64,
    n_z: usize,
) -> Result<StorageSchedule> {
    if !(psi_in.energy() > 0.0) {
        return Err(Error::ZeroEnergy("make_schedule"));
    }
    let t_off = match policy {
        SchedulePolicy::Explicit { t_off } => t_off,
        SchedulePolicy::Auto => spinwave_peak_time(psi_in, params, n_z)?.0,
    };
    StorageSchedule::new(t_off, t_off + storage_time, ramp)
}

#[derive(Debug, Clone)]
pub struct StorageResult {
    /// Retrieved envelope, zero before the retrieval gate.
    pub psi_out: Waveform,
    pub schedule: StorageSchedule,
    pub efficiency: f64,
    /// Likeness against the input about the schedule pivot.
    pub likeness: f64,
    /// Peak spin-wave energy, relative to the input energy.
    pub spinwave_peak: f64,
    /// Output energy ahead of the retrieval gate, relative to the input.
    pub leaked_energy: f64,
    /// Complete transmitted envelope, before gating.
    pub transmitted: Waveform,
    pub state: MediumState,
}

#[derive(Debug, Clone, Serialize)]
pub struct StorageReport {
    pub efficiency: f64,
    pub likeness: f64,
    pub leaked_energy: f64,
    pub spinwave_peak: f64,
    pub storage_time_ns: f64,
}

impl StorageResult {
    pub fn report(&self) -> StorageReport {
        StorageReport {
            efficiency: self.efficiency,
            likeness: self.likeness,
            leaked_energy: self.leaked_energy,
            spinwave_peak: self.spinwave_peak,
            storage_time_ns: self.schedule.storage_time() * 1e9,
        }
    }
}

/// Runs one storage/retrieval cycle.
///
/// `spin_decay` (1/s) adds a phenomenological decay of the stored spin wave,
/// applied as `exp(-rate · storage_time)` to the retrieved energy. A schedule
/// whose switch-off ramp begins after the grid ends means plain slow-light
/// propagation; the whole output then counts as retrieved.
pub fn store_retrieve(
    psi_in: &Waveform,
    schedule: &StorageSchedule,
    params: &MediumParams,
    spin_decay: Option<f64>,
    n_z: usize,
) -> Result<StorageResult> {
    schedule.validate()?;
    let input_energy = psi_in.energy();
    if !(input_energy > 0.0) {
        return Err(Error::ZeroEnergy("store_retrieve"));
    }
    if let Some(rate) = spin_decay {
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(Error::invalid("spin_decay", "must be finite and ≥ 0"));
        }
    }
    let grid = *psi_in.grid();
    let never_switched = schedule.t_off - 0.5 * schedule.ramp >= grid.t_end();
    let control = if never_switched {
        ControlProfile::constant(grid, params.omega_c)?
    } else {
        if schedule.t_on + 0.5 * schedule.ramp >= grid.t_end() {
            return Err(Error::invalid(
                "schedule.t_on",
                "retrieval window is truncated by the end of the time grid",
            ));
        }
        schedule.control(grid, params.omega_c)?
    };

    let (transmitted, state) = propagation::propagate(psi_in, &control, params, n_z)?;
    let (gated, leaked) = if never_switched {
        (transmitted.clone(), 0.0)
    } else {
        let gate = schedule.retrieval_gate();
        let gated = transmitted.gated_after(gate);
        let leaked = (transmitted.energy() - gated.energy()).max(0.0);
        (gated, leaked)
    };
    let decay = match spin_decay {
        Some(rate) if !never_switched => (-0.5 * rate * schedule.storage_time()).exp(),
        _ => 1.0,
    };
    let psi_out = gated.scaled(Complex64::new(decay, 0.0));
    let efficiency = psi_out.energy() / input_energy;
    let likeness = if psi_out.energy() > 0.0 {
        likeness(psi_in, &psi_out, Alignment::Fixed(schedule.pivot()))?
    } else {
        0.0
    };
    let spinwave_peak = state.spin_energy_series().iter().cloned().fold(0.0, f64::max) / input_energy;
    Ok(StorageResult {
        psi_out,
        schedule: *schedule,
        efficiency,
        likeness,
        spinwave_peak,
        leaked_energy: leaked / input_energy,
        transmitted,
        state,
    })
}

/// Retrieved-to-input energy ratio.
pub fn storage_efficiency(psi_in: &Waveform, psi_out: &Waveform) -> Result<f64> {
    let e_in = psi_in.energy();
    if !(e_in > 0.0) {
        return Err(Error::ZeroEnergy("storage_efficiency"));
    }
    Ok(psi_out.energy() / e_in)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Alignment {
    /// Reflect the output about this time.
    Fixed(f64),
    /// Search pivots within `±span/2` of `center` for the best overlap.
    Optimize { center: f64, span: f64 },
}

fn overlap_about(psi_in: &Waveform, psi_out: &Waveform, pivot: f64) -> f64 {
    let grid = psi_in.grid();
    let out_grid = psi_out.grid();
    let out = psi_out.samples();
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, a) in psi_in.samples().iter().enumerate() {
        if a.norm_sqr() == 0.0 {
            continue;
        }
        let mirrored = 2.0 * pivot - grid.time(k);
        acc += a.conj() * lerp_samples(out, out_grid.position(mirrored));
    }
    (acc * grid.dt()).norm_sqr()
}

/// Temporal likeness between `psi_in` and the time-reversed `psi_out`:
/// `|∫ψin*(τ) ψout(2p-τ) dτ|² / (∫|ψin|² ∫|ψout|²)`.
pub fn likeness(psi_in: &Waveform, psi_out: &Waveform, align: Alignment) -> Result<f64> {
    if (psi_in.grid().dt() - psi_out.grid().dt()).abs() > 1e-9 * psi_in.grid().dt() {
        return Err(Error::invalid("likeness", "waveforms must share a time step"));
    }
    let e_in: f64 = psi_in.samples().iter().map(|s| s.norm_sqr()).sum::<f64>() * psi_in.grid().dt();
    let e_out: f64 = psi_out.samples().iter().map(|s| s.norm_sqr()).sum::<f64>() * psi_out.grid().dt();
    if !(e_in > 0.0) || !(e_out > 0.0) {
        return Err(Error::ZeroEnergy("likeness"));
    }
    let norm = e_in * e_out;
    let value = match align {
        Alignment::Fixed(pivot) => overlap_about(psi_in, psi_out, pivot),
        Alignment::Optimize { center, span } => {
            let coarse = 41;
            let step = span / (coarse - 1) as f64;
            let (best, _) = (0..coarse)
                .map(|k| center - 0.5 * span + k as f64 * step)
                .map(|p| (p, overlap_about(psi_in, psi_out, p)))
                .fold((center, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
            let refined = golden_section(
                |p| -overlap_about(psi_in, psi_out, p),
                best - step,
                best + step,
                1e-4 * psi_in.grid().dt(),
                200,
            );
            (-refined.value).max(overlap_about(psi_in, psi_out, best))
        }
    };
    Ok((value / norm).clamp(0.0, 1.0))
}

/// Multiplies the envelope by an amplitude transmission mask.
pub fn apply_mask(psi: &Waveform, mask: &[f64]) -> Result<Waveform> {
    if mask.len() != psi.grid().len() {
        return Err(Error::invalid(
            "mask",
            format!("length {} does not match the grid ({})", mask.len(), psi.grid().len()),
        ));
    }
    if let Some((k, m)) = mask.iter().enumerate().find(|(_, m)| !(0.0..=1.0).contains(*m)) {
        return Err(Error::invalid(format!("mask[{k}]"), format!("{m} outside [0, 1]")));
    }
    let samples = psi.samples().iter().zip(mask).map(|(s, m)| s * *m).collect();
    Waveform::new(*psi.grid(), samples)
}

/// Mask blocking `[from, to)` and passing everything else.
pub fn blocking_mask(grid: &TimeGrid, from: f64, to: f64) -> Vec<f64> {
    grid.times()
        .map(|t| if t >= from && t < to { 0.0 } else { 1.0 })
        .collect()
}

/// Reconstructs `ψ = √G²` from a coincidence histogram by subtracting the
/// mean accidental floor and taking the square root per bin.
pub fn waveform_from_histogram(
    hist: &CoincidenceHistogram,
    floor_window: std::ops::Range<usize>,
) -> Result<Waveform> {
    let floor = hist.mean_over(floor_window.clone()).ok_or_else(|| {
        Error::invalid("floor_window", "floor window is empty or outside the histogram")
    })?;
    let grid = TimeGrid::with_len(hist.offsets()[0], hist.bin_width(), hist.len())?;
    let samples = hist
        .counts()
        .iter()
        .map(|&c| Complex64::new((c as f64 - floor).max(0.0).sqrt(), 0.0))
        .collect();
    Waveform::new(grid, samples)
}

/// Efficiency versus storage time with a phenomenological spin-wave decay.
///
/// The switch-off time is chosen once with [`SchedulePolicy::Auto`]; the
/// input grid is zero-padded as needed to contain each retrieval.
pub fn lifetime_scan(
    psi_in: &Waveform,
    params: &MediumParams,
    storage_times: &[f64],
    spin_decay: f64,
    ramp: f64,
    n_z: usize,
) -> Result<Vec<(f64, f64)>> {
    if storage_times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("storage_times", "must be strictly ascending"));
    }
    let (t_off, _) = spinwave_peak_time(psi_in, params, n_z)?;
    let tail = psi_in.grid().t_end() - t_off;
    storage_times
        .par_iter()
        .map(|&storage| {
            let schedule = StorageSchedule::new(t_off, t_off + storage, ramp)?;
            let padded = psi_in.extended_to(schedule.t_on + tail.max(4.0 * ramp));
            let result = store_retrieve(&padded, &schedule, params, Some(spin_decay), n_z)?;
            Ok((storage, result.efficiency))
        })
        .collect()
}

/// Exponential fit of a lifetime scan: `(efficiency at zero delay, 1/e time)`.
pub fn fit_lifetime(scan: &[(f64, f64)]) -> Result<(f64, f64)> {
    let xs: Vec<f64> = scan.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = scan.iter().map(|p| p.1).collect();
    let (intercept, slope) = fit_exponential(&xs, &ys)
        .ok_or_else(|| Error::numerical("fit_lifetime", "need two positive efficiencies"))?;
    if slope >= 0.0 {
        return Err(Error::numerical("fit_lifetime", "efficiency does not decay"));
    }
    Ok((intercept.exp(), -1.0 / slope))
}

/// Convenience wrapper with the default spatial resolution.
pub fn store_retrieve_default(
    psi_in: &Waveform,
    schedule: &StorageSchedule,
    params: &MediumParams,
) -> Result<StorageResult> {
    store_retrieve(psi_in, schedule, params, None, DEFAULT_NZ)
}
