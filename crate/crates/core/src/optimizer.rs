//! Iterative time-reversal optimization of the input waveform.
//!
//! Each round stores and retrieves the current input, reverses the retrieved
//! envelope in time, renormalizes it and feeds it back as the next input.

use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::medium::{self, MediumParams};
use crate::propagation::{default_dt, DEFAULT_NZ};
use crate::protocol::{self, SchedulePolicy, StorageResult, StorageSchedule, StorageTime, DEFAULT_RAMP};
use crate::waveform::{TimeGrid, Waveform};

/// Retrieval efficiency below which feedback is meaningless.
pub const EFFICIENCY_FLOOR: f64 = 1e-6;
pub const DEFAULT_TOL: f64 = 0.999;
pub const DEFAULT_MAX_ITERS: usize = 10;

/// How the storage schedule is chosen for each iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoragePolicy {
    pub switch_off: SchedulePolicy,
    pub storage: StorageTime,
    pub ramp: f64,
}

impl Default for StoragePolicy {
    fn default() -> Self {
        StoragePolicy {
            switch_off: SchedulePolicy::Auto,
            storage: StorageTime::PulseLengths(2.0),
            ramp: DEFAULT_RAMP,
        }
    }
}

impl StoragePolicy {
    pub fn schedule_for(&self, psi: &Waveform, params: &MediumParams, n_z: usize) -> Result<StorageSchedule> {
        let storage = self.storage.resolve(psi)?;
        protocol::make_schedule(psi, params, self.switch_off, storage, self.ramp, n_z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Tolerance,
    MaxIters,
}

#[derive(Debug, Clone)]
pub struct Iteration {
    pub psi_in: Waveform,
    pub efficiency: f64,
    /// Overlap with the previous input; `None` for the seed.
    pub likeness_to_prev: Option<f64>,
    pub schedule: StorageSchedule,
    pub psi_out: Waveform,
    /// Likeness of input and retrieved output about the schedule pivot.
    pub likeness_fixed: f64,
    /// Likeness of input and retrieved output with the pivot optimized.
    pub likeness_in_out: f64,
}

#[derive(Debug, Clone)]
pub struct OptimizationTrace {
    pub iterations: Vec<Iteration>,
    pub converged: bool,
    pub stop_reason: StopReason,
}

#[derive(Serialize)]
struct IterationRecord {
    iteration: usize,
    efficiency: f64,
    likeness_to_prev: Option<f64>,
    likeness_fixed: f64,
    likeness_in_out: f64,
    t_off_ns: f64,
    t_on_ns: f64,
    fwhm_ns: Option<f64>,
}

#[derive(Serialize)]
struct TraceRecord {
    converged: bool,
    stop_reason: StopReason,
    final_efficiency: f64,
    iterations: Vec<IterationRecord>,
}

impl OptimizationTrace {
    pub fn last(&self) -> &Iteration {
        self.iterations.last().expect("trace is never empty")
    }

    pub fn final_efficiency(&self) -> f64 {
        self.last().efficiency
    }

    pub fn efficiencies(&self) -> Vec<f64> {
        self.iterations.iter().map(|it| it.efficiency).collect()
    }

    /// Largest drop in efficiency between consecutive iterates (0 when
    /// the sequence never decreases).
    pub fn worst_descent(&self) -> f64 {
        self.iterations
            .windows(2)
            .map(|w| w[0].efficiency - w[1].efficiency)
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Result<String> {
        let record = TraceRecord {
            converged: self.converged,
            stop_reason: self.stop_reason,
            final_efficiency: self.final_efficiency(),
            iterations: self
                .iterations
                .iter()
                .enumerate()
                .map(|(k, it)| IterationRecord {
                    iteration: k,
                    efficiency: it.efficiency,
                    likeness_to_prev: it.likeness_to_prev,
                    likeness_fixed: it.likeness_fixed,
                    likeness_in_out: it.likeness_in_out,
                    t_off_ns: it.schedule.t_off * 1e9,
                    t_on_ns: it.schedule.t_on * 1e9,
                    fwhm_ns: it.psi_in.fwhm().map(|w| w * 1e9),
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&record)?)
    }

    /// Writes `trace.json` plus `iter_KK_in.csv` / `iter_KK_out.csv` per
    /// iteration into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        crate::io::write_text(&dir.join("trace.json"), &self.to_json()?)?;
        for (k, it) in self.iterations.iter().enumerate() {
            it.psi_in.write_csv(&dir.join(format!("iter_{k:02}_in.csv")))?;
            it.psi_out.write_csv(&dir.join(format!("iter_{k:02}_out.csv")))?;
        }
        Ok(())
    }
}

/// Normalized overlap `|⟨a, b⟩|² / (‖a‖² ‖b‖²)` of two waveforms on the same
/// grid, without any reversal.
pub fn overlap(a: &Waveform, b: &Waveform) -> Result<f64> {
    if !a.grid().same_as(b.grid()) {
        return Err(Error::invalid("overlap", "waveforms must share a time grid"));
    }
    let (mut inner, mut na, mut nb) = (Complex64::new(0.0, 0.0), 0.0, 0.0);
    for (x, y) in a.samples().iter().zip(b.samples()) {
        inner += x.conj() * y;
        na += x.norm_sqr();
        nb += y.norm_sqr();
    }
    if !(na > 0.0 && nb > 0.0) {
        return Err(Error::ZeroEnergy("overlap"));
    }
    Ok((inner.norm_sqr() / (na * nb)).min(1.0))
}

/// Reverses `psi_out` about `pivot`, normalizes it and shifts it by whole
/// samples so that its centroid matches `reference`.
pub fn feedback_waveform(psi_out: &Waveform, pivot: f64, reference: &Waveform) -> Result<Waveform> {
    let reversed = psi_out.time_reversed(pivot).normalized()?;
    let (Some(target), Some(current)) = (reference.centroid(), reversed.centroid()) else {
        return Err(Error::ZeroEnergy("feedback_waveform"));
    };
    let shift = ((target - current) / reversed.grid().dt()).round() as i64;
    reversed.shifted(shift).normalized()
}

fn evaluate(
    psi: &Waveform,
    schedule: &StorageSchedule,
    params: &MediumParams,
    n_z: usize,
) -> Result<StorageResult> {
    let result = protocol::store_retrieve(psi, schedule, params, None, n_z)?;
    if !(result.efficiency >= EFFICIENCY_FLOOR) {
        return Err(Error::numerical(
            "iterate_optimal",
            format!("efficiency below floor {EFFICIENCY_FLOOR:e}"),
        ));
    }
    Ok(result)
}

fn in_out_likeness(psi: &Waveform, result: &StorageResult) -> Result<f64> {
    let fwhm = psi.fwhm().unwrap_or(result.schedule.storage_time());
    protocol::likeness(
        psi,
        &result.psi_out,
        protocol::Alignment::Optimize {
            center: result.schedule.pivot(),
            span: fwhm,
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerOptions {
    pub max_iters: usize,
    /// Overlap between successive inputs that counts as converged.
    pub tol: f64,
    pub n_z: usize,
    /// Keep the schedule chosen for the seed instead of recomputing it.
    pub freeze_schedule: bool,
    /// Shift each reversed output so its centroid matches the previous input.
    pub recenter: bool,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            max_iters: DEFAULT_MAX_ITERS,
            tol: DEFAULT_TOL,
            n_z: DEFAULT_NZ,
            freeze_schedule: true,
            recenter: false,
        }
    }
}

/// Time-reversal feedback loop starting from `psi_0`.
///
/// Stops once two successive inputs overlap by at least `tol`, or after
/// `max_iters` store/retrieve rounds.
pub fn iterate_optimal(
    psi_0: &Waveform,
    params: &MediumParams,
    policy: &StoragePolicy,
    options: &OptimizerOptions,
) -> Result<OptimizationTrace> {
    let OptimizerOptions { max_iters, tol, n_z, freeze_schedule, recenter } = *options;
    if max_iters == 0 {
        return Err(Error::invalid("optimizer.max_iters", "must be ≥ 1"));
    }
    if !(tol > 0.0 && tol <= 1.0) {
        return Err(Error::invalid("optimizer.tol", "must lie in (0, 1]"));
    }
    params.validate()?;
    let mut psi = psi_0.clone().normalized()?;
    let mut previous: Option<Waveform> = None;
    let mut iterations = Vec::new();
    let mut frozen: Option<StorageSchedule> = None;
    loop {
        let schedule = match frozen {
            Some(s) => s,
            None => policy.schedule_for(&psi, params, n_z)?,
        };
        if freeze_schedule {
            frozen = Some(schedule);
        }
        let result = evaluate(&psi, &schedule, params, n_z)?;
        let likeness_to_prev = previous.as_ref().map(|p| overlap(p, &psi)).transpose()?;
        let next = if recenter {
            feedback_waveform(&result.psi_out, schedule.pivot(), &psi)?
        } else {
            result.psi_out.time_reversed(schedule.pivot()).normalized()?
        };
        iterations.push(Iteration {
            likeness_in_out: in_out_likeness(&psi, &result)?,
            likeness_fixed: result.likeness,
            psi_in: psi.clone(),
            efficiency: result.efficiency,
            likeness_to_prev,
            schedule: result.schedule,
            psi_out: result.psi_out,
        });
        if likeness_to_prev.is_some_and(|l| l >= tol) {
            return Ok(OptimizationTrace {
                iterations,
                converged: true,
                stop_reason: StopReason::Tolerance,
            });
        }
        if iterations.len() >= max_iters {
            return Ok(OptimizationTrace {
                iterations,
                converged: false,
                stop_reason: StopReason::MaxIters,
            });
        }
        previous = Some(std::mem::replace(&mut psi, next));
    }
}

/// Seed pulse width: the inverse EIT bandwidth in hertz. Falls back to the
/// inverse of `Ω_c²` (in units of γ₁₃) when no transparency peak exists.
pub fn default_seed_fwhm(params: &MediumParams) -> Result<f64> {
    match medium::eit_bandwidth_hz(params) {
        Ok(bw) if bw > 0.0 => Ok(1.0 / bw),
        _ if params.omega_c > 0.0 => {
            Ok(2.0 * std::f64::consts::PI / (params.omega_c * params.omega_c * params.gamma13))
        }
        _ => Err(Error::invalid("medium.omega_c_gamma13", "must be > 0 to optimize storage")),
    }
}

/// Time grid for optimizing pulses of width `fwhm`: the pulse sits at
/// `4·fwhm`, followed by room for the slow-light delay, two pulse lengths of
/// storage and the retrieved pulse.
pub fn optimization_grid(params: &MediumParams, fwhm: f64, ramp: f64) -> Result<TimeGrid> {
    let delay = medium::group_delay(params).unwrap_or(0.0).max(0.0);
    let t_end = 14.0 * fwhm + 3.0 * delay + 4.0 * ramp;
    TimeGrid::new(0.0, t_end, default_dt(params, ramp))
}

/// Gaussian seed of width [`default_seed_fwhm`] on an [`optimization_grid`].
pub fn default_seed(params: &MediumParams, ramp: f64) -> Result<Waveform> {
    let fwhm = default_seed_fwhm(params)?;
    let grid = optimization_grid(params, fwhm, ramp)?;
    Waveform::gaussian(grid, 4.0 * fwhm, fwhm)
}

/// Optimized efficiency for each optical depth, each run seeded with
/// [`default_seed`].
pub fn efficiency_bound_scan(
    template: &MediumParams,
    od_values: &[f64],
    policy: &StoragePolicy,
    options: &OptimizerOptions,
) -> Result<Vec<(f64, f64)>> {
    if od_values.iter().any(|&od| !(od > 0.0)) {
        return Err(Error::invalid("od_values", "every optical depth must be > 0"));
    }
    if od_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("od_values", "must be strictly ascending"));
    }
    od_values
        .par_iter()
        .map(|&od| {
            let params = template.with_od(od);
            let seed = default_seed(&params, policy.ramp)?;
            let trace = iterate_optimal(&seed, &params, policy, options)?;
            Ok((od, trace.final_efficiency()))
        })
        .collect()
}
