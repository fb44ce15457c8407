//! C ABI for the `eitmem` simulator.
//!
//! Media and waveforms are opaque heap handles created by `*_new` functions
//! and released with the matching `*_free`. Every fallible call returns an
//! [`EitStatus`]; on failure a description is available from
//! [`eit_last_error`] on the same thread. Times are in seconds, rates in
//! 1/s, and medium parameters in units of γ₁₃ unless stated otherwise.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use num_complex::Complex64;
use eitmem::optimizer::{self, OptimizerOptions, StoragePolicy};
use eitmem::photonstats::{self, CountSummary, DetectorConfig, LossBudget, SourceConfig};
use eitmem::protocol::{self, Alignment, SchedulePolicy, StorageSchedule, StorageTime};
use eitmem::{medium, Error, MediumParams, TimeGrid, Waveform};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EitStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    Io = 4,
    Panic = 5,
}

/// Opaque medium handle.
pub struct EitMedium(MediumParams);

/// Opaque waveform handle.
pub struct EitWaveform(Waveform);

/// Metrics of one storage/retrieval cycle.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct EitStorageResult {
    pub efficiency: f64,
    pub likeness: f64,
    pub leaked_energy: f64,
    pub spinwave_peak: f64,
    pub t_off: f64,
    pub t_on: f64,
}

/// Herald, twofold and threefold counts.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct EitCounts {
    pub n1: u64,
    pub n12: u64,
    pub n13: u64,
    pub n123: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(message: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = message);
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn status_of(e: &Error) -> EitStatus {
    match e {
        Error::Io { .. } => EitStatus::Io,
        e if e.is_validation() => EitStatus::InvalidArgument,
        _ => EitStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> EitStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            EitStatus::Ok
        }
        Ok(Err(Failure::Null(name))) => {
            set_error(format!("{name} is null"));
            EitStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            EitStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(name))
}

unsafe fn output<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(name))
}

unsafe fn slice<'a, T>(p: *const T, n: usize, name: &'static str) -> Result<&'a [T], Failure> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn path<'a>(p: *const c_char, name: &'static str) -> Result<&'a Path, Failure> {
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Error::invalid(name, "is not valid UTF-8"))?;
    Ok(Path::new(s))
}

fn chain(efficiencies: &[f64], duty_cycle: f64) -> Result<LossBudget, Error> {
    let elements = efficiencies
        .iter()
        .enumerate()
        .map(|(k, &e)| (format!("element {k}"), e))
        .collect();
    LossBudget::new(elements, duty_cycle)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn eit_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`) and returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn eit_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Creates a medium at the rubidium-85 D1 relaxation rate with zero probe
/// detuning.
///
/// # Safety
/// `out` must be a valid pointer; the handle is released by [`eit_medium_free`].
#[no_mangle]
pub unsafe extern "C" fn eit_medium_new(od: f64, gamma12: f64, omega_c: f64, out: *mut *mut EitMedium) -> EitStatus {
    guard(|| {
        let out = output(out, "out")?;
        let params = MediumParams::new(od, gamma12, omega_c);
        params.validate()?;
        *out = Box::into_raw(Box::new(EitMedium(params)));
        Ok(())
    })
}

/// Sets the probe carrier detuning (units of γ₁₃).
///
/// # Safety
/// `medium` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn eit_medium_set_detuning(medium: *mut EitMedium, delta_p: f64) -> EitStatus {
    guard(|| {
        let m = output(medium, "medium")?;
        let params = MediumParams { delta_p, ..m.0 };
        params.validate()?;
        m.0 = params;
        Ok(())
    })
}

/// # Safety
/// `medium` must be null or a handle from [`eit_medium_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn eit_medium_free(medium: *mut EitMedium) {
    if !medium.is_null() {
        drop(Box::from_raw(medium));
    }
}

/// Steady-state intensity transmission and phase at probe detuning `delta`.
///
/// # Safety
/// `medium` must be live; outputs must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn eit_transmission(
    medium: *const EitMedium,
    delta: f64,
    transmission: *mut f64,
    phase: *mut f64,
) -> EitStatus {
    guard(|| {
        let m = borrow(medium, "medium")?;
        let t = output(transmission, "transmission")?;
        let p = output(phase, "phase")?;
        let s = medium::transmission_spectrum(&m.0, &[delta])?;
        *t = s.transmission[0];
        *p = s.phase[0];
        Ok(())
    })
}

/// Group delay at the carrier, seconds.
///
/// # Safety
/// `medium` must be live; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn eit_group_delay(medium: *const EitMedium, out: *mut f64) -> EitStatus {
    guard(|| {
        let m = borrow(medium, "medium")?;
        *output(out, "out")? = medium::group_delay(&m.0)?;
        Ok(())
    })
}

/// Full width of the transparency window at half its peak, hertz.
///
/// # Safety
/// `medium` must be live; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn eit_bandwidth_hz(medium: *const EitMedium, out: *mut f64) -> EitStatus {
    guard(|| {
        let m = borrow(medium, "medium")?;
        *output(out, "out")? = medium::eit_bandwidth_hz(&m.0)?;
        Ok(())
    })
}

/// Fits γ₁₂ to a measured transmission spectrum; every other parameter is
/// taken from `known`.
///
/// # Safety
/// The three arrays must hold `n` values each; `gamma12` must be valid.
#[no_mangle]
pub unsafe extern "C" fn eit_fit_dephasing(
    known: *const EitMedium,
    deltas: *const f64,
    transmission: *const f64,
    phase: *const f64,
    n: usize,
    gamma12: *mut f64,
) -> EitStatus {
    guard(|| {
        let m = borrow(known, "known")?;
        let spectrum = medium::Spectrum::new(
            slice(deltas, n, "deltas")?.to_vec(),
            slice(transmission, n, "transmission")?.to_vec(),
            slice(phase, n, "phase")?.to_vec(),
        )?;
        *output(gamma12, "gamma12")? = medium::fit_dephasing(&spectrum, &m.0)?.gamma12;
        Ok(())
    })
}

/// Unit-energy Gaussian (intensity FWHM `fwhm`) on `[t_start, t_end]`.
///
/// # Safety
/// `out` must be valid; release the handle with [`eit_waveform_free`].
#[no_mangle]
pub unsafe extern "C" fn eit_waveform_gaussian(
    t_start: f64,
    t_end: f64,
    dt: f64,
    center: f64,
    fwhm: f64,
    out: *mut *mut EitWaveform,
) -> EitStatus {
    guard(|| {
        let out = output(out, "out")?;
        let grid = TimeGrid::new(t_start, t_end, dt)?;
        *out = Box::into_raw(Box::new(EitWaveform(Waveform::gaussian(grid, center, fwhm)?)));
        Ok(())
    })
}

/// Waveform from `n` complex samples starting at `t_start` with step `dt`.
/// `im` may be null for a real envelope.
///
/// # Safety
/// `re` (and `im` when non-null) must hold `n` values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn eit_waveform_from_samples(
    t_start: f64,
    dt: f64,
    re: *const f64,
    im: *const f64,
    n: usize,
    out: *mut *mut EitWaveform,
) -> EitStatus {
    guard(|| {
        let out = output(out, "out")?;
        let re = slice(re, n, "re")?;
        let im = if im.is_null() { None } else { Some(slice(im, n, "im")?) };
        let samples = (0..n)
            .map(|k| Complex64::new(re[k], im.map_or(0.0, |v| v[k])))
            .collect();
        let grid = TimeGrid::with_len(t_start, dt, n)?;
        *out = Box::into_raw(Box::new(EitWaveform(Waveform::new(grid, samples)?)));
        Ok(())
    })
}

/// # Safety
/// `wave` must be null or a live waveform handle.
#[no_mangle]
pub unsafe extern "C" fn eit_waveform_free(wave: *mut EitWaveform) {
    if !wave.is_null() {
        drop(Box::from_raw(wave));
    }
}

/// Number of samples, or 0 for a null handle.
///
/// # Safety
/// `wave` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn eit_waveform_len(wave: *const EitWaveform) -> usize {
    wave.as_ref().map_or(0, |w| w.0.samples().len())
}

/// Copies up to `n` samples into `re` / `im` (either may be null) and the
/// grid start and step into `t_start` / `dt` (either may be null).
///
/// # Safety
/// Non-null arrays must have room for `n` values.
#[no_mangle]
pub unsafe extern "C" fn eit_waveform_samples(
    wave: *const EitWaveform,
    re: *mut f64,
    im: *mut f64,
    n: usize,
    t_start: *mut f64,
    dt: *mut f64,
) -> EitStatus {
    guard(|| {
        let w = &borrow(wave, "wave")?.0;
        for (k, s) in w.samples().iter().take(n).enumerate() {
            if !re.is_null() {
                *re.add(k) = s.re;
            }
            if !im.is_null() {
                *im.add(k) = s.im;
            }
        }
        if let Some(t) = t_start.as_mut() {
            *t = w.grid().t_start();
        }
        if let Some(d) = dt.as_mut() {
            *d = w.grid().dt();
        }
        Ok(())
    })
}

/// Trapezoidal energy `∫|ψ|² dt`.
///
/// # Safety
/// `wave` must be live; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn eit_waveform_energy(wave: *const EitWaveform, out: *mut f64) -> EitStatus {
    guard(|| {
        *output(out, "out")? = borrow(wave, "wave")?.0.energy();
        Ok(())
    })
}

/// Stores and retrieves `input`.
///
/// A NaN `t_off` selects the spin-wave peak; a NaN `storage` selects two
/// input pulse lengths. A negative `spin_decay` disables the extra decay.
/// When `retrieved` is non-null it receives a new handle holding the
/// retrieved envelope.
///
/// # Safety
/// Handles must be live; `result` valid; `retrieved` null or valid.
#[no_mangle]
pub unsafe extern "C" fn eit_store_retrieve(
    input: *const EitWaveform,
    medium: *const EitMedium,
    t_off: f64,
    storage: f64,
    ramp: f64,
    spin_decay: f64,
    n_z: usize,
    result: *mut EitStorageResult,
    retrieved: *mut *mut EitWaveform,
) -> EitStatus {
    guard(|| {
        let psi = &borrow(input, "input")?.0;
        let params = &borrow(medium, "medium")?.0;
        let result = output(result, "result")?;
        let policy = StoragePolicy {
            switch_off: if t_off.is_nan() {
                SchedulePolicy::Auto
            } else {
                SchedulePolicy::Explicit { t_off }
            },
            storage: if storage.is_nan() {
                StorageTime::PulseLengths(2.0)
            } else {
                StorageTime::Fixed(storage)
            },
            ramp,
        };
        let schedule: StorageSchedule = policy.schedule_for(psi, params, n_z)?;
        let decay = (spin_decay >= 0.0).then_some(spin_decay);
        let r = protocol::store_retrieve(psi, &schedule, params, decay, n_z)?;
        *result = EitStorageResult {
            efficiency: r.efficiency,
            likeness: r.likeness,
            leaked_energy: r.leaked_energy,
            spinwave_peak: r.spinwave_peak,
            t_off: schedule.t_off,
            t_on: schedule.t_on,
        };
        if let Some(slot) = retrieved.as_mut() {
            *slot = Box::into_raw(Box::new(EitWaveform(r.psi_out)));
        }
        Ok(())
    })
}

/// Time-reversal optimization from `seed` with the default policy (spin-wave
/// peak switch-off, storage of two seed pulse lengths, 50 ns ramps).
/// `optimal` (nullable) receives the final input waveform.
///
/// # Safety
/// Handles must be live; outputs valid or, where noted, null.
#[no_mangle]
pub unsafe extern "C" fn eit_optimize(
    seed: *const EitWaveform,
    medium: *const EitMedium,
    max_iters: usize,
    tol: f64,
    efficiency: *mut f64,
    iterations: *mut usize,
    optimal: *mut *mut EitWaveform,
) -> EitStatus {
    guard(|| {
        let psi = &borrow(seed, "seed")?.0;
        let params = &borrow(medium, "medium")?.0;
        let efficiency = output(efficiency, "efficiency")?;
        let options = OptimizerOptions {
            max_iters,
            tol,
            ..Default::default()
        };
        let trace = optimizer::iterate_optimal(psi, params, &StoragePolicy::default(), &options)?;
        *efficiency = trace.final_efficiency();
        if let Some(n) = iterations.as_mut() {
            *n = trace.iterations.len();
        }
        if let Some(slot) = optimal.as_mut() {
            *slot = Box::into_raw(Box::new(EitWaveform(trace.last().psi_in.clone())));
        }
        Ok(())
    })
}

/// Retrieved-to-input energy ratio.
///
/// # Safety
/// Handles must be live; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn eit_storage_efficiency(
    input: *const EitWaveform,
    retrieved: *const EitWaveform,
    out: *mut f64,
) -> EitStatus {
    guard(|| {
        let eta = protocol::storage_efficiency(&borrow(input, "input")?.0, &borrow(retrieved, "retrieved")?.0)?;
        *output(out, "out")? = eta;
        Ok(())
    })
}

/// Likeness of `input` and `retrieved` reversed about `pivot` (seconds).
///
/// # Safety
/// Handles must be live; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn eit_likeness(
    input: *const EitWaveform,
    retrieved: *const EitWaveform,
    pivot: f64,
    out: *mut f64,
) -> EitStatus {
    guard(|| {
        let l = protocol::likeness(
            &borrow(input, "input")?.0,
            &borrow(retrieved, "retrieved")?.0,
            Alignment::Fixed(pivot),
        )?;
        *output(out, "out")? = l;
        Ok(())
    })
}

/// Heralded autocorrelation and its Poisson error from raw counts.
///
/// # Safety
/// `value` and `error` must be valid.
#[no_mangle]
pub unsafe extern "C" fn eit_conditional_g2(counts: EitCounts, value: *mut f64, error: *mut f64) -> EitStatus {
    guard(|| {
        let summary = CountSummary::new(counts.n1, counts.n12, counts.n13, counts.n123)?;
        let g = photonstats::conditional_g2(&summary)?;
        *output(value, "value")? = g.value;
        *output(error, "error")? = g.error;
        Ok(())
    })
}

/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn eit_cauchy_schwarz(g_sas: f64, g_ss: f64, g_asas: f64, out: *mut f64) -> EitStatus {
    guard(|| {
        *output(out, "out")? = photonstats::cauchy_schwarz(g_sas, g_ss, g_asas)?;
        Ok(())
    })
}

/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn eit_gc2_from_gbar(gbar: f64, out: *mut f64) -> EitStatus {
    guard(|| {
        *output(out, "out")? = photonstats::gc2_from_gbar(gbar)?.value;
        Ok(())
    })
}

/// Generation rate implied by `detected_rate` through a chain of `n`
/// efficiencies and a duty cycle.
///
/// # Safety
/// `efficiencies` must hold `n` values; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn eit_loss_budget(
    efficiencies: *const f64,
    n: usize,
    duty_cycle: f64,
    detected_rate: f64,
    out: *mut f64,
) -> EitStatus {
    guard(|| {
        let budget = chain(slice(efficiencies, n, "efficiencies")?, duty_cycle)?;
        *output(out, "out")? = photonstats::loss_budget(&budget, detected_rate)?.generation_rate;
        Ok(())
    })
}

/// Pairing efficiency implied by a per-herald success probability through
/// the heralded arm's `n` efficiencies.
///
/// # Safety
/// `efficiencies` must hold `n` values; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn eit_pairing_efficiency(
    success_probability: f64,
    efficiencies: *const f64,
    n: usize,
    out: *mut f64,
) -> EitStatus {
    guard(|| {
        let arm = chain(slice(efficiencies, n, "efficiencies")?, 1.0)?;
        *output(out, "out")? = photonstats::pairing_efficiency_from_success(success_probability, &arm)?;
        Ok(())
    })
}

/// Monte Carlo heralded counts behind a beam splitter; the coincidence record
/// spans two windows on each side of the herald.
///
/// # Safety
/// `waveform` must be live; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn eit_simulate_counts(
    waveform: *const EitWaveform,
    pairing_efficiency: f64,
    noise_rate: f64,
    dark_rate: f64,
    chain_efficiency: f64,
    bs_split: f64,
    window: f64,
    window_start: f64,
    n_trials: u64,
    seed: u64,
    out: *mut EitCounts,
) -> EitStatus {
    guard(|| {
        let source = SourceConfig {
            waveform: borrow(waveform, "waveform")?.0.clone(),
            pairing_efficiency,
            herald_rate: 0.0,
            noise_rate,
            dark_rate,
        };
        let det = DetectorConfig {
            chain_efficiency,
            bs_split,
            coincidence_window: window,
            window_start,
            bin_width: window / 100.0,
            record: None,
        };
        let s = photonstats::simulate_counts(&source, &det, n_trials, seed)?.summary;
        *output(out, "out")? = EitCounts {
            n1: s.n1,
            n12: s.n12,
            n13: s.n13,
            n123: s.n123,
        };
        Ok(())
    })
}

/// Runs a JSON configuration file, writing artifacts into `out_dir`.
///
/// # Safety
/// Both arguments must be NUL-terminated UTF-8 paths.
#[no_mangle]
pub unsafe extern "C" fn eit_run_config(config_path: *const c_char, out_dir: *const c_char) -> EitStatus {
    guard(|| {
        let config_path = path(config_path, "config_path")?;
        let out_dir = path(out_dir, "out_dir")?;
        let config = eitmem::config::load(config_path).map_err(|issues| {
            let text: Vec<String> = issues.iter().map(|i| i.to_string()).collect();
            Error::invalid("config", text.join("; "))
        })?;
        eitmem::runner::run(&config, out_dir).map_err(|e| match e {
            eitmem::runner::RunError::Failed(e) => e,
            invalid => Error::invalid("config", invalid.to_string()),
        })?;
        Ok(())
    })
}
