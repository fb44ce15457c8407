//! One-dimensional Maxwell–Bloch propagation of a weak probe envelope through
//! a Λ medium driven by a time-dependent coupling field.
//!
//! Internally time is measured in `1/gamma13`, rates in `gamma13` and the
//! position `z` in medium lengths. In the comoving frame the equations read
//!
//! ```text
//! ∂z E = i√d P
//! ∂t P = -(1 - iδp) P + i√d E + i(Ωc(t)/2) S
//! ∂t S = -(γ12 - iδp) S + i(Ωc(t)/2) P
//! ```
//!
//! with `d = od/2` the amplitude optical depth. The field is scaled so that
//! `∫|E|² dt` and `∫|S|² dz` share one energy unit with the input waveform.

use std::path::Path;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::control::ControlProfile;
use crate::error::{Error, Result};
use crate::io::{fmt_float, write_text};
use crate::medium::{chi, MediumParams};
use crate::numeric::trapezoid_norm_sqr;
use crate::waveform::{TimeGrid, Waveform};

/// Smallest spatial resolution accepted by [`propagate`].
pub const MIN_NZ: usize = 50;
/// Default spatial resolution.
pub const DEFAULT_NZ: usize = 200;
/// Default time step in units of `1/gamma13`.
pub const DEFAULT_DT_GAMMA: f64 = 0.002;
/// Largest accepted time step in units of `1/gamma13`.
pub const MAX_DT_GAMMA: f64 = 0.02;

/// Time step satisfying the default resolution rule for a given ramp.
pub fn default_dt(params: &MediumParams, ramp: f64) -> f64 {
    let dt = DEFAULT_DT_GAMMA / params.gamma13;
    if ramp > 0.0 {
        dt.min(ramp / 10.0)
    } else {
        dt
    }
}

/// Atomic state left in the medium plus energy bookkeeping over the run.
#[derive(Debug, Clone)]
pub struct MediumState {
    z: Vec<f64>,
    times: TimeGrid,
    field: Vec<Complex64>,
    polarization: Vec<Complex64>,
    spin: Vec<Complex64>,
    spin_energy: Vec<f64>,
    polarization_energy: Vec<f64>,
    dissipated: Vec<f64>,
    snapshots: Vec<(f64, Vec<Complex64>)>,
}

impl MediumState {
    pub fn z(&self) -> &[f64] {
        &self.z
    }

    /// Probe field profile at the final time.
    pub fn field(&self) -> &[Complex64] {
        &self.field
    }

    /// Optical coherence σ13 at the final time.
    pub fn polarization(&self) -> &[Complex64] {
        &self.polarization
    }

    /// Spin coherence σ12 at the final time.
    pub fn spin(&self) -> &[Complex64] {
        &self.spin
    }

    /// `∫|S|² dz` at each grid time.
    pub fn spin_energy_series(&self) -> &[f64] {
        &self.spin_energy
    }

    /// `∫|P|² dz` at each grid time.
    pub fn polarization_energy_series(&self) -> &[f64] {
        &self.polarization_energy
    }

    /// Energy lost to spontaneous decay and ground-state dephasing up to
    /// each grid time.
    pub fn dissipated_series(&self) -> &[f64] {
        &self.dissipated
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.times
    }

    /// Spin-wave profiles recorded at the requested snapshot times.
    pub fn snapshots(&self) -> &[(f64, Vec<Complex64>)] {
        &self.snapshots
    }

    /// Writes a `z,re_S,im_S` table of the given spin-wave profile.
    pub fn write_spin_csv(&self, spin: &[Complex64], path: &Path) -> Result<()> {
        let mut out = String::from("z,re_S,im_S\n");
        for (z, s) in self.z.iter().zip(spin) {
            out.push_str(&format!("{},{},{}\n", fmt_float(*z), fmt_float(s.re), fmt_float(s.im)));
        }
        write_text(path, &out)
    }
}

/// `∫₀¹ |S(z, at)|² dz`, interpolated linearly between grid times.
pub fn spinwave_energy(state: &MediumState, at: f64) -> Result<f64> {
    let grid = state.grid();
    if !grid.contains(at) {
        return Err(Error::invalid("at", "time lies outside the propagation grid"));
    }
    let pos = grid.position(at);
    let k = (pos.floor() as usize).min(grid.len() - 1);
    if k + 1 >= grid.len() {
        return Ok(state.spin_energy[k]);
    }
    let frac = pos - k as f64;
    Ok(state.spin_energy[k] * (1.0 - frac) + state.spin_energy[k + 1] * frac)
}

#[derive(Debug, Clone, Default)]
pub struct PropagationOptions {
    /// Times (seconds) at which to keep a copy of the spin-wave profile.
    pub snapshot_times: Vec<f64>,
}

/// Propagates `psi_in` through the medium under `control`.
pub fn propagate(
    psi_in: &Waveform,
    control: &ControlProfile,
    params: &MediumParams,
    n_z: usize,
) -> Result<(Waveform, MediumState)> {
    propagate_with(psi_in, control, params, n_z, &PropagationOptions::default())
}

struct Slices {
    field: Vec<Complex64>,
    dp: Vec<Complex64>,
    ds: Vec<Complex64>,
}

struct Coefficients {
    coupling: Complex64,
    half_dz: f64,
    optical: Complex64,
    ground: Complex64,
}

impl Coefficients {
    /// Fills `field` from `polarization` and the input edge value, then the
    /// time derivatives of `(P, S)`.
    fn evaluate(
        &self,
        edge: Complex64,
        half_rabi: f64,
        polarization: &[Complex64],
        spin: &[Complex64],
        out: &mut Slices,
    ) {
        let n = polarization.len();
        let step = self.coupling * self.half_dz;
        out.field[0] = edge;
        for j in 1..n {
            out.field[j] = out.field[j - 1] + step * (polarization[j - 1] + polarization[j]);
        }
        let i_rabi = Complex64::new(0.0, half_rabi);
        for j in 0..n {
            out.dp[j] = -self.optical * polarization[j] + self.coupling * out.field[j] + i_rabi * spin[j];
            out.ds[j] = -self.ground * spin[j] + i_rabi * polarization[j];
        }
    }

    fn exit_field(&self, edge: Complex64, polarization: &[Complex64]) -> Complex64 {
        let step = self.coupling * self.half_dz;
        let mut e = edge;
        for pair in polarization.windows(2) {
            e += step * (pair[0] + pair[1]);
        }
        e
    }
}

fn check_resolution(grid: &TimeGrid, control: &ControlProfile, params: &MediumParams, n_z: usize) -> Result<()> {
    let ramps: Vec<f64> = control.events().iter().map(|ev| ev.ramp).collect();
    check_resolution_for(grid, params, control.max_level(), &ramps, n_z)
}

/// Resolution rules applied before every propagation: `n_z ≥ MIN_NZ`,
/// `dt·γ₁₃ ≤ MAX_DT_GAMMA`, `dt·od/2 ≤ 1`, `dt·Ω_max ≤ 1` and
/// `dt ≤ ramp/10` for every switching ramp.
pub fn check_resolution_for(
    grid: &TimeGrid,
    params: &MediumParams,
    max_rabi: f64,
    ramps: &[f64],
    n_z: usize,
) -> Result<()> {
    if n_z < MIN_NZ {
        return Err(Error::Resolution(format!("n_z = {n_z} is below the minimum {MIN_NZ}")));
    }
    let h = params.to_internal_time(grid.dt());
    if h > MAX_DT_GAMMA {
        return Err(Error::Resolution(format!(
            "dt = {h:.4}/gamma13 does not resolve the optical coherence (need ≤ {MAX_DT_GAMMA})"
        )));
    }
    let d = 0.5 * params.od;
    if h * d > 1.0 {
        return Err(Error::Resolution(format!(
            "dt·od/2 = {:.3} exceeds 1; reduce dt for this optical depth",
            h * d
        )));
    }
    if h * max_rabi > 1.0 {
        return Err(Error::Resolution(format!(
            "dt·omega_c = {:.3} exceeds 1; reduce dt for this coupling",
            h * max_rabi
        )));
    }
    for (k, &ramp) in ramps.iter().enumerate() {
        if grid.dt() > ramp / 10.0 * (1.0 + 1e-9) {
            return Err(Error::Resolution(format!(
                "dt = {:.3e} s exceeds ramp/10 for control event {k} (ramp {:.3e} s)",
                grid.dt(),
                ramp
            )));
        }
    }
    Ok(())
}

pub fn propagate_with(
    psi_in: &Waveform,
    control: &ControlProfile,
    params: &MediumParams,
    n_z: usize,
    options: &PropagationOptions,
) -> Result<(Waveform, MediumState)> {
    params.validate()?;
    let grid = *psi_in.grid();
    if !grid.same_as(control.grid()) {
        return Err(Error::invalid("control.grid", "must match the input waveform grid"));
    }
    check_resolution(&grid, control, params, n_z)?;

    let gamma = params.gamma13;
    let h = params.to_internal_time(grid.dt());
    let dz = 1.0 / (n_z - 1) as f64;
    // amplitude optical depth; the only place od is halved
    let d = 0.5 * params.od;
    let coef = Coefficients {
        coupling: Complex64::new(0.0, d.sqrt()),
        half_dz: 0.5 * dz,
        optical: Complex64::new(1.0, -params.delta_p),
        ground: Complex64::new(params.gamma12, -params.delta_p),
    };

    let to_internal = 1.0 / gamma.sqrt();
    let input: Vec<Complex64> = psi_in.samples().iter().map(|s| s * to_internal).collect();
    let n_t = grid.len();
    let zero = Complex64::new(0.0, 0.0);

    let mut p = vec![zero; n_z];
    let mut s = vec![zero; n_z];
    let mut p_tmp = vec![zero; n_z];
    let mut s_tmp = vec![zero; n_z];
    let mut acc_p = vec![zero; n_z];
    let mut acc_s = vec![zero; n_z];
    let mut work = Slices {
        field: vec![zero; n_z],
        dp: vec![zero; n_z],
        ds: vec![zero; n_z],
    };

    let mut output = Vec::with_capacity(n_t);
    let mut spin_energy = Vec::with_capacity(n_t);
    let mut polarization_energy = Vec::with_capacity(n_t);
    let mut dissipated = Vec::with_capacity(n_t);
    let mut snapshot_requests: Vec<(usize, f64)> = options
        .snapshot_times
        .iter()
        .filter(|t| grid.contains(**t))
        .map(|&t| (grid.position(t).round() as usize, t))
        .collect();
    snapshot_requests.sort_by_key(|r| r.0);
    let mut snapshots = Vec::new();
    let mut next_snapshot = 0;

    let loss_rate = |p: &[Complex64], s: &[Complex64]| {
        2.0 * trapezoid_norm_sqr(p, dz) + 2.0 * params.gamma12 * trapezoid_norm_sqr(s, dz)
    };

    output.push(coef.exit_field(input[0], &p));
    spin_energy.push(0.0);
    polarization_energy.push(0.0);
    dissipated.push(0.0);
    let mut last_loss = 0.0;

    for k in 0..n_t - 1 {
        while next_snapshot < snapshot_requests.len() && snapshot_requests[next_snapshot].0 == k {
            snapshots.push((snapshot_requests[next_snapshot].1, s.clone()));
            next_snapshot += 1;
        }
        let t0 = grid.time(k);
        let edge0 = input[k];
        let edge1 = input[k + 1];
        let edge_mid = 0.5 * (edge0 + edge1);
        let rabi0 = 0.5 * control.level_at(t0);
        let rabi_mid = 0.5 * control.level_at(t0 + 0.5 * grid.dt());
        let rabi1 = 0.5 * control.level_at(t0 + grid.dt());

        // classic RK4 over the (P, S) slices
        coef.evaluate(edge0, rabi0, &p, &s, &mut work);
        for j in 0..n_z {
            acc_p[j] = work.dp[j];
            acc_s[j] = work.ds[j];
            p_tmp[j] = p[j] + 0.5 * h * work.dp[j];
            s_tmp[j] = s[j] + 0.5 * h * work.ds[j];
        }
        coef.evaluate(edge_mid, rabi_mid, &p_tmp, &s_tmp, &mut work);
        for j in 0..n_z {
            acc_p[j] += 2.0 * work.dp[j];
            acc_s[j] += 2.0 * work.ds[j];
            p_tmp[j] = p[j] + 0.5 * h * work.dp[j];
            s_tmp[j] = s[j] + 0.5 * h * work.ds[j];
        }
        coef.evaluate(edge_mid, rabi_mid, &p_tmp, &s_tmp, &mut work);
        for j in 0..n_z {
            acc_p[j] += 2.0 * work.dp[j];
            acc_s[j] += 2.0 * work.ds[j];
            p_tmp[j] = p[j] + h * work.dp[j];
            s_tmp[j] = s[j] + h * work.ds[j];
        }
        coef.evaluate(edge1, rabi1, &p_tmp, &s_tmp, &mut work);
        let sixth = h / 6.0;
        for j in 0..n_z {
            p[j] += sixth * (acc_p[j] + work.dp[j]);
            s[j] += sixth * (acc_s[j] + work.ds[j]);
        }

        let exit = coef.exit_field(edge1, &p);
        if !(exit.re.is_finite() && exit.im.is_finite()) {
            return Err(Error::NonFinite {
                operation: "propagate",
                step: k + 1,
            });
        }
        output.push(exit);
        let spin_now = trapezoid_norm_sqr(&s, dz);
        if !spin_now.is_finite() {
            return Err(Error::NonFinite {
                operation: "propagate",
                step: k + 1,
            });
        }
        spin_energy.push(spin_now);
        polarization_energy.push(trapezoid_norm_sqr(&p, dz));
        let loss = loss_rate(&p, &s);
        let prev = *dissipated.last().unwrap_or(&0.0);
        dissipated.push(prev + 0.5 * h * (last_loss + loss));
        last_loss = loss;
    }
    while next_snapshot < snapshot_requests.len() {
        snapshots.push((snapshot_requests[next_snapshot].1, s.clone()));
        next_snapshot += 1;
    }

    // final field profile for inspection
    let final_rabi = 0.5 * control.level_at(grid.t_end());
    coef.evaluate(input[n_t - 1], final_rabi, &p, &s, &mut work);

    let from_internal = gamma.sqrt();
    let psi_out = Waveform::new(grid, output.into_iter().map(|e| e * from_internal).collect())?;
    let z = (0..n_z).map(|j| j as f64 * dz).collect();
    let state = MediumState {
        z,
        times: grid,
        field: work.field.iter().map(|e| e * from_internal).collect(),
        polarization: p,
        spin: s,
        spin_energy,
        polarization_energy,
        dissipated,
        snapshots,
    };
    Ok((psi_out, state))
}

/// Linear-response transmission of `psi_in` for a constant coupling field.
///
/// The input is zero-padded to twice its length, filtered by
/// `exp(-(od/2)·chi)` and transformed back, so the result approximates the
/// causal output on the same grid.
pub fn spectral_oracle(psi_in: &Waveform, params: &MediumParams) -> Result<Waveform> {
    params.validate()?;
    let grid = *psi_in.grid();
    let n = grid.len();
    let n_pad = 2 * n;
    let mut buffer: Vec<Complex64> = psi_in.samples().to_vec();
    buffer.resize(n_pad, Complex64::new(0.0, 0.0));

    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n_pad).process(&mut buffer);

    let span = n_pad as f64 * grid.dt();
    for (k, value) in buffer.iter_mut().enumerate() {
        let signed = if k <= n_pad / 2 { k as f64 } else { k as f64 - n_pad as f64 };
        let freq_hz = signed / span;
        // the FFT bin k carries exp(+2πi f t) = exp(-iωt) with ω = -2πf
        let omega = -std::f64::consts::TAU * freq_hz / params.gamma13;
        let response = (-0.5 * params.od * chi(params.delta_p + omega, params)).exp();
        *value *= response;
    }
    planner.plan_fft_inverse(n_pad).process(&mut buffer);
    let scale = 1.0 / n_pad as f64;
    buffer.truncate(n);
    Waveform::new(grid, buffer.into_iter().map(|v| v * scale).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(t_end_ns: f64, dt_ns: f64) -> TimeGrid {
        TimeGrid::new(0.0, t_end_ns * 1e-9, dt_ns * 1e-9).unwrap()
    }

    #[test]
    fn zero_od_is_identity() {
        let g = grid(300.0, 0.1);
        let psi = Waveform::gaussian(g, 100e-9, 30e-9).unwrap();
        let control = ControlProfile::constant(g, 11.0).unwrap();
        let params = MediumParams::new(0.0, 0.0, 11.0);
        let (out, _) = propagate(&psi, &control, &params, 60).unwrap();
        for (a, b) in psi.samples().iter().zip(out.samples()) {
            assert!((a - b).norm() < 1e-12 * (1.0 + a.norm()));
        }
        assert!((out.energy() / psi.energy() - 1.0).abs() < 1e-9);
        let oracle = spectral_oracle(&psi, &params).unwrap();
        for (a, b) in psi.samples().iter().zip(oracle.samples()) {
            assert!((a - b).norm() < 1e-9 * psi.samples().iter().map(|s| s.norm()).fold(0.0, f64::max));
        }
    }

    #[test]
    fn vacuum_stays_vacuum() {
        let g = grid(100.0, 0.1);
        let psi = Waveform::zeros(g);
        let control = ControlProfile::constant(g, 11.0).unwrap();
        let (out, state) = propagate(&psi, &control, &MediumParams::new(60.0, 0.03, 11.0), 60).unwrap();
        assert!(out.samples().iter().all(|s| s.norm() == 0.0));
        assert!(state.spin().iter().all(|s| s.norm() == 0.0));
        assert!(state.spin_energy_series().iter().all(|&e| e == 0.0));
    }

    #[test]
    fn resolution_checks_name_the_constraint() {
        let g = grid(100.0, 0.1);
        let psi = Waveform::gaussian(g, 50e-9, 10e-9).unwrap();
        let control = ControlProfile::constant(g, 11.0).unwrap();
        let params = MediumParams::new(60.0, 0.0, 11.0);
        let err = propagate(&psi, &control, &params, 10).unwrap_err();
        assert!(err.to_string().contains("n_z"));
        let coarse = grid(100.0, 2.0);
        let psi = Waveform::gaussian(coarse, 50e-9, 10e-9).unwrap();
        let control = ControlProfile::constant(coarse, 11.0).unwrap();
        let err = propagate(&psi, &control, &params, 100).unwrap_err();
        assert!(err.to_string().contains("dt"));
    }

    #[test]
    fn mismatched_grids_rejected() {
        let psi = Waveform::gaussian(grid(100.0, 0.1), 50e-9, 10e-9).unwrap();
        let control = ControlProfile::constant(grid(200.0, 0.1), 11.0).unwrap();
        assert!(propagate(&psi, &control, &MediumParams::new(1.0, 0.0, 11.0), 60).is_err());
    }

    #[test]
    fn spinwave_energy_requires_time_on_grid() {
        let g = grid(100.0, 0.1);
        let psi = Waveform::gaussian(g, 50e-9, 10e-9).unwrap();
        let control = ControlProfile::constant(g, 11.0).unwrap();
        let (_, state) = propagate(&psi, &control, &MediumParams::new(10.0, 0.0, 11.0), 60).unwrap();
        assert_eq!(spinwave_energy(&state, 0.0).unwrap(), 0.0);
        assert!(spinwave_energy(&state, 200e-9).is_err());
    }

    #[test]
    fn carrier_at_dark_resonance_is_transmitted() {
        // a pulse much longer than the group delay is essentially a carrier
        let params = MediumParams::new(60.0, 0.0, 11.0);
        let g = grid(20_000.0, 1.0);
        let psi = Waveform::gaussian(g, 10_000e-9, 4_000e-9).unwrap();
        let out = spectral_oracle(&psi, &params).unwrap();
        assert!((out.energy() / psi.energy() - 1.0).abs() < 1e-3);
    }
}
