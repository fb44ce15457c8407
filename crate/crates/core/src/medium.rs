//! Steady-state linear response of a Λ-type EIT medium.
//!
//! Rates and detunings are expressed in units of the probe dipole relaxation
//! rate `gamma13` (a half-width). The susceptibility is normalized so that the
//! bare two-level line gives `chi = 1` on resonance, hence the intensity
//! transmission through the whole cloud is `exp(-od * Re chi)`.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::golden_section;

/// `2π × 3 MHz`, the Rb D1 dipole relaxation rate.
pub const GAMMA13_RB85: f64 = 2.0 * PI * 3.0e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediumParams {
    /// Resonant intensity optical depth: `T = exp(-od)` with the coupling off.
    pub od: f64,
    /// Dipole relaxation rate of the probe transition, rad/s.
    pub gamma13: f64,
    /// Ground-state dephasing rate, units of `gamma13`.
    pub gamma12: f64,
    /// Full coupling Rabi frequency, units of `gamma13`.
    pub omega_c: f64,
    /// Probe carrier detuning, units of `gamma13`.
    pub delta_p: f64,
}

impl MediumParams {
    pub fn new(od: f64, gamma12: f64, omega_c: f64) -> Self {
        MediumParams {
            od,
            gamma13: GAMMA13_RB85,
            gamma12,
            omega_c,
            delta_p: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("od", self.od),
            ("gamma13", self.gamma13),
            ("gamma12", self.gamma12),
            ("omega_c", self.omega_c),
            ("delta_p", self.delta_p),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                return Err(Error::invalid(format!("medium.{name}"), "must be finite"));
            }
        }
        if self.od < 0.0 {
            return Err(Error::invalid("medium.od", "must be ≥ 0"));
        }
        if self.gamma13 <= 0.0 {
            return Err(Error::invalid("medium.gamma13", "must be > 0"));
        }
        if self.gamma12 < 0.0 {
            return Err(Error::invalid("medium.gamma12", "must be ≥ 0"));
        }
        if self.omega_c < 0.0 {
            return Err(Error::invalid("medium.omega_c", "must be ≥ 0"));
        }
        Ok(())
    }

    pub fn with_gamma12(self, gamma12: f64) -> Self {
        MediumParams { gamma12, ..self }
    }

    pub fn with_od(self, od: f64) -> Self {
        MediumParams { od, ..self }
    }

    pub fn with_omega_c(self, omega_c: f64) -> Self {
        MediumParams { omega_c, ..self }
    }

    /// Converts a duration in seconds to units of `1/gamma13`.
    pub fn to_internal_time(&self, seconds: f64) -> f64 {
        seconds * self.gamma13
    }

    pub fn to_seconds(&self, internal: f64) -> f64 {
        internal / self.gamma13
    }
}

/// Normalized susceptibility at probe detuning `delta` (units of `gamma13`).
pub fn susceptibility(delta: f64, params: &MediumParams) -> Result<Complex64> {
    params.validate()?;
    if !delta.is_finite() {
        return Err(Error::invalid("delta", "must be finite"));
    }
    Ok(chi(delta, params))
}

#[inline]
pub(crate) fn chi(delta: f64, params: &MediumParams) -> Complex64 {
    let i = Complex64::i();
    if params.omega_c == 0.0 {
        // bare two-level line; avoids 0/0 on two-photon resonance
        return 1.0 / (1.0 - i * delta);
    }
    let ground = params.gamma12 - i * delta;
    let half_rabi = 0.5 * params.omega_c;
    ground / ((1.0 - i * delta) * ground + half_rabi * half_rabi)
}

#[inline]
fn transmission_at(delta: f64, params: &MediumParams) -> f64 {
    (-params.od * chi(delta, params).re).exp()
}

#[inline]
fn phase_at(delta: f64, params: &MediumParams) -> f64 {
    -0.5 * params.od * chi(delta, params).im
}

/// Intensity transmission and accumulated phase sampled over probe detuning.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub deltas: Vec<f64>,
    pub transmission: Vec<f64>,
    pub phase: Vec<f64>,
}

impl Spectrum {
    pub fn new(deltas: Vec<f64>, transmission: Vec<f64>, phase: Vec<f64>) -> Result<Self> {
        if deltas.len() != transmission.len() || deltas.len() != phase.len() {
            return Err(Error::invalid("spectrum", "arrays must have equal length"));
        }
        if let Some(t) = transmission
            .iter()
            .find(|t| !t.is_finite() || **t < 0.0 || **t > 1.0 + 1e-9)
        {
            return Err(Error::invalid(
                "spectrum.transmission",
                format!("value {t} outside [0, 1]"),
            ));
        }
        Ok(Spectrum {
            deltas,
            transmission,
            phase,
        })
    }

    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("delta_gamma13,transmission,phase_rad\n");
        for ((d, t), p) in self.deltas.iter().zip(&self.transmission).zip(&self.phase) {
            out.push_str(&format!("{d:.8e},{t:.8e},{p:.8e}\n"));
        }
        crate::io::write_text(path, &out)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let rows = crate::io::parse_csv(path, &text, "delta_gamma13,transmission,phase_rad", 3)?;
        let mut deltas = Vec::with_capacity(rows.len());
        let mut transmission = Vec::with_capacity(rows.len());
        let mut phase = Vec::with_capacity(rows.len());
        for row in rows {
            deltas.push(row[0]);
            transmission.push(row[1]);
            phase.push(row[2]);
        }
        Spectrum::new(deltas, transmission, phase)
    }
}

pub fn transmission_spectrum(params: &MediumParams, deltas: &[f64]) -> Result<Spectrum> {
    params.validate()?;
    if deltas.is_empty() {
        return Err(Error::invalid("deltas", "detuning array is empty"));
    }
    if deltas.iter().any(|d| !d.is_finite()) {
        return Err(Error::invalid("deltas", "must be finite"));
    }
    let transmission = deltas.iter().map(|&d| transmission_at(d, params)).collect();
    let phase = deltas.iter().map(|&d| phase_at(d, params)).collect();
    Spectrum::new(deltas.to_vec(), transmission, phase)
}

/// Uniform detuning grid of `n` points on `[-span, span]`.
pub fn detuning_grid(span: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|k| -span + 2.0 * span * k as f64 / (n - 1) as f64)
        .collect()
}

/// Group delay `dφ/dδ` at the carrier, in seconds.
pub fn group_delay(params: &MediumParams) -> Result<f64> {
    params.validate()?;
    if params.omega_c <= 0.0 {
        return Err(Error::invalid(
            "medium.omega_c",
            "group delay needs a transparency window (omega_c > 0)",
        ));
    }
    let h = 1e-4;
    let center = params.delta_p;
    let slope = (phase_at(center + h, params) - phase_at(center - h, params)) / (2.0 * h);
    Ok(params.to_seconds(slope))
}

/// Full width at half maximum of the transparency peak, units of `gamma13`.
pub fn eit_bandwidth(params: &MediumParams) -> Result<f64> {
    params.validate()?;
    if params.omega_c <= 0.0 || params.od <= 0.0 {
        return Err(Error::invalid(
            "medium",
            "bandwidth needs omega_c > 0 and od > 0",
        ));
    }
    let center = params.delta_p;
    let peak = transmission_at(center, params);
    let half = 0.5 * peak;

    // walk outwards to the absorption doublet, which sits near omega_c/2
    let step = (params.omega_c * 1e-3).max(1e-6);
    let mut prev = peak;
    let mut x = 0.0;
    let mut crossing = None;
    let limit = 4.0 * params.omega_c + 10.0;
    while x < limit {
        x += step;
        let t = transmission_at(center + x, params);
        if t <= half {
            crossing = Some((x - step, x));
            break;
        }
        if t > prev && x > 0.5 * params.omega_c {
            break; // past the dip without reaching half maximum
        }
        prev = t;
    }
    let (mut lo, mut hi) = crossing.ok_or_else(|| {
        Error::numerical(
            "eit_bandwidth",
            format!("no transparency peak: absorption never falls to half of T(0) = {peak:.4}"),
        )
    })?;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if transmission_at(center + mid, params) > half {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo + hi)
}

/// EIT bandwidth expressed in Hz (cycles per second).
pub fn eit_bandwidth_hz(params: &MediumParams) -> Result<f64> {
    Ok(eit_bandwidth(params)? * params.gamma13 / (2.0 * PI))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DephasingFit {
    /// Estimated ground-state dephasing, units of `gamma13`.
    pub gamma12: f64,
    /// Euclidean norm of the transmission residuals at the estimate.
    pub residual: f64,
}

/// Least-squares estimate of `gamma12` from a measured transmission spectrum.
///
/// `known` supplies every other medium parameter; its `gamma12` is ignored.
/// The search is a golden-section minimization over `[0, 1]`.
pub fn fit_dephasing(measured: &Spectrum, known: &MediumParams) -> Result<DephasingFit> {
    const MAX_ITER: usize = 200;
    const TOL: f64 = 1e-9;

    known.with_gamma12(0.0).validate()?;
    if measured.len() < 5 {
        return Err(Error::invalid(
            "spectrum",
            "dephasing fit needs at least 5 points",
        ));
    }
    let span_ok = measured.deltas.iter().any(|&d| d < known.delta_p)
        && measured.deltas.iter().any(|&d| d > known.delta_p);
    if !span_ok {
        return Err(Error::invalid(
            "spectrum.deltas",
            "points must span the transparency window on both sides",
        ));
    }

    let cost = |gamma12: f64| -> f64 {
        let model = known.with_gamma12(gamma12.max(0.0));
        measured
            .deltas
            .iter()
            .zip(&measured.transmission)
            .map(|(&d, &t)| (transmission_at(d, &model) - t).powi(2))
            .sum()
    };

    let found = golden_section(cost, 0.0, 1.0, TOL, MAX_ITER);
    let at_zero = cost(0.0);
    let (gamma12, value) = if at_zero <= found.value {
        (0.0, at_zero)
    } else {
        (found.x, found.value)
    };
    if !found.converged {
        return Err(Error::NoConvergence {
            operation: "fit_dephasing",
            iterations: found.iterations,
            best: gamma12,
            residual: value.sqrt(),
        });
    }
    Ok(DephasingFit {
        gamma12,
        residual: value.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn preset_a() -> MediumParams {
        MediumParams::new(60.0, 0.03, 11.0)
    }

    #[test]
    fn two_level_resonance_is_unity() {
        let p = MediumParams::new(4.0, 0.0, 0.0);
        let c = susceptibility(0.0, &p).unwrap();
        assert!((c - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        let s = transmission_spectrum(&p, &[0.0]).unwrap();
        assert!((s.transmission[0] - (-4.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn dark_resonance_is_transparent() {
        let p = MediumParams::new(60.0, 0.0, 7.0);
        assert_eq!(susceptibility(0.0, &p).unwrap().norm(), 0.0);
        assert_eq!(transmission_spectrum(&p, &[0.0]).unwrap().transmission[0], 1.0);
    }

    #[test]
    fn preset_a_center_transmission() {
        // chi(0) = g / (g + (Ω/2)^2) with g = 0.03, (Ω/2)^2 = 30.25
        let expected = (-60.0 * 0.03 / (0.03 + 30.25f64)).exp();
        let s = transmission_spectrum(&preset_a(), &[0.0]).unwrap();
        assert!((s.transmission[0] - expected).abs() < 1e-14);
        assert!((s.transmission[0] - 0.942).abs() < 5e-4);
    }

    #[test]
    fn spectrum_is_symmetric() {
        let p = preset_a();
        let deltas = detuning_grid(30.0, 301);
        let s = transmission_spectrum(&p, &deltas).unwrap();
        for k in 0..deltas.len() {
            let mirror = deltas.len() - 1 - k;
            assert!((s.transmission[k] - s.transmission[mirror]).abs() < 1e-12);
        }
    }

    #[test]
    fn absorption_doublet_sits_at_half_rabi() {
        let p = MediumParams::new(60.0, 0.0, 11.0);
        let deltas = detuning_grid(20.0, 40_001);
        let s = transmission_spectrum(&p, &deltas).unwrap();
        // only look at positive detuning
        let (argmin, _) = deltas
            .iter()
            .zip(&s.transmission)
            .filter(|(d, _)| **d > 0.0)
            .fold((0.0, f64::INFINITY), |acc, (&d, &t)| if t < acc.1 { (d, t) } else { acc });
        assert!((argmin - 5.5).abs() < 0.1, "argmin {argmin}");
    }

    #[test]
    fn empty_grid_rejected() {
        assert!(transmission_spectrum(&preset_a(), &[]).is_err());
        assert!(susceptibility(f64::NAN, &preset_a()).is_err());
    }

    #[test]
    fn group_delay_matches_small_detuning_expansion() {
        let p = MediumParams::new(60.0, 0.0, 11.0);
        let tau = group_delay(&p).unwrap();
        let closed = 2.0 * 60.0 / (121.0 * GAMMA13_RB85);
        assert!((tau - closed).abs() / closed < 1e-6, "{tau} vs {closed}");
        assert!((tau * 1e9 - 52.6).abs() < 0.1);
    }

    #[test]
    fn group_delay_edge_cases() {
        let p = MediumParams::new(0.0, 0.0, 11.0);
        assert_eq!(group_delay(&p).unwrap(), 0.0);
        let d1 = group_delay(&MediumParams::new(30.0, 0.0, 11.0)).unwrap();
        let d2 = group_delay(&MediumParams::new(60.0, 0.0, 11.0)).unwrap();
        assert!((d2 / d1 - 2.0).abs() < 1e-9);
        assert!(group_delay(&MediumParams::new(60.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn bandwidth_orders_with_rabi_frequency() {
        let a = eit_bandwidth(&preset_a()).unwrap();
        let b = eit_bandwidth(&MediumParams::new(60.0, 0.01, 6.88)).unwrap();
        assert!(b < a);
        let mut last = 0.0;
        for omega in [2.0, 4.0, 6.0, 8.0, 11.0, 15.0] {
            let w = eit_bandwidth(&MediumParams::new(60.0, 0.0, omega)).unwrap();
            assert!(w > last);
            last = w;
        }
    }

    #[test]
    fn bandwidth_is_half_transmission_width() {
        let p = MediumParams::new(60.0, 0.0, 11.0);
        let w = eit_bandwidth(&p).unwrap();
        let s = transmission_spectrum(&p, &[0.5 * w]).unwrap();
        assert!((s.transmission[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn bandwidth_needs_a_dip() {
        assert!(eit_bandwidth(&MediumParams::new(0.1, 0.0, 11.0)).is_err());
    }

    #[test]
    fn fit_recovers_zero_dephasing() {
        let p = MediumParams::new(60.0, 0.0, 11.0);
        let s = transmission_spectrum(&p, &detuning_grid(33.0, 201)).unwrap();
        let fit = fit_dephasing(&s, &p.with_gamma12(0.5)).unwrap();
        assert_eq!(fit.gamma12, 0.0);
    }

    #[test]
    fn fit_needs_enough_points() {
        let p = preset_a();
        let s = transmission_spectrum(&p, &[-1.0, 0.0, 1.0]).unwrap();
        assert!(fit_dephasing(&s, &p).is_err());
    }
}
