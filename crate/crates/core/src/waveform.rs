//! Uniform time grids and complex temporal envelopes.

use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::io::{fmt_float, parse_csv, write_text};
use crate::numeric::trapezoid_norm_sqr;

/// Uniform sampling of `[t_start, t_end]`, in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_start: f64,
    t_end: f64,
    dt: f64,
    n_t: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, dt: f64) -> Result<Self> {
        if !(t_start.is_finite() && t_end.is_finite() && dt.is_finite()) {
            return Err(Error::invalid("grid", "bounds and step must be finite"));
        }
        if dt <= 0.0 {
            return Err(Error::invalid("grid.dt", "must be > 0"));
        }
        if t_end <= t_start {
            return Err(Error::invalid("grid.t_end", "must exceed t_start"));
        }
        let n_t = ((t_end - t_start) / dt).round() as usize + 1;
        Ok(TimeGrid {
            t_start,
            t_end: t_start + (n_t - 1) as f64 * dt,
            dt,
            n_t,
        })
    }

    /// Grid with `n` samples starting at `t_start`.
    pub fn with_len(t_start: f64, dt: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("grid", "needs at least two samples"));
        }
        TimeGrid::new(t_start, t_start + (n - 1) as f64 * dt, dt)
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.n_t
    }

    pub fn is_empty(&self) -> bool {
        self.n_t == 0
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t_start + k as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_t).map(|k| self.time(k))
    }

    /// Fractional sample index of time `t`.
    pub fn position(&self, t: f64) -> f64 {
        (t - self.t_start) / self.dt
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t_start && t <= self.t_end
    }

    pub fn same_as(&self, other: &TimeGrid) -> bool {
        self.n_t == other.n_t
            && (self.dt - other.dt).abs() <= 1e-12 * self.dt
            && (self.t_start - other.t_start).abs() <= 1e-9 * self.dt
    }

    /// Same span with the step halved.
    pub fn refined(&self) -> TimeGrid {
        TimeGrid::new(self.t_start, self.t_end, 0.5 * self.dt).expect("refining a valid grid")
    }
}

/// Complex envelope sampled on a [`TimeGrid`]; `|ψ|²` integrates to a photon
/// number (dimensionless energy).
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    grid: TimeGrid,
    samples: Vec<Complex64>,
}

impl Waveform {
    pub fn new(grid: TimeGrid, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::invalid(
                "waveform.samples",
                format!("expected {} samples, found {}", grid.len(), samples.len()),
            ));
        }
        if samples.iter().any(|s| !(s.re.is_finite() && s.im.is_finite())) {
            return Err(Error::invalid("waveform.samples", "must be finite"));
        }
        Ok(Waveform { grid, samples })
    }

    pub fn zeros(grid: TimeGrid) -> Self {
        Waveform {
            grid,
            samples: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_fn(grid: TimeGrid, mut f: impl FnMut(f64) -> Complex64) -> Result<Self> {
        let samples = grid.times().map(&mut f).collect();
        Waveform::new(grid, samples)
    }

    pub fn from_real_fn(grid: TimeGrid, mut f: impl FnMut(f64) -> f64) -> Result<Self> {
        Waveform::from_fn(grid, |t| Complex64::new(f(t), 0.0))
    }

    /// Gaussian with intensity FWHM `fwhm`, unit energy.
    pub fn gaussian(grid: TimeGrid, center: f64, fwhm: f64) -> Result<Self> {
        if !(fwhm > 0.0) {
            return Err(Error::invalid("waveform.fwhm", "must be > 0"));
        }
        let a = 2.0 * std::f64::consts::LN_2 / (fwhm * fwhm);
        Waveform::from_real_fn(grid, |t| (-a * (t - center).powi(2)).exp())?.normalized()
    }

    /// Flat-top pulse of full width `width`, unit energy.
    pub fn square(grid: TimeGrid, center: f64, width: f64) -> Result<Self> {
        if !(width > 0.0) {
            return Err(Error::invalid("waveform.width", "must be > 0"));
        }
        let half = 0.5 * width;
        Waveform::from_real_fn(grid, |t| if (t - center).abs() <= half { 1.0 } else { 0.0 })?
            .normalized()
    }

    /// Heralded biphoton-like envelope: fast rise at `start`, exponential
    /// intensity decay with about 95% of the energy inside `length`, and an
    /// optional damped oscillation on the leading edge. Unit energy.
    pub fn biphoton(
        grid: TimeGrid,
        start: f64,
        rise: f64,
        length: f64,
        precursor: Option<Precursor>,
    ) -> Result<Self> {
        if !(rise > 0.0 && length > 0.0) {
            return Err(Error::invalid("waveform", "rise and length must be > 0"));
        }
        let decay = length / 3.0;
        Waveform::from_real_fn(grid, |t| {
            let tau = t - start;
            if tau < 0.0 {
                return 0.0;
            }
            let mut amp = (1.0 - (-tau / rise).exp()) * (-0.5 * tau / decay).exp();
            if let Some(p) = precursor {
                amp += p.amplitude
                    * (std::f64::consts::TAU * tau / p.period).sin()
                    * (-tau / p.duration).exp();
            }
            amp
        })?
        .normalized()
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn intensity(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.norm_sqr()).collect()
    }

    /// `∫|ψ|² dt` by the trapezoidal rule.
    pub fn energy(&self) -> f64 {
        trapezoid_norm_sqr(&self.samples, self.grid.dt)
    }

    /// Energy in the samples with `from <= t <= to` (trapezoidal, clipped).
    pub fn energy_between(&self, from: f64, to: f64) -> f64 {
        let lo = (self.grid.position(from) - 1e-9).ceil().max(0.0) as usize;
        let hi_pos = (self.grid.position(to) + 1e-9).floor();
        if hi_pos < 0.0 {
            return 0.0;
        }
        let hi = (hi_pos as usize).min(self.grid.len() - 1);
        if lo > hi {
            return 0.0;
        }
        trapezoid_norm_sqr(&self.samples[lo..=hi], self.grid.dt)
    }

    pub fn scaled(&self, factor: Complex64) -> Waveform {
        Waveform {
            grid: self.grid,
            samples: self.samples.iter().map(|s| s * factor).collect(),
        }
    }

    pub fn normalized(self) -> Result<Waveform> {
        let e = self.energy();
        if !(e > 0.0) {
            return Err(Error::ZeroEnergy("normalize"));
        }
        Ok(self.scaled(Complex64::new(1.0 / e.sqrt(), 0.0)))
    }

    /// Energy-weighted mean time.
    pub fn centroid(&self) -> Option<f64> {
        let total: f64 = self.samples.iter().map(|s| s.norm_sqr()).sum();
        if !(total > 0.0) {
            return None;
        }
        let weighted: f64 = self
            .samples
            .iter()
            .enumerate()
            .map(|(k, s)| self.grid.time(k) * s.norm_sqr())
            .sum();
        Some(weighted / total)
    }

    pub fn peak_time(&self) -> Option<f64> {
        let (k, max) = self
            .samples
            .iter()
            .map(|s| s.norm_sqr())
            .enumerate()
            .fold((0, 0.0), |acc, (k, v)| if v > acc.1 { (k, v) } else { acc });
        (max > 0.0).then(|| self.grid.time(k))
    }

    /// Full width at half maximum of `|ψ|²`, from the outermost half-maximum
    /// crossings with linear interpolation.
    pub fn fwhm(&self) -> Option<f64> {
        let intensity = self.intensity();
        let max = intensity.iter().cloned().fold(0.0, f64::max);
        if !(max > 0.0) {
            return None;
        }
        let half = 0.5 * max;
        let first = intensity.iter().position(|&v| v >= half)?;
        let last = intensity.iter().rposition(|&v| v >= half)?;
        let dt = self.grid.dt;
        let left = if first == 0 {
            self.grid.time(0)
        } else {
            let (a, b) = (intensity[first - 1], intensity[first]);
            self.grid.time(first - 1) + dt * (half - a) / (b - a)
        };
        let right = if last + 1 == intensity.len() {
            self.grid.time(last)
        } else {
            let (a, b) = (intensity[last], intensity[last + 1]);
            self.grid.time(last) + dt * (a - half) / (a - b)
        };
        Some(right - left)
    }

    /// Reflects the envelope about `pivot` (`t -> 2·pivot - t`), with the
    /// pivot rounded to the nearest half sample. Samples mapped off the grid
    /// are dropped.
    pub fn time_reversed(&self, pivot: f64) -> Waveform {
        let n = self.grid.len() as i64;
        let m = (2.0 * self.grid.position(pivot)).round() as i64;
        let samples = (0..n)
            .map(|j| {
                let i = m - j;
                if (0..n).contains(&i) {
                    self.samples[i as usize].conj()
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        Waveform {
            grid: self.grid,
            samples,
        }
    }

    /// Shifts the samples later by `k` grid steps (earlier for negative `k`),
    /// zero-filling.
    pub fn shifted(&self, k: i64) -> Waveform {
        let n = self.grid.len() as i64;
        let samples = (0..n)
            .map(|j| {
                let i = j - k;
                if (0..n).contains(&i) {
                    self.samples[i as usize]
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        Waveform {
            grid: self.grid,
            samples,
        }
    }

    /// Zeroes every sample strictly before `t`.
    pub fn gated_after(&self, t: f64) -> Waveform {
        let mut out = self.clone();
        for (k, s) in out.samples.iter_mut().enumerate() {
            if self.grid.time(k) < t {
                *s = Complex64::new(0.0, 0.0);
            }
        }
        out
    }

    /// Zero-pads the envelope so the grid reaches at least `t_end`.
    pub fn extended_to(&self, t_end: f64) -> Waveform {
        if t_end <= self.grid.t_end {
            return self.clone();
        }
        let extra = ((t_end - self.grid.t_end) / self.grid.dt).ceil() as usize;
        let grid = TimeGrid::with_len(self.grid.t_start, self.grid.dt, self.grid.len() + extra)
            .expect("extending a valid grid");
        let mut samples = self.samples.clone();
        samples.resize(grid.len(), Complex64::new(0.0, 0.0));
        Waveform { grid, samples }
    }

    /// The same envelope resampled on another grid by linear interpolation.
    pub fn resampled(&self, grid: TimeGrid) -> Waveform {
        let samples = grid
            .times()
            .map(|t| crate::numeric::lerp_samples(&self.samples, self.grid.position(t)))
            .collect();
        Waveform { grid, samples }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_ns,re,im\n");
        for (k, s) in self.samples.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{}\n",
                fmt_float(self.grid.time(k) * 1e9),
                fmt_float(s.re),
                fmt_float(s.im)
            ));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_text(path, &self.to_csv())
    }

    /// Reads a `t_ns,re,im` table. Times must be uniformly spaced.
    pub fn read_csv(path: &Path) -> Result<Waveform> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let rows = parse_csv(path, &text, "t_ns,re,im", 3)?;
        if rows.len() < 2 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                message: "waveform needs at least two samples".into(),
            });
        }
        let dt_ns = rows[1][0] - rows[0][0];
        for (k, pair) in rows.windows(2).enumerate() {
            if ((pair[1][0] - pair[0][0]) - dt_ns).abs() > 1e-6 * dt_ns.abs().max(1e-12) {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: k + 3,
                    message: "time column is not uniformly spaced".into(),
                });
            }
        }
        let grid = TimeGrid::with_len(rows[0][0] * 1e-9, dt_ns * 1e-9, rows.len())?;
        let samples = rows.iter().map(|r| Complex64::new(r[1], r[2])).collect();
        Waveform::new(grid, samples)
    }
}

/// Damped oscillation riding on a biphoton's leading edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Precursor {
    pub amplitude: f64,
    pub period: f64,
    pub duration: f64,
}
