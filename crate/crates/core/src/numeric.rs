//! Small numerical helpers shared across modules.

use num_complex::Complex64;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Trapezoidal integral of uniformly spaced samples.
pub fn trapezoid(values: &[f64], step: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => step * (values[1..n - 1].iter().sum::<f64>() + 0.5 * (values[0] + values[n - 1])),
    }
}

pub fn trapezoid_norm_sqr(values: &[Complex64], step: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            step * (values[1..n - 1].iter().map(|v| v.norm_sqr()).sum::<f64>()
                + 0.5 * (values[0].norm_sqr() + values[n - 1].norm_sqr()))
        }
    }
}

/// Result of a bracketed scalar minimization.
#[derive(Debug, Clone, Copy)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Golden-section search for a minimum of `f` on `[lo, hi]`.
///
/// Stops when the bracket is narrower than `tol` or after `max_iter`
/// contractions; `converged` reports which happened.
pub fn golden_section<F>(mut f: F, lo: f64, hi: f64, tol: f64, max_iter: usize) -> Minimum
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iterations = 0;
    while (b - a).abs() > tol && iterations < max_iter {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        iterations += 1;
    }
    let (x, value) = if fc < fd { (c, fc) } else { (d, fd) };
    Minimum {
        x,
        value,
        iterations,
        converged: (b - a).abs() <= tol,
    }
}

/// Linear interpolation of uniformly sampled data at fractional index `pos`,
/// zero outside the sampled range.
pub fn lerp_samples(samples: &[Complex64], pos: f64) -> Complex64 {
    if samples.is_empty() || !(pos >= 0.0) {
        return Complex64::new(0.0, 0.0);
    }
    let last = samples.len() - 1;
    let pos_floor = pos.floor();
    let i = pos_floor as usize;
    if i > last {
        return Complex64::new(0.0, 0.0);
    }
    if i == last {
        return if pos == pos_floor { samples[last] } else { Complex64::new(0.0, 0.0) };
    }
    let frac = pos - pos_floor;
    samples[i] * (1.0 - frac) + samples[i + 1] * frac
}

/// Least-squares fit of `ln(y) = a + b x`; returns `(a, b)`.
pub fn fit_exponential(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let points: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(_, &y)| y > 0.0)
        .map(|(&x, &y)| (x, y.ln()))
        .collect();
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    Some((mean_y - slope * mean_x, slope))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_integrates_linear_exactly() {
        let xs: Vec<f64> = (0..11).map(|i| i as f64 * 0.1).collect();
        assert!((trapezoid(&xs, 0.1) - 0.5).abs() < 1e-12);
        assert_eq!(trapezoid(&[3.0], 1.0), 0.0);
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let m = golden_section(|x| (x - 0.3).powi(2), 0.0, 1.0, 1e-10, 200);
        assert!(m.converged);
        assert!((m.x - 0.3).abs() < 1e-8);
    }

    #[test]
    fn golden_section_reports_iteration_cap() {
        let m = golden_section(|x| x * x, -1.0, 1.0, 1e-12, 3);
        assert!(!m.converged);
        assert_eq!(m.iterations, 3);
    }

    #[test]
    fn exponential_fit_recovers_rate() {
        let xs: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * (-0.25 * x).exp()).collect();
        let (a, b) = fit_exponential(&xs, &ys).unwrap();
        assert!((a - 2f64.ln()).abs() < 1e-12);
        assert!((b + 0.25).abs() < 1e-12);
    }

    #[test]
    fn lerp_is_zero_outside_range() {
        let s = vec![Complex64::new(1.0, 0.0), Complex64::new(3.0, 0.0)];
        assert_eq!(lerp_samples(&s, 0.5).re, 2.0);
        assert_eq!(lerp_samples(&s, -0.1).re, 0.0);
        assert_eq!(lerp_samples(&s, 1.0).re, 3.0);
        assert_eq!(lerp_samples(&s, 1.5).re, 0.0);
    }
}
