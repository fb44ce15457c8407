//! Photon-counting statistics for heralded single photons: coincidence
//! histograms, cross- and conditional correlation functions, Cauchy–Schwarz
//! violation and detection loss budgets.

mod budget;
mod simulate;

pub use budget::{loss_budget, pairing_efficiency_from_success, GenerationEstimate, LossBudget};
pub use simulate::{
    events_to_csv, simulate_counts, simulate_events, DetectionEvent, DetectorConfig, SimulationOutput,
    SourceConfig,
};

use std::ops::Range;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::fmt_float;

/// Detector counts entering the conditional autocorrelation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountSummary {
    pub n1: u64,
    pub n12: u64,
    pub n13: u64,
    pub n123: u64,
    /// Coincidence window, seconds.
    pub window: f64,
    /// Acquisition time, seconds.
    pub duration: f64,
}

impl CountSummary {
    pub fn new(n1: u64, n12: u64, n13: u64, n123: u64) -> Result<Self> {
        if n123 > n12.min(n13) {
            return Err(Error::invalid("counts.n123", "threefold counts exceed a twofold count"));
        }
        if n12 > n1 || n13 > n1 {
            return Err(Error::invalid("counts", "twofold counts exceed the herald count"));
        }
        Ok(CountSummary {
            n1,
            n12,
            n13,
            n123,
            window: 0.0,
            duration: 0.0,
        })
    }
}

/// Uniformly binned histogram of `τ = t_as - t_s`; offsets are left bin
/// edges in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceHistogram {
    start: f64,
    bin_width: f64,
    offsets: Vec<f64>,
    counts: Vec<u64>,
}

impl CoincidenceHistogram {
    /// Empty histogram covering `[start, end)`.
    pub fn new(start: f64, end: f64, bin_width: f64) -> Result<Self> {
        if !(bin_width > 0.0 && bin_width.is_finite()) {
            return Err(Error::invalid("bin_width", "must be > 0"));
        }
        if !(end > start) {
            return Err(Error::invalid("range", "end must exceed start"));
        }
        let n = ((end - start) / bin_width - 1e-9).ceil().max(1.0) as usize;
        Ok(CoincidenceHistogram {
            start,
            bin_width,
            offsets: (0..n).map(|k| start + k as f64 * bin_width).collect(),
            counts: vec![0; n],
        })
    }

    pub fn from_counts(start: f64, bin_width: f64, counts: Vec<u64>) -> Result<Self> {
        let mut hist = CoincidenceHistogram::new(start, start + counts.len() as f64 * bin_width, bin_width)?;
        if hist.counts.len() != counts.len() {
            return Err(Error::invalid("counts", "inconsistent bin count"));
        }
        hist.counts = counts;
        Ok(hist)
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn bin_of(&self, tau: f64) -> Option<usize> {
        if tau < self.start {
            return None;
        }
        let k = ((tau - self.start) / self.bin_width).floor() as usize;
        (k < self.counts.len()).then_some(k)
    }

    pub fn add(&mut self, tau: f64) {
        if let Some(k) = self.bin_of(tau) {
            self.counts[k] += 1;
        }
    }

    pub(crate) fn merge(&mut self, other: &CoincidenceHistogram) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    /// Bins whose left edge lies in `[from, to)`.
    pub fn bins_between(&self, from: f64, to: f64) -> Range<usize> {
        let lo = ((from - self.start) / self.bin_width - 1e-9).ceil().max(0.0) as usize;
        let hi = ((to - self.start) / self.bin_width - 1e-9).ceil().max(0.0) as usize;
        lo.min(self.len())..hi.min(self.len())
    }

    pub fn mean_over(&self, bins: Range<usize>) -> Option<f64> {
        if bins.is_empty() || bins.end > self.counts.len() {
            return None;
        }
        let n = bins.len() as f64;
        Some(self.counts[bins].iter().sum::<u64>() as f64 / n)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("tau_ns,counts\n");
        for (t, c) in self.offsets.iter().zip(&self.counts) {
            out.push_str(&format!("{},{c}\n", fmt_float(t * 1e9)));
        }
        out
    }
}

/// Histograms `τ = t_as - t_s` for the given `(t_s, t_as)` pairs over
/// `[range.0, range.1)`.
pub fn histogram(events: &[(f64, f64)], bin_width: f64, range: (f64, f64)) -> Result<CoincidenceHistogram> {
    let mut hist = CoincidenceHistogram::new(range.0, range.1, bin_width)?;
    for (t_s, t_as) in events {
        hist.add(t_as - t_s);
    }
    Ok(hist)
}

fn floor_level(hist: &CoincidenceHistogram, floor_window: Range<usize>) -> Result<f64> {
    let floor = hist
        .mean_over(floor_window)
        .ok_or_else(|| Error::invalid("floor_window", "empty or outside the histogram"))?;
    if !(floor > 0.0) {
        return Err(Error::numerical(
            "g2_cross",
            "accidental floor is zero; acquire longer or supply an explicit accidental rate",
        ));
    }
    Ok(floor)
}

/// Cross-correlation `g²(τ)`: counts normalized to the mean accidental floor.
pub fn g2_cross(hist: &CoincidenceHistogram, floor_window: Range<usize>) -> Result<Vec<f64>> {
    let floor = floor_level(hist, floor_window)?;
    Ok(hist.counts.iter().map(|&c| c as f64 / floor).collect())
}

/// Mean of `g²(τ)` over the signal window.
pub fn gbar(hist: &CoincidenceHistogram, signal_window: Range<usize>, floor_window: Range<usize>) -> Result<f64> {
    let floor = floor_level(hist, floor_window)?;
    let signal = hist
        .mean_over(signal_window)
        .ok_or_else(|| Error::invalid("signal_window", "empty or outside the histogram"))?;
    Ok(signal / floor)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionalG2 {
    pub value: f64,
    /// Poisson error; for zero threefolds this is the one-sided bound from a
    /// single threefold count.
    pub error: f64,
}

/// Heralded autocorrelation `N123·N1 / (N12·N13)` with uncorrelated Poisson
/// error propagation.
pub fn conditional_g2(c: &CountSummary) -> Result<ConditionalG2> {
    if c.n12 == 0 || c.n13 == 0 {
        return Err(Error::numerical(
            "conditional_g2",
            "twofold counts N12 and N13 must both be nonzero",
        ));
    }
    let (n1, n12, n13) = (c.n1 as f64, c.n12 as f64, c.n13 as f64);
    let relative = |n123: f64| (1.0 / n123 + 1.0 / n1 + 1.0 / n12 + 1.0 / n13).sqrt();
    if c.n123 == 0 {
        let one = n1 / (n12 * n13);
        return Ok(ConditionalG2 {
            value: 0.0,
            error: one * relative(1.0),
        });
    }
    let n123 = c.n123 as f64;
    let value = n123 * n1 / (n12 * n13);
    Ok(ConditionalG2 {
        value,
        error: value * relative(n123),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gc2Prediction {
    /// `(2ḡ + 1) / (ḡ + 1)²`.
    pub value: f64,
    /// Large-ḡ limit `2/ḡ`.
    pub large_gbar: f64,
}

/// Predicted conditional autocorrelation from the window-averaged cross
/// correlation.
pub fn gc2_from_gbar(gbar: f64) -> Result<Gc2Prediction> {
    if !(gbar >= 0.0) {
        return Err(Error::invalid("gbar", "must be ≥ 0"));
    }
    Ok(Gc2Prediction {
        value: (2.0 * gbar + 1.0) / (gbar + 1.0).powi(2),
        large_gbar: 2.0 / gbar,
    })
}

/// Cauchy–Schwarz ratio `g_sas² / (g_ss · g_asas)`; above one is nonclassical.
pub fn cauchy_schwarz(g_sas_max: f64, g_ss: f64, g_asas: f64) -> Result<f64> {
    if !(g_sas_max >= 0.0 && g_ss >= 0.0 && g_asas >= 0.0) {
        return Err(Error::invalid("cauchy_schwarz", "correlations must be ≥ 0"));
    }
    let denominator = g_ss * g_asas;
    if denominator == 0.0 {
        return Err(Error::invalid("cauchy_schwarz", "autocorrelations must be nonzero"));
    }
    Ok(g_sas_max * g_sas_max / denominator)
}

/// Metrics document written next to simulated histograms. `gbar` and
/// `cs_factor` are absent when the histogram has no accidental floor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountsReport {
    pub n1: u64,
    pub n12: u64,
    pub n13: u64,
    pub n123: u64,
    pub gc2: f64,
    pub gc2_err: f64,
    pub gbar: Option<f64>,
    pub cs_factor: Option<f64>,
}

impl CountsReport {
    /// Builds the report from counts and the herald–signal histogram.
    /// The Cauchy–Schwarz factor uses the peak of `g²(τ)` and thermal
    /// autocorrelations `g_ss = g_asas = 2`.
    pub fn new(
        summary: &CountSummary,
        hist: &CoincidenceHistogram,
        signal_window: Range<usize>,
        floor_window: Range<usize>,
    ) -> Result<Self> {
        let gc2 = conditional_g2(summary)?;
        let (gbar, cs_factor) = match floor_level(hist, floor_window.clone()) {
            Ok(_) => {
                let g = g2_cross(hist, floor_window.clone())?;
                let peak = g.iter().cloned().fold(0.0, f64::max);
                (
                    Some(gbar(hist, signal_window, floor_window)?),
                    Some(cauchy_schwarz(peak, 2.0, 2.0)?),
                )
            }
            Err(_) => (None, None),
        };
        Ok(CountsReport {
            n1: summary.n1,
            n12: summary.n12,
            n13: summary.n13,
            n123: summary.n123,
            gc2: gc2.value,
            gc2_err: gc2.error,
            gbar,
            cs_factor,
        })
    }
}
