//! Monte Carlo model of heralded detection behind a beam splitter.
//!
//! Every trial is one herald click at D1. The partner photon survives with
//! probability `pairing_efficiency × chain_efficiency`, arrives at a delay
//! drawn from `|ψ|²` and is routed to D2 or D3. Uncorrelated noise photons
//! and dark counts are homogeneous Poisson processes over the record.
//! Detectors do not resolve photon number: several hits in the coincidence
//! window register once.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use std::ops::Range;

use super::{CoincidenceHistogram, CountSummary, CountsReport};
use crate::error::{Error, Result};
use crate::waveform::Waveform;

#[derive(Debug, Clone)]
pub struct SourceConfig {
    /// Heralded envelope; times are delays from the herald click.
    pub waveform: Waveform,
    pub pairing_efficiency: f64,
    /// Herald clicks per second.
    pub herald_rate: f64,
    /// Uncorrelated photons per second reaching the beam splitter.
    pub noise_rate: f64,
    /// Dark counts per second, per detector.
    pub dark_rate: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct DetectorConfig {
    /// Transmission from the source to the beam splitter, detector included.
    pub chain_efficiency: f64,
    /// Fraction routed to D2.
    pub bs_split: f64,
    pub coincidence_window: f64,
    /// Start of the coincidence window relative to the herald.
    pub window_start: f64,
    pub bin_width: f64,
    /// Recorded delay range; defaults to four windows centered on the herald.
    pub record: Option<(f64, f64)>,
}

impl DetectorConfig {
    pub fn record(&self) -> (f64, f64) {
        self.record
            .unwrap_or((-2.0 * self.coincidence_window, 2.0 * self.coincidence_window))
    }

    fn in_window(&self, t: f64) -> bool {
        t >= self.window_start && t < self.window_start + self.coincidence_window
    }
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(name, "must lie in [0, 1]"));
    }
    Ok(())
}

fn check_rate(name: &str, r: f64) -> Result<()> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::invalid(name, "must be finite and ≥ 0"));
    }
    Ok(())
}

impl SourceConfig {
    pub fn validate(&self) -> Result<()> {
        check_probability("source.pairing_efficiency", self.pairing_efficiency)?;
        check_rate("source.herald_rate", self.herald_rate)?;
        check_rate("source.noise_rate", self.noise_rate)?;
        check_rate("source.dark_rate", self.dark_rate)?;
        Ok(())
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        check_probability("detector.chain_efficiency", self.chain_efficiency)?;
        check_probability("detector.bs_split", self.bs_split)?;
        if !(self.coincidence_window > 0.0) {
            return Err(Error::invalid("detector.coincidence_window", "must be > 0"));
        }
        if !(self.bin_width > 0.0) {
            return Err(Error::invalid("detector.bin_width", "must be > 0"));
        }
        let (lo, hi) = self.record();
        if !(hi > lo) {
            return Err(Error::invalid("detector.record", "end must exceed start"));
        }
        Ok(())
    }
}

/// Inverse-CDF sampler over `|ψ|²`.
struct DelaySampler {
    times: Vec<f64>,
    cumulative: Vec<f64>,
}

impl DelaySampler {
    fn new(waveform: &Waveform) -> Result<Self> {
        let intensity = waveform.intensity();
        let dt = waveform.grid().dt();
        let mut cumulative = Vec::with_capacity(intensity.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for pair in intensity.windows(2) {
            acc += 0.5 * dt * (pair[0] + pair[1]);
            cumulative.push(acc);
        }
        if !(acc > 0.0) {
            return Err(Error::ZeroEnergy("simulate_counts"));
        }
        Ok(DelaySampler {
            times: waveform.grid().times().collect(),
            cumulative,
        })
    }

    fn sample(&self, u: f64) -> f64 {
        let target = u * self.cumulative[self.cumulative.len() - 1];
        let k = self
            .cumulative
            .partition_point(|&c| c <= target)
            .clamp(1, self.times.len() - 1);
        let (c0, c1) = (self.cumulative[k - 1], self.cumulative[k]);
        let frac = if c1 > c0 { ((target - c0) / (c1 - c0)).min(1.0) } else { 1.0 };
        self.times[k - 1] + frac * (self.times[k] - self.times[k - 1])
    }
}

/// One detector click.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionEvent {
    pub trial: u64,
    /// 2 or 3.
    pub detector: u8,
    /// Delay from the herald, seconds.
    pub t: f64,
}

struct Model<'a> {
    source: &'a SourceConfig,
    det: &'a DetectorConfig,
    sampler: DelaySampler,
    record: (f64, f64),
    noise: [Option<Poisson<f64>>; 2],
    seed: u64,
}

impl<'a> Model<'a> {
    fn new(source: &'a SourceConfig, det: &'a DetectorConfig, seed: u64) -> Result<Self> {
        source.validate()?;
        det.validate()?;
        let sampler = DelaySampler::new(&source.waveform)?;
        let record = det.record();
        let span = record.1 - record.0;
        let mean = |share: f64| {
            let m = (source.noise_rate * share + source.dark_rate) * span;
            (m > 0.0).then(|| Poisson::new(m).expect("positive finite mean"))
        };
        Ok(Model {
            source,
            det,
            sampler,
            record,
            noise: [mean(det.bs_split), mean(1.0 - det.bs_split)],
            seed,
        })
    }

    /// Independent stream per (trial, stream id).
    fn stream(&self, trial: u64, id: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial.wrapping_mul(4).wrapping_add(id));
        rng
    }

    fn trial(&self, trial: u64, mut emit: impl FnMut(u8, f64)) {
        let survive = self.source.pairing_efficiency * self.det.chain_efficiency;
        let mut rng = self.stream(trial, 0);
        if rng.random::<f64>() < survive {
            let tau = self.sampler.sample(rng.random::<f64>());
            let detector = if rng.random::<f64>() < self.det.bs_split { 2 } else { 3 };
            emit(detector, tau);
        }
        for (slot, detector) in [(0usize, 2u8), (1, 3)] {
            if let Some(dist) = &self.noise[slot] {
                let mut rng = self.stream(trial, detector as u64);
                let n = dist.sample(&mut rng) as u64;
                for _ in 0..n {
                    let t = self.record.0 + rng.random::<f64>() * (self.record.1 - self.record.0);
                    emit(detector, t);
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub summary: CountSummary,
    /// Herald–D2 delays.
    pub hist_12: CoincidenceHistogram,
    /// Herald–D3 delays.
    pub hist_13: CoincidenceHistogram,
}

impl SimulationOutput {
    /// Sum of both herald–signal histograms.
    pub fn combined(&self) -> CoincidenceHistogram {
        let mut h = self.hist_12.clone();
        h.merge(&self.hist_13);
        h
    }

    /// Signal bins (the coincidence window) and floor bins (the record ahead
    /// of the window, or behind it when nothing precedes it).
    pub fn windows(&self, det: &DetectorConfig) -> (Range<usize>, Range<usize>) {
        let h = &self.hist_12;
        let (lo, hi) = det.record();
        let start = det.window_start;
        let end = start + det.coincidence_window;
        let signal = h.bins_between(start, end);
        let before = h.bins_between(lo, start);
        let floor = if before.is_empty() { h.bins_between(end, hi) } else { before };
        (signal, floor)
    }

    pub fn report(&self, det: &DetectorConfig) -> Result<CountsReport> {
        let (signal, floor) = self.windows(det);
        CountsReport::new(&self.summary, &self.combined(), signal, floor)
    }
}

#[derive(Clone)]
struct Tally {
    n12: u64,
    n13: u64,
    n123: u64,
    hist_12: CoincidenceHistogram,
    hist_13: CoincidenceHistogram,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        self.n12 += other.n12;
        self.n13 += other.n13;
        self.n123 += other.n123;
        self.hist_12.merge(&other.hist_12);
        self.hist_13.merge(&other.hist_13);
        self
    }
}

/// Simulates `n_trials` heralds. Trials draw from independent random streams
/// keyed by `(seed, trial)`, so the output does not depend on scheduling.
pub fn simulate_counts(
    source: &SourceConfig,
    det: &DetectorConfig,
    n_trials: u64,
    seed: u64,
) -> Result<SimulationOutput> {
    if n_trials == 0 {
        return Err(Error::invalid("n_trials", "must be ≥ 1"));
    }
    let model = Model::new(source, det, seed)?;
    let empty = CoincidenceHistogram::new(model.record.0, model.record.1, det.bin_width)?;
    let zero = Tally {
        n12: 0,
        n13: 0,
        n123: 0,
        hist_12: empty.clone(),
        hist_13: empty,
    };
    let tally = (0..n_trials)
        .into_par_iter()
        .fold(
            || zero.clone(),
            |mut acc, trial| {
                let (mut hit2, mut hit3) = (false, false);
                model.trial(trial, |detector, t| {
                    let in_window = det.in_window(t);
                    if detector == 2 {
                        hit2 |= in_window;
                        acc.hist_12.add(t);
                    } else {
                        hit3 |= in_window;
                        acc.hist_13.add(t);
                    }
                });
                acc.n12 += hit2 as u64;
                acc.n13 += hit3 as u64;
                acc.n123 += (hit2 && hit3) as u64;
                acc
            },
        )
        .reduce(|| zero.clone(), Tally::merge);

    let mut summary = CountSummary::new(n_trials, tally.n12, tally.n13, tally.n123)?;
    summary.window = det.coincidence_window;
    summary.duration = if source.herald_rate > 0.0 {
        n_trials as f64 / source.herald_rate
    } else {
        0.0
    };
    Ok(SimulationOutput {
        summary,
        hist_12: tally.hist_12,
        hist_13: tally.hist_13,
    })
}

/// Every click of the first `n_trials` heralds, in trial order. Uses the same
/// random streams as [`simulate_counts`].
pub fn simulate_events(
    source: &SourceConfig,
    det: &DetectorConfig,
    n_trials: u64,
    seed: u64,
) -> Result<Vec<DetectionEvent>> {
    let model = Model::new(source, det, seed)?;
    let mut events = Vec::new();
    for trial in 0..n_trials {
        model.trial(trial, |detector, t| events.push(DetectionEvent { trial, detector, t }));
    }
    Ok(events)
}

pub fn events_to_csv(events: &[DetectionEvent]) -> String {
    let mut out = String::from("trial,detector,t_ns\n");
    for e in events {
        out.push_str(&format!("{},{},{}\n", e.trial, e.detector, crate::io::fmt_float(e.t * 1e9)));
    }
    out
}
