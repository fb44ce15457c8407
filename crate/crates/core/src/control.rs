//! Time-dependent coupling field with smooth switch events.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::waveform::TimeGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RampShape {
    /// Cubic smoothstep `3x² - 2x³`.
    #[default]
    Smoothstep,
    Linear,
}

impl RampShape {
    fn profile(self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match self {
            RampShape::Smoothstep => x * x * (3.0 - 2.0 * x),
            RampShape::Linear => x,
        }
    }
}

/// A transition of the coupling Rabi frequency to `target` (units of
/// `gamma13`). The ramp of duration `ramp` seconds is centered on `time`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchEvent {
    pub time: f64,
    pub target: f64,
    pub ramp: f64,
}

impl SwitchEvent {
    fn begins(&self) -> f64 {
        self.time - 0.5 * self.ramp
    }

    fn ends(&self) -> f64 {
        self.time + 0.5 * self.ramp
    }
}

/// Coupling Rabi frequency versus time, sampled on a grid and also
/// evaluable between samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlProfile {
    grid: TimeGrid,
    initial: f64,
    events: Vec<SwitchEvent>,
    shape: RampShape,
    omega_c: Vec<f64>,
}

impl ControlProfile {
    pub fn constant(grid: TimeGrid, omega_c: f64) -> Result<Self> {
        ControlProfile::with_events(grid, omega_c, Vec::new(), RampShape::default())
    }

    pub fn with_events(
        grid: TimeGrid,
        initial: f64,
        events: Vec<SwitchEvent>,
        shape: RampShape,
    ) -> Result<Self> {
        if !(initial.is_finite() && initial >= 0.0) {
            return Err(Error::invalid("control.omega_c", "must be finite and ≥ 0"));
        }
        for (k, ev) in events.iter().enumerate() {
            if !(ev.ramp.is_finite() && ev.ramp > 0.0) {
                return Err(Error::invalid(format!("control.events[{k}].ramp"), "must be > 0"));
            }
            if !(ev.target.is_finite() && ev.target >= 0.0) {
                return Err(Error::invalid(format!("control.events[{k}].target"), "must be ≥ 0"));
            }
            if !ev.time.is_finite() {
                return Err(Error::invalid(format!("control.events[{k}].time"), "must be finite"));
            }
        }
        for (k, pair) in events.windows(2).enumerate() {
            if pair[1].begins() < pair[0].ends() {
                return Err(Error::invalid(
                    format!("control.events[{}]", k + 1),
                    "events must be time-ordered with non-overlapping ramps",
                ));
            }
        }
        let mut profile = ControlProfile {
            grid,
            initial,
            events,
            shape,
            omega_c: Vec::new(),
        };
        profile.omega_c = grid.times().map(|t| profile.level_at(t)).collect();
        Ok(profile)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.omega_c
    }

    pub fn events(&self) -> &[SwitchEvent] {
        &self.events
    }

    pub fn shape(&self) -> RampShape {
        self.shape
    }

    pub fn is_constant(&self) -> bool {
        self.events.iter().all(|e| e.target == self.initial)
    }

    pub fn max_level(&self) -> f64 {
        self.events.iter().map(|e| e.target).fold(self.initial, f64::max)
    }

    /// Rabi frequency at time `t` (seconds).
    pub fn level_at(&self, t: f64) -> f64 {
        let mut level = self.initial;
        for ev in &self.events {
            if t <= ev.begins() {
                break;
            }
            let x = (t - ev.begins()) / ev.ramp;
            level += (ev.target - level) * self.shape.profile(x);
            if t < ev.ends() {
                break;
            }
        }
        level
    }
}
