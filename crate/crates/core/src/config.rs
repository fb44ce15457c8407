//! JSON run configurations.
//!
//! Every physical quantity carries its unit in the field name: `_ns`, `_us`,
//! `_hz`, `_mhz` or `_gamma13` (multiples of the probe dipole relaxation
//! rate).

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::control::RampShape;
use crate::error::{Error, Result};
use crate::medium::MediumParams;
use crate::optimizer::{OptimizerOptions, StoragePolicy, DEFAULT_MAX_ITERS, DEFAULT_TOL};
use crate::photonstats::{DetectorConfig, LossBudget, SourceConfig};
use crate::propagation::{self, DEFAULT_NZ};
use crate::protocol::{SchedulePolicy, StorageTime, DEFAULT_RAMP};
use crate::waveform::{Precursor, TimeGrid, Waveform};

pub const SCHEMA: &str = "eitmem/1";

const NS: f64 = 1e-9;
const US: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Spectrum,
    Propagate,
    Store,
    Optimize,
    Counts,
    Budget,
    Lifetime,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Spectrum => "spectrum",
            Scenario::Propagate => "propagate",
            Scenario::Store => "store",
            Scenario::Optimize => "optimize",
            Scenario::Counts => "counts",
            Scenario::Budget => "budget",
            Scenario::Lifetime => "lifetime",
        }
    }
}

fn default_gamma13_mhz() -> f64 {
    3.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumConfig {
    pub od: f64,
    pub gamma12_gamma13: f64,
    pub omega_c_gamma13: f64,
    #[serde(default)]
    pub delta_p_gamma13: f64,
    /// `γ₁₃ / 2π` in MHz.
    #[serde(default = "default_gamma13_mhz")]
    pub gamma13_mhz: f64,
}

impl MediumConfig {
    pub fn params(&self) -> MediumParams {
        MediumParams {
            od: self.od,
            gamma13: 2.0 * std::f64::consts::PI * self.gamma13_mhz * 1e6,
            gamma12: self.gamma12_gamma13,
            omega_c: self.omega_c_gamma13,
            delta_p: self.delta_p_gamma13,
        }
    }

    fn check(&self, issues: &mut Issues) {
        let fields = [
            ("od", self.od),
            ("gamma12_gamma13", self.gamma12_gamma13),
            ("omega_c_gamma13", self.omega_c_gamma13),
            ("delta_p_gamma13", self.delta_p_gamma13),
            ("gamma13_mhz", self.gamma13_mhz),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                issues.push(format!("medium.{name}"), "must be finite");
            }
        }
        if self.od < 0.0 {
            issues.push("medium.od", "must be ≥ 0");
        }
        if self.gamma12_gamma13 < 0.0 {
            issues.push("medium.gamma12_gamma13", "must be ≥ 0");
        }
        if self.omega_c_gamma13 < 0.0 {
            issues.push("medium.omega_c_gamma13", "must be ≥ 0");
        }
        if !(self.gamma13_mhz > 0.0) {
            issues.push("medium.gamma13_mhz", "must be > 0");
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default)]
    pub t_start_ns: f64,
    pub t_end_ns: f64,
    /// Defaults to the finest of 0.002/γ₁₃ and a tenth of the ramp.
    #[serde(default)]
    pub dt_ns: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrecursorConfig {
    pub amplitude: f64,
    pub period_ns: f64,
    pub duration_ns: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WaveformConfig {
    Gaussian {
        center_ns: f64,
        fwhm_ns: f64,
    },
    Square {
        center_ns: f64,
        width_ns: f64,
    },
    Biphoton {
        start_ns: f64,
        rise_ns: f64,
        length_ns: f64,
        #[serde(default)]
        precursor: Option<PrecursorConfig>,
    },
    /// `t_ns,re,im` file; relative paths resolve against the config file.
    Csv {
        path: PathBuf,
    },
    /// Gaussian whose FWHM is the inverse EIT bandwidth, on its own grid.
    DefaultSeed,
}

/// Amplitude modulation applied to the input: zero inside
/// `[block_from_ns, block_to_ns)`, `amplitude` elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskConfig {
    #[serde(default)]
    pub block_from_ns: Option<f64>,
    #[serde(default)]
    pub block_to_ns: Option<f64>,
    #[serde(default = "one")]
    pub amplitude: f64,
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

fn default_ramp_ns() -> f64 {
    DEFAULT_RAMP / NS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    /// Switch-off time; omitted means the spin-wave peak.
    #[serde(default)]
    pub t_off_ns: Option<f64>,
    /// Fixed storage time; overrides `storage_pulse_lengths`.
    #[serde(default)]
    pub storage_ns: Option<f64>,
    #[serde(default = "two")]
    pub storage_pulse_lengths: f64,
    #[serde(default = "default_ramp_ns")]
    pub ramp_ns: f64,
    #[serde(default)]
    pub ramp_shape: RampShape,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig {
            t_off_ns: None,
            storage_ns: None,
            storage_pulse_lengths: 2.0,
            ramp_ns: default_ramp_ns(),
            ramp_shape: RampShape::default(),
        }
    }
}

impl ScheduleConfig {
    pub fn policy(&self) -> StoragePolicy {
        StoragePolicy {
            switch_off: match self.t_off_ns {
                Some(t) => SchedulePolicy::Explicit { t_off: t * NS },
                None => SchedulePolicy::Auto,
            },
            storage: match self.storage_ns {
                Some(t) => StorageTime::Fixed(t * NS),
                None => StorageTime::PulseLengths(self.storage_pulse_lengths),
            },
            ramp: self.ramp_ns * NS,
        }
    }

    fn check(&self, issues: &mut Issues) {
        if !(self.ramp_ns > 0.0 && self.ramp_ns.is_finite()) {
            issues.push("schedule.ramp_ns", "must be > 0");
        }
        if let Some(t) = self.storage_ns {
            if !(t > 0.0 && t.is_finite()) {
                issues.push("schedule.storage_ns", "must be > 0");
            } else if t < self.ramp_ns {
                issues.push("schedule.storage_ns", "must be at least one ramp time");
            }
        }
        if !(self.storage_pulse_lengths > 0.0 && self.storage_pulse_lengths.is_finite()) {
            issues.push("schedule.storage_pulse_lengths", "must be > 0");
        }
        if let Some(t) = self.t_off_ns {
            if !t.is_finite() {
                issues.push("schedule.t_off_ns", "must be finite");
            }
        }
    }
}

fn default_span() -> f64 {
    20.0
}

fn default_points() -> usize {
    801
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    /// Detuning scan runs over `±span_gamma13`.
    #[serde(default = "default_span")]
    pub span_gamma13: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    /// Measured `delta_gamma13,transmission,phase_rad` file to fit γ₁₂ to.
    #[serde(default)]
    pub fit_csv: Option<PathBuf>,
    /// Fit γ₁₂ back from the computed spectrum.
    #[serde(default)]
    pub fit_self: bool,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig {
            span_gamma13: default_span(),
            points: default_points(),
            fit_csv: None,
            fit_self: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagateConfig {
    /// Switch the coupling per the `schedule` section instead of holding it.
    #[serde(default)]
    pub switched: bool,
    /// Times at which the spin-wave profile is written out.
    #[serde(default)]
    pub snapshots_ns: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoreConfig {
    /// Extra spin-wave 1/e lifetime during storage.
    #[serde(default)]
    pub spin_lifetime_us: Option<f64>,
}

fn default_max_iters() -> usize {
    DEFAULT_MAX_ITERS
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeConfig {
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "yes")]
    pub freeze_schedule: bool,
    #[serde(default)]
    pub recenter: bool,
    /// Optical depths for an additional efficiency-bound scan.
    #[serde(default)]
    pub scan_od: Vec<f64>,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        OptimizeConfig {
            max_iters: DEFAULT_MAX_ITERS,
            tol: DEFAULT_TOL,
            freeze_schedule: true,
            recenter: false,
            scan_od: Vec::new(),
        }
    }
}

impl OptimizeConfig {
    pub fn options(&self, n_z: usize) -> OptimizerOptions {
        OptimizerOptions {
            max_iters: self.max_iters,
            tol: self.tol,
            n_z,
            freeze_schedule: self.freeze_schedule,
            recenter: self.recenter,
        }
    }
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountsConfig {
    pub trials: u64,
    pub pairing_efficiency: f64,
    #[serde(default)]
    pub herald_rate_hz: f64,
    #[serde(default)]
    pub noise_rate_hz: f64,
    #[serde(default)]
    pub dark_rate_hz: f64,
    #[serde(default = "one")]
    pub chain_efficiency: f64,
    #[serde(default = "half")]
    pub bs_split: f64,
    pub window_ns: f64,
    #[serde(default)]
    pub window_start_ns: f64,
    #[serde(default = "one")]
    pub bin_ns: f64,
    /// Recorded delay range; defaults to `[-2·window, 2·window]`.
    #[serde(default)]
    pub record_ns: Option<[f64; 2]>,
    /// Number of leading trials whose clicks are dumped to `events.csv`.
    #[serde(default)]
    pub dump_events: u64,
}

impl CountsConfig {
    pub fn detector(&self) -> DetectorConfig {
        DetectorConfig {
            chain_efficiency: self.chain_efficiency,
            bs_split: self.bs_split,
            coincidence_window: self.window_ns * NS,
            window_start: self.window_start_ns * NS,
            bin_width: self.bin_ns * NS,
            record: self.record_ns.map(|[a, b]| (a * NS, b * NS)),
        }
    }

    pub fn source(&self, waveform: Waveform) -> SourceConfig {
        SourceConfig {
            waveform,
            pairing_efficiency: self.pairing_efficiency,
            herald_rate: self.herald_rate_hz,
            noise_rate: self.noise_rate_hz,
            dark_rate: self.dark_rate_hz,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainElement {
    pub name: String,
    pub efficiency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub elements: Vec<ChainElement>,
    #[serde(default = "one")]
    pub duty_cycle: f64,
}

impl ChainConfig {
    pub fn budget(&self) -> Result<LossBudget> {
        LossBudget::new(
            self.elements.iter().map(|e| (e.name.clone(), e.efficiency)).collect(),
            self.duty_cycle,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    pub detection_chain: ChainConfig,
    /// Detected pair rates to convert into generation rates.
    #[serde(default)]
    pub detected_rates_hz: Vec<f64>,
    #[serde(default)]
    pub herald_arm: Option<ChainConfig>,
    /// Per-herald success probabilities to convert into pairing efficiencies.
    #[serde(default)]
    pub success_probabilities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LifetimeConfig {
    pub storage_times_ns: Vec<f64>,
    pub spin_lifetime_us: f64,
}

fn default_schema() -> String {
    SCHEMA.to_string()
}

fn default_nz() -> usize {
    DEFAULT_NZ
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_schema")]
    pub schema: String,
    pub scenario: Scenario,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub medium: MediumConfig,
    #[serde(default = "default_nz")]
    pub n_z: usize,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub waveform: Option<WaveformConfig>,
    #[serde(default)]
    pub mask: Option<MaskConfig>,
    #[serde(default)]
    pub schedule: Option<ScheduleConfig>,
    #[serde(default)]
    pub spectrum: Option<SpectrumConfig>,
    #[serde(default)]
    pub propagate: Option<PropagateConfig>,
    #[serde(default)]
    pub store: Option<StoreConfig>,
    #[serde(default)]
    pub optimize: Option<OptimizeConfig>,
    #[serde(default)]
    pub counts: Option<CountsConfig>,
    #[serde(default)]
    pub budget: Option<BudgetConfig>,
    #[serde(default)]
    pub lifetime: Option<LifetimeConfig>,
}

/// One validation failure, addressed by its field path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Issue {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.message.starts_with("must") || self.message.starts_with("is ") {
            write!(f, "{} {}", self.field, self.message)
        } else {
            write!(f, "{}: {}", self.field, self.message)
        }
    }
}

#[derive(Debug, Default)]
struct Issues(Vec<Issue>);

impl Issues {
    fn push(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.0.push(Issue {
            field: field.into(),
            message: message.into(),
        });
    }

    fn absorb(&mut self, field: &str, err: Error) {
        match err {
            Error::InvalidParameter { field: inner, message } => self.push(inner, message),
            other => self.push(field, other.to_string()),
        }
    }
}

/// Parses a configuration document; relative paths stay unresolved.
pub fn parse(text: &str) -> std::result::Result<RunConfig, Vec<Issue>> {
    serde_json::from_str(text).map_err(|e| {
        vec![Issue {
            field: "config".into(),
            message: format!("line {} column {}: {e}", e.line(), e.column()),
        }]
    })
}

pub fn load(path: &Path) -> std::result::Result<RunConfig, Vec<Issue>> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        vec![Issue {
            field: "config".into(),
            message: format!("cannot read {}: {e}", path.display()),
        }]
    })?;
    let mut config = parse(&text)?;
    if let Some(base) = path.parent() {
        config.resolve_paths(base);
    }
    Ok(config)
}

impl RunConfig {
    /// Makes relative input paths absolute against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(WaveformConfig::Csv { path }) = &mut self.waveform {
            fix(path);
        }
        if let Some(SpectrumConfig { fit_csv: Some(path), .. }) = &mut self.spectrum {
            fix(path);
        }
    }

    /// Fills every optional section the scenario uses with its defaults so
    /// the serialized form is complete.
    pub fn resolved(mut self) -> RunConfig {
        match self.scenario {
            Scenario::Spectrum => {
                self.spectrum.get_or_insert_with(SpectrumConfig::default);
            }
            Scenario::Propagate => {
                let p = self.propagate.get_or_insert_with(PropagateConfig::default);
                if p.switched {
                    self.schedule.get_or_insert_with(ScheduleConfig::default);
                }
            }
            Scenario::Store | Scenario::Lifetime => {
                self.schedule.get_or_insert_with(ScheduleConfig::default);
                if self.scenario == Scenario::Store {
                    self.store.get_or_insert_with(StoreConfig::default);
                }
            }
            Scenario::Optimize => {
                self.schedule.get_or_insert_with(ScheduleConfig::default);
                self.optimize.get_or_insert_with(OptimizeConfig::default);
            }
            Scenario::Counts | Scenario::Budget => {}
        }
        self
    }

    pub fn params(&self) -> MediumParams {
        self.medium.params()
    }

    pub fn ramp(&self) -> f64 {
        self.schedule.as_ref().map_or(DEFAULT_RAMP, |s| s.ramp_ns * NS)
    }

    fn needs_waveform(&self) -> bool {
        matches!(
            self.scenario,
            Scenario::Propagate | Scenario::Store | Scenario::Optimize | Scenario::Counts | Scenario::Lifetime
        )
    }

    fn uses_solver(&self) -> bool {
        matches!(
            self.scenario,
            Scenario::Propagate | Scenario::Store | Scenario::Optimize | Scenario::Lifetime
        )
    }

    /// Time grid for the input waveform, honoring the default step rule.
    pub fn time_grid(&self) -> Result<TimeGrid> {
        let grid = self
            .grid
            .as_ref()
            .ok_or_else(|| Error::invalid("grid", "is required for this waveform"))?;
        let dt = match grid.dt_ns {
            Some(dt) => dt * NS,
            None => propagation::default_dt(&self.params(), self.ramp()),
        };
        TimeGrid::new(grid.t_start_ns * NS, grid.t_end_ns * NS, dt).map_err(|e| match e {
            Error::InvalidParameter { message, .. } => Error::invalid("grid", message),
            other => other,
        })
    }

    /// Builds the input waveform, with the mask applied.
    pub fn input_waveform(&self) -> Result<Waveform> {
        let spec = self
            .waveform
            .as_ref()
            .ok_or_else(|| Error::invalid("waveform", format!("is required for scenario {}", self.scenario.name())))?;
        let wave = match spec {
            WaveformConfig::DefaultSeed => crate::optimizer::default_seed(&self.params(), self.ramp())?,
            WaveformConfig::Csv { path } => {
                let wave = Waveform::read_csv(path)?;
                match &self.grid {
                    Some(_) => wave.resampled(self.time_grid()?),
                    None => wave,
                }
            }
            WaveformConfig::Gaussian { center_ns, fwhm_ns } => {
                Waveform::gaussian(self.time_grid()?, center_ns * NS, fwhm_ns * NS)?
            }
            WaveformConfig::Square { center_ns, width_ns } => {
                Waveform::square(self.time_grid()?, center_ns * NS, width_ns * NS)?
            }
            WaveformConfig::Biphoton {
                start_ns,
                rise_ns,
                length_ns,
                precursor,
            } => Waveform::biphoton(
                self.time_grid()?,
                start_ns * NS,
                rise_ns * NS,
                length_ns * NS,
                precursor.as_ref().map(|p| Precursor {
                    amplitude: p.amplitude,
                    period: p.period_ns * NS,
                    duration: p.duration_ns * NS,
                }),
            )?,
        };
        match &self.mask {
            None => Ok(wave),
            Some(mask) => {
                let grid = *wave.grid();
                let from = mask.block_from_ns.map_or(f64::NEG_INFINITY, |t| t * NS);
                let to = match (mask.block_from_ns, mask.block_to_ns) {
                    (_, Some(t)) => t * NS,
                    (Some(_), None) => f64::INFINITY,
                    (None, None) => f64::NEG_INFINITY,
                };
                let values: Vec<f64> = grid
                    .times()
                    .map(|t| if t >= from && t < to { 0.0 } else { mask.amplitude })
                    .collect();
                crate::protocol::apply_mask(&wave, &values)
            }
        }
    }

    /// Checks the whole document without running anything and returns every
    /// violation found.
    pub fn validate(&self) -> Vec<Issue> {
        let mut issues = Issues::default();
        if self.schema != SCHEMA {
            issues.push("schema", format!("must be \"{SCHEMA}\" (found \"{}\")", self.schema));
        }
        self.medium.check(&mut issues);
        let medium_ok = issues.0.is_empty();
        if self.n_z < propagation::MIN_NZ {
            issues.push("n_z", format!("must be ≥ {}", propagation::MIN_NZ));
        }
        if let Some(s) = &self.schedule {
            s.check(&mut issues);
        }
        if let Some(m) = &self.mask {
            if !(0.0..=1.0).contains(&m.amplitude) {
                issues.push("mask.amplitude", "must lie in [0, 1]");
            }
        }
        if let Some(g) = &self.grid {
            if let Some(dt) = g.dt_ns {
                if !(dt > 0.0) {
                    issues.push("grid.dt_ns", "must be > 0");
                }
            }
            if !(g.t_end_ns > g.t_start_ns) {
                issues.push("grid.t_end_ns", "must exceed grid.t_start_ns");
            }
        }

        if self.needs_waveform() && medium_ok && issues.0.is_empty() {
            match self.input_waveform() {
                Ok(wave) => {
                    if !(wave.energy() > 0.0) {
                        issues.push("waveform", "has zero energy on the grid");
                    } else if self.uses_solver() {
                        self.check_resolution(&wave, &mut issues);
                    }
                }
                Err(e) => issues.absorb("waveform", e),
            }
        } else if self.needs_waveform() && self.waveform.is_none() {
            issues.push("waveform", format!("is required for scenario {}", self.scenario.name()));
        }

        match self.scenario {
            Scenario::Spectrum => {
                let s = self.spectrum.clone().unwrap_or_default();
                if !(s.span_gamma13 > 0.0 && s.span_gamma13.is_finite()) {
                    issues.push("spectrum.span_gamma13", "must be > 0");
                }
                if s.points < 5 {
                    issues.push("spectrum.points", "must be ≥ 5");
                }
                if let Some(path) = &s.fit_csv {
                    if !path.exists() {
                        issues.push("spectrum.fit_csv", format!("file {} does not exist", path.display()));
                    }
                }
            }
            Scenario::Propagate => {
                if self.propagate.as_ref().is_some_and(|p| p.switched) && self.schedule.is_none() {
                    issues.push("schedule", "is required when propagate.switched is set");
                }
            }
            Scenario::Store => {
                if let Some(StoreConfig {
                    spin_lifetime_us: Some(t),
                }) = &self.store
                {
                    if !(*t > 0.0) {
                        issues.push("store.spin_lifetime_us", "must be > 0");
                    }
                }
            }
            Scenario::Optimize => {
                let o = self.optimize.clone().unwrap_or_default();
                if o.max_iters == 0 {
                    issues.push("optimize.max_iters", "must be ≥ 1");
                }
                if !(o.tol > 0.0 && o.tol <= 1.0) {
                    issues.push("optimize.tol", "must lie in (0, 1]");
                }
                if o.scan_od.iter().any(|&od| !(od > 0.0)) {
                    issues.push("optimize.scan_od", "every optical depth must be > 0");
                }
                if o.scan_od.windows(2).any(|w| w[1] <= w[0]) {
                    issues.push("optimize.scan_od", "must be strictly ascending");
                }
                if self.medium.omega_c_gamma13 <= 0.0 {
                    issues.push("medium.omega_c_gamma13", "must be > 0 to store light");
                }
            }
            Scenario::Counts => match &self.counts {
                None => issues.push("counts", "is required for scenario counts"),
                Some(c) => {
                    if c.trials == 0 {
                        issues.push("counts.trials", "must be ≥ 1");
                    }
                    if let Ok(wave) = self.input_waveform() {
                        if let Err(e) = c.source(wave).validate() {
                            issues.absorb("counts", e);
                        }
                    }
                    if let Err(e) = c.detector().validate() {
                        issues.absorb("counts", e);
                    }
                }
            },
            Scenario::Budget => match &self.budget {
                None => issues.push("budget", "is required for scenario budget"),
                Some(b) => {
                    if let Err(e) = b.detection_chain.budget() {
                        issues.absorb("budget.detection_chain", e);
                    }
                    if b.detected_rates_hz.iter().any(|&r| !(r >= 0.0 && r.is_finite())) {
                        issues.push("budget.detected_rates_hz", "must be finite and ≥ 0");
                    }
                    match &b.herald_arm {
                        Some(arm) => {
                            if let Err(e) = arm.budget() {
                                issues.absorb("budget.herald_arm", e);
                            }
                        }
                        None if !b.success_probabilities.is_empty() => {
                            issues.push("budget.herald_arm", "is required to convert success probabilities")
                        }
                        None => {}
                    }
                    if b.success_probabilities.iter().any(|p| !(0.0..=1.0).contains(p)) {
                        issues.push("budget.success_probabilities", "must lie in [0, 1]");
                    }
                }
            },
            Scenario::Lifetime => match &self.lifetime {
                None => issues.push("lifetime", "is required for scenario lifetime"),
                Some(l) => {
                    if l.storage_times_ns.len() < 2 {
                        issues.push("lifetime.storage_times_ns", "needs at least two storage times");
                    }
                    if l.storage_times_ns.windows(2).any(|w| w[1] <= w[0]) {
                        issues.push("lifetime.storage_times_ns", "must be strictly ascending");
                    }
                    if l.storage_times_ns.iter().any(|&t| t < self.ramp() / NS) {
                        issues.push("lifetime.storage_times_ns", "must each be at least one ramp time");
                    }
                    if !(l.spin_lifetime_us > 0.0) {
                        issues.push("lifetime.spin_lifetime_us", "must be > 0");
                    }
                }
            },
        }
        issues.0
    }

    fn check_resolution(&self, wave: &Waveform, issues: &mut Issues) {
        let params = self.params();
        let switched = match self.scenario {
            Scenario::Propagate => self.propagate.as_ref().is_some_and(|p| p.switched),
            _ => true,
        };
        let ramps = if switched { vec![self.ramp(); 2] } else { Vec::new() };
        if let Err(e) =
            propagation::check_resolution_for(wave.grid(), &params, params.omega_c, &ramps, self.n_z)
        {
            issues.push("grid", e.to_string());
        }
    }

    pub fn spin_decay(&self) -> Option<f64> {
        match self.scenario {
            Scenario::Store => self
                .store
                .as_ref()
                .and_then(|s| s.spin_lifetime_us)
                .map(|t| 1.0 / (t * US)),
            Scenario::Lifetime => self.lifetime.as_ref().map(|l| 1.0 / (l.spin_lifetime_us * US)),
            _ => None,
        }
    }
}
