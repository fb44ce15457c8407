//! Scenario execution: turns a validated [`RunConfig`] into artifacts on disk.
//!
//! Every run writes `manifest.json` with the resolved configuration, the
//! tool version, the seed and the list of artifacts. Nothing time-dependent
//! is recorded, so rerunning a configuration reproduces its JSON files byte
//! for byte.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use crate::config::{Issue, RunConfig, Scenario};
use crate::control::ControlProfile;
use crate::error::{Error, Result};
use crate::io::{fmt_float, write_text};
use crate::medium;
use crate::optimizer;
use crate::photonstats::{self, simulate_counts, simulate_events};
use crate::propagation::{self, PropagationOptions};
use crate::protocol::{self, Alignment};
use crate::waveform::Waveform;
use crate::VERSION;

const NS: f64 = 1e-9;

/// Why a run did not complete.
#[derive(Debug)]
pub enum RunError {
    Invalid(Vec<Issue>),
    Failed(Error),
}

impl RunError {
    /// Process exit code: 2 for rejected input, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Invalid(_) => 2,
            RunError::Failed(e) if e.is_validation() => 2,
            RunError::Failed(_) => 3,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Invalid(issues) => {
                for (k, issue) in issues.iter().enumerate() {
                    if k > 0 {
                        writeln!(f)?;
                    }
                    write!(f, "{issue}")?;
                }
                Ok(())
            }
            RunError::Failed(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Failed(e)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub scenario: &'static str,
    pub seed: u64,
    pub config: RunConfig,
    pub artifacts: Vec<String>,
}

struct Artifacts {
    dir: PathBuf,
    names: Vec<String>,
}

impl Artifacts {
    fn text(&mut self, name: &str, contents: &str) -> Result<()> {
        write_text(&self.dir.join(name), contents)?;
        self.names.push(name.to_string());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.text(name, &text)
    }

    fn waveform(&mut self, name: &str, wave: &Waveform) -> Result<()> {
        self.text(name, &wave.to_csv())
    }
}

/// Validates `config`, runs its scenario and writes artifacts into `out_dir`.
pub fn run(config: &RunConfig, out_dir: &Path) -> std::result::Result<Manifest, RunError> {
    let config = config.clone().resolved();
    let issues = config.validate();
    if !issues.is_empty() {
        return Err(RunError::Invalid(issues));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut out = Artifacts {
        dir: out_dir.to_path_buf(),
        names: Vec::new(),
    };
    match config.scenario {
        Scenario::Spectrum => spectrum(&config, &mut out)?,
        Scenario::Propagate => propagate(&config, &mut out)?,
        Scenario::Store => store(&config, &mut out)?,
        Scenario::Optimize => optimize(&config, &mut out)?,
        Scenario::Counts => counts(&config, &mut out)?,
        Scenario::Budget => budget(&config, &mut out)?,
        Scenario::Lifetime => lifetime(&config, &mut out)?,
    }
    let mut artifacts = out.names.clone();
    artifacts.push("manifest.json".into());
    let manifest = Manifest {
        tool: "eitmem",
        version: VERSION,
        scenario: config.scenario.name(),
        seed: config.seed,
        config,
        artifacts,
    };
    out.json("manifest.json", &manifest)?;
    Ok(manifest)
}

fn spectrum(config: &RunConfig, out: &mut Artifacts) -> Result<()> {
    let params = config.params();
    let settings = config.spectrum.clone().unwrap_or_default();
    let deltas = medium::detuning_grid(settings.span_gamma13, settings.points);
    let spectrum = medium::transmission_spectrum(&params, &deltas)?;
    out.text("spectrum.csv", &spectrum_csv(&spectrum))?;

    let carrier = medium::transmission_spectrum(&params, &[params.delta_p])?.transmission[0];
    let group_delay_ns = medium::group_delay(&params).ok().map(|t| t / NS);
    let bandwidth_mhz = medium::eit_bandwidth_hz(&params).ok().map(|b| b / 1e6);
    let fit = match (&settings.fit_csv, settings.fit_self) {
        (Some(path), _) => Some(medium::fit_dephasing(&medium::Spectrum::read_csv(path)?, &params)?),
        (None, true) => Some(medium::fit_dephasing(&spectrum, &params)?),
        (None, false) => None,
    };
    out.json(
        "summary.json",
        &json!({
            "transmission_at_carrier": carrier,
            "group_delay_ns": group_delay_ns,
            "eit_bandwidth_mhz": bandwidth_mhz,
            "fit": fit.map(|f| json!({"gamma12_gamma13": f.gamma12, "residual": f.residual})),
        }),
    )
}

fn spectrum_csv(s: &medium::Spectrum) -> String {
    let mut text = String::from("delta_gamma13,transmission,phase_rad\n");
    for k in 0..s.len() {
        text.push_str(&format!(
            "{},{},{}\n",
            fmt_float(s.deltas[k]),
            fmt_float(s.transmission[k]),
            fmt_float(s.phase[k])
        ));
    }
    text
}

fn propagate(config: &RunConfig, out: &mut Artifacts) -> Result<()> {
    let params = config.params();
    let psi = config.input_waveform()?;
    let switched = config.propagate.as_ref().is_some_and(|p| p.switched);
    let control = if switched {
        let policy = config.schedule.clone().unwrap_or_default().policy();
        let schedule = policy.schedule_for(&psi, &params, config.n_z)?;
        schedule.control(*psi.grid(), params.omega_c)?
    } else {
        ControlProfile::constant(*psi.grid(), params.omega_c)?
    };
    let snapshots: Vec<f64> = config
        .propagate
        .as_ref()
        .map(|p| p.snapshots_ns.iter().map(|t| t * NS).collect())
        .unwrap_or_default();
    let options = PropagationOptions {
        snapshot_times: snapshots,
    };
    let (output, state) = propagation::propagate_with(&psi, &control, &params, config.n_z, &options)?;
    out.waveform("input.csv", &psi)?;
    out.waveform("output.csv", &output)?;
    out.text("energy.csv", &energy_csv(&state, psi.energy()))?;
    for (k, (_, spin)) in state.snapshots().iter().enumerate() {
        let name = format!("spin_{k:02}.csv");
        state.write_spin_csv(spin, &out.dir.join(&name))?;
        out.names.push(name);
    }
    let e_in = psi.energy();
    out.json(
        "summary.json",
        &json!({
            "input_energy": e_in,
            "output_energy": output.energy(),
            "transmission": output.energy() / e_in,
            "input_peak_ns": psi.peak_time().map(|t| t / NS),
            "output_peak_ns": output.peak_time().map(|t| t / NS),
            "peak_delay_ns": psi.peak_time().zip(output.peak_time()).map(|(a, b)| (b - a) / NS),
            "group_delay_ns": medium::group_delay(&params).ok().map(|t| t / NS),
            "snapshot_times_ns": state.snapshots().iter().map(|(t, _)| t / NS).collect::<Vec<_>>(),
        }),
    )
}

fn energy_csv(state: &propagation::MediumState, input_energy: f64) -> String {
    let mut text = String::from("t_ns,spin_energy,polarization_energy,dissipated\n");
    let grid = state.grid();
    for k in 0..grid.len() {
        text.push_str(&format!(
            "{},{},{},{}\n",
            fmt_float(grid.time(k) / NS),
            fmt_float(state.spin_energy_series()[k] / input_energy),
            fmt_float(state.polarization_energy_series()[k] / input_energy),
            fmt_float(state.dissipated_series()[k] / input_energy)
        ));
    }
    text
}

fn store(config: &RunConfig, out: &mut Artifacts) -> Result<()> {
    let params = config.params();
    let psi = config.input_waveform()?;
    let schedule_config = config.schedule.clone().unwrap_or_default();
    let policy = schedule_config.policy();
    let schedule = policy
        .schedule_for(&psi, &params, config.n_z)?
        .with_shape(schedule_config.ramp_shape);
    let result = protocol::store_retrieve(&psi, &schedule, &params, config.spin_decay(), config.n_z)?;
    let optimized = if result.psi_out.energy() > 0.0 {
        Some(protocol::likeness(
            &psi,
            &result.psi_out,
            Alignment::Optimize {
                center: schedule.pivot(),
                span: psi.fwhm().unwrap_or(schedule.storage_time()),
            },
        )?)
    } else {
        None
    };
    out.waveform("psi_in.csv", &psi)?;
    out.waveform("psi_out.csv", &result.psi_out)?;
    out.waveform("transmitted.csv", &result.transmitted)?;
    out.json("result.json", &result.report())?;
    out.json(
        "schedule.json",
        &json!({
            "t_off_ns": schedule.t_off / NS,
            "t_on_ns": schedule.t_on / NS,
            "ramp_ns": schedule.ramp / NS,
            "pivot_ns": schedule.pivot() / NS,
            "likeness_optimized_pivot": optimized,
            "input_fwhm_ns": psi.fwhm().map(|w| w / NS),
        }),
    )
}

fn optimize(config: &RunConfig, out: &mut Artifacts) -> Result<()> {
    let params = config.params();
    let seed = config.input_waveform()?;
    let settings = config.optimize.clone().unwrap_or_default();
    let policy = config.schedule.clone().unwrap_or_default().policy();
    let options = settings.options(config.n_z);
    let trace = optimizer::iterate_optimal(&seed, &params, &policy, &options)?;
    out.text("trace.json", &(trace.to_json()? + "\n"))?;
    for (k, it) in trace.iterations.iter().enumerate() {
        out.waveform(&format!("iter_{k:02}_in.csv"), &it.psi_in)?;
        out.waveform(&format!("iter_{k:02}_out.csv"), &it.psi_out)?;
    }
    let last = trace.last();
    out.json(
        "summary.json",
        &json!({
            "converged": trace.converged,
            "iterations": trace.iterations.len(),
            "final_efficiency": last.efficiency,
            "seed_efficiency": trace.iterations[0].efficiency,
            "likeness_in_out": last.likeness_in_out,
            "optimal_fwhm_ns": last.psi_in.fwhm().map(|w| w / NS),
            "storage_time_ns": last.schedule.storage_time() / NS,
        }),
    )?;
    if !settings.scan_od.is_empty() {
        let scan = optimizer::efficiency_bound_scan(&params, &settings.scan_od, &policy, &options)?;
        let mut text = String::from("od,efficiency\n");
        for (od, eta) in scan {
            text.push_str(&format!("{},{}\n", fmt_float(od), fmt_float(eta)));
        }
        out.text("scan.csv", &text)?;
    }
    Ok(())
}

fn counts(config: &RunConfig, out: &mut Artifacts) -> Result<()> {
    let settings = config
        .counts
        .as_ref()
        .ok_or_else(|| Error::invalid("counts", "is required for scenario counts"))?;
    let source = settings.source(config.input_waveform()?);
    let det = settings.detector();
    let sim = simulate_counts(&source, &det, settings.trials, config.seed)?;
    out.text("hist_12.csv", &sim.hist_12.to_csv())?;
    out.text("hist_13.csv", &sim.hist_13.to_csv())?;
    out.json("summary.json", &sim.report(&det)?)?;
    out.json("counts.json", &sim.summary)?;
    if settings.dump_events > 0 {
        let events = simulate_events(&source, &det, settings.dump_events.min(settings.trials), config.seed)?;
        out.text("events.csv", &photonstats::events_to_csv(&events))?;
    }
    Ok(())
}

fn budget(config: &RunConfig, out: &mut Artifacts) -> Result<()> {
    let settings = config
        .budget
        .as_ref()
        .ok_or_else(|| Error::invalid("budget", "is required for scenario budget"))?;
    let chain = settings.detection_chain.budget()?;
    let generation = settings
        .detected_rates_hz
        .iter()
        .map(|&rate| {
            photonstats::loss_budget(&chain, rate)
                .map(|g| json!({"detected_rate_hz": rate, "generation_rate_hz": g.generation_rate}))
        })
        .collect::<Result<Vec<_>>>()?;
    let (arm_product, pairing) = match &settings.herald_arm {
        Some(arm) => {
            let arm = arm.budget()?;
            let pairing = settings
                .success_probabilities
                .iter()
                .map(|&p| {
                    photonstats::pairing_efficiency_from_success(p, &arm)
                        .map(|eta| json!({"success_probability": p, "pairing_efficiency": eta}))
                })
                .collect::<Result<Vec<_>>>()?;
            (Some(arm.product()), pairing)
        }
        None => (None, Vec::new()),
    };
    out.json(
        "budget.json",
        &json!({
            "chain_product": chain.product(),
            "duty_cycle": chain.duty_cycle,
            "generation": generation,
            "herald_arm_product": arm_product,
            "pairing": pairing,
        }),
    )
}

fn lifetime(config: &RunConfig, out: &mut Artifacts) -> Result<()> {
    let settings = config
        .lifetime
        .as_ref()
        .ok_or_else(|| Error::invalid("lifetime", "is required for scenario lifetime"))?;
    let params = config.params();
    let psi = config.input_waveform()?;
    let times: Vec<f64> = settings.storage_times_ns.iter().map(|t| t * NS).collect();
    let decay = config.spin_decay().unwrap_or(0.0);
    let scan = protocol::lifetime_scan(&psi, &params, &times, decay, config.ramp(), config.n_z)?;
    let mut text = String::from("storage_ns,efficiency\n");
    for (t, eta) in &scan {
        text.push_str(&format!("{},{}\n", fmt_float(t / NS), fmt_float(*eta)));
    }
    out.text("lifetime.csv", &text)?;
    let fit = protocol::fit_lifetime(&scan);
    out.json(
        "fit.json",
        &match fit {
            Ok((eta0, tau)) => json!({"efficiency_at_zero": eta0, "lifetime_us": tau / 1e-6}),
            Err(e) => json!({"error": e.to_string()}),
        },
    )
}
