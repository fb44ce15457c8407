//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::path::Path;
use std::time::{Duration, Instant};

use eitmem::config::{RunConfig, Scenario, WaveformConfig};
use eitmem::medium::{detuning_grid, fit_dephasing, group_delay, transmission_spectrum};
use eitmem::optimizer::{self, overlap, OptimizationTrace, OptimizerOptions, StoragePolicy};
use eitmem::photonstats::{
    cauchy_schwarz, conditional_g2, gc2_from_gbar, loss_budget, pairing_efficiency_from_success, simulate_counts,
    DetectorConfig, LossBudget, SourceConfig,
};
use eitmem::propagation::{self, propagate, spectral_oracle, DEFAULT_NZ};
use eitmem::protocol::{self, SchedulePolicy, StorageTime, DEFAULT_RAMP};
use eitmem::{presets, runner, ControlProfile, MediumParams, TimeGrid, Waveform};

const TWO_LEVEL_TOL: f64 = 0.01;
const TWO_LEVEL_BUDGET: Duration = Duration::from_secs(10);
const ORACLE_L2_TOL: f64 = 0.01;
const ORACLE_BUDGET: Duration = Duration::from_secs(30);
const DELAY_TOL: f64 = 0.05;
const GRID_TOL: f64 = 0.005;
const MONOTONE_SLACK: f64 = 1e-6;
const CONVERGENCE_TOL: f64 = 0.999;
const MAX_ITERS: usize = 10;
const SYMMETRY_MIN: f64 = 0.98;
const SEED_LIKENESS_MIN: f64 = 0.99;
const SEED_GAP_MAX: f64 = 0.005;
const GC2_SIGMAS: f64 = 3.0;
const MC_TRIALS: u64 = 1_000_000;
const MC_BUDGET: Duration = Duration::from_secs(120);
const RATE_TOL: f64 = 0.03;
const PAIRING_TOL: f64 = 0.01;
const DEPHASING_TOL: f64 = 0.05;
const LIFETIME_TOL: f64 = 0.05;

const NS: f64 = 1e-9;

fn preset_a() -> MediumParams {
    MediumParams::new(60.0, 0.03, 11.0)
}

fn preset_b() -> MediumParams {
    MediumParams::new(60.0, 0.01, 6.88)
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn l2_relative(a: &Waveform, b: &Waveform) -> f64 {
    let num: f64 = a.samples().iter().zip(b.samples()).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.samples().iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

fn constant_propagation(psi: &Waveform, params: &MediumParams, n_z: usize) -> Waveform {
    let control = ControlProfile::constant(*psi.grid(), params.omega_c).unwrap();
    propagate(psi, &control, params, n_z).unwrap().0
}

fn two_level_limit() -> Outcome {
    let start = Instant::now();
    let params = MediumParams::new(2.0, 0.0, 0.0);
    let grid = TimeGrid::new(0.0, 6e-6, propagation::default_dt(&params, 0.0)).unwrap();
    let psi = Waveform::gaussian(grid, 3e-6, 2e-6).unwrap();
    let out = constant_propagation(&psi, &params, DEFAULT_NZ);
    let t = out.energy() / psi.energy();
    let expected = (-2.0f64).exp();
    let rel = (t / expected - 1.0).abs();
    let elapsed = start.elapsed();
    outcome(
        rel < TWO_LEVEL_TOL && elapsed < TWO_LEVEL_BUDGET,
        format!("T = {t:.5} vs e^-2 = {expected:.5} (rel {rel:.2e}, tol {TWO_LEVEL_TOL}); {elapsed:.2?}"),
    )
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let params = MediumParams::new(60.0, 0.0, 11.0);
    let grid = TimeGrid::new(0.0, 800e-9, propagation::default_dt(&params, 0.0)).unwrap();
    let psi = Waveform::gaussian(grid, 200e-9, 50e-9).unwrap();
    let solver = constant_propagation(&psi, &params, DEFAULT_NZ);
    let oracle = spectral_oracle(&psi, &params).unwrap();
    let err = l2_relative(&solver, &oracle);
    let elapsed = start.elapsed();
    outcome(
        err < ORACLE_L2_TOL && elapsed < ORACLE_BUDGET,
        format!("relative L2 = {err:.2e} (tol {ORACLE_L2_TOL}); {elapsed:.2?}"),
    )
}

fn peak_delay(params: &MediumParams, fwhm: f64) -> f64 {
    let center = 4.0 * fwhm;
    let grid = TimeGrid::new(0.0, 8.0 * fwhm + 400e-9, propagation::default_dt(params, 0.0)).unwrap();
    let psi = Waveform::gaussian(grid, center, fwhm).unwrap();
    let out = constant_propagation(&psi, params, DEFAULT_NZ);
    out.peak_time().unwrap() - psi.peak_time().unwrap()
}

fn group_delay_match() -> Outcome {
    let params = MediumParams::new(60.0, 0.0, 11.0);
    let predicted = group_delay(&params).unwrap();
    let narrow = peak_delay(&params, 200e-9);
    let broad = peak_delay(&params, 50e-9);
    let rel = (narrow / predicted - 1.0).abs();
    outcome(
        rel < DELAY_TOL,
        format!(
            "200 ns pulse delayed {:.2} ns vs {:.2} ns (rel {rel:.2e}, tol {DELAY_TOL}); 50 ns pulse: {:.2} ns",
            narrow / NS,
            predicted / NS,
            broad / NS
        ),
    )
}

fn preset_efficiency(name: &str, refine: bool) -> f64 {
    let mut cfg: RunConfig = presets::load(name).unwrap().resolved();
    let n_z = if refine { 2 * cfg.n_z } else { cfg.n_z };
    let params = cfg.params();
    if refine && cfg.grid.is_some() {
        let dt = cfg.time_grid().unwrap().dt();
        if let Some(grid) = cfg.grid.as_mut() {
            grid.dt_ns = Some(0.5 * dt / NS);
        }
    }
    let mut psi = cfg.input_waveform().unwrap();
    if refine && matches!(cfg.waveform, Some(WaveformConfig::DefaultSeed)) {
        psi = psi.resampled(psi.grid().refined());
    }
    let policy = cfg.schedule.clone().unwrap_or_default().policy();
    match cfg.scenario {
        Scenario::Store => {
            let schedule = policy.schedule_for(&psi, &params, n_z).unwrap();
            protocol::store_retrieve(&psi, &schedule, &params, cfg.spin_decay(), n_z)
                .unwrap()
                .efficiency
        }
        Scenario::Optimize => {
            let options = cfg.optimize.clone().unwrap().options(n_z);
            optimizer::iterate_optimal(&psi, &params, &policy, &options)
                .unwrap()
                .final_efficiency()
        }
        Scenario::Lifetime => {
            let first = cfg.lifetime.as_ref().unwrap().storage_times_ns[0] * NS;
            let scan = protocol::lifetime_scan(
                &psi,
                &params,
                &[first],
                cfg.spin_decay().unwrap(),
                cfg.ramp(),
                n_z,
            )
            .unwrap();
            scan[0].1
        }
        other => panic!("{name}: scenario {other:?} has no efficiency"),
    }
}

fn grid_convergence() -> Outcome {
    let names = [
        "short-photon-storage",
        "long-photon-storage",
        "optimal-storage-a",
        "optimal-storage-b",
        "memory-lifetime",
    ];
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for name in names {
        let coarse = preset_efficiency(name, false);
        let fine = preset_efficiency(name, true);
        let rel = (fine / coarse - 1.0).abs();
        worst = worst.max(rel);
        parts.push(format!("{name} {coarse:.5}->{fine:.5}"));
    }
    outcome(
        worst < GRID_TOL,
        format!("worst relative change {worst:.2e} (tol {GRID_TOL}); {}", parts.join(", ")),
    )
}

fn optimize(params: &MediumParams) -> OptimizationTrace {
    let seed = optimizer::default_seed(params, DEFAULT_RAMP).unwrap();
    let options = OptimizerOptions {
        max_iters: MAX_ITERS,
        tol: CONVERGENCE_TOL,
        ..Default::default()
    };
    optimizer::iterate_optimal(&seed, params, &StoragePolicy::default(), &options).unwrap()
}

fn monotone_convergence(a: &OptimizationTrace, b: &OptimizationTrace) -> Outcome {
    let ok = |t: &OptimizationTrace| t.converged && t.iterations.len() <= MAX_ITERS && t.worst_descent() <= MONOTONE_SLACK;
    let describe = |name: &str, t: &OptimizationTrace| {
        format!(
            "{name}: {} iterations, converged {}, worst descent {:.1e}, efficiencies {}",
            t.iterations.len(),
            t.converged,
            t.worst_descent(),
            t.efficiencies().iter().map(|e| format!("{e:.5}")).collect::<Vec<_>>().join(" ")
        )
    };
    outcome(
        ok(a) && ok(b),
        format!("{}; {} (three iterations reported experimentally)", describe("A", a), describe("B", b)),
    )
}

fn time_reversal_symmetry(a: &OptimizationTrace, b: &OptimizationTrace) -> Outcome {
    let (la, lb) = (a.last(), b.last());
    let pass = la.likeness_fixed >= SYMMETRY_MIN && lb.likeness_fixed >= SYMMETRY_MIN;
    outcome(
        pass,
        format!(
            "A L = {:.4} (optimized pivot {:.4}, measured 0.93); B L = {:.4} (optimized pivot {:.4}, measured 0.96); min {SYMMETRY_MIN}",
            la.likeness_fixed, la.likeness_in_out, lb.likeness_fixed, lb.likeness_in_out
        ),
    )
}

fn efficiency_ordering(a: &OptimizationTrace, b: &OptimizationTrace) -> Outcome {
    let eta_a = a.final_efficiency();
    let eta_b = b.final_efficiency();
    let unshaped = preset_efficiency("long-photon-storage", false);
    let gauss = {
        let params = preset_a();
        let grid = TimeGrid::new(0.0, 1.6e-6, propagation::default_dt(&params, DEFAULT_RAMP)).unwrap();
        let psi = Waveform::gaussian(grid, 500e-9, 200e-9).unwrap();
        let schedule = protocol::make_schedule(&psi, &params, SchedulePolicy::Auto, 100e-9, DEFAULT_RAMP, DEFAULT_NZ)
            .unwrap();
        protocol::store_retrieve(&psi, &schedule, &params, None, DEFAULT_NZ)
            .unwrap()
            .efficiency
    };
    let pass = eta_b > eta_a && eta_a > unshaped && eta_a > gauss;
    outcome(
        pass,
        format!(
            "B {:.1}% (measured 49%, {:+.1} pts) > A {:.1}% (measured 36%, {:+.1} pts) > unshaped 200 ns {:.1}% (measured 20%, {:+.1} pts; Gaussian 200 ns {:.1}%)",
            100.0 * eta_b,
            100.0 * eta_b - 49.0,
            100.0 * eta_a,
            100.0 * eta_a - 36.0,
            100.0 * unshaped,
            100.0 * unshaped - 20.0,
            100.0 * gauss
        ),
    )
}

fn seed_independence() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, params) in [("A", preset_a()), ("B", preset_b())] {
        let gauss = optimizer::default_seed(&params, DEFAULT_RAMP).unwrap();
        let fwhm = gauss.fwhm().unwrap();
        let square = Waveform::square(*gauss.grid(), gauss.centroid().unwrap(), fwhm).unwrap();
        let shared = StoragePolicy::default().schedule_for(&gauss, &params, DEFAULT_NZ).unwrap();
        let policy = StoragePolicy {
            switch_off: SchedulePolicy::Explicit { t_off: shared.t_off },
            storage: StorageTime::Fixed(shared.storage_time()),
            ramp: shared.ramp,
        };
        let options = OptimizerOptions {
            max_iters: 2 * MAX_ITERS,
            tol: CONVERGENCE_TOL,
            ..Default::default()
        };
        let g = optimizer::iterate_optimal(&gauss, &params, &policy, &options).unwrap();
        let s = optimizer::iterate_optimal(&square, &params, &policy, &options).unwrap();
        let mutual = overlap(&g.last().psi_in, &s.last().psi_in).unwrap();
        let gap = (g.final_efficiency() - s.final_efficiency()).abs();
        pass &= mutual >= SEED_LIKENESS_MIN && gap < SEED_GAP_MAX && g.converged && s.converged;
        parts.push(format!(
            "{name}: mutual {mutual:.5}, gap {gap:.1e} ({} / {} iterations)",
            g.iterations.len(),
            s.iterations.len()
        ));
    }
    outcome(
        pass,
        format!("{} (min {SEED_LIKENESS_MIN}, max gap {SEED_GAP_MAX})", parts.join("; ")),
    )
}

fn cauchy_schwarz_arithmetic() -> Outcome {
    let short = cauchy_schwarz(150.0, 2.0, 2.0).unwrap();
    let long = cauchy_schwarz(95.0, 2.0, 2.0).unwrap();
    outcome(
        short == 5625.0 && long == 2256.25,
        format!("(150, 2, 2) -> {short}; (95, 2, 2) -> {long}"),
    )
}

fn gbar_consistency() -> Outcome {
    let start = Instant::now();
    let grid = TimeGrid::new(0.0, 100e-9, 0.5e-9).unwrap();
    let waveform = Waveform::gaussian(grid, 50e-9, 20e-9).unwrap();
    let window = 100e-9;
    let pairing = 0.8;
    let chain = 0.05;
    let signal = pairing * chain;
    let det = DetectorConfig {
        chain_efficiency: chain,
        bs_split: 0.5,
        coincidence_window: window,
        window_start: 0.0,
        bin_width: 1e-9,
        record: None,
    };
    let closed_form = gc2_from_gbar(23.0).unwrap().value;
    let mut pass = (closed_form - 47.0 / 576.0).abs() < 1e-15;
    let mut parts = vec![format!("gc2(23) = {closed_form:.6}")];
    for (k, target) in [2.0, 5.0, 10.0, 23.0].into_iter().enumerate() {
        let source = SourceConfig {
            waveform: waveform.clone(),
            pairing_efficiency: pairing,
            herald_rate: 0.0,
            noise_rate: signal / (target * window),
            dark_rate: 0.0,
        };
        let sim = simulate_counts(&source, &det, MC_TRIALS, 100 + k as u64).unwrap();
        let report = sim.report(&det).unwrap();
        let gbar = report.gbar.unwrap();
        let measured = conditional_g2(&sim.summary).unwrap();
        let predicted = gc2_from_gbar(gbar - 1.0).unwrap().value;
        let raw = gc2_from_gbar(gbar).unwrap().value;
        let sigmas = (measured.value - predicted).abs() / measured.error;
        pass &= sigmas <= GC2_SIGMAS;
        parts.push(format!(
            "target {target}: measured ratio {gbar:.2}, MC {:.4}±{:.4}, predicted {predicted:.4} ({sigmas:.1}σ), raw-ratio formula {raw:.4}",
            measured.value, measured.error
        ));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < MC_BUDGET;
    outcome(pass, format!("{}; {elapsed:.2?}", parts.join("; ")))
}

fn single_photon_limit() -> Outcome {
    let grid = TimeGrid::new(0.0, 100e-9, 0.5e-9).unwrap();
    let source = SourceConfig {
        waveform: Waveform::gaussian(grid, 50e-9, 20e-9).unwrap(),
        pairing_efficiency: 0.7,
        herald_rate: 0.0,
        noise_rate: 0.0,
        dark_rate: 0.0,
    };
    let det = DetectorConfig {
        chain_efficiency: 0.5,
        bs_split: 0.45,
        coincidence_window: 100e-9,
        window_start: 0.0,
        bin_width: 1e-9,
        record: None,
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for trials in [1_000u64, 100_000, MC_TRIALS] {
        let sim = simulate_counts(&source, &det, trials, trials).unwrap();
        let g = conditional_g2(&sim.summary).unwrap();
        pass &= sim.summary.n123 == 0 && g.value == 0.0;
        parts.push(format!("{trials} trials: N123 = {}, gc2 = {}", sim.summary.n123, g.value));
    }
    outcome(pass, parts.join("; "))
}

fn loss_budget_check() -> Outcome {
    let chain = LossBudget::two_cloud_detection_chain();
    let arm = LossBudget::two_cloud_antistokes_arm();
    let short = loss_budget(&chain, 8.0).unwrap().generation_rate;
    let long = loss_budget(&chain, 47.0).unwrap().generation_rate;
    let raw = loss_budget(&chain, 7400.0 / 900.0).unwrap().generation_rate;
    let p_short = pairing_efficiency_from_success(0.028, &arm).unwrap();
    let p_long = pairing_efficiency_from_success(0.041, &arm).unwrap();
    let pass = (short / 4900.0 - 1.0).abs() < RATE_TOL
        && (long / 28900.0 - 1.0).abs() < RATE_TOL
        && (p_short - 0.56).abs() < PAIRING_TOL
        && (p_long - 0.82).abs() < PAIRING_TOL;
    outcome(
        pass,
        format!(
            "8 pair/s -> {short:.0} (4900), 47 pair/s -> {long:.0} (28900); pairing {:.1}% (56%), {:.1}% (82%); 7400/900 s -> {raw:.0}",
            100.0 * p_short,
            100.0 * p_long
        ),
    )
}

fn dephasing_round_trip() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (gamma12, omega) in [(0.01, 6.88), (0.03, 11.0)] {
        let truth = MediumParams::new(60.0, gamma12, omega);
        let spectrum = transmission_spectrum(&truth, &detuning_grid(15.0, 1201)).unwrap();
        let fit = fit_dephasing(&spectrum, &truth.with_gamma12(0.5)).unwrap();
        let rel = (fit.gamma12 / gamma12 - 1.0).abs();
        pass &= rel < DEPHASING_TOL;
        parts.push(format!("{gamma12} -> {:.6} (rel {rel:.1e})", fit.gamma12));
    }
    outcome(pass, format!("{} (tol {DEPHASING_TOL})", parts.join("; ")))
}

fn lifetime_recovery() -> Outcome {
    let cfg = presets::load("memory-lifetime").unwrap().resolved();
    let psi = cfg.input_waveform().unwrap();
    let lifetime = cfg.lifetime.clone().unwrap();
    let times: Vec<f64> = lifetime.storage_times_ns.iter().map(|t| t * NS).collect();
    let scan = protocol::lifetime_scan(
        &psi,
        &cfg.params(),
        &times,
        cfg.spin_decay().unwrap(),
        cfg.ramp(),
        cfg.n_z,
    )
    .unwrap();
    let (_, tau) = protocol::fit_lifetime(&scan).unwrap();
    let target = lifetime.spin_lifetime_us * 1e-6;
    let rel = (tau / target - 1.0).abs();
    outcome(
        rel < LIFETIME_TOL,
        format!("fitted {:.4} µs vs {:.2} µs (rel {rel:.1e}, tol {LIFETIME_TOL})", tau * 1e6, target * 1e6),
    )
}

fn json_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for name in ["heralded-counts", "optimal-storage-a", "spectrum-fit"] {
        let cfg = presets::load(name).unwrap();
        let first = tmp.path().join(format!("{name}-1"));
        let second = tmp.path().join(format!("{name}-2"));
        runner::run(&cfg, &first).unwrap();
        runner::run(&cfg, &second).unwrap();
        let a = json_files(&first);
        let b = json_files(&second);
        let same = !a.is_empty() && a == b;
        pass &= same;
        parts.push(format!("{name}: {} JSON files {}", a.len(), if same { "identical" } else { "DIFFER" }));
    }
    outcome(pass, parts.join("; "))
}

fn main() {
    let mut failures = 0;
    let mut report = |id: usize, title: &str, result: Outcome| {
        let tag = if result.pass { "PASS" } else { "FAIL" };
        if !result.pass {
            failures += 1;
        }
        println!("[{tag}] {id:>2}. {title}: {}", result.detail);
    };
    println!("acceptance suite");
    report(1, "two-level limit", two_level_limit());
    report(2, "oracle equivalence", oracle_equivalence());
    report(3, "group delay", group_delay_match());
    report(4, "grid convergence", grid_convergence());
    let a = optimize(&preset_a());
    let b = optimize(&preset_b());
    report(5, "optimizer monotonicity and convergence", monotone_convergence(&a, &b));
    report(6, "time-reversal symmetry at the optimum", time_reversal_symmetry(&a, &b));
    report(7, "efficiency ordering", efficiency_ordering(&a, &b));
    report(8, "seed independence", seed_independence());
    report(9, "Cauchy-Schwarz arithmetic", cauchy_schwarz_arithmetic());
    report(10, "gbar-gc2 consistency", gbar_consistency());
    report(11, "single-photon limit", single_photon_limit());
    report(12, "loss budget", loss_budget_check());
    report(13, "dephasing fit round trip", dephasing_round_trip());
    report(14, "lifetime recovery", lifetime_recovery());
    report(15, "determinism", determinism());
    if failures > 0 {
        println!("acceptance: {failures} criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all 15 criteria passed");
}
