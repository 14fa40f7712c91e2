use std::path::{Path, PathBuf};

use log::{info, warn};
use spin_cooling::coherent::{
    inner_splitting, parse_coefficients, simple_pulse_propagator, transfer_overlap,
};
use spin_cooling::kinetics::run_ideal_signal;
use spin_cooling::protocol::STEADY_STATE_PERMUTATIONS;
use spin_cooling::{
    ab_spectrum, closed_form_so, composite_pulse_propagator, decay_curve, enhance_zeeman,
    fit_monoexponential, ideal_steady_state, measure_order, run_ideal, run_kinetic,
    run_kinetic_enhanced, simulate_permutation, sweep_tau, thermal_populations, Expanded,
    OrderObservable, PermutationKind, PulseShape,
};

use crate::config::{Mode, RunConfig};
use crate::error::{config, CliError};
use crate::table::{num, Table};

const SIGNAL_NOTE: &str =
    "signal is normalized to the ideal 90-degree pulse signal at thermal equilibrium";

fn engine(cfg: &RunConfig, command: &str) -> Result<Mode, CliError> {
    match cfg.mode {
        Mode::CoherentCheck => Err(config(format!(
            "{command} runs the ideal or kinetic engine, not coherent-check"
        ))),
        m => Ok(m),
    }
}

fn kinetic_only(cfg: &RunConfig, command: &str) -> Result<(), CliError> {
    if cfg.mode_explicit && cfg.mode != Mode::Kinetic {
        return Err(config(format!("{command} needs the kinetic engine")));
    }
    Ok(())
}

fn eps(cfg: &RunConfig) -> Result<f64, CliError> {
    Ok(cfg.params.epsilon()?)
}

/// One row per permutation count 0..=n_p.
pub fn pump(cfg: &RunConfig) -> Result<Table, CliError> {
    let mode = engine(cfg, "pump")?;
    let eps = eps(cfg)?;
    let mut t = Table::new(&["n_p", "so", "signal", "closed_form_so"]);
    for n in 0..=cfg.n_p {
        let (so, signal) = match mode {
            Mode::Ideal => {
                let p = run_ideal(n, Expanded::epsilon())?;
                let so = measure_order(&p, OrderObservable::SingletOrder).at(eps);
                (so, run_ideal_signal(n)?)
            }
            _ => {
                let r = run_kinetic(n, cfg.tau, cfg.tau_ev, &cfg.params)?;
                (r.so, r.signal)
            }
        };
        t.row(vec![
            n.to_string(),
            num(so),
            num(signal),
            num(closed_form_so(n, eps)),
        ]);
    }
    t.note(format!(
        "engine={},eps={},tau={},tau_ev={}",
        mode_name(mode),
        num(eps),
        num(cfg.tau),
        num(cfg.tau_ev)
    ));
    t.note(SIGNAL_NOTE);
    Ok(t)
}

pub fn sweep(cfg: &RunConfig) -> Result<Table, CliError> {
    kinetic_only(cfg, "sweep-tau")?;
    let grid = cfg
        .tau_grid
        .as_deref()
        .ok_or_else(|| config("sweep-tau needs --tau-grid"))?;
    let s = sweep_tau(cfg.n_p, grid, &cfg.params)?;
    let mut t = Table::new(&["tau", "signal"]);
    for &(tau, signal) in &s.points {
        t.row(vec![num(tau), num(signal)]);
    }
    t.note(format!(
        "optimum,tau={},signal={}",
        num(s.best_tau),
        num(s.best_signal)
    ));
    t.note(format!("n_p={}", cfg.n_p));
    Ok(t)
}

/// Signal against the evolution delay, with a mono-exponential fit. A failed
/// fit still produces the table; the error is returned alongside it.
pub fn decay(cfg: &RunConfig) -> Result<(Table, Option<CliError>), CliError> {
    kinetic_only(cfg, "decay")?;
    let grid = cfg
        .tau_ev_grid
        .as_deref()
        .ok_or_else(|| config("decay needs --tau-ev-grid"))?;
    if grid.len() < 3 {
        return Err(config(format!(
            "decay fit needs at least 3 grid points, got {}",
            grid.len()
        )));
    }
    let curve = decay_curve(cfg.n_p, cfg.tau, grid, &cfg.params)?;
    let mut t = Table::new(&["tau_ev", "signal"]);
    for &(x, y) in &curve {
        t.row(vec![num(x), num(y)]);
    }
    let failure = match fit_monoexponential(&curve) {
        Ok(fit) => {
            t.note(format!(
                "fit,amplitude={},time_constant={},relative_deviation={},residual_norm={},status={:?}",
                num(fit.amplitude),
                num(fit.time_constant),
                num(fit.time_constant / cfg.params.ts - 1.0),
                num(fit.residual_norm),
                fit.status
            ));
            (!fit.is_ok()).then(|| CliError::Fit(format!("status {:?}", fit.status)))
        }
        Err(e) => {
            t.note(format!("fit,status=Failed,reason={e}"));
            Some(CliError::Fit(e.to_string()))
        }
    };
    t.note(format!(
        "n_p={},tau={},ts={}",
        cfg.n_p,
        num(cfg.tau),
        num(cfg.params.ts)
    ));
    Ok((t, failure))
}

pub fn enhance(cfg: &RunConfig) -> Result<Table, CliError> {
    let mode = engine(cfg, "enhance")?;
    if !cfg.n_p.is_multiple_of(2) {
        return Err(config(format!(
            "the enhancement protocol needs an even number of permutations, got {}",
            cfg.n_p
        )));
    }
    let eps = eps(cfg)?;
    let zo_eq = measure_order(&thermal_populations(eps)?, OrderObservable::ZeemanOrder);
    let (n_used, zo_final, ratio) = match mode {
        Mode::Ideal => {
            // the ideal engine starts from the converged steady state
            let e = Expanded::epsilon();
            let out = enhance_zeeman(&ideal_steady_state(e)?, e)?;
            let zo = measure_order(&out, OrderObservable::ZeemanOrder);
            let eq = measure_order(&thermal_populations(e)?, OrderObservable::ZeemanOrder);
            (STEADY_STATE_PERMUTATIONS, zo.at(eps), zo.c1 / eq.c1)
        }
        _ => {
            let r = run_kinetic_enhanced(cfg.n_p, cfg.tau, Some(cfg.tau_prime), &cfg.params)?;
            let ratio = r.enhancement.ok_or_else(|| {
                CliError::Compute(spin_cooling::Error::Numerical("no enhancement".into()))
            })?;
            (cfg.n_p, r.zo_final.unwrap_or(ratio * zo_eq), ratio)
        }
    };
    let mut t = Table::new(&[
        "engine",
        "n_p",
        "tau",
        "tau_prime",
        "zo_final",
        "zo_eq",
        "ratio",
        "temperature_ratio",
    ]);
    t.row(vec![
        mode_name(mode).to_string(),
        n_used.to_string(),
        num(cfg.tau),
        num(cfg.tau_prime),
        num(zo_final),
        num(zo_eq),
        num(ratio),
        num(1.0 / ratio),
    ]);
    t.note(format!("eps={}", num(eps)));
    Ok(t)
}

fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Ideal => "ideal",
        Mode::Kinetic => "kinetic",
        Mode::CoherentCheck => "coherent-check",
    }
}

fn pulse_shape(cfg: &RunConfig) -> Result<(PulseShape, String), CliError> {
    let published = PulseShape::published();
    match &cfg.apsoc_coefficients {
        None => Ok((published, "published".into())),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let c = parse_coefficients(&text)
                .map_err(|e| config(format!("{}: {e}", path.display())))?;
            Ok((published.with_coefficients(&c)?, path.display().to_string()))
        }
    }
}

/// Spectrum, pulse-level permutation fidelities and composite-pulse
/// robustness, one CSV each.
pub fn coherent_check(cfg: &RunConfig) -> Result<Vec<(PathBuf, Table)>, CliError> {
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let (shape, source) = pulse_shape(cfg)?;

    let lines = ab_spectrum(&cfg.params)?;
    let mut spec = Table::new(&["frequency_hz", "intensity"]);
    for l in &lines {
        spec.row(vec![num(l.frequency_hz), num(l.intensity)]);
    }
    if let Some(s) = inner_splitting(&lines) {
        spec.note(format!("inner_splitting_hz={}", num(s)));
    }
    spec.note(format!(
        "b0={},j={}",
        num(cfg.params.b0),
        num(cfg.params.j_coupling)
    ));

    let mut perms = Table::new(&[
        "permutation",
        "fidelity",
        "argmax_matches",
        "t00",
        "t01",
        "t02",
        "t03",
        "t10",
        "t11",
        "t12",
        "t13",
        "t20",
        "t21",
        "t22",
        "t23",
        "t30",
        "t31",
        "t32",
        "t33",
    ]);
    for kind in [PermutationKind::Pi124, PermutationKind::Pi142] {
        let sim = simulate_permutation(kind, &cfg.params, &shape, cfg.steps, cfg.larmor_sign)?;
        info!("{kind}: fidelity {:.6}", sim.fidelity);
        if sim.fidelity < 0.9 {
            warn!("{kind} realized with fidelity {:.4} only", sim.fidelity);
        }
        let mut row = vec![
            kind.to_string(),
            num(sim.fidelity),
            sim.argmax_matches().to_string(),
        ];
        row.extend(sim.transfer.rows().iter().flatten().map(|&x| num(x)));
        perms.row(row);
    }
    perms.note(format!(
        "shape={source},steps={},larmor_sign={},offset_hz={}",
        cfg.steps,
        cfg.larmor_sign,
        num(shape.offset_hz)
    ));

    let mut robust = Table::new(&["scale", "composite_overlap", "simple_overlap"]);
    for k in 0..=60 {
        let scale = 0.7 + 0.01 * k as f64;
        let scale = (scale * 100.0).round() / 100.0;
        let c = transfer_overlap(&composite_pulse_propagator(1.0, scale)?, 1.0);
        let s = transfer_overlap(&simple_pulse_propagator(1.0, scale)?, 1.0);
        robust.row(vec![num(scale), num(c), num(s)]);
    }

    Ok(vec![
        (dir.join("ab_spectrum.csv"), spec),
        (dir.join("permutations.csv"), perms),
        (dir.join("composite_pulse.csv"), robust),
    ])
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}
