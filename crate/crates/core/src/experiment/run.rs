//! Experiment execution.
//!
//! Rows are computed in parallel and collected in input order, so the
//! emitted tables depend only on the config. A failing row is recorded with
//! `converged = false` and NaN values instead of aborting the run.

use std::f64::consts::PI;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde_json::{Map, Value};

use super::config::*;
use super::output::*;
use crate::bath::SpectralFunction;
use crate::error::{Error, Result};
use crate::exact_diag::{
    build_hamiltonian, energy_derivatives, low_spectrum_seeded, min_sweep_gap, Sector, SpinHamiltonian, SpinModel,
};
use crate::fit::{fit_exponential, fit_power_law, FitModel};
use crate::grover_model::{error_estimate, error_probability, GroverParams};
use crate::ising_spectral::{
    dispersion, endpoint_comparison, global_min_gap, ground_energy_analytic, min_gap, momentum_grid, ChainParams,
};
use crate::numerics::oscillatory::OscillatoryOptions;
use crate::response::{
    amplitude_bound_near_gap, amplitude_saddle_uniform, amplitude_uniform_for, bitflip_bounds,
    bitflip_mode_amplitude, channel_amplitude, classify_regime_with, nonuniform_bound, ring_schedule, total_error,
    AmplitudeResult, Channel, ChannelKind, FinalState, Method, Regime,
};
use crate::schedules::{adiabatic_runtime, runtime_estimate, GapProfile, Schedule};

const NAN: f64 = f64::NAN;

/// Amplitude quadrature settings shared by the response and scaling runs.
fn amplitude_options() -> OscillatoryOptions {
    OscillatoryOptions { rel_tol: 1e-6, ..Default::default() }
}

/// Runs the experiment on the current rayon pool.
pub fn run(config: &ExperimentConfig) -> Result<ResultBundle> {
    config.validate()?;
    let mut bundle = match &config.experiment {
        Experiment::Spectrum(c) => spectrum(c)?,
        Experiment::Ed(c) => ed(c, config.seed)?,
        Experiment::Sweep(c) => sweep(c)?,
        Experiment::Response(c) => response(c)?,
        Experiment::Grover(c) => grover(c)?,
        Experiment::Scaling(s) => scaling(s)?,
    };
    bundle.experiment = config.experiment.name().to_string();
    Ok(bundle)
}

/// Runs on a pool of `config.threads` workers, writes the tables and the
/// manifest into `out`.
pub fn execute(config: &ExperimentConfig, out: &Path, versions: &[(&str, &str)]) -> Result<Manifest> {
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64());
    let clock = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let bundle = pool.install(|| run(config))?;
    let files = emit(&bundle, out)?;
    let mut vmap = Map::new();
    vmap.insert(env!("CARGO_PKG_NAME").into(), Value::from(env!("CARGO_PKG_VERSION")));
    for (k, v) in versions {
        vmap.insert(k.to_string(), Value::from(*v));
    }
    let manifest = Manifest {
        experiment: bundle.experiment.clone(),
        config_hash: config.hash()?,
        seed: config.seed,
        threads: pool.current_num_threads(),
        versions: vmap,
        started_unix: started,
        wall_time_seconds: clock.elapsed().as_secs_f64(),
        rows: bundle.rows(),
        nonconverged_rows: bundle.nonconverged(),
        files,
        fits: bundle.fits.clone(),
        row_errors: bundle.errors.clone(),
    };
    write_manifest(&manifest, out)?;
    Ok(manifest)
}

fn spectrum(c: &SpectrumConfig) -> Result<ResultBundle> {
    let gs = c.g.values();
    let mut disp = Table::new("spectrum", &["n", "ka", "g", "energy"]);
    let mut ground = Table::new("ground", &["n", "g", "ground_energy", "min_gap"]);
    for &n in &c.n_list {
        let p = ChainParams::new(n)?;
        for ka in momentum_grid(p)? {
            for &g in &gs {
                disp.push(vec![n.into(), ka.into(), g.into(), dispersion(ka, g)?.into()]);
            }
        }
        for &g in &gs {
            ground.push(vec![n.into(), g.into(), ground_energy_analytic(p, g)?.into(), min_gap(p, g)?.into()]);
        }
    }
    Ok(ResultBundle { tables: vec![disp, ground], ..Default::default() })
}

fn sector_name(s: Sector) -> &'static str {
    match s {
        Sector::Full => "full",
        Sector::Even => "even",
        Sector::Odd => "odd",
    }
}

fn marked_for(model: SpinModel, n: usize, marked: &Option<String>) -> Option<String> {
    match (model, marked) {
        (_, Some(m)) => Some(m.clone()),
        (SpinModel::IsingRing, None) => None,
        (_, None) => Some("0".repeat(n)),
    }
}

// Solving each parity sector and merging labels every level exactly, even
// when `levels` cuts through a degenerate cluster that mixes both sectors.
fn merged_sectors(h: &SpinHamiltonian, levels: usize, seed: u64) -> Result<(Vec<f64>, Vec<i8>, Vec<f64>)> {
    let m = levels.min(h.dim() / 2);
    let mut all = Vec::with_capacity(2 * m);
    for (sector, label) in [(Sector::Even, 1i8), (Sector::Odd, -1)] {
        let s = low_spectrum_seeded(h, m, sector, seed)?;
        all.extend(s.eigenvalues.into_iter().zip(s.residuals).map(|(e, r)| (e, label, r)));
    }
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    all.truncate(levels);
    Ok((all.iter().map(|x| x.0).collect(), all.iter().map(|x| x.1).collect(), all.iter().map(|x| x.2).collect()))
}

fn ed(c: &EdConfig, seed: u64) -> Result<ResultBundle> {
    let gs = c.g.values();
    let jobs: Vec<(usize, f64)> = c.n_list.iter().flat_map(|&n| gs.iter().map(move |&g| (n, g))).collect();
    let solved: Vec<Result<(Vec<f64>, Vec<i8>, Vec<f64>)>> = jobs
        .par_iter()
        .map(|&(n, g)| {
            let marked = marked_for(c.model, n, &c.marked);
            let h = build_hamiltonian(c.model, n, g, marked.as_deref())?;
            if c.sector == Sector::Full && c.model.parity_symmetric() {
                return merged_sectors(&h, c.levels, seed);
            }
            let s = low_spectrum_seeded(&h, c.levels, c.sector, seed)?;
            let label = match c.sector {
                Sector::Even => 1,
                Sector::Odd => -1,
                Sector::Full => 0,
            };
            Ok((s.eigenvalues, vec![label; s.residuals.len()], s.residuals))
        })
        .collect();

    let cols = ["model", "n", "g", "sector", "level", "energy", "parity", "residual", "converged"];
    let mut levels = Table::new("ed", &cols);
    let head = |n: usize, g: f64| -> Vec<Cell> {
        vec![c.model.name().into(), n.into(), g.into(), sector_name(c.sector).into()]
    };
    let mut errors = Vec::new();
    for (&(n, g), r) in jobs.iter().zip(solved) {
        match r {
            Ok((e, p, res)) => {
                for i in 0..e.len() {
                    let mut row = head(n, g);
                    row.extend([i.into(), e[i].into(), (p[i] as i64).into(), res[i].into(), true.into()]);
                    levels.push(row);
                }
            }
            Err(e) => {
                errors.push(format!("ed n = {n}, g = {g}: {e}"));
                let mut row = head(n, g);
                row.extend([0usize.into(), NAN.into(), 0i64.into(), NAN.into(), false.into()]);
                levels.push(row);
            }
        }
    }
    let mut bundle = ResultBundle { tables: vec![levels], errors, ..Default::default() };
    if c.derivatives {
        let mut t = Table::new("derivatives", &["model", "n", "g", "energy", "d1", "d2", "converged"]);
        for &n in &c.n_list {
            let marked = marked_for(c.model, n, &c.marked);
            match energy_derivatives(c.model, n, marked.as_deref(), &gs) {
                Ok(d) => {
                    for i in 0..d.g.len() {
                        t.push(vec![
                            c.model.name().into(),
                            n.into(),
                            d.g[i].into(),
                            d.energy[i].into(),
                            d.first[i].into(),
                            d.second[i].into(),
                            true.into(),
                        ]);
                    }
                    bundle.plots.push(PlotData {
                        name: format!("d2_{}_n{n}", c.model.name()),
                        x_label: "g".into(),
                        y_label: "d2E0/dg2".into(),
                        points: d.g.iter().copied().zip(d.second.iter().copied()).collect(),
                    });
                }
                Err(e) => {
                    bundle.errors.push(format!("derivatives n = {n}: {e}"));
                    for &g in &gs {
                        let nan = || Cell::Float(NAN);
                        t.push(vec![c.model.name().into(), n.into(), g.into(), nan(), nan(), nan(), false.into()]);
                    }
                }
            }
        }
        bundle.tables.push(t);
    }
    Ok(bundle)
}

fn sweep(c: &SweepConfig) -> Result<ResultBundle> {
    let mut jobs = Vec::new();
    for &n in &c.n_list {
        for ka in c.modes.momenta(n)? {
            jobs.extend(c.t_list.iter().map(|&t| (n, ka, t)));
        }
    }
    let rows: Vec<(Vec<Cell>, Option<String>)> = jobs
        .par_iter()
        .map(|&(n, ka, t)| {
            let head: Vec<Cell> = vec![n.into(), ka.into(), c.schedule.name().into(), t.into()];
            let r = ring_schedule(c.schedule, n, t)
                .and_then(|s| s.ok_or_else(|| Error::Config("empty sweep".into())))
                .and_then(|s| endpoint_comparison(ka, &s));
            let mut err = None;
            let tail: Vec<Cell> = match r {
                Ok(e) => vec![
                    e.excitation_probability.into(),
                    e.mismatch.into(),
                    e.state_mismatch.into(),
                    e.max_norm_drift.into(),
                    e.step_error.into(),
                    e.steps.into(),
                    true.into(),
                ],
                Err(e) => {
                    err = Some(format!("sweep n = {n}, ka = {ka}, T = {t}: {e}"));
                    vec![NAN.into(), NAN.into(), NAN.into(), NAN.into(), NAN.into(), 0usize.into(), false.into()]
                }
            };
            (head.into_iter().chain(tail).collect(), err)
        })
        .collect();
    let mut t = Table::new(
        "sweep",
        &[
            "n",
            "ka",
            "schedule",
            "T",
            "excitation_probability",
            "mismatch",
            "state_mismatch",
            "max_norm_drift",
            "step_error",
            "steps",
            "converged",
        ],
    );
    let mut errors = Vec::new();
    for (row, err) in rows {
        t.push(row);
        errors.extend(err);
    }
    Ok(ResultBundle { tables: vec![t], errors, ..Default::default() })
}

fn final_states(channel: &Channel, momenta: &[f64]) -> Vec<FinalState> {
    match channel.kind {
        ChannelKind::UniformX => momenta.iter().map(|&ka| FinalState::Pair { ka, kpa: ka }).collect(),
        ChannelKind::NonuniformX => momenta
            .iter()
            .flat_map(|&ka| momenta.iter().map(move |&kpa| FinalState::Pair { ka, kpa }))
            .collect(),
        ChannelKind::SingleSiteZ => momenta.iter().map(|&ka| FinalState::Single { ka }).collect(),
    }
}

/// `(ka, kpa, gap scale)` of a final state.
fn state_momenta(state: FinalState) -> (f64, Option<f64>, f64) {
    match state {
        FinalState::Pair { ka, kpa } => (ka, Some(kpa), 0.5 * (ka.abs() + kpa.abs())),
        FinalState::Single { ka } => (ka, None, ka.abs()),
    }
}

/// One response row, or `None` when the method does not apply.
fn response_row(
    c: &ResponseConfig,
    n: usize,
    schedule: &Schedule,
    state: FinalState,
    omega: f64,
    method: ResponseMethod,
) -> Option<Result<AmplitudeResult>> {
    let (ka, kpa, gap_ka) = state_momenta(state);
    let opts = amplitude_options();
    let scalar = |v: f64, m: Method| {
        let mut r = AmplitudeResult {
            value: v.into(),
            method: m,
            regime: Regime::Intermediate,
            quad_error: 0.0,
            converged: true,
            ka,
            kpa,
            omega,
            validity: None,
            parts: Vec::new(),
        };
        r.regime = classify_regime_with(omega, gap_ka, c.total_error.rho);
        r
    };
    match method {
        ResponseMethod::Quadrature => {
            Some(channel_amplitude(&c.channel, n, state, omega, schedule, c.window, &opts))
        }
        ResponseMethod::Saddle => {
            if c.channel.kind != ChannelKind::UniformX {
                return None;
            }
            match amplitude_saddle_uniform(omega, ka, schedule) {
                Err(Error::ComplexSaddle { .. } | Error::OutOfRange { .. } | Error::SaddleCollision { .. }) => None,
                r => Some(r),
            }
        }
        ResponseMethod::Bound => Some(match (c.channel.kind, kpa) {
            (ChannelKind::UniformX, _) => amplitude_bound_near_gap(ka, schedule).map(|r| r.modulus()),
            (ChannelKind::NonuniformX, Some(kp)) => nonuniform_bound(ka, kp, n, schedule).map(|r| r.modulus()),
            _ => bitflip_bounds(ka, schedule).map(|(b1, b2)| (b1 + b2) / (n as f64).sqrt()),
        }
        .map(|v| scalar(v, Method::PhaseFreeBound))),
        ResponseMethod::Contour => {
            let t = schedule.total_time();
            let v = match classify_regime_with(omega, gap_ka, c.total_error.rho) {
                Regime::Negative => (-PI * t * gap_ka * gap_ka / 16.0).exp(),
                Regime::SubGap => (-0.5 * t * gap_ka * gap_ka).exp(),
                _ => return None,
            };
            Some(Ok(scalar(v, Method::ContourEstimate)))
        }
    }
}

fn response(c: &ResponseConfig) -> Result<ResultBundle> {
    let omegas = c.omega.values();
    let cols = [
        "channel", "n", "ka", "kpa", "omega", "regime", "method", "re", "im", "modulus", "quad_error", "converged",
    ];
    let mut amps = Table::new("response", &cols);
    let mut totals = Table::new("total", &["channel", "n", "regime", "error", "nonconverged_modes", "converged"]);
    let mut errors = Vec::new();
    for &n in &c.n_list {
        let schedule = c.schedule.build(GapProfile::Ising { n })?;
        let momenta = c.modes.momenta(n)?;
        let mut jobs = Vec::new();
        for state in final_states(&c.channel, &momenta) {
            for &omega in &omegas {
                jobs.extend(c.methods.iter().map(|&m| (state, omega, m)));
            }
        }
        let rows: Vec<Option<(Vec<Cell>, Option<String>)>> = jobs
            .par_iter()
            .map(|&(state, omega, method)| {
                let r = response_row(c, n, &schedule, state, omega, method)?;
                let (ka, kpa, gap_ka) = state_momenta(state);
                let regime = classify_regime_with(omega, gap_ka, c.total_error.rho);
                let mut row: Vec<Cell> = vec![
                    c.channel.name().into(),
                    n.into(),
                    ka.into(),
                    kpa.unwrap_or(NAN).into(),
                    omega.into(),
                    regime.name().into(),
                ];
                let mut err = None;
                match r {
                    Ok(a) => row.extend([
                        a.method.name().into(),
                        a.value.re.into(),
                        a.value.im.into(),
                        a.modulus().into(),
                        a.quad_error.into(),
                        a.converged.into(),
                    ]),
                    Err(e) => {
                        err = Some(format!("{} n = {n}, ka = {ka}, omega = {omega}: {e}", method_label(method)));
                        row.extend([
                            method_label(method).into(),
                            NAN.into(),
                            NAN.into(),
                            NAN.into(),
                            NAN.into(),
                            false.into(),
                        ]);
                    }
                }
                Some((row, err))
            })
            .collect();
        for (row, err) in rows.into_iter().flatten() {
            amps.push(row);
            errors.extend(err);
        }

        if let Some(bath) = &c.bath {
            let head = |regime: &str| -> Vec<Cell> { vec![c.channel.name().into(), n.into(), regime.into()] };
            match total_error(&c.channel, n, &schedule, bath, &c.modes, &c.total_error) {
                Ok(te) => {
                    let ok = te.nonconverged == 0;
                    for (regime, v) in Regime::ALL.iter().zip(te.by_regime) {
                        let mut row = head(regime.name());
                        row.extend([v.into(), te.nonconverged.into(), ok.into()]);
                        totals.push(row);
                    }
                    let mut row = head("total");
                    row.extend([te.total.into(), te.nonconverged.into(), ok.into()]);
                    totals.push(row);
                }
                Err(e) => {
                    errors.push(format!("total error n = {n}: {e}"));
                    let mut row = head("total");
                    row.extend([NAN.into(), 0usize.into(), false.into()]);
                    totals.push(row);
                }
            }
        }
    }
    let mut tables = vec![amps];
    if c.bath.is_some() {
        tables.push(totals);
    }
    Ok(ResultBundle { tables, errors, ..Default::default() })
}

fn method_label(m: ResponseMethod) -> &'static str {
    match m {
        ResponseMethod::Quadrature => Method::Quadrature.name(),
        ResponseMethod::Saddle => Method::SaddlePoint.name(),
        ResponseMethod::Bound => Method::PhaseFreeBound.name(),
        ResponseMethod::Contour => Method::ContourEstimate.name(),
    }
}

fn grover(c: &GroverConfig) -> Result<ResultBundle> {
    let quad = c.quadrature.unwrap_or_default();
    let rows: Vec<(Vec<Cell>, Option<String>)> = c
        .n_list
        .par_iter()
        .map(|&n| {
            let r = (|| -> Result<(f64, f64, f64, f64, bool)> {
                let params = GroverParams::new(n, None, c.lambda)?;
                let schedule = c.schedule.build(params.profile())?;
                let e = error_probability(&params, &schedule, &c.bath, &quad)?;
                let est = error_estimate(&params, &c.bath, c.multiplier)?;
                Ok((params.dim(), e.value, est, e.quad_error, e.converged))
            })();
            let d = 2f64.powi(n as i32);
            match r {
                Ok((d, e, est, qe, ok)) => {
                    (vec![n.into(), d.into(), e.into(), est.into(), (e / est).into(), qe.into(), ok.into()], None)
                }
                Err(e) => (
                    vec![n.into(), d.into(), NAN.into(), NAN.into(), NAN.into(), NAN.into(), false.into()],
                    Some(format!("grover n = {n}: {e}")),
                ),
            }
        })
        .collect();
    let mut t = Table::new("grover", &["n", "d", "error", "estimate", "ratio", "quad_error", "converged"]);
    let mut errors = Vec::new();
    for (row, err) in rows {
        t.push(row);
        errors.extend(err);
    }
    Ok(ResultBundle { tables: vec![t], errors, ..Default::default() })
}

/// `(x, y, converged)` of one study point.
fn study_point(study: &Study, index: usize) -> (f64, Result<(f64, bool)>) {
    let opts = amplitude_options();
    match study {
        Study::IsingGap { n_list } => {
            let n = n_list[index];
            (n as f64, ChainParams::new(n).and_then(global_min_gap).map(|v| (v, true)))
        }
        Study::EdGap { model, n_list } => {
            let n = n_list[index];
            (n as f64, min_sweep_gap(*model, n).map(|(_, gap)| (gap, true)))
        }
        Study::NearGapBound { schedule, ka, n_list, epsilon, log_correction } => {
            let n = n_list[index];
            let r = (|| {
                let profile = GapProfile::Ising { n };
                let t = adiabatic_runtime(*schedule, profile, *epsilon)?;
                let s = Schedule::new(*schedule, Some(profile), t)?;
                let b = amplitude_bound_near_gap(*ka, &s)?.modulus();
                Ok((if *log_correction { b / (n as f64).ln() } else { b }, true))
            })();
            (n as f64, r)
        }
        Study::Bitflip { ka, omega, n_list, schedule, epsilon } => {
            let n = n_list[index];
            let r = (|| {
                let profile = GapProfile::Ising { n };
                let t = adiabatic_runtime(*schedule, profile, *epsilon)?;
                let s = Schedule::new(*schedule, Some(profile), t)?;
                Ok((bitflip_mode_amplitude(*ka, n, *omega, &s, &opts)?, true))
            })();
            (n as f64, r)
        }
        Study::GroverEstimate { eta, n_list, theta } => {
            let n = n_list[index];
            let f = SpectralFunction::ohmic(*theta, *eta, None, None);
            let r = GroverParams::new(n, None, 1.0).and_then(|p| error_estimate(&p, &f, 1.0)).map(|v| (v, true));
            (2f64.powi(n as i32), r)
        }
        Study::TotalError { channel, n_list, schedule, bath, modes, options, runtime_estimate: estimate } => {
            let n = n_list[index];
            let r = (|| {
                let profile = GapProfile::Ising { n };
                let mut spec = *schedule;
                if *estimate && spec.total_time.is_none() {
                    spec.total_time = Some(runtime_estimate(profile));
                }
                let s = spec.build(profile)?;
                let te = total_error(channel, n, &s, bath, modes, options)?;
                Ok((te.total, te.nonconverged == 0))
            })();
            (n as f64, r)
        }
        Study::Decay { ka, omega, n, schedule, t_list, window } => {
            let t = t_list[index];
            let r = amplitude_uniform_for(*ka, *omega, *schedule, *n, t, *window, &opts).map(|a| (a.modulus(), a.converged));
            (t, r)
        }
    }
}

fn study_len(study: &Study) -> usize {
    match study {
        Study::IsingGap { n_list }
        | Study::EdGap { n_list, .. }
        | Study::NearGapBound { n_list, .. }
        | Study::Bitflip { n_list, .. }
        | Study::GroverEstimate { n_list, .. }
        | Study::TotalError { n_list, .. } => n_list.len(),
        Study::Decay { t_list, .. } => t_list.len(),
    }
}

/// Fit family of each study.
pub fn study_fit_model(study: &Study) -> FitModel {
    match study {
        Study::EdGap { .. } | Study::Decay { .. } => FitModel::Exponential,
        _ => FitModel::PowerLaw,
    }
}

fn scaling(study: &Study) -> Result<ResultBundle> {
    let points: Vec<(f64, Result<(f64, bool)>)> =
        (0..study_len(study)).into_par_iter().map(|i| study_point(study, i)).collect();
    let mut t = Table::new("scaling", &["study", "x", "y", "converged"]);
    let (mut xs, mut ys, mut errors) = (Vec::new(), Vec::new(), Vec::new());
    for (x, r) in points {
        let (y, ok) = r.unwrap_or_else(|e| {
            errors.push(format!("{} x = {x}: {e}", study.name()));
            (NAN, false)
        });
        let ok = ok && y.is_finite();
        if ok {
            xs.push(x);
            ys.push(y);
        }
        t.push(vec![study.name().into(), x.into(), y.into(), ok.into()]);
    }
    let mut bundle = ResultBundle { tables: vec![t], errors, ..Default::default() };
    let fit = match study_fit_model(study) {
        FitModel::Exponential => fit_exponential(&xs, &ys),
        _ => fit_power_law(&xs, &ys),
    };
    match fit {
        Ok(fit) => bundle.fits.push(NamedFit { name: study.name().into(), fit }),
        Err(e) => bundle.errors.push(format!("{} fit: {e}", study.name())),
    }
    bundle.plots.push(PlotData {
        name: study.name().into(),
        x_label: "x".into(),
        y_label: "y".into(),
        points: xs.into_iter().zip(ys).collect(),
    });
    Ok(bundle)
}

/// Refits the `(x, y)` columns of an emitted scaling CSV.
pub fn refit_scaling_csv(study: &Study, bytes: &[u8]) -> Result<crate::fit::FitResult> {
    let t = Table::from_csv("scaling", bytes)?;
    let col = |name: &str| t.column(name).ok_or_else(|| Error::Config(format!("missing column {name}")));
    let (x, y, ok) = (col("x")?, col("y")?, col("converged")?);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for i in 0..t.rows.len() {
        if *ok[i] == Cell::Bool(true) {
            xs.push(x[i].as_f64().unwrap_or(NAN));
            ys.push(y[i].as_f64().unwrap_or(NAN));
        }
    }
    match study_fit_model(study) {
        FitModel::Exponential => fit_exponential(&xs, &ys),
        _ => fit_power_law(&xs, &ys),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(text).unwrap()
    }

    #[test]
    fn spectrum_rows_and_spot_value() {
        let c = cfg(r#"{"experiment": {"kind": "spectrum", "n_list": [64], "g": {"start": 0, "stop": 1, "points": 101}}}"#);
        let b = run(&c).unwrap();
        let t = &b.tables[0];
        assert_eq!(t.rows.len(), 64 * 101);
        let ka = PI / 64.0;
        let row = t
            .rows
            .iter()
            .find(|r| r[1] == Cell::Float(ka) && r[2] == Cell::Float(0.5))
            .expect("row for ka = pi/64, g = 1/2");
        let e = row[3].as_f64().unwrap();
        assert!((e - 2.0 * (PI / 128.0).sin()).abs() < 1e-15);
    }

    #[test]
    fn ed_labels_parity_in_full_space() {
        let c = cfg(r#"{"experiment": {"kind": "ed", "model": "ising_ring", "n_list": [4], "g": [0.3, 0.7], "levels": 3}}"#);
        let b = run(&c).unwrap();
        assert_eq!(b.nonconverged(), 0);
        let parity = b.tables[0].column("parity").unwrap();
        assert!(parity.iter().all(|p| matches!(p, Cell::Int(1) | Cell::Int(-1))));
    }

    #[test]
    fn failing_rows_are_flagged_not_fatal() {
        // 50 qubits is beyond the Grover model's range, so that row fails.
        let c = cfg(r#"{"experiment": {"kind": "grover", "n_list": [2, 50], "bath": {"kind": "dirac_comb", "lines": [[0.3, 1.0]]}}}"#);
        let b = run(&c).unwrap();
        assert_eq!(b.tables[0].rows.len(), 2);
        assert_eq!(b.nonconverged(), 1);
        assert_eq!(b.tables[0].rows[1][6], Cell::Bool(false));
    }

    #[test]
    fn ising_gap_study_fits_inverse_n() {
        let n: Vec<String> = (3..=10).map(|p| (1usize << p).to_string()).collect();
        let c = cfg(&format!(
            r#"{{"experiment": {{"kind": "scaling", "study": "ising_gap", "n_list": [{}]}}}}"#,
            n.join(",")
        ));
        let b = run(&c).unwrap();
        let fit = &b.fits[0].fit;
        assert!((fit.exponent + 1.0).abs() < 0.02, "{}", fit.exponent);
        let csv = b.tables[0].to_csv().unwrap();
        let Experiment::Scaling(study) = &c.experiment else { unreachable!() };
        let again = refit_scaling_csv(study, &csv).unwrap();
        assert!((again.exponent - fit.exponent).abs() < 1e-9);
    }
}
