//! Transverse-field Ising ring: half-integer momentum grid, quasi-particle
//! dispersion, Bogoliubov coefficients and the closed-system sweep dynamics
//! of a single `(k, -k)` mode pair.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::ode::{rk4_2, State2};
use crate::numerics::quad::KahanSum;
use crate::schedules::{PhaseTable, Schedule};

/// Below this the Bogoliubov normalization is treated as degenerate.
pub const NORMALIZATION_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainParams {
    pub n_spins: usize,
}

impl ChainParams {
    pub fn new(n_spins: usize) -> Result<Self> {
        if n_spins < 2 || n_spins % 2 != 0 {
            return Err(Error::InvalidN(n_spins));
        }
        Ok(Self { n_spins })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeCoefficients {
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainSpectrum {
    pub params: ChainParams,
    pub g: f64,
    pub momenta: Vec<f64>,
    pub energies: Vec<f64>,
    /// Phase-free instantaneous coefficients `(u_k, v_k)`.
    pub bogoliubov: Vec<(Complex64, Complex64)>,
}

impl ChainSpectrum {
    pub fn new(params: ChainParams, g: f64) -> Result<Self> {
        check_g(g)?;
        let momenta = momentum_grid(params)?;
        let mut energies = Vec::with_capacity(momenta.len());
        let mut bogoliubov = Vec::with_capacity(momenta.len());
        for &ka in &momenta {
            energies.push(single_particle_energy(ka, g));
            let (u, v) = instantaneous_uv(ka, g)?;
            bogoliubov.push((Complex64::new(u, 0.0), Complex64::new(v, 0.0)));
        }
        Ok(Self { params, g, momenta, energies, bogoliubov })
    }
}

fn check_g(g: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&g) {
        return Err(Error::OutOfRange { what: "g", value: g, range: "[0, 1]" });
    }
    Ok(())
}

fn check_ka(ka: f64) -> Result<()> {
    if !(ka.abs() <= PI) {
        return Err(Error::OutOfRange { what: "ka", value: ka, range: "[-pi, pi]" });
    }
    Ok(())
}

/// The `N` half-integer momenta `(2m+1)π/N`, ascending.
pub fn momentum_grid(params: ChainParams) -> Result<Vec<f64>> {
    let n = ChainParams::new(params.n_spins)?.n_spins as i64;
    Ok((-n / 2..n / 2).map(|m| (2 * m + 1) as f64 * PI / n as f64).collect())
}

/// `𝓔_k(g)` without input validation.
///
/// Written as `2 sqrt(sin²(ka/2) + cos²(ka/2)(2g-1)²)`, which avoids the
/// cancellation of the `1 - 4g(1-g)cos²` form near the critical point.
#[inline]
pub fn single_particle_energy(ka: f64, g: f64) -> f64 {
    let (s, c) = (0.5 * ka).sin_cos();
    let d = 2.0 * g - 1.0;
    2.0 * (s * s + c * c * d * d).sqrt()
}

pub fn dispersion(ka: f64, g: f64) -> Result<f64> {
    check_ka(ka)?;
    check_g(g)?;
    Ok(single_particle_energy(ka, g))
}

#[inline]
pub fn alpha_beta(ka: f64, g: f64) -> (f64, f64) {
    let c = (0.5 * ka).cos();
    (2.0 - 4.0 * g * c * c, 2.0 * g * ka.sin())
}

pub fn mode_coefficients(ka: f64, g: f64) -> Result<ModeCoefficients> {
    check_ka(ka)?;
    check_g(g)?;
    let (alpha, beta) = alpha_beta(ka, g);
    Ok(ModeCoefficients { alpha, beta })
}

/// Real instantaneous eigenvector `((α+𝓔)/𝒩, β/𝒩)` of the mode matrix.
pub fn instantaneous_uv(ka: f64, g: f64) -> Result<(f64, f64)> {
    let (alpha, beta) = alpha_beta(ka, g);
    let e = single_particle_energy(ka, g);
    let norm = (2.0 * e * e + 2.0 * alpha * e).sqrt();
    if !(norm >= NORMALIZATION_FLOOR) {
        return Err(Error::DegenerateNormalization { g, ka });
    }
    Ok(((alpha + e) / norm, beta / norm))
}

/// Adiabatic mode tracking a schedule: instantaneous coefficients dressed
/// with the dynamical phase `e^{-iΦ(t)}`.
pub struct AdiabaticMode<'a> {
    pub ka: f64,
    schedule: &'a Schedule,
    phase: PhaseTable,
}

impl<'a> AdiabaticMode<'a> {
    pub fn new(ka: f64, schedule: &'a Schedule) -> Result<Self> {
        check_ka(ka)?;
        let phase = schedule.phase_table(move |g| single_particle_energy(ka, g), ka_width(ka));
        Ok(Self { ka, schedule, phase })
    }

    pub fn at(&self, t: f64) -> Result<(Complex64, Complex64)> {
        let (g, _) = self.schedule.evaluate(t)?;
        let (u, v) = instantaneous_uv(self.ka, g)?;
        let rot = Complex64::from_polar(1.0, -self.phase.at_time(t, g));
        Ok((rot * u, rot * v))
    }
}

/// Width in `g` of the dip of `𝓔_k` around the critical point.
pub fn ka_width(ka: f64) -> f64 {
    let (s, c) = (0.5 * ka).sin_cos();
    (s.abs() / (2.0 * c.abs().max(1e-300))).min(1.0)
}

pub fn adiabatic_bogoliubov(ka: f64, schedule: &Schedule, t: f64) -> Result<(Complex64, Complex64)> {
    AdiabaticMode::new(ka, schedule)?.at(t)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub ka: f64,
    pub times: Vec<f64>,
    pub u: Vec<Complex64>,
    pub v: Vec<Complex64>,
    pub steps: usize,
    /// Endpoint change when the step is halved.
    pub step_error: f64,
    pub max_norm_drift: f64,
}

impl Trajectory {
    pub fn end(&self) -> (Complex64, Complex64) {
        (*self.u.last().unwrap(), *self.v.last().unwrap())
    }

    pub fn converged(&self) -> bool {
        self.step_error < STEP_TOLERANCE
    }
}

pub const STEP_TOLERANCE: f64 = 1e-8;

fn propagate(ka: f64, schedule: &Schedule, steps: usize, record: bool) -> Result<(State2, Vec<(f64, State2)>, f64)> {
    let total = schedule.total_time();
    let err = std::cell::RefCell::new(None);
    let rhs = |t: f64, y: &State2| -> State2 {
        let g = match schedule.evaluate(t) {
            Ok((g, _)) => g,
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                0.0
            }
        };
        let (a, b) = alpha_beta(ka, g);
        let mi = Complex64::new(0.0, -1.0);
        [mi * (y[0] * a + y[1] * b), mi * (y[0] * b - y[1] * a)]
    };
    let mut samples = Vec::new();
    let mut drift = 0.0f64;
    let (u0, v0) = instantaneous_uv(ka, schedule.evaluate(0.0)?.0)?;
    let y0 = [Complex64::new(u0, 0.0), Complex64::new(v0, 0.0)];
    let end = {
        let observe = |t: f64, y: &State2| {
            drift = drift.max((y[0].norm_sqr() + y[1].norm_sqr() - 1.0).abs());
            if record {
                samples.push((t, *y));
            }
        };
        rk4_2(rhs, y0, 0.0, total, steps, observe)
    };
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    Ok((end, samples, drift))
}

/// Integrate `i d(u,v)/dt = [[α, β], [β, -α]](u,v)` from the instantaneous
/// eigenvector at `t = 0`, which is `(1, 0)` for every sweep starting at `g = 0`.
pub fn integrate_bogoliubov(ka: f64, schedule: &Schedule, steps: usize) -> Result<Trajectory> {
    check_ka(ka)?;
    let steps = steps.max(1);
    let (end, samples, drift) = propagate(ka, schedule, steps, true)?;
    let (fine, _, drift_fine) = propagate(ka, schedule, 2 * steps, false)?;
    let step_error = ((end[0] - fine[0]).norm_sqr() + (end[1] - fine[1]).norm_sqr()).sqrt();
    let (times, states): (Vec<_>, Vec<_>) = samples.into_iter().unzip();
    Ok(Trajectory {
        ka,
        times,
        u: states.iter().map(|s| s[0]).collect(),
        v: states.iter().map(|s| s[1]).collect(),
        steps,
        step_error,
        max_norm_drift: drift.max(drift_fine),
    })
}

/// Step count doubled until the halving check passes.
pub fn integrate_bogoliubov_converged(ka: f64, schedule: &Schedule) -> Result<Trajectory> {
    let mut steps = ((schedule.total_time() / 0.01).ceil() as usize).max(64);
    let mut last = f64::INFINITY;
    for _ in 0..8 {
        let tr = integrate_bogoliubov(ka, schedule, steps)?;
        if tr.converged() {
            return Ok(tr);
        }
        last = tr.step_error;
        steps *= 2;
    }
    Err(Error::StepTooLarge { change: last })
}

pub fn ground_energy_analytic(params: ChainParams, g: f64) -> Result<f64> {
    check_g(g)?;
    let mut sum = KahanSum::new();
    for ka in momentum_grid(params)? {
        sum.add(single_particle_energy(ka, g));
    }
    Ok(-0.5 * sum.value())
}

/// Fundamental gap `2𝓔_{π/N}(g)`.
pub fn min_gap(params: ChainParams, g: f64) -> Result<f64> {
    let n = ChainParams::new(params.n_spins)?.n_spins;
    check_g(g)?;
    Ok(2.0 * single_particle_energy(PI / n as f64, g))
}

pub fn global_min_gap(params: ChainParams) -> Result<f64> {
    let n = ChainParams::new(params.n_spins)?.n_spins;
    Ok(4.0 * (PI / (2.0 * n as f64)).sin())
}

/// Probability that the `(k, -k)` pair ends up excited after the sweep.
pub fn excitation_probability_mode(ka: f64, schedule: &Schedule) -> Result<f64> {
    let tr = integrate_bogoliubov_converged(ka, schedule)?;
    let (u, v) = tr.end();
    let (g_end, _) = schedule.evaluate(schedule.total_time())?;
    let (ui, vi) = instantaneous_uv(ka, g_end)?;
    Ok((u * vi - v * ui).norm_sqr().min(1.0))
}

/// Integrated mode against its adiabatic approximation at `t = T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndpointComparison {
    pub ka: f64,
    /// `|v_ode(T) − v_adiabatic(T)|`.
    pub mismatch: f64,
    /// `‖ψ_ode(T) − ψ_adiabatic(T)‖` over both components.
    pub state_mismatch: f64,
    pub excitation_probability: f64,
    pub max_norm_drift: f64,
    pub step_error: f64,
    pub steps: usize,
}

pub fn endpoint_comparison(ka: f64, schedule: &Schedule) -> Result<EndpointComparison> {
    let tr = integrate_bogoliubov_converged(ka, schedule)?;
    let (u, v) = tr.end();
    let total = schedule.total_time();
    let (ua, va) = adiabatic_bogoliubov(ka, schedule, total)?;
    let (g_end, _) = schedule.evaluate(total)?;
    let (ui, vi) = instantaneous_uv(ka, g_end)?;
    Ok(EndpointComparison {
        ka,
        mismatch: (v - va).norm(),
        state_mismatch: ((u - ua).norm_sqr() + (v - va).norm_sqr()).sqrt(),
        excitation_probability: (u * vi - v * ui).norm_sqr().min(1.0),
        max_norm_drift: tr.max_norm_drift,
        step_error: tr.step_error,
        steps: tr.steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedules::{GapProfile, ScheduleKind};
    use approx::assert_relative_eq;

    fn linear(t: f64) -> Schedule {
        Schedule::new(ScheduleKind::Linear, None, t).unwrap()
    }

    #[test]
    fn grid_small_cases() {
        let g2 = momentum_grid(ChainParams::new(2).unwrap()).unwrap();
        assert_eq!(g2, vec![-PI / 2.0, PI / 2.0]);
        let g4 = momentum_grid(ChainParams::new(4).unwrap()).unwrap();
        let want = [-0.75 * PI, -0.25 * PI, 0.25 * PI, 0.75 * PI];
        for (a, b) in g4.iter().zip(want) {
            assert_relative_eq!(*a, b, epsilon = 1e-15);
        }
        let g8 = momentum_grid(ChainParams::new(8).unwrap()).unwrap();
        assert_eq!(g8.len(), 8);
        assert_eq!(g8.iter().sum::<f64>(), 0.0);
        let min = g8.iter().map(|k| k.abs()).fold(f64::INFINITY, f64::min);
        assert_relative_eq!(min, PI / 8.0, epsilon = 1e-15);
    }

    #[test]
    fn odd_or_tiny_n_rejected() {
        assert!(matches!(ChainParams::new(3), Err(Error::InvalidN(3))));
        assert!(ChainParams::new(0).is_err());
        assert!(momentum_grid(ChainParams { n_spins: 5 }).is_err());
    }

    #[test]
    fn dispersion_values() {
        assert_relative_eq!(dispersion(PI / 3.0, 0.0).unwrap(), 2.0, epsilon = 1e-15);
        for ka in [0.1, 1.0, -2.5, 3.0] {
            assert_relative_eq!(dispersion(ka, 0.5).unwrap(), 2.0 * (ka / 2.0).sin().abs(), epsilon = 1e-14);
        }
        assert_relative_eq!(dispersion(PI / 2.0, 0.25).unwrap(), 2.5f64.sqrt(), epsilon = 1e-14);
        assert!(dispersion(0.1, 1.5).is_err());
        assert!(dispersion(4.0, 0.5).is_err());
    }

    #[test]
    fn coefficient_values() {
        let m = mode_coefficients(0.7, 0.0).unwrap();
        assert_eq!((m.alpha, m.beta), (2.0, 0.0));
        let m = mode_coefficients(PI / 2.0, 0.5).unwrap();
        assert_relative_eq!(m.alpha, 1.0, epsilon = 1e-15);
        assert_relative_eq!(m.beta, 1.0, epsilon = 1e-15);
        let m = mode_coefficients(PI, 0.37).unwrap();
        assert_relative_eq!(m.alpha, 2.0, epsilon = 1e-15);
        assert!(m.beta.abs() < 1e-15);
    }

    #[test]
    fn adiabatic_coefficients() {
        let s = linear(10.0);
        let (u, v) = adiabatic_bogoliubov(PI / 4.0, &s, 0.0).unwrap();
        assert_relative_eq!(u.re, 1.0, epsilon = 1e-15);
        assert!(u.im.abs() < 1e-15 && v.norm() < 1e-15);

        let frozen = Schedule::frozen(0.5, 3.0).unwrap();
        let (u, v) = adiabatic_bogoliubov(PI / 2.0, &frozen, 1.3).unwrap();
        let r2 = 2f64.sqrt();
        assert_relative_eq!(u.norm(), ((r2 + 1.0) / (2.0 * r2)).sqrt(), epsilon = 1e-14);
        assert_relative_eq!(v.norm(), (1.0 / (2.0 * r2 * (r2 + 1.0))).sqrt(), epsilon = 1e-14);
        assert_relative_eq!(u.norm_sqr() + v.norm_sqr(), 1.0, epsilon = 1e-14);
        // phase Φ = √2 t for the frozen point
        assert_relative_eq!(u.arg(), -(r2 * 1.3), epsilon = 1e-12);
    }

    #[test]
    fn degenerate_normalization_guarded() {
        assert!(matches!(instantaneous_uv(0.0, 1.0), Err(Error::DegenerateNormalization { .. })));
    }

    #[test]
    fn frozen_zero_is_pure_phase() {
        let s = Schedule::frozen(0.0, 1.0).unwrap();
        let tr = integrate_bogoliubov(PI / 2.0, &s, 2000).unwrap();
        let (u, v) = tr.end();
        assert!((u - Complex64::from_polar(1.0, -2.0)).norm() < 1e-10);
        assert!(v.norm() < 1e-14);
        assert!(tr.converged());
    }

    #[test]
    fn adiabatic_tracking_at_long_times() {
        let ka = 3.0 * PI / 64.0;
        let s = linear(400.0);
        let tr = integrate_bogoliubov_converged(ka, &s).unwrap();
        assert!(tr.max_norm_drift < 1e-9);
        let (_, v) = tr.end();
        let (_, va) = adiabatic_bogoliubov(ka, &s, 400.0).unwrap();
        assert!((v.norm() - va.norm()).abs() < 0.05);
    }

    #[test]
    fn ground_energy_limits() {
        for n in [2, 6, 12] {
            let p = ChainParams::new(n).unwrap();
            assert_relative_eq!(ground_energy_analytic(p, 0.0).unwrap(), -(n as f64), epsilon = 1e-12);
            assert_relative_eq!(ground_energy_analytic(p, 1.0).unwrap(), -(n as f64), epsilon = 1e-12);
        }
        let p = ChainParams::new(8).unwrap();
        let want: f64 = -momentum_grid(p).unwrap().iter().map(|k| (k / 2.0).sin().abs()).sum::<f64>();
        assert_relative_eq!(ground_energy_analytic(p, 0.5).unwrap(), want, epsilon = 1e-13);
    }

    #[test]
    fn gap_values() {
        let p4 = ChainParams::new(4).unwrap();
        assert_relative_eq!(global_min_gap(p4).unwrap(), 1.530733729460359, epsilon = 1e-13);
        let p8 = ChainParams::new(8).unwrap();
        assert_relative_eq!(min_gap(p8, 0.0).unwrap(), 4.0, epsilon = 1e-15);
        assert_relative_eq!(min_gap(p8, 0.5).unwrap(), global_min_gap(p8).unwrap(), epsilon = 1e-14);
        let big = ChainParams::new(1 << 16).unwrap();
        assert_relative_eq!(global_min_gap(big).unwrap() * (1u64 << 16) as f64, 2.0 * PI, epsilon = 1e-8);
    }

    #[test]
    fn excitation_probability_behaviour() {
        let frozen = Schedule::frozen(0.3, 50.0).unwrap();
        assert!(excitation_probability_mode(0.4, &frozen).unwrap() < 1e-9);

        let ka = PI / 64.0;
        let p: Vec<f64> = [100.0, 200.0, 400.0]
            .iter()
            .map(|&t| excitation_probability_mode(ka, &linear(t)).unwrap())
            .collect();
        assert!(p[0] > p[1] && p[1] > p[2], "{p:?}");

        // sudden quench: (1,0) projected on the g=1 excited vector
        let p = excitation_probability_mode(PI / 2.0, &linear(1e-6)).unwrap();
        let (ui, vi) = instantaneous_uv(PI / 2.0, 1.0).unwrap();
        assert_relative_eq!(p, vi * vi / (ui * ui + vi * vi), epsilon = 1e-6);
        assert_relative_eq!(p, 0.5, epsilon = 1e-6);
    }

    #[test]
    fn adapted_schedule_tracks_mode() {
        let s = Schedule::new(ScheduleKind::GapSquaredAdapted, Some(GapProfile::Ising { n: 16 }), 20.0).unwrap();
        let tr = integrate_bogoliubov_converged(PI / 16.0, &s).unwrap();
        assert!(tr.max_norm_drift < 1e-9);
    }
}
