//! First-order excitation amplitudes of the Ising ring under weak coupling
//! to an environment, by direct quadrature and by asymptotic forms, and the
//! regime-resolved assembly of the total error.
//!
//! All amplitudes are reported per unit coupling `λ`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bath::SpectralFunction;
use crate::error::{Error, Result};
use crate::fit::{fit_linear, FitResult};
use crate::ising_spectral::{alpha_beta, ka_width, momentum_grid, single_particle_energy, ChainParams};
use crate::numerics::oscillatory::{OscillatoryOptions, OscillatoryResult};
use crate::numerics::quad::integrate_adaptive;
use crate::schedules::{GapProfile, PhaseTable, Schedule, ScheduleKind};
use crate::sweep::{SweepIntegral, Window};

/// Factor standing in for "much larger than" in the regime boundaries.
pub const DEFAULT_RHO: f64 = 3.0;
/// `2𝓔_k` at `g = 0`, the upper end of the regimes.
pub const INITIAL_ENERGY: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    UniformX,
    NonuniformX,
    SingleSiteZ,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub kind: ChannelKind,
    #[serde(default = "one")]
    pub lambda: f64,
    #[serde(default)]
    pub site: Option<usize>,
}

fn one() -> f64 {
    1.0
}

impl Channel {
    pub fn new(kind: ChannelKind, lambda: f64) -> Result<Self> {
        let c = Self { kind, lambda, site: (kind == ChannelKind::SingleSiteZ).then_some(0) };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::OutOfRange { what: "lambda", value: self.lambda, range: "[0, inf)" });
        }
        Ok(())
    }

    pub fn preserves_parity(&self) -> bool {
        self.kind != ChannelKind::SingleSiteZ
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ChannelKind::UniformX => "uniform_x",
            ChannelKind::NonuniformX => "nonuniform_x",
            ChannelKind::SingleSiteZ => "single_site_z",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Intermediate,
    NearGap,
    SubGap,
    Negative,
}

impl Regime {
    pub const ALL: [Regime; 4] = [Regime::Intermediate, Regime::NearGap, Regime::SubGap, Regime::Negative];

    pub fn name(self) -> &'static str {
        match self {
            Regime::Intermediate => "intermediate",
            Regime::NearGap => "near_gap",
            Regime::SubGap => "sub_gap",
            Regime::Negative => "negative",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Quadrature,
    SaddlePoint,
    PhaseFreeBound,
    ContourEstimate,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Quadrature => "quadrature",
            Method::SaddlePoint => "saddle_point",
            Method::PhaseFreeBound => "phase_free_bound",
            Method::ContourEstimate => "contour_estimate",
        }
    }
}

/// Frequency windows `[lo, hi)` of the four regimes for one mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeBounds {
    pub ka: f64,
    pub rho: f64,
    pub negative: (f64, f64),
    pub sub_gap: (f64, f64),
    pub near_gap: (f64, f64),
    pub intermediate: (f64, f64),
}

impl RegimeBounds {
    pub fn new(ka: f64, rho: f64) -> Self {
        let gap = 2.0 * ka.abs();
        let a = (gap / rho).min(INITIAL_ENERGY);
        let b = (gap * rho).min(INITIAL_ENERGY);
        Self {
            ka,
            rho,
            negative: (f64::NEG_INFINITY, 0.0),
            sub_gap: (0.0, a),
            near_gap: (a, b),
            intermediate: (b, INITIAL_ENERGY),
        }
    }

    pub fn window(&self, regime: Regime) -> (f64, f64) {
        match regime {
            Regime::Intermediate => self.intermediate,
            Regime::NearGap => self.near_gap,
            Regime::SubGap => self.sub_gap,
            Regime::Negative => self.negative,
        }
    }
}

pub fn classify_regime(omega: f64, ka: f64) -> Regime {
    classify_regime_with(omega, ka, DEFAULT_RHO)
}

pub fn classify_regime_with(omega: f64, ka: f64, rho: f64) -> Regime {
    let gap = 2.0 * ka.abs();
    if omega < 0.0 {
        Regime::Negative
    } else if omega >= rho * gap {
        Regime::Intermediate
    } else if omega >= gap / rho {
        Regime::NearGap
    } else {
        Regime::SubGap
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeResult {
    pub value: Complex64,
    pub method: Method,
    pub regime: Regime,
    pub quad_error: f64,
    pub converged: bool,
    pub ka: f64,
    pub kpa: Option<f64>,
    pub omega: f64,
    /// Correction-to-leading ratio of an asymptotic form.
    pub validity: Option<f64>,
    /// Individual stationary-point contributions.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub parts: Vec<Complex64>,
}

impl AmplitudeResult {
    pub fn modulus(&self) -> f64 {
        self.value.norm()
    }

    fn zero(ka: f64, kpa: Option<f64>, omega: f64) -> Self {
        Self {
            value: Complex64::new(0.0, 0.0),
            method: Method::Quadrature,
            regime: classify_regime(omega, ka),
            quad_error: 0.0,
            converged: true,
            ka,
            kpa,
            omega,
            validity: None,
            parts: Vec::new(),
        }
    }

    fn from_quadrature(r: OscillatoryResult, ka: f64, kpa: Option<f64>, omega: f64) -> Self {
        Self {
            value: r.value,
            method: Method::Quadrature,
            regime: classify_regime(omega, ka),
            quad_error: r.error,
            converged: r.converged,
            ka,
            kpa,
            omega,
            validity: None,
            parts: Vec::new(),
        }
    }

    fn bound(value: f64, ka: f64, kpa: Option<f64>, omega: f64, method: Method) -> Self {
        Self {
            value: Complex64::new(value, 0.0),
            method,
            regime: classify_regime(omega, ka),
            quad_error: 0.0,
            converged: true,
            ka,
            kpa,
            omega,
            validity: None,
            parts: Vec::new(),
        }
    }
}

fn check_ka(ka: f64) -> Result<()> {
    if !(ka.abs() < PI) {
        return Err(Error::OutOfRange { what: "ka", value: ka, range: "(-pi, pi)" });
    }
    Ok(())
}

fn energy_checked(ka: f64, g: f64) -> Result<f64> {
    let e = single_particle_energy(ka, g);
    if e <= 0.0 {
        return Err(Error::DegenerateNormalization { g, ka });
    }
    Ok(e)
}

/// `Σ_j⟨ψ_s|σ_x^j|ψ₀⟩ ≈ 2ig sin(ka)/𝓔_k(g)` for the pair `(k, -k)`.
pub fn matrix_element_uniform(ka: f64, g: f64) -> Result<Complex64> {
    check_ka(ka)?;
    let e = energy_checked(ka, g)?;
    Ok(Complex64::new(0.0, 2.0 * g * ka.sin() / e))
}

/// Phase table of `2∫𝓔_k dt`.
pub fn pair_phase(ka: f64, schedule: &Schedule) -> PhaseTable {
    schedule.phase_table(|g| 2.0 * single_particle_energy(ka, g), ka_width(ka))
}

/// `−i∫₀ᵀ dt M(g) e^{i(−ωt + 2∫𝓔_k)}` with `M` from [`matrix_element_uniform`].
pub fn amplitude_direct_uniform(
    ka: f64,
    omega: f64,
    schedule: &Schedule,
    window: Window,
    opts: &OscillatoryOptions,
) -> Result<AmplitudeResult> {
    check_ka(ka)?;
    let sin = ka.sin();
    let energy = move |g: f64| 2.0 * single_particle_energy(ka, g);
    // −i · 2ig sin(ka)/𝓔
    let amp = move |g: f64| Complex64::new(2.0 * g * sin / single_particle_energy(ka, g), 0.0);
    let phase = pair_phase(ka, schedule);
    let r = SweepIntegral {
        schedule,
        phase: &phase,
        energy: &energy,
        amplitude: &amp,
        time_coefficient: -omega,
        window,
        g_range: (0.0, 1.0),
    }
    .integrate(opts);
    Ok(AmplitudeResult::from_quadrature(r, ka, None, omega))
}

/// Schedule for a sweep of the `n`-site ring, or `None` for `T = 0`.
pub fn ring_schedule(kind: ScheduleKind, n: usize, total_time: f64) -> Result<Option<Schedule>> {
    if total_time == 0.0 {
        return Ok(None);
    }
    let profile = GapProfile::Ising { n };
    profile.validate()?;
    Schedule::new(kind, Some(profile), total_time).map(Some)
}

/// [`amplitude_direct_uniform`] for a freshly built sweep; an empty sweep
/// gives zero.
pub fn amplitude_uniform_for(
    ka: f64,
    omega: f64,
    kind: ScheduleKind,
    n: usize,
    total_time: f64,
    window: Window,
    opts: &OscillatoryOptions,
) -> Result<AmplitudeResult> {
    match ring_schedule(kind, n, total_time)? {
        None => {
            check_ka(ka)?;
            Ok(AmplitudeResult::zero(ka, None, omega))
        }
        Some(s) => amplitude_direct_uniform(ka, omega, &s, window, opts),
    }
}

/// Real roots `(g₊, g₋)` of `2𝓔_k(g) = ω`.
pub fn saddle_points_uniform(omega: f64, ka: f64) -> Result<(f64, f64)> {
    check_ka(ka)?;
    let (s, c) = (0.5 * ka).sin_cos();
    let disc = omega * omega - 16.0 * s * s;
    if disc < 0.0 || omega < 0.0 {
        return Err(Error::ComplexSaddle { omega });
    }
    let r = disc.sqrt() / (8.0 * c);
    if r > 0.5 {
        return Err(Error::OutOfRange { what: "omega", value: omega, range: "saddles inside [0, 1]" });
    }
    Ok((0.5 + r, 0.5 - r))
}

/// Stationary-phase evaluation of [`amplitude_direct_uniform`] (sharp window).
///
/// Each root contributes `A(t*) sqrt(2π/|ψ''|) e^{iψ(t*) ± iπ/4}` with
/// `ψ = −ωt + 2∫𝓔_k` and `ψ'' = 2ġ d𝓔_k/dg`. `validity` is the size of the
/// next-order term `ġ/(ω sqrt(ω² − 4(ka)²))` relative to the smaller
/// contribution; above 1 the result is unusable.
pub fn amplitude_saddle_uniform(omega: f64, ka: f64, schedule: &Schedule) -> Result<AmplitudeResult> {
    let (gp, gm) = saddle_points_uniform(omega, ka)?;
    if !(gp > gm) {
        return Err(Error::SaddleCollision { omega });
    }
    if schedule.is_frozen() {
        return Err(Error::Config("saddle points need a moving schedule".into()));
    }
    let phase = pair_phase(ka, schedule);
    let c2 = (0.5 * ka).cos().powi(2);
    let mut parts = Vec::with_capacity(2);
    let mut correction = 0.0f64;
    for g in [gm, gp] {
        let t = schedule.time_at(g);
        let gd = schedule.g_dot_at(g);
        let e = single_particle_energy(ka, g);
        let de = 8.0 * c2 * (2.0 * g - 1.0) / e;
        let psi2 = 2.0 * gd * de;
        let a = 2.0 * g * ka.sin() / e;
        let mag = a * (2.0 * PI / psi2.abs()).sqrt();
        let arg = -omega * t + phase.at_g(g) + psi2.signum() * PI / 4.0;
        parts.push(Complex64::from_polar(mag, arg));
        let d = omega * omega - 4.0 * ka * ka;
        let corr = if d > 0.0 { gd / (omega * d.sqrt()) } else { f64::INFINITY };
        correction = correction.max(corr);
    }
    let smallest = parts.iter().map(|p| p.norm()).fold(f64::INFINITY, f64::min);
    let validity = correction / smallest;
    Ok(AmplitudeResult {
        value: parts.iter().sum(),
        method: Method::SaddlePoint,
        regime: classify_regime(omega, ka),
        quad_error: 0.0,
        converged: validity.is_finite(),
        ka,
        kpa: None,
        omega,
        validity: Some(validity),
        parts,
    })
}

/// `∫₀ᵀ F(g(t)) dt` for a non-negative envelope.
fn time_integral<F: Fn(f64) -> f64>(schedule: &Schedule, f: F) -> f64 {
    if let Some(g0) = schedule.frozen_value() {
        return f(g0) * schedule.total_time();
    }
    integrate_adaptive(|g| f(g) / schedule.g_dot_at(g), 0.0, 1.0, &[0.5], 0.0, 1e-11, 20_000).value
}

/// Phase-free bound `2|sin(ka)| ∫₀ᵀ g/𝓔_k dt` on the uniform amplitude.
pub fn amplitude_bound_near_gap(ka: f64, schedule: &Schedule) -> Result<AmplitudeResult> {
    check_ka(ka)?;
    let s = ka.sin().abs();
    let v = 2.0 * s * time_integral(schedule, |g| g / single_particle_energy(ka, g));
    Ok(AmplitudeResult::bound(v, ka, None, 2.0 * ka.abs(), Method::PhaseFreeBound))
}

/// Phase convention of the nonuniform pair amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PairPhase {
    /// `2∫𝓔_k`.
    #[default]
    Printed,
    /// `∫(𝓔_k + 𝓔_k′)`, the pair excitation energy.
    PairEnergy,
}

fn normalization(ka: f64, g: f64) -> Result<f64> {
    let e = single_particle_energy(ka, g);
    let (alpha, _) = alpha_beta(ka, g);
    let n = (2.0 * e * e + 2.0 * alpha * e).max(0.0).sqrt();
    if n < 1e-10 {
        return Err(Error::DegenerateNormalization { g, ka });
    }
    Ok(n)
}

/// `𝒞_{k,k′}(g)/𝒩_{k′}(g)` with
/// `𝒞 = 4g sin(k′a) sqrt(1/2 + (1 − 2g cos²(ka/2))/𝓔_k)`.
pub fn nonuniform_coefficient(ka: f64, kpa: f64, g: f64) -> Result<f64> {
    check_ka(ka)?;
    check_ka(kpa)?;
    let e = energy_checked(ka, g)?;
    let c2 = (0.5 * ka).cos().powi(2);
    let root = (0.5 + (1.0 - 2.0 * g * c2) / e).max(0.0).sqrt();
    Ok(4.0 * g * kpa.sin() * root / normalization(kpa, g)?)
}

fn coefficient_unchecked(ka: f64, kpa: f64, g: f64) -> f64 {
    nonuniform_coefficient(ka, kpa, g).unwrap_or(0.0)
}

#[allow(clippy::too_many_arguments)]
/// `(1/N)∫₀ᵀ dt (𝒞_{k,k′}/𝒩_{k′}) e^{i(−ωt + φ)}` with `φ` chosen by `phase`.
pub fn amplitude_direct_nonuniform(
    ka: f64,
    kpa: f64,
    n: usize,
    omega: f64,
    schedule: &Schedule,
    phase: PairPhase,
    window: Window,
    opts: &OscillatoryOptions,
) -> Result<AmplitudeResult> {
    ChainParams::new(n)?;
    nonuniform_coefficient(ka, kpa, 0.5)?;
    let inv_n = 1.0 / n as f64;
    let energy = move |g: f64| match phase {
        PairPhase::Printed => 2.0 * single_particle_energy(ka, g),
        PairPhase::PairEnergy => single_particle_energy(ka, g) + single_particle_energy(kpa, g),
    };
    let amp = move |g: f64| Complex64::new(coefficient_unchecked(ka, kpa, g) * inv_n, 0.0);
    let table = schedule.phase_table(energy, ka_width(ka).min(ka_width(kpa)));
    let r = SweepIntegral {
        schedule,
        phase: &table,
        energy: &energy,
        amplitude: &amp,
        time_coefficient: -omega,
        window,
        g_range: (0.0, 1.0),
    }
    .integrate(opts);
    Ok(AmplitudeResult::from_quadrature(r, ka, Some(kpa), omega))
}

/// The nonuniform amplitude under both phase conventions.
pub fn amplitude_nonuniform_both(
    ka: f64,
    kpa: f64,
    n: usize,
    omega: f64,
    schedule: &Schedule,
    window: Window,
    opts: &OscillatoryOptions,
) -> Result<(AmplitudeResult, AmplitudeResult)> {
    let a = amplitude_direct_nonuniform(ka, kpa, n, omega, schedule, PairPhase::Printed, window, opts)?;
    let b = amplitude_direct_nonuniform(ka, kpa, n, omega, schedule, PairPhase::PairEnergy, window, opts)?;
    Ok((a, b))
}

/// Phase-free bound `(1/N)∫₀ᵀ |𝒞/𝒩| dt`.
pub fn nonuniform_bound(ka: f64, kpa: f64, n: usize, schedule: &Schedule) -> Result<AmplitudeResult> {
    ChainParams::new(n)?;
    nonuniform_coefficient(ka, kpa, 0.5)?;
    let v = time_integral(schedule, |g| coefficient_unchecked(ka, kpa, g).abs()) / n as f64;
    let gap = ka.abs() + kpa.abs();
    Ok(AmplitudeResult::bound(v, 0.5 * gap, Some(kpa), gap, Method::PhaseFreeBound))
}

/// `Ξ(g) = 2g/sqrt(2𝓔² + 4(1 − 2g cos²(ka/2))𝓔)`.
pub fn bitflip_xi(ka: f64, g: f64) -> f64 {
    let e = single_particle_energy(ka, g);
    let c2 = (0.5 * ka).cos().powi(2);
    let d = 2.0 * e * e + 4.0 * (1.0 - 2.0 * g * c2) * e;
    if d > 0.0 {
        2.0 * g / d.sqrt()
    } else {
        0.0
    }
}

/// `sqrt(1/2 + (1 − 2g cos²(ka/2))/𝓔_k)`.
pub fn bitflip_envelope(ka: f64, g: f64) -> f64 {
    let e = single_particle_energy(ka, g);
    let c2 = (0.5 * ka).cos().powi(2);
    (0.5 + (1.0 - 2.0 * g * c2) / e).max(0.0).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BitflipAmplitude {
    /// `i e^{−ika} sin(ka) ∫ Ξ e^{−iωt} dt`.
    pub a1: AmplitudeResult,
    /// Boundary term of `a1` from one integration by parts, the `O(1/ω)` tail.
    pub a1_tail: Option<Complex64>,
    /// `e^{ika} ∫ sqrt(...) e^{i(−ωt + 2∫𝓔_k)} dt`.
    pub a2: AmplitudeResult,
}

/// Amplitudes of the single-site `σᶻ` channel into the one-quasi-particle
/// state `k`, per unit `λ/√N`.
pub fn amplitude_bitflip(
    ka: f64,
    omega: f64,
    schedule: &Schedule,
    window: Window,
    opts: &OscillatoryOptions,
) -> Result<BitflipAmplitude> {
    check_ka(ka)?;
    let pre1 = Complex64::new(0.0, 1.0) * Complex64::from_polar(1.0, -ka) * ka.sin();
    let pre2 = Complex64::from_polar(1.0, ka);
    let zero = |_g: f64| 0.0;
    let amp1 = move |g: f64| pre1 * bitflip_xi(ka, g);
    let table0 = schedule.phase_table(zero, 1.0);
    let r1 = SweepIntegral {
        schedule,
        phase: &table0,
        energy: &zero,
        amplitude: &amp1,
        time_coefficient: -omega,
        window,
        g_range: (0.0, 1.0),
    }
    .integrate(opts);
    let total = schedule.total_time();
    let a1_tail = (omega != 0.0).then(|| {
        let (g0, g1) = schedule.frozen_value().map_or((0.0, 1.0), |g| (g, g));
        let w0 = window.weight(0.0, total);
        let w1 = window.weight(total, total);
        let boundary = amp1(g1) * w1 * Complex64::from_polar(1.0, -omega * total) - amp1(g0) * w0;
        boundary / Complex64::new(0.0, -omega)
    });
    let energy = move |g: f64| 2.0 * single_particle_energy(ka, g);
    let amp2 = move |g: f64| pre2 * bitflip_envelope(ka, g);
    let table = pair_phase(ka, schedule);
    let r2 = SweepIntegral {
        schedule,
        phase: &table,
        energy: &energy,
        amplitude: &amp2,
        time_coefficient: -omega,
        window,
        g_range: (0.0, 1.0),
    }
    .integrate(opts);
    Ok(BitflipAmplitude {
        a1: AmplitudeResult::from_quadrature(r1, ka, None, omega),
        a1_tail,
        a2: AmplitudeResult::from_quadrature(r2, ka, None, omega),
    })
}

/// Phase-free bounds `(|sin ka| ∫Ξ dt, ∫ sqrt(...) dt)` of the two bitflip terms.
pub fn bitflip_bounds(ka: f64, schedule: &Schedule) -> Result<(f64, f64)> {
    check_ka(ka)?;
    let b1 = ka.sin().abs() * time_integral(schedule, |g| bitflip_xi(ka, g));
    let b2 = time_integral(schedule, |g| bitflip_envelope(ka, g));
    Ok((b1, b2))
}

/// Per-mode bitflip amplitude scale `(|𝔄₁| + ∫|𝔄₂ integrand|)/√N`: the
/// Fourier term by quadrature and the second term by its phase-free bound.
pub fn bitflip_mode_amplitude(
    ka: f64,
    n: usize,
    omega: f64,
    schedule: &Schedule,
    opts: &OscillatoryOptions,
) -> Result<f64> {
    ChainParams::new(n)?;
    let a = amplitude_bitflip(ka, omega, schedule, Window::Sharp, opts)?;
    let (_, b2) = bitflip_bounds(ka, schedule)?;
    Ok((a.a1.modulus() + b2) / (n as f64).sqrt())
}

/// Final state reached by one application of the coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FinalState {
    /// Quasi-particles at `k` and `−k′`.
    Pair { ka: f64, kpa: f64 },
    Single { ka: f64 },
}

/// Amplitude of `channel` into `state`; selection-rule-forbidden
/// combinations are exactly zero.
pub fn channel_amplitude(
    channel: &Channel,
    n: usize,
    state: FinalState,
    omega: f64,
    schedule: &Schedule,
    window: Window,
    opts: &OscillatoryOptions,
) -> Result<AmplitudeResult> {
    channel.validate()?;
    match (channel.kind, state) {
        (ChannelKind::UniformX, FinalState::Pair { ka, kpa }) if ka == kpa => {
            amplitude_direct_uniform(ka, omega, schedule, window, opts)
        }
        (ChannelKind::NonuniformX, FinalState::Pair { ka, kpa }) => {
            amplitude_direct_nonuniform(ka, kpa, n, omega, schedule, PairPhase::Printed, window, opts)
        }
        (ChannelKind::SingleSiteZ, FinalState::Single { ka }) => {
            let a = amplitude_bitflip(ka, omega, schedule, window, opts)?;
            let scale = 1.0 / (n as f64).sqrt();
            let mut r = a.a2.clone();
            r.value = (a.a1.value + a.a2.value) * scale;
            r.quad_error = (a.a1.quad_error + a.a2.quad_error) * scale;
            r.converged = a.a1.converged && a.a2.converged;
            Ok(r)
        }
        (_, FinalState::Pair { ka, kpa }) => Ok(AmplitudeResult::zero(ka, Some(kpa), omega)),
        (_, FinalState::Single { ka }) => Ok(AmplitudeResult::zero(ka, None, omega)),
    }
}

/// Share of the uniform amplitude accumulated between the saddle points
/// widened by `delta`: `|I_in|/(|I_in| + |I_left| + |I_right|)`.
pub fn locality_fraction(
    ka: f64,
    omega: f64,
    schedule: &Schedule,
    window: Window,
    delta: f64,
    opts: &OscillatoryOptions,
) -> Result<f64> {
    let (gp, gm) = saddle_points_uniform(omega, ka)?;
    let sin = ka.sin();
    let energy = move |g: f64| 2.0 * single_particle_energy(ka, g);
    let amp = move |g: f64| Complex64::new(2.0 * g * sin / single_particle_energy(ka, g), 0.0);
    let phase = pair_phase(ka, schedule);
    let (lo, hi) = ((gm - delta).max(0.0), (gp + delta).min(1.0));
    let part = |range: (f64, f64)| {
        if range.1 <= range.0 {
            return 0.0;
        }
        SweepIntegral {
            schedule,
            phase: &phase,
            energy: &energy,
            amplitude: &amp,
            time_coefficient: -omega,
            window,
            g_range: range,
        }
        .integrate(opts)
        .value
        .norm()
    };
    let inside = part((lo, hi));
    let outside = part((0.0, lo)) + part((hi, 1.0));
    Ok(inside / (inside + outside))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub ka: f64,
    pub omega: f64,
    pub times: Vec<f64>,
    pub moduli: Vec<f64>,
    pub converged: bool,
    /// `−d ln|𝔄|/dT`.
    pub rate: f64,
    /// `(ka)²/2` for `ω ≥ 0`, `π(ka)²/16` for `ω < 0`.
    pub predicted: f64,
    pub fit: FitResult,
}

/// Fits `ln|𝔄|` against `T` for the uniform amplitude on a fixed schedule
/// shape.
pub fn decay_rate(
    ka: f64,
    omega: f64,
    kind: ScheduleKind,
    n: usize,
    times: &[f64],
    window: Window,
    opts: &OscillatoryOptions,
) -> Result<DecayFit> {
    let results: Vec<AmplitudeResult> = times
        .par_iter()
        .map(|&t| amplitude_uniform_for(ka, omega, kind, n, t, window, opts))
        .collect::<Result<_>>()?;
    let moduli: Vec<f64> = results.iter().map(|r| r.modulus()).collect();
    let logs: Vec<f64> = moduli.iter().map(|m| m.ln()).collect();
    let fit = fit_linear(times, &logs)?;
    let predicted = if omega < 0.0 { PI * ka * ka / 16.0 } else { 0.5 * ka * ka };
    Ok(DecayFit {
        ka,
        omega,
        times: times.to_vec(),
        converged: results.iter().all(|r| r.converged),
        moduli,
        rate: -fit.exponent,
        predicted,
        fit,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModeSet {
    /// Every positive momentum of the grid.
    All,
    /// The `count` smallest positive momenta.
    Lowest { count: usize },
    List { ka: Vec<f64> },
}

impl ModeSet {
    pub fn momenta(&self, n: usize) -> Result<Vec<f64>> {
        let positive: Vec<f64> = momentum_grid(ChainParams::new(n)?)?.into_iter().filter(|&k| k > 0.0).collect();
        Ok(match self {
            ModeSet::All => positive,
            ModeSet::Lowest { count } => positive.into_iter().take(*count).collect(),
            ModeSet::List { ka } => {
                for &k in ka {
                    check_ka(k)?;
                }
                ka.clone()
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TotalErrorOptions {
    pub rho: f64,
    /// Frequencies sampled in each intermediate window.
    pub omega_points: usize,
    pub window: Window,
    pub max_phase_step: f64,
    pub rel_tol: f64,
}

impl Default for TotalErrorOptions {
    fn default() -> Self {
        Self { rho: DEFAULT_RHO, omega_points: 6, window: Window::Sharp, max_phase_step: 0.5, rel_tol: 1e-6 }
    }
}

impl TotalErrorOptions {
    fn quad(&self) -> OscillatoryOptions {
        OscillatoryOptions { max_phase_step: self.max_phase_step, rel_tol: self.rel_tol, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeError {
    pub ka: f64,
    pub kpa: Option<f64>,
    /// Largest amplitude per regime, in [`Regime::ALL`] order.
    pub amplitude: [f64; 4],
    /// `∫|f|` per regime window.
    pub weight: [f64; 4],
    pub method: [Method; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TotalError {
    pub total: f64,
    /// Contribution per regime, in [`Regime::ALL`] order.
    pub by_regime: [f64; 4],
    pub modes: Vec<ModeError>,
    pub nonconverged: usize,
}

/// `λ Σ_modes Σ_regimes (max regime amplitude)·∫_regime |f| dω`.
///
/// Intermediate amplitudes are quadrature maxima over a frequency sample,
/// near-gap amplitudes phase-free bounds, sub-gap and negative amplitudes
/// the exponential suppression factors `e^{−T(ka)²/2}` and `e^{−πT(ka)²/16}`.
pub fn total_error(
    channel: &Channel,
    n: usize,
    schedule: &Schedule,
    f: &SpectralFunction,
    modes: &ModeSet,
    opts: &TotalErrorOptions,
) -> Result<TotalError> {
    channel.validate()?;
    f.validate()?;
    let momenta = modes.momenta(n)?;
    let states: Vec<(f64, Option<f64>)> = match channel.kind {
        ChannelKind::NonuniformX => {
            momenta.iter().flat_map(|&k| momenta.iter().map(move |&kp| (k, Some(kp)))).collect()
        }
        _ => momenta.iter().map(|&k| (k, None)).collect(),
    };
    let total_time = schedule.total_time();
    let quad = opts.quad();
    let per_mode: Vec<(ModeError, usize)> = states
        .par_iter()
        .map(|&(ka, kpa)| -> Result<(ModeError, usize)> {
            let gap_ka = kpa.map_or(ka.abs(), |kp| 0.5 * (ka.abs() + kp.abs()));
            let bounds = RegimeBounds::new(gap_ka, opts.rho);
            let mut amplitude = [0.0; 4];
            let mut weight = [0.0; 4];
            let mut method = [Method::Quadrature; 4];
            let mut nonconverged = 0;
            for (i, regime) in Regime::ALL.into_iter().enumerate() {
                let (lo, hi) = bounds.window(regime);
                weight[i] = if hi > lo { f.weight_in(lo, hi)? } else { 0.0 };
                if weight[i] == 0.0 {
                    method[i] = Method::PhaseFreeBound;
                    continue;
                }
                let (a, m) = match regime {
                    Regime::Intermediate => {
                        let mut best = 0.0f64;
                        let pts = opts.omega_points.max(1);
                        for j in 0..pts {
                            let omega = lo + (hi - lo) * (j as f64 + 0.5) / pts as f64;
                            let (v, ok) = match (channel.kind, kpa) {
                                (ChannelKind::UniformX, _) => {
                                    let r = amplitude_direct_uniform(ka, omega, schedule, opts.window, &quad)?;
                                    (r.modulus(), r.converged)
                                }
                                (ChannelKind::NonuniformX, Some(kp)) => {
                                    let r = amplitude_direct_nonuniform(
                                        ka, kp, n, omega, schedule, PairPhase::Printed, opts.window, &quad,
                                    )?;
                                    (r.modulus(), r.converged)
                                }
                                _ => {
                                    let r = amplitude_bitflip(ka, omega, schedule, opts.window, &quad)?;
                                    let v = (r.a1.modulus() + r.a2.modulus()) / (n as f64).sqrt();
                                    (v, r.a1.converged && r.a2.converged)
                                }
                            };
                            if !ok {
                                nonconverged += 1;
                            }
                            best = best.max(v);
                        }
                        (best, Method::Quadrature)
                    }
                    Regime::NearGap => {
                        let v = match (channel.kind, kpa) {
                            (ChannelKind::UniformX, _) => amplitude_bound_near_gap(ka, schedule)?.modulus(),
                            (ChannelKind::NonuniformX, Some(kp)) => nonuniform_bound(ka, kp, n, schedule)?.modulus(),
                            _ => {
                                let (b1, b2) = bitflip_bounds(ka, schedule)?;
                                (b1 + b2) / (n as f64).sqrt()
                            }
                        };
                        (v, Method::PhaseFreeBound)
                    }
                    Regime::SubGap => ((-0.5 * total_time * gap_ka * gap_ka).exp(), Method::ContourEstimate),
                    Regime::Negative => ((-PI * total_time * gap_ka * gap_ka / 16.0).exp(), Method::ContourEstimate),
                };
                amplitude[i] = a;
                method[i] = m;
            }
            Ok((ModeError { ka, kpa, amplitude, weight, method }, nonconverged))
        })
        .collect::<Result<_>>()?;
    let mut by_regime = [0.0; 4];
    let mut nonconverged = 0;
    let mut modes_out = Vec::with_capacity(per_mode.len());
    for (m, nc) in per_mode {
        for i in 0..4 {
            by_regime[i] += channel.lambda * m.amplitude[i] * m.weight[i];
        }
        nonconverged += nc;
        modes_out.push(m);
    }
    Ok(TotalError { total: by_regime.iter().sum(), by_regime, modes: modes_out, nonconverged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn regimes() {
        assert_eq!(classify_regime(-0.1, 0.3), Regime::Negative);
        assert_eq!(classify_regime(0.6, 0.3), Regime::NearGap);
        assert_eq!(classify_regime(0.5, PI / 64.0), Regime::Intermediate);
        assert_eq!(classify_regime(0.0, 0.3), Regime::SubGap);
        let b = RegimeBounds::new(PI / 64.0, 3.0);
        assert_eq!(b.sub_gap.1, b.near_gap.0);
        assert_eq!(b.near_gap.1, b.intermediate.0);
        assert_eq!(b.intermediate.1, 2.0);
    }

    #[test]
    fn matrix_element_values() {
        assert_eq!(matrix_element_uniform(0.4, 0.0).unwrap().norm(), 0.0);
        let a = matrix_element_uniform(0.7, 0.3).unwrap();
        let b = matrix_element_uniform(-0.7, 0.3).unwrap();
        assert_relative_eq!(a.im, -b.im, epsilon = 1e-15);
        let m = matrix_element_uniform(PI / 2.0, 0.5).unwrap();
        assert_relative_eq!(m.re, 0.0);
        assert_relative_eq!(m.im, 0.5f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn saddle_roots() {
        let (gp, gm) = saddle_points_uniform(2.0, 1e-9).unwrap();
        assert_relative_eq!(gp, 0.75, epsilon = 1e-9);
        assert_relative_eq!(gm, 0.25, epsilon = 1e-9);
        let ka: f64 = 0.3;
        let (gp, gm) = saddle_points_uniform(4.0 * (0.5 * ka).sin(), ka).unwrap();
        assert_relative_eq!(gp, 0.5, epsilon = 1e-7);
        assert_relative_eq!(gm, 0.5, epsilon = 1e-7);
        let ka = PI / 16.0;
        let (gp, gm) = saddle_points_uniform(1.0, ka).unwrap();
        for g in [gp, gm] {
            assert!((2.0 * single_particle_energy(ka, g) - 1.0).abs() < 1e-12);
        }
        assert!(matches!(saddle_points_uniform(0.01, 0.3), Err(Error::ComplexSaddle { .. })));
    }

    #[test]
    fn empty_and_frozen_sweeps() {
        let opts = OscillatoryOptions::default();
        let r = amplitude_uniform_for(0.3, 0.5, ScheduleKind::Linear, 16, 0.0, Window::Sharp, &opts).unwrap();
        assert_eq!(r.modulus(), 0.0);
        let s = Schedule::frozen(0.0, 50.0).unwrap();
        let r = amplitude_direct_nonuniform(0.3, 0.5, 16, 0.4, &s, PairPhase::Printed, Window::Sharp, &opts).unwrap();
        assert!(r.modulus() < 1e-14);
        // g ≡ 0: 𝔄₁ = 0, 𝔄₂ = ∫ e^{i(4−ω)t} dt since 2𝓔_k(0) = 4 and the envelope is 1
        let omega = 0.6;
        let b = amplitude_bitflip(0.4, omega, &s, Window::Sharp, &opts).unwrap();
        assert!(b.a1.modulus() < 1e-14);
        let k = 4.0 - omega;
        let exact = Complex64::from_polar(1.0, 0.4) * (Complex64::from_polar(1.0, k * 50.0) - 1.0) / Complex64::new(0.0, k);
        assert!((b.a2.value - exact).norm() < 1e-9);
        assert!(b.a2.modulus() <= 2.0 / (2.0 - omega));
    }

    #[test]
    fn nonuniform_diagonal_matches_uniform_shape() {
        let mut state = 12345u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            let ka = 0.05 + 3.0 * next();
            let g = next();
            let c = nonuniform_coefficient(ka, ka, g).unwrap();
            let m = matrix_element_uniform(ka, g).unwrap().im;
            if m.abs() > 1e-12 {
                assert!((c / m - 1.0).abs() < 1e-10, "{ka} {g}");
            }
        }
    }

    #[test]
    fn near_gap_bound_symmetric_and_linear_in_t() {
        let s1 = Schedule::new(ScheduleKind::Linear, None, 100.0).unwrap();
        let s2 = Schedule::new(ScheduleKind::Linear, None, 200.0).unwrap();
        let a = amplitude_bound_near_gap(0.2, &s1).unwrap().modulus();
        let b = amplitude_bound_near_gap(-0.2, &s1).unwrap().modulus();
        let c = amplitude_bound_near_gap(0.2, &s2).unwrap().modulus();
        assert_relative_eq!(a, b, epsilon = 1e-12);
        assert_relative_eq!(c, 2.0 * a, epsilon = 1e-10);
    }

    #[test]
    fn selection_rules() {
        let s = Schedule::new(ScheduleKind::Linear, None, 40.0).unwrap();
        let opts = OscillatoryOptions::default();
        let ux = Channel::new(ChannelKind::UniformX, 1.0).unwrap();
        let z = Channel::new(ChannelKind::SingleSiteZ, 1.0).unwrap();
        let single = FinalState::Single { ka: 0.4 };
        let pair = FinalState::Pair { ka: 0.4, kpa: 0.4 };
        assert!(channel_amplitude(&ux, 8, single, 0.5, &s, Window::Sharp, &opts).unwrap().modulus() < 1e-10);
        assert!(channel_amplitude(&z, 8, pair, 0.5, &s, Window::Sharp, &opts).unwrap().modulus() < 1e-10);
        assert!(channel_amplitude(&ux, 8, pair, 0.5, &s, Window::Sharp, &opts).unwrap().modulus() > 1e-3);
        assert!(channel_amplitude(&z, 8, single, 0.5, &s, Window::Sharp, &opts).unwrap().modulus() > 1e-3);
        assert!(Channel::new(ChannelKind::UniformX, -1.0).is_err());
    }

    #[test]
    fn zero_bath_gives_zero_error() {
        let s = Schedule::new(ScheduleKind::Linear, None, 40.0).unwrap();
        let f = SpectralFunction::DiracComb { lines: vec![] };
        let ch = Channel::new(ChannelKind::UniformX, 1.0).unwrap();
        let e = total_error(&ch, 8, &s, &f, &ModeSet::All, &TotalErrorOptions::default()).unwrap();
        assert_eq!(e.total, 0.0);
    }
}
