//! Two-level treatment of the adiabatic Grover search coupled to a bath.
//!
//! The excitation amplitude at bath frequency `ω` is
//! `I(ω) = ∫₀ᵀ M(t) e^{i(ωt + ∫ΔE)} dt` with `M = (1-g)/(√D ΔE)`, so the
//! resonant frequencies are `ω = -ΔE(g) ∈ [-1, -1/√D]`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bath::SpectralFunction;
use crate::error::{Error, Result};
use crate::numerics::oscillatory::{OscillatoryOptions, OscillatoryResult};
use crate::numerics::quad::{integrate_batched, KahanSum};
use crate::schedules::{GapProfile, PhaseTable, Schedule};
use crate::sweep::{SweepIntegral, Window};

/// Relative weights of the `xx`, `xz`, `zx`, `zz` bath cross-correlations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelWeights {
    pub xx: f64,
    pub xz: f64,
    pub zx: f64,
    pub zz: f64,
}

impl Default for ChannelWeights {
    fn default() -> Self {
        Self { xx: 1.0, xz: 0.0, zx: 0.0, zz: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroverParams {
    pub n_qubits: usize,
    /// Marked bit string `w`, most significant qubit first.
    pub marked: Vec<bool>,
    pub lambda: f64,
    pub weights: ChannelWeights,
}

impl GroverParams {
    pub fn new(n_qubits: usize, marked: Option<&str>, lambda: f64) -> Result<Self> {
        if !(1..=40).contains(&n_qubits) {
            return Err(Error::OutOfRange { what: "n_qubits", value: n_qubits as f64, range: "[1, 40]" });
        }
        if !(lambda >= 0.0) {
            return Err(Error::OutOfRange { what: "lambda", value: lambda, range: "[0, inf)" });
        }
        let marked = match marked {
            None => vec![false; n_qubits],
            Some(s) => parse_bits(s, n_qubits)?,
        };
        Ok(Self { n_qubits, marked, lambda, weights: ChannelWeights::default() })
    }

    pub fn dim(&self) -> f64 {
        2f64.powi(self.n_qubits as i32)
    }

    pub fn profile(&self) -> GapProfile {
        GapProfile::Grover { n_qubits: self.n_qubits }
    }

    /// Site-averaged channel factor `xx + (xz+zx)⟨(-1)^{w_j+1}⟩ + zz`.
    pub fn channel_factor(&self) -> f64 {
        let mean_sign = self.marked.iter().map(|&b| if b { 1.0 } else { -1.0 }).sum::<f64>() / self.n_qubits as f64;
        let w = self.weights;
        w.xx + (w.xz + w.zx) * mean_sign + w.zz
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.lambda > 0.1 {
            out.push(format!("lambda = {} is not small; first-order response may be inaccurate", self.lambda));
        }
        if self.dim() < 16.0 {
            out.push(format!("D = {} is below the large-D regime of the matrix-element envelope", self.dim()));
        }
        out
    }
}

pub fn parse_bits(s: &str, n: usize) -> Result<Vec<bool>> {
    if s.len() != n {
        return Err(Error::MissingMarkedState { expected: n, got: s.len() });
    }
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(Error::Config(format!("marked state {s:?} is not a bit string"))),
        })
        .collect()
}

/// `sqrt(1 - 4g(1-g)(1 - 1/D))`.
pub fn grover_gap(g: f64, d: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&g) {
        return Err(Error::OutOfRange { what: "g", value: g, range: "[0, 1]" });
    }
    if !(d >= 2.0) {
        return Err(Error::OutOfRange { what: "D", value: d, range: "[2, inf)" });
    }
    Ok(gap_unchecked(g, d))
}

fn gap_unchecked(g: f64, d: f64) -> f64 {
    let x = 2.0 * g - 1.0;
    (1.0 / d + (1.0 - 1.0 / d) * x * x).sqrt()
}

/// `(1-g)/(√D ΔE)`, the modulus of `⟨w⊥|σ_x^j|w⟩`.
pub fn envelope(g: f64, d: f64) -> f64 {
    (1.0 - g) / (d.sqrt() * gap_unchecked(g, d))
}

/// Amplitudes along one Grover sweep.
pub struct GroverSweep<'a> {
    pub schedule: &'a Schedule,
    pub d: f64,
    phase: PhaseTable,
}

impl<'a> GroverSweep<'a> {
    pub fn new(schedule: &'a Schedule, d: f64) -> Result<Self> {
        grover_gap(0.5, d)?;
        let width = 0.25 / d.sqrt();
        let phase = schedule.phase_table(move |g| gap_unchecked(g, d), width);
        Ok(Self { schedule, d, phase })
    }

    /// `⟨w⊥|σ_x^j|w⟩ ≈ -(1-g)/(√D ΔE) e^{-i∫ΔE}` at time `t`.
    pub fn matrix_element_x(&self, t: f64) -> Result<Complex64> {
        let (g, _) = self.schedule.evaluate(t)?;
        let phi = self.phase.at_time(t, g);
        Ok(-envelope(g, self.d) * Complex64::from_polar(1.0, -phi))
    }

    /// `I(ω)` per unit λ.
    pub fn amplitude(&self, omega: f64, window: Window, opts: &OscillatoryOptions) -> OscillatoryResult {
        let d = self.d;
        let energy = move |g: f64| gap_unchecked(g, d);
        let amp = move |g: f64| Complex64::new(envelope(g, d), 0.0);
        SweepIntegral {
            schedule: self.schedule,
            phase: &self.phase,
            energy: &energy,
            amplitude: &amp,
            time_coefficient: omega,
            window,
            g_range: (0.0, 1.0),
        }
        .integrate(opts)
    }
}

pub fn matrix_element_x(g: f64, t: f64, d: f64, schedule: &Schedule) -> Result<Complex64> {
    let sweep = GroverSweep::new(schedule, d)?;
    let (gt, _) = schedule.evaluate(t)?;
    if (gt - g).abs() > 1e-9 {
        return Err(Error::Config(format!("g = {g} does not match g(t) = {gt}")));
    }
    sweep.matrix_element_x(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorQuadOptions {
    pub window: Window,
    /// Target relative error of the ω integral.
    pub rel_tol: f64,
    pub max_panels: usize,
    pub amplitude: OscillatoryOptionsSer,
}

/// Serializable subset of the amplitude quadrature options.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatoryOptionsSer {
    pub max_phase_step: f64,
    pub rel_tol: f64,
    pub noise_floor: f64,
}

impl From<OscillatoryOptionsSer> for OscillatoryOptions {
    fn from(o: OscillatoryOptionsSer) -> Self {
        OscillatoryOptions {
            max_phase_step: o.max_phase_step,
            rel_tol: o.rel_tol,
            noise_floor: o.noise_floor,
            ..Default::default()
        }
    }
}

impl Default for ErrorQuadOptions {
    fn default() -> Self {
        Self {
            window: Window::erf(),
            rel_tol: 1e-4,
            max_panels: 200_000,
            amplitude: OscillatoryOptionsSer { max_phase_step: 0.5, rel_tol: 1e-7, noise_floor: 1e-10 },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroverError {
    pub value: f64,
    /// Gauss–Kronrod error estimate of the ω integral.
    pub quad_error: f64,
    pub converged: bool,
    pub omega_range: (f64, f64),
    pub omega_panels: usize,
}

/// `λ² W ∫dω f(ω) |I(ω)|²` plus the Dirac lines of `f`.
pub fn error_probability(
    params: &GroverParams,
    schedule: &Schedule,
    f: &SpectralFunction,
    opts: &ErrorQuadOptions,
) -> Result<GroverError> {
    f.validate()?;
    let d = params.dim();
    let sweep = GroverSweep::new(schedule, d)?;
    let amp_opts: OscillatoryOptions = opts.amplitude.into();
    let scale = params.lambda * params.lambda * params.channel_factor();
    let total = schedule.total_time();

    let mut converged = true;
    let mut lines_sum = KahanSum::new();
    for (w0, weight) in f.lines() {
        let r = sweep.amplitude(w0, opts.window, &amp_opts);
        converged &= r.converged;
        lines_sum.add(weight * r.value.norm_sqr());
    }

    let dmin = gap_unchecked(0.5, d);
    let reach = match opts.window {
        Window::Erf { ramp } => (36.0 / (ramp * total)).min(50.0),
        Window::Sharp => 50.0,
    };
    let (mut lo, mut hi) = (-1.0 - reach, -dmin + reach);
    if let Some((s0, s1)) = f.support() {
        lo = lo.max(s0);
        hi = hi.min(s1);
    }
    let mut result = GroverError { value: 0.0, quad_error: 0.0, converged, omega_range: (lo, hi), omega_panels: 0 };
    if f.has_density() && hi > lo {
        let mut breaks = vec![lo, hi];
        breaks.extend([-1.0, -dmin, 0.0].into_iter().filter(|&w| w > lo && w < hi));
        breaks.sort_by(f64::total_cmp);
        let width = (8.0 / total).min(1.0);
        let mut edges = vec![lo];
        for w in breaks.windows(2) {
            let n = ((w[1] - w[0]) / width).ceil().max(1.0) as usize;
            edges.extend((1..=n).map(|j| if j == n { w[1] } else { w[0] + (w[1] - w[0]) * j as f64 / n as f64 }));
        }
        let failed = std::sync::atomic::AtomicBool::new(false);
        let bad = std::sync::Mutex::new(None);
        let integrand = |w: f64| match f.evaluate(w) {
            Ok(0.0) => 0.0,
            Ok(fw) => {
                let r = sweep.amplitude(w, opts.window, &amp_opts);
                if !r.converged {
                    failed.store(true, std::sync::atomic::Ordering::Relaxed);
                }
                fw * r.value.norm_sqr()
            }
            Err(e) => {
                bad.lock().unwrap().get_or_insert(e);
                0.0
            }
        };
        let r = integrate_batched(integrand, &edges, 0.0, opts.rel_tol, opts.max_panels);
        if let Some(e) = bad.into_inner().unwrap() {
            return Err(e);
        }
        result.value = r.value;
        result.quad_error = r.error;
        result.omega_panels = edges.len() - 1;
        result.converged = converged && r.converged && !failed.into_inner();
    }
    result.value = scale * (result.value + lines_sum.value());
    result.quad_error *= scale;
    Ok(result)
}

/// `λ² W f(m ΔE_min)/ΔE_min`.
pub fn error_estimate(params: &GroverParams, f: &SpectralFunction, multiplier: f64) -> Result<f64> {
    if !(0.5..=2.0).contains(&multiplier) {
        return Err(Error::OutOfRange { what: "multiplier", value: multiplier, range: "[0.5, 2]" });
    }
    let dmin = gap_unchecked(0.5, params.dim());
    let fw = f.evaluate(multiplier * dmin)?;
    Ok(params.lambda * params.lambda * params.channel_factor() * fw / dmin)
}
