//! Time integrals along a sweep,
//! `∫₀ᵀ a(g(t)) w(t) e^{i(c t + Φ(t))} dt` with `Φ(t) = ∫₀ᵗ E(g(t')) dt'`,
//! evaluated in `g` where the phase rate `(c + E)/ġ` is known exactly.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::numerics::oscillatory::{integrate, Oscillatory, OscillatoryOptions, OscillatoryResult};
use crate::schedules::{PhaseTable, Schedule};

/// Time window applied to the integrand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Window {
    #[default]
    Sharp,
    /// `½[erf((t-t₁)/σ) - erf((t-T+t₁)/σ)]` with `t₁ = ramp·T`, `σ = t₁/6`.
    Erf { ramp: f64 },
}

impl Window {
    pub const DEFAULT_RAMP: f64 = 0.12;

    pub fn erf() -> Self {
        Window::Erf { ramp: Self::DEFAULT_RAMP }
    }

    pub fn weight(&self, t: f64, total: f64) -> f64 {
        match *self {
            Window::Sharp => 1.0,
            Window::Erf { ramp } => {
                let t1 = ramp * total;
                let sigma = t1 / 6.0;
                0.5 * (libm::erf((t - t1) / sigma) - libm::erf((t - total + t1) / sigma))
            }
        }
    }
}

/// Table cells merged into one base cell of the quadrature.
const BASE_STRIDE: usize = 8;

pub struct SweepIntegral<'a> {
    pub schedule: &'a Schedule,
    /// `Φ` accumulated from `energy`.
    pub phase: &'a PhaseTable,
    pub energy: &'a (dyn Fn(f64) -> f64 + Sync),
    pub amplitude: &'a (dyn Fn(f64) -> Complex64 + Sync),
    /// Coefficient `c` of `t` in the phase.
    pub time_coefficient: f64,
    pub window: Window,
    /// Restriction of the `g` range (ignored for frozen schedules).
    pub g_range: (f64, f64),
}

struct InG<'s, 'a>(&'s SweepIntegral<'a>);
struct InT<'s, 'a>(&'s SweepIntegral<'a>, f64);

impl Oscillatory for InG<'_, '_> {
    fn eval(&self, g: f64) -> (Complex64, f64) {
        let s = self.0;
        let t = s.schedule.time_at(g);
        let w = s.window.weight(t, s.schedule.total_time());
        let amp = (s.amplitude)(g) * (w / s.schedule.g_dot_at(g));
        (amp, s.time_coefficient * t + s.phase.at_g(g))
    }

    fn phase_rate(&self, g: f64) -> f64 {
        let s = self.0;
        ((s.energy)(g) + s.time_coefficient).abs() / s.schedule.g_dot_at(g)
    }
}

impl Oscillatory for InT<'_, '_> {
    fn eval(&self, t: f64) -> (Complex64, f64) {
        let s = self.0;
        let w = s.window.weight(t, s.schedule.total_time());
        ((s.amplitude)(self.1) * w, s.time_coefficient * t + s.phase.at_time(t, self.1))
    }

    fn phase_rate(&self, _t: f64) -> f64 {
        let s = self.0;
        ((s.energy)(self.1) + s.time_coefficient).abs()
    }
}

impl SweepIntegral<'_> {
    pub fn integrate(&self, opts: &OscillatoryOptions) -> OscillatoryResult {
        let total = self.schedule.total_time();
        if let Some(g0) = self.schedule.frozen_value() {
            let pieces = 64;
            let edges: Vec<f64> = (0..=pieces).map(|i| total * i as f64 / pieces as f64).collect();
            return integrate(&InT(self, g0), &edges, opts);
        }
        let (lo, hi) = (self.g_range.0.max(0.0), self.g_range.1.min(1.0));
        if !(hi > lo) {
            return integrate(&InG(self), &[lo, lo], opts);
        }
        let mut edges = vec![lo];
        edges.extend(self.phase.nodes().iter().step_by(BASE_STRIDE).copied().filter(|&g| g > lo && g < hi));
        edges.push(hi);
        integrate(&InG(self), &edges, opts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedules::ScheduleKind;
    use approx::assert_relative_eq;

    #[test]
    fn erf_window_shape() {
        let w = Window::erf();
        assert!(w.weight(0.0, 100.0) < 1e-15);
        assert!(w.weight(100.0, 100.0) < 1e-15);
        assert_relative_eq!(w.weight(50.0, 100.0), 1.0, epsilon = 1e-15);
        assert_relative_eq!(w.weight(12.0, 100.0), 0.5, epsilon = 1e-12);
        assert_eq!(Window::Sharp.weight(0.0, 1.0), 1.0);
    }

    #[test]
    fn constant_energy_integral_is_exact() {
        // linear sweep, E = 1, a = 1: ∫₀ᵀ e^{i(c+1)t} dt
        let total = 300.0;
        let s = Schedule::new(ScheduleKind::Linear, None, total).unwrap();
        let energy = |_g: f64| 1.0;
        let phase = s.phase_table(energy, 1.0);
        let amp = |_g: f64| Complex64::new(1.0, 0.0);
        let c = -0.3;
        let si = SweepIntegral {
            schedule: &s,
            phase: &phase,
            energy: &energy,
            amplitude: &amp,
            time_coefficient: c,
            window: Window::Sharp,
            g_range: (0.0, 1.0),
        };
        let r = si.integrate(&OscillatoryOptions::default());
        let k = c + 1.0;
        let exact = (Complex64::from_polar(1.0, k * total) - 1.0) / Complex64::new(0.0, k);
        assert!(r.converged);
        assert!((r.value - exact).norm() < 1e-9, "{} {}", r.value, exact);

        let frozen = Schedule::frozen(0.2, total).unwrap();
        let phase = frozen.phase_table(energy, 1.0);
        let sf = SweepIntegral { schedule: &frozen, phase: &phase, ..si };
        let r = sf.integrate(&OscillatoryOptions::default());
        assert!((r.value - exact).norm() < 1e-9);
    }
}
