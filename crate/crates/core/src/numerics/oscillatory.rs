//! Oscillatory integrals `∫ A(x) e^{iψ(x)} dx` with a slowly varying
//! amplitude and a large, smoothly varying phase.
//!
//! The domain is cut into panels across which the phase advances by at most
//! `max_phase_step` radians; each panel is integrated with a Gauss–Legendre
//! rule on the full integrand. The error estimate is the change under halving
//! `max_phase_step`.

use num_complex::Complex64;

use super::quad::{ComplexSum, GaussLegendre, KahanSum};

/// Integrand with a separately exposed phase rate `|dψ/dx|`.
pub trait Oscillatory: Sync {
    /// `(A(x), ψ(x))`.
    fn eval(&self, x: f64) -> (Complex64, f64);
    /// Upper estimate of `|dψ/dx|` near `x`.
    fn phase_rate(&self, x: f64) -> f64;
}

#[derive(Debug, Clone, Copy)]
pub struct OscillatoryOptions {
    pub max_phase_step: f64,
    pub nodes_per_panel: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Refinement levels tried before giving up.
    pub max_refinements: usize,
    /// Hard cap on the panel count of one pass.
    pub max_panels: usize,
    /// Roundoff floor relative to `∫|A|`, below which differences are noise.
    pub noise_floor: f64,
}

impl Default for OscillatoryOptions {
    fn default() -> Self {
        Self {
            max_phase_step: 0.5,
            nodes_per_panel: 8,
            rel_tol: 1e-8,
            abs_tol: 1e-13,
            max_refinements: 4,
            max_panels: 20_000_000,
            noise_floor: 1e-13,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OscillatoryResult {
    pub value: Complex64,
    pub error: f64,
    pub converged: bool,
    pub panels: usize,
    /// `∫|A|` on the final pass.
    pub l1: f64,
}

/// Integrate over the partition `edges` (strictly increasing).
pub fn integrate<I: Oscillatory + ?Sized>(
    integrand: &I,
    edges: &[f64],
    opts: &OscillatoryOptions,
) -> OscillatoryResult {
    assert!(edges.len() >= 2);
    if edges[0] == edges[edges.len() - 1] {
        return OscillatoryResult { value: Complex64::new(0.0, 0.0), error: 0.0, converged: true, panels: 0, l1: 0.0 };
    }
    let gl = GaussLegendre::new(opts.nodes_per_panel);
    let mut step = opts.max_phase_step;
    let (mut prev, mut panels, mut l1) = single_pass(integrand, edges, step, &gl, opts.max_panels);
    let mut error = f64::INFINITY;
    for _ in 0..opts.max_refinements {
        step *= 0.5;
        let (cur, p, l) = single_pass(integrand, edges, step, &gl, opts.max_panels);
        error = (cur - prev).norm();
        prev = cur;
        panels = p;
        l1 = l;
        let tol = opts.abs_tol.max(opts.rel_tol * cur.norm()).max(opts.noise_floor * l1);
        if error <= tol {
            return OscillatoryResult { value: cur, error, converged: true, panels, l1 };
        }
    }
    OscillatoryResult { value: prev, error, converged: false, panels, l1 }
}

fn single_pass<I: Oscillatory + ?Sized>(
    integrand: &I,
    edges: &[f64],
    step: f64,
    gl: &GaussLegendre,
    max_panels: usize,
) -> (Complex64, usize, f64) {
    let mut acc = ComplexSum::new();
    let mut l1 = KahanSum::new();
    let mut panels = 0usize;
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let rate = integrand
            .phase_rate(a)
            .max(integrand.phase_rate(0.5 * (a + b)))
            .max(integrand.phase_rate(b));
        let n = ((rate * (b - a) / step).ceil() as usize).clamp(1, max_panels);
        panels += n;
        let h = (b - a) / n as f64;
        for j in 0..n {
            let lo = a + j as f64 * h;
            let hi = if j + 1 == n { b } else { lo + h };
            for (x, wgt) in gl.mapped(lo, hi) {
                let (amp, phase) = integrand.eval(x);
                acc.add(amp * Complex64::from_polar(wgt, phase));
                l1.add(amp.norm() * wgt.abs());
            }
        }
    }
    (acc.value(), panels, l1.value())
}
