//! Real quadrature: Gauss–Legendre rules, adaptive Gauss–Kronrod and
//! compensated summation.

use num_complex::Complex64;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated complex accumulator (independent real/imaginary sums).
#[derive(Debug, Clone, Copy, Default)]
pub struct ComplexSum {
    re: KahanSum,
    im: KahanSum,
}

impl ComplexSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes from Newton iteration on the Legendre recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Integrate `f` over [a, b].
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }

    /// Mapped nodes `(t_i, w_i)` on [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, w * half))
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One Gauss–Kronrod 7/15 panel: (Kronrod estimate, |K − G|).
pub fn gk15<F: FnMut(f64) -> f64>(a: f64, b: f64, f: &mut F) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let fc = f(mid);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(mid - dx) + f(mid + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * half, ((kron - gauss) * half).abs())
}

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveResult {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

/// Adaptive Gauss–Kronrod on [a, b] with optional interior breakpoints.
///
/// Bisects the panel with the largest error estimate until
/// `error <= max(abs_tol, rel_tol * |value|)` or `max_panels` is reached.
pub fn integrate_adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> AdaptiveResult {
    if a == b {
        return AdaptiveResult { value: 0.0, error: 0.0, converged: true };
    }
    let mut edges = vec![a];
    edges.extend(breakpoints.iter().copied().filter(|&x| x > a.min(b) && x < a.max(b)));
    edges.push(b);
    let last = edges.len() - 1;
    if a > b {
        edges[1..last].sort_by(|x, y| y.total_cmp(x));
    } else {
        edges[1..last].sort_by(|x, y| x.total_cmp(y));
    }
    let mut panels: Vec<(f64, f64, f64, f64)> = edges
        .windows(2)
        .map(|w| {
            let (v, e) = gk15(w[0], w[1], &mut f);
            (w[0], w[1], v, e)
        })
        .collect();
    loop {
        let mut value = KahanSum::new();
        let mut error = 0.0;
        let mut worst = 0;
        for (i, p) in panels.iter().enumerate() {
            value.add(p.2);
            error += p.3;
            if p.3 > panels[worst].3 {
                worst = i;
            }
        }
        let value = value.value();
        let tol = abs_tol.max(rel_tol * value.abs());
        if error <= tol || panels.len() >= max_panels {
            return AdaptiveResult { value, error, converged: error <= tol };
        }
        let (lo, hi, _, _) = panels[worst];
        let m = 0.5 * (lo + hi);
        let (v1, e1) = gk15(lo, m, &mut f);
        let (v2, e2) = gk15(m, hi, &mut f);
        panels[worst] = (lo, m, v1, e1);
        panels.push((m, hi, v2, e2));
    }
}

/// Convenience wrapper with tight default tolerances.
pub fn integrate<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, breakpoints: &[f64]) -> f64 {
    integrate_adaptive(f, a, b, breakpoints, 1e-14, 1e-12, 4000).value
}

/// Adaptive Gauss–Kronrod over `edges` where every panel whose error
/// exceeds its share of the tolerance is bisected in the same round, and
/// the rounds evaluate their panels in parallel. Panel order is fixed, so
/// the result does not depend on the thread count.
pub fn integrate_batched<F: Fn(f64) -> f64 + Sync>(
    f: F,
    edges: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> AdaptiveResult {
    use rayon::prelude::*;
    let eval = |a: f64, b: f64| {
        let mut g = |x: f64| f(x);
        let (v, e) = gk15(a, b, &mut g);
        (a, b, v, e)
    };
    let mut panels: Vec<(f64, f64, f64, f64)> = edges.par_windows(2).filter(|w| w[1] > w[0]).map(|w| eval(w[0], w[1])).collect();
    loop {
        let mut value = KahanSum::new();
        let mut error = KahanSum::new();
        for p in &panels {
            value.add(p.2);
            error.add(p.3);
        }
        let (value, error) = (value.value(), error.value());
        let tol = abs_tol.max(rel_tol * value.abs());
        if error <= tol || panels.len() >= max_panels || !error.is_finite() {
            return AdaptiveResult { value, error, converged: error <= tol };
        }
        let share = tol / panels.len() as f64;
        panels = panels
            .par_iter()
            .flat_map_iter(|&p| {
                if p.3 > share {
                    let m = 0.5 * (p.0 + p.1);
                    vec![eval(p.0, m), eval(m, p.1)]
                } else {
                    vec![p]
                }
            })
            .collect();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let gl = GaussLegendre::new(8);
        // degree 15 exact
        let v = gl.integrate(0.0, 2.0, |x| x.powi(15));
        assert!((v - 2f64.powi(16) / 16.0).abs() < 1e-9);
        let w: f64 = gl.weights.iter().sum();
        assert!((w - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        let eps = 1e-3;
        let v = integrate(|x| eps / (x * x + eps * eps), -1.0, 1.0, &[0.0]);
        let exact = 2.0 * (1.0 / eps).atan();
        assert!((v - exact).abs() < 1e-10, "{v} vs {exact}");
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = KahanSum::new();
        s.add(1e16);
        for _ in 0..1000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 1000.0);
    }

    #[test]
    fn batched_matches_serial() {
        let f = |x: f64| (50.0 * x).sin().powi(2) / (1.0 + x * x);
        let edges: Vec<f64> = (0..=10).map(|i| i as f64).collect();
        let b = integrate_batched(f, &edges, 1e-13, 1e-12, 100000);
        let s = integrate_adaptive(f, 0.0, 10.0, &edges, 1e-13, 1e-12, 100000);
        assert!(b.converged && s.converged);
        assert!((b.value - s.value).abs() < 1e-11);
    }
}
