//! Fixed-step classical Runge–Kutta for small complex linear systems.

use num_complex::Complex64;

pub type State2 = [Complex64; 2];

/// Integrate `dy/dt = rhs(t, y)` from `t0` to `t1` with `steps` RK4 steps,
/// calling `observe(t, y)` at the start and after every step.
pub fn rk4_2<F, O>(rhs: F, y0: State2, t0: f64, t1: f64, steps: usize, mut observe: O) -> State2
where
    F: Fn(f64, &State2) -> State2,
    O: FnMut(f64, &State2),
{
    let h = (t1 - t0) / steps as f64;
    let mut y = y0;
    observe(t0, &y);
    for n in 0..steps {
        let t = t0 + n as f64 * h;
        let k1 = rhs(t, &y);
        let k2 = rhs(t + 0.5 * h, &axpy(&y, 0.5 * h, &k1));
        let k3 = rhs(t + 0.5 * h, &axpy(&y, 0.5 * h, &k2));
        let k4 = rhs(t + h, &axpy(&y, h, &k3));
        for i in 0..2 {
            y[i] += (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (h / 6.0);
        }
        let t_next = if n + 1 == steps { t1 } else { t + h };
        observe(t_next, &y);
    }
    y
}

fn axpy(y: &State2, a: f64, k: &State2) -> State2 {
    [y[0] + k[0] * a, y[1] + k[1] * a]
}
