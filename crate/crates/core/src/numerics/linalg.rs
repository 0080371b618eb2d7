//! Dense real-symmetric eigensolver: Householder tridiagonalization followed
//! by implicit QL iterations (the EISPACK `tred2`/`tql2` pair).

/// Eigen-decomposition of a real symmetric matrix.
///
/// `values` ascending; `vectors` row-major `n × n` with eigenvectors in
/// columns (`vectors[r * n + c]` is component `r` of eigenvector `c`).
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub n: usize,
    pub values: Vec<f64>,
    pub vectors: Vec<f64>,
}

impl SymmetricEigen {
    /// Decompose a row-major symmetric matrix. Only the lower triangle is read.
    pub fn new(matrix: &[f64], n: usize) -> Self {
        assert_eq!(matrix.len(), n * n, "matrix must be n x n");
        if n == 0 {
            return Self { n, values: vec![], vectors: vec![] };
        }
        let mut v = matrix.to_vec();
        let mut d = vec![0.0; n];
        let mut e = vec![0.0; n];
        tred2(n, &mut v, &mut d, &mut e);
        tql2(n, &mut v, &mut d, &mut e);
        sort_pairs(n, &mut d, &mut v);
        Self { n, values: d, vectors: v }
    }

    /// Decompose the symmetric tridiagonal matrix with diagonal `diag` and
    /// sub-diagonal `off` (`off.len() == diag.len() - 1`).
    pub fn tridiagonal(diag: &[f64], off: &[f64]) -> Self {
        let n = diag.len();
        assert!(n == 0 || off.len() + 1 == n);
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            v[i * n + i] = 1.0;
        }
        let mut d = diag.to_vec();
        // tql2 expects the sub-diagonal in e[1..n]
        let mut e = vec![0.0; n];
        e[1..n].copy_from_slice(off);
        tql2(n, &mut v, &mut d, &mut e);
        sort_pairs(n, &mut d, &mut v);
        Self { n, values: d, vectors: v }
    }

    pub fn vector(&self, c: usize) -> Vec<f64> {
        (0..self.n).map(|r| self.vectors[r * self.n + c]).collect()
    }
}

fn tred2(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    let idx = |r: usize, c: usize| r * n + c;
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = 0.0;
                v[idx(j, i)] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[idx(j, i)] = f;
                g = e[j] + v[idx(j, j)] * f;
                for k in j + 1..i {
                    g += v[idx(k, j)] * d[k];
                    e[k] += v[idx(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[idx(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }
    for i in 0..n - 1 {
        v[idx(n - 1, i)] = v[idx(i, i)];
        v[idx(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[idx(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[idx(k, i + 1)] * v[idx(k, j)];
                }
                for k in 0..=i {
                    v[idx(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[idx(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
        v[idx(n - 1, j)] = 0.0;
    }
    v[idx(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

fn tql2(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    let idx = |r: usize, c: usize| r * n + c;
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                assert!(iter < 300, "tql2 failed to converge");
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;
                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let hk = v[idx(k, i + 1)];
                        v[idx(k, i + 1)] = s * v[idx(k, i)] + c * hk;
                        v[idx(k, i)] = c * v[idx(k, i)] - s * hk;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
}

fn sort_pairs(n: usize, d: &mut [f64], v: &mut [f64]) {
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let d_old = d.to_vec();
    let v_old = v.to_vec();
    for (new_c, &old_c) in order.iter().enumerate() {
        d[new_c] = d_old[old_c];
        for r in 0..n {
            v[r * n + new_c] = v_old[r * n + old_c];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_decomposition(a: &[f64], n: usize) {
        let eig = SymmetricEigen::new(a, n);
        for c in 0..n {
            let x = eig.vector(c);
            let norm: f64 = x.iter().map(|v| v * v).sum();
            assert!((norm - 1.0).abs() < 1e-12);
            for r in 0..n {
                let ax: f64 = (0..n).map(|k| a[r * n + k] * x[k]).sum();
                assert!((ax - eig.values[c] * x[r]).abs() < 1e-11);
            }
        }
        assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn decomposes_random_symmetric() {
        let n = 23;
        let mut a = vec![0.0; n * n];
        let mut seed = 12345u64;
        for r in 0..n {
            for c in 0..=r {
                seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let x = ((seed >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
                a[r * n + c] = x;
                a[c * n + r] = x;
            }
        }
        check_decomposition(&a, n);
    }

    #[test]
    fn handles_degenerate_and_diagonal() {
        let n = 5;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i * n + i] = if i < 3 { 1.0 } else { -2.0 };
        }
        check_decomposition(&a, n);
        let eig = SymmetricEigen::new(&a, n);
        assert_eq!(eig.values, vec![-2.0, -2.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn tridiagonal_matches_closed_form() {
        // discrete Laplacian: 2 - 2cos(kπ/(n+1))
        let n = 12;
        let eig = SymmetricEigen::tridiagonal(&vec![2.0; n], &vec![-1.0; n - 1]);
        for (k, v) in eig.values.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((v - exact).abs() < 1e-13);
        }
    }
}
