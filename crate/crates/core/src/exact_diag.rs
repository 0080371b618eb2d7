//! Brute-force diagonalization of the spin Hamiltonians on the full `2^N`
//! space, with bitflip-parity sectors and ground-energy derivatives.
//!
//! Basis index `x` stores qubit `j` in bit `j`; bit value 0 is `σᶻ = +1`.

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_exponential, FitResult};
use crate::grover_model::parse_bits;
use crate::numerics::linalg::SymmetricEigen;

pub const MIN_QUBITS: usize = 2;
pub const MAX_QUBITS: usize = 14;
/// Largest (sector) dimension solved densely.
pub const DENSE_MAX_DIM: usize = 64;
pub const RESIDUAL_TOL: f64 = 1e-9;
pub const DEFAULT_SEED: u64 = 0x5eed_1a2c;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpinModel {
    IsingRing,
    Grover,
    MixedGroverIsing,
}

impl SpinModel {
    pub fn name(self) -> &'static str {
        match self {
            SpinModel::IsingRing => "ising_ring",
            SpinModel::Grover => "grover",
            SpinModel::MixedGroverIsing => "mixed_grover_ising",
        }
    }

    pub fn parity_symmetric(self) -> bool {
        !matches!(self, SpinModel::Grover)
    }
}

/// Subspace of the bitflip operator `X^{⊗N}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sector {
    Full,
    Even,
    Odd,
}

impl Sector {
    fn sign(self) -> f64 {
        if self == Sector::Odd {
            -1.0
        } else {
            1.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinHamiltonian {
    pub n_qubits: usize,
    pub model: SpinModel,
    pub g: f64,
    /// Index of the marked basis state (grover only).
    pub marked: Option<usize>,
}

/// Checked constructor; `marked` is a bit string, character `j` for qubit `j`.
pub fn build_hamiltonian(model: SpinModel, n: usize, g: f64, marked: Option<&str>) -> Result<SpinHamiltonian> {
    if !(0.0..=1.0).contains(&g) {
        return Err(Error::OutOfRange { what: "g", value: g, range: "[0, 1]" });
    }
    build_unchecked(model, n, g, marked)
}

/// Like [`build_hamiltonian`] but accepts any finite `g`, for finite
/// differences at the ends of the interval.
pub fn build_unchecked(model: SpinModel, n: usize, g: f64, marked: Option<&str>) -> Result<SpinHamiltonian> {
    if !(MIN_QUBITS..=MAX_QUBITS).contains(&n) {
        return Err(Error::OutOfRange { what: "N", value: n as f64, range: "[2, 14]" });
    }
    if !g.is_finite() {
        return Err(Error::OutOfRange { what: "g", value: g, range: "finite" });
    }
    let marked = match (model, marked) {
        (SpinModel::Grover, None) => return Err(Error::MissingMarkedState { expected: n, got: 0 }),
        (SpinModel::Grover, Some(w)) => {
            let bits = parse_bits(w, n)?;
            Some(bits.iter().enumerate().fold(0usize, |acc, (j, &b)| acc | (usize::from(b) << j)))
        }
        _ => None,
    };
    Ok(SpinHamiltonian { n_qubits: n, model, g, marked })
}

impl SpinHamiltonian {
    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    /// `Σ_j s_j s_{j+1}` on the periodic ring (a two-site ring has two bonds).
    fn bond_sum(&self, x: usize) -> f64 {
        let n = self.n_qubits;
        let mask = self.dim() - 1;
        let rot = ((x << 1) | (x >> (n - 1))) & mask;
        n as f64 - 2.0 * (x ^ rot).count_ones() as f64
    }

    /// `y = H x` on the full space.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let dim = self.dim();
        assert!(x.len() == dim && y.len() == dim);
        let g = self.g;
        let n = self.n_qubits;
        let in_overlap = || x.iter().sum::<f64>() / (dim as f64).sqrt();
        match self.model {
            SpinModel::IsingRing => {
                for (i, yi) in y.iter_mut().enumerate() {
                    let mut flip = 0.0;
                    for j in 0..n {
                        flip += x[i ^ (1 << j)];
                    }
                    *yi = -g * self.bond_sum(i) * x[i] - (1.0 - g) * flip;
                }
            }
            SpinModel::Grover => {
                let c = (1.0 - g) * in_overlap() / (dim as f64).sqrt();
                for (yi, xi) in y.iter_mut().zip(x) {
                    *yi = xi - c;
                }
                let w = self.marked.expect("grover Hamiltonian carries a marked state");
                y[w] -= g * x[w];
            }
            SpinModel::MixedGroverIsing => {
                let c = (1.0 - g) * in_overlap() / (dim as f64).sqrt();
                for (i, yi) in y.iter_mut().enumerate() {
                    let ferro = 0.5 * (n as f64 - self.bond_sum(i));
                    *yi = (1.0 - g) * x[i] - c + g * ferro * x[i];
                }
            }
        }
    }

    /// Row-major dense matrix.
    pub fn dense(&self) -> Vec<f64> {
        let dim = self.dim();
        let mut m = vec![0.0; dim * dim];
        let mut e = vec![0.0; dim];
        let mut col = vec![0.0; dim];
        for c in 0..dim {
            e[c] = 1.0;
            self.apply(&e, &mut col);
            e[c] = 0.0;
            for r in 0..dim {
                m[r * dim + c] = col[r];
            }
        }
        m
    }

    fn sector_dim(&self, sector: Sector) -> usize {
        match sector {
            Sector::Full => self.dim(),
            _ => self.dim() / 2,
        }
    }

    fn embed(&self, sector: Sector, c: &[f64], full: &mut [f64]) {
        if sector == Sector::Full {
            full.copy_from_slice(c);
            return;
        }
        let mask = self.dim() - 1;
        let p = sector.sign();
        for (x, &cx) in c.iter().enumerate() {
            full[x] = cx * std::f64::consts::FRAC_1_SQRT_2;
            full[x ^ mask] = p * cx * std::f64::consts::FRAC_1_SQRT_2;
        }
    }

    fn project(&self, sector: Sector, full: &[f64], c: &mut [f64]) {
        if sector == Sector::Full {
            c.copy_from_slice(full);
            return;
        }
        let mask = self.dim() - 1;
        let p = sector.sign();
        for (x, cx) in c.iter_mut().enumerate() {
            *cx = (full[x] + p * full[x ^ mask]) * std::f64::consts::FRAC_1_SQRT_2;
        }
    }

    fn sector_check(&self, sector: Sector) -> Result<()> {
        if sector != Sector::Full && !self.model.parity_symmetric() {
            return Err(Error::NotParitySymmetric);
        }
        Ok(())
    }
}

/// `y = X^{⊗N} x`.
pub fn apply_parity(x: &[f64], y: &mut [f64]) {
    let mask = x.len() - 1;
    for (i, yi) in y.iter_mut().enumerate() {
        *yi = x[i ^ mask];
    }
}

struct SectorOp<'a> {
    h: &'a SpinHamiltonian,
    sector: Sector,
    full_in: Vec<f64>,
    full_out: Vec<f64>,
}

impl<'a> SectorOp<'a> {
    fn new(h: &'a SpinHamiltonian, sector: Sector) -> Self {
        let d = h.dim();
        Self { h, sector, full_in: vec![0.0; d], full_out: vec![0.0; d] }
    }

    fn dim(&self) -> usize {
        self.h.sector_dim(self.sector)
    }

    fn apply(&mut self, x: &[f64], y: &mut [f64]) {
        if self.sector == Sector::Full {
            self.h.apply(x, y);
            return;
        }
        self.h.embed(self.sector, x, &mut self.full_in);
        self.h.apply(&self.full_in, &mut self.full_out);
        self.h.project(self.sector, &self.full_out, y);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowSpectrum {
    pub eigenvalues: Vec<f64>,
    /// Full-space eigenvectors.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eigenvectors: Option<Vec<Vec<f64>>>,
    pub parity_labels: Option<Vec<i8>>,
    pub residuals: Vec<f64>,
}

impl LowSpectrum {
    /// `E₁ − E₀`.
    pub fn gap(&self) -> Option<f64> {
        (self.eigenvalues.len() >= 2).then(|| self.eigenvalues[1] - self.eigenvalues[0])
    }
}

pub fn low_spectrum(h: &SpinHamiltonian, m: usize) -> Result<LowSpectrum> {
    low_spectrum_in(h, m, Sector::Full)
}

pub fn low_spectrum_in(h: &SpinHamiltonian, m: usize, sector: Sector) -> Result<LowSpectrum> {
    low_spectrum_seeded(h, m, sector, DEFAULT_SEED)
}

/// `seed` drives the random Lanczos start vectors.
pub fn low_spectrum_seeded(h: &SpinHamiltonian, m: usize, sector: Sector, seed: u64) -> Result<LowSpectrum> {
    h.sector_check(sector)?;
    let mut op = SectorOp::new(h, sector);
    let dim = op.dim();
    if m == 0 || m > dim {
        return Err(Error::OutOfRange { what: "m", value: m as f64, range: "[1, dim]" });
    }
    let pairs = if dim <= DENSE_MAX_DIM {
        dense_low(&mut op, m)
    } else {
        lanczos_low(&mut op, m, seed)?
    };
    let mut values = Vec::with_capacity(m);
    let mut vectors = Vec::with_capacity(m);
    let mut residuals = Vec::with_capacity(m);
    let mut hv = vec![0.0; dim];
    for (lambda, v) in pairs {
        op.apply(&v, &mut hv);
        let r = hv.iter().zip(&v).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
        if r > 1e-8 {
            return Err(Error::NonConvergence { what: format!("{} eigenpair", h.model.name()), residual: r });
        }
        let mut full = vec![0.0; h.dim()];
        h.embed(sector, &v, &mut full);
        values.push(lambda);
        vectors.push(full);
        residuals.push(r);
    }
    let parity_labels = match sector {
        Sector::Full => None,
        s => Some(vec![s.sign() as i8; m]),
    };
    Ok(LowSpectrum { eigenvalues: values, eigenvectors: Some(vectors), parity_labels, residuals })
}

fn dense_low(op: &mut SectorOp, m: usize) -> Vec<(f64, Vec<f64>)> {
    let dim = op.dim();
    let mut mat = vec![0.0; dim * dim];
    let mut e = vec![0.0; dim];
    let mut col = vec![0.0; dim];
    for c in 0..dim {
        e[c] = 1.0;
        op.apply(&e, &mut col);
        e[c] = 0.0;
        for r in 0..dim {
            mat[r * dim + c] = col[r];
        }
    }
    let eig = SymmetricEigen::new(&mat, dim);
    (0..m).map(|c| (eig.values[c], eig.vector(c))).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Two Gram-Schmidt passes against `basis`.
fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let c = dot(v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
    }
}

struct LanczosRun {
    /// Ritz pairs with residual estimates, ascending.
    ritz: Vec<(f64, Vec<f64>, f64)>,
}

fn lanczos_run(op: &mut SectorOp, locked: &[Vec<f64>], start: Vec<f64>, m: usize, tol: f64) -> LanczosRun {
    let dim = op.dim();
    let kmax = (dim - locked.len()).min(300.max(4 * m + 40));
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(kmax);
    let mut alpha = Vec::with_capacity(kmax);
    let mut beta: Vec<f64> = Vec::with_capacity(kmax);
    q.push(start);
    let mut w = vec![0.0; dim];
    let ritz_of = |q: &[Vec<f64>], alpha: &[f64], beta: &[f64], last_beta: f64| {
        let k = alpha.len();
        let t = SymmetricEigen::tridiagonal(alpha, &beta[..k - 1]);
        (0..k)
            .map(|c| {
                let s = t.vector(c);
                let mut v = vec![0.0; dim];
                for (qi, si) in q.iter().zip(&s) {
                    v.iter_mut().zip(qi).for_each(|(x, y)| *x += si * y);
                }
                (t.values[c], v, (last_beta * s[k - 1]).abs())
            })
            .collect::<Vec<_>>()
    };
    loop {
        let k = alpha.len();
        op.apply(&q[k], &mut w);
        let a = dot(&w, &q[k]);
        alpha.push(a);
        w.iter_mut().zip(&q[k]).for_each(|(x, y)| *x -= a * y);
        if k > 0 {
            let b = beta[k - 1];
            w.iter_mut().zip(&q[k - 1]).for_each(|(x, y)| *x -= b * y);
        }
        orthogonalize(&mut w, locked);
        orthogonalize(&mut w, &q);
        let b = dot(&w, &w).sqrt();
        let kk = alpha.len();
        let scale = alpha.iter().fold(1.0f64, |s, a| s.max(a.abs()));
        let exhausted = b <= 1e-12 * scale || kk >= kmax;
        if exhausted || (kk >= m && kk % 10 == 0) {
            let mut ritz_b = beta.clone();
            ritz_b.push(b);
            let ritz = {
                let k = alpha.len();
                let t = SymmetricEigen::tridiagonal(&alpha, &ritz_b[..k - 1]);
                let low = m.min(k);
                (0..low).all(|c| (b * t.vectors[(k - 1) * k + c]).abs() < tol)
            };
            if exhausted || ritz {
                let invariant = b <= 1e-12 * scale;
                let mut pairs = ritz_of(&q, &alpha, &ritz_b, if invariant { 0.0 } else { b });
                if !invariant {
                    pairs.truncate(m);
                }
                return LanczosRun { ritz: pairs };
            }
        }
        beta.push(b);
        let next: Vec<f64> = w.iter().map(|x| x / b).collect();
        q.push(next);
    }
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize, locked: &[Vec<f64>]) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>() - 0.5).collect();
        orthogonalize(&mut v, locked);
        if normalize(&mut v) > 1e-8 {
            return v;
        }
    }
}

/// Lowest `m` eigenpairs by Lanczos with full reorthogonalization.
///
/// Converged pairs are locked and further runs start in their orthogonal
/// complement, which picks up degenerate partners a single Krylov space
/// cannot see. The search stops once a run in the complement finds nothing
/// below the current `m`-th value.
fn lanczos_low(op: &mut SectorOp, m: usize, seed: u64) -> Result<Vec<(f64, Vec<f64>)>> {
    let dim = op.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut locked: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut start: Option<Vec<f64>> = None;
    let max_rounds = 2 * m + 16;
    let mut worst = f64::INFINITY;
    for _ in 0..max_rounds {
        let basis: Vec<Vec<f64>> = locked.iter().map(|(_, v)| v.clone()).collect();
        if basis.len() >= dim {
            break;
        }
        let s = match start.take() {
            Some(mut s) => {
                orthogonalize(&mut s, &basis);
                if normalize(&mut s) > 1e-8 {
                    s
                } else {
                    random_unit(&mut rng, dim, &basis)
                }
            }
            None => random_unit(&mut rng, dim, &basis),
        };
        let run = lanczos_run(op, &basis, s, m, RESIDUAL_TOL);
        let mut values: Vec<f64> = locked.iter().map(|p| p.0).collect();
        values.sort_by(f64::total_cmp);
        let threshold = if values.len() >= m { values[m - 1] } else { f64::INFINITY };
        let scale = values.iter().fold(1.0f64, |s, v| s.max(v.abs()));
        let mut added = false;
        let mut unconverged = vec![0.0; dim];
        let mut any_unconverged = false;
        for (lambda, v, res) in run.ritz {
            if res < RESIDUAL_TOL {
                if lambda < threshold - 1e-9 * scale || values.len() < m {
                    added = true;
                }
                locked.push((lambda, v));
            } else if lambda < threshold {
                worst = worst.min(res);
                any_unconverged = true;
                unconverged.iter_mut().zip(&v).for_each(|(x, y)| *x += y);
            }
        }
        if any_unconverged {
            start = Some(unconverged);
            continue;
        }
        if !added && locked.len() >= m {
            locked.sort_by(|a, b| a.0.total_cmp(&b.0));
            locked.truncate(m);
            return Ok(locked);
        }
    }
    if locked.len() >= m {
        locked.sort_by(|a, b| a.0.total_cmp(&b.0));
        locked.truncate(m);
        return Ok(locked);
    }
    Err(Error::NonConvergence { what: "lanczos".into(), residual: worst })
}

/// Rotates degenerate clusters of `spectrum` onto `X^{⊗N}` eigenvectors and
/// returns the parity label of each state.
pub fn parity_resolve(h: &SpinHamiltonian, spectrum: &mut LowSpectrum) -> Result<Vec<i8>> {
    if !h.model.parity_symmetric() {
        return Err(Error::NotParitySymmetric);
    }
    let vectors = spectrum
        .eigenvectors
        .as_mut()
        .ok_or_else(|| Error::Config("parity_resolve needs eigenvectors".into()))?;
    let vals = &spectrum.eigenvalues;
    let mut labels = vec![0i8; vals.len()];
    let mut xv = vec![0.0; h.dim()];
    let mut i = 0;
    while i < vals.len() {
        let mut j = i + 1;
        while j < vals.len() && (vals[j] - vals[i]).abs() < 1e-8 * vals[i].abs().max(1.0) {
            j += 1;
        }
        let k = j - i;
        let mut p = vec![0.0; k * k];
        for a in 0..k {
            apply_parity(&vectors[i + a], &mut xv);
            for b in 0..k {
                p[b * k + a] = dot(&vectors[i + b], &xv);
            }
        }
        let eig = SymmetricEigen::new(&p, k);
        let old: Vec<Vec<f64>> = vectors[i..j].to_vec();
        // +1 first within a cluster
        for (slot, c) in (0..k).rev().enumerate() {
            let label = eig.values[c];
            if (label.abs() - 1.0).abs() > 1e-8 {
                return Err(Error::NonConvergence { what: "parity label".into(), residual: (label.abs() - 1.0).abs() });
            }
            let s = eig.vector(c);
            let v = &mut vectors[i + slot];
            v.iter_mut().for_each(|x| *x = 0.0);
            for (o, sc) in old.iter().zip(&s) {
                v.iter_mut().zip(o).for_each(|(x, y)| *x += sc * y);
            }
            labels[i + slot] = label.signum() as i8;
        }
        i = j;
    }
    spectrum.parity_labels = Some(labels.clone());
    Ok(labels)
}

/// Ground energy in the given sector.
pub fn ground_energy(h: &SpinHamiltonian, sector: Sector) -> Result<f64> {
    Ok(low_spectrum_in(h, 1, sector)?.eigenvalues[0])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyDerivatives {
    pub g: Vec<f64>,
    pub energy: Vec<f64>,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
}

/// Relative disagreement between the step-`h` and step-`h/2` second
/// differences above which the grid is reported too coarse.
pub const DERIVATIVE_TOL: f64 = 2e-2;

/// Central differences of the ground energy on a uniform grid. Each point is
/// checked against the same stencil at half the spacing.
pub fn energy_derivatives(model: SpinModel, n: usize, marked: Option<&str>, g_grid: &[f64]) -> Result<EnergyDerivatives> {
    if g_grid.len() < 2 {
        return Err(Error::GridTooCoarse("need at least two grid points".into()));
    }
    let h = g_grid[1] - g_grid[0];
    if !(h > 0.0) || g_grid.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1e-300) + 1e-14) {
        return Err(Error::GridTooCoarse("grid must be uniform and increasing".into()));
    }
    let sector = if model.parity_symmetric() { Sector::Even } else { Sector::Full };
    let e0 = |g: f64| -> Result<f64> { ground_energy(&build_unchecked(model, n, g, marked)?, sector) };
    let mut points: Vec<f64> = Vec::with_capacity(3 * g_grid.len() + 2);
    points.push(g_grid[0] - h);
    points.extend_from_slice(g_grid);
    points.push(g_grid[g_grid.len() - 1] + h);
    points.extend(g_grid.iter().flat_map(|&g| [g - 0.5 * h, g + 0.5 * h]));
    let values: Vec<f64> = points.par_iter().map(|&g| e0(g)).collect::<Result<_>>()?;
    let (energy, halves) = values.split_at(g_grid.len() + 2);
    let mut first = Vec::with_capacity(g_grid.len());
    let mut second = Vec::with_capacity(g_grid.len());
    for (i, &g) in g_grid.iter().enumerate() {
        let (em, ec, ep) = (energy[i], energy[i + 1], energy[i + 2]);
        let d1 = (ep - em) / (2.0 * h);
        let d2 = (ep - 2.0 * ec + em) / (h * h);
        let (hm, hp) = (halves[2 * i], halves[2 * i + 1]);
        let d2_half = (hp - 2.0 * ec + hm) / (0.25 * h * h);
        let d1_half = (hp - hm) / h;
        let bad2 = (d2 - d2_half).abs() > DERIVATIVE_TOL * d2_half.abs().max(1.0);
        let bad1 = (d1 - d1_half).abs() > DERIVATIVE_TOL * d1_half.abs().max(1.0);
        if bad2 {
            return Err(Error::GridTooCoarse(format!(
                "at g = {g}: second difference {d2} vs {d2_half} at half step"
            )));
        }
        if bad1 {
            return Err(Error::GridTooCoarse(format!("at g = {g}: first difference {d1} vs {d1_half} at half step")));
        }
        first.push(d1);
        second.push(d2);
    }
    let energy = energy[1..=g_grid.len()].to_vec();
    Ok(EnergyDerivatives { g: g_grid.to_vec(), energy, first, second })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapScaling {
    pub model: SpinModel,
    pub n: Vec<usize>,
    pub gap_min: Vec<f64>,
    pub g_min: Vec<f64>,
    /// `ln ΔE_min = ln A + r N`; `r < 0` for an exponentially closing gap.
    pub fit: FitResult,
}

impl GapScaling {
    /// `c₁ = −r`.
    pub fn decay_constant(&self) -> f64 {
        -self.fit.exponent
    }
}

/// Gap relevant to the sweep: within the even sector for the parity
/// symmetric models, on the full space for grover.
pub fn sweep_gap(model: SpinModel, n: usize, g: f64) -> Result<f64> {
    let marked = "0".repeat(n);
    let h = build_hamiltonian(model, n, g, Some(&marked))?;
    let sector = if model.parity_symmetric() { Sector::Even } else { Sector::Full };
    let s = low_spectrum_in(&h, 2, sector)?;
    Ok(s.eigenvalues[1] - s.eigenvalues[0])
}

/// Minimum of [`sweep_gap`] over `g`: coarse scan then golden-section search.
pub fn min_sweep_gap(model: SpinModel, n: usize) -> Result<(f64, f64)> {
    let coarse = 100;
    let gaps: Vec<(f64, f64)> = (0..=coarse)
        .into_par_iter()
        .map(|i| {
            let g = i as f64 / coarse as f64;
            sweep_gap(model, n, g).map(|d| (g, d))
        })
        .collect::<Result<_>>()?;
    let best = (0..gaps.len()).min_by(|&a, &b| gaps[a].1.total_cmp(&gaps[b].1)).unwrap();
    let (mut a, mut b) = (gaps[best.saturating_sub(1)].0, gaps[(best + 1).min(coarse)].0);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (sweep_gap(model, n, c)?, sweep_gap(model, n, d)?);
    while b - a > 1e-11 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = sweep_gap(model, n, c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = sweep_gap(model, n, d)?;
        }
    }
    let (g, gap) = if fc < fd { (c, fc) } else { (d, fd) };
    if gaps[best].1 < gap {
        return Ok(gaps[best]);
    }
    Ok((g, gap))
}

/// Fits `ln ΔE_min(N)` linearly in `N`.
pub fn gap_scaling(model: SpinModel, n_list: &[usize]) -> Result<GapScaling> {
    let mut n_sorted = n_list.to_vec();
    n_sorted.sort_unstable();
    let mut gap_min = Vec::new();
    let mut g_min = Vec::new();
    for &n in &n_sorted {
        let (g, d) = min_sweep_gap(model, n)?;
        g_min.push(g);
        gap_min.push(d);
    }
    if gap_min.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::FitFailure(format!("minimum gap is not decreasing in N: {gap_min:?}")));
    }
    let xs: Vec<f64> = n_sorted.iter().map(|&n| n as f64).collect();
    let fit = fit_exponential(&xs, &gap_min)?;
    Ok(GapScaling { model, n: n_sorted, gap_min, g_min, fit })
}

pub fn mixed_gap_scaling(n_list: &[usize]) -> Result<GapScaling> {
    if n_list.iter().any(|&n| n % 2 != 0 || !(4..=MAX_QUBITS).contains(&n)) {
        return Err(Error::InvalidN(n_list.iter().copied().find(|&n| n % 2 != 0 || !(4..=14).contains(&n)).unwrap()));
    }
    gap_scaling(SpinModel::MixedGroverIsing, n_list)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ham(model: SpinModel, n: usize, g: f64) -> SpinHamiltonian {
        build_hamiltonian(model, n, g, Some(&"0".repeat(n))).unwrap()
    }

    #[test]
    fn ising_two_sites_free_end() {
        let s = low_spectrum(&ham(SpinModel::IsingRing, 2, 0.0), 2).unwrap();
        assert_relative_eq!(s.eigenvalues[0], -2.0, epsilon = 1e-12);
        assert_relative_eq!(s.eigenvalues[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn grover_projector_spectrum() {
        let s = low_spectrum(&ham(SpinModel::Grover, 3, 0.0), 8).unwrap();
        assert_relative_eq!(s.eigenvalues[0], 0.0, epsilon = 1e-12);
        for v in &s.eigenvalues[1..] {
            assert_relative_eq!(*v, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn mixed_ferro_ground_space() {
        let s = low_spectrum(&ham(SpinModel::MixedGroverIsing, 2, 1.0), 2).unwrap();
        assert_relative_eq!(s.eigenvalues[0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(s.eigenvalues[1], 0.0, epsilon = 1e-12);
        for v in s.eigenvectors.as_ref().unwrap() {
            assert!(v[1].abs() < 1e-12 && v[2].abs() < 1e-12);
        }
    }

    #[test]
    fn dense_matrix_symmetric_and_parity_commuting() {
        for model in [SpinModel::IsingRing, SpinModel::MixedGroverIsing, SpinModel::Grover] {
            let h = ham(model, 4, 0.37);
            let m = h.dense();
            let d = h.dim();
            let mut commutator = 0.0f64;
            for r in 0..d {
                for c in 0..d {
                    assert_eq!(m[r * d + c], m[c * d + r]);
                    commutator = commutator.max((m[r * d + c] - m[(r ^ (d - 1)) * d + (c ^ (d - 1))]).abs());
                }
            }
            if model.parity_symmetric() {
                assert!(commutator < 1e-12);
            } else {
                assert!(commutator > 1e-3);
            }
        }
    }

    #[test]
    fn lanczos_agrees_with_dense() {
        for model in [SpinModel::IsingRing, SpinModel::MixedGroverIsing, SpinModel::Grover] {
            let h = ham(model, 9, 0.43);
            let l = low_spectrum(&h, 4).unwrap();
            let mut op = SectorOp::new(&h, Sector::Full);
            let d = dense_low(&mut op, 4);
            for (a, (b, _)) in l.eigenvalues.iter().zip(&d) {
                assert_relative_eq!(*a, *b, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn lanczos_finds_degenerate_partner() {
        let s = low_spectrum(&ham(SpinModel::IsingRing, 10, 1.0), 2).unwrap();
        assert_relative_eq!(s.eigenvalues[0], -10.0, epsilon = 1e-9);
        assert_relative_eq!(s.eigenvalues[1], -10.0, epsilon = 1e-9);
    }

    #[test]
    fn parity_labels() {
        let h = ham(SpinModel::IsingRing, 4, 0.0);
        let mut s = low_spectrum(&h, 1).unwrap();
        assert_eq!(parity_resolve(&h, &mut s).unwrap(), vec![1]);
        let h = ham(SpinModel::IsingRing, 4, 1.0);
        let mut s = low_spectrum(&h, 2).unwrap();
        assert_eq!(parity_resolve(&h, &mut s).unwrap(), vec![1, -1]);
        let h = ham(SpinModel::MixedGroverIsing, 6, 0.5);
        let mut s = low_spectrum(&h, 2).unwrap();
        let l = parity_resolve(&h, &mut s).unwrap();
        assert!(l.iter().all(|x| x.abs() == 1));
        let h = ham(SpinModel::Grover, 4, 0.5);
        let mut s = low_spectrum(&h, 2).unwrap();
        assert!(matches!(parity_resolve(&h, &mut s), Err(Error::NotParitySymmetric)));
    }

    #[test]
    fn grover_gap_at_midpoint() {
        for n in [2, 4, 7, 11] {
            let s = low_spectrum(&ham(SpinModel::Grover, n, 0.5), 2).unwrap();
            assert_relative_eq!(s.gap().unwrap(), (2f64.powi(n as i32)).sqrt().recip(), epsilon = 1e-10);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(build_hamiltonian(SpinModel::IsingRing, 1, 0.5, None).is_err());
        assert!(build_hamiltonian(SpinModel::IsingRing, 15, 0.5, None).is_err());
        assert!(build_hamiltonian(SpinModel::IsingRing, 4, 1.5, None).is_err());
        assert!(matches!(
            build_hamiltonian(SpinModel::Grover, 4, 0.5, None),
            Err(Error::MissingMarkedState { .. })
        ));
        assert!(build_hamiltonian(SpinModel::Grover, 4, 0.5, Some("010")).is_err());
        let h = ham(SpinModel::Grover, 4, 0.5);
        assert!(matches!(low_spectrum_in(&h, 1, Sector::Even), Err(Error::NotParitySymmetric)));
    }

    #[test]
    fn smooth_second_derivative_away_from_transition() {
        let grid: Vec<f64> = (0..=200).map(|i| i as f64 * 1e-3).collect();
        let d = energy_derivatives(SpinModel::IsingRing, 6, None, &grid).unwrap();
        let curv: Vec<f64> = d.second.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).collect();
        for w in curv.windows(2) {
            assert!((w[1] - w[0]).abs() < 1e-4, "{w:?}");
        }
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let grid: Vec<f64> = (0..=4).map(|i| 0.3 + 0.1 * i as f64).collect();
        assert!(matches!(
            energy_derivatives(SpinModel::Grover, 8, Some("00000000"), &grid),
            Err(Error::GridTooCoarse(_))
        ));
    }
}
