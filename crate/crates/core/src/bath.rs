//! Bath spectral functions `f(ω)`.
//!
//! Positive frequencies are absorbed from the system, negative ones excite
//! it. The thermal family is
//! `f(ω) = J(|ω|) [n_β(|ω|) + Θ(ω)]` with `J(ω) = 2ϑ ω_ph^{1-ε} ω^ε e^{-ω/ω_c}`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::interp::CubicHermite;
use crate::numerics::quad::integrate_adaptive;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectralFunction {
    ThermalBosonic {
        theta: f64,
        #[serde(default = "one")]
        omega_ph: f64,
        epsilon: f64,
        /// `None` disables the exponential cutoff.
        #[serde(default)]
        omega_c: Option<f64>,
        /// `None` is zero temperature.
        #[serde(default)]
        beta: Option<f64>,
    },
    Tabulated(Tabulated),
    /// Weighted single-frequency probes.
    DiracComb { lines: Vec<(f64, f64)> },
    Sum { parts: Vec<SpectralFunction> },
}

fn one() -> f64 {
    1.0
}

/// Monotone cubic interpolant through `(ω, f)` samples, zero outside.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "TabulatedSamples", into = "TabulatedSamples")]
pub struct Tabulated {
    interp: CubicHermite,
}

impl PartialEq for Tabulated {
    fn eq(&self, other: &Self) -> bool {
        self.interp.xs() == other.interp.xs() && self.interp.ys() == other.interp.ys()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TabulatedSamples {
    pub omega: Vec<f64>,
    pub f: Vec<f64>,
}

impl TryFrom<TabulatedSamples> for Tabulated {
    type Error = Error;

    fn try_from(s: TabulatedSamples) -> Result<Self> {
        if s.omega.len() != s.f.len() || s.omega.len() < 2 {
            return Err(Error::InvalidSamples("need at least two (omega, f) pairs of equal length".into()));
        }
        if s.omega.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidSamples("omega must be strictly ascending".into()));
        }
        if let Some(bad) = s.f.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidSamples(format!("negative or non-finite sample {bad}")));
        }
        Ok(Self { interp: CubicHermite::monotone(s.omega, s.f) })
    }
}

impl From<Tabulated> for TabulatedSamples {
    fn from(t: Tabulated) -> Self {
        Self { omega: t.interp.xs().to_vec(), f: t.interp.ys().to_vec() }
    }
}

impl Tabulated {
    fn eval(&self, omega: f64) -> f64 {
        let (lo, hi) = self.interp.domain();
        if omega < lo || omega > hi {
            0.0
        } else {
            self.interp.eval(omega).max(0.0)
        }
    }
}

pub fn load_tabulated(samples: &[(f64, f64)]) -> Result<SpectralFunction> {
    let (omega, f) = samples.iter().copied().unzip();
    Ok(SpectralFunction::Tabulated(Tabulated::try_from(TabulatedSamples { omega, f })?))
}

/// Two-column CSV `omega,f`; a non-numeric first row is taken as a header.
pub fn load_tabulated_csv(path: &Path) -> Result<SpectralFunction> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_path(path).map_err(csv_err)?;
    let mut samples = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != 2 {
            return Err(Error::InvalidSamples(format!("row {}: expected 2 columns, got {}", i + 1, rec.len())));
        }
        match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
            (Ok(w), Ok(f)) => samples.push((w, f)),
            _ if i == 0 => continue,
            _ => return Err(Error::InvalidSamples(format!("row {}: not numeric", i + 1))),
        }
    }
    load_tabulated(&samples)
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidSamples(format!("{other:?}")),
    }
}

pub fn dirac_probe(omega0: f64, weight: f64) -> Result<SpectralFunction> {
    if !(weight > 0.0) || !omega0.is_finite() {
        return Err(Error::InvalidSamples(format!("probe at {omega0} with weight {weight}")));
    }
    Ok(SpectralFunction::DiracComb { lines: vec![(omega0, weight)] })
}

impl SpectralFunction {
    pub fn ohmic(theta: f64, epsilon: f64, omega_c: Option<f64>, beta: Option<f64>) -> Self {
        SpectralFunction::ThermalBosonic { theta, omega_ph: 1.0, epsilon, omega_c, beta }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SpectralFunction::ThermalBosonic { theta, omega_ph, epsilon, omega_c, beta } => {
                let bad = |what, value: f64| Err(Error::OutOfRange { what, value, range: "(0, inf)" });
                if !(*theta >= 0.0) {
                    return bad("theta", *theta);
                }
                if !(*omega_ph > 0.0) {
                    return bad("omega_ph", *omega_ph);
                }
                if !(*epsilon >= 0.0) {
                    return bad("epsilon", *epsilon);
                }
                if let Some(c) = omega_c.filter(|c| !(*c > 0.0)) {
                    return bad("omega_c", c);
                }
                if let Some(b) = beta.filter(|b| !(*b > 0.0)) {
                    return bad("beta", b);
                }
                Ok(())
            }
            SpectralFunction::Tabulated(_) => Ok(()),
            SpectralFunction::DiracComb { lines } => {
                for &(w, a) in lines {
                    dirac_probe(w, a)?;
                }
                Ok(())
            }
            SpectralFunction::Sum { parts } => parts.iter().try_for_each(|p| p.validate()),
        }
    }

    /// Density part of `f` at `ω` (Dirac lines contribute nothing here).
    pub fn evaluate(&self, omega: f64) -> Result<f64> {
        match self {
            SpectralFunction::ThermalBosonic { epsilon, beta, .. } => {
                let w = omega.abs();
                let theta = if omega >= 0.0 { 1.0 } else { 0.0 };
                let Some(beta) = *beta else {
                    return Ok(self.density_unchecked(w) * theta);
                };
                if w == 0.0 {
                    // J(ω) n(ω) → J(ω)/(βω) for ω → 0
                    return if *epsilon < 1.0 {
                        Err(Error::DivergentAtZero { eta: *epsilon })
                    } else if *epsilon == 1.0 {
                        Ok(self.density_unchecked(1.0) * self.cutoff_factor(1.0).recip() / beta)
                    } else {
                        Ok(0.0)
                    };
                }
                let occupation = 1.0 / (beta * w).exp_m1();
                Ok(self.density_unchecked(w) * (occupation + theta))
            }
            SpectralFunction::Tabulated(t) => Ok(t.eval(omega)),
            SpectralFunction::DiracComb { .. } => Ok(0.0),
            SpectralFunction::Sum { parts } => parts.iter().map(|p| p.evaluate(omega)).sum(),
        }
    }

    fn cutoff_factor(&self, w: f64) -> f64 {
        match self {
            SpectralFunction::ThermalBosonic { omega_c: Some(c), .. } => (-w / c).exp(),
            _ => 1.0,
        }
    }

    fn density_unchecked(&self, w: f64) -> f64 {
        match self {
            SpectralFunction::ThermalBosonic { theta, omega_ph, epsilon, .. } => {
                let power = if *epsilon == 0.0 { 1.0 } else { w.powf(*epsilon) };
                2.0 * theta * omega_ph.powf(1.0 - epsilon) * power * self.cutoff_factor(w)
            }
            _ => 0.0,
        }
    }

    /// Atoms `(ω, weight)` of the measure.
    pub fn lines(&self) -> Vec<(f64, f64)> {
        match self {
            SpectralFunction::DiracComb { lines } => lines.clone(),
            SpectralFunction::Sum { parts } => parts.iter().flat_map(|p| p.lines()).collect(),
            _ => Vec::new(),
        }
    }

    pub fn has_density(&self) -> bool {
        match self {
            SpectralFunction::DiracComb { .. } => false,
            SpectralFunction::Sum { parts } => parts.iter().any(|p| p.has_density()),
            _ => true,
        }
    }

    /// Frequency window outside which the density is negligible (below
    /// `e^{-60}` of its scale), or `None` if unbounded.
    pub fn support(&self) -> Option<(f64, f64)> {
        match self {
            SpectralFunction::ThermalBosonic { omega_c, beta, .. } => {
                let hi = omega_c.map(|c| 60.0 * c)?;
                let lo = match beta {
                    None => 0.0,
                    Some(b) => -(60.0 / b).min(hi),
                };
                Some((lo, hi))
            }
            SpectralFunction::Tabulated(t) => Some(t.interp.domain()),
            SpectralFunction::DiracComb { lines } => {
                let lo = lines.iter().map(|l| l.0).fold(f64::INFINITY, f64::min);
                let hi = lines.iter().map(|l| l.0).fold(f64::NEG_INFINITY, f64::max);
                Some((lo, hi))
            }
            SpectralFunction::Sum { parts } => parts.iter().try_fold((f64::INFINITY, f64::NEG_INFINITY), |acc, p| {
                p.support().map(|(a, b)| (acc.0.min(a), acc.1.max(b)))
            }),
        }
    }

    /// `∫_lo^hi |f| dω`, counting Dirac lines in `[lo, hi)`. Infinite
    /// bounds are clipped to the support.
    pub fn weight_in(&self, lo: f64, hi: f64) -> Result<f64> {
        let mut total: f64 = self.lines().iter().filter(|l| l.0 >= lo && l.0 < hi).map(|l| l.1.abs()).sum();
        if self.has_density() {
            let (a, b) = match self.support() {
                Some((s0, s1)) => (lo.max(s0), hi.min(s1)),
                None if lo.is_finite() && hi.is_finite() => (lo, hi),
                None => {
                    // thermal without cutoff: the negative side still decays
                    let b = hi.min(1e6);
                    let a = match self {
                        SpectralFunction::ThermalBosonic { beta: Some(beta), .. } => lo.max(-60.0 / beta),
                        SpectralFunction::ThermalBosonic { beta: None, .. } => lo.max(0.0),
                        _ => lo.max(-1e6),
                    };
                    (a, b)
                }
            };
            if a < b {
                if a <= 0.0 && b >= 0.0 {
                    if let SpectralFunction::ThermalBosonic { epsilon, beta: Some(_), .. } = self {
                        if *epsilon == 0.0 {
                            return Err(Error::DivergentAtZero { eta: 0.0 });
                        }
                    }
                }
                let mut err = None;
                let r = integrate_adaptive(
                    |w| match self.evaluate(w) {
                        Ok(v) => v.abs(),
                        Err(e) => {
                            err.get_or_insert(e);
                            0.0
                        }
                    },
                    a,
                    b,
                    &[0.0],
                    1e-14,
                    1e-9,
                    20000,
                );
                if let Some(e) = err {
                    return Err(e);
                }
                total += r.value;
            }
        }
        Ok(total)
    }
}

/// `J(ω)` of the thermal family.
pub fn spectral_density(sf: &SpectralFunction, omega: f64) -> Result<f64> {
    if !(omega >= 0.0) {
        return Err(Error::OutOfRange { what: "omega", value: omega, range: "[0, inf)" });
    }
    match sf {
        SpectralFunction::ThermalBosonic { .. } => Ok(sf.density_unchecked(omega)),
        _ => Err(Error::Config("spectral density is defined for the thermal family only".into())),
    }
}

pub fn load_tabulated_path<P: AsRef<Path>>(path: P) -> Result<SpectralFunction> {
    load_tabulated_csv(path.as_ref())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn density_values() {
        let sf = SpectralFunction::ohmic(0.5, 1.0, None, None);
        assert_relative_eq!(spectral_density(&sf, 2.0).unwrap(), 2.0);
        assert_eq!(spectral_density(&SpectralFunction::ohmic(0.3, 0.5, Some(1.0), None), 0.0).unwrap(), 0.0);
        let sub = SpectralFunction::ThermalBosonic { theta: 0.7, omega_ph: 1.3, epsilon: 0.0, omega_c: None, beta: None };
        assert_relative_eq!(spectral_density(&sub, 0.0).unwrap(), 2.0 * 0.7 * 1.3);
        assert!(spectral_density(&sf, -1.0).is_err());
    }

    #[test]
    fn zero_temperature_and_classical_limit() {
        let cold = SpectralFunction::ohmic(0.5, 1.0, Some(2.0), None);
        assert_eq!(cold.evaluate(-0.4).unwrap(), 0.0);
        let warm = SpectralFunction::ohmic(0.5, 1.0, None, Some(1.0));
        assert_relative_eq!(warm.evaluate(0.0).unwrap(), 1.0);
        assert_relative_eq!(warm.evaluate(1e-7).unwrap(), 1.0, epsilon = 1e-6);
        let sub = SpectralFunction::ohmic(0.5, 0.5, None, Some(1.0));
        assert!(matches!(sub.evaluate(0.0), Err(Error::DivergentAtZero { .. })));
    }

    #[test]
    fn detailed_balance() {
        for beta in [0.3, 1.0, 7.0] {
            let sf = SpectralFunction::ohmic(0.2, 1.5, Some(3.0), Some(beta));
            let r = sf.evaluate(-0.3).unwrap() / sf.evaluate(0.3).unwrap();
            assert_relative_eq!(r, (-0.3 * beta).exp(), max_relative = 1e-12);
        }
    }

    #[test]
    fn cutoff_and_low_temperature_limit() {
        let sf = SpectralFunction::ohmic(0.5, 1.0, Some(0.5), Some(2.0));
        assert!(sf.evaluate(41.0 * 0.5).unwrap() < 1e-12 * sf.evaluate(0.5).unwrap());
        let hot = SpectralFunction::ohmic(0.5, 1.0, Some(1.0), Some(1e4));
        let cold = SpectralFunction::ohmic(0.5, 1.0, Some(1.0), None);
        for w in [0.1, 0.5, 2.0] {
            assert_relative_eq!(hot.evaluate(w).unwrap(), cold.evaluate(w).unwrap(), max_relative = 1e-4);
        }
    }

    #[test]
    fn tabulated_behaviour() {
        let zero = load_tabulated(&[(0.0, 0.0), (1.0, 0.0)]).unwrap();
        assert_eq!(zero.evaluate(0.4).unwrap(), 0.0);
        assert!(load_tabulated(&[(1.0, 0.0), (0.0, 1.0)]).is_err());
        assert!(load_tabulated(&[(0.0, -1.0), (1.0, 1.0)]).is_err());

        let exact = SpectralFunction::ohmic(0.5, 1.0, Some(1.0), Some(2.0));
        let samples: Vec<(f64, f64)> = (0..1001)
            .map(|i| {
                let w = 0.001 + 5.0 * i as f64 / 1000.0;
                (w, exact.evaluate(w).unwrap())
            })
            .collect();
        let tab = load_tabulated(&samples).unwrap();
        for w in [0.0123, 0.77, 2.3456, 4.9] {
            assert!((tab.evaluate(w).unwrap() - exact.evaluate(w).unwrap()).abs() < 1e-6);
        }
        assert_eq!(tab.evaluate(6.0).unwrap(), 0.0);
    }

    #[test]
    fn csv_loading() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        std::fs::write(&path, "omega,f\n0,0\n0.5,1\n1,2\n").unwrap();
        let sf = load_tabulated_path(&path).unwrap();
        assert_relative_eq!(sf.evaluate(0.5).unwrap(), 1.0);
        std::fs::write(&path, "0,0\n1,1\n").unwrap();
        assert!(load_tabulated_path(&path).is_ok());
        std::fs::write(&path, "0,0\n1,1\n0.5,2\n").unwrap();
        assert!(load_tabulated_path(&path).is_err());
    }

    #[test]
    fn weights_and_probes() {
        let probe = dirac_probe(0.5, 1.0).unwrap();
        assert_eq!(probe.evaluate(0.5).unwrap(), 0.0);
        assert_eq!(probe.weight_in(0.0, 1.0).unwrap(), 1.0);
        assert_eq!(probe.weight_in(0.6, 1.0).unwrap(), 0.0);
        assert!(dirac_probe(0.5, 0.0).is_err());

        // ∫₀^∞ 2ϑ ω e^{-ω/ω_c} = 2ϑ ω_c²
        let cold = SpectralFunction::ohmic(0.5, 1.0, Some(0.3), None);
        assert_relative_eq!(cold.weight_in(f64::NEG_INFINITY, f64::INFINITY).unwrap(), 0.09, max_relative = 1e-8);
        let sum = SpectralFunction::Sum { parts: vec![cold.clone(), probe] };
        assert_relative_eq!(sum.weight_in(f64::NEG_INFINITY, 100.0).unwrap(), 1.09, max_relative = 1e-8);
    }

    #[test]
    fn serde_round_trip() {
        let sfs = vec![
            SpectralFunction::ohmic(0.5, 1.0, Some(1.0), Some(3.0)),
            load_tabulated(&[(0.0, 0.0), (1.0, 2.0), (2.0, 0.5)]).unwrap(),
            dirac_probe(-0.2, 2.0).unwrap(),
        ];
        for sf in sfs {
            let s = serde_json::to_string(&sf).unwrap();
            let back: SpectralFunction = serde_json::from_str(&s).unwrap();
            assert_eq!(sf, back);
        }
        let bad = r#"{"kind":"tabulated","omega":[1,0],"f":[0,0]}"#;
        assert!(serde_json::from_str::<SpectralFunction>(bad).is_err());
    }
}
