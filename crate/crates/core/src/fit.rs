//! Ordinary least-squares fits on transformed coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// `y = A x^p`
    PowerLaw,
    /// `y = A e^{r x}`
    Exponential,
    /// `y = a + b x`
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    /// Power `p`, rate `r` or slope `b`.
    pub exponent: f64,
    /// `A`, or the intercept `a` for linear fits.
    pub prefactor: f64,
    pub r2: f64,
    /// Residuals in the transformed coordinates.
    pub residuals: Vec<f64>,
    /// `(min x, max x)` of the data used.
    pub window: (f64, f64),
}

pub const MIN_POINTS: usize = 4;

fn ols(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64, Vec<f64>)> {
    if xs.len() != ys.len() {
        return Err(Error::FitFailure(format!("{} x values but {} y values", xs.len(), ys.len())));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::FitFailure("non-finite data".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::FitFailure("degenerate x values".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| y - (intercept + slope * x)).collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) } else { 1.0 };
    Ok((intercept, slope, r2, residuals))
}

fn window(xs: &[f64]) -> (f64, f64) {
    xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)))
}

fn need(xs: &[f64], min: usize) -> Result<()> {
    if xs.len() < min {
        return Err(Error::FitFailure(format!("need at least {min} points, got {}", xs.len())));
    }
    Ok(())
}

fn logs(v: &[f64], what: &str) -> Result<Vec<f64>> {
    v.iter()
        .map(|&y| {
            if y > 0.0 {
                Ok(y.ln())
            } else {
                Err(Error::FitFailure(format!("nonpositive {what} value {y}")))
            }
        })
        .collect()
}

/// Needs at least three points.
pub fn fit_linear(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    need(xs, 3)?;
    let (a, b, r2, residuals) = ols(xs, ys)?;
    Ok(FitResult { model: FitModel::Linear, exponent: b, prefactor: a, r2, residuals, window: window(xs) })
}

pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    need(xs, MIN_POINTS)?;
    let (lx, ly) = (logs(xs, "x")?, logs(ys, "y")?);
    let (a, b, r2, residuals) = ols(&lx, &ly)?;
    Ok(FitResult { model: FitModel::PowerLaw, exponent: b, prefactor: a.exp(), r2, residuals, window: window(xs) })
}

pub fn fit_exponential(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    need(xs, MIN_POINTS)?;
    let ly = logs(ys, "y")?;
    let (a, b, r2, residuals) = ols(xs, &ly)?;
    Ok(FitResult { model: FitModel::Exponential, exponent: b, prefactor: a.exp(), r2, residuals, window: window(xs) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exact_power_law() {
        let xs = [1.0, 2.0, 3.0, 5.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let f = fit_power_law(&xs, &ys).unwrap();
        assert_relative_eq!(f.exponent, 2.0, epsilon = 1e-12);
        assert_relative_eq!(f.prefactor, 1.0, epsilon = 1e-12);
        assert_relative_eq!(f.r2, 1.0, epsilon = 1e-12);
        assert_eq!(f.window, (1.0, 8.0));
    }

    #[test]
    fn exact_exponential() {
        let xs = [0.0f64, 1.0, 2.0, 3.5, 6.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * (-0.7 * x).exp()).collect();
        let f = fit_exponential(&xs, &ys).unwrap();
        assert!((f.exponent + 0.7).abs() < 1e-9);
        assert_relative_eq!(f.prefactor, 3.0, epsilon = 1e-9);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fit_power_law(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(fit_power_law(&[1.0, 2.0, 3.0, 4.0], &[1.0, 0.0, 3.0, 4.0]).is_err());
        assert!(fit_exponential(&[2.0; 4], &[1.0, 2.0, 3.0, 4.0]).is_err());
        assert!(fit_linear(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn noisy_fit_has_partial_r2() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let ys = [1.0, 3.0, 2.0, 5.0, 4.0];
        let f = fit_linear(&xs, &ys).unwrap();
        assert!(f.r2 > 0.0 && f.r2 < 1.0);
        assert_relative_eq!(f.residuals.iter().sum::<f64>(), 0.0, epsilon = 1e-12);
    }
}
