//! Power law `d = c·ε^(−α)` by least squares in log-log space.

use serde::{Deserialize, Serialize};

use crate::error::{ExperimentError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub c: f64,
    pub alpha: f64,
    /// Root-mean-square of the log residuals.
    pub residual: f64,
}

impl ScalingFit {
    pub fn predict(&self, epsilon: f64) -> f64 {
        self.c * epsilon.powf(-self.alpha)
    }
}

/// Fits `(ε, d)` pairs. Needs two distinct positive `ε` and positive `d`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<ScalingFit> {
    if points.len() < 2 {
        return Err(ExperimentError::TooFewPoints(points.len()));
    }
    if let Some(&(e, d)) = points
        .iter()
        .find(|(e, d)| !(*e > 0.0 && *d > 0.0 && e.is_finite() && d.is_finite()))
    {
        return Err(ExperimentError::NonPositive(e, d));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= f64::EPSILON * xs.iter().map(|x| x * x).sum::<f64>() {
        return Err(ExperimentError::DegenerateGrid);
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(ScalingFit {
        c: intercept.exp(),
        alpha: -slope,
        residual: (sse / n).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn exact_recovery() {
        let pts: Vec<(f64, f64)> = [0.01, 0.015, 0.02, 0.03]
            .iter()
            .map(|&e| (e, 0.171 * f64::powf(e, -1.06)))
            .collect();
        let f = fit_power_law(&pts).unwrap();
        assert!((f.c - 0.171).abs() < 1e-12);
        assert!((f.alpha - 1.06).abs() < 1e-12);
        assert!(f.residual <= 1e-12);
    }

    #[test]
    fn noisy_inverse_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let noise = Normal::new(0.0, 0.05).unwrap();
        let pts: Vec<(f64, f64)> = (0..12)
            .map(|i| {
                let e = 0.005 * (1.25f64).powi(i);
                (e, 5.0 / e * (1.0 + noise.sample(&mut rng)))
            })
            .collect();
        let f = fit_power_law(&pts).unwrap();
        assert!((0.9..=1.1).contains(&f.alpha), "{}", f.alpha);
    }

    #[test]
    fn errors() {
        assert!(matches!(fit_power_law(&[(0.1, 1.0)]), Err(ExperimentError::TooFewPoints(1))));
        assert!(matches!(
            fit_power_law(&[(0.1, 1.0), (0.1, 2.0)]),
            Err(ExperimentError::DegenerateGrid)
        ));
        assert!(matches!(
            fit_power_law(&[(0.1, 1.0), (-0.2, 2.0)]),
            Err(ExperimentError::NonPositive(..))
        ));
    }
}
