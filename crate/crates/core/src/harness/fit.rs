use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PreferredModel {
    Power,
    LogPower,
}

/// Free log-log fit plus the two one-parameter fits at a fixed exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the free slope.
    pub slope_se: f64,
    pub gamma: f64,
    /// Residual sum of squares of `log MSE = log c - γ log T`.
    pub residual_power: f64,
    /// Residual sum of squares of `log MSE = log c + γ log(log T / T)`.
    pub residual_logpower: f64,
    pub preferred_model: PreferredModel,
    /// `residual_power / residual_logpower`.
    pub residual_ratio: f64,
    /// Whether the two residuals are within 10% of each other.
    pub indistinguishable: bool,
}

/// Fits `(T, MSE)` pairs. Needs at least four points and positive MSE.
pub fn fit_rate(table: &[(f64, f64)], gamma: f64) -> Result<RateFit> {
    if table.len() < 4 {
        return Err(Error::Data(format!("rate fits need at least 4 ladder points, got {}", table.len())));
    }
    if let Some(&(t, m)) = table.iter().find(|&&(t, m)| !(m > 0.0) || !(t > 1.0)) {
        return Err(Error::Data(format!("nonpositive entry at T = {t}: MSE = {m}")));
    }
    let x: Vec<f64> = table.iter().map(|&(t, _)| t.ln()).collect();
    let y: Vec<f64> = table.iter().map(|&(_, m)| m.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(&y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let slope_se = (rss / (n - 2.0) / sxx).sqrt();

    // one-parameter fits: only log c is free, estimated by the mean residual
    let constrained = |basis: &dyn Fn(f64) -> f64| {
        let r: Vec<f64> = table.iter().zip(&y).map(|(&(t, _), b)| b - gamma * basis(t)).collect();
        let c = r.iter().sum::<f64>() / n;
        r.iter().map(|v| (v - c).powi(2)).sum::<f64>()
    };
    let residual_power = constrained(&|t: f64| -t.ln());
    let residual_logpower = constrained(&|t: f64| (t.ln() / t).ln());
    let preferred_model =
        if residual_power <= residual_logpower { PreferredModel::Power } else { PreferredModel::LogPower };
    let residual_ratio = residual_power / residual_logpower;
    let (lo, hi) = (residual_power.min(residual_logpower), residual_power.max(residual_logpower));
    Ok(RateFit {
        slope,
        intercept,
        slope_se,
        gamma,
        residual_power,
        residual_logpower,
        preferred_model,
        residual_ratio,
        indistinguishable: hi <= 1.1 * lo,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_power_law() {
        let table: Vec<(f64, f64)> = [500.0f64, 1000.0, 2000.0, 4000.0, 8000.0].iter().map(|&t| (t, t.powf(-0.8))).collect();
        let fit = fit_rate(&table, 0.8).unwrap();
        assert!((fit.slope + 0.8).abs() < 1e-10);
        assert_eq!(fit.preferred_model, PreferredModel::Power);
        assert!(fit.residual_power < 1e-20);
    }

    #[test]
    fn noiseless_log_power_law() {
        let table: Vec<(f64, f64)> =
            (3..=6).map(|e| 10f64.powi(e)).map(|t| (t, (t.ln() / t).powf(0.8))).collect();
        let fit = fit_rate(&table, 0.8).unwrap();
        assert_eq!(fit.preferred_model, PreferredModel::LogPower);
        assert!(fit.residual_logpower < 1e-20);
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(fit_rate(&[(10.0, 1.0), (20.0, 0.5), (40.0, 0.25)], 1.0).is_err());
        assert!(fit_rate(&[(10.0, 1.0), (20.0, 0.0), (40.0, 0.25), (80.0, 0.1)], 1.0).is_err());
    }
}
