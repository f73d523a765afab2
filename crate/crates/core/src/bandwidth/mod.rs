//! Rate formulas, variance regimes, and Goldenshluger–Lepski bandwidth selection.

mod grid;
mod select;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use grid::{build_candidate_grid, satisfies_constraints, CandidateGrid, GridParams};
pub use select::{compute_a, penalty_v, select_bandwidth, CandidateScore, SelectionResult, Selector};

/// Permutation ordering values increasingly, ties by smaller index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SortedIndex(Vec<usize>);

impl SortedIndex {
    pub fn of(values: &[f64]) -> Self {
        let mut idx: Vec<usize> = (0..values.len()).collect();
        idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        Self(idx)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }

    /// Values in sorted order.
    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        self.0.iter().map(|&i| values[i]).collect()
    }
}

/// `β̄₃`: harmonic mean of `β` without its two smallest entries.
pub fn harmonic_mean_tail(beta: &[f64]) -> Result<f64> {
    let d = beta.len();
    if d < 3 {
        return Err(Error::Dimension { expected: 3, got: d });
    }
    let sorted = SortedIndex::of(beta).apply(beta);
    let inv: f64 = sorted[2..].iter().map(|b| 1.0 / b).sum();
    Ok((d - 2) as f64 / inv)
}

/// Minimax exponent `γ` of the squared risk and whether a `log T` factor applies.
pub fn predicted_rate(beta: &[f64]) -> Result<(f64, bool)> {
    match beta.len() {
        0 => Err(Error::Parameter("beta is empty".into())),
        1 => Ok((1.0, false)),
        2 => Ok((1.0, true)),
        d => {
            let b3 = harmonic_mean_tail(beta)?;
            let sorted = SortedIndex::of(beta).apply(beta);
            Ok((2.0 * b3 / (2.0 * b3 + (d - 2) as f64), sorted[1] < sorted[2]))
        }
    }
}

/// Variance regime, determined by the multiplicity `k₀` of the smallest `β`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Regime {
    /// `k₀ = 1` with `β₍₂₎ < β₍₃₎`, or `k₀ = 2`.
    Log,
    /// `k₀ = 1` with `β₍₂₎ = β₍₃₎`.
    Sqrt,
    /// `k₀ ≥ 3`.
    PowerK0 { k0: usize },
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Log => write!(f, "LOG"),
            Self::Sqrt => write!(f, "SQRT"),
            Self::PowerK0 { k0 } => write!(f, "POWER_K0(k0={k0})"),
        }
    }
}

/// `(k₀, regime)` for `β`, `d ≥ 3`.
pub fn classify_regime(beta: &[f64]) -> Result<(usize, Regime)> {
    if beta.len() < 3 {
        return Err(Error::Dimension { expected: 3, got: beta.len() });
    }
    let s = SortedIndex::of(beta).apply(beta);
    let k0 = s.iter().take_while(|&&b| b == s[0]).count();
    let regime = match k0 {
        1 if s[1] == s[2] => Regime::Sqrt,
        1 | 2 => Regime::Log,
        k0 => Regime::PowerK0 { k0 },
    };
    Ok((k0, regime))
}

/// Variance bound of `π̂_h(x)` in `regime`, with `h` taken in increasing order.
pub fn variance_bound(h: &[f64], t: f64, regime: Regime, c: f64) -> Result<f64> {
    let d = h.len();
    if d < 3 {
        return Err(Error::Dimension { expected: 3, got: d });
    }
    if let Some(bad) = h.iter().find(|&&v| !(v > 0.0 && v < 1.0)) {
        return Err(Error::Parameter(format!("bandwidths must lie in (0, 1), got {bad}")));
    }
    let s = SortedIndex::of(h).apply(h);
    let tail = |from: usize| s[from..].iter().product::<f64>();
    let core = match regime {
        Regime::Log => h.iter().map(|v| v.ln().abs()).sum::<f64>() / tail(2),
        Regime::Sqrt => 1.0 / ((s[1] * s[2]).sqrt() * tail(3)),
        Regime::PowerK0 { k0 } => {
            if k0 < 3 || k0 > d {
                return Err(Error::Parameter(format!("k0 = {k0} is not a POWER_K0 regime for d = {d}")));
            }
            let head: f64 = s[..k0].iter().product();
            1.0 / (head.powf(1.0 - 2.0 / k0 as f64) * tail(k0))
        }
    };
    Ok(c / t * core)
}

/// Exponents `a_l` of the rate-optimal bandwidth `h*_l = base^{a_l}`.
pub fn rate_exponents(beta: &[f64]) -> Result<Vec<f64>> {
    match beta.len() {
        0 | 1 => Err(Error::Parameter("rate-optimal bandwidths need d >= 2".into())),
        2 => Ok(beta.iter().map(|b| 1.0 / (2.0 * b)).collect()),
        d => {
            let b3 = harmonic_mean_tail(beta)?;
            Ok(beta.iter().map(|b| b3 / (b * (2.0 * b3 + (d - 2) as f64))).collect())
        }
    }
}

/// Rate-optimal bandwidth in the original axis order: `(log T / T)^{a_l}` when
/// the rate carries a logarithm, `(1/T)^{a_l}` otherwise.
pub fn rate_optimal_bandwidth(beta: &[f64], t: f64) -> Result<Vec<f64>> {
    if !(t >= 3.0) {
        return Err(Error::Parameter(format!("rate-optimal bandwidths need T >= 3, got {t}")));
    }
    if let Some(bad) = beta.iter().find(|&&b| !(b > 0.0)) {
        return Err(Error::Parameter(format!("beta must be positive, got {bad}")));
    }
    let a = rate_exponents(beta)?;
    let (_, has_log) = predicted_rate(beta)?;
    let base = if has_log { t.ln() / t } else { 1.0 / t };
    Ok(a.iter().map(|&al| base.powf(al)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_mean_examples() {
        assert_eq!(harmonic_mean_tail(&[2.0, 2.0, 2.0]).unwrap(), 2.0);
        assert!((harmonic_mean_tail(&[1.0, 2.0, 3.0, 4.0]).unwrap() - 24.0 / 7.0).abs() < 1e-14);
        assert_eq!(harmonic_mean_tail(&[3.0, 1.0, 2.0]).unwrap(), 3.0);
        assert!(harmonic_mean_tail(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn predicted_rate_examples() {
        let (g, l) = predicted_rate(&[2.0, 2.0, 2.0]).unwrap();
        assert!((g - 0.8).abs() < 1e-15 && !l);
        let (g, l) = predicted_rate(&[1.0, 2.0, 3.0]).unwrap();
        assert!((g - 6.0 / 7.0).abs() < 1e-15 && l);
        assert_eq!(predicted_rate(&[5.0, 0.5]).unwrap(), (1.0, true));
        assert_eq!(predicted_rate(&[5.0]).unwrap(), (1.0, false));
    }

    #[test]
    fn regimes() {
        assert_eq!(classify_regime(&[1.0, 2.0, 3.0]).unwrap(), (1, Regime::Log));
        assert_eq!(classify_regime(&[1.0, 2.0, 2.0]).unwrap(), (1, Regime::Sqrt));
        assert_eq!(classify_regime(&[2.0, 2.0, 2.0]).unwrap(), (3, Regime::PowerK0 { k0: 3 }));
        assert_eq!(classify_regime(&[2.0, 1.0, 1.0, 4.0]).unwrap(), (2, Regime::Log));
        assert!(classify_regime(&[1.0, 1.0]).is_err());
    }

    #[test]
    fn variance_bound_examples() {
        let h = [0.1; 3];
        let log = variance_bound(&h, 1000.0, Regime::Log, 1.0).unwrap();
        assert!((log - 3.0 * 10f64.ln() / 100.0).abs() < 1e-15);
        let sqrt = variance_bound(&h, 1000.0, Regime::Sqrt, 1.0).unwrap();
        assert!((sqrt - 0.01).abs() < 1e-15);
        let h4 = [0.3; 4];
        let p = variance_bound(&h4, 500.0, Regime::PowerK0 { k0: 4 }, 2.0).unwrap();
        assert!((p - 2.0 / 500.0 * 0.3f64.powi(-2)).abs() < 1e-12 * p);
    }

    #[test]
    fn rate_optimal_examples() {
        let t = 1e4;
        let h = rate_optimal_bandwidth(&[2.0, 2.0, 2.0], t).unwrap();
        for v in h {
            assert!((v - t.powf(-0.2)).abs() < 1e-15);
        }
        let a = rate_exponents(&[1.0, 2.0, 3.0]).unwrap();
        let expected = [3.0 / 7.0, 3.0 / 14.0, 1.0 / 7.0];
        for (x, y) in a.iter().zip(expected) {
            assert!((x - y).abs() < 1e-15);
        }
        let h = rate_optimal_bandwidth(&[1.0, 2.0, 3.0], 1000.0).unwrap();
        let base = 1000f64.ln() / 1000.0;
        assert!((h[2] - base.powf(1.0 / 7.0)).abs() < 1e-15);
        let h2 = rate_optimal_bandwidth(&[1.0, 1.0], 1000.0).unwrap();
        assert!((h2[0] - base.sqrt()).abs() < 1e-15 && h2[0] == h2[1]);
        assert!(rate_optimal_bandwidth(&[1.0], 1000.0).is_err());
    }
}
