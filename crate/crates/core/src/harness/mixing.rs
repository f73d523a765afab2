use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::kernel::{Kernel1D, ProductKernel};
use crate::model::Sde;
use crate::rng::derive_seed;
use crate::simulate::{simulate_with, SimConfig};

/// Empirical `k(s) = Cov(K_h(x - X_t), K_h(x - X_{t+s}))` per replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceTable {
    pub lags: Vec<f64>,
    pub lag_steps: Vec<usize>,
    pub per_replicate: Vec<Vec<f64>>,
    /// Mean over replicates.
    pub mean: Vec<f64>,
    /// Standard error of the mean over replicates.
    pub se: Vec<f64>,
    pub shuffled: bool,
}

/// Autocovariances of `y` at the given lags, centered at the full-series mean.
pub fn covariance_series(y: &[f64], lag_steps: &[usize]) -> Vec<f64> {
    let n = y.len();
    let mean = y.iter().sum::<f64>() / n as f64;
    let c: Vec<f64> = y.iter().map(|v| v - mean).collect();
    lag_steps
        .iter()
        .map(|&m| c[..n - m].iter().zip(&c[m..]).map(|(a, b)| a * b).sum::<f64>() / (n - m) as f64)
        .collect()
}

/// Simulates `replicates` paths and averages their autocovariance of
/// `K_h(x - X_t)`. With `shuffled`, each series is randomly permuted first,
/// which destroys the time dependence.
#[allow(clippy::too_many_arguments)]
pub fn covariance_probe(
    model: &dyn Sde,
    sim: &SimConfig,
    kernel: &Kernel1D,
    h: &[f64],
    x: &[f64],
    lags: &[f64],
    replicates: usize,
    seed_base: u64,
    shuffled: bool,
) -> Result<CovarianceTable> {
    check_dim(model.dim(), h.len())?;
    check_dim(model.dim(), x.len())?;
    if replicates < 2 {
        return Err(Error::Parameter("need at least 2 replicates".into()));
    }
    if let Some(&s) = lags.iter().find(|&&s| !(s >= 0.0 && s <= sim.horizon / 10.0)) {
        return Err(Error::Parameter(format!("lag {s} outside [0, T/10]")));
    }
    let pk = ProductKernel::shared(kernel, h)?;
    let lag_steps: Vec<usize> = lags.iter().map(|s| (s / sim.dt).round() as usize).collect();
    let per_replicate = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let seed = derive_seed(seed_base, 0, r as u64);
            let mut y = Vec::with_capacity(sim.n_steps());
            simulate_with(model, &sim.with_seed(seed), 1, |_, state| y.push(pk.eval_product(state, x)))?;
            if shuffled {
                y.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x5a5a_5a5a));
            }
            Ok(covariance_series(&y, &lag_steps))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = replicates as f64;
    let mean: Vec<f64> = (0..lags.len()).map(|i| per_replicate.iter().map(|k| k[i]).sum::<f64>() / n).collect();
    let se = (0..lags.len())
        .map(|i| (per_replicate.iter().map(|k| (k[i] - mean[i]).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt())
        .collect();
    Ok(CovarianceTable { lags: lags.to_vec(), lag_steps, per_replicate, mean, se, shuffled })
}

/// Slope of `log|k̄(s)|` against `s`, with a jackknife standard error over replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingSlope {
    pub slope: f64,
    pub intercept: f64,
    pub se: f64,
    pub lags_used: usize,
}

fn line_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Fits over lags in `[s_min, s_max]`.
pub fn mixing_slope(table: &CovarianceTable, s_min: f64, s_max: f64) -> Result<MixingSlope> {
    let idx: Vec<usize> = (0..table.lags.len()).filter(|&i| table.lags[i] >= s_min && table.lags[i] <= s_max).collect();
    if idx.len() < 3 {
        return Err(Error::Data(format!("need at least 3 lags in [{s_min}, {s_max}], got {}", idx.len())));
    }
    let xs: Vec<f64> = idx.iter().map(|&i| table.lags[i]).collect();
    let fit_from = |k: &dyn Fn(usize) -> f64| {
        let ys: Vec<f64> = idx.iter().map(|&i| k(i).abs().max(f64::MIN_POSITIVE).ln()).collect();
        line_fit(&xs, &ys)
    };
    let (slope, intercept) = fit_from(&|i| table.mean[i]);
    let r = table.per_replicate.len();
    let loo: Vec<f64> = (0..r)
        .map(|skip| {
            let mean_without = |i: usize| {
                table.per_replicate.iter().enumerate().filter(|&(q, _)| q != skip).map(|(_, k)| k[i]).sum::<f64>()
                    / (r - 1) as f64
            };
            fit_from(&mean_without).0
        })
        .collect();
    let loo_mean = loo.iter().sum::<f64>() / r as f64;
    let se = ((r - 1) as f64 / r as f64 * loo.iter().map(|s| (s - loo_mean).powi(2)).sum::<f64>()).sqrt();
    Ok(MixingSlope { slope, intercept, se, lags_used: idx.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::make_order_kernel;
    use crate::model::{AnalyticModel, GaussianDensity};

    #[test]
    fn lag_zero_is_the_variance() {
        let y: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 / 7.0).collect();
        let m = y.iter().sum::<f64>() / y.len() as f64;
        let var = y.iter().map(|v| (v - m).powi(2)).sum::<f64>() / y.len() as f64;
        let k = covariance_series(&y, &[0, 1]);
        assert!((k[0] - var).abs() < 1e-12 * var);
    }

    #[test]
    fn probe_rejects_long_lags() {
        let model = AnalyticModel::new(GaussianDensity::new(1));
        let sim = SimConfig::new(10.0, 0.01, 1.0, 0).unwrap();
        let k = make_order_kernel(2).unwrap();
        let err = covariance_probe(&model, &sim, &k, &[0.3], &[0.0], &[0.5, 2.0], 4, 1, false);
        assert!(err.is_err());
    }
}
