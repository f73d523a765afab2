//! Monte Carlo experiments: risk tables, rate fits, mixing probes and oracle ratios.

mod fit;
mod mixing;
mod mse;
mod oracle;

pub use fit::{fit_rate, PreferredModel, RateFit};
pub use mixing::{covariance_probe, covariance_series, mixing_slope, CovarianceTable, MixingSlope};
pub use mse::{
    mse_experiment, replicate_estimates, BandwidthPolicy, DtRule, LadderEstimates, MseRow, RateExperimentConfig,
    Target,
};
pub use oracle::{oracle_check, oracle_sweep, OracleRow};
