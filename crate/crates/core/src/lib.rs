//! Simulation of ergodic diffusions with known invariant density, anisotropic
//! kernel estimation of that density, and Goldenshluger–Lepski bandwidth
//! selection.

pub mod bandwidth;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod kernel;
pub mod model;
pub mod quad;
pub mod rng;
pub mod simulate;
pub mod smooth;

pub use bandwidth::{
    build_candidate_grid, classify_regime, compute_a, harmonic_mean_tail, penalty_v, predicted_rate,
    rate_optimal_bandwidth, select_bandwidth, variance_bound, CandidateGrid, Regime, SelectionResult,
    SortedIndex,
};
pub use error::{Error, Result};
pub use estimator::{bias_proxy, kde_convolved, kde_pointwise, l2_norm_sq_on_region, EvalRegion};
pub use kernel::{
    convolve_axis, make_bump_kernel, make_order_kernel, BumpKernel1D, ConvolutionTable, Kernel1D, ProductKernel,
};
pub use model::{
    drift_from_density, AnalyticModel, CoefficientClassParams, Density, ModelSpec, Sde, SmoothnessSpec,
};
pub use simulate::{euler_maruyama, stationary_start, PathGrid, SimConfig};
