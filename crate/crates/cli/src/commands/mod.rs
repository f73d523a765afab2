//! Subcommand implementations and the config sections they share.

pub mod adapt;
pub mod calibrate;
pub mod estimate;
pub mod kernel_check;
pub mod mixing;
pub mod rate;
pub mod simulate;

use std::path::PathBuf;

use ergodens_core::bandwidth::{build_candidate_grid, CandidateGrid, GridParams};
use ergodens_core::estimator::EvalRegion;
use ergodens_core::simulate::SimConfig;
use serde::Deserialize;

use crate::config::ConfigError;

/// Options shared by every subcommand.
pub struct Context {
    pub out: PathBuf,
    pub plot_data: bool,
    pub dump_path: Option<PathBuf>,
}

/// Raised when a run completes but its own checks fail; maps to exit code 4.
#[derive(Debug)]
pub struct CheckFailed(pub String);

impl std::fmt::Display for CheckFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "check failed: {}", self.0)
    }
}

impl std::error::Error for CheckFailed {}

fn default_burn_in() -> f64 {
    20.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub horizon: f64,
    pub dt: f64,
    #[serde(default = "default_burn_in")]
    pub burn_in: f64,
}

impl SimSection {
    pub fn build(&self, seed: u64) -> ergodens_core::Result<SimConfig> {
        SimConfig::new(self.horizon, self.dt, self.burn_in, seed)
    }
}

/// `[lo, hi]` box; without `nodes`, the spacing is a quarter of the
/// smallest bandwidth in play.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSection {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    #[serde(default)]
    pub nodes: Option<Vec<usize>>,
}

impl RegionSection {
    pub fn build(&self, min_h: f64) -> ergodens_core::Result<EvalRegion> {
        match &self.nodes {
            Some(n) => EvalRegion::new(self.lo.clone(), self.hi.clone(), n.clone()),
            None => EvalRegion::with_max_spacing(self.lo.clone(), self.hi.clone(), min_h / 4.0),
        }
    }
}

pub fn default_cap() -> usize {
    8
}

/// Candidate grid: explicit `z` vectors, or built from `[grid]` constants.
pub fn build_grid(
    z: Option<&Vec<Vec<u64>>>,
    params: Option<GridParams>,
    per_axis_cap: usize,
    t: f64,
    d: usize,
) -> anyhow::Result<CandidateGrid> {
    match (z, params) {
        (Some(_), Some(_)) => Err(ConfigError("give either `z` or `[grid]`, not both".into()).into()),
        (Some(z), None) => {
            let grid = CandidateGrid::explicit(z.clone(), t)?;
            if grid.dim() != d {
                return Err(ConfigError(format!("grid vectors have dimension {}, model has {d}", grid.dim())).into());
            }
            Ok(grid)
        }
        (None, params) => Ok(build_candidate_grid(t, d, params.unwrap_or_default(), per_axis_cap)?),
    }
}

pub fn min_of(h: &[f64]) -> f64 {
    h.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Kernel order for a nominal smoothness: `⌈max β⌉`, at least 1.
pub fn order_for(beta: &[f64]) -> usize {
    (beta.iter().copied().fold(1.0, f64::max).ceil() as usize).max(1)
}
