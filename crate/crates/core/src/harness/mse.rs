use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandwidth::{build_candidate_grid, rate_optimal_bandwidth, select_bandwidth, CandidateGrid, GridParams};
use crate::error::{Error, Result};
use crate::estimator::{estimate_on_grid, kde_pointwise, l2_norm_sq_values, EvalRegion};
use crate::kernel::{make_order_kernel, Kernel1D};
use crate::model::{AnalyticModel, ModelSpec};
use crate::rng::derive_seed;
use crate::simulate::{euler_maruyama, simulate_with, PathGrid, SimConfig};

/// How the bandwidth is chosen at each horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BandwidthPolicy {
    /// `h*(T)` for the nominal `β`.
    RateOptimal,
    Fixed { h: Vec<f64> },
    /// Goldenshluger–Lepski selection per replicate; without `z` the grid is
    /// built from the constraint constants.
    Adaptive {
        #[serde(default)]
        z: Option<Vec<Vec<u64>>>,
        #[serde(default)]
        grid: Option<GridParams>,
        #[serde(default = "default_cap")]
        per_axis_cap: usize,
        #[serde(default = "default_k")]
        k: f64,
    },
}

fn default_cap() -> usize {
    8
}

fn default_k() -> f64 {
    2.0
}

/// Euler step per horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DtRule {
    Fixed { dt: f64 },
    /// `dt = fraction · (min_l h_l)²`.
    BandwidthSquared { fraction: f64 },
}

/// Where the error is measured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Target {
    /// Squared error `(π̂(x) - π(x))²`.
    Point { x: Vec<f64> },
    /// `‖π̂ - π‖²` on the region grid.
    Region { region: EvalRegion },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateExperimentConfig {
    pub model: ModelSpec,
    /// Nominal smoothness used by the bandwidth policy and kernel order.
    pub beta: Vec<f64>,
    pub t_ladder: Vec<f64>,
    pub replicates: usize,
    pub target: Target,
    pub policy: BandwidthPolicy,
    pub dt: DtRule,
    pub burn_in: f64,
    pub seed_base: u64,
    /// Defaults to `⌈max β⌉`.
    #[serde(default)]
    pub kernel_order: Option<usize>,
}

impl RateExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t_ladder.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Parameter("the T ladder must be strictly increasing".into()));
        }
        if self.replicates < 20 {
            return Err(Error::Parameter(format!("need at least 20 replicates, got {}", self.replicates)));
        }
        if self.beta.len() != self.model.dim() {
            return Err(Error::Dimension { expected: self.model.dim(), got: self.beta.len() });
        }
        Ok(())
    }

    pub fn kernel(&self) -> Result<Kernel1D> {
        let order = self.kernel_order.unwrap_or_else(|| {
            self.beta.iter().fold(0.0f64, |a, &b| a.max(b)).ceil() as usize
        });
        make_order_kernel(order)
    }
}

/// Per-replicate results at one horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderEstimates {
    pub t: f64,
    pub dt: f64,
    /// Policy bandwidth; `None` when selected per replicate.
    pub h: Option<Vec<f64>>,
    /// `π̂(x)` for point targets, `None` for diverged replicates.
    pub estimates: Vec<Option<f64>>,
    /// Loss per replicate, `None` for diverged replicates.
    pub losses: Vec<Option<f64>>,
    /// Selected bandwidths under the adaptive policy.
    pub selected: Vec<Option<Vec<f64>>>,
    pub truth: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseRow {
    pub t: f64,
    pub dt: f64,
    pub h: Option<Vec<f64>>,
    pub mse: f64,
    /// Monte Carlo standard error of `mse`.
    pub se: f64,
    pub mean_estimate: Option<f64>,
    pub var_estimate: Option<f64>,
    pub used: usize,
    pub diverged: usize,
}

impl LadderEstimates {
    pub fn row(&self) -> MseRow {
        let losses: Vec<f64> = self.losses.iter().flatten().copied().collect();
        let n = losses.len() as f64;
        let mse = losses.iter().sum::<f64>() / n;
        let se = (losses.iter().map(|l| (l - mse).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
        let est: Vec<f64> = self.estimates.iter().flatten().copied().collect();
        let (mean_estimate, var_estimate) = if est.is_empty() {
            (None, None)
        } else {
            let m = est.iter().sum::<f64>() / est.len() as f64;
            let v = est.iter().map(|e| (e - m).powi(2)).sum::<f64>() / (est.len() as f64 - 1.0);
            (Some(m), Some(v))
        };
        MseRow {
            t: self.t,
            dt: self.dt,
            h: self.h.clone(),
            mse,
            se,
            mean_estimate,
            var_estimate,
            used: losses.len(),
            diverged: self.losses.len() - losses.len(),
        }
    }
}

enum Plan {
    Fixed(Vec<f64>),
    Adaptive(CandidateGrid, f64),
}

fn plan(config: &RateExperimentConfig, t: f64) -> Result<Plan> {
    Ok(match &config.policy {
        BandwidthPolicy::RateOptimal => Plan::Fixed(rate_optimal_bandwidth(&config.beta, t)?),
        BandwidthPolicy::Fixed { h } => Plan::Fixed(h.clone()),
        BandwidthPolicy::Adaptive { z, grid, per_axis_cap, k } => {
            let g = match z {
                Some(z) => CandidateGrid::explicit(z.clone(), t)?,
                None => build_candidate_grid(t, config.beta.len(), grid.unwrap_or_default(), *per_axis_cap)?,
            };
            Plan::Adaptive(g, *k)
        }
    })
}

fn min_h(plan: &Plan) -> f64 {
    match plan {
        Plan::Fixed(h) => h.iter().copied().fold(f64::INFINITY, f64::min),
        Plan::Adaptive(g, _) => g.members().iter().flatten().copied().fold(f64::INFINITY, f64::min),
    }
}

/// Runs every `(T, replicate)` pair; replicate `r` at ladder point `i` uses
/// seed `derive_seed(seed_base, i, r)`, so extending `replicates` keeps the
/// earlier replicates unchanged.
pub fn replicate_estimates(config: &RateExperimentConfig) -> Result<Vec<LadderEstimates>> {
    config.validate()?;
    let model = config.model.build()?;
    let kernel = config.kernel()?;
    let mut out = Vec::with_capacity(config.t_ladder.len());
    for (i, &t) in config.t_ladder.iter().enumerate() {
        let plan = plan(config, t)?;
        let dt = match config.dt {
            DtRule::Fixed { dt } => dt,
            DtRule::BandwidthSquared { fraction } => fraction * min_h(&plan).powi(2),
        };
        let burn_in = (config.burn_in / dt).round() * dt;
        let sim = SimConfig::new(t, dt, burn_in, 0)?;
        let results: Vec<Result<(Option<f64>, f64, Option<Vec<f64>>)>> = (0..config.replicates)
            .into_par_iter()
            .map(|r| {
                let cfg = sim.with_seed(derive_seed(config.seed_base, i as u64, r as u64));
                run_replicate(&model, &kernel, &plan, &config.target, &cfg)
            })
            .collect();
        let mut estimates = Vec::with_capacity(results.len());
        let mut losses = Vec::with_capacity(results.len());
        let mut selected = Vec::with_capacity(results.len());
        for res in results {
            match res {
                Ok((e, l, s)) => {
                    estimates.push(e);
                    losses.push(Some(l));
                    selected.push(s);
                }
                Err(Error::Divergence { .. }) => {
                    estimates.push(None);
                    losses.push(None);
                    selected.push(None);
                }
                Err(e) => return Err(e),
            }
        }
        let diverged = losses.iter().filter(|l| l.is_none()).count();
        if diverged * 100 > config.replicates {
            return Err(Error::DivergenceBudget { diverged, replicates: config.replicates, horizon: t });
        }
        let truth = match &config.target {
            Target::Point { x } => Some(model.pdf(x)),
            Target::Region { .. } => None,
        };
        if !matches!(config.target, Target::Point { .. }) {
            estimates.iter_mut().for_each(|e| *e = None);
        }
        out.push(LadderEstimates {
            t,
            dt,
            h: match &plan {
                Plan::Fixed(h) => Some(h.clone()),
                Plan::Adaptive(..) => None,
            },
            estimates,
            losses,
            selected,
            truth,
        });
    }
    Ok(out)
}

type Outcome = (Option<f64>, f64, Option<Vec<f64>>);

fn run_replicate(
    model: &AnalyticModel,
    kernel: &Kernel1D,
    plan: &Plan,
    target: &Target,
    cfg: &SimConfig,
) -> Result<Outcome> {
    match (plan, target) {
        (Plan::Fixed(h), Target::Point { x }) => {
            // stream the path: only the kernel sum at x is kept
            let mut acc = 0.0;
            simulate_with(model, cfg, 1, |_, state| {
                let mut prod = 1.0;
                for j in 0..x.len() {
                    let u = (x[j] - state[j]) / h[j];
                    if u.abs() > 1.0 {
                        return;
                    }
                    prod *= kernel.eval(u) / h[j];
                }
                acc += prod;
            })?;
            let est = acc / cfg.n_steps() as f64;
            Ok((Some(est), (est - model.pdf(x)).powi(2), None))
        }
        (Plan::Fixed(h), Target::Region { region }) => {
            let path = euler_maruyama(model, cfg)?;
            Ok((None, region_loss(model, &path, kernel, h, region)?, None))
        }
        (Plan::Adaptive(grid, k), target) => {
            let path = euler_maruyama(model, cfg)?;
            let region = match target {
                Target::Region { region } => region.clone(),
                Target::Point { x } => {
                    let h_min = grid.members().iter().flatten().copied().fold(f64::INFINITY, f64::min);
                    let lo = x.iter().map(|v| v - 0.5).collect();
                    let hi = x.iter().map(|v| v + 0.5).collect();
                    EvalRegion::with_max_spacing(lo, hi, h_min / 4.0)?
                }
            };
            let h = select_bandwidth(&path, kernel, grid, &region, *k)?.h_tilde;
            match target {
                Target::Point { x } => {
                    let est = kde_pointwise(&path, kernel, &h, x)?;
                    Ok((Some(est), (est - model.pdf(x)).powi(2), Some(h)))
                }
                Target::Region { region } => Ok((None, region_loss(model, &path, kernel, &h, region)?, Some(h))),
            }
        }
    }
}

fn region_loss(model: &AnalyticModel, path: &PathGrid, kernel: &Kernel1D, h: &[f64], region: &EvalRegion) -> Result<f64> {
    let est = estimate_on_grid(path, kernel, h, region)?;
    let mut x = vec![0.0; region.dim()];
    let diff: Vec<f64> = est
        .values
        .iter()
        .enumerate()
        .map(|(flat, v)| {
            region.point(flat, &mut x);
            v - model.pdf(&x)
        })
        .collect();
    Ok(l2_norm_sq_values(&diff, region))
}

/// Mean loss per horizon with its Monte Carlo standard error.
pub fn mse_experiment(config: &RateExperimentConfig) -> Result<Vec<MseRow>> {
    Ok(replicate_estimates(config)?.iter().map(LadderEstimates::row).collect())
}
