use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandwidth::{penalty_v, CandidateGrid, Selector};
use crate::error::{Error, Result};
use crate::estimator::{bias_proxy, EvalRegion};
use crate::kernel::Kernel1D;
use crate::model::AnalyticModel;
use crate::simulate::{euler_maruyama, SimConfig};

/// `(B(h̃) + V(h̃)) / min_h (B(h) + V(h))` for one seed and penalty constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub seed: u64,
    pub k: f64,
    pub h_tilde: Vec<f64>,
    pub selected_index: usize,
    pub selected_risk: f64,
    pub best_index: usize,
    pub best_risk: f64,
    pub ratio: f64,
}

/// Oracle ratios for every seed and every penalty constant in `ks`
/// (outer index: `ks`). Bias proxies are computed once per grid member.
#[allow(clippy::too_many_arguments)]
pub fn oracle_sweep(
    model: &AnalyticModel,
    sim: &SimConfig,
    seeds: &[u64],
    kernel: &Kernel1D,
    grid: &CandidateGrid,
    region: &EvalRegion,
    ks: &[f64],
) -> Result<Vec<Vec<OracleRow>>> {
    if ks.is_empty() {
        return Err(Error::Parameter("no penalty constants given".into()));
    }
    let bias: Vec<f64> = grid
        .members()
        .par_iter()
        .map(|h| bias_proxy(model, kernel, h, region))
        .collect::<Result<_>>()?;
    let mut rows = vec![Vec::with_capacity(seeds.len()); ks.len()];
    for &seed in seeds {
        let path = euler_maruyama(model, &sim.with_seed(seed))?;
        let mut selector = Selector::new(&path, kernel, grid, region, ks[0])?;
        for (i, &k) in ks.iter().enumerate() {
            selector.set_penalty(k)?;
            let sel = selector.select();
            let risk: Vec<f64> = grid
                .members()
                .iter()
                .zip(&bias)
                .map(|(h, b)| Ok(b + penalty_v(h, path.horizon(), k)?))
                .collect::<Result<_>>()?;
            let mut best = 0;
            for (m, r) in risk.iter().enumerate() {
                if *r < risk[best] {
                    best = m;
                }
            }
            rows[i].push(OracleRow {
                seed,
                k,
                h_tilde: sel.h_tilde,
                selected_index: sel.index,
                selected_risk: risk[sel.index],
                best_index: best,
                best_risk: risk[best],
                ratio: risk[sel.index] / risk[best],
            });
        }
    }
    Ok(rows)
}

/// Oracle ratios per seed at penalty constant `k`.
pub fn oracle_check(
    model: &AnalyticModel,
    sim: &SimConfig,
    seeds: &[u64],
    kernel: &Kernel1D,
    grid: &CandidateGrid,
    region: &EvalRegion,
    k: f64,
) -> Result<Vec<OracleRow>> {
    Ok(oracle_sweep(model, sim, seeds, kernel, grid, region, &[k])?.remove(0))
}
