//! Penalty `V(h)`, bias estimate `A(h)`, and the selection `h̃ = argmin A + V`.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CandidateGrid, SortedIndex};
use crate::error::{check_dim, Error, Result};
use crate::estimator::{evaluate_products, l2_dist_sq_values, EvalRegion};
use crate::kernel::{convolve_axis, AxisProfile, ConvolutionTable, Kernel1D, ScaledKernel};
use crate::simulate::PathGrid;

/// `V(h) = (k/T) min(Σ_j|log h_j| / ∏_{l∉{k₁,k₂}} h_l, 1/(√(h_{k₂}h_{k₃}) ∏_{l∉{k₁,k₂,k₃}} h_l))`.
pub fn penalty_v(h: &[f64], t: f64, k: f64) -> Result<f64> {
    let d = h.len();
    if d < 3 {
        return Err(Error::Dimension { expected: 3, got: d });
    }
    if let Some(bad) = h.iter().find(|&&v| !(v > 0.0 && v < 1.0)) {
        return Err(Error::Parameter(format!("bandwidths must lie in (0, 1), got {bad}")));
    }
    let idx = SortedIndex::of(h).into_inner();
    let rest = |skip: usize| idx[skip..].iter().map(|&l| h[l]).product::<f64>();
    let logs: f64 = h.iter().map(|v| v.ln().abs()).sum();
    let first = logs / rest(2);
    let second = 1.0 / ((h[idx[1]] * h[idx[2]]).sqrt() * rest(3));
    Ok(k / t * first.min(second))
}

/// One row of the selection table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub h: Vec<f64>,
    pub v: f64,
    pub a: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub h_tilde: Vec<f64>,
    /// Position of `h̃` in the grid.
    pub index: usize,
    pub penalty_constant: f64,
    pub horizon: f64,
    pub table: Vec<CandidateScore>,
    pub tie_break: String,
}

impl SelectionResult {
    /// Grid positions ordered by `A + V`, ties by grid position.
    pub fn ranked(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.table.len()).collect();
        idx.sort_by(|&a, &b| self.table[a].total.total_cmp(&self.table[b].total).then(a.cmp(&b)));
        idx
    }
}

/// Key of one axis of a convolved estimate: the unordered bandwidth pair.
fn pair_key(a: f64, b: f64) -> (u64, u64) {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    (lo.to_bits(), hi.to_bits())
}

/// All estimates needed by the selection, computed in one pass over the path.
pub struct Selector {
    grid: CandidateGrid,
    region: EvalRegion,
    k: f64,
    horizon: f64,
    plain: Vec<Vec<f64>>,
    convolved: Vec<Vec<f64>>,
    conv_of: HashMap<Vec<(u64, u64)>, usize>,
    v: Vec<f64>,
}

impl Selector {
    pub fn new(path: &PathGrid, kernel: &Kernel1D, grid: &CandidateGrid, region: &EvalRegion, k: f64) -> Result<Self> {
        let d = path.dim();
        check_dim(d, grid.dim())?;
        check_dim(d, region.dim())?;
        if !(k > 0.0) {
            return Err(Error::Parameter(format!("penalty constant must be positive, got {k}")));
        }
        let members = grid.members();
        let h_min: Vec<f64> = vec![members.iter().flatten().copied().fold(f64::INFINITY, f64::min); d];
        region.check_bandwidth(&h_min)?;
        let horizon = path.horizon();
        let v = members.iter().map(|h| penalty_v(h, horizon, k)).collect::<Result<Vec<_>>>()?;

        // distinct profiles per axis: plain bandwidths, then unordered pairs
        let mut plain_ids: Vec<HashMap<u64, usize>> = vec![HashMap::new(); d];
        let mut pair_ids: Vec<HashMap<(u64, u64), usize>> = vec![HashMap::new(); d];
        let mut plain_h: Vec<Vec<f64>> = vec![Vec::new(); d];
        let mut pairs: Vec<Vec<(f64, f64)>> = vec![Vec::new(); d];
        for h in members {
            for j in 0..d {
                plain_ids[j].entry(h[j].to_bits()).or_insert_with(|| {
                    plain_h[j].push(h[j]);
                    plain_h[j].len() - 1
                });
            }
        }
        let mut conv_of = HashMap::new();
        let mut conv_combos: Vec<Vec<usize>> = Vec::new();
        for h in members {
            for eta in members {
                let key: Vec<(u64, u64)> = (0..d).map(|j| pair_key(h[j], eta[j])).collect();
                if conv_of.contains_key(&key) {
                    continue;
                }
                let combo = (0..d)
                    .map(|j| {
                        *pair_ids[j].entry(key[j]).or_insert_with(|| {
                            pairs[j].push((h[j], eta[j]));
                            pairs[j].len() - 1
                        })
                    })
                    .collect();
                conv_of.insert(key, conv_combos.len());
                conv_combos.push(combo);
            }
        }

        let scaled: Vec<Vec<ScaledKernel>> =
            plain_h.iter().map(|hs| hs.iter().map(|&h| kernel.scaled(h)).collect()).collect();
        let tables: Vec<Vec<ConvolutionTable>> = pairs
            .par_iter()
            .map(|ps| ps.iter().map(|&(a, b)| convolve_axis(kernel, a, b)).collect())
            .collect();
        let banks: Vec<Vec<&dyn AxisProfile>> = (0..d)
            .map(|j| {
                let mut bank: Vec<&dyn AxisProfile> = scaled[j].iter().map(|s| s as &dyn AxisProfile).collect();
                bank.extend(tables[j].iter().map(|t| t as &dyn AxisProfile));
                bank
            })
            .collect();
        let mut combos: Vec<Vec<usize>> =
            members.iter().map(|h| (0..d).map(|j| plain_ids[j][&h[j].to_bits()]).collect()).collect();
        combos.extend(conv_combos.into_iter().map(|c| {
            c.into_iter().enumerate().map(|(j, p)| p + scaled[j].len()).collect::<Vec<_>>()
        }));
        let mut values = evaluate_products(path, region, &banks, &combos);
        let convolved = values.split_off(members.len());
        Ok(Self { grid: grid.clone(), region: region.clone(), k, horizon, plain: values, convolved, conv_of, v })
    }

    /// Replaces the penalty constant; the estimates are reused.
    pub fn set_penalty(&mut self, k: f64) -> Result<()> {
        if !(k > 0.0) {
            return Err(Error::Parameter(format!("penalty constant must be positive, got {k}")));
        }
        self.v = self.grid.members().iter().map(|h| penalty_v(h, self.horizon, k)).collect::<Result<_>>()?;
        self.k = k;
        Ok(())
    }

    /// `T` of the path the estimates come from.
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn region(&self) -> &EvalRegion {
        &self.region
    }

    pub fn grid(&self) -> &CandidateGrid {
        &self.grid
    }

    /// `π̂_h` on the region grid for member `m`.
    pub fn plain(&self, m: usize) -> &[f64] {
        &self.plain[m]
    }

    /// `π̂_{(h,η)}` on the region grid for members `m` and `e`.
    pub fn convolved(&self, m: usize, e: usize) -> &[f64] {
        let (h, eta) = (&self.grid.members()[m], &self.grid.members()[e]);
        let key: Vec<(u64, u64)> = h.iter().zip(eta).map(|(&a, &b)| pair_key(a, b)).collect();
        &self.convolved[self.conv_of[&key]]
    }

    pub fn v(&self, m: usize) -> f64 {
        self.v[m]
    }

    /// `A(h) = max_η (‖π̂_{(h,η)} - π̂_η‖²_A - V(η))₊` for member `m`.
    pub fn a(&self, m: usize) -> f64 {
        (0..self.grid.len())
            .map(|e| l2_dist_sq_values(self.convolved(m, e), &self.plain[e], &self.region) - self.v[e])
            .fold(0.0, f64::max)
    }

    pub fn select(&self) -> SelectionResult {
        let a: Vec<f64> = (0..self.grid.len()).into_par_iter().map(|m| self.a(m)).collect();
        let table: Vec<CandidateScore> = self
            .grid
            .members()
            .iter()
            .enumerate()
            .map(|(m, h)| CandidateScore { h: h.clone(), v: self.v[m], a: a[m], total: a[m] + self.v[m] })
            .collect();
        let mut best = 0;
        for (m, row) in table.iter().enumerate() {
            if row.total < table[best].total {
                best = m;
            }
        }
        let ties = table.iter().filter(|r| r.total == table[best].total).count();
        let tie_break = if ties > 1 {
            format!("{ties} candidates share the minimum; the first in grid order is chosen")
        } else {
            "unique minimizer".to_string()
        };
        SelectionResult {
            h_tilde: table[best].h.clone(),
            index: best,
            penalty_constant: self.k,
            horizon: self.horizon,
            table,
            tie_break,
        }
    }
}

/// `A(h)` for a member `h` of `grid`.
pub fn compute_a(
    h: &[f64],
    path: &PathGrid,
    kernel: &Kernel1D,
    grid: &CandidateGrid,
    region: &EvalRegion,
    k: f64,
) -> Result<f64> {
    let m = grid
        .position(h)
        .ok_or_else(|| Error::Parameter(format!("{h:?} is not a member of the candidate grid")))?;
    Ok(Selector::new(path, kernel, grid, region, k)?.a(m))
}

/// `h̃ = argmin_{h ∈ grid} A(h) + V(h)`, first minimizer in grid order.
pub fn select_bandwidth(
    path: &PathGrid,
    kernel: &Kernel1D,
    grid: &CandidateGrid,
    region: &EvalRegion,
    k: f64,
) -> Result<SelectionResult> {
    Ok(Selector::new(path, kernel, grid, region, k)?.select())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn penalty_examples() {
        let v = penalty_v(&[0.1; 3], 1000.0, 1.0).unwrap();
        assert!((v - 0.01).abs() < 1e-15);
        let v = penalty_v(&[0.01, 0.01, 0.5], 1000.0, 1.0).unwrap();
        assert!((v - 1.0 / (0.005f64.sqrt() * 1000.0)).abs() < 1e-15);
        let v2 = penalty_v(&[0.01, 0.01, 0.5], 1000.0, 2.0).unwrap();
        assert_eq!(v2, 2.0 * v);
        assert!(penalty_v(&[0.1, 0.1], 1000.0, 1.0).is_err());
    }
}
