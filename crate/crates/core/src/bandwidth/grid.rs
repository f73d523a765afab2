//! The candidate set `H_T` of bandwidths `h_l = 1/z_l`.

use serde::{Deserialize, Serialize};

use super::SortedIndex;
use crate::error::{Error, Result};

/// Constants `a > 1`, `b > 0`, `c > 0` of the candidate constraints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Default for GridParams {
    fn default() -> Self {
        Self { a: 1.1, b: 2.0, c: 0.01 }
    }
}

impl GridParams {
    fn validate(&self) -> Result<()> {
        if !(self.a > 1.0 && self.b > 0.0 && self.c > 0.0) {
            return Err(Error::Parameter(format!(
                "grid constants need a > 1, b > 0, c > 0, got a = {}, b = {}, c = {}",
                self.a, self.b, self.c
            )));
        }
        Ok(())
    }

    /// `[(1/T)^b, (1/log T)^{1/(d-2)+a}]`.
    pub fn bandwidth_bounds(&self, t: f64, d: usize) -> (f64, f64) {
        let lower = t.powf(-self.b);
        let upper = t.ln().powf(-(1.0 / (d as f64 - 2.0) + self.a));
        (lower, upper)
    }

    /// `c (log T)^{2+a} / √T`.
    pub fn variance_floor(&self, t: f64) -> f64 {
        self.c * t.ln().powf(2.0 + self.a) / t.sqrt()
    }
}

/// Both membership conditions: per-axis bounds, and the variance-size floor.
pub fn satisfies_constraints(h: &[f64], t: f64, params: &GridParams) -> (bool, bool) {
    let d = h.len();
    let (lower, upper) = params.bandwidth_bounds(t, d);
    let bounds = h.iter().all(|&v| v >= lower && v <= upper);
    let k = SortedIndex::of(h).into_inner();
    let logs: f64 = h.iter().map(|v| v.ln().abs()).sum();
    let first = (logs * h[k[0]] * h[k[1]]).sqrt();
    let second = h[k[0]].sqrt() * (h[k[1]] * h[k[2]]).powf(0.25);
    (bounds, first.min(second) >= params.variance_floor(t))
}

/// Candidate bandwidths in a fixed enumeration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateGrid {
    members: Vec<Vec<f64>>,
    horizon: f64,
    /// `None` for grids given explicitly, exempt from the constraints.
    params: Option<GridParams>,
}

impl CandidateGrid {
    /// Bandwidths `1/z` for integer vectors `z ≥ 2`, sorted lexicographically by `z`.
    pub fn explicit(z: Vec<Vec<u64>>, horizon: f64) -> Result<Self> {
        let mut z = z;
        if z.iter().flatten().any(|&v| v < 2) {
            return Err(Error::Parameter("explicit grids need z >= 2 so that h < 1".into()));
        }
        z.sort();
        z.dedup();
        Self::from_bandwidths(
            z.into_iter().map(|zs| zs.into_iter().map(|v| 1.0 / v as f64).collect()).collect(),
            horizon,
        )
    }

    /// Members in the given order; ties in selection go to the earliest.
    pub fn from_bandwidths(members: Vec<Vec<f64>>, horizon: f64) -> Result<Self> {
        let Some(first) = members.first() else {
            return Err(Error::EmptyGrid("no members given".into()));
        };
        let d = first.len();
        if members.iter().any(|h| h.len() != d) {
            return Err(Error::Parameter("grid members differ in dimension".into()));
        }
        if let Some(bad) = members.iter().flatten().find(|&&v| !(v > 0.0 && v < 1.0)) {
            return Err(Error::Parameter(format!("bandwidths must lie in (0, 1), got {bad}")));
        }
        Ok(Self { members, horizon, params: None })
    }

    pub fn members(&self) -> &[Vec<f64>] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.members[0].len()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn params(&self) -> Option<&GridParams> {
        self.params.as_ref()
    }

    pub fn position(&self, h: &[f64]) -> Option<usize> {
        self.members.iter().position(|m| m.as_slice() == h)
    }

    /// `log |H| / log T`, the exponent of the polynomial cardinality.
    pub fn cardinality_exponent(&self) -> f64 {
        (self.len() as f64).ln() / self.horizon.ln()
    }
}

/// Enumerates `z_l` on a doubling ladder of at most `per_axis_cap` values
/// inside the admissible interval, takes the product set, and keeps the members
/// that pass both constraints.
pub fn build_candidate_grid(t: f64, d: usize, params: GridParams, per_axis_cap: usize) -> Result<CandidateGrid> {
    params.validate()?;
    if d < 3 {
        return Err(Error::Dimension { expected: 3, got: d });
    }
    if !(t > std::f64::consts::E) {
        return Err(Error::Parameter(format!("T must exceed e so that log T > 1, got {t}")));
    }
    if per_axis_cap == 0 {
        return Err(Error::Parameter("per-axis cap must be positive".into()));
    }
    let (lower, upper) = params.bandwidth_bounds(t, d);
    let z_max = (1.0 / lower).min(t.floor());
    let mut z = (1.0 / upper).ceil().max(2.0) as u64;
    let mut ladder = Vec::new();
    while (z as f64) <= z_max && ladder.len() < per_axis_cap {
        ladder.push(z);
        z *= 2;
    }
    if ladder.is_empty() {
        return Err(Error::EmptyGrid(format!(
            "bandwidth bounds: (1/T)^b = {lower:.3e} exceeds (1/log T)^(1/(d-2)+a) = {upper:.3e} or no integer 1/h fits"
        )));
    }
    let floor = params.variance_floor(t);
    let mut members = Vec::new();
    let n = ladder.len();
    // last axis fastest: lexicographic in z
    for flat in 0..n.pow(d as u32) {
        let mut rem = flat;
        let mut h = vec![0.0; d];
        for axis in (0..d).rev() {
            h[axis] = 1.0 / ladder[rem % n] as f64;
            rem /= n;
        }
        if satisfies_constraints(&h, t, &params) == (true, true) {
            members.push(h);
        }
    }
    if members.is_empty() {
        return Err(Error::EmptyGrid(format!(
            "variance floor c (log T)^(2+a) / sqrt(T) = {floor:.4} is not met by any ladder bandwidth (largest h = {upper:.3e})"
        )));
    }
    Ok(CandidateGrid { members, horizon: t, params: Some(params) })
}
