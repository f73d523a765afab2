//! Kernel estimators of the invariant density from a discretized path, and
//! squared `L²` norms on compact boxes.

use ndarray::{s, Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::kernel::{convolve_axis, AxisProfile, Kernel1D};
use crate::model::AnalyticModel;
use crate::quad::GaussLegendre;
use crate::simulate::PathGrid;

/// Steps per block in path-major grid evaluation.
const CHUNK: usize = 2048;
/// Gauss–Legendre nodes per axis for `K_h * π`.
const SMOOTHING_NODES: usize = 32;

/// Box `A = ∏[lo_i, hi_i]` with a tensor grid of `nodes_i` points per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRegion {
    lo: Vec<f64>,
    hi: Vec<f64>,
    nodes: Vec<usize>,
}

impl EvalRegion {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, nodes: Vec<usize>) -> Result<Self> {
        check_dim(lo.len(), hi.len())?;
        check_dim(lo.len(), nodes.len())?;
        if lo.is_empty() {
            return Err(Error::Parameter("region needs at least one axis".into()));
        }
        for i in 0..lo.len() {
            if !(lo[i] < hi[i]) || !lo[i].is_finite() || !hi[i].is_finite() {
                return Err(Error::Parameter(format!("axis {i}: need lo < hi, got [{}, {}]", lo[i], hi[i])));
            }
            if nodes[i] < 2 {
                return Err(Error::Parameter(format!("axis {i}: need at least 2 grid nodes")));
            }
        }
        Ok(Self { lo, hi, nodes })
    }

    /// `[-half, half]^d` with `nodes` points per axis.
    pub fn cube(d: usize, half: f64, nodes: usize) -> Result<Self> {
        Self::new(vec![-half; d], vec![half; d], vec![nodes; d])
    }

    /// Smallest grid whose spacing does not exceed `spacing` on any axis.
    pub fn with_max_spacing(lo: Vec<f64>, hi: Vec<f64>, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0) {
            return Err(Error::Parameter(format!("spacing must be positive, got {spacing}")));
        }
        let nodes = lo
            .iter()
            .zip(&hi)
            .map(|(l, h)| ((h - l) / spacing * (1.0 - 1e-12)).ceil() as usize + 1)
            .collect();
        Self::new(lo, hi, nodes)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / (self.nodes[axis] - 1) as f64
    }

    pub fn axis_grid(&self, axis: usize) -> Vec<f64> {
        let s = self.spacing(axis);
        (0..self.nodes[axis]).map(|k| self.lo[axis] + k as f64 * s).collect()
    }

    pub fn n_points(&self) -> usize {
        self.nodes.iter().product()
    }

    /// Grid point with flat index `flat`; the last axis varies fastest.
    pub fn point(&self, flat: usize, out: &mut [f64]) {
        let mut rem = flat;
        for i in (0..self.dim()).rev() {
            let k = rem % self.nodes[i];
            rem /= self.nodes[i];
            out[i] = self.lo[i] + k as f64 * self.spacing(i);
        }
    }

    /// Errors unless every spacing is at most `min_l h_l / 4`.
    pub fn check_bandwidth(&self, h: &[f64]) -> Result<()> {
        let h_min = h.iter().copied().fold(f64::INFINITY, f64::min);
        for i in 0..self.dim() {
            if self.spacing(i) > h_min / 4.0 * (1.0 + 1e-12) {
                return Err(Error::Parameter(format!(
                    "grid spacing {} on axis {i} exceeds min h / 4 = {}",
                    self.spacing(i),
                    h_min / 4.0
                )));
            }
        }
        Ok(())
    }

    /// `Ã`: the box widened by `2√d` on every side, at the same spacing.
    pub fn enlarged(&self) -> Self {
        let margin = 2.0 * (self.dim() as f64).sqrt();
        let mut nodes = Vec::with_capacity(self.dim());
        for i in 0..self.dim() {
            let extra = (margin / self.spacing(i)).ceil() as usize;
            nodes.push(self.nodes[i] + 2 * extra);
        }
        let lo = (0..self.dim()).map(|i| self.lo[i] - margin).collect();
        let hi = (0..self.dim()).map(|i| self.hi[i] + margin).collect();
        Self { lo, hi, nodes }
    }

    /// Trapezoid weights along `axis`.
    pub fn trapezoid_weights(&self, axis: usize) -> Vec<f64> {
        let s = self.spacing(axis);
        let n = self.nodes[axis];
        (0..n).map(|k| if k == 0 || k == n - 1 { 0.5 * s } else { s }).collect()
    }

    fn tensor_weights(&self) -> Vec<f64> {
        let per_axis: Vec<Vec<f64>> = (0..self.dim()).map(|i| self.trapezoid_weights(i)).collect();
        let mut w = vec![1.0];
        for axis in &per_axis {
            w = w.iter().flat_map(|a| axis.iter().map(move |b| a * b)).collect();
        }
        w
    }
}

/// `∫_A f²` by the tensor trapezoid rule on the region grid.
pub fn l2_norm_sq_on_region<F: Fn(&[f64]) -> f64 + Sync>(f: F, region: &EvalRegion) -> f64 {
    let values: Vec<f64> = (0..region.n_points())
        .into_par_iter()
        .map_init(
            || vec![0.0; region.dim()],
            |x, flat| {
                region.point(flat, x);
                f(x)
            },
        )
        .collect();
    l2_norm_sq_values(&values, region)
}

/// `∫_A f²` from values at the grid points (flat order of [`EvalRegion::point`]).
pub fn l2_norm_sq_values(values: &[f64], region: &EvalRegion) -> f64 {
    assert_eq!(values.len(), region.n_points(), "grid values do not match the region");
    region.tensor_weights().iter().zip(values).map(|(w, v)| w * v * v).sum()
}

/// `∫_A (f - g)²` from grid values.
pub fn l2_dist_sq_values(f: &[f64], g: &[f64], region: &EvalRegion) -> f64 {
    assert_eq!(f.len(), region.n_points(), "grid values do not match the region");
    assert_eq!(g.len(), region.n_points(), "grid values do not match the region");
    region
        .tensor_weights()
        .iter()
        .zip(f.iter().zip(g))
        .map(|(w, (a, b))| w * (a - b) * (a - b))
        .sum()
}

fn check_bandwidths(h: &[f64], d: usize) -> Result<()> {
    check_dim(d, h.len())?;
    match h.iter().find(|&&v| !(v > 0.0 && v < 1.0)) {
        Some(bad) => Err(Error::Parameter(format!("bandwidths must lie in (0, 1), got {bad}"))),
        None => Ok(()),
    }
}

/// `π̂_h(x) = (1/T) Σ_k K_h(x - X_k) dt`.
pub fn kde_pointwise(path: &PathGrid, kernel: &Kernel1D, h: &[f64], x: &[f64]) -> Result<f64> {
    let d = path.dim();
    check_bandwidths(h, d)?;
    check_dim(d, x.len())?;
    let mut acc = 0.0;
    'steps: for row in path.states().rows() {
        let mut prod = 1.0;
        for j in 0..d {
            let u = (x[j] - row[j]) / h[j];
            if u.abs() > 1.0 {
                continue 'steps;
            }
            prod *= kernel.eval(u) / h[j];
        }
        acc += prod;
    }
    Ok(acc / path.n_steps() as f64)
}

/// `π̂_{(h,η)}(x) = (1/T) Σ_k ∏_j (K_{h_j} * K_{η_j})(X_k^j - x_j) dt`.
pub fn kde_convolved(path: &PathGrid, kernel: &Kernel1D, h: &[f64], eta: &[f64], x: &[f64]) -> Result<f64> {
    let d = path.dim();
    check_bandwidths(h, d)?;
    check_bandwidths(eta, d)?;
    check_dim(d, x.len())?;
    let tables: Vec<_> = (0..d).map(|j| convolve_axis(kernel, h[j], eta[j])).collect();
    let mut acc = 0.0;
    'steps: for row in path.states().rows() {
        let mut prod = 1.0;
        for j in 0..d {
            let t = row[j] - x[j];
            if t.abs() > tables[j].half_width() {
                continue 'steps;
            }
            prod *= tables[j].eval(t);
        }
        acc += prod;
    }
    Ok(acc / path.n_steps() as f64)
}

/// Estimate on an [`EvalRegion`] grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub source: String,
    pub seed: u64,
    pub kernel_order: usize,
    pub h: Vec<f64>,
    /// Second bandwidth of a convolved estimate.
    pub eta: Option<Vec<f64>>,
    pub values: Vec<f64>,
}

impl DensityEstimate {
    /// One row per grid node: coordinates, estimate and, if given, the true density.
    pub fn to_csv(&self, region: &EvalRegion, truth: Option<&AnalyticModel>) -> String {
        let d = region.dim();
        let mut out = String::new();
        let header: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
        out.push_str(&header.join(","));
        out.push_str(",estimate");
        if truth.is_some() {
            out.push_str(",density");
        }
        out.push('\n');
        let mut x = vec![0.0; d];
        for (flat, v) in self.values.iter().enumerate() {
            region.point(flat, &mut x);
            for c in &x {
                out.push_str(&format!("{c},"));
            }
            out.push_str(&format!("{v:e}"));
            if let Some(model) = truth {
                out.push_str(&format!(",{:e}", model.pdf(&x)));
            }
            out.push('\n');
        }
        out
    }
}

/// `π̂_h` on every grid node of `region`.
pub fn estimate_on_grid(path: &PathGrid, kernel: &Kernel1D, h: &[f64], region: &EvalRegion) -> Result<DensityEstimate> {
    check_bandwidths(h, path.dim())?;
    check_dim(path.dim(), region.dim())?;
    let scaled: Vec<_> = h.iter().map(|&hj| kernel.scaled(hj)).collect();
    let banks: Vec<Vec<&dyn AxisProfile>> = scaled.iter().map(|s| vec![s as &dyn AxisProfile]).collect();
    let values = evaluate_products(path, region, &banks, &[vec![0; path.dim()]]).pop().unwrap();
    Ok(DensityEstimate {
        source: path.model_id().to_string(),
        seed: path.seed(),
        kernel_order: kernel.order(),
        h: h.to_vec(),
        eta: None,
        values,
    })
}

/// `π̂_{(h,η)}` on every grid node of `region`.
pub fn convolved_on_grid(
    path: &PathGrid,
    kernel: &Kernel1D,
    h: &[f64],
    eta: &[f64],
    region: &EvalRegion,
) -> Result<DensityEstimate> {
    check_bandwidths(h, path.dim())?;
    check_bandwidths(eta, path.dim())?;
    check_dim(path.dim(), region.dim())?;
    let tables: Vec<_> = (0..path.dim()).map(|j| convolve_axis(kernel, h[j], eta[j])).collect();
    let banks: Vec<Vec<&dyn AxisProfile>> = tables.iter().map(|t| vec![t as &dyn AxisProfile]).collect();
    let values = evaluate_products(path, region, &banks, &[vec![0; path.dim()]]).pop().unwrap();
    Ok(DensityEstimate {
        source: path.model_id().to_string(),
        seed: path.seed(),
        kernel_order: kernel.order(),
        h: h.to_vec(),
        eta: Some(eta.to_vec()),
        values,
    })
}

/// Evaluates `(1/n) Σ_k ∏_j p_j(g_j - X_k^j)` on the region grid for each
/// combination of axis profiles `p_j = banks[j][combo[j]]`.
///
/// Works through the path in blocks. Per block, each profile is tabulated once
/// against the axis nodes, combinations sharing their trailing axes share the
/// outer product of those factors, and the first axis is contracted with a
/// matrix product. The result does not depend on the thread count.
pub fn evaluate_products(
    path: &PathGrid,
    region: &EvalRegion,
    banks: &[Vec<&dyn AxisProfile>],
    combos: &[Vec<usize>],
) -> Vec<Vec<f64>> {
    let d = path.dim();
    assert_eq!(banks.len(), d, "one profile bank per axis");
    assert_eq!(region.dim(), d, "region dimension");
    let grids: Vec<Vec<f64>> = (0..d).map(|i| region.axis_grid(i)).collect();
    let g0 = grids[0].len();
    let tail_len: usize = grids[1..].iter().map(Vec::len).product();

    // group combinations by their trailing profiles
    let mut groups: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    for (c, combo) in combos.iter().enumerate() {
        assert_eq!(combo.len(), d, "combination length");
        let tail = combo[1..].to_vec();
        match groups.iter_mut().find(|(t, _)| *t == tail) {
            Some((_, members)) => members.push(c),
            None => groups.push((tail, vec![c])),
        }
    }
    let mut accumulators: Vec<Array2<f64>> =
        groups.iter().map(|(_, members)| Array2::zeros((members.len() * g0, tail_len))).collect();

    let states = path.states();
    let n = states.nrows();
    let mut start = 0;
    while start < n {
        let end = (start + CHUNK).min(n);
        let block = states.slice(s![start..end, ..]);
        let factors: Vec<Vec<Array2<f64>>> = (0..d)
            .into_par_iter()
            .map(|j| banks[j].iter().map(|p| tabulate(*p, &block, j, &grids[j])).collect())
            .collect();
        groups.par_iter().zip(accumulators.par_iter_mut()).for_each(|((tail, members), acc)| {
            let rows = end - start;
            let mut tail_prod = Array2::<f64>::ones((rows, 1));
            for (offset, &p) in tail.iter().enumerate() {
                tail_prod = row_outer(&tail_prod.view(), &factors[offset + 1][p].view());
            }
            let mut lead = Array2::<f64>::zeros((rows, members.len() * g0));
            for (m, &c) in members.iter().enumerate() {
                lead.slice_mut(s![.., m * g0..(m + 1) * g0]).assign(&factors[0][combos[c][0]]);
            }
            ndarray::linalg::general_mat_mul(1.0, &lead.t(), &tail_prod, 1.0, acc);
        });
        start = end;
    }

    let mut out = vec![Vec::new(); combos.len()];
    let scale = 1.0 / n as f64;
    for ((_, members), acc) in groups.iter().zip(&accumulators) {
        for (m, &c) in members.iter().enumerate() {
            let block = acc.slice(s![m * g0..(m + 1) * g0, ..]);
            out[c] = block.iter().map(|v| v * scale).collect();
        }
    }
    out
}

/// `F[k, g] = p(grid[g] - X_k^j)` for the rows of `block`.
fn tabulate(p: &dyn AxisProfile, block: &ArrayView2<f64>, axis: usize, grid: &[f64]) -> Array2<f64> {
    let rows = block.nrows();
    let mut f = Array2::<f64>::zeros((rows, grid.len()));
    let reach = p.half_width();
    for (k, mut row) in f.rows_mut().into_iter().enumerate() {
        let x = block[[k, axis]];
        for (g, v) in grid.iter().zip(row.iter_mut()) {
            let t = g - x;
            if t.abs() <= reach {
                *v = p.eval(t);
            }
        }
    }
    f
}

/// Row-wise Kronecker product: `out[k, i·m + j] = a[k, i]·b[k, j]`.
fn row_outer(a: &ArrayView2<f64>, b: &ArrayView2<f64>) -> Array2<f64> {
    let (rows, na) = a.dim();
    let nb = b.ncols();
    let mut out = Array2::<f64>::zeros((rows, na * nb));
    for k in 0..rows {
        let mut o = out.row_mut(k);
        for i in 0..na {
            let ai = a[[k, i]];
            if ai == 0.0 {
                continue;
            }
            for j in 0..nb {
                o[i * nb + j] = ai * b[[k, j]];
            }
        }
    }
    out
}

/// `π_h(x) = (K_h * π)(x)` by tensor Gauss–Legendre quadrature over the kernel support.
pub fn smoothed_density(model: &AnalyticModel, kernel: &Kernel1D, h: &[f64], x: &[f64]) -> f64 {
    let d = x.len();
    let gl = GaussLegendre::new(SMOOTHING_NODES);
    let q = gl.len();
    let mut y = vec![0.0; d];
    let mut acc = 0.0;
    for flat in 0..q.pow(d as u32) {
        let mut rem = flat;
        let mut w = 1.0;
        for j in 0..d {
            let i = rem % q;
            rem /= q;
            let z = gl.nodes[i];
            w *= gl.weights[i] * kernel.eval(z);
            y[j] = x[j] - h[j] * z;
        }
        acc += w * model.pdf(&y);
    }
    acc
}

/// `B(h) = ‖K_h * π - π‖²` over the enlarged box `Ã` of `region`.
///
/// Product densities use exact one-dimensional factorization; other densities
/// are smoothed pointwise on the `Ã` grid.
pub fn bias_proxy(model: &AnalyticModel, kernel: &Kernel1D, h: &[f64], region: &EvalRegion) -> Result<f64> {
    let d = model.density().dim();
    check_bandwidths(h, d)?;
    check_dim(d, region.dim())?;
    let wide = region.enlarged();
    if model.is_separable() {
        Ok(separable_bias(model, kernel, h, &wide))
    } else {
        Ok(l2_norm_sq_on_region(|x| smoothed_density(model, kernel, h, x) - model.pdf(x), &wide))
    }
}

/// For `π = ∏ f_j` and `a_j = K_{h_j} * f_j = f_j + e_j`,
/// `∏a - ∏f = Σ_j (∏_{i<j} f_i) e_j (∏_{i>j} a_i)`; its squared norm is a sum
/// of products of one-dimensional integrals, free of cancellation.
fn separable_bias(model: &AnalyticModel, kernel: &Kernel1D, h: &[f64], wide: &EvalRegion) -> f64 {
    let d = h.len();
    let density = model.density();
    let gl_k = GaussLegendre::new(SMOOTHING_NODES);
    let gl_t = GaussLegendre::new(8);
    // ip[j][(u, v)] = ∫ u_j v_j over the axis, u, v ∈ {f, e, a}
    let ip: Vec<[[f64; 3]; 3]> = (0..d)
        .into_par_iter()
        .map(|j| {
            let f = |t: f64| density.axis_factor(j, t).expect("separable density");
            let e = |t: f64| {
                let ft = f(t);
                gl_k.mapped(-1.0, 1.0).map(|(z, w)| w * kernel.eval(z) * (f(t - h[j] * z) - ft)).sum::<f64>()
            };
            let (lo, hi) = (wide.lo()[j], wide.hi()[j]);
            let panels = ((hi - lo) / h[j].min(0.25)).ceil() as usize;
            let (ts, ws) = gl_t.composite_nodes(lo, hi, panels);
            let mut m = [[0.0; 3]; 3];
            for (&t, &w) in ts.iter().zip(&ws) {
                let fv = f(t);
                let ev = e(t);
                let v = [fv, ev, fv + ev];
                for a in 0..3 {
                    for b in 0..3 {
                        m[a][b] += w * v[a] * v[b];
                    }
                }
            }
            m
        })
        .collect();
    const F: usize = 0;
    const E: usize = 1;
    const A: usize = 2;
    let role = |i: usize, j: usize| if i < j { F } else if i == j { E } else { A };
    let mut total = 0.0;
    for j in 0..d {
        for l in 0..d {
            total += (0..d).map(|i| ip[i][role(i, j)][role(i, l)]).product::<f64>();
        }
    }
    total.max(0.0)
}
