//! Densities that depend on `(x₁, x₂)` only through `r = sqrt(x₁² + x₂²)`,
//! and the logarithmic radial bump `J` built on them.

use std::f64::consts::PI;

use crate::error::{check_dim, Error, Result};
use crate::kernel::{make_bump_kernel, BumpKernel1D};
use crate::quad::adaptive;
use crate::smooth::{phi, psi};

use super::Density;

const PHI_TOL: f64 = 1e-14;

/// Radial bump `J_{r_min, r_max}`: constant near 0, harmonic (logarithmic) on
/// `[r_min/2, r_max/2]`, zero beyond `r_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JFunction {
    r_min: f64,
    r_max: f64,
    log_ratio: f64,
    phi1_half: f64,
}

fn phi1(u: f64) -> f64 {
    // ∫_u^1 φ(1-s) ds/s; the integrand vanishes for s > 3/4
    if u >= 0.75 {
        return 0.0;
    }
    adaptive(|s| phi(1.0 - s).value / s, u, 0.75, PHI_TOL)
}

fn phi2(u: f64) -> f64 {
    // ∫_u^{1/2} φ(s) ds/s; the integrand vanishes for s < 1/4
    let lo = u.max(0.25);
    if lo >= 0.5 {
        return 0.0;
    }
    adaptive(|s| phi(s).value / s, lo, 0.5, PHI_TOL)
}

impl JFunction {
    pub fn new(r_min: f64, r_max: f64) -> Result<Self> {
        if !(r_min > 0.0 && r_min < r_max / 4.0 && r_max.is_finite()) {
            return Err(Error::Parameter(format!(
                "J needs 0 < r_min < r_max/4, got r_min = {r_min}, r_max = {r_max}"
            )));
        }
        Ok(Self { r_min, r_max, log_ratio: (r_max / r_min).ln(), phi1_half: phi1(0.5) })
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn log_ratio(&self) -> f64 {
        self.log_ratio
    }

    /// `Φ₁(1/2)`.
    pub fn phi1_half(&self) -> f64 {
        self.phi1_half
    }

    pub fn eval(&self, r: f64) -> f64 {
        let r = r.abs();
        if r >= self.r_max {
            0.0
        } else if r >= self.r_max / 2.0 {
            phi1(r / self.r_max) / self.log_ratio
        } else if r >= self.r_min / 2.0 {
            (self.phi1_half + (self.r_max / (2.0 * r)).ln()) / self.log_ratio
        } else {
            1.0 + (self.phi1_half + phi2(r / self.r_min)) / self.log_ratio
        }
    }

    /// `g(r) = -r L J'(r)` and `g'(r)`.
    fn slope(&self, r: f64) -> (f64, f64) {
        if r >= self.r_max {
            (0.0, 0.0)
        } else if r >= self.r_max / 2.0 {
            let p = phi(1.0 - r / self.r_max);
            (p.value, -p.d1 / self.r_max)
        } else if r >= self.r_min / 2.0 {
            (1.0, 0.0)
        } else {
            let p = phi(r / self.r_min);
            (p.value, p.d1 / self.r_min)
        }
    }

    /// `J'(r)`.
    pub fn d1(&self, r: f64) -> f64 {
        let (g, _) = self.slope(r);
        if g == 0.0 {
            0.0
        } else {
            -g / (self.log_ratio * r)
        }
    }

    /// `J''(r)`.
    pub fn d2(&self, r: f64) -> f64 {
        let (g, dg) = self.slope(r);
        if g == 0.0 && dg == 0.0 {
            0.0
        } else {
            (-dg / r + g / (r * r)) / self.log_ratio
        }
    }

    /// `J'(r)/r`, smooth through `r = 0`.
    fn d1_over_r(&self, r: f64) -> f64 {
        let (g, _) = self.slope(r);
        if g == 0.0 {
            0.0
        } else {
            -g / (self.log_ratio * r * r)
        }
    }
}

/// `J_{r_min, r_max}(r)`.
pub fn eval_j(r: f64, r_min: f64, r_max: f64) -> Result<f64> {
    Ok(JFunction::new(r_min, r_max)?.eval(r))
}

/// `c_η e^{-ηψ(r)} ∏_{k≥3} e^{-ηψ(|x_k|)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CylindricalBase {
    eta: f64,
    d: usize,
    c: f64,
}

/// Value and derivatives of a density in cylindrical form.
struct Parts {
    value: f64,
    /// `∂_r π`
    dr: f64,
    /// `(∂_r π)/r`, finite at the axis
    dr_over_r: f64,
    /// `∂_{x_k} π`, `k ≥ 3`
    dk: Vec<f64>,
    laplacian: f64,
}

impl CylindricalBase {
    pub fn new(eta: f64, d: usize) -> Result<Self> {
        if !(eta > 0.0 && eta < 0.5) {
            return Err(Error::Parameter(format!("eta must lie in (0, 1/2), got {eta}")));
        }
        if d < 2 {
            return Err(Error::Parameter("cylindrical densities need d >= 2".into()));
        }
        let f = |u: f64| (-eta * psi(u).value).exp();
        let radial =
            2.0 * PI * (adaptive(|r| f(r) * r, 0.0, 1.0, 1e-15) + (-eta).exp() * (1.0 / eta + 1.0 / (eta * eta)));
        let axial = 2.0 * (adaptive(f, 0.0, 1.0, 1e-15) + (-eta).exp() / eta);
        let c = 1.0 / (radial * axial.powi(d as i32 - 2));
        Ok(Self { eta, d, c })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn normalization(&self) -> f64 {
        self.c
    }

    fn parts(&self, x: &[f64]) -> Parts {
        let eta = self.eta;
        let r = x[0].hypot(x[1]);
        let pr = psi(r);
        let mut value = self.c * (-eta * pr.value).exp();
        // log-derivative terms
        let lr = -eta * pr.d1;
        let lrr = -eta * pr.d2;
        let lr_over_r = if pr.d1 == 0.0 { 0.0 } else { lr / r };
        let mut lk = Vec::with_capacity(self.d - 2);
        let mut lap_log = lr * lr + lrr + lr_over_r;
        for &t in &x[2..] {
            let p = psi(t.abs());
            value *= (-eta * p.value).exp();
            let g = -eta * p.d1 * t.signum();
            lk.push(g);
            lap_log += g * g - eta * p.d2;
        }
        Parts {
            value,
            dr: value * lr,
            dr_over_r: value * lr_over_r,
            dk: lk.into_iter().map(|g| value * g).collect(),
            laplacian: value * lap_log,
        }
    }
}

fn to_cartesian(parts: &Parts, x: &[f64], out: &mut [f64]) {
    out[0] = parts.dr_over_r * x[0];
    out[1] = parts.dr_over_r * x[1];
    out[2..].copy_from_slice(&parts.dk);
}

impl Density for CylindricalBase {
    fn dim(&self) -> usize {
        self.d
    }

    fn density(&self, x: &[f64]) -> f64 {
        self.parts(x).value
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        to_cartesian(&self.parts(x), x, out);
    }

    fn laplacian(&self, x: &[f64]) -> f64 {
        self.parts(x).laplacian
    }

    fn support_note(&self) -> String {
        format!("exponential tails e^(-{} r) and e^(-{}|x_k|) beyond 1", self.eta, self.eta)
    }

    fn name(&self) -> String {
        format!("cylindrical(eta={}, d={})", self.eta, self.d)
    }
}

/// `π⁽¹⁾ = π⁽⁰⁾ + (1/M_T) J(r) ∏_{k≥3} K(x_k/h_k)`, `d ≥ 3`.
#[derive(Debug, Clone)]
pub struct CylindricalBumpDensity {
    base: CylindricalBase,
    m_t: f64,
    j: JFunction,
    h: Vec<f64>,
    kernel: BumpKernel1D,
}

impl CylindricalBumpDensity {
    /// `h` holds the bandwidths of axes `3..=d`, nondecreasing and `≥ r_max`.
    pub fn new(base: CylindricalBase, m_t: f64, r_min: f64, r_max: f64, h: Vec<f64>) -> Result<Self> {
        if base.d < 3 {
            return Err(Error::Parameter(
                "the cylindrical bump needs d >= 3 (its mass vanishes through the axial factors)".into(),
            ));
        }
        check_dim(base.d - 2, h.len())?;
        if !(m_t > 0.0) {
            return Err(Error::Parameter(format!("M_T must be positive, got {m_t}")));
        }
        let j = JFunction::new(r_min, r_max)?;
        if h[0] < r_max || h.windows(2).any(|w| w[1] < w[0]) || h.iter().any(|&v| !(v > 0.0 && v < 1.0)) {
            return Err(Error::Parameter(
                "axial bandwidths must satisfy r_max <= h_3 <= ... <= h_d < 1".into(),
            ));
        }
        Ok(Self { base, m_t, j, h, kernel: make_bump_kernel() })
    }

    pub fn base(&self) -> &CylindricalBase {
        &self.base
    }

    pub fn j(&self) -> &JFunction {
        &self.j
    }

    fn parts(&self, x: &[f64]) -> Parts {
        let mut parts = self.base.parts(x);
        let r = x[0].hypot(x[1]);
        if r >= self.j.r_max {
            return parts;
        }
        let mut axial = Vec::with_capacity(self.h.len());
        for (k, &t) in x[2..].iter().enumerate() {
            let z = t / self.h[k];
            if z.abs() >= 1.0 {
                return parts;
            }
            let (v, d1, d2) = self.kernel.jet(z);
            axial.push((v, d1 / self.h[k], d2 / (self.h[k] * self.h[k])));
        }
        let prod: f64 = axial.iter().map(|a| a.0).product();
        let inv_m = 1.0 / self.m_t;
        let jv = self.j.eval(r);
        let j1 = self.j.d1(r);
        let j1_over_r = self.j.d1_over_r(r);
        let j2 = self.j.d2(r);
        parts.value += inv_m * jv * prod;
        parts.dr += inv_m * j1 * prod;
        parts.dr_over_r += inv_m * j1_over_r * prod;
        parts.laplacian += inv_m * (j2 + j1_over_r) * prod;
        for k in 0..axial.len() {
            let others: f64 = axial
                .iter()
                .enumerate()
                .filter(|&(l, _)| l != k)
                .map(|(_, a)| a.0)
                .product();
            parts.dk[k] += inv_m * jv * axial[k].1 * others;
            parts.laplacian += inv_m * jv * axial[k].2 * others;
        }
        parts
    }
}

impl Density for CylindricalBumpDensity {
    fn dim(&self) -> usize {
        self.base.d
    }

    fn density(&self, x: &[f64]) -> f64 {
        self.parts(x).value
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        to_cartesian(&self.parts(x), x, out);
    }

    fn laplacian(&self, x: &[f64]) -> f64 {
        self.parts(x).laplacian
    }

    fn critical_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let mut hi = vec![self.j.r_max, self.j.r_max];
        hi.extend_from_slice(&self.h);
        let lo = hi.iter().map(|v| -v).collect();
        Some((lo, hi))
    }

    fn support_note(&self) -> String {
        format!(
            "{}; radial bump on r <= {} of height J(0)/{}",
            self.base.support_note(),
            self.j.r_max,
            self.m_t
        )
    }

    fn name(&self) -> String {
        format!(
            "cylindrical_bump(eta={}, M_T={}, r_min={}, r_max={}, h={:?})",
            self.base.eta, self.m_t, self.j.r_min, self.j.r_max, self.h
        )
    }
}

/// Drift `b = b_r e_r + Σ_{k≥3} b_k e_k` (with `b_θ = 0`) for a density in
/// cylindrical form, returned in Cartesian coordinates; `b_r = ∂_r π/(2π)`.
pub fn drift_from_density_cylindrical(model: &dyn CylindricalDensity, x: &[f64]) -> Result<Vec<f64>> {
    check_dim(model.cyl_dim(), x.len())?;
    let parts = model.cyl_parts(x);
    if !(parts.value > 0.0) {
        return Err(Error::NonPositiveDensity { x: x.to_vec(), value: parts.value });
    }
    let r = x[0].hypot(x[1]);
    let br = 0.5 * parts.dr / parts.value;
    let mut b = vec![0.0; x.len()];
    if r > 0.0 {
        b[0] = br * x[0] / r;
        b[1] = br * x[1] / r;
    }
    for (k, dk) in parts.dk.iter().enumerate() {
        b[k + 2] = 0.5 * dk / parts.value;
    }
    Ok(b)
}

/// Densities exposing cylindrical partial derivatives.
pub trait CylindricalDensity: Density {
    fn cyl_dim(&self) -> usize {
        self.dim()
    }
    #[doc(hidden)]
    fn cyl_parts(&self, x: &[f64]) -> CylParts;
}

#[doc(hidden)]
pub struct CylParts {
    value: f64,
    dr: f64,
    dk: Vec<f64>,
}

impl From<Parts> for CylParts {
    fn from(p: Parts) -> Self {
        Self { value: p.value, dr: p.dr, dk: p.dk }
    }
}

impl CylindricalDensity for CylindricalBase {
    fn cyl_parts(&self, x: &[f64]) -> CylParts {
        self.parts(x).into()
    }
}

impl CylindricalDensity for CylindricalBumpDensity {
    fn cyl_parts(&self, x: &[f64]) -> CylParts {
        self.parts(x).into()
    }
}

/// Radial drift component `b_r = ∂_r π / (2π)` at `x`.
pub fn radial_drift(model: &dyn CylindricalDensity, x: &[f64]) -> f64 {
    let p = model.cyl_parts(x);
    0.5 * p.dr / p.value
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::drift_from_density;

    #[test]
    fn j_endpoints_and_middle() {
        let j = JFunction::new(0.01, 0.1).unwrap();
        assert_eq!(j.eval(0.1), 0.0);
        assert!(j.eval(0.0) >= 1.0);
        // Φ₁(1/2) from an independent trapezoid rule on the integrand
        let n = 200_000;
        let (a, b) = (0.5, 1.0);
        let f = |s: f64| phi(1.0 - s).value / s;
        let h = (b - a) / n as f64;
        let mut acc = 0.5 * (f(a) + f(b));
        for i in 1..n {
            acc += f(a + i as f64 * h);
        }
        let phi1_half = acc * h;
        let expected = phi1_half / 10f64.ln();
        assert!((j.eval(0.05) - expected).abs() < 1e-9, "{} vs {expected}", j.eval(0.05));
    }

    #[test]
    fn j_rejects_bad_radii() {
        assert!(eval_j(0.01, 0.03, 0.1).is_err());
        assert!(eval_j(0.01, 0.0, 0.1).is_err());
    }

    #[test]
    fn j_pieces_join_continuously() {
        let j = JFunction::new(0.02, 0.5).unwrap();
        for &r in &[0.01, 0.25] {
            let lo = j.eval(r * (1.0 - 1e-9));
            let hi = j.eval(r * (1.0 + 1e-9));
            assert!((lo - hi).abs() < 1e-7, "jump at {r}: {lo} vs {hi}");
        }
        // J' by finite differences
        for &r in &[0.004, 0.008, 0.05, 0.3, 0.45] {
            let s = 1e-6;
            let fd = (j.eval(r + s) - j.eval(r - s)) / (2.0 * s);
            assert!((fd - j.d1(r)).abs() < 1e-5 * (1.0 + fd.abs()), "{r}: {fd} vs {}", j.d1(r));
            let fd2 = (j.d1(r + s) - j.d1(r - s)) / (2.0 * s);
            assert!((fd2 - j.d2(r)).abs() < 1e-4 * (1.0 + fd2.abs()), "{r}: {fd2} vs {}", j.d2(r));
        }
    }

    #[test]
    fn base_radial_drift_in_the_tail() {
        let base = CylindricalBase::new(0.2, 3).unwrap();
        let x = [1.5, -2.0, 0.3];
        let br = radial_drift(&base, &x);
        // exact exponential tail, unit diffusion: b_r = -η/2
        assert!((br + 0.1).abs() < 1e-14);
        let b = drift_from_density_cylindrical(&base, &x).unwrap();
        // no angular component: b is parallel to e_r in the (x1, x2) plane
        assert!((b[0] * x[1] - b[1] * x[0]).abs() < 1e-15);
    }

    #[test]
    fn normalization_integrates_to_one() {
        let base = CylindricalBase::new(0.3, 2).unwrap();
        let gl = crate::quad::GaussLegendre::new(32);
        let r_max = 150.0;
        let mass = gl.composite(0.0, r_max, 200, |r| 2.0 * PI * r * base.density(&[r, 0.0]));
        assert!((mass - 1.0).abs() < 1e-9, "{mass}");
    }

    #[test]
    fn cylindrical_drift_matches_cartesian() {
        let base = CylindricalBase::new(0.2, 3).unwrap();
        let bump = CylindricalBumpDensity::new(base, 1e5, 0.05, 0.3, vec![0.4]).unwrap();
        for x in [[0.1, 0.05, 0.1], [0.2, -0.1, -0.3], [0.0, 0.0, 0.2], [2.0, 1.0, 0.7]] {
            let a = drift_from_density_cylindrical(&bump, &x).unwrap();
            let b = drift_from_density(&bump, &x).unwrap();
            for i in 0..3 {
                assert!((a[i] - b[i]).abs() < 1e-13, "{x:?}");
            }
        }
        // at the axis the in-plane drift is exactly zero
        let at_axis = drift_from_density_cylindrical(&bump, &[0.0, 0.0, 0.1]).unwrap();
        assert_eq!(&at_axis[..2], &[0.0, 0.0]);
    }

    #[test]
    fn bump_leaves_base_outside_its_support() {
        let base = CylindricalBase::new(0.2, 3).unwrap();
        let bump = CylindricalBumpDensity::new(base.clone(), 1e5, 0.05, 0.3, vec![0.4]).unwrap();
        let x = [0.4, 0.0, 0.1];
        assert_eq!(bump.density(&x), base.density(&x));
        let a = drift_from_density_cylindrical(&bump, &x).unwrap();
        let b = drift_from_density_cylindrical(&base, &x).unwrap();
        assert_eq!(a, b);
        // independent of the angle
        let r = 0.2f64;
        let v0 = bump.density(&[r, 0.0, 0.1]);
        for k in 1..8 {
            let th = k as f64 * 0.7;
            let v = bump.density(&[r * th.cos(), r * th.sin(), 0.1]);
            assert!((v - v0).abs() < 1e-13 * v0);
        }
    }
}
