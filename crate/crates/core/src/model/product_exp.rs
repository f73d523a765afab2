use crate::error::{Error, Result};
use crate::kernel::{make_bump_kernel, BumpKernel1D};
use crate::quad::adaptive;
use crate::smooth::psi;

use super::Density;

/// Separable density `c_η ∏_j f(η|x_j|)` with `f = e^{-ψ}`: flat for
/// `|x_j| ≤ 1/(2η)` and exactly `e^{-η|x_j|}` for `|x_j| ≥ 1/η`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductExpDensity {
    eta: f64,
    d: usize,
    /// One-dimensional normalizer `∫ f(η|y|) dy`.
    axis_mass: f64,
}

impl ProductExpDensity {
    pub fn new(eta: f64, d: usize) -> Result<Self> {
        if !(eta > 0.0 && eta < 0.5) {
            return Err(Error::Parameter(format!("eta must lie in (0, 1/2), got {eta}")));
        }
        if d == 0 {
            return Err(Error::Parameter("dimension must be positive".into()));
        }
        // ∫_R f(η|y|) dy = (2/η) (∫_0^1 e^{-ψ(u)} du + e^{-1})
        let core = adaptive(|u| (-psi(u).value).exp(), 0.0, 1.0, 1e-15);
        let axis_mass = 2.0 / eta * (core + (-1.0f64).exp());
        Ok(Self { eta, d, axis_mass })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Normalization constant `c_η`.
    pub fn normalization(&self) -> f64 {
        self.axis_mass.powi(-(self.d as i32))
    }

    #[inline]
    fn axis(&self, t: f64) -> (f64, f64, f64) {
        // f(η|t|), ∂_t log, ∂_t² log
        let j = psi(self.eta * t.abs());
        let f = (-j.value).exp();
        let dlog = -self.eta * j.d1 * t.signum();
        let d2log = -self.eta * self.eta * j.d2;
        (f, dlog, d2log)
    }
}

impl Density for ProductExpDensity {
    fn dim(&self) -> usize {
        self.d
    }

    fn density(&self, x: &[f64]) -> f64 {
        x.iter().map(|&t| self.axis(t).0 / self.axis_mass).product()
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let p = self.density(x);
        for (o, &t) in out.iter_mut().zip(x) {
            *o = p * self.axis(t).1;
        }
    }

    fn laplacian(&self, x: &[f64]) -> f64 {
        let p = self.density(x);
        x.iter()
            .map(|&t| {
                let (_, g, h) = self.axis(t);
                p * (g * g + h)
            })
            .sum()
    }

    fn log_gradient(&self, x: &[f64], out: &mut [f64]) {
        for (o, &t) in out.iter_mut().zip(x) {
            *o = self.axis(t).1;
        }
    }

    fn axis_factor(&self, _axis: usize, t: f64) -> Option<f64> {
        Some(self.axis(t).0 / self.axis_mass)
    }

    fn support_note(&self) -> String {
        format!("exponential tails e^(-{}|x_j|) beyond |x_j| = {}", self.eta, 1.0 / self.eta)
    }

    fn name(&self) -> String {
        format!("product_exp(eta={}, d={})", self.eta, self.d)
    }
}

/// `π⁽¹⁾ = π⁽⁰⁾ + (1/M_T) ∏_l K((x_l − x₀_l)/h_l)` with a zero-mass bump `K`.
#[derive(Debug, Clone)]
pub struct BumpedDensity {
    base: ProductExpDensity,
    m_t: f64,
    h: Vec<f64>,
    center: Vec<f64>,
    kernel: BumpKernel1D,
}

impl BumpedDensity {
    pub fn new(base: ProductExpDensity, m_t: f64, h: Vec<f64>, center: Vec<f64>) -> Result<Self> {
        crate::error::check_dim(base.dim(), h.len())?;
        crate::error::check_dim(base.dim(), center.len())?;
        if !(m_t > 0.0) {
            return Err(Error::Parameter(format!("M_T must be positive, got {m_t}")));
        }
        if h.iter().any(|&v| !(v > 0.0 && v < 1.0)) {
            return Err(Error::Parameter("bump bandwidths must lie in (0, 1)".into()));
        }
        Ok(Self { base, m_t, h, center, kernel: make_bump_kernel() })
    }

    pub fn base(&self) -> &ProductExpDensity {
        &self.base
    }

    pub fn m_t(&self) -> f64 {
        self.m_t
    }

    /// The bump term `(1/M_T) ∏ K((x_l − x₀_l)/h_l)` alone.
    pub fn bump(&self, x: &[f64]) -> f64 {
        let mut acc = 1.0 / self.m_t;
        for l in 0..x.len() {
            let z = (x[l] - self.center[l]) / self.h[l];
            if z.abs() >= 1.0 {
                return 0.0;
            }
            acc *= self.kernel.eval(z);
        }
        acc
    }

    /// Smallest `M_T` for which `M_T · min π⁽⁰⁾` on the bump support exceeds `‖K‖_∞^d`.
    pub fn positivity_threshold(&self) -> f64 {
        // π⁽⁰⁾ is nonincreasing in each |x_l|, so its minimum on the box is at the far corner
        let corner: Vec<f64> = self
            .center
            .iter()
            .zip(&self.h)
            .map(|(&c, &h)| c.abs() + h)
            .collect();
        self.kernel.sup_norm().powi(self.h.len() as i32) / self.base.density(&corner)
    }

    fn bump_terms(&self, x: &[f64]) -> Option<Vec<(f64, f64, f64, f64)>> {
        // per-axis (K, K'/h, K''/h²) at z_l
        let mut out = Vec::with_capacity(x.len());
        for l in 0..x.len() {
            let z = (x[l] - self.center[l]) / self.h[l];
            if z.abs() >= 1.0 {
                return None;
            }
            let (k, k1, k2) = self.kernel.jet(z);
            out.push((k, k1 / self.h[l], k2 / (self.h[l] * self.h[l]), 0.0));
        }
        Some(out)
    }
}

impl Density for BumpedDensity {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn density(&self, x: &[f64]) -> f64 {
        self.base.density(x) + self.bump(x)
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        self.base.gradient(x, out);
        if let Some(terms) = self.bump_terms(x) {
            for i in 0..x.len() {
                let mut g = terms[i].1 / self.m_t;
                for (l, t) in terms.iter().enumerate() {
                    if l != i {
                        g *= t.0;
                    }
                }
                out[i] += g;
            }
        }
    }

    fn laplacian(&self, x: &[f64]) -> f64 {
        let mut lap = self.base.laplacian(x);
        if let Some(terms) = self.bump_terms(x) {
            for i in 0..x.len() {
                let mut g = terms[i].2 / self.m_t;
                for (l, t) in terms.iter().enumerate() {
                    if l != i {
                        g *= t.0;
                    }
                }
                lap += g;
            }
        }
        lap
    }

    fn mode(&self) -> Vec<f64> {
        vec![0.0; self.dim()]
    }

    fn critical_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let lo = self.center.iter().zip(&self.h).map(|(c, h)| c - h).collect();
        let hi = self.center.iter().zip(&self.h).map(|(c, h)| c + h).collect();
        Some((lo, hi))
    }

    fn support_note(&self) -> String {
        format!("{}; bump of height 1/{} at {:?}", self.base.support_note(), self.m_t, self.center)
    }

    fn name(&self) -> String {
        format!("bumped(eta={}, M_T={}, h={:?})", self.base.eta(), self.m_t, self.h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{drift_from_density, AnalyticModel, Sde};

    #[test]
    fn tail_and_plateau_drift() {
        let p = ProductExpDensity::new(0.1, 3).unwrap();
        let b = drift_from_density(&p, &[20.0, 0.0, -30.0]).unwrap();
        assert!((b[0] + 0.05).abs() < 1e-15);
        assert_eq!(b[1], 0.0);
        assert!((b[2] - 0.05).abs() < 1e-15);
        // plateau |x_j| ≤ 1/(2η) has exactly zero gradient
        let mut g = [1.0; 3];
        p.gradient(&[4.9, -5.0, 0.0], &mut g);
        assert_eq!(g, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn fast_drift_matches_generic_formula() {
        let p = ProductExpDensity::new(0.2, 2).unwrap();
        let m = AnalyticModel::new(p.clone());
        for x in [[3.1, -4.4], [0.2, 7.0], [-2.6, 2.6]] {
            let mut fast = [0.0; 2];
            m.drift(&x, &mut fast);
            let slow = drift_from_density(&p, &x).unwrap();
            for i in 0..2 {
                assert!((fast[i] - slow[i]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn normalization_integrates_to_one() {
        let p = ProductExpDensity::new(0.3, 1).unwrap();
        let eta = 0.3;
        let mass = adaptive(|t| p.density(&[t]), -50.0 / eta, 50.0 / eta, 1e-13);
        // truncated tail: 2 e^{-50} / η · c
        assert!((mass - 1.0).abs() < 1e-10, "{mass}");
    }

    #[test]
    fn bump_has_zero_mass_and_exact_height() {
        let base = ProductExpDensity::new(0.2, 2).unwrap();
        let b = BumpedDensity::new(base.clone(), 50.0, vec![0.5, 0.3], vec![0.4, -0.2]).unwrap();
        let gl = crate::quad::GaussLegendre::new(48);
        let mass = gl.composite(-0.1, 0.9, 16, |x| {
            gl.composite(-0.5, 0.1, 16, |y| b.bump(&[x, y]))
        });
        assert!(mass.abs() <= 1e-10, "{mass}");
        let x0 = [0.4, -0.2];
        assert!((b.density(&x0) - base.density(&x0) - 1.0 / 50.0).abs() < 1e-15);
    }
}
