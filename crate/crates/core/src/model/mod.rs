//! Diffusion models whose invariant density is known in closed form.
//!
//! A model is described by its density `π` (with gradient and Laplacian);
//! the drift is derived from it as `b = ∇π / (2π)`, which makes `π`
//! invariant for `dX = b(X) dt + dW`.

mod audit;
mod cylindrical;
mod gaussian;
mod product_exp;
mod spec;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use audit::{check_class_membership, CheckOutcome, MembershipReport, ProbeBox};
pub use cylindrical::{
    drift_from_density_cylindrical, eval_j, radial_drift, CylindricalBase, CylindricalBumpDensity, CylindricalDensity,
    JFunction,
};
pub use gaussian::GaussianDensity;
pub use product_exp::{BumpedDensity, ProductExpDensity};
pub use spec::ModelSpec;

use crate::error::{check_dim, Error, Result};

/// An evaluable, strictly positive density on `R^d` with analytic derivatives.
pub trait Density: Send + Sync {
    fn dim(&self) -> usize;

    fn density(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64], out: &mut [f64]);

    fn laplacian(&self, x: &[f64]) -> f64;

    /// `∇ log π`.
    fn log_gradient(&self, x: &[f64], out: &mut [f64]) {
        self.gradient(x, out);
        let p = self.density(x);
        out.iter_mut().for_each(|g| *g /= p);
    }

    /// Mode of the density; simulations start here.
    fn mode(&self) -> Vec<f64> {
        vec![0.0; self.dim()]
    }

    /// For product densities `π(x) = ∏_j f_j(x_j)`, returns `f_axis(t)`.
    fn axis_factor(&self, _axis: usize, _t: f64) -> Option<f64> {
        None
    }

    /// Box where the density may approach zero (bump supports).
    fn critical_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        None
    }

    /// Short description of the tail behavior.
    fn support_note(&self) -> String;

    fn name(&self) -> String;
}

/// A stochastic differential equation `dX = b(X) dt + σ dW` with constant scalar `σ`.
pub trait Sde: Send + Sync {
    fn dim(&self) -> usize;

    fn drift(&self, x: &[f64], out: &mut [f64]);

    fn diffusion_scale(&self) -> f64 {
        1.0
    }

    fn start(&self) -> Vec<f64> {
        vec![0.0; self.dim()]
    }

    fn label(&self) -> String {
        format!("sde(d={})", self.dim())
    }
}

/// Ground-truth model: an analytic density and the unit-diffusion drift derived from it.
#[derive(Clone)]
pub struct AnalyticModel {
    density: Arc<dyn Density>,
}

impl std::fmt::Debug for AnalyticModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AnalyticModel").field("density", &self.density.name()).finish()
    }
}

impl AnalyticModel {
    pub fn new<D: Density + 'static>(density: D) -> Self {
        Self { density: Arc::new(density) }
    }

    pub fn from_arc(density: Arc<dyn Density>) -> Self {
        Self { density }
    }

    pub fn density(&self) -> &dyn Density {
        self.density.as_ref()
    }

    pub fn pdf(&self, x: &[f64]) -> f64 {
        self.density.density(x)
    }

    pub fn support_note(&self) -> String {
        self.density.support_note()
    }

    pub fn is_separable(&self) -> bool {
        self.density.axis_factor(0, 0.0).is_some()
    }
}

impl Sde for AnalyticModel {
    fn dim(&self) -> usize {
        self.density.dim()
    }

    fn drift(&self, x: &[f64], out: &mut [f64]) {
        self.density.log_gradient(x, out);
        out.iter_mut().for_each(|b| *b *= 0.5);
    }

    fn start(&self) -> Vec<f64> {
        self.density.mode()
    }

    fn label(&self) -> String {
        self.density.name()
    }
}

/// `b_i(x) = ∂_i π(x) / (2 π(x))`.
pub fn drift_from_density(density: &dyn Density, x: &[f64]) -> Result<Vec<f64>> {
    check_dim(density.dim(), x.len())?;
    let p = density.density(x);
    if !(p > 0.0) {
        return Err(Error::NonPositiveDensity { x: x.to_vec(), value: p });
    }
    let mut g = vec![0.0; x.len()];
    density.gradient(x, &mut g);
    Ok(g.into_iter().map(|gi| 0.5 * gi / p).collect())
}

/// `|(1/2)Δπ − ∇·(π b)|` at `x`, both terms by fourth-order central differences
/// with step `step`. Vanishes (up to truncation) when `π` is invariant for `b`.
pub fn fokker_planck_residual(model: &AnalyticModel, x: &[f64], step: f64) -> f64 {
    let d = x.len();
    let mut y = x.to_vec();
    let mut b = vec![0.0; d];
    let offsets = [-2.0, -1.0, 1.0, 2.0];
    let first = [1.0, -8.0, 8.0, -1.0];
    let second = [-1.0, 16.0, 16.0, -1.0];
    let p0 = model.pdf(x);
    let mut lap = 0.0;
    let mut div = 0.0;
    for i in 0..d {
        let mut lap_i = -30.0 * p0;
        let mut div_i = 0.0;
        for k in 0..4 {
            y[i] = x[i] + offsets[k] * step;
            let p = model.pdf(&y);
            model.drift(&y, &mut b);
            lap_i += second[k] * p;
            div_i += first[k] * p * b[i];
        }
        y[i] = x[i];
        lap += lap_i / (12.0 * step * step);
        div += div_i / (12.0 * step);
    }
    (0.5 * lap - div).abs()
}

/// Anisotropic Hölder parameters `β` and `L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessSpec {
    beta: Vec<f64>,
    l: Vec<f64>,
}

impl SmoothnessSpec {
    pub fn new(beta: Vec<f64>, l: Vec<f64>) -> Result<Self> {
        check_dim(beta.len(), l.len())?;
        if beta.is_empty() {
            return Err(Error::Parameter("smoothness needs at least one axis".into()));
        }
        if beta.iter().chain(&l).any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::Parameter("beta and L must be positive".into()));
        }
        Ok(Self { beta, l })
    }

    /// Unit Hölder constants.
    pub fn from_beta(beta: Vec<f64>) -> Result<Self> {
        let l = vec![1.0; beta.len()];
        Self::new(beta, l)
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn l(&self) -> &[f64] {
        &self.l
    }

    pub fn dim(&self) -> usize {
        self.beta.len()
    }

    /// Axis indices ordered by increasing `β`, ties by axis index.
    pub fn sorted_index(&self) -> Vec<usize> {
        crate::bandwidth::SortedIndex::of(&self.beta).into_inner()
    }

    pub fn sorted_beta(&self) -> Vec<f64> {
        self.sorted_index().into_iter().map(|i| self.beta[i]).collect()
    }

    /// Multiplicity of the smallest exponent.
    pub fn k0(&self) -> usize {
        let s = self.sorted_beta();
        s.iter().take_while(|&&b| b == s[0]).count()
    }

    /// Smallest kernel order `M ≥ max β_i`.
    pub fn kernel_order(&self) -> usize {
        self.beta.iter().fold(0.0f64, |a, &b| a.max(b)).ceil() as usize
    }
}

/// Constants of the coefficient class (ellipticity, growth and drift condition).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientClassParams {
    pub a_min: f64,
    pub a0: f64,
    pub a1: f64,
    pub b0: f64,
    pub b1: f64,
    pub c_tilde: f64,
    pub rho_tilde: f64,
}

impl CoefficientClassParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.a_min, self.a0, self.a1, self.b0, self.b1, self.c_tilde, self.rho_tilde];
        if all.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::Parameter("class constants must be positive".into()));
        }
        if self.a_min > self.a0 {
            return Err(Error::Parameter(format!(
                "a_min = {} exceeds a0 = {}",
                self.a_min, self.a0
            )));
        }
        Ok(())
    }

    /// Recommended burn-in span, `20 / C̃`.
    pub fn burn_in(&self) -> f64 {
        20.0 / self.c_tilde
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_drift_is_minus_x() {
        let g = GaussianDensity::new(3);
        let x = [0.3, -1.2, 2.0];
        let b = drift_from_density(&g, &x).unwrap();
        for i in 0..3 {
            assert!((b[i] + x[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn non_positive_density_is_a_domain_error() {
        struct Zero;
        impl Density for Zero {
            fn dim(&self) -> usize {
                1
            }
            fn density(&self, _: &[f64]) -> f64 {
                0.0
            }
            fn gradient(&self, _: &[f64], out: &mut [f64]) {
                out[0] = 0.0;
            }
            fn laplacian(&self, _: &[f64]) -> f64 {
                0.0
            }
            fn support_note(&self) -> String {
                String::new()
            }
            fn name(&self) -> String {
                "zero".into()
            }
        }
        let err = drift_from_density(&Zero, &[1.5]).unwrap_err();
        assert!(matches!(err, Error::NonPositiveDensity { ref x, .. } if x == &[1.5]));
    }

    #[test]
    fn smoothness_sorting_and_k0() {
        let s = SmoothnessSpec::from_beta(vec![3.0, 1.0, 2.0, 1.0]).unwrap();
        assert_eq!(s.sorted_index(), vec![1, 3, 2, 0]);
        assert_eq!(s.k0(), 2);
        assert_eq!(s.kernel_order(), 3);
        assert!(SmoothnessSpec::from_beta(vec![1.0, -1.0]).is_err());
        assert!(SmoothnessSpec::new(vec![1.0], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn class_params_validation() {
        let mut p = CoefficientClassParams {
            a_min: 1.0,
            a0: 1.0,
            a1: 1.0,
            b0: 1.0,
            b1: 1.0,
            c_tilde: 0.5,
            rho_tilde: 1.0,
        };
        assert!(p.validate().is_ok());
        assert_eq!(p.burn_in(), 40.0);
        p.a_min = 2.0;
        assert!(p.validate().is_err());
    }
}
