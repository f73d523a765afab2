use std::f64::consts::PI;

use super::Density;

/// `π(x) = π^{-d/2} e^{-|x|²}`: the invariant density of the
/// Ornstein–Uhlenbeck process `dX = -X dt + dW` (variance 1/2 per axis).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianDensity {
    d: usize,
}

impl GaussianDensity {
    pub fn new(d: usize) -> Self {
        assert!(d >= 1);
        Self { d }
    }
}

impl Density for GaussianDensity {
    fn dim(&self) -> usize {
        self.d
    }

    fn density(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        PI.powf(-(self.d as f64) / 2.0) * (-r2).exp()
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let p = self.density(x);
        for (o, &v) in out.iter_mut().zip(x) {
            *o = -2.0 * v * p;
        }
    }

    fn laplacian(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        self.density(x) * (4.0 * r2 - 2.0 * self.d as f64)
    }

    fn log_gradient(&self, x: &[f64], out: &mut [f64]) {
        for (o, &v) in out.iter_mut().zip(x) {
            *o = -2.0 * v;
        }
    }

    fn axis_factor(&self, _axis: usize, t: f64) -> Option<f64> {
        Some((-t * t).exp() / PI.sqrt())
    }

    fn support_note(&self) -> String {
        "gaussian tails, variance 1/2 per axis".into()
    }

    fn name(&self) -> String {
        format!("ou(d={})", self.d)
    }
}
