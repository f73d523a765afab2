//! Compactly supported kernels on `[-1, 1]`.
//!
//! [`Kernel1D`] is an even polynomial kernel whose moments of order `1..=M`
//! vanish. It is written in the Legendre basis as
//! `K(x) = Σ_{j≤M} (2j+1)/2 · P_j(0) · P_j(x)`, which reproduces every
//! polynomial of degree `≤ M` exactly: `∫ x^l K = 0^l`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::quad::{legendre_all, GaussLegendre};

/// Largest supported vanishing-moment order.
pub const MAX_ORDER: usize = 15;

/// A one-dimensional profile `t ↦ g(t)` supported on `[-half_width, half_width]`.
pub trait AxisProfile: Send + Sync {
    fn eval(&self, t: f64) -> f64;
    fn half_width(&self) -> f64;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Kernel1D {
    order: usize,
    legendre: Vec<f64>,
    monomial: Vec<f64>,
    sup_norm: f64,
}

impl Kernel1D {
    pub fn order(&self) -> usize {
        self.order
    }

    /// Coefficients of `1, x, x², …` on `[-1, 1]` (odd entries are zero).
    pub fn poly_coeffs(&self) -> &[f64] {
        &self.monomial
    }

    /// Coefficients in the Legendre basis `P_0, P_1, …`.
    pub fn legendre_coeffs(&self) -> &[f64] {
        &self.legendre
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    /// `K(x)`; zero outside `[-1, 1]`.
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        if x.abs() > 1.0 {
            return 0.0;
        }
        clenshaw(&self.legendre, x)
    }

    /// `K_h(t) = K(t/h)/h`.
    #[inline]
    pub fn eval_scaled(&self, t: f64, h: f64) -> f64 {
        self.eval(t / h) / h
    }

    pub fn scaled(&self, h: f64) -> ScaledKernel<'_> {
        ScaledKernel { kernel: self, h }
    }

    /// `∫ x^l K(x) dx` for `l = 0..=upto` with the supplied rule.
    pub fn moments(&self, upto: usize, rule: &GaussLegendre) -> Vec<f64> {
        (0..=upto)
            .map(|l| rule.integrate(-1.0, 1.0, |x| x.powi(l as i32) * self.eval(x)))
            .collect()
    }

    /// `∫ |K|`, integrated piecewise between sign changes.
    pub fn l1_norm(&self) -> f64 {
        let gl = GaussLegendre::new(32);
        gl.composite(-1.0, 1.0, 64, |x| self.eval(x).abs())
    }

    /// Coefficient table as CSV (`power,coefficient`).
    pub fn coefficients_csv(&self) -> String {
        let mut out = String::from("power,coefficient\n");
        for (p, c) in self.monomial.iter().enumerate() {
            let _ = writeln!(out, "{p},{c:e}");
        }
        out
    }
}

/// Builds the order-`m` kernel: `∫K = 1` and `∫x^l K = 0` for `l = 1..=m`.
pub fn make_order_kernel(m: usize) -> Result<Kernel1D> {
    if m > MAX_ORDER {
        return Err(Error::UnsupportedOrder(m));
    }
    let mut p0 = Vec::new();
    legendre_all(m, 0.0, &mut p0);
    let legendre: Vec<f64> = (0..=m)
        .map(|j| if j % 2 == 1 { 0.0 } else { (2 * j + 1) as f64 / 2.0 * p0[j] })
        .collect();
    let monomial = legendre_to_monomial(&legendre);
    let sup_norm = (0..=20_000)
        .map(|i| clenshaw(&legendre, -1.0 + i as f64 * 1e-4).abs())
        .fold(0.0, f64::max);
    Ok(Kernel1D { order: m, legendre, monomial, sup_norm })
}

fn clenshaw(coeffs: &[f64], x: f64) -> f64 {
    // P_{k+1} = ((2k+1) x P_k - k P_{k-1}) / (k+1)
    let n = coeffs.len();
    if n == 0 {
        return 0.0;
    }
    let (mut b1, mut b2) = (0.0, 0.0);
    for k in (0..n).rev() {
        let kf = k as f64;
        let alpha = (2.0 * kf + 1.0) / (kf + 1.0) * x;
        let beta = (kf + 1.0) / (kf + 2.0);
        let b0 = coeffs[k] + alpha * b1 - beta * b2;
        b2 = b1;
        b1 = b0;
    }
    b1
}

fn legendre_to_monomial(legendre: &[f64]) -> Vec<f64> {
    let n = legendre.len();
    let mut out = vec![0.0; n];
    let mut prev: Vec<f64> = vec![1.0];
    let mut cur: Vec<f64> = vec![0.0, 1.0];
    for (j, &c) in legendre.iter().enumerate() {
        let poly = match j {
            0 => prev.clone(),
            1 => cur.clone(),
            _ => {
                let k = (j - 1) as f64;
                let mut next = vec![0.0; j + 1];
                for (i, &v) in cur.iter().enumerate() {
                    next[i + 1] += (2.0 * k + 1.0) * v / (k + 1.0);
                }
                for (i, &v) in prev.iter().enumerate() {
                    next[i] -= k * v / (k + 1.0);
                }
                prev = std::mem::replace(&mut cur, next);
                cur.clone()
            }
        };
        for (i, v) in poly.iter().enumerate() {
            out[i] += c * v;
        }
    }
    out
}

/// `K_h(t) = K(t/h)/h` as an [`AxisProfile`].
#[derive(Debug, Clone, Copy)]
pub struct ScaledKernel<'a> {
    kernel: &'a Kernel1D,
    h: f64,
}

impl AxisProfile for ScaledKernel<'_> {
    #[inline]
    fn eval(&self, t: f64) -> f64 {
        self.kernel.eval_scaled(t, self.h)
    }
    fn half_width(&self) -> f64 {
        self.h
    }
}

/// Smooth zero-mass bump `K(z) = (1 - c z²)·B(z)` with `B(z) = e^{1 - 1/(1-z²)}`.
///
/// `K(0) = 1` and `c = ∫B / ∫z²B` makes `∫K = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpKernel1D {
    c: f64,
}

pub fn make_bump_kernel() -> BumpKernel1D {
    let b = |z: f64| bump_base(z).0;
    let mass = crate::quad::adaptive(b, -1.0, 1.0, 1e-15);
    let second = crate::quad::adaptive(|z| z * z * b(z), -1.0, 1.0, 1e-15);
    BumpKernel1D { c: mass / second }
}

/// `B(z)` and its first two derivatives.
fn bump_base(z: f64) -> (f64, f64, f64) {
    let w = 1.0 - z * z;
    if w <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let b = (1.0 - 1.0 / w).exp();
    if b == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let g = -2.0 * z / (w * w);
    let d2 = b * (g * g - 2.0 / (w * w) - 8.0 * z * z / (w * w * w));
    (b, b * g, d2)
}

impl BumpKernel1D {
    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn eval(&self, z: f64) -> f64 {
        let (b, _, _) = bump_base(z);
        (1.0 - self.c * z * z) * b
    }

    /// `(K, K', K'')` at `z`.
    pub fn jet(&self, z: f64) -> (f64, f64, f64) {
        let (b, b1, b2) = bump_base(z);
        let p = 1.0 - self.c * z * z;
        (
            p * b,
            -2.0 * self.c * z * b + p * b1,
            -2.0 * self.c * b - 4.0 * self.c * z * b1 + p * b2,
        )
    }

    pub fn sup_norm(&self) -> f64 {
        (0..=20_000)
            .map(|i| self.eval(-1.0 + i as f64 * 1e-4).abs())
            .fold(0.0, f64::max)
    }
}

/// Anisotropic product kernel `K_h(x) = ∏_m K(x_m/h_m)/h_m`.
#[derive(Debug, Clone)]
pub struct ProductKernel {
    axis_kernels: Vec<Kernel1D>,
    h: Vec<f64>,
}

impl ProductKernel {
    pub fn new(axis_kernels: Vec<Kernel1D>, h: Vec<f64>) -> Result<Self> {
        crate::error::check_dim(axis_kernels.len(), h.len())?;
        if let Some(&bad) = h.iter().find(|&&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::Parameter(format!("bandwidth must be positive, got {bad}")));
        }
        Ok(Self { axis_kernels, h })
    }

    /// Same kernel on every axis.
    pub fn shared(kernel: &Kernel1D, h: &[f64]) -> Result<Self> {
        Self::new(vec![kernel.clone(); h.len()], h.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.h.len()
    }

    pub fn bandwidth(&self) -> &[f64] {
        &self.h
    }

    pub fn axis_kernels(&self) -> &[Kernel1D] {
        &self.axis_kernels
    }

    /// `∏_m K((center_m - x_m)/h_m)/h_m`, exactly zero outside the support box.
    pub fn eval_product(&self, x: &[f64], center: &[f64]) -> f64 {
        let mut acc = 1.0;
        for m in 0..self.h.len() {
            let u = (center[m] - x[m]) / self.h[m];
            if u.abs() > 1.0 {
                return 0.0;
            }
            acc *= self.axis_kernels[m].eval(u) / self.h[m];
        }
        acc
    }
}

/// Number of nodes of every convolution table.
pub const CONV_TABLE_NODES: usize = 1024;

/// `(K_h * K_η)(t) = ∫ K_h(u - t) K_η(u) du`, tabulated on a uniform grid of
/// [`CONV_TABLE_NODES`] nodes over `[-(h+η), h+η]` with linear interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvolutionTable {
    half_width: f64,
    step: f64,
    values: Vec<f64>,
}

pub fn convolve_axis(kernel: &Kernel1D, h: f64, eta: f64) -> ConvolutionTable {
    // canonical argument order keeps the table bit-identical under swapping
    let (a, b) = if h <= eta { (h, eta) } else { (eta, h) };
    let half_width = a + b;
    let step = 2.0 * half_width / (CONV_TABLE_NODES - 1) as f64;
    // the integrand is a polynomial of degree ≤ 2·MAX_ORDER on the overlap
    let gl = GaussLegendre::new(MAX_ORDER + 2);
    let values = (0..CONV_TABLE_NODES)
        .map(|i| {
            let t = -half_width + i as f64 * step;
            let lo = (t - a).max(-b);
            let hi = (t + a).min(b);
            if hi <= lo {
                return 0.0;
            }
            gl.integrate(lo, hi, |u| kernel.eval_scaled(u - t, a) * kernel.eval_scaled(u, b))
        })
        .collect();
    ConvolutionTable { half_width, step, values }
}

impl ConvolutionTable {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn node(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.step
    }

    /// Trapezoid integral of the tabulated function.
    pub fn integral(&self) -> f64 {
        let n = self.values.len();
        let inner: f64 = self.values[1..n - 1].iter().sum();
        self.step * (inner + 0.5 * (self.values[0] + self.values[n - 1]))
    }

    pub fn l1_norm(&self) -> f64 {
        let n = self.values.len();
        let inner: f64 = self.values[1..n - 1].iter().map(|v| v.abs()).sum();
        self.step * (inner + 0.5 * (self.values[0].abs() + self.values[n - 1].abs()))
    }
}

impl AxisProfile for ConvolutionTable {
    #[inline]
    fn eval(&self, t: f64) -> f64 {
        let s = (t + self.half_width) / self.step;
        if !(0.0..=(CONV_TABLE_NODES - 1) as f64).contains(&s) {
            return 0.0;
        }
        let i = (s as usize).min(CONV_TABLE_NODES - 2);
        let frac = s - i as f64;
        self.values[i] + frac * (self.values[i + 1] - self.values[i])
    }

    fn half_width(&self) -> f64 {
        self.half_width
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Solves the even-moment system for the order-`m` kernel in the monomial
    /// basis by Gaussian elimination.
    fn moment_system_oracle(m: usize) -> Vec<f64> {
        let n = m / 2 + 1;
        // unknowns: coefficient of x^{2i}; equations: ∫x^{2k} K = δ_{k0}
        let mut a = vec![vec![0.0; n + 1]; n];
        for k in 0..n {
            for i in 0..n {
                a[k][i] = 2.0 / (2 * (i + k) + 1) as f64;
            }
            a[k][n] = if k == 0 { 1.0 } else { 0.0 };
        }
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
                .unwrap();
            a.swap(col, piv);
            for row in 0..n {
                if row != col {
                    let f = a[row][col] / a[col][col];
                    for c in col..=n {
                        a[row][c] -= f * a[col][c];
                    }
                }
            }
        }
        (0..n).map(|i| a[i][n] / a[i][i]).collect()
    }

    fn simpson(f: impl Fn(f64) -> f64, n: usize) -> f64 {
        let h = 2.0 / n as f64;
        let mut s = f(-1.0) + f(1.0);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(-1.0 + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn order_one_is_uniform() {
        let k = make_order_kernel(1).unwrap();
        assert_eq!(k.eval(0.3), 0.5);
        assert_eq!(k.eval(-1.0), 0.5);
        assert_eq!(k.eval(1.0001), 0.0);
        assert_eq!(k.poly_coeffs(), &[0.5, 0.0]);
    }

    #[test]
    fn order_three_matches_moment_system() {
        let k = make_order_kernel(3).unwrap();
        let oracle = moment_system_oracle(3);
        assert!((oracle[0] - 9.0 / 8.0).abs() < 1e-14);
        assert!((oracle[1] + 15.0 / 8.0).abs() < 1e-14);
        assert!((k.poly_coeffs()[0] - oracle[0]).abs() < 1e-13);
        assert!((k.poly_coeffs()[2] - oracle[1]).abs() < 1e-13);
        let mass = simpson(|x| k.eval(x), 100_000);
        let second = simpson(|x| x * x * k.eval(x), 100_000);
        assert!((mass - 1.0).abs() < 1e-10);
        assert!(second.abs() < 1e-10);
    }

    #[test]
    fn monomial_coefficients_agree_with_oracle_up_to_order_seven() {
        for m in [5, 7] {
            let k = make_order_kernel(m).unwrap();
            let oracle = moment_system_oracle(m);
            for (i, c) in oracle.iter().enumerate() {
                assert!((k.poly_coeffs()[2 * i] - c).abs() < 1e-9 * (1.0 + c.abs()));
            }
        }
    }

    #[test]
    fn moment_suite() {
        let gl = GaussLegendre::new(64);
        for m in [1, 3, 5, 7, 10, 15] {
            let k = make_order_kernel(m).unwrap();
            let mom = k.moments(m, &gl);
            assert!((mom[0] - 1.0).abs() <= 1e-8, "order {m} mass {}", mom[0]);
            for (l, v) in mom.iter().enumerate().skip(1) {
                assert!(v.abs() <= 1e-8, "order {m} moment {l} = {v}");
            }
        }
    }

    #[test]
    fn order_above_cap_is_rejected() {
        assert!(matches!(make_order_kernel(16), Err(Error::UnsupportedOrder(16))));
    }

    #[test]
    fn bump_kernel_properties() {
        let k = make_bump_kernel();
        assert_eq!(k.eval(0.0), 1.0);
        let mass = crate::quad::adaptive(|z| k.eval(z), -1.0, 1.0, 1e-15);
        assert!(mass.abs() <= 1e-10, "mass {mass}");
        assert_eq!(k.eval(1.0), 0.0);
        assert_eq!(k.eval(-1.5), 0.0);
        // c = ∫B / ∫z²B from an independent Simpson evaluation
        let b = |z: f64| if z.abs() < 1.0 { (1.0 - 1.0 / (1.0 - z * z)).exp() } else { 0.0 };
        let c = simpson(b, 200_000) / simpson(|z| z * z * b(z), 200_000);
        assert!((k.c() - c).abs() < 1e-8 * c);
    }

    #[test]
    fn bump_kernel_derivatives() {
        let k = make_bump_kernel();
        let step = 1e-5;
        for &z in &[-0.8, -0.3, 0.0, 0.4, 0.9] {
            let (_, d1, d2) = k.jet(z);
            let fd1 = (k.eval(z + step) - k.eval(z - step)) / (2.0 * step);
            let fd2 = (k.jet(z + step).1 - k.jet(z - step).1) / (2.0 * step);
            assert!((d1 - fd1).abs() < 1e-6, "{z}: {d1} vs {fd1}");
            assert!((d2 - fd2).abs() < 1e-5, "{z}: {d2} vs {fd2}");
        }
    }

    #[test]
    fn product_kernel_values() {
        let uni = make_order_kernel(1).unwrap();
        let pk = ProductKernel::shared(&uni, &[0.5, 0.25]).unwrap();
        let v = pk.eval_product(&[0.1, 0.1], &[0.0, 0.0]);
        assert!((v - 2.0).abs() < 1e-15);
        assert_eq!(pk.eval_product(&[0.6, 0.0], &[0.0, 0.0]), 0.0);
        let k3 = make_order_kernel(3).unwrap();
        let pk = ProductKernel::shared(&k3, &[0.5, 0.2, 0.1]).unwrap();
        let at_center = pk.eval_product(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]);
        assert!((at_center - (9.0f64 / 8.0).powi(3) / (0.5 * 0.2 * 0.1)).abs() < 1e-10);
    }

    #[test]
    fn convolution_of_boxes_is_a_triangle() {
        let uni = make_order_kernel(1).unwrap();
        let tab = convolve_axis(&uni, 0.5, 0.5);
        for &t in &[-0.9, -0.4, 0.25, 0.7] {
            assert!((tab.eval(t) - (1.0 - f64::abs(t))).abs() < 1e-12, "t={t}");
        }
        // the peak falls between two nodes
        let step = 2.0 / (CONV_TABLE_NODES - 1) as f64;
        assert!((tab.eval(0.0) - 1.0).abs() <= 0.5 * step + 1e-12);
        assert_eq!(tab.eval(1.01), 0.0);
    }

    #[test]
    fn convolution_symmetry_mass_and_young() {
        let k = make_order_kernel(3).unwrap();
        let a = convolve_axis(&k, 0.3, 0.1);
        let b = convolve_axis(&k, 0.1, 0.3);
        assert_eq!(a, b);
        assert!((a.integral() - 1.0).abs() < 2e-3);
        let l1 = k.l1_norm();
        assert!(a.l1_norm() <= l1 * l1 + 2e-3);
    }
}
