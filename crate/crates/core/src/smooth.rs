//! Smooth cutoff functions shared by the analytic models.
//!
//! Everything is built from the C^∞ transition
//! `s(t) = e^{-1/t} / (e^{-1/t} + e^{-1/(1-t)})`, equal to 0 for `t <= 0`
//! and to 1 for `t >= 1`.

/// Transition `s(t)` with its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet {
    const ZERO: Jet = Jet { value: 0.0, d1: 0.0, d2: 0.0 };
    const ONE: Jet = Jet { value: 1.0, d1: 0.0, d2: 0.0 };
}

pub fn transition(t: f64) -> Jet {
    if t <= 0.0 {
        return Jet::ZERO;
    }
    if t >= 1.0 {
        return Jet::ONE;
    }
    // s = 1 / (1 + e^u), u = 1/t - 1/(1-t)
    let u = 1.0 / t - 1.0 / (1.0 - t);
    let s = if u > 0.0 {
        let e = (-u).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + u.exp())
    };
    let q = s * (1.0 - s);
    let w = 1.0 / (t * t) + 1.0 / ((1.0 - t) * (1.0 - t));
    let dw = -2.0 / (t * t * t) + 2.0 / ((1.0 - t) * (1.0 - t) * (1.0 - t));
    let d1 = q * w;
    let d2 = (1.0 - 2.0 * s) * d1 * w + q * dw;
    Jet { value: s, d1, d2 }
}

/// `ψ(x) = x·s(2x - 1)`: zero on `[0, 1/2]`, identity on `[1, ∞)`.
pub fn psi(x: f64) -> Jet {
    let s = transition(2.0 * x - 1.0);
    Jet {
        value: x * s.value,
        d1: s.value + 2.0 * x * s.d1,
        d2: 4.0 * s.d1 + 4.0 * x * s.d2,
    }
}

/// `φ(u) = s(4u - 1)`: zero on `[0, 1/4]`, one on `[1/2, ∞)`.
pub fn phi(u: f64) -> Jet {
    let s = transition(4.0 * u - 1.0);
    Jet {
        value: s.value,
        d1: 4.0 * s.d1,
        d2: 16.0 * s.d2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(f: impl Fn(f64) -> Jet, x: f64) {
        let h = 1e-5;
        let j = f(x);
        let d1 = (f(x + h).value - f(x - h).value) / (2.0 * h);
        let d2 = (f(x + h).d1 - f(x - h).d1) / (2.0 * h);
        assert!((j.d1 - d1).abs() < 1e-6 * (1.0 + d1.abs()), "d1 at {x}: {} vs {d1}", j.d1);
        assert!((j.d2 - d2).abs() < 1e-5 * (1.0 + d2.abs()), "d2 at {x}: {} vs {d2}", j.d2);
    }

    #[test]
    fn transition_limits_and_symmetry() {
        assert_eq!(transition(-0.3).value, 0.0);
        assert_eq!(transition(1.2).value, 1.0);
        assert!((transition(0.5).value - 0.5).abs() < 1e-15);
        for &t in &[0.1, 0.3, 0.45] {
            let a = transition(t).value;
            let b = transition(1.0 - t).value;
            assert!((a + b - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for &t in &[0.05, 0.2, 0.5, 0.77, 0.95] {
            fd_check(transition, t);
        }
        for &x in &[0.55, 0.7, 0.9, 1.5] {
            fd_check(psi, x);
        }
        for &u in &[0.27, 0.33, 0.4, 0.49] {
            fd_check(phi, u);
        }
    }

    #[test]
    fn psi_and_phi_plateaus() {
        assert_eq!(psi(0.3).value, 0.0);
        assert_eq!(psi(0.5).d1, 0.0);
        assert_eq!(psi(2.5).value, 2.5);
        assert_eq!(psi(2.5).d1, 1.0);
        assert_eq!(phi(0.2).value, 0.0);
        assert_eq!(phi(0.6).value, 1.0);
    }
}
