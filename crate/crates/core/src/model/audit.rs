//! Numerical audit of a model against the coefficient class constants.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AnalyticModel, CoefficientClassParams, Sde};
use crate::error::{check_dim, Result};

const PROBE_SEED: u64 = 0x5eed_a0d1;
const SCAN_NODES: usize = 17;

/// Axis-aligned box `∏[lo_i, hi_i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl ProbeBox {
    pub fn cube(d: usize, half_width: f64) -> Self {
        Self { lo: vec![-half_width; d], hi: vec![half_width; d] }
    }

    /// Whether the box contains the centered ball of radius `r`.
    pub fn covers_ball(&self, r: f64) -> bool {
        self.lo.iter().zip(&self.hi).all(|(&lo, &hi)| lo <= -r && hi >= r)
    }
}

/// One check: `value` compared against `bound`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub passed: bool,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipReport {
    pub model: String,
    pub n_probes: usize,
    pub drift_at_origin: f64,
    pub drift_sup: f64,
    pub jacobian_sup: f64,
    /// Largest `⟨x, b(x)⟩/|x|` over probes with `|x| ≥ ρ̃`.
    pub drift_condition_worst: Option<f64>,
    pub min_density: f64,
    pub checks: Vec<CheckOutcome>,
}

impl MembershipReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Frobenius norm of the drift Jacobian by central differences.
fn jacobian_norm(model: &AnalyticModel, x: &[f64]) -> f64 {
    let d = x.len();
    let step = 1e-5 * (1.0 + norm(x));
    let mut y = x.to_vec();
    let (mut bp, mut bm) = (vec![0.0; d], vec![0.0; d]);
    let mut acc = 0.0;
    for j in 0..d {
        y[j] = x[j] + step;
        model.drift(&y, &mut bp);
        y[j] = x[j] - step;
        model.drift(&y, &mut bm);
        y[j] = x[j];
        acc += bp.iter().zip(&bm).map(|(p, m)| ((p - m) / (2.0 * step)).powi(2)).sum::<f64>();
    }
    acc.sqrt()
}

fn outcome(name: &str, value: f64, bound: f64, passed: bool, note: impl Into<String>) -> CheckOutcome {
    CheckOutcome { name: name.into(), value, bound, passed, note: note.into() }
}

/// Probes the drift and density of `model` on `probe_box` and compares the
/// measured quantities with `params`. Failures are reported, not returned as errors.
pub fn check_class_membership(
    model: &AnalyticModel,
    params: &CoefficientClassParams,
    probe_box: &ProbeBox,
    n_probes: usize,
) -> Result<MembershipReport> {
    let d = model.dim();
    check_dim(d, probe_box.lo.len())?;
    check_dim(d, probe_box.hi.len())?;

    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
    let mut probes: Vec<Vec<f64>> = vec![vec![0.0; d]];
    for _ in 0..n_probes {
        probes.push(
            (0..d).map(|i| probe_box.lo[i] + (probe_box.hi[i] - probe_box.lo[i]) * rng.random::<f64>()).collect(),
        );
    }

    let mut b = vec![0.0; d];
    model.drift(&probes[0], &mut b);
    let drift_at_origin = norm(&b);
    let mut drift_sup = 0.0f64;
    let mut jacobian_sup = 0.0f64;
    let mut worst: Option<f64> = None;
    let mut min_density = f64::INFINITY;
    for x in &probes {
        model.drift(x, &mut b);
        drift_sup = drift_sup.max(b.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        jacobian_sup = jacobian_sup.max(jacobian_norm(model, x));
        min_density = min_density.min(model.pdf(x));
        let r = norm(x);
        if r >= params.rho_tilde {
            let radial = x.iter().zip(&b).map(|(a, c)| a * c).sum::<f64>() / r;
            worst = Some(worst.map_or(radial, |w: f64| w.max(radial)));
        }
    }

    let mut checks = vec![
        outcome(
            "probe_box_coverage",
            2.0 * params.rho_tilde,
            2.0 * params.rho_tilde,
            probe_box.covers_ball(2.0 * params.rho_tilde),
            "probe box must contain the ball of radius 2·rho_tilde",
        ),
        // unit diffusion: a = I, so a_min ≤ 1 ≤ a0 and its derivative vanishes
        outcome("ellipticity", 1.0, params.a_min, params.a_min <= 1.0 && 1.0 <= params.a0, "a = I"),
        outcome("drift_at_origin", drift_at_origin, params.b0, drift_at_origin <= params.b0, "|b(0)|"),
        outcome("drift_bound", drift_sup, params.b0, drift_sup <= params.b0, "max_j sup |b_j| on probes"),
        outcome("drift_lipschitz", jacobian_sup, params.b1, jacobian_sup <= params.b1, "sup |∂b| (Frobenius)"),
    ];
    match worst {
        Some(w) => checks.push(outcome(
            "drift_condition",
            w,
            -params.c_tilde,
            w <= -params.c_tilde,
            "max <x,b(x)>/|x| over |x| >= rho_tilde",
        )),
        None => checks.push(outcome(
            "drift_condition",
            f64::NAN,
            -params.c_tilde,
            false,
            "no probe with |x| >= rho_tilde",
        )),
    }

    let mut positivity_min = min_density;
    let mut note = String::from("min density over probes");
    if let Some((lo, hi)) = model.density().critical_box() {
        let scan = scan_min(model, &lo, &hi);
        if scan.0 < positivity_min {
            positivity_min = scan.0;
            note = format!("min density {:.3e} at {:?} in the bump support", scan.0, scan.1);
        }
    }
    checks.push(outcome("positivity", positivity_min, 0.0, positivity_min > 0.0, note));

    Ok(MembershipReport {
        model: model.density().name(),
        n_probes: probes.len(),
        drift_at_origin,
        drift_sup,
        jacobian_sup,
        drift_condition_worst: worst,
        min_density: positivity_min,
        checks,
    })
}

/// Minimum of the density over a tensor grid of the box.
fn scan_min(model: &AnalyticModel, lo: &[f64], hi: &[f64]) -> (f64, Vec<f64>) {
    let d = lo.len();
    let total = SCAN_NODES.pow(d as u32);
    let mut best = (f64::INFINITY, vec![0.0; d]);
    let mut x = vec![0.0; d];
    for flat in 0..total {
        let mut rem = flat;
        for i in 0..d {
            let k = rem % SCAN_NODES;
            rem /= SCAN_NODES;
            x[i] = lo[i] + (hi[i] - lo[i]) * k as f64 / (SCAN_NODES - 1) as f64;
        }
        let p = model.pdf(&x);
        if p < best.0 {
            best = (p, x.clone());
        }
    }
    best
}
