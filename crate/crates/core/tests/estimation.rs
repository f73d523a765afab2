use ergodens_core::bandwidth::{compute_a, CandidateGrid};
use ergodens_core::estimator::{estimate_on_grid, kde_convolved, kde_pointwise, EvalRegion};
use ergodens_core::kernel::make_order_kernel;
use ergodens_core::model::GaussianDensity;
use ergodens_core::quad::GaussLegendre;
use ergodens_core::simulate::{euler_maruyama, euler_maruyama_coarsened, SimConfig};
use ergodens_core::AnalyticModel;

fn ou(d: usize) -> AnalyticModel {
    AnalyticModel::new(GaussianDensity::new(d))
}

#[test]
fn refining_the_step_on_a_frozen_driver_shrinks_the_change() {
    let model = ou(2);
    let kernel = make_order_kernel(2).unwrap();
    let h = [0.3, 0.4];
    let points = [[0.0, 0.0], [0.3, -0.2], [-0.5, 0.4], [0.8, 0.1]];
    // driver step 0.0025 in all three runs
    let estimates: Vec<Vec<f64>> = [(0.02, 8), (0.01, 4), (0.005, 2)]
        .iter()
        .map(|&(dt, coarsen)| {
            let cfg = SimConfig::new(100.0, dt, 2.0, 5).unwrap();
            let path = euler_maruyama_coarsened(&model, &cfg, coarsen).unwrap();
            points.iter().map(|x| kde_pointwise(&path, &kernel, &h, x).unwrap()).collect()
        })
        .collect();
    let change = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>();
    let first = change(&estimates[0], &estimates[1]);
    let second = change(&estimates[1], &estimates[2]);
    assert!(second < first, "changes {first:e} then {second:e}");
    // scale of the Riemann error, C·dt / min h² with C of order one
    assert!(first <= 0.02 / 0.09, "{first}");
}

#[test]
fn estimate_has_unit_mass() {
    let model = ou(2);
    let path = euler_maruyama(&model, &SimConfig::new(2000.0, 0.01, 20.0, 8).unwrap()).unwrap();
    let kernel = make_order_kernel(2).unwrap();
    let h = [0.3, 0.3];
    let region = EvalRegion::with_max_spacing(vec![-4.0; 2], vec![4.0; 2], 0.3 / 4.0).unwrap();
    let est = estimate_on_grid(&path, &kernel, &h, &region).unwrap();
    let (wx, wy) = (region.trapezoid_weights(0), region.trapezoid_weights(1));
    let ny = wy.len();
    let mass: f64 = est.values.iter().enumerate().map(|(i, v)| wx[i / ny] * wy[i % ny] * v).sum();
    assert!((mass - 1.0).abs() <= 0.05, "mass {mass}");
}

#[test]
fn convolved_estimate_is_the_smoothed_plain_estimate() {
    let model = ou(1);
    let path = euler_maruyama(&model, &SimConfig::new(50.0, 0.01, 5.0, 3).unwrap()).unwrap();
    let kernel = make_order_kernel(3).unwrap();
    let (h, eta) = (0.2, 0.3);
    let gl = GaussLegendre::new(4);
    let mut worst = 0.0f64;
    let mut sup = 0.0f64;
    for i in 0..21 {
        let x = -1.0 + 0.1 * i as f64;
        // (K_η * π̂_h)(x) = ∫ K_η(x - y) π̂_h(y) dy over |x - y| ≤ η
        let smoothed = gl.composite(x - eta, x + eta, 400, |y| {
            kernel.eval((x - y) / eta) / eta * kde_pointwise(&path, &kernel, &[h], &[y]).unwrap()
        });
        let direct = kde_convolved(&path, &kernel, &[h], &[eta], &[x]).unwrap();
        worst = worst.max((smoothed - direct).abs());
        sup = sup.max(direct.abs());
    }
    assert!(worst <= 2e-3 * sup, "max difference {worst:e}, sup {sup}");
}

/// `A(h)` from pointwise estimates, trapezoid weights and the penalty formula.
#[test]
fn bias_estimate_matches_a_pointwise_recomputation() {
    let model = ou(3);
    let t = 5.0;
    let path = euler_maruyama(&model, &SimConfig::new(t, 0.01, 1.0, 21).unwrap()).unwrap();
    let kernel = make_order_kernel(2).unwrap();
    let members = vec![vec![0.5, 0.5, 0.5], vec![1.0 / 3.0, 0.5, 0.25]];
    let grid = CandidateGrid::from_bandwidths(members.clone(), t).unwrap();
    let region = EvalRegion::with_max_spacing(vec![-0.2; 3], vec![0.2; 3], 0.25 / 4.0).unwrap();
    let k = 1e-6;

    let axes: Vec<Vec<f64>> = (0..3).map(|i| region.axis_grid(i)).collect();
    let weights: Vec<Vec<f64>> = (0..3).map(|i| region.trapezoid_weights(i)).collect();
    let penalty = |h: &[f64]| {
        let mut s = h.to_vec();
        s.sort_by(f64::total_cmp);
        let logs: f64 = h.iter().map(|v| -v.ln()).sum();
        k / t * (logs / s[2]).min(1.0 / (s[1] * s[2]).sqrt())
    };
    for h in &members {
        let mut expected = 0.0f64;
        for eta in &members {
            let mut dist = 0.0;
            for (i, x) in axes[0].iter().enumerate() {
                for (j, y) in axes[1].iter().enumerate() {
                    for (l, z) in axes[2].iter().enumerate() {
                        let p = [*x, *y, *z];
                        let conv = kde_convolved(&path, &kernel, h, eta, &p).unwrap();
                        let plain = kde_pointwise(&path, &kernel, eta, &p).unwrap();
                        dist += weights[0][i] * weights[1][j] * weights[2][l] * (conv - plain).powi(2);
                    }
                }
            }
            expected = expected.max(dist - penalty(eta));
        }
        let a = compute_a(h, &path, &kernel, &grid, &region, k).unwrap();
        assert!(expected > 0.0, "pick k so that A is not clamped to zero");
        assert!((a - expected).abs() <= 1e-9 * expected, "h = {h:?}: {a:e} vs {expected:e}");
    }
}
