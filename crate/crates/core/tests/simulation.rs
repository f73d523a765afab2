use ergodens_core::model::GaussianDensity;
use ergodens_core::rng::derive_seed;
use ergodens_core::simulate::{euler_maruyama, SimConfig};
use ergodens_core::AnalyticModel;

fn ou(d: usize) -> AnalyticModel {
    AnalyticModel::new(GaussianDensity::new(d))
}

#[test]
fn identical_inputs_give_identical_dumps() {
    let cfg = SimConfig::new(20.0, 0.01, 1.0, 42).unwrap();
    let dump = || {
        let mut bytes = Vec::new();
        euler_maruyama(&ou(3), &cfg).unwrap().write_dump(&mut bytes).unwrap();
        bytes
    };
    assert_eq!(dump(), dump());
}

/// Mean and standard error of `X_1²` over `n` replicates started at 0.
fn second_moment_at_one(dt: f64, n: u64, base: u64) -> (f64, f64) {
    let model = ou(1);
    let values: Vec<f64> = (0..n)
        .map(|r| {
            // the first recorded state is X at the end of the burn-in
            let cfg = SimConfig::new(100.0 * dt, dt, 1.0, derive_seed(base, 0, r)).unwrap();
            euler_maruyama(&model, &cfg).unwrap().states()[[0, 0]].powi(2)
        })
        .collect();
    let m = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    (m, (var / n as f64).sqrt())
}

#[test]
fn euler_weak_error_is_below_monte_carlo_noise() {
    let (coarse, se_c) = second_moment_at_one(0.01, 10_000, 1);
    let (fine, se_f) = second_moment_at_one(0.005, 10_000, 2);
    assert!((coarse - fine).abs() <= 3.0 * (se_c * se_c + se_f * se_f).sqrt(), "{coarse} vs {fine}");
    // X_{k+1} = (1 - dt) X_k + √dt ξ from 0: E X_n² = dt (1 - q^n) / (1 - q), q = (1 - dt)²
    for (dt, m, se) in [(0.01, coarse, se_c), (0.005, fine, se_f)] {
        let q: f64 = (1.0 - dt) * (1.0 - dt);
        let exact = dt * (1.0 - q.powi((1.0 / dt).round() as i32)) / (1.0 - q);
        assert!((m - exact).abs() <= 3.0 * se, "dt = {dt}: {m} vs {exact}");
    }
}

#[test]
fn distinct_seeds_give_uncorrelated_increments() {
    let model = ou(1);
    let increments = |seed: u64| -> Vec<f64> {
        let path = euler_maruyama(&model, &SimConfig::new(200.0, 0.01, 0.0, seed).unwrap()).unwrap();
        let x = path.states().column(0).to_vec();
        x.windows(2).map(|w| w[1] - w[0]).collect()
    };
    let mut worst = 0.0f64;
    for pair in 0..100 {
        let a = increments(derive_seed(9, 0, 2 * pair));
        let b = increments(derive_seed(9, 0, 2 * pair + 1));
        let n = a.len() as f64;
        let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
        let cov: f64 = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        worst = worst.max((cov / (va * vb).sqrt()).abs());
    }
    assert!(worst <= 0.05, "max |ρ| = {worst}");
}
