use ergodens_core::model::{
    fokker_planck_residual, AnalyticModel, CylindricalBase, GaussianDensity, ModelSpec, ProductExpDensity,
};
use ergodens_core::quad::GaussLegendre;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn worst_relative_residual(model: &AnalyticModel, half: f64, seed: u64) -> f64 {
    let d = model.density().dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let probes: Vec<Vec<f64>> = (0..100).map(|_| (0..d).map(|_| rng.random_range(-half..half)).collect()).collect();
    let sup = probes.iter().map(|x| model.pdf(x)).fold(model.pdf(&vec![0.0; d]), f64::max);
    probes.iter().map(|x| fokker_planck_residual(model, x, 1e-4) / sup).fold(0.0, f64::max)
}

#[test]
fn stationary_equation_holds_for_smooth_models() {
    let models = [
        AnalyticModel::new(GaussianDensity::new(3)),
        AnalyticModel::new(ProductExpDensity::new(0.3, 2).unwrap()),
        AnalyticModel::new(CylindricalBase::new(0.3, 3).unwrap()),
    ];
    for (i, m) in models.iter().enumerate() {
        let r = worst_relative_residual(m, 4.0, i as u64);
        assert!(r <= 1e-4, "model {i}: residual {r:e}");
    }
}

#[test]
fn every_spec_family_builds_and_is_stationary() {
    let specs = [
        r#"{"family": "ou", "d": 2}"#,
        r#"{"family": "product_exp", "eta": 0.2, "d": 2}"#,
        r#"{"family": "bumped", "eta": 0.2, "d": 2, "m_t": 1000000.0, "h": [0.5, 0.5]}"#,
        r#"{"family": "cylindrical", "eta": 0.3, "d": 3}"#,
        r#"{"family": "cylindrical_bump", "eta": 0.3, "d": 3, "m_t": 100000.0, "r_min": 0.05, "r_max": 0.3, "h": [0.4]}"#,
    ];
    for (i, text) in specs.iter().enumerate() {
        let spec: ModelSpec = serde_json::from_str(text).unwrap();
        let model = spec.build().unwrap();
        assert_eq!(model.density().dim(), spec.dim());
        let r = worst_relative_residual(&model, 1.0, 10 + i as u64);
        assert!(r <= 1e-4, "{text}: residual {r:e}");
    }
}

#[test]
fn densities_integrate_to_one() {
    let gl = GaussLegendre::new(16);
    let (xs, ws) = gl.composite_nodes(-100.0, 100.0, 400);
    for model in [
        AnalyticModel::new(GaussianDensity::new(2)),
        AnalyticModel::new(ProductExpDensity::new(0.4, 2).unwrap()),
    ] {
        let mut mass = 0.0;
        for (x, wx) in xs.iter().zip(&ws) {
            for (y, wy) in xs.iter().zip(&ws) {
                mass += wx * wy * model.pdf(&[*x, *y]);
            }
        }
        assert!((mass - 1.0).abs() < 1e-6, "mass {mass}");
    }
}
