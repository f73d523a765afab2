//! Euler–Maruyama discretization of `dX = b(X) dt + σ dW`.

use std::io::{Read, Write};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Sde;
use crate::rng::NormalStream;

/// Magic bytes opening a binary path dump.
pub const DUMP_MAGIC: [u8; 8] = *b"ERGDPATH";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Observation horizon `T`.
    pub horizon: f64,
    pub dt: f64,
    /// Span simulated and discarded before recording starts.
    pub burn_in: f64,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(horizon: f64, dt: f64, burn_in: f64, seed: u64) -> Result<Self> {
        let cfg = Self { horizon, dt, burn_in, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Parameter(format!("horizon must be positive, got {}", self.horizon)));
        }
        if !(self.dt > 0.0 && self.dt <= self.horizon / 100.0) {
            return Err(Error::Parameter(format!(
                "dt must lie in (0, T/100], got dt = {} with T = {}",
                self.dt, self.horizon
            )));
        }
        if !(self.burn_in >= 0.0 && self.burn_in.is_finite()) {
            return Err(Error::Parameter(format!("burn-in must be nonnegative, got {}", self.burn_in)));
        }
        let ratio = self.burn_in / self.dt;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::Parameter(format!(
                "burn-in {} is not a multiple of dt = {}",
                self.burn_in, self.dt
            )));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    pub fn burn_steps(&self) -> usize {
        (self.burn_in / self.dt).round() as usize
    }

    /// Same configuration with another seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..*self }
    }
}

/// Recorded states `X_0, X_dt, …, X_{(n-1)dt}` after burn-in.
#[derive(Debug, Clone, PartialEq)]
pub struct PathGrid {
    dt: f64,
    states: Array2<f64>,
    seed: u64,
    model_id: String,
}

impl PathGrid {
    pub fn new(dt: f64, states: Array2<f64>, seed: u64, model_id: impl Into<String>) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::Parameter(format!("dt must be positive, got {dt}")));
        }
        if states.nrows() < 100 {
            return Err(Error::Data(format!("a path needs at least 100 steps, got {}", states.nrows())));
        }
        if states.ncols() == 0 {
            return Err(Error::Data("a path needs at least one axis".into()));
        }
        if let Some(k) = states.rows().into_iter().position(|r| r.iter().any(|v| !v.is_finite())) {
            return Err(Error::Divergence { step: k as u64 });
        }
        Ok(Self { dt, states, seed, model_id: model_id.into() })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn states(&self) -> &Array2<f64> {
        &self.states
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn n_steps(&self) -> usize {
        self.states.nrows()
    }

    pub fn dim(&self) -> usize {
        self.states.ncols()
    }

    /// `T = n_steps · dt`.
    pub fn horizon(&self) -> f64 {
        self.n_steps() as f64 * self.dt
    }

    /// Writes the 32-byte header (magic, `d`, `n_steps`, `dt`) and the rows,
    /// all little-endian.
    pub fn write_dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(&DUMP_MAGIC)?;
        w.write_all(&(self.dim() as u64).to_le_bytes())?;
        w.write_all(&(self.n_steps() as u64).to_le_bytes())?;
        w.write_all(&self.dt.to_le_bytes())?;
        let mut buf = Vec::with_capacity(8 * self.dim() * 1024);
        for row in self.states.rows() {
            for v in row {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            if buf.len() >= 8 * self.dim() * 1024 {
                w.write_all(&buf)?;
                buf.clear();
            }
        }
        w.write_all(&buf)?;
        w.flush()
    }

    pub fn read_dump<R: Read>(mut r: R, model_id: impl Into<String>) -> Result<Self> {
        let io = |e: std::io::Error| Error::Data(format!("reading path dump: {e}"));
        let mut header = [0u8; 32];
        r.read_exact(&mut header).map_err(io)?;
        if header[..8] != DUMP_MAGIC {
            return Err(Error::Data("not a path dump (bad magic)".into()));
        }
        let word = |i: usize| <[u8; 8]>::try_from(&header[8 * i..8 * i + 8]).unwrap();
        let d = u64::from_le_bytes(word(1)) as usize;
        let n = u64::from_le_bytes(word(2)) as usize;
        let dt = f64::from_le_bytes(word(3));
        let mut bytes = vec![0u8; 8 * d * n];
        r.read_exact(&mut bytes).map_err(io)?;
        let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        let states = Array2::from_shape_vec((n, d), values).map_err(|e| Error::Data(e.to_string()))?;
        Self::new(dt, states, 0, model_id)
    }
}

struct Stepper<'a> {
    model: &'a dyn Sde,
    dt: f64,
    noise_scale: f64,
    coarsen: usize,
    stream: NormalStream,
    b: Vec<f64>,
    xi: Vec<f64>,
    acc: Vec<f64>,
    step: u64,
}

impl<'a> Stepper<'a> {
    fn new(model: &'a dyn Sde, dt: f64, seed: u64, coarsen: usize) -> Self {
        let d = model.dim();
        Self {
            model,
            dt,
            noise_scale: model.diffusion_scale() * (dt / coarsen as f64).sqrt(),
            coarsen,
            stream: NormalStream::new(seed, d),
            b: vec![0.0; d],
            xi: vec![0.0; d],
            acc: vec![0.0; d],
            step: 0,
        }
    }

    /// `x ← x + b(x) dt + σ ΔW`, where `ΔW` sums `coarsen` fine increments.
    fn advance(&mut self, x: &mut [f64]) -> Result<()> {
        self.model.drift(x, &mut self.b);
        self.acc.iter_mut().for_each(|a| *a = 0.0);
        for _ in 0..self.coarsen {
            self.stream.fill(&mut self.xi);
            self.acc.iter_mut().zip(&self.xi).for_each(|(a, z)| *a += z);
        }
        let mut finite = true;
        for i in 0..x.len() {
            x[i] += self.b[i] * self.dt + self.noise_scale * self.acc[i];
            finite &= x[i].is_finite();
        }
        self.step += 1;
        if finite {
            Ok(())
        } else {
            Err(Error::Divergence { step: self.step })
        }
    }
}

/// Runs burn-in, then calls `visit(k, X_k)` for each of the `n_steps` recorded
/// states. The Brownian driver is the fine grid `dt / coarsen`, so paths with
/// different `coarsen` share their noise.
pub fn simulate_with<F: FnMut(usize, &[f64])>(
    model: &dyn Sde,
    config: &SimConfig,
    coarsen: usize,
    mut visit: F,
) -> Result<()> {
    config.validate()?;
    let coarsen = coarsen.max(1);
    let mut stepper = Stepper::new(model, config.dt, config.seed, coarsen);
    let mut x = model.start();
    for _ in 0..config.burn_steps() {
        stepper.advance(&mut x)?;
    }
    let n = config.n_steps();
    for k in 0..n {
        visit(k, &x);
        if k + 1 < n {
            stepper.advance(&mut x)?;
        }
    }
    Ok(())
}

/// Simulates and records a path of `round(T/dt)` states after burn-in.
pub fn euler_maruyama(model: &dyn Sde, config: &SimConfig) -> Result<PathGrid> {
    euler_maruyama_coarsened(model, config, 1)
}

/// As [`euler_maruyama`], with each increment summed from `coarsen` steps of a
/// finer Brownian driver.
pub fn euler_maruyama_coarsened(model: &dyn Sde, config: &SimConfig, coarsen: usize) -> Result<PathGrid> {
    let d = model.dim();
    let n = config.n_steps();
    let mut states = Array2::<f64>::zeros((n, d));
    simulate_with(model, config, coarsen, |k, x| {
        states.row_mut(k).iter_mut().zip(x).for_each(|(s, v)| *s = *v)
    })?;
    PathGrid::new(config.dt, states, config.seed, model.label())
}

/// Terminal state of the burn-in run started at the model's start point.
pub fn stationary_start(model: &dyn Sde, config: &SimConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let mut stepper = Stepper::new(model, config.dt, config.seed, 1);
    let mut x = model.start();
    for _ in 0..config.burn_steps() {
        stepper.advance(&mut x)?;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AnalyticModel, GaussianDensity};

    /// `dX = dW` in `d` dimensions.
    pub(crate) struct Brownian(pub usize);

    impl Sde for Brownian {
        fn dim(&self) -> usize {
            self.0
        }
        fn drift(&self, _: &[f64], out: &mut [f64]) {
            out.iter_mut().for_each(|b| *b = 0.0);
        }
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::new(10.0, 0.2, 0.0, 1).is_err());
        assert!(SimConfig::new(10.0, 0.1, 0.25, 1).is_err());
        let c = SimConfig::new(10.0, 0.1, 0.3, 1).unwrap();
        assert_eq!((c.n_steps(), c.burn_steps()), (100, 3));
    }

    #[test]
    fn brownian_variance_at_unit_time() {
        let cfg = SimConfig::new(1.0, 0.01, 1.0, 0).unwrap();
        let n = 10_000;
        let mut acc = 0.0;
        for s in 0..n {
            let x = stationary_start(&Brownian(1), &cfg.with_seed(s)).unwrap();
            acc += x[0] * x[0];
        }
        let var = acc / n as f64;
        assert!((var - 1.0).abs() < 0.05, "{var}");
    }

    #[test]
    fn ou_stationary_variance() {
        // a single T = 500 path has a standard error of about 0.03; average 8 of them
        let model = AnalyticModel::new(GaussianDensity::new(2));
        let cfg = SimConfig::new(500.0, 0.01, 20.0, 3).unwrap();
        let mut per_axis = [0.0; 2];
        for seed in 0..8 {
            let path = euler_maruyama(&model, &cfg.with_seed(seed)).unwrap();
            for (j, col) in path.states().columns().into_iter().enumerate() {
                let m = col.mean().unwrap();
                per_axis[j] += col.iter().map(|x| (x - m).powi(2)).sum::<f64>() / col.len() as f64 / 8.0;
            }
        }
        for v in per_axis {
            assert!((v - 0.5).abs() < 0.03, "{v}");
        }
    }

    #[test]
    fn deterministic_for_a_seed() {
        let model = AnalyticModel::new(GaussianDensity::new(3));
        let cfg = SimConfig::new(5.0, 0.01, 1.0, 11).unwrap();
        let a = euler_maruyama(&model, &cfg).unwrap();
        let b = euler_maruyama(&model, &cfg).unwrap();
        assert_eq!(a, b);
        let c = euler_maruyama(&model, &cfg.with_seed(12)).unwrap();
        assert_ne!(a.states(), c.states());
    }

    #[test]
    fn zero_burn_in_returns_mode() {
        let model = AnalyticModel::new(GaussianDensity::new(2));
        let cfg = SimConfig::new(5.0, 0.01, 0.0, 1).unwrap();
        assert_eq!(stationary_start(&model, &cfg).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn divergence_reports_step() {
        struct Explode;
        impl Sde for Explode {
            fn dim(&self) -> usize {
                1
            }
            fn drift(&self, x: &[f64], out: &mut [f64]) {
                out[0] = 1e200 * (1.0 + x[0].abs());
            }
        }
        let cfg = SimConfig::new(10.0, 0.1, 0.0, 1).unwrap();
        match euler_maruyama(&Explode, &cfg) {
            Err(Error::Divergence { step }) => assert!(step >= 1 && step < 10),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dump_roundtrip() {
        let model = AnalyticModel::new(GaussianDensity::new(2));
        let cfg = SimConfig::new(2.0, 0.01, 0.0, 5).unwrap();
        let path = euler_maruyama(&model, &cfg).unwrap();
        let mut bytes = Vec::new();
        path.write_dump(&mut bytes).unwrap();
        assert_eq!(bytes.len(), 32 + 8 * 2 * 200);
        let back = PathGrid::read_dump(bytes.as_slice(), path.model_id()).unwrap();
        assert_eq!(back.states(), path.states());
        assert_eq!(back.dt(), 0.01);
    }
}
