use ergodens_core::bandwidth::rate_optimal_bandwidth;
use ergodens_core::harness::{covariance_probe, mixing_slope, MixingSlope};
use ergodens_core::kernel::make_order_kernel;
use ergodens_core::model::ModelSpec;
use serde::{Deserialize, Serialize};

use super::{Context, SimSection};
use crate::config::{ConfigError, RunConfig};
use crate::output::{csv_rows, num, Output, Provenance};

fn default_order() -> usize {
    2
}

fn default_replicates() -> usize {
    50
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MixingConfig {
    model: ModelSpec,
    sim: SimSection,
    lags: Vec<f64>,
    #[serde(default = "default_replicates")]
    replicates: usize,
    /// Bandwidth; otherwise rate-optimal for `beta`.
    #[serde(default)]
    h: Option<Vec<f64>>,
    #[serde(default)]
    beta: Option<Vec<f64>>,
    #[serde(default = "default_order")]
    kernel_order: usize,
    /// Evaluation point (default: the origin).
    #[serde(default)]
    x: Option<Vec<f64>>,
    /// Also run the shuffled-path null.
    #[serde(default = "default_true")]
    null: bool,
    /// Lag window of the slope fit (default: all positive lags).
    #[serde(default)]
    s_min: Option<f64>,
    #[serde(default)]
    s_max: Option<f64>,
}

#[derive(Debug, Serialize)]
struct MixingReport {
    h: Vec<f64>,
    x: Vec<f64>,
    slope: Option<MixingSlope>,
    slope_note: Option<String>,
    /// Largest `|k̄(s)| / se` of the shuffled null over positive lags.
    null_max_z: Option<f64>,
}

pub fn run(config: &RunConfig, ctx: &Context) -> anyhow::Result<()> {
    let cfg: MixingConfig = config.parse()?;
    let seed = config.seed()?;
    let model = cfg.model.build()?;
    let d = cfg.model.dim();
    let sim = cfg.sim.build(0)?;
    let h = match (&cfg.h, &cfg.beta) {
        (Some(h), None) => h.clone(),
        (None, Some(beta)) => rate_optimal_bandwidth(beta, sim.horizon)?,
        _ => return Err(ConfigError("give either `h` or `beta`".into()).into()),
    };
    let x = cfg.x.clone().unwrap_or_else(|| vec![0.0; d]);
    let kernel = make_order_kernel(cfg.kernel_order)?;
    let table = covariance_probe(&model, &sim, &kernel, &h, &x, &cfg.lags, cfg.replicates, seed, false)?;
    let null = if cfg.null {
        Some(covariance_probe(&model, &sim, &kernel, &h, &x, &cfg.lags, cfg.replicates, seed, true)?)
    } else {
        None
    };
    let positive = cfg.lags.iter().copied().filter(|&s| s > 0.0);
    let s_min = cfg.s_min.unwrap_or_else(|| positive.clone().fold(f64::INFINITY, f64::min));
    let s_max = cfg.s_max.unwrap_or_else(|| positive.fold(0.0, f64::max));
    let (slope, slope_note) = match mixing_slope(&table, s_min, s_max) {
        Ok(s) => {
            println!("slope of log|k(s)| on [{s_min}, {s_max}]: {:.4} ± {:.4}", s.slope, s.se);
            (Some(s), None)
        }
        Err(e) => (None, Some(e.to_string())),
    };
    let null_max_z = null.as_ref().map(|n| {
        (0..n.lags.len()).filter(|&i| n.lags[i] > 0.0).map(|i| n.mean[i].abs() / n.se[i]).fold(0.0, f64::max)
    });

    let mut out = Output::create(&ctx.out, Provenance::new("mixing", config)?)?;
    let rows = (0..table.lags.len()).map(|i| {
        let mut row = vec![num(table.lags[i]), table.lag_steps[i].to_string(), num(table.mean[i]), num(table.se[i])];
        if let Some(n) = &null {
            row.push(num(n.mean[i]));
            row.push(num(n.se[i]));
        }
        row
    });
    let header: &[&str] = if null.is_some() {
        &["lag", "lag_steps", "mean", "se", "null_mean", "null_se"]
    } else {
        &["lag", "lag_steps", "mean", "se"]
    };
    out.text("covariance.csv", &csv_rows(header, rows))?;
    out.json("slope.json", &MixingReport { h, x, slope, slope_note, null_max_z })?;
    Ok(())
}
