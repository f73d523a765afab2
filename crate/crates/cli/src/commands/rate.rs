use ergodens_core::bandwidth::predicted_rate;
use ergodens_core::harness::{
    fit_rate, mse_experiment, BandwidthPolicy, DtRule, MseRow, RateExperimentConfig, RateFit, Target,
};
use ergodens_core::model::ModelSpec;
use serde::{Deserialize, Serialize};

use super::{Context, RegionSection};
use crate::config::{ConfigError, RunConfig};
use crate::output::{csv_rows, num, Output, Provenance};

fn default_burn_in() -> f64 {
    20.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RateConfig {
    model: ModelSpec,
    beta: Vec<f64>,
    t_ladder: Vec<f64>,
    replicates: usize,
    #[serde(default = "default_burn_in")]
    burn_in: f64,
    /// Fixed Euler step; otherwise `dt = dt_fraction · (min h)²`.
    #[serde(default)]
    dt: Option<f64>,
    #[serde(default)]
    dt_fraction: Option<f64>,
    #[serde(default)]
    kernel_order: Option<usize>,
    /// Point target (default: the origin).
    #[serde(default)]
    x: Option<Vec<f64>>,
    /// Region target; needs explicit `nodes`.
    #[serde(default)]
    region: Option<RegionSection>,
    #[serde(default)]
    policy: Option<BandwidthPolicy>,
    /// Exponent of the constrained fits; defaults to the predicted rate.
    #[serde(default)]
    gamma: Option<f64>,
}

#[derive(Debug, Serialize)]
struct RateReport {
    gamma: f64,
    predicted_log_factor: bool,
    fit: RateFit,
    /// Whether the MSE decreases along the ladder.
    mse_monotone: bool,
    rows: Vec<MseRow>,
}

pub fn run(config: &RunConfig, ctx: &Context) -> anyhow::Result<()> {
    let cfg: RateConfig = config.parse()?;
    let seed = config.seed()?;
    let d = cfg.model.dim();
    let target = match (&cfg.x, &cfg.region) {
        (Some(_), Some(_)) => return Err(ConfigError("give either `x` or `[region]`, not both".into()).into()),
        (None, Some(r)) => {
            if r.nodes.is_none() {
                return Err(ConfigError("a region target needs explicit `nodes`".into()).into());
            }
            Target::Region { region: r.build(f64::NAN)? }
        }
        (x, None) => Target::Point { x: x.clone().unwrap_or_else(|| vec![0.0; d]) },
    };
    let dt = match (cfg.dt, cfg.dt_fraction) {
        (Some(_), Some(_)) => return Err(ConfigError("give either `dt` or `dt_fraction`, not both".into()).into()),
        (Some(dt), None) => DtRule::Fixed { dt },
        (None, fraction) => DtRule::BandwidthSquared { fraction: fraction.unwrap_or(0.1) },
    };
    let experiment = RateExperimentConfig {
        model: cfg.model.clone(),
        beta: cfg.beta.clone(),
        t_ladder: cfg.t_ladder.clone(),
        replicates: cfg.replicates,
        target,
        policy: cfg.policy.clone().unwrap_or(BandwidthPolicy::RateOptimal),
        dt,
        burn_in: cfg.burn_in,
        seed_base: seed,
        kernel_order: cfg.kernel_order,
    };
    let rows = mse_experiment(&experiment)?;
    let (predicted, has_log) = predicted_rate(&cfg.beta)?;
    let gamma = cfg.gamma.unwrap_or(predicted);
    let table: Vec<(f64, f64)> = rows.iter().map(|r| (r.t, r.mse)).collect();
    let fit = fit_rate(&table, gamma)?;
    let mse_monotone = rows.windows(2).all(|w| w[1].mse < w[0].mse);
    println!(
        "free slope {:.4} ± {:.4}; predicted -{gamma:.4}{}; preferred {:?} (residual ratio {:.3})",
        fit.slope,
        fit.slope_se,
        if has_log { " with log factor" } else { "" },
        fit.preferred_model,
        fit.residual_ratio
    );

    let mut out = Output::create(&ctx.out, Provenance::new("rate", config)?)?;
    let csv = csv_rows(
        &["t", "dt", "h", "mse", "se", "mean_estimate", "var_estimate", "used", "diverged"],
        rows.iter().map(|r| {
            vec![
                num(r.t),
                num(r.dt),
                r.h.as_ref().map(|h| h.iter().map(|v| num(*v)).collect::<Vec<_>>().join(";")).unwrap_or_default(),
                num(r.mse),
                num(r.se),
                r.mean_estimate.map(num).unwrap_or_default(),
                r.var_estimate.map(num).unwrap_or_default(),
                r.used.to_string(),
                r.diverged.to_string(),
            ]
        }),
    );
    out.text("mse.csv", &csv)?;
    if ctx.plot_data {
        write_plot_data(&mut out, &table, &fit)?;
    }
    out.json("fit.json", &RateReport { gamma, predicted_log_factor: has_log, fit, mse_monotone, rows })?;
    Ok(())
}

/// `(log T, log MSE)` points plus the free, POWER and LOG_POWER fitted lines.
fn write_plot_data(out: &mut Output, table: &[(f64, f64)], fit: &RateFit) -> anyhow::Result<()> {
    let xs: Vec<f64> = table.iter().map(|(t, _)| t.ln()).collect();
    let ys: Vec<f64> = table.iter().map(|(_, m)| m.ln()).collect();
    let n = xs.len() as f64;
    let log_terms: Vec<f64> = table.iter().map(|(t, _)| (t.ln() / t).ln()).collect();
    let power_c = ys.iter().zip(&xs).map(|(y, x)| y + fit.gamma * x).sum::<f64>() / n;
    let logpower_c = ys.iter().zip(&log_terms).map(|(y, l)| y - fit.gamma * l).sum::<f64>() / n;

    let mut points = String::from("# log_T log_MSE\n");
    for (x, y) in xs.iter().zip(&ys) {
        points.push_str(&format!("{} {}\n", num(*x), num(*y)));
    }
    out.text("mse.dat", &points)?;
    let mut lines = String::from("# log_T free power log_power\n");
    for (x, l) in xs.iter().zip(&log_terms) {
        lines.push_str(&format!(
            "{} {} {} {}\n",
            num(*x),
            num(fit.intercept + fit.slope * x),
            num(power_c - fit.gamma * x),
            num(logpower_c + fit.gamma * l)
        ));
    }
    out.text("fit.dat", &lines)?;
    Ok(())
}
