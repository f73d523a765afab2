use ergodens_core::bandwidth::GridParams;
use ergodens_core::harness::oracle_sweep;
use ergodens_core::kernel::make_order_kernel;
use ergodens_core::model::ModelSpec;
use ergodens_core::rng::derive_seed;
use serde::Deserialize;

use super::{build_grid, default_cap, min_of, Context, RegionSection, SimSection};
use crate::config::{ConfigError, RunConfig};
use crate::output::{csv_rows, num, Output, Provenance};

fn default_seeds() -> usize {
    20
}

fn default_order() -> usize {
    2
}

fn default_ks() -> Vec<f64> {
    vec![0.5, 1.0, 2.0, 4.0]
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CalibrateConfig {
    model: ModelSpec,
    sim: SimSection,
    region: RegionSection,
    /// Number of simulated paths.
    #[serde(default = "default_seeds")]
    seeds: usize,
    /// Penalty constants to compare.
    #[serde(default = "default_ks")]
    ks: Vec<f64>,
    #[serde(default = "default_order")]
    kernel_order: usize,
    #[serde(default)]
    z: Option<Vec<Vec<u64>>>,
    #[serde(default)]
    grid: Option<GridParams>,
    #[serde(default = "default_cap")]
    per_axis_cap: usize,
}

pub fn run(config: &RunConfig, ctx: &Context) -> anyhow::Result<()> {
    let cfg: CalibrateConfig = config.parse()?;
    if cfg.seeds == 0 {
        return Err(ConfigError("`seeds` must be positive".into()).into());
    }
    let seed = config.seed()?;
    let model = cfg.model.build()?;
    let sim = cfg.sim.build(seed)?;
    let grid = build_grid(cfg.z.as_ref(), cfg.grid, cfg.per_axis_cap, sim.horizon, cfg.model.dim())?;
    let h_min = grid.members().iter().map(|h| min_of(h)).fold(f64::INFINITY, f64::min);
    let region = cfg.region.build(h_min)?;
    let kernel = make_order_kernel(cfg.kernel_order)?;
    let seeds: Vec<u64> = (0..cfg.seeds as u64).map(|r| derive_seed(seed, 0, r)).collect();
    let sweep = oracle_sweep(&model, &sim, &seeds, &kernel, &grid, &region, &cfg.ks)?;

    let mut out = Output::create(&ctx.out, Provenance::new("calibrate-penalty", config)?)?;
    let detail = sweep.iter().flatten().map(|r| {
        vec![
            num(r.k),
            r.seed.to_string(),
            r.selected_index.to_string(),
            r.best_index.to_string(),
            num(r.selected_risk),
            num(r.best_risk),
            num(r.ratio),
        ]
    });
    out.text(
        "oracle.csv",
        &csv_rows(&["k", "seed", "selected_index", "best_index", "selected_risk", "best_risk", "ratio"], detail),
    )?;
    let summary: Vec<Vec<String>> = sweep
        .iter()
        .zip(&cfg.ks)
        .map(|(rows, k)| {
            let mut ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
            ratios.sort_by(f64::total_cmp);
            let median = ratios[ratios.len() / 2];
            let within = ratios.iter().filter(|&&r| r <= 5.0).count();
            println!("k = {k}: median ratio {median:.3}, ratio <= 5 in {within}/{}", ratios.len());
            vec![num(*k), num(median), num(ratios[ratios.len() - 1]), within.to_string(), ratios.len().to_string()]
        })
        .collect();
    out.text("summary.csv", &csv_rows(&["k", "median_ratio", "max_ratio", "within_5", "seeds"], summary))?;
    Ok(())
}
