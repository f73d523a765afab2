use ergodens_core::bandwidth::{select_bandwidth, GridParams};
use ergodens_core::kernel::make_order_kernel;
use ergodens_core::model::ModelSpec;
use ergodens_core::simulate::euler_maruyama;
use serde::Deserialize;

use super::{build_grid, default_cap, min_of, simulate::write_dump, Context, RegionSection, SimSection};
use crate::config::RunConfig;
use crate::output::{Output, Provenance};

fn default_order() -> usize {
    2
}

fn default_k() -> f64 {
    2.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AdaptConfig {
    model: ModelSpec,
    sim: SimSection,
    region: RegionSection,
    #[serde(default = "default_order")]
    kernel_order: usize,
    /// Penalty constant.
    #[serde(default = "default_k")]
    k: f64,
    #[serde(default)]
    z: Option<Vec<Vec<u64>>>,
    #[serde(default)]
    grid: Option<GridParams>,
    #[serde(default = "default_cap")]
    per_axis_cap: usize,
}

pub fn run(config: &RunConfig, ctx: &Context) -> anyhow::Result<()> {
    let cfg: AdaptConfig = config.parse()?;
    let seed = config.seed()?;
    let model = cfg.model.build()?;
    let sim = cfg.sim.build(seed)?;
    let grid = build_grid(cfg.z.as_ref(), cfg.grid, cfg.per_axis_cap, sim.horizon, cfg.model.dim())?;
    let h_min = grid.members().iter().map(|h| min_of(h)).fold(f64::INFINITY, f64::min);
    let region = cfg.region.build(h_min)?;
    let kernel = make_order_kernel(cfg.kernel_order)?;
    let path = euler_maruyama(&model, &sim)?;
    let result = select_bandwidth(&path, &kernel, &grid, &region, cfg.k)?;
    println!("{} candidates, selected h = {:?} (position {})", grid.len(), result.h_tilde, result.index);
    let mut out = Output::create(&ctx.out, Provenance::new("adapt", config)?)?;
    out.json("selection.json", &result)?;
    if let Some(dump) = &ctx.dump_path {
        write_dump(&path, dump)?;
    }
    Ok(())
}
