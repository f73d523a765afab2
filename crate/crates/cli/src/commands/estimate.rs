use std::fs::File;
use std::io::BufReader;

use anyhow::Context as _;
use ergodens_core::bandwidth::rate_optimal_bandwidth;
use ergodens_core::estimator::{estimate_on_grid, kde_pointwise};
use ergodens_core::kernel::make_order_kernel;
use ergodens_core::model::ModelSpec;
use ergodens_core::simulate::{euler_maruyama, PathGrid};
use serde::Deserialize;

use super::{order_for, simulate::write_dump, Context, RegionSection, SimSection};
use crate::config::{ConfigError, RunConfig};
use crate::output::{csv_rows, num, Output, Provenance};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EstimateConfig {
    /// Path dump to read instead of simulating.
    #[serde(default)]
    path: Option<String>,
    #[serde(default)]
    model: Option<ModelSpec>,
    #[serde(default)]
    sim: Option<SimSection>,
    #[serde(default)]
    kernel_order: Option<usize>,
    #[serde(default)]
    h: Option<Vec<f64>>,
    /// `"auto"` for the rate-optimal bandwidth at the nominal `beta`.
    #[serde(default)]
    bandwidth: Option<String>,
    #[serde(default)]
    beta: Option<Vec<f64>>,
    #[serde(default)]
    region: Option<RegionSection>,
    #[serde(default)]
    x: Option<Vec<f64>>,
}

pub fn run(config: &RunConfig, ctx: &Context) -> anyhow::Result<()> {
    let cfg: EstimateConfig = config.parse()?;
    let seed = config.seed()?;
    let model = cfg.model.as_ref().map(ModelSpec::build).transpose()?;
    let model_dim = cfg.model.as_ref().map(ModelSpec::dim);
    let path = match (&cfg.path, &model, &cfg.sim) {
        (Some(file), _, _) => {
            let f = File::open(file).with_context(|| format!("opening {file}"))?;
            PathGrid::read_dump(BufReader::new(f), file.as_str())?
        }
        (None, Some(model), Some(sim)) => euler_maruyama(model, &sim.build(seed)?)?,
        _ => return Err(ConfigError("give either `path` or both `[model]` and `[sim]`".into()).into()),
    };
    if let Some(md) = model_dim {
        if md != path.dim() {
            return Err(ConfigError(format!("model dimension {md} differs from path dimension {}", path.dim())).into());
        }
    }
    let h = match (&cfg.h, cfg.bandwidth.as_deref(), &cfg.beta) {
        (Some(h), None, _) => h.clone(),
        (None, Some("auto"), Some(beta)) => rate_optimal_bandwidth(beta, path.horizon())?,
        (None, Some("auto"), None) => return Err(ConfigError("bandwidth = \"auto\" needs `beta`".into()).into()),
        _ => return Err(ConfigError("give either `h` or bandwidth = \"auto\"".into()).into()),
    };
    let order = cfg.kernel_order.unwrap_or_else(|| cfg.beta.as_deref().map(order_for).unwrap_or(2));
    let kernel = make_order_kernel(order)?;
    println!("h = {h:?}, kernel order {order}, T = {}", path.horizon());

    let mut out = Output::create(&ctx.out, Provenance::new("estimate", config)?)?;
    let d = path.dim();
    let axes: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    match (&cfg.region, &cfg.x) {
        (Some(region), None) => {
            let region = region.build(super::min_of(&h))?;
            let est = estimate_on_grid(&path, &kernel, &h, &region)?;
            out.text("estimate.csv", &est.to_csv(&region, model.as_ref()))?;
        }
        (None, Some(x)) => {
            let value = kde_pointwise(&path, &kernel, &h, x)?;
            let mut header: Vec<&str> = axes.iter().map(String::as_str).collect();
            header.push("estimate");
            let mut row: Vec<String> = x.iter().map(|v| v.to_string()).collect();
            row.push(num(value));
            if let Some(m) = &model {
                header.push("density");
                row.push(num(m.pdf(x)));
            }
            println!("estimate at {x:?}: {value:.6}");
            out.text("estimate.csv", &csv_rows(&header, [row]))?;
        }
        _ => return Err(ConfigError("give either `[region]` or a point `x`".into()).into()),
    }
    let h_rows = h.iter().enumerate().map(|(j, v)| vec![(j + 1).to_string(), num(*v)]);
    out.text("bandwidth.csv", &csv_rows(&["axis", "h"], h_rows))?;
    if let Some(dump) = &ctx.dump_path {
        write_dump(&path, dump)?;
    }
    Ok(())
}
