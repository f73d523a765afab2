use std::fs::File;
use std::io::BufWriter;

use anyhow::Context as _;
use ergodens_core::model::ModelSpec;
use ergodens_core::simulate::{euler_maruyama, PathGrid};
use serde::Deserialize;

use super::{Context, SimSection};
use crate::config::RunConfig;
use crate::output::{csv_rows, num, Output, Provenance};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateConfig {
    model: ModelSpec,
    sim: SimSection,
}

pub fn run(config: &RunConfig, ctx: &Context) -> anyhow::Result<()> {
    let cfg: SimulateConfig = config.parse()?;
    let seed = config.seed()?;
    let model = cfg.model.build()?;
    let path = euler_maruyama(&model, &cfg.sim.build(seed)?)?;
    let mut out = Output::create(&ctx.out, Provenance::new("simulate", config)?)?;
    let stats = axis_stats(&path);
    for (j, (m, v)) in stats.iter().enumerate() {
        println!("axis {}: mean {m:.5}, variance {v:.5}", j + 1);
    }
    let rows = stats.iter().enumerate().map(|(j, (m, v))| vec![(j + 1).to_string(), num(*m), num(*v)]);
    out.text("summary.csv", &csv_rows(&["axis", "mean", "variance"], rows))?;
    if let Some(dump) = &ctx.dump_path {
        write_dump(&path, dump)?;
    }
    Ok(())
}

/// Per-axis sample mean and variance of the recorded states.
pub fn axis_stats(path: &PathGrid) -> Vec<(f64, f64)> {
    let n = path.n_steps() as f64;
    path.states()
        .columns()
        .into_iter()
        .map(|col| {
            let mean = col.sum() / n;
            let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (mean, var)
        })
        .collect()
}

pub fn write_dump(path: &PathGrid, file: &std::path::Path) -> anyhow::Result<()> {
    let f = File::create(file).with_context(|| format!("creating {}", file.display()))?;
    path.write_dump(BufWriter::new(f)).with_context(|| format!("writing {}", file.display()))?;
    println!("path dump: {}", file.display());
    Ok(())
}
