use ergodens_core::kernel::make_order_kernel;
use ergodens_core::quad::GaussLegendre;
use serde::Deserialize;

use super::{CheckFailed, Context};
use crate::config::RunConfig;
use crate::output::{csv_rows, num, Output, Provenance};

fn default_orders() -> Vec<usize> {
    vec![1, 3, 5, 7]
}

fn default_nodes() -> usize {
    64
}

fn default_tol() -> f64 {
    1e-8
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct KernelCheckConfig {
    #[serde(default = "default_orders")]
    orders: Vec<usize>,
    #[serde(default = "default_nodes")]
    nodes: usize,
    #[serde(default = "default_tol")]
    tol: f64,
}

pub fn run(config: &RunConfig, ctx: &Context) -> anyhow::Result<()> {
    let cfg: KernelCheckConfig = config.parse()?;
    let rule = GaussLegendre::new(cfg.nodes);
    let mut rows = Vec::new();
    let mut coefficients = Vec::new();
    let mut failures = Vec::new();
    for &m in &cfg.orders {
        let kernel = make_order_kernel(m)?;
        let before = failures.len();
        for (l, moment) in kernel.moments(m, &rule).into_iter().enumerate() {
            let target = if l == 0 { 1.0 } else { 0.0 };
            let err = (moment - target).abs();
            let pass = err <= cfg.tol;
            if !pass {
                failures.push(format!("order {m}, moment {l}: error {err:e}"));
            }
            rows.push(vec![m.to_string(), l.to_string(), num(moment), num(target), num(err), pass.to_string()]);
        }
        for (p, c) in kernel.poly_coeffs().iter().enumerate() {
            coefficients.push(vec![m.to_string(), p.to_string(), num(*c)]);
        }
        println!("order {m}: {}", if failures.len() == before { "pass" } else { "FAIL" });
    }
    let mut out = Output::create(&ctx.out, Provenance::new("kernel-check", config)?)?;
    out.text("moments.csv", &csv_rows(&["order", "l", "moment", "target", "abs_error", "pass"], rows))?;
    out.text("coefficients.csv", &csv_rows(&["order", "power", "coefficient"], coefficients))?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CheckFailed(failures.join("; ")).into())
    }
}
