//! Output files, each stamped with a provenance header.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

use crate::config::RunConfig;

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    /// The resolved config, as canonical JSON.
    pub config: serde_json::Value,
}

impl Provenance {
    pub fn new(command: &str, config: &RunConfig) -> anyhow::Result<Self> {
        Ok(Self {
            tool: "ergodens",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config_sha256: config.sha256(),
            seed: config.seed()?,
            config: serde_json::from_str(&config.canonical_json())?,
        })
    }

    /// `#`-prefixed lines for CSV and plot files.
    fn comment_block(&self) -> String {
        format!(
            "# {} {}\n# command: {}\n# config_sha256: {}\n# seed: {}\n# config: {}\n",
            self.tool, self.version, self.command, self.config_sha256, self.seed, self.config
        )
    }
}

/// Output directory of one run.
pub struct Output {
    dir: PathBuf,
    provenance: Provenance,
}

impl Output {
    pub fn create(dir: &Path, provenance: Provenance) -> anyhow::Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf(), provenance })
    }

    /// Writes a CSV or whitespace-separated file below the header.
    pub fn text(&mut self, name: &str, body: &str) -> anyhow::Result<PathBuf> {
        let path = self.dir.join(name);
        let mut content = self.provenance.comment_block();
        content.push_str(body);
        std::fs::write(&path, content).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    /// Writes `{"provenance": ..., "data": ...}`.
    pub fn json<T: Serialize>(&mut self, name: &str, data: &T) -> anyhow::Result<PathBuf> {
        #[derive(Serialize)]
        struct Doc<'a, T> {
            provenance: &'a Provenance,
            data: &'a T,
        }
        let path = self.dir.join(name);
        let mut body = serde_json::to_string_pretty(&Doc { provenance: &self.provenance, data })?;
        body.push('\n');
        std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

/// Formats rows of numbers as CSV lines.
pub fn csv_rows<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.into_iter().collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

/// `f64` in round-trip exponent notation.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}
