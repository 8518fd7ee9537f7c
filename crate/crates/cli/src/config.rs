//! Optional TOML defaults. Flags always win; relative paths in the file are
//! taken relative to the file's directory.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;

use crate::Common;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    tech: Option<PathBuf>,
    layout: Option<PathBuf>,
    top: Option<String>,
    schematic: Option<PathBuf>,
    model: Option<String>,
    workers: Option<usize>,
    report: Option<PathBuf>,
    svg: Option<PathBuf>,
    netlist: Option<PathBuf>,
    reference: Option<PathBuf>,
    path: Option<Vec<String>>,
}

/// Effective settings after merging.
pub type Resolved = Common;

impl Config {
    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn merge(self, flags: Common, file: Option<&Path>) -> Resolved {
        let base = file.and_then(Path::parent).map(Path::to_path_buf).unwrap_or_default();
        let rel = |p: Option<PathBuf>| p.map(|p| if p.is_absolute() { p } else { base.join(p) });
        Common {
            tech: flags.tech.or(rel(self.tech)),
            layout: flags.layout.or(rel(self.layout)),
            top: flags.top.or(self.top),
            schematic: flags.schematic.or(rel(self.schematic)),
            model: flags.model.or(self.model),
            workers: flags.workers.or(self.workers),
            report: flags.report.or(rel(self.report)),
            svg: flags.svg.or(rel(self.svg)),
            netlist: flags.netlist.or(rel(self.netlist)),
            reference: flags.reference.or(rel(self.reference)),
            path: flags.path.or(self.path),
        }
    }
}
