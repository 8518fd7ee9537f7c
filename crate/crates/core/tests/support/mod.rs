#![allow(dead_code)]

pub mod cells;
pub mod oracle;

use std::path::PathBuf;

use finverify::layout::{flatten, load_layout, FlatLayout};
use finverify::TechDb;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn load_flat(name: &str, tech: &TechDb) -> FlatLayout {
    let lib = load_layout(fixture_path(name), tech).unwrap_or_else(|e| panic!("{name}: {e}"));
    let top = lib.top_cell().unwrap().to_string();
    flatten(&lib, &top).unwrap()
}
