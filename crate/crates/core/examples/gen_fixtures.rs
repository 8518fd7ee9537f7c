//! Regenerates the layout fixtures under `fixtures/`.
//!
//! ```text
//! cargo run -p finverify --example gen_fixtures [out_dir]
//! ```

#[path = "../tests/support/cells.rs"]
mod cells;

use std::collections::BTreeMap;
use std::path::PathBuf;

fn main() -> std::io::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures"));
    std::fs::create_dir_all(out.join("mutations"))?;
    for (name, lib) in cells::fixtures() {
        std::fs::write(out.join(&name), lib.to_json())?;
    }
    let expected: BTreeMap<&str, &str> = cells::mutations().iter().map(|m| (m.name, m.rule_id)).collect();
    let mut manifest = serde_json::to_string_pretty(&expected)?;
    manifest.push('\n');
    std::fs::write(out.join("mutations/expected.json"), manifest)?;
    println!("wrote fixtures to {}", out.display());
    Ok(())
}
