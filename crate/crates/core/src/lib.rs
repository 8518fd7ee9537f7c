//! Physical verification for a predictive 15 nm FinFET process design kit.
//!
//! The pipeline is `techdb` → `layout` (load + flatten) → `drc`, then
//! `netex` (connectivity, FinFET recognition, LVS) and `pex` (first-order
//! RC extraction with Sakurai closed forms and Elmore delay).

pub mod density;
pub mod drc;
pub mod geometry;
pub mod layout;
pub mod netex;
pub mod par;
pub mod pex;
pub mod techdb;

pub use density::{density_report, DensityReport};
pub use drc::{run_drc, DrcReport, Violation};
pub use geometry::{Point, Polygon, Rect, Region, ShapeSet};
pub use layout::{flatten, load_layout, Cell, FlatLayout, Library};
pub use par::Workers;
pub use techdb::{load_tech, TechDb};
