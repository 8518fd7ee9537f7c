use std::fmt::Write as _;
use std::path::Path;

use super::{FlatLayout, LayoutError};
use crate::drc::Violation;
use crate::geometry::Rect;
use crate::techdb::{LayerClass, TechDb};

const PALETTE: [&str; 10] =
    ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"];

fn fill(tech: &TechDb, layer: &str) -> &'static str {
    match tech.class(layer) {
        Some(LayerClass::Well) => "#e8e8d0",
        Some(LayerClass::Active) => "#3a9d23",
        Some(LayerClass::Gate) => "#d62728",
        Some(LayerClass::GateCut) => "#000000",
        _ => PALETTE[tech.stack_rank(layer) % PALETTE.len()],
    }
}

/// SVG 1.1 drawing: one group per populated layer in stack order, then
/// violation markers carrying the rule id as a tooltip. Layout coordinates
/// are kept as-is inside a y-flipped group.
pub fn render_svg(layout: &FlatLayout, violations: &[Violation], tech: &TechDb) -> String {
    let bbox = violations
        .iter()
        .map(|v| v.location)
        .chain(layout.bbox())
        .reduce(|a, b| a.union_bbox(&b))
        .unwrap_or(Rect::new(0, 0, 1, 1));
    let margin = 20 + (bbox.width().max(bbox.height()) / 50);
    let view = bbox.grow(margin);
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" viewBox="{} {} {} {}" width="{}" height="{}">"#,
        view.lo.x,
        -view.hi.y,
        view.width(),
        view.height(),
        view.width().min(2000),
        (view.height() * view.width().min(2000)) / view.width().max(1)
    );
    let _ = writeln!(s, r#"<g transform="scale(1,-1)">"#);
    let mut layers: Vec<&String> = layout.layers.keys().collect();
    layers.sort_by_key(|l| (tech.stack_rank(l), l.to_string()));
    for name in layers {
        let set = &layout.layers[name];
        if set.is_empty() {
            continue;
        }
        let _ = writeln!(s, r#"<g id="layer-{name}" fill="{}" fill-opacity="0.45" stroke="none">"#, fill(tech, name));
        for p in &set.polygons {
            let mut d = String::new();
            for (i, v) in p.vertices().iter().enumerate() {
                let _ = write!(d, "{}{} {}", if i == 0 { "M" } else { " L" }, v.x, v.y);
            }
            let _ = writeln!(s, r#"<path d="{d} Z"/>"#);
        }
        let _ = writeln!(s, "</g>");
    }
    if !violations.is_empty() {
        let _ = writeln!(s, r##"<g id="violations" fill="none" stroke="#ff00ff" stroke-width="2">"##);
        for v in violations {
            let l = &v.location;
            let _ = writeln!(
                s,
                r#"<rect class="violation" x="{}" y="{}" width="{}" height="{}"><title>{}: {}</title></rect>"#,
                l.lo.x,
                l.lo.y,
                l.width(),
                l.height(),
                escape(&v.rule_id),
                escape(&v.message)
            );
        }
        let _ = writeln!(s, "</g>");
    }
    let _ = writeln!(s, "</g>\n</svg>");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

pub fn write_svg(
    layout: &FlatLayout,
    violations: &[Violation],
    tech: &TechDb,
    path: impl AsRef<Path>,
) -> Result<(), LayoutError> {
    let path = path.as_ref();
    std::fs::write(path, render_svg(layout, violations, tech))
        .map_err(|source| LayoutError::Io { path: path.display().to_string(), source })
}
