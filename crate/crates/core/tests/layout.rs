mod support;

use finverify::density::density_report;
use finverify::drc::Violation;
use finverify::geometry::Rect;
use finverify::layout::render_svg;
use finverify::layout::{flatten, Cell, Instance, Library, LayoutError};
use finverify::TechDb;
use proptest::prelude::*;
use support::{cells, fixture_path, load_flat};

fn tech() -> TechDb {
    TechDb::builtin()
}

fn single(c: Cell) -> Library {
    let mut lib = Library::new();
    lib.top = Some(c.name.clone());
    lib.insert(c).unwrap();
    lib
}

#[test]
fn committed_fixtures_match_the_generator() {
    for (name, lib) in cells::fixtures() {
        let on_disk = std::fs::read_to_string(fixture_path(&name)).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(on_disk, lib.to_json(), "{name} is stale; rerun the gen_fixtures example");
    }
    let manifest: std::collections::BTreeMap<String, String> =
        serde_json::from_str(&std::fs::read_to_string(fixture_path("mutations/expected.json")).unwrap()).unwrap();
    assert_eq!(manifest.len(), cells::mutations().len());
    assert!(manifest.len() >= 12);
}

#[test]
fn inverter_fixture_layers() {
    let t = tech();
    let lib = finverify::load_layout(fixture_path("inv.json"), &t).unwrap();
    let c = lib.cell("INV").unwrap();
    for l in ["ACT", "GATEA", "GATEB", "GATEC", "AIL1", "AIL2", "GIL", "M1A"] {
        assert!(!c.shapes(l).is_empty(), "missing {l}");
    }
}

#[test]
fn empty_cell_is_valid() {
    let t = tech();
    let lib = Library::from_json_str(&single(Cell::new("E")).to_json(), &t).unwrap();
    let flat = flatten(&lib, "E").unwrap();
    assert!(flat.is_empty());
}

#[test]
fn unknown_layer_is_rejected() {
    let t = tech();
    let mut c = Cell::new("X");
    c.add_rect("M1", Rect::new(0, 0, 40, 40));
    let text = single(c).to_json().replace("\"M1\"", "\"METAL99\"");
    match Library::from_json_str(&text, &t) {
        Err(LayoutError::UnknownLayer { layer, .. }) => assert_eq!(layer, "METAL99"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn cycles_and_off_grid_are_rejected() {
    let t = tech();
    let mut a = Cell::new("A");
    a.instances.push(Instance::new("b0", "B", 0, 0));
    let mut b = Cell::new("B");
    b.instances.push(Instance::new("a0", "A", 0, 0));
    let mut lib = Library::new();
    lib.insert(a).unwrap();
    lib.insert(b).unwrap();
    assert!(matches!(Library::from_json_str(&lib.to_json(), &t), Err(LayoutError::Cycle(_))));

    let mut c = Cell::new("G");
    c.add_rect("M1", Rect::new(0, 0, 40, 40));
    let text = single(c).to_json().replacen("40", "40.5", 1);
    match Library::from_json_str(&text, &t) {
        Err(LayoutError::OffGrid { remainder, .. }) => assert_eq!(remainder, 0.5),
        other => panic!("{other:?}"),
    }
}

#[test]
fn tiled_inverters_have_four_times_the_area() {
    let t = tech();
    let one = load_flat("inv.json", &t);
    let four = load_flat("inv2x2.json", &t);
    for (layer, s) in &one.layers {
        let tiled = four.layer(layer).expect("layer present");
        assert!(tiled.polygons.len() <= 4 * s.polygons.len(), "{layer}");
        // cut shapes are drawn once per tile; shared boundary dummies merge
        if !layer.starts_with("GATE") && layer != "M1A" && layer != "NWELL" {
            assert_eq!(tiled.area(), 4 * s.area(), "{layer}");
        }
    }
}

#[test]
fn instance_free_flatten_is_identity() {
    let mut c = Cell::new("C");
    c.add_rect("M1", Rect::new(0, 0, 40, 200));
    c.add_rect("AIL2", Rect::new(100, 0, 130, 90));
    let flat = flatten(&single(c.clone()), "C").unwrap();
    for (l, s) in &c.shapes {
        assert_eq!(flat.layer(l).unwrap().polygons, s.polygons);
    }
}

#[test]
fn translated_instance_shifts_everything() {
    let inner = cells::inv_cell("INV", true);
    let mut top = Cell::new("TOP");
    top.instances.push(Instance::new("i0", "INV", 1000, 0));
    let mut lib = Library::new();
    lib.top = Some("TOP".into());
    lib.insert(inner).unwrap();
    lib.insert(top).unwrap();
    let moved = flatten(&lib, "TOP").unwrap();
    let base = flatten(&cells::inv_lib(), "INV").unwrap();
    assert_eq!(moved.layers, base.translate(1000, 0).layers);
}

#[test]
fn svg_output() {
    let t = tech();
    let flat = load_flat("inv.json", &t);
    let svg = render_svg(&flat, &[], &t);
    assert_eq!(svg.matches("<g id=\"layer-").count(), flat.layers.values().filter(|s| !s.is_empty()).count());
    assert_eq!(svg, render_svg(&flat, &[], &t));
    let v = Violation {
        rule_id: "M1.S.1".into(),
        layers: vec!["M1A".into()],
        location: Rect::new(10, 20, 30, 40),
        measured: 20,
        required: 28,
        message: "spacing".into(),
    };
    let marked = render_svg(&flat, &[v], &t);
    assert_eq!(marked.matches("M1.S.1").count(), 1, "{marked}");
}

#[test]
fn density_bookkeeping() {
    let t = tech();
    let inv = load_flat("inv.json", &t);
    let rep = density_report(&inv, None);
    assert!(rep.bbox_area_nm2 > 0);
    assert_eq!(rep.total_layer_area_nm2, rep.layer_area_nm2.values().sum::<i64>());
    for (l, a) in &rep.layer_area_nm2 {
        assert_eq!(*a, inv.layer(l).unwrap().area() as i64);
    }
    assert!(rep.area_ratio.is_none());
    assert_eq!(density_report(&inv, Some(&inv)).area_ratio, Some(1.0));
    let big = load_flat("inv45.json", &t);
    let ratio = density_report(&inv, Some(&big)).area_ratio.unwrap();
    assert!(ratio > 0.0 && ratio < 1.0, "{ratio}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn flatten_commutes_with_translation(dx in -10_000i64..10_000, dy in -10_000i64..10_000) {
        let lib = cells::nand4_tiled_lib();
        let top = lib.top_cell().unwrap().to_string();
        let mut moved = lib.clone();
        let c = moved.cell(&top).unwrap().translate(dx, dy);
        let mut rebuilt = Library::new();
        rebuilt.top = Some(top.clone());
        for other in lib.cells().filter(|c| c.name != top) {
            rebuilt.insert(other.clone()).unwrap();
        }
        rebuilt.insert(c).unwrap();
        moved = rebuilt;
        let a = flatten(&moved, &top).unwrap();
        let b = flatten(&lib, &top).unwrap().translate(dx, dy);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn json_round_trip(pick in 0usize..10) {
        let t = tech();
        let (_, lib) = cells::fixtures().swap_remove(pick);
        let again = Library::from_json_str(&lib.to_json(), &t).unwrap();
        let top = lib.top_cell().unwrap().to_string();
        prop_assert_eq!(flatten(&again, &top).unwrap(), flatten(&lib, &top).unwrap());
    }
}
