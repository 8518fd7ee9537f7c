//! Hand-drawn standard cells and the seeded-error corpus. Shared by the
//! fixture generator (examples/gen_fixtures.rs) and the tests that check
//! the committed fixture files stay in sync with it.
#![allow(dead_code)]

use finverify::geometry::Rect;
use finverify::layout::{Cell, Instance, Library};

pub fn r(x0: i64, y0: i64, x1: i64, y1: i64) -> Rect {
    Rect::new(x0, y0, x1, y1)
}

/// Tagged shape so mutations can find and replace it.
#[derive(Clone)]
pub struct S {
    pub tag: &'static str,
    pub layer: &'static str,
    pub rect: Rect,
}

fn s(tag: &'static str, layer: &'static str, rect: Rect) -> S {
    S { tag, layer, rect }
}

pub const INV_W: i64 = 128;
pub const ROW_H: i64 = 400;

/// Inverter, 128 x 400 nm: 2-fin NFIN, 3-fin PFIN, one GATEA gate
/// between two GATEB dummies on the cell boundary, ends trimmed by GATEC.
pub fn inv_shapes(with_gates: bool) -> Vec<S> {
    let mut v = vec![
        s("nwell", "NWELL", r(0, 200, 128, 400)),
        s("act_n", "ACT", r(4, 60, 124, 108)),
        s("act_p", "ACT", r(4, 260, 124, 348)),
        s("ail1_sn", "AIL1", r(22, 56, 42, 112)),
        s("ail1_dn", "AIL1", r(86, 56, 106, 112)),
        s("ail1_sp", "AIL1", r(22, 256, 42, 352)),
        s("ail1_dp", "AIL1", r(86, 256, 106, 352)),
        s("ail2_vss", "AIL2", r(22, 4, 42, 100)),
        s("ail2_vdd", "AIL2", r(22, 270, 42, 388)),
        s("ail2_zn", "AIL2", r(86, 80, 106, 330)),
        s("gil_a", "GIL", r(28, 170, 80, 194)),
        s("v0_vss", "V0", r(25, 7, 39, 21)),
        s("v0_vdd", "V0", r(25, 370, 39, 384)),
        s("v0_zn", "V0", r(89, 177, 103, 191)),
        s("v0_a", "V0", r(30, 175, 44, 189)),
        s("m1_vss", "M1A", r(0, 0, 128, 28)),
        s("m1_vdd", "M1A", r(0, 364, 128, 400)),
        s("m1_zn", "M1A", r(76, 148, 110, 220)),
        s("m1_a", "M1A", r(20, 146, 48, 218)),
    ];
    if with_gates {
        v.extend([
            s("gate", "GATEA", r(56, 44, 72, 364)),
            s("dummy_l", "GATEB", r(-8, 44, 8, 364)),
            s("dummy_r", "GATEB", r(120, 44, 136, 364)),
            // trim the gate ends at the rails
            s("cut_s", "GATEC", r(-16, 36, 144, 56)),
            s("cut_n", "GATEC", r(-16, 356, 144, 376)),
        ]);
    }
    v
}

fn build(name: &str, shapes: &[S]) -> Cell {
    let mut c = Cell::new(name);
    for sh in shapes {
        c.add_rect(sh.layer, sh.rect);
    }
    c
}

fn inv_pins(c: &mut Cell) {
    c.add_pin("A", "M1A", 34, 182);
    c.add_pin("ZN", "M1A", 93, 184);
    c.add_pin("VDD", "M1A", 64, 386);
    c.add_pin("VSS", "M1A", 64, 14);
}

pub fn inv_cell(name: &str, with_gates: bool) -> Cell {
    let mut c = build(name, &inv_shapes(with_gates));
    inv_pins(&mut c);
    c
}

fn single(cell: Cell) -> Library {
    let mut lib = Library::new();
    lib.top = Some(cell.name.clone());
    lib.insert(cell).unwrap();
    lib
}

pub fn inv_lib() -> Library {
    single(inv_cell("INV", true))
}

/// ZN pad split across both M1 colors, stitched where they overlap.
pub fn inv_stitch_lib() -> Library {
    let shapes: Vec<S> = inv_shapes(true).into_iter().filter(|s| s.tag != "m1_zn").collect();
    let mut c = build("INV_STITCH", &shapes);
    c.add_rect("M1A", r(76, 120, 110, 190));
    c.add_rect("M1B", r(76, 180, 110, 250));
    c.add_pin("A", "M1A", 34, 182);
    c.add_pin("ZN", "M1A", 93, 150);
    c.add_pin("VDD", "M1A", 64, 386);
    c.add_pin("VSS", "M1A", 64, 14);
    single(c)
}

pub const NAND4_W: i64 = 384;

/// Four-input NAND: series NFIN stack, parallel PFINs, gates A-D.
pub fn nand4_cell(name: &str) -> Cell {
    let mut c = Cell::new(name);
    let gate_colors = ["GATEB", "GATEA", "GATEB", "GATEA", "GATEB", "GATEA", "GATEB"];
    for (k, layer) in gate_colors.iter().enumerate() {
        let x = 64 * k as i64;
        c.add_rect(layer, r(x - 8, 44, x + 8, 364));
    }
    c.add_rect("NWELL", r(0, 200, NAND4_W, 400));
    c.add_rect("ACT", r(4, 60, 316, 108));
    c.add_rect("ACT", r(4, 260, 316, 348));
    let diff = |k: i64| 32 + 64 * k;
    // NFIN stack ends
    c.add_rect("AIL1", r(diff(0) - 10, 56, diff(0) + 10, 112));
    c.add_rect("AIL1", r(diff(4) - 10, 56, diff(4) + 10, 112));
    for k in 0..5 {
        c.add_rect("AIL1", r(diff(k) - 10, 256, diff(k) + 10, 352));
    }
    // VSS
    c.add_rect("AIL2", r(22, 4, 42, 100));
    c.add_rect("V0", r(25, 7, 39, 21));
    c.add_rect("M1A", r(0, 0, NAND4_W, 28));
    // VDD on alternate PFIN diffusions
    c.add_rect("M1A", r(0, 364, NAND4_W, 400));
    for k in [0, 2, 4] {
        let x = diff(k);
        c.add_rect("AIL2", r(x - 10, 270, x + 10, 388));
        c.add_rect("V0", r(x - 7, 370, x + 7, 384));
    }
    // ZN: stack top plus the two remaining PFIN diffusions
    c.add_rect("AIL2", r(278, 80, 298, 240));
    c.add_rect("AIL2", r(86, 220, 298, 240));
    c.add_rect("AIL2", r(86, 220, 106, 330));
    c.add_rect("AIL2", r(214, 220, 234, 330));
    c.add_rect("V0", r(281, 224, 295, 238));
    c.add_rect("M1B", r(274, 210, 302, 282));
    // inputs
    for (i, name) in ["A", "B", "C", "D"].iter().enumerate() {
        let g = 64 * (i as i64 + 1);
        c.add_rect("GIL", r(g - 14, 140, g + 14, 164));
        c.add_rect("V0", r(g - 7, 145, g + 7, 159));
        c.add_rect("M1A", r(g - 14, 116, g + 14, 188));
        c.add_pin(name, "M1A", g, 152);
    }
    c.add_pin("ZN", "M1B", 288, 250);
    c.add_pin("VDD", "M1A", 192, 386);
    c.add_pin("VSS", "M1A", 192, 14);
    c
}

pub fn nand4_lib() -> Library {
    single(nand4_cell("NAND4"))
}

/// Mirrored copy of a row placed on top so the two rows share VDD.
fn upper_row(name: &str, cell: &str, dx: i64) -> Instance {
    Instance { mirror: true, ..Instance::new(name, cell, dx, 2 * ROW_H) }
}

/// Four inverters in two mirrored rows. Each column's gate is one long
/// bar through both rows; with `cut`, a GATEC shape splits every bar
/// between the rows.
pub fn inv2x2_lib(cut: bool) -> Library {
    let top = if cut { "INV2X2" } else { "INV2X2_NOCUT" };
    let mut lib = Library::new();
    lib.insert(inv_cell("INV_NG", false)).unwrap();
    let mut c = Cell::new(top);
    c.instances = vec![
        Instance::new("i0", "INV_NG", 0, 0),
        Instance::new("i1", "INV_NG", INV_W, 0),
        upper_row("i2", "INV_NG", 0),
        upper_row("i3", "INV_NG", INV_W),
    ];
    for x in [0, 128, 256] {
        c.add_rect("GATEB", r(x - 8, 44, x + 8, 756));
    }
    for x in [64, 192] {
        c.add_rect("GATEA", r(x - 8, 44, x + 8, 756));
    }
    if cut {
        c.add_rect("GATEC", r(-16, 384, 272, 416));
    }
    // tie the two VSS rails
    c.add_rect("MINT1A", r(50, 0, 78, 800));
    c.add_rect("V1", r(57, 7, 71, 21));
    c.add_rect("V1", r(57, 779, 71, 793));
    for (k, (dx, up)) in [(0, false), (INV_W, false), (0, true), (INV_W, true)].into_iter().enumerate() {
        let y = |v: i64| if up { 2 * ROW_H - v } else { v };
        c.add_pin(&format!("A{k}"), "M1A", dx + 34, y(182));
        c.add_pin(&format!("ZN{k}"), "M1A", dx + 93, y(184));
    }
    c.add_pin("VDD", "M1A", 64, 400);
    c.add_pin("VSS", "M1A", 64, 14);
    lib.top = Some(top.to_string());
    lib.insert(c).unwrap();
    lib
}

/// 2 x 2 NAND4 tiles, upper row mirrored.
pub fn nand4_tiled_lib() -> Library {
    let mut lib = Library::new();
    lib.insert(nand4_cell("NAND4")).unwrap();
    let mut c = Cell::new("NAND4_TILED");
    c.instances = vec![
        Instance::new("t0", "NAND4", 0, 0),
        Instance::new("t1", "NAND4", NAND4_W, 0),
        upper_row("t2", "NAND4", 0),
        upper_row("t3", "NAND4", NAND4_W),
    ];
    c.add_pin("VDD", "M1A", 192, 400);
    c.add_pin("VSS", "M1A", 192, 14);
    c.add_pin("VSS", "M1A", 192, 786);
    lib.top = Some(c.name.clone());
    lib.insert(c).unwrap();
    lib
}

/// `n` abutted inverters, each output strapped to the next input in M1.
pub fn inv_chain_lib(n: usize) -> Library {
    let mut lib = Library::new();
    lib.insert(inv_cell("INV", true)).unwrap();
    let name = format!("INV_CHAIN{n}");
    let mut c = Cell::new(&name);
    for k in 0..n as i64 {
        c.instances.push(Instance::new(format!("x{k}"), "INV", k * INV_W, 0));
        if k + 1 < n as i64 {
            c.add_rect("M1A", r(110 + k * INV_W, 170, 148 + k * INV_W, 198));
        }
    }
    c.add_pin("IN", "M1A", 34, 182);
    c.add_pin("OUT", "M1A", 93 + (n as i64 - 1) * INV_W, 184);
    c.add_pin("VDD", "M1A", 64, 386);
    c.add_pin("VSS", "M1A", 64, 14);
    lib.top = Some(name);
    lib.insert(c).unwrap();
    lib
}

/// Planar 45 nm-style inverter footprint, used only as a density reference.
pub fn inv45_lib() -> Library {
    let mut c = Cell::new("INV45");
    c.add_rect("NWELL", r(0, 500, 300, 1000));
    c.add_rect("ACT", r(40, 90, 260, 300));
    c.add_rect("ACT", r(40, 600, 260, 900));
    c.add_rect("GATEAB", r(125, 60, 175, 930));
    c.add_rect("AIL1", r(60, 120, 100, 270));
    c.add_rect("AIL1", r(200, 120, 240, 270));
    c.add_rect("AIL1", r(60, 630, 100, 870));
    c.add_rect("AIL1", r(200, 630, 240, 870));
    c.add_rect("M1", r(0, 0, 300, 60));
    c.add_rect("M1", r(0, 940, 300, 1000));
    c.add_rect("M1", r(200, 180, 250, 820));
    single(c)
}

/// Square plate on a semi-global metal, for the plate-vs-fringe comparison.
pub fn plate_lib(side: i64) -> Library {
    let mut c = Cell::new("PLATE");
    c.add_rect("MSMG1", r(0, 0, side, side));
    c.add_pin("P", "MSMG1", side / 2, side / 2);
    single(c)
}

/// One seeded design-rule error on the inverter.
pub struct Mutation {
    pub name: &'static str,
    pub rule_id: &'static str,
    pub lib: Library,
}

fn mutate(name: &'static str, rule_id: &'static str, edit: impl FnOnce(&mut Vec<S>)) -> Mutation {
    let mut shapes = inv_shapes(true);
    edit(&mut shapes);
    let mut c = build("INV", &shapes);
    inv_pins(&mut c);
    Mutation { name, rule_id, lib: single(c) }
}

fn set(shapes: &mut [S], tag: &str, rect: Rect) {
    shapes.iter_mut().find(|s| s.tag == tag).expect("tag").rect = rect;
}

pub fn mutations() -> Vec<Mutation> {
    vec![
        mutate("m1_width_26", "M1.W.1", |v| set(v, "m1_vss", r(0, 0, 128, 26))),
        mutate("m1_same_color_spacing", "M1.S.1", |v| v.push(s("x", "M1A", r(40, 48, 120, 76)))),
        mutate("m1_diff_color_spacing", "M1.S.2", |v| v.push(s("x", "M1B", r(40, 38, 120, 66)))),
        mutate("m1_min_area", "M1.A.1", |v| v.push(s("x", "M1A", r(40, 56, 68, 110)))),
        mutate("v0_enclosure", "V0.EN.1", |v| set(v, "m1_zn", r(76, 148, 106, 220))),
        mutate("v0_overlap", "V0.OV.1", |v| v.push(s("x", "V0", r(100, 370, 114, 384)))),
        mutate("act_width_60", "ACT.Q.1", |v| set(v, "act_n", r(4, 60, 124, 120))),
        mutate("gate_length_15", "GATE.L.1", |v| set(v, "gate", r(56, 44, 71, 364))),
        mutate("gate_jog", "GATE.R.1", |v| v.push(s("x", "GATEA", r(72, 354, 80, 364)))),
        mutate("act_jog", "ACT.R.1", |v| v.push(s("x", "ACT", r(12, 108, 40, 140)))),
        mutate("gate_same_color", "GATE.S.1", |v| {
            v.iter_mut().find(|s| s.tag == "dummy_l").unwrap().layer = "GATEA";
        }),
        mutate("ail2_width_18", "AIL2.W.1", |v| set(v, "ail2_vss", r(22, 4, 40, 100))),
    ]
}

/// Every committed fixture, by file name.
pub fn fixtures() -> Vec<(String, Library)> {
    let mut v = vec![
        ("inv.json".to_string(), inv_lib()),
        ("nand4.json".to_string(), nand4_lib()),
        ("inv2x2.json".to_string(), inv2x2_lib(true)),
        ("inv2x2_nocut.json".to_string(), inv2x2_lib(false)),
        ("nand4_tiled.json".to_string(), nand4_tiled_lib()),
        ("inv_stitch.json".to_string(), inv_stitch_lib()),
        ("inv_chain9.json".to_string(), inv_chain_lib(9)),
        ("inv45.json".to_string(), inv45_lib()),
        ("plate_1um.json".to_string(), plate_lib(1000)),
        ("plate_100um.json".to_string(), plate_lib(100_000)),
    ];
    for m in mutations() {
        v.push((format!("mutations/{}.json", m.name), m.lib));
    }
    v
}
