use finverify::techdb::{self, ConnMode, LayerClass, TechDb, TechError};
use proptest::prelude::*;
use serde_json::Value;

fn builtin_value() -> Value {
    serde_json::from_str(TechDb::builtin_json()).unwrap()
}

fn load_value(v: &Value) -> Result<TechDb, TechError> {
    TechDb::from_json_str(&serde_json::to_string_pretty(v).unwrap())
}

#[test]
fn shipped_stack_has_thirteen_metals_and_feol_layers() {
    let t = TechDb::builtin();
    let levels = t.metal_levels();
    assert_eq!(levels.keys().copied().collect::<Vec<_>>(), (1..=13).collect::<Vec<_>>());
    for name in ["GATEA", "GATEB", "GATEC", "ACT", "AIL1", "AIL2", "GIL"] {
        assert!(t.layer(name).is_some(), "{name}");
    }
    assert_eq!(t.class("GATEC"), Some(LayerClass::GateCut));
}

#[test]
fn load_from_disk_matches_builtin() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.json");
    std::fs::write(&p, TechDb::builtin_json()).unwrap();
    let t = techdb::load_tech(&p).unwrap();
    assert_eq!(t.rules().len(), TechDb::builtin().rules().len());
    assert!(matches!(techdb::load_tech(dir.path().join("nope.json")), Err(TechError::Io { .. })));
}

#[test]
fn duplicate_rule_id_is_named() {
    let mut v = builtin_value();
    let rules = v["rules"].as_array_mut().unwrap();
    let dup = rules[3].clone();
    rules.push(dup.clone());
    let err = load_value(&v).unwrap_err();
    let id = dup["id"].as_str().unwrap();
    assert!(matches!(&err, TechError::DuplicateRule(d) if d == id));
    assert!(err.to_string().contains(id));
}

#[test]
fn missing_gate_cut_is_reported() {
    let mut v = builtin_value();
    v["layers"].as_array_mut().unwrap().retain(|l| l["class"] != "GATE_CUT");
    v["rules"].as_array_mut().unwrap().retain(|r| r["layers"][0] != "GATEC");
    let err = load_value(&v).unwrap_err();
    assert_eq!(err.to_string(), "missing GATE_CUT layer");
}

#[test]
fn dangling_reference_is_reported() {
    let mut v = builtin_value();
    v["rules"].as_array_mut().unwrap()[0]["layers"] = serde_json::json!(["NOPE"]);
    let err = load_value(&v).unwrap_err();
    assert!(matches!(err, TechError::UnknownLayer { ref layer, .. } if layer == "NOPE"), "{err}");
}

#[test]
fn parse_error_carries_position() {
    let text = "{\n  \"schema_version\": 1,\n  \"layers\": [ oops ]\n}";
    match TechDb::from_json_str(text).unwrap_err() {
        TechError::Parse { line, column, .. } => {
            assert_eq!(line, 3);
            assert!(column > 0);
        }
        e => panic!("unexpected {e}"),
    }
}

#[test]
fn unsupported_schema_rejected() {
    let mut v = builtin_value();
    v["schema_version"] = 2.into();
    assert!(matches!(load_value(&v), Err(TechError::Schema(2))));
}

#[test]
fn metal_heights_must_increase() {
    let mut v = builtin_value();
    for l in v["layers"].as_array_mut().unwrap() {
        if l["name"] == "MINT1" {
            l["electrical"]["height"] = 10.into();
        }
    }
    let err = load_value(&v).unwrap_err();
    assert!(err.to_string().contains("increase"), "{err}");
}

#[test]
fn via_in_overlap_entry_rejected() {
    let mut v = builtin_value();
    v["connectivity"].as_array_mut().unwrap().push(serde_json::json!({"a": "V1", "b": "M1", "mode": "OVERLAP"}));
    assert!(load_value(&v).is_err());
}

#[test]
fn broken_stack_connectivity_rejected() {
    let mut v = builtin_value();
    v["connectivity"].as_array_mut().unwrap().retain(|c| c["via"] != "VSMG2");
    let err = load_value(&v).unwrap_err();
    assert!(err.to_string().contains("VSMG2"), "{err}");
}

#[test]
fn colored_layer_must_match_base_level() {
    let mut v = builtin_value();
    for l in v["layers"].as_array_mut().unwrap() {
        if l["name"] == "M1A" {
            l["level"] = 4.into();
        }
    }
    assert!(load_value(&v).is_err());
}

#[test]
fn fin_params_checked() {
    let mut v = builtin_value();
    v["fin_params"]["w_fin"] = v["fin_params"]["pitch_fin"].clone();
    assert!(load_value(&v).is_err());
    let mut v = builtin_value();
    v["fin_params"]["allowed_gate_lengths"] = serde_json::json!([]);
    assert!(load_value(&v).is_err());
}

#[test]
fn sheet_resistance_of_m1() {
    let t = TechDb::builtin();
    let e = t.electrical("M1A").unwrap();
    let want = e.resistivity.unwrap() / (e.thickness as f64 / 1000.0);
    assert!((t.sheet_resistance("M1A").unwrap() - want).abs() < 1e-12);
    // hand value for the shipped 0.04 ohm*um, 56 nm copper
    assert!((techdb::sheet_resistance(0.04, 0.056) - 0.714_285_714_285).abs() < 1e-9);
    assert_eq!(techdb::sheet_resistance(0.05, 0.05), 1.0);
    assert!(matches!(t.sheet_resistance("NWELL"), Err(TechError::NoElectrical(_))));
}

#[test]
fn families() {
    let t = TechDb::builtin();
    let f: Vec<_> = t.color_family("MINT3A").into_iter().collect();
    assert_eq!(f, ["MINT3", "MINT3A", "MINT3B"]);
    assert_eq!(t.color_family("MG1").len(), 1);
    let g = t.color_family("GATEA");
    assert!(g.contains("GATEA") && g.contains("GATEB") && g.len() == 3);
}

#[test]
fn each_via_joins_adjacent_levels() {
    let t = TechDb::builtin();
    for v in t.layers_of_class(LayerClass::Via) {
        let mut levels = std::collections::BTreeSet::new();
        for c in t.connectivity() {
            if matches!(&c.mode, ConnMode::ThroughVia { via } if *via == v.name) {
                levels.insert(t.layer(&c.a).unwrap().level);
                levels.insert(t.layer(&c.b).unwrap().level);
            }
        }
        assert_eq!(levels.into_iter().collect::<Vec<_>>(), vec![v.level, v.level + 1], "{}", v.name);
    }
}

#[test]
fn round_trips_through_json() {
    let t = TechDb::builtin();
    let again = TechDb::from_json_str(&t.to_json()).unwrap();
    assert_eq!(again.rules(), t.rules());
    assert_eq!(again.layers(), t.layers());
}

proptest! {
    #[test]
    fn color_family_is_an_equivalence(i in 0usize..64, j in 0usize..64) {
        let t = TechDb::builtin();
        let names: Vec<String> = t.layers().iter().map(|l| l.name.clone()).collect();
        let a = &names[i % names.len()];
        let b = &names[j % names.len()];
        let fa = t.color_family(a);
        prop_assert!(fa.contains(a));
        if fa.contains(b) {
            prop_assert_eq!(t.color_family(b), fa);
        } else {
            prop_assert!(t.color_family(b).is_disjoint(&fa));
        }
    }

    #[test]
    fn doubling_thickness_halves_sheet_resistance(rho in 0.001f64..1.0, t in 0.005f64..3.0) {
        let r1 = techdb::sheet_resistance(rho, t);
        let r2 = techdb::sheet_resistance(rho, 2.0 * t);
        prop_assert!((r2 - r1 / 2.0).abs() <= 1e-12 * r1);
    }
}
