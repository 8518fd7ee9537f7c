use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn finverify(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_finverify"))
        .args(args)
        .env_remove("FINVERIFY_TECH")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn clean_inverter_passes_drc() {
    let dir = tempfile::tempdir().unwrap();
    let rep = dir.path().join("drc.json");
    let svg = dir.path().join("inv.svg");
    let o = finverify(&["drc", "--layout", s(&fixture("inv.json")), "--report", s(&rep), "--svg", s(&svg)]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert_eq!(read_json(&rep)["violations"].as_array().unwrap().len(), 0);
    assert!(std::fs::read_to_string(&svg).unwrap().contains("<svg "));
}

#[test]
fn every_mutation_fails_drc_with_its_rule() {
    let expected: std::collections::BTreeMap<String, String> =
        serde_json::from_str(&std::fs::read_to_string(fixture("mutations/expected.json")).unwrap()).unwrap();
    for (name, rule) in expected {
        let o = finverify(&["drc", "--layout", s(&fixture(&format!("mutations/{name}.json")))]);
        assert_eq!(code(&o), 1, "{name}");
        assert!(stdout(&o).contains(&rule), "{name}: {}", stdout(&o));
    }
}

#[test]
fn lvs_verdicts() {
    let o = finverify(&["lvs", "--layout", s(&fixture("inv.json")), "--schematic", s(&fixture("inv.sp"))]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("MATCH"));

    let o = finverify(&["lvs", "--layout", s(&fixture("inv.json")), "--schematic", s(&fixture("nand4.sp"))]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("MISMATCH"));
}

#[test]
fn shorted_labels_are_reported_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let mut lib = read_json(&fixture("inv.json"));
    let cells = lib["cells"].as_array_mut().unwrap();
    let pins = cells.iter_mut().find(|c| c["name"] == "INV").unwrap()["pins"].as_array_mut().unwrap();
    let a = pins.iter().find(|p| p["net"] == "A").unwrap().clone();
    let mut zn = a.clone();
    zn["net"] = "ZN".into();
    pins.push(zn);
    let path = dir.path().join("short.json");
    std::fs::write(&path, serde_json::to_string(&lib).unwrap()).unwrap();

    let o = finverify(&["lvs", "--layout", s(&path), "--schematic", s(&fixture("inv.sp"))]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("short between pin labels A, ZN"), "{}", stdout(&o));
    let o = finverify(&["extract", "--layout", s(&path)]);
    assert_eq!(code(&o), 1);
}

#[test]
fn extract_writes_a_readable_netlist() {
    let dir = tempfile::tempdir().unwrap();
    let sp = dir.path().join("inv.sp");
    let rep = dir.path().join("inv.json");
    let o = finverify(&["extract", "--layout", s(&fixture("inv.json")), "--netlist", s(&sp), "--report", s(&rep)]);
    assert_eq!(code(&o), 0);
    let back = finverify::netex::read_netlist(&sp).unwrap();
    assert_eq!(back.devices.len(), 2);
    let j = read_json(&rep);
    assert_eq!(j["devices"].as_array().unwrap().len(), 2);
    assert!(j["devices"].as_array().unwrap().iter().all(|d| d["ad_nm2"].as_i64().unwrap() > 0));
}

#[test]
fn plate_and_full_models_diverge_on_a_small_plate() {
    let dir = tempfile::tempdir().unwrap();
    let total = |model: &str| {
        let rep = dir.path().join(format!("{}.json", model.replace('+', "_")));
        let o = finverify(&["pex", "--layout", s(&fixture("plate_1um.json")), "--model", model, "--report", s(&rep)]);
        assert_eq!(code(&o), 0);
        read_json(&rep)["nets"]["P"]["C_ground_aF"].as_f64().unwrap()
    };
    let plate = total("plate");
    let full = total("sakurai+coupling");
    assert!((full - plate) / full > 0.5, "plate {plate} full {full}");
}

#[test]
fn delay_summary_is_ordered() {
    let dir = tempfile::tempdir().unwrap();
    let rep = dir.path().join("pex.json");
    let o = finverify(&["pex", "--layout", s(&fixture("inv_chain9.json")), "--path", "IN,OUT", "--report", s(&rep)]);
    assert_eq!(code(&o), 0);
    let d = &read_json(&rep)["delay"];
    let (n, g, x) = (d["none_s"].as_f64().unwrap(), d["device_s"].as_f64().unwrap(), d["extracted_s"].as_f64().unwrap());
    assert!(0.0 < n && n < g && g < x, "{d}");
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let run = |w: &str| {
        let rep = dir.path().join(format!("r{w}.json"));
        let sp = dir.path().join(format!("r{w}.sp"));
        let o = finverify(&[
            "report",
            "--layout",
            s(&fixture("nand4_tiled.json")),
            "--workers",
            w,
            "--report",
            s(&rep),
            "--netlist",
            s(&sp),
        ]);
        assert!(code(&o) <= 1);
        (std::fs::read(&rep).unwrap(), std::fs::read(&sp).unwrap())
    };
    let one = run("1");
    assert_eq!(one, run("4"));
    assert_eq!(one, run("0"));
}

#[test]
fn combined_report() {
    let dir = tempfile::tempdir().unwrap();
    let rep = dir.path().join("all.json");
    let o = finverify(&[
        "report",
        "--layout",
        s(&fixture("inv.json")),
        "--schematic",
        s(&fixture("inv.sp")),
        "--reference",
        s(&fixture("inv45.json")),
        "--report",
        s(&rep),
    ]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let j = read_json(&rep);
    for key in ["drc", "extract", "lvs", "pex", "density"] {
        assert!(j.get(key).is_some(), "missing {key}");
    }
    let ratio = j["density"]["area_ratio"].as_f64().unwrap();
    assert!(ratio > 0.0 && ratio < 1.0);
    let text = std::fs::read_to_string(&rep).unwrap();
    assert!(!text.contains(s(dir.path())) && !text.contains(env!("CARGO_MANIFEST_DIR")));
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(fixture("inv.json"), dir.path().join("inv.json")).unwrap();
    std::fs::copy(fixture("nand4.sp"), dir.path().join("wrong.sp")).unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "layout = \"inv.json\"\nschematic = \"wrong.sp\"\nreport = \"out.json\"\n").unwrap();

    let o = finverify(&["lvs", "--config", s(&cfg)]);
    assert_eq!(code(&o), 1);
    assert!(dir.path().join("out.json").exists());

    let o = finverify(&["lvs", "--config", s(&cfg), "--schematic", s(&fixture("inv.sp"))]);
    assert_eq!(code(&o), 0);

    std::fs::write(&cfg, "layuot = \"inv.json\"\n").unwrap();
    assert_eq!(code(&finverify(&["drc", "--config", s(&cfg)])), 2);
}

#[test]
fn usage_and_io_errors_exit_2() {
    assert_eq!(code(&finverify(&["frobnicate"])), 2);
    assert_eq!(code(&finverify(&["drc"])), 2);
    assert_eq!(code(&finverify(&["drc", "--layout", "/no/such/layout.json"])), 2);
    assert_eq!(code(&finverify(&["pex", "--layout", s(&fixture("inv.json")), "--model", "exact"])), 2);
    assert_eq!(code(&finverify(&["lvs", "--layout", s(&fixture("inv.json"))])), 2);
    let o = finverify(&["drc", "--layout", s(&fixture("inv.json")), "--report", "/no/such/dir/r.json"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn tech_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_finverify"))
        .args(["drc", "--layout", s(&fixture("inv.json"))])
        .env("FINVERIFY_TECH", "/no/such/tech.toml")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("tech"));
}
