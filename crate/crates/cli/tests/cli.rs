use std::path::Path;
use std::process::{Command, Output};

fn mkv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mkv")).args(args).env("MKV_THREADS", "2").output().expect("run mkv")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("json report")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.display().to_string()
}

#[test]
fn reproduce_flat_passes_with_factor_two() {
    let o = mkv(&["reproduce", "flat-r3", "--json", "--grid", "3"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let v = json(&o);
    assert_eq!(v["verdict"], "pass");
    assert_eq!(v["summary"]["f"], 2.0);
}

#[test]
fn json_output_is_deterministic() {
    let a = mkv(&["killing", "flat-r3", "--field", "V", "--json", "--grid", "3"]);
    let b = mkv(&["killing", "flat-r3", "--field", "V", "--json", "--grid", "3"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn asymmetric_metric_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "bad.json",
        r#"{"name":"bad","dimension":2,"coordinates":["x","y"],"metric":[["1","x"],["0","1"]]}"#,
    );
    let o = mkv(&["validate", &spec]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("metric[0][1]") || err.contains("metric[1][0]"), "{err}");
}

#[test]
fn unknown_inputs_exit_two() {
    assert_eq!(code(&mkv(&["killing", "flat-r3", "--field", "nope"])), 2);
    assert_eq!(code(&mkv(&["validate", "no-such-entry"])), 2);
    assert_eq!(code(&mkv(&["frobnicate"])), 2);
    assert_eq!(code(&mkv(&["deform", "olszak-halfspace", "--u", "1", "--c", "-1"])), 2);
}

#[test]
fn failed_assertion_exits_one() {
    // the factor of r = x is 2, not 3
    let o = mkv(&["line", "--r", "x", "--f", "3"]);
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn export_round_trip_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    assert_eq!(code(&mkv(&["export", "olszak-halfspace", a.to_str().unwrap()])), 0);
    assert_eq!(code(&mkv(&["export", "olszak-halfspace", b.to_str().unwrap()])), 0);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let spec = mkv_core::spec::Spec::load(&a).unwrap();
    spec.save(&b).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn exported_group_reimports_and_reproduces() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("h.json");
    assert_eq!(code(&mkv(&["export", "group-H", "--n", "2", p.to_str().unwrap()])), 0);
    let o = mkv(&["reproduce", p.to_str().unwrap(), "--grid", "2", "--json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(json(&o)["verdict"], "pass");
}

#[test]
fn reeb_of_exported_halfspace_is_not_killing() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("o.json");
    assert_eq!(code(&mkv(&["export", "olszak-halfspace", p.to_str().unwrap()])), 0);
    let o = mkv(&["killing", p.to_str().unwrap(), "--field", "xi", "--json", "--grid", "3"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["summary"]["classification"], "NONE");
}

#[test]
fn single_point_curvature_reports_tensors() {
    let o = mkv(&["curvature", "r-cross-s2", "--point", "t=0,theta=1,psi=0", "--json"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert!((v["summary"]["scalar_min"].as_f64().unwrap() - 2.0).abs() < 1e-9);
    assert!(v["summary"]["ricci"].is_array());
}

#[test]
fn deform_writes_a_loadable_spec() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("d.json");
    let o = mkv(&["deform", "olszak-halfspace", "--u", "2", "--c", "3", "--out", p.to_str().unwrap(), "--grid", "3"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let o = mkv(&["contact", p.to_str().unwrap(), "--grid", "3", "--json"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["summary"]["almost_cokahler"], true);
}
