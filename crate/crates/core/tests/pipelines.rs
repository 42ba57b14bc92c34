use mkv_core::catalog::{self, EntryOptions};
use mkv_core::sampling::{RunConfig, Sampling};
use mkv_core::spec::{Spec, SpecBuilder};
use mkv_core::MkvError;

fn cfg() -> RunConfig {
    RunConfig { sampling: Sampling { grid: 3, random: 4, ..Sampling::default() }, tol: None }
}

#[test]
fn whole_catalog_reproduces() {
    let r = catalog::reproduce("all", &EntryOptions::default(), &cfg()).unwrap();
    assert!(r.passed(), "{}", r.to_text());
}

#[test]
fn higher_dimensional_group_reproduces() {
    let opts = EntryOptions { n: Some(2), params: Vec::new() };
    let r = catalog::reproduce("group-H", &opts, &RunConfig { sampling: Sampling::grid_only(2), tol: None }).unwrap();
    assert!(r.passed(), "{}", r.to_text());
}

#[test]
fn specs_survive_json_round_trip() {
    for name in catalog::ENTRIES {
        let e = catalog::entry(name, &EntryOptions::default()).unwrap();
        let text = e.spec.to_json_string();
        let back = Spec::from_json_str(&text).unwrap();
        assert_eq!(back.to_json_string(), text, "{name}");
        let rebuilt = catalog::entry_for_spec(&back).unwrap();
        assert_eq!(rebuilt.frame.is_some(), e.frame.is_some(), "{name}");
    }
}

#[test]
fn structure_needs_odd_dimension() {
    let s = SpecBuilder::new("plane", &["x", "y"])
        .diagonal_metric(&["1", "1"])
        .unwrap()
        .structure(&["1", "0"], None, &[vec!["0", "0"], vec!["0", "0"]]);
    let err = s.map(|b| b.build()).and_then(|s| s.structure().cloned().map(|_| ())).unwrap_err();
    assert!(matches!(err, MkvError::EvenDimension { .. } | MkvError::Schema { .. }), "{err}");
}

#[test]
fn asymmetric_metric_names_the_entry() {
    let text = r#"{"name":"bad","dimension":2,"coordinates":["x","y"],"metric":[["1","x"],["0","1"]]}"#;
    let spec = Spec::from_json_str(text).unwrap();
    let points = cfg().sampling.points(&spec).unwrap();
    let err = spec.check_metric(&points).unwrap_err();
    assert!(err.is_input_error());
    assert!(err.to_string().contains("metric[0][1]"), "{err}");
}

#[test]
fn unknown_entry_is_reported() {
    let err = catalog::entry("nowhere", &EntryOptions::default()).unwrap_err();
    assert!(matches!(err, MkvError::UnknownEntry(_)), "{err}");
}
