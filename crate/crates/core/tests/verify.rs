use fbconvex::report::Status;
use fbconvex::verify::*;

fn tiny_lab() -> LabSpec {
    LabSpec {
        matrix_trials: 80,
        inf_convolution_trials: 40,
        ..Default::default()
    }
}

#[test]
fn main_suite_passes_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = SuiteSpec::builtin("main").unwrap();
    spec.out_dir = Some(dir.path().to_path_buf());
    let report = run_suite(&spec).unwrap();
    assert!(report.pass, "{}", serde_json::to_string_pretty(&report).unwrap());
    let paths = report.flatten();
    for leaf in ["/convexity", "/level_set_convexity", "/uniqueness", "/radial_oracle"] {
        assert!(paths.iter().any(|(p, s)| p.ends_with(leaf) && *s == Status::Pass), "{leaf}");
    }
    assert!(std::fs::read_dir(dir.path().join("main_theorem")).unwrap().count() > 0);
}

#[test]
fn zero_tolerance_fails_the_named_check() {
    let mut spec = SuiteSpec::builtin("main").unwrap();
    spec.tolerances.set("convexity_deficit", 0.0).unwrap();
    let report = run_suite(&spec).unwrap();
    assert!(!report.pass);
    let failed: Vec<String> = report
        .flatten()
        .into_iter()
        .filter(|(_, s)| *s == Status::Fail)
        .map(|(p, _)| p)
        .collect();
    assert!(failed.iter().any(|p| p.ends_with("/convexity")), "{failed:?}");
    assert!(!failed.iter().any(|p| p.ends_with("/uniqueness")), "{failed:?}");
}

#[test]
fn tolerance_overrides_are_checked() {
    let mut t = Tolerances::default();
    t.set("hausdorff_cells", 3.0).unwrap();
    assert_eq!(t.hausdorff_cells, 3.0);
    assert!(t.set("hausdorff_cell", 3.0).is_err());
    assert!(t.set("fb_residual", -1.0).is_err());
    assert!(t.set("fb_residual", f64::NAN).is_err());
}

#[test]
fn lab_is_seeded() {
    let tol = Tolerances::default();
    let a = serde_json::to_string(&verify_lab(&tiny_lab(), &tol, 11)).unwrap();
    let b = serde_json::to_string(&verify_lab(&tiny_lab(), &tol, 11)).unwrap();
    assert_eq!(a, b);
    let report = verify_lab(&tiny_lab(), &tol, 12);
    assert!(report.pass, "{}", serde_json::to_string_pretty(&report).unwrap());
}

#[test]
fn suite_file_runs_only_its_sections() {
    let spec = SuiteSpec::from_toml_str("name = \"small\"\nseed = 5\n[lab]\nmatrix_trials = 50\ninf_convolution_trials = 30\n").unwrap();
    let report = run_suite(&spec).unwrap();
    assert_eq!(report.check, "suite:small");
    let ran: Vec<&str> = report.children.iter().filter(|c| !c.is_skipped()).map(|c| c.check.as_str()).collect();
    assert_eq!(ran, ["lab"]);
    assert!(report.pass);
}

#[test]
fn suite_validation_rejects_bad_inputs() {
    let mut spec = SuiteSpec::builtin("inclusion").unwrap();
    spec.inclusion.as_mut().unwrap().p = 1.0;
    assert!(run_suite(&spec).is_err());
    let mut spec = SuiteSpec::builtin("lab").unwrap();
    spec.lab.as_mut().unwrap().max_dim = 0;
    assert!(spec.validate().is_err());
    assert!(SuiteSpec::from_toml_str("name = \"x\"\n[lemmas]\nn = \"big\"\n").is_err());
}
