use pmc_core::harness::*;
use pmc_core::Error;

const SMALL: &str = r#"
name = "small"

[domain]
kind = "disk"
radius = 1.0

[curvature]
h = "0.3"

[boundary]
phi = "0.2*x1"

[solver]
resolution = 0.125
"#;

#[test]
fn presets_parse_and_round_trip() {
    let presets = builtin_scenarios();
    assert!(presets.len() >= 6);
    for p in &presets {
        let cfg = ScenarioConfig::from_toml(&p.toml).unwrap_or_else(|e| panic!("{}: {e}", p.name));
        assert_eq!(cfg.name, p.name);
        assert_eq!(ScenarioConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        cfg.build().unwrap();
    }
    assert!(find_scenario("no-such-preset").is_err());
}

#[test]
fn unknown_keys_are_rejected() {
    for (from, to) in [
        ("resolution = 0.125", "resolutoin = 0.125"),
        ("radius = 1.0", "radius = 1.0\nwidth = 2.0"),
        ("phi = \"0.2*x1\"", "phi = \"0.2*x1\"\nkind = \"x\""),
    ] {
        let text = SMALL.replace(from, to);
        assert!(matches!(ScenarioConfig::from_toml(&text), Err(Error::Config(_))), "{text}");
    }
    let top = format!("{SMALL}\nextra = 1\n");
    assert!(ScenarioConfig::from_toml(&top).is_err());
}

#[test]
fn schema_limits() {
    let three_d = SMALL.replace("[domain]", "[manifold]\ndim = 3\n\n[domain]");
    assert!(matches!(ScenarioConfig::from_toml(&three_d), Err(Error::Config(_))));
    let flipped = SMALL.replace("h = \"0.3\"", "h = \"0.3\"\nz_window = [1.0, -1.0]");
    assert!(ScenarioConfig::from_toml(&flipped).is_err());
    let wrong_model = SMALL.replace("kind = \"disk\"\nradius = 1.0", "kind = \"hyperbolic-geodesic-disk\"\nr = 1.0");
    let cfg = ScenarioConfig::from_toml(&wrong_model).unwrap();
    assert!(cfg.build().is_err());
}

#[test]
fn error_classes() {
    let bad_syntax = ScenarioConfig::from_toml(&SMALL.replace("0.2*x1", "0.2*")).unwrap();
    let e = run_pipeline(&bad_syntax, Stage::Check).err().unwrap();
    assert_eq!(classify_error(&e).exit_code(), 1);

    let falling = ScenarioConfig::from_toml(&SMALL.replace("\"0.3\"", "\"0.3 - 0.1*z\"")).unwrap();
    let e = run_pipeline(&falling, Stage::Check).err().unwrap();
    assert!(matches!(e, Error::NonMonotone { .. }));
    assert_eq!(classify_error(&e).exit_code(), 3);

    assert_eq!(classify_error(&Error::NonFinite { node: 0, what: "u".into() }).exit_code(), 2);
    assert_eq!(OutcomeClass::Ok.exit_code(), 0);
}

#[test]
fn small_run_is_deterministic() {
    let cfg = ScenarioConfig::from_toml(SMALL).unwrap();
    let a = run_pipeline(&cfg, Stage::Run).unwrap();
    let b = run_pipeline(&cfg, Stage::Run).unwrap();
    assert_eq!(a.report.to_json(), b.report.to_json());
    assert_eq!(a.report.outcome.exit_code, 0, "{:?}", a.report.outcome);
    let solve = a.report.solve.as_ref().unwrap();
    assert!(solve.report.converged);
    assert!(a.report.estimates.as_ref().unwrap().all_ok);
    let u = solve.uniqueness.as_ref().unwrap();
    assert!(u.max_distance.unwrap() <= 1e-8);
    assert!(a.report.barriers.as_ref().unwrap().height_residuals.pass);

    let v: serde_json::Value = serde_json::from_str(&a.report.to_json()).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["scenario"], "small");
}

#[test]
fn artifacts_are_written() {
    let cfg = ScenarioConfig::from_toml(SMALL).unwrap();
    let a = run_pipeline(&cfg, Stage::Run).unwrap();
    let dir = tempfile::tempdir().unwrap();
    a.write(dir.path()).unwrap();
    for f in ["report.json", "timings.json", "field.csv", "continuation.csv", "parallels.csv"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
}

#[test]
fn stages_only_do_their_work() {
    let cfg = ScenarioConfig::from_toml(SMALL).unwrap();
    let check = run_pipeline(&cfg, Stage::Check).unwrap().report;
    assert!(check.barriers.is_none() && check.solve.is_none() && check.parallels.is_none());
    let bar = run_pipeline(&cfg, Stage::Barriers).unwrap().report;
    assert!(bar.barriers.is_some() && bar.solve.is_none());
    let par = run_pipeline(&cfg, Stage::Parallels).unwrap().report;
    assert!(par.parallels.is_some() && par.solve.is_none());
    let solve = run_pipeline(&cfg, Stage::Solve).unwrap().report;
    assert!(solve.solve.is_some() && solve.estimates.is_none());
}
