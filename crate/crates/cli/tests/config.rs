use divpair_cli::config::{PointSpec, Task};
use divpair_cli::gallery;
use divpair_cli::ScenarioConfig;

fn schema(name: &str) -> serde_json::Value {
    let path = format!("{}/schema/{name}", env!("CARGO_MANIFEST_DIR"));
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn gallery_scenarios_parse_and_match_their_names() {
    for (name, src) in gallery::SCENARIOS {
        let cfg = ScenarioConfig::parse(src, name).unwrap_or_else(|e| panic!("{e}"));
        assert_eq!(&cfg.name, name);
        assert!(!cfg.description.is_empty());
        assert!(!cfg.tasks().is_empty());
    }
    assert!(gallery::source("example-4-1").is_some());
    assert!(gallery::source("cantor-dim").is_some());
    assert!(gallery::source("nope").is_none());
}

#[test]
fn gallery_scenarios_satisfy_the_schema() {
    let v = jsonschema::validator_for(&schema("config.schema.json")).unwrap();
    for (name, src) in gallery::SCENARIOS {
        let doc: serde_json::Value = serde_json::from_str(src).unwrap();
        let errors: Vec<String> = v.iter_errors(&doc).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{name}: {errors:?}");
    }
}

#[test]
fn canonical_form_round_trips_and_satisfies_the_schema() {
    let v = jsonschema::validator_for(&schema("config.schema.json")).unwrap();
    for (name, src) in gallery::SCENARIOS {
        let cfg = ScenarioConfig::parse(src, name).unwrap();
        let canonical = serde_json::to_string_pretty(&cfg).unwrap();
        let doc: serde_json::Value = serde_json::from_str(&canonical).unwrap();
        let errors: Vec<String> = v.iter_errors(&doc).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{name}: {errors:?}");
        assert_eq!(ScenarioConfig::parse(&canonical, name).unwrap(), cfg);
    }
}

#[test]
fn all_expands_in_canonical_order() {
    let cfg = ScenarioConfig::parse(gallery::source("half-disc").unwrap(), "half-disc").unwrap();
    assert_eq!(
        cfg.tasks(),
        vec![
            Task::Traces,
            Task::Pairing,
            Task::GaussGreen,
            Task::Coarea,
            Task::Tangent
        ]
    );
    let src = r#"{"name": "t", "task": ["coarea", "traces", "coarea"],
        "scene": {"field": {}, "u": {"kind": "characteristic", "set": {"disc": {"center": [0, 0], "radius": 1}}},
                  "domain": {"disc": {"center": [0, 0], "radius": 2}}}}"#;
    assert_eq!(
        ScenarioConfig::parse(src, "t").unwrap().tasks(),
        vec![Task::Traces, Task::Coarea]
    );
}

#[test]
fn defaults_fill_missing_sections() {
    let src = r#"{"name": "t", "task": "cantor", "cantor": {"lambdas": [0.5]}}"#;
    let cfg = ScenarioConfig::parse(src, "t").unwrap();
    assert_eq!(
        cfg.traces.points,
        PointSpec::JumpSamples { jump_samples: 8 }
    );
    assert_eq!(cfg.cantor.as_ref().unwrap().depth, 14);
    assert!(cfg.output.tables && cfg.deterministic);
    assert_eq!(cfg.tolerances.halfball, 1e-4);
    assert_eq!(cfg.tolerances.scaled(10.0).cylinder, 1e-2);
}

fn error_of(src: &str) -> divpair_cli::ConfigError {
    ScenarioConfig::parse(src, "cfg.json").unwrap_err()
}

#[test]
fn syntax_errors_point_at_the_offending_line() {
    let e = error_of("{\n  \"name\": \"t\",\n  \"task\": \"cantor\"\n  \"cantor\": {}\n}");
    assert_eq!(e.line, 4);
    assert!(e.to_string().starts_with("cfg.json:4:"), "{e}");
}

#[test]
fn unknown_keys_are_rejected_on_their_line() {
    let e = error_of("{\n  \"name\": \"t\",\n  \"task\": \"cantor\",\n  \"cantor\": {\"lambdas\": [0.5]},\n  \"tolerances\": {\n    \"halfbal\": 1e-4\n  }\n}");
    assert_eq!(e.line, 6, "{e}");
    assert!(e.message.contains("halfbal"));
}

#[test]
fn validation_errors_point_at_the_offending_key() {
    let e = error_of("{\n  \"name\": \"t\",\n  \"task\": \"cantor\",\n  \"cantor\": {\n    \"lambdas\": [0.5, 1.0]\n  }\n}");
    assert_eq!((e.line, e.column), (5, 5), "{e}");
    let e = error_of("{\n  \"name\": \"t\",\n  \"task\": \"cantor\",\n  \"cantor\": {\"lambdas\": [0.5]},\n  \"tolerances\": {\n    \"dimension\": -1\n  }\n}");
    assert_eq!(e.line, 6, "{e}");
    let e = error_of("{\n  \"name\": \"t\",\n  \"task\": \"traces\"\n}");
    assert_eq!(e.line, 3, "{e}");
    assert!(e.message.contains("scene"));
}

#[test]
fn invalid_schedules_are_config_errors() {
    let src = "{\n  \"name\": \"t\",\n  \"task\": \"cantor\",\n  \"cantor\": {\"lambdas\": [0.5]},\n  \"schedules\": {\n    \"halfball\": {\"r0\": 0.1, \"ratio\": 1.5, \"count\": 6}\n  }\n}";
    let e = error_of(src);
    assert_eq!(e.line, 6, "{e}");
}

#[test]
fn invalid_scene_objects_are_config_errors() {
    let src = "{\n  \"name\": \"t\",\n  \"task\": \"traces\",\n  \"scene\": {\n    \"field\": {},\n    \"u\": {\"kind\": \"characteristic\", \"set\": {\"disc\": {\"center\": [0, 0], \"radius\": -1}}}\n  }\n}";
    // constructor checks run once the enclosing object is complete
    let e = error_of(src);
    assert_eq!(e.line, 7, "{e}");
    assert!(e.message.contains("radius"));
}
