use divpair_cli::Report;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn divpair(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_divpair"))
        .args(args)
        .env_remove("DIVPAIR_OUT")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn run_scenario(name: &str, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", "--scenario", name, "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    divpair(&args)
}

fn read_report(path: &Path) -> Report {
    Report::from_json(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn example_scenario_passes_with_expected_densities() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_scenario("example-4-1", dir.path(), &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = read_report(&dir.path().join("example-4-1/report.json"));
    assert!(report.passed);
    let traces = report.record(divpair_cli::Task::Traces).unwrap();
    let points = traces.data["points"].as_array().unwrap();
    assert_eq!(points.len(), 8);
    for p in points {
        let x = p["x"].as_array().unwrap();
        // a = e₂, interior normal -x
        let half_a_nu = -0.5 * x[1].as_f64().unwrap();
        assert!((p["halfball"]["theta"].as_f64().unwrap() - half_a_nu).abs() <= 1e-4);
        assert!(p["cylinder"]["value"].as_f64().unwrap().abs() <= 1e-3);
    }
    assert!(dir
        .path()
        .join("example-4-1/tables/traces.p0.halfball_plus.csv")
        .exists());
}

#[test]
fn cantor_dimension_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_scenario("cantor-dim", dir.path(), &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = read_report(&dir.path().join("cantor-dim/report.json"));
    let c = &report.record(divpair_cli::Task::Cantor).unwrap().data["constructions"];
    let half = c
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["lambda"] == 0.5)
        .unwrap();
    assert!((half["dimension"]["estimate"].as_f64().unwrap() - 0.5).abs() <= 0.05);
}

#[test]
fn every_gallery_scenario_passes() {
    let dir = tempfile::tempdir().unwrap();
    for name in divpair_cli::gallery::names() {
        let o = run_scenario(name, dir.path(), &[]);
        assert_eq!(code(&o), 0, "{name}: {}", stderr(&o));
    }
}

#[test]
fn reports_are_byte_identical_across_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for name in ["half-disc", "cantor-dim"] {
        assert_eq!(code(&run_scenario(name, a.path(), &["--jobs", "1"])), 0);
        assert_eq!(code(&run_scenario(name, b.path(), &["--jobs", "4"])), 0);
        let ra = fs::read(a.path().join(name).join("report.json")).unwrap();
        let rb = fs::read(b.path().join(name).join("report.json")).unwrap();
        assert!(ra == rb, "{name} differs");
        for entry in fs::read_dir(a.path().join(name).join("tables")).unwrap() {
            let p = entry.unwrap().path();
            let q = b
                .path()
                .join(name)
                .join("tables")
                .join(p.file_name().unwrap());
            assert_eq!(fs::read(&p).unwrap(), fs::read(q).unwrap());
        }
    }
}

#[test]
fn tight_tolerances_fail_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_scenario("example-4-1", dir.path(), &["--tolerance-scale", "1e-9"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("FAIL example-4-1"));
    let report = read_report(&dir.path().join("example-4-1/report.json"));
    assert!(!report.passed && !report.failures.is_empty());
    assert_eq!(report.metadata.tolerance_scale, 1e-9);
}

#[test]
fn config_errors_exit_two_with_a_line_anchor() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, "{\n  \"name\": \"bad\",\n  \"task\": \"cantor\",\n  \"cantor\": {\n    \"lambdas\": [2.0]\n  }\n}\n").unwrap();
    let o = divpair(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);
    assert!(
        stderr(&o).starts_with(&format!("{}:5:", cfg.display())),
        "{}",
        stderr(&o)
    );

    let o = divpair(&["run", "--scenario", "no-such-scenario"]);
    assert_eq!(code(&o), 2);
    let o = divpair(&["run", "--scenario", "cantor-dim", "--tolerance-scale", "0"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn numerical_failures_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("flat.json");
    // u has no jump set, so there is nothing to sample traces on
    fs::write(
        &cfg,
        r#"{"name": "flat", "task": "traces",
            "scene": {"field": {}, "u": {"kind": "piecewise_poly", "pieces": []}}}"#,
    )
    .unwrap();
    let o = divpair(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    let report = read_report(&dir.path().join("flat/report.json"));
    assert_eq!(
        report.records[0].status,
        divpair_cli::report::TaskStatus::Error
    );
}

#[test]
fn output_directory_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_divpair"))
        .args(["run", "--scenario", "cantor-dim"])
        .env("DIVPAIR_OUT", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("cantor-dim/report.json").exists());
}

#[test]
fn config_files_run_like_bundled_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, divpair_cli::gallery::source("cantor-dim").unwrap()).unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(
        code(&divpair(&[
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            a.to_str().unwrap()
        ])),
        0
    );
    assert_eq!(code(&run_scenario("cantor-dim", &b, &[])), 0);
    assert_eq!(
        fs::read(a.join("cantor-dim/report.json")).unwrap(),
        fs::read(b.join("cantor-dim/report.json")).unwrap()
    );
}

#[test]
fn emit_plotdata_is_stable_and_rejects_unknown_tables() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run_scenario("example-4-1", dir.path(), &[])), 0);
    let report = dir.path().join("example-4-1/report.json");
    let r = report.to_str().unwrap();
    let first = divpair(&[
        "emit-plotdata",
        "--report",
        r,
        "--table",
        "traces.p3.halfball_plus",
    ]);
    let second = divpair(&[
        "emit-plotdata",
        "--report",
        r,
        "--table",
        "traces.p3.halfball_plus",
    ]);
    assert_eq!(code(&first), 0);
    assert_eq!(first.stdout, second.stdout);
    let csv = String::from_utf8(first.stdout).unwrap();
    assert!(csv.starts_with("radius,value,fit\n"));
    assert_eq!(
        csv.lines().count(),
        1 + divpair::traces::RadiusSchedule::default().count
    );
    assert_eq!(
        csv,
        fs::read_to_string(
            dir.path()
                .join("example-4-1/tables/traces.p3.halfball_plus.csv")
        )
        .unwrap()
    );

    let file = dir.path().join("gaps.csv");
    let o = divpair(&[
        "emit-plotdata",
        "--report",
        r,
        "--table",
        "tangent.gaps",
        "--out",
        file.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert!(fs::read_to_string(file)
        .unwrap()
        .starts_with("radius,gap,gap_mass\n"));

    let o = divpair(&["emit-plotdata", "--report", r, "--table", "no.such.table"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("unknown table `no.such.table`"));
}

#[test]
fn reports_satisfy_the_schema() {
    let schema: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/schema/report.schema.json"
        ))
        .unwrap(),
    )
    .unwrap();
    let v = jsonschema::validator_for(&schema).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for name in ["example-4-1", "cantor-field", "square-polynomial"] {
        assert_eq!(code(&run_scenario(name, dir.path(), &[])), 0);
        let doc: serde_json::Value = serde_json::from_str(
            &fs::read_to_string(dir.path().join(name).join("report.json")).unwrap(),
        )
        .unwrap();
        let errors: Vec<String> = v.iter_errors(&doc).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{name}: {errors:?}");
    }
}

#[test]
fn list_scenarios_names_the_gallery() {
    let o = divpair(&["list-scenarios"]);
    assert_eq!(code(&o), 0);
    let out = String::from_utf8(o.stdout).unwrap();
    for name in divpair_cli::gallery::names() {
        assert!(out.lines().any(|l| l.starts_with(name)), "{name}");
    }
}
