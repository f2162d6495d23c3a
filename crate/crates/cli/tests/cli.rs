use std::path::Path;
use std::process::{Command, Output};

fn lab(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_mane-lab"));
    c.args(args).env_remove("MANE_LAB_WORKERS");
    for (k, v) in envs {
        c.env(k, v);
    }
    c.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn csv_files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    v.sort();
    v
}

const SMALL: &str = r#"{
  "schema_version": 1,
  "seed": 42,
  "pipeline": [
    {"module": "sft", "op": "girth", "params": {"instances": 20}},
    {"module": "ergopt", "op": "lock-suite", "params": {"instances": 8}},
    {"module": "shadowing", "op": "shadow-suite", "params": {"per_delta": 4, "length": 100}},
    {"module": "weakkam", "op": "critical", "params": {"n": 80}}
  ]
}"#;

#[test]
fn empty_pipeline_gives_empty_dir() {
    let t = tempfile::tempdir().unwrap();
    let cfg = write_config(t.path(), "c.json", r#"{"schema_version": 1, "pipeline": []}"#);
    let out = t.path().join("run");
    let o = lab(&["run", &cfg, "--out", out.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 0);
    assert_eq!(std::fs::read_dir(&out).unwrap().count(), 0);
    let r = lab(&["report", out.to_str().unwrap()], &[]);
    assert_eq!(code(&r), 0);
    assert!(String::from_utf8_lossy(&r.stderr).contains("warning"));
}

#[test]
fn csv_is_bit_identical_across_runs_and_workers() {
    let t = tempfile::tempdir().unwrap();
    let cfg = write_config(t.path(), "c.json", SMALL);
    let a = t.path().join("a");
    let b = t.path().join("b");
    assert_eq!(code(&lab(&["run", &cfg, "--out", a.to_str().unwrap()], &[])), 0);
    assert_eq!(code(&lab(&["run", &cfg, "--out", b.to_str().unwrap()], &[("MANE_LAB_WORKERS", "1")])), 0);
    let files = csv_files(&a);
    assert_eq!(files, csv_files(&b));
    assert!(files.len() >= 6);
    for f in &files {
        let x = std::fs::read(a.join(f)).unwrap();
        assert_eq!(x, std::fs::read(b.join(f)).unwrap(), "{f} differs");
        let text = String::from_utf8(x).unwrap();
        assert!(text.starts_with("module,op,"), "{f} lacks module and op columns");
    }
}

#[test]
fn floats_carry_seventeen_digits() {
    let t = tempfile::tempdir().unwrap();
    let out = t.path().join("r");
    let o = lab(&["weakkam", "critical", "--params", r#"{"n": 80}"#, "--out", out.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut r = csv::Reader::from_path(out.join("s00_weakkam_critical_critical.csv")).unwrap();
    let row = r.records().next().unwrap().unwrap();
    let c = &row[3];
    let mantissa = c.split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17, "{c}");
    assert!((c.parse::<f64>().unwrap() - 1.0).abs() < 0.02);
}

#[test]
fn config_errors_exit_two() {
    let t = tempfile::tempdir().unwrap();
    let cases = [
        r#"{"schema_version": 1, "pipeline": [{"module": "sft", "op": "girth", "params": {"instancez": 3}}]}"#,
        r#"{"schema_version": 1, "pipeline": [{"module": "sft", "op": "nope"}]}"#,
        r#"{"schema_version": 7}"#,
        r#"{"schema_version": 1, "bogus": 1}"#,
        r#"{"schema_version": 1, "system": {"kind": "cat_map"}, "pipeline": [{"module": "weakkam", "op": "critical"}]}"#,
    ];
    for (i, body) in cases.iter().enumerate() {
        let cfg = write_config(t.path(), &format!("c{i}.json"), body);
        let o = lab(&["run", &cfg, "--out", t.path().join(format!("r{i}")).to_str().unwrap()], &[]);
        assert_eq!(code(&o), 2, "case {i}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stderr).contains("config error"));
    }
    let o = lab(&["sft", "entropy", "--out", t.path().join("w").to_str().unwrap()], &[("MANE_LAB_WORKERS", "0")]);
    assert_eq!(code(&o), 2);
    let o = lab(&["run", t.path().join("missing.json").to_str().unwrap()], &[]);
    assert_eq!(code(&o), 2);
}

#[test]
fn field_level_message() {
    let t = tempfile::tempdir().unwrap();
    let cfg = write_config(
        t.path(),
        "c.json",
        r#"{"schema_version": 1, "pipeline": [{"module": "weakkam", "op": "sets", "params": {"n": "many"}}]}"#,
    );
    let o = lab(&["run", &cfg], &[]);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("pipeline[0].params.n"), "{err}");
}

#[test]
fn failing_stage_is_recorded_and_others_continue() {
    let t = tempfile::tempdir().unwrap();
    let cfg = write_config(
        t.path(),
        "c.json",
        r#"{"schema_version": 1, "pipeline": [
            {"module": "ergopt", "op": "search", "params": {"potential": "/nonexistent/f.json"}},
            {"module": "sft", "op": "entropy"}
        ]}"#,
    );
    let out = t.path().join("r");
    let o = lab(&["run", &cfg, "--out", out.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 3);
    let errors = std::fs::read_to_string(out.join("errors.csv")).unwrap();
    assert!(errors.contains("ergopt,search,error"), "{errors}");
    let criteria = std::fs::read_to_string(out.join("criteria.csv")).unwrap();
    assert!(criteria.contains("sft,entropy,2,golden mean entropy,true"));
}

#[test]
fn random_potential_round_trips_through_search() {
    let t = tempfile::tempdir().unwrap();
    let a = t.path().join("a");
    let o = lab(&["ergopt", "random", "--seed", "5", "--out", a.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 0);
    let pot = a.join("s00_ergopt_random_potential.json");
    assert!(pot.exists());
    let b = t.path().join("b");
    let params = format!(r#"{{"potential": {:?}, "eps": "1/10"}}"#, pot.to_str().unwrap());
    let o = lab(&["ergopt", "search", "--params", &params, "--out", b.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(b.join("s00_ergopt_search_search.json")).unwrap()).unwrap();
    assert_eq!(v["satisfied"], true);
    assert!(v["orbit"].as_array().unwrap().len() >= 1);
}

#[test]
fn report_plots_and_missing_artifacts() {
    let t = tempfile::tempdir().unwrap();
    let cfg = write_config(t.path(), "c.json", SMALL);
    let out = t.path().join("r");
    assert_eq!(code(&lab(&["run", &cfg, "--out", out.to_str().unwrap()], &[])), 0);
    let o = lab(&["report", out.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 0);
    let md = std::fs::read_to_string(out.join("report.md")).unwrap();
    assert!(md.contains("| 3 | shadowing | shadow-suite |"));
    assert!(md.contains("## Locking"));
    let svg = std::fs::read_to_string(out.join("plot_00.svg")).unwrap();
    assert!(svg.contains("slope = "));
    std::fs::remove_file(out.join("metrics.csv")).unwrap();
    let o = lab(&["report", out.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("metrics.csv"));
}

#[test]
fn failed_criterion_exits_three() {
    let t = tempfile::tempdir().unwrap();
    let o = lab(&["palga", "palga-sweep", "--out", t.path().join("r").to_str().unwrap()], &[]);
    assert_eq!(code(&o), 3);
}
