use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, json).unwrap();
    p
}

fn mems(config: &Path, out: &Path, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mems-fbp"))
        .arg(config)
        .arg("--out")
        .arg(out)
        .arg("--quiet")
        .args(extra)
        .output()
        .unwrap()
}

fn stderr_line(o: &Output) -> String {
    let s = String::from_utf8(o.stderr.clone()).unwrap();
    assert_eq!(s.lines().count(), 1, "expected one diagnostic line, got {s:?}");
    s.trim_end().to_owned()
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn evolve_writes_trajectory_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"kind":"evolve","eps":0.1,"lambda":0.2,"n_x":16,"n_eta":8,"dt":0.01,"max_time":0.1,
            "initial":{"type":"parabola","depth":0.1},"record_energy":true}"#,
    );
    let out = dir.path().join("out");
    let o = mems(&cfg, &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header[0], "time");
    assert_eq!(header.len(), 18);
    assert_eq!(lines.count(), 11);
    let meta = json(out.join("run.json"));
    assert_eq!(meta["outcome"], "max_time_reached");
    assert_eq!(meta["steps"], 10);
    assert!(out.join("energy.csv").is_file());
}

#[test]
fn touchdown_is_recorded_and_can_be_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#""kind":"evolve","eps":0.1,"lambda":10,"n_x":16,"n_eta":8,"dt":0.002"#;
    let cfg = write_config(dir.path(), "a.json", &format!("{{{body}}}"));
    let out = dir.path().join("a");
    let o = mems(&cfg, &out, &[]);
    assert!(o.status.success());
    let meta = json(out.join("run.json"));
    assert_eq!(meta["outcome"], "touchdown");
    assert!(meta["touchdown_time"].as_f64().unwrap() > 0.0);

    let cfg = write_config(dir.path(), "b.json", &format!("{{{body},\"require_survival\":true}}"));
    let o = mems(&cfg, &dir.path().join("b"), &[]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr_line(&o).starts_with("error[touchdown:evolution]"));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for (name, text, needle) in [
        ("kind.json", r#"{"kind":"frobnicate"}"#, "kind"),
        ("eps.json", r#"{"kind":"evolve","lambda":0.1,"eps":-1}"#, "eps"),
        (
            "unknown.json",
            r#"{"kind":"evolve","lambda":0.1,"eps":0.1,"bogus":1}"#,
            "bogus",
        ),
        ("syntax.json", "{\n  \"kind\": \"evolve\",\n  oops\n}", ":3:"),
    ] {
        let cfg = write_config(dir.path(), name, text);
        let o = mems(&cfg, &dir.path().join("out"), &[]);
        assert_eq!(o.status.code(), Some(2), "{name}");
        let line = stderr_line(&o);
        assert!(line.starts_with("error[config]"), "{line}");
        assert!(line.contains(needle), "{line}");
    }
    let o = mems(&dir.path().join("missing.json"), &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_mems-fbp")).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr_line(&o).starts_with("error[usage]"));
}

#[test]
fn solver_failure_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "s.json",
        r#"{"kind":"steady","eps":0.1,"lambda":2.5,"n_x":16,"n_eta":8}"#,
    );
    let o = mems(&cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr_line(&o).starts_with("error[solver:steady]"));
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"kind":"continuation","eps_list":[0.1,1.0],"n_x":16,"n_eta":8,"lambda_max":0.2,"dlambda":0.1,"dump_profiles":true}"#,
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(mems(&cfg, &a, &["--threads", "2"]).status.success());
    assert!(mems(&cfg, &b, &["--threads", "1"]).status.success());
    for name in [
        "branch_eps_0.1.csv",
        "branch_eps_1.0.csv",
        "profiles_eps_0.1.csv",
        "continuation.json",
    ] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
    let csv = fs::read_to_string(a.join("branch_eps_0.1.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "lambda,min_gap,max_deflection,newton_iters"
    );
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn steady_from_custom_profile() {
    let dir = tempfile::tempdir().unwrap();
    let mut profile = String::from("x,u\n");
    for i in 0..=16 {
        let x = (2 * i) as f64 / 16.0 - 1.0;
        profile += &format!("{x:?},{:?}\n", -0.05 * (1.0 - x * x));
    }
    fs::write(dir.path().join("u0.csv"), profile).unwrap();
    let cfg = write_config(
        dir.path(),
        "s.json",
        r#"{"kind":"steady","eps":0.1,"lambda":0.1,"n_x":16,"n_eta":8,"initial":{"type":"custom_csv","path":"u0.csv"}}"#,
    );
    let out = dir.path().join("out");
    let o = mems(&cfg, &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let meta = json(out.join("steady.json"));
    assert!(meta["residual"].as_f64().unwrap() <= 1e-10);
    assert!(meta["min_physical_trace"].as_f64().unwrap() >= 1.0 - 1e-3);
}

#[test]
fn pullin_reports_bracket() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "p.json",
        r#"{"kind":"pullin","tol_lambda":1e-3,"n_pullin":400}"#,
    );
    let out = dir.path().join("out");
    assert!(mems(&cfg, &out, &[]).status.success());
    let meta = json(out.join("pullin.json"));
    let (lo, hi, star) = (
        meta["lower"].as_f64().unwrap(),
        meta["upper"].as_f64().unwrap(),
        meta["lambda_star"].as_f64().unwrap(),
    );
    assert!(lo < star && star < hi && hi - lo <= 1e-3);
    assert!(meta["difference"].as_f64().unwrap() < 2e-3);
}

#[test]
fn limit_study_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "l.json",
        r#"{"kind":"limit-study","lambda":0.5,"eps_list":[0.2,0.1],"tau":0.2,"dt":0.01,"n_x":16,"n_eta":8}"#,
    );
    let out = dir.path().join("out");
    assert!(mems(&cfg, &out, &["--threads", "2"]).status.success());
    let csv = fs::read_to_string(out.join("limit_study.csv")).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    assert_eq!(&header[..2], &["eps", "sup_error"]);
    assert_eq!(header.len(), 6);
    let meta = json(out.join("limit_study.json"));
    assert_eq!(meta["complete"], true);
    assert_eq!(meta["sup_errors_decreasing"], true);
}

#[test]
fn validate_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "v.json", r#"{"kind":"validate","seed":7}"#);
    let out = dir.path().join("out");
    let o = mems(&cfg, &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let meta = json(out.join("validate.json"));
    assert_eq!(meta["failed"], 0);
    let csv = fs::read_to_string(out.join("validate.csv")).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.split(',').nth(1) == Some("true")));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut n = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        mems_fbp::parse_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        n += 1;
    }
    assert!(n >= 6);
}
