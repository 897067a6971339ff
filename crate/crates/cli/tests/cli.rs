use std::path::Path;
use std::process::{Command, Output};

fn undulate(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_undulate"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn list_names_every_builtin() {
    let dir = tempfile::tempdir().unwrap();
    let out = undulate(&["list"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    for name in ["fig3_school", "fig4_variants", "fig5_spring", "fig6_circle", "fig7_snake", "fig8_waypoints"] {
        assert!(text.contains(name), "{text}");
    }
}

#[test]
fn run_writes_requested_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = undulate(&["run", "fig5_spring", "--out", "a", "--csv"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(dir.path().join("a/fig5_spring.csv").exists());
    assert!(!dir.path().join("a/fig5_spring.svg").exists());

    let out = undulate(&["run", "fig5_spring", "--out", "b"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("b/fig5_spring.csv").exists());
    let svg = std::fs::read_to_string(dir.path().join("b/fig5_spring.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
}

#[test]
fn multi_variant_runs_write_one_table_per_variant() {
    let dir = tempfile::tempdir().unwrap();
    let out = undulate(&["run", "fig4_variants", "--out", ".", "--csv"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let tables = std::fs::read_dir(dir.path())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "csv"))
        .count();
    assert_eq!(tables, 4);
}

#[test]
fn unknown_scenario_exits_one_and_lists_names() {
    let dir = tempfile::tempdir().unwrap();
    let out = undulate(&["run", "fig9"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("fig8_waypoints"));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(undulate(&["bogus"], dir.path()).status.code(), Some(1));
    assert_eq!(undulate(&["compare", "--delta", "-1"], dir.path()).status.code(), Some(1));
    assert_eq!(undulate(&["validate"], dir.path()).status.code(), Some(1));
    assert_eq!(undulate(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn emitted_defaults_validate_and_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = undulate(&["validate", "--emit-defaults", "cfg"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let out = undulate(&["validate", "cfg/fig3_school.toml"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));

    // the file alone, or the file seeding a named run
    let out = undulate(&["run", "cfg/fig5_spring.toml", "--csv"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(dir.path().join("fig5_spring.csv").exists());
    let out = undulate(&["run", "mine", "--seed-config", "cfg/fig5_spring.toml", "--csv"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(
        std::fs::read(dir.path().join("mine.csv")).unwrap(),
        std::fs::read(dir.path().join("fig5_spring.csv")).unwrap()
    );
}

#[test]
fn invalid_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    undulate(&["validate", "--emit-defaults", "."], dir.path());
    let path = dir.path().join("fig5_spring.toml");
    let text = std::fs::read_to_string(&path).unwrap().replacen("horizon = 100.0", "horizon = -5.0", 1);
    std::fs::write(&path, text).unwrap();
    let out = undulate(&["validate", "fig5_spring.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("horizon"));
    assert_eq!(undulate(&["validate", "missing.toml"], dir.path()).status.code(), Some(1));
}

#[test]
fn numerical_failure_exits_two_with_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    undulate(&["validate", "--emit-defaults", "."], dir.path());
    let path = dir.path().join("fig5_spring.toml");
    let text = std::fs::read_to_string(&path).unwrap().replacen("max_steps = 100000", "max_steps = 40", 1);
    std::fs::write(&path, text).unwrap();
    let out = undulate(&["run", "fig5_spring.toml", "--csv"], dir.path());
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("step budget"));
    let table = std::fs::read_to_string(dir.path().join("fig5_spring.csv")).unwrap();
    assert!(table.lines().count() > 1);
}

#[test]
fn compare_reports_small_gaps() {
    let dir = tempfile::tempdir().unwrap();
    let out = undulate(&["compare", "--delta", "0.1"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let gap_x: f64 = text
        .lines()
        .find(|l| l.starts_with("gap x"))
        .and_then(|l| l.split_whitespace().last())
        .unwrap()
        .parse()
        .unwrap();
    assert!(gap_x < 1e-6, "{text}");
}
