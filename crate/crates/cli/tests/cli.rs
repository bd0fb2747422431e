use std::path::Path;
use std::process::{Command, Output};

fn batlab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_batlab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("LAB_SEED")
        .output()
        .expect("binary runs")
}

fn summary(out: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn bundled_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = batlab(&[], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let s = summary(dir.path());
    assert_eq!(s["passed"], true);
    assert_eq!(s["commands"].as_array().unwrap().len(), 7);
    let header = "scenario,theorem_tag,quantity,value,bound,pass\n";
    for name in [
        "density-oneshot",
        "density-full",
        "nondensity",
        "bl-audit",
        "monotonicity",
        "collapse",
        "flow",
    ] {
        let csv = std::fs::read_to_string(dir.path().join(format!("{name}.csv"))).unwrap();
        assert!(csv.starts_with(header), "{name}");
    }
}

#[test]
fn single_command_on_a_scenario_file() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../core/scenarios/nondensity.toml"
    );
    let o = batlab(
        &[
            "--scenario",
            scenario,
            "--command",
            "nondensity",
            "--strict",
        ],
        dir.path(),
    );
    assert!(o.status.success());
    let csv = std::fs::read_to_string(dir.path().join("nondensity.csv")).unwrap();
    assert!(
        csv.lines()
            .any(|l| l.contains("min d(f,g)") && l.ends_with(",0.5,true")),
        "{csv}"
    );
    assert!(!dir.path().join("flow.csv").exists());
}

#[test]
fn env_seed_matches_flag() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["--command", "collapse"];
    assert!(batlab(&[&args[..], &["--seed", "5"]].concat(), a.path())
        .status
        .success());
    let o = Command::new(env!("CARGO_BIN_EXE_batlab"))
        .args(args)
        .arg("--out")
        .arg(b.path())
        .env("LAB_SEED", "5")
        .output()
        .unwrap();
    assert!(o.status.success());
    let read = |p: &Path| std::fs::read(p.join("collapse.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
    assert_eq!(summary(b.path())["commands"][0]["seed"], 5);
}

#[test]
fn failing_check_sets_exit_status() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("hopeless.toml");
    let text =
        include_str!("../../core/scenarios/ignition.toml").replace("margin = 0.1", "margin = 5.0");
    std::fs::write(&path, text).unwrap();
    let o = batlab(
        &["--scenario", path.to_str().unwrap(), "--command", "flow"],
        &dir.path().join("out"),
    );
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(summary(&dir.path().join("out"))["passed"], false);
}

#[test]
fn bad_input_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.toml");
    std::fs::write(&path, "id = \n").unwrap();
    let o = batlab(&["--scenario", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line"));
    let o = batlab(&["--command", "nonsense"], dir.path());
    assert!(!o.status.success());
}
