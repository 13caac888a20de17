//! The binary end to end: exit codes, outputs, manifests, determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_inls-lab");

const MASS_CRITICAL: &str = "params.n = 3\nparams.p = 1.3333333333333333\n";

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).args(args).current_dir(dir).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn csv_column(text: &str, name: &str) -> Vec<String> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name}"));
    lines.map(|l| l.split(',').nth(idx).unwrap().to_string()).collect()
}

#[test]
fn verify_passes_and_prints_measured_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["verify", "--out", "v"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}\n{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS criterion")).count(), 12);
    assert!(stdout.contains(" < "), "checks should print measured vs tolerance");
    assert!(dir.path().join("v/verify.json").is_file());
    assert!(dir.path().join("v/manifest.json").is_file());
}

#[test]
fn evolve_below_mass_threshold_stays_bounded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.conf", &format!("{MASS_CRITICAL}initial.alpha = 0.9\nevolution.t_end = 5\n"));
    let out = run(dir.path(), &["evolve", "--config", &cfg, "--out", "e"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let trace = fs::read_to_string(dir.path().join("e/trace.csv")).unwrap();
    assert!(trace.starts_with("t,mass,energy,grad_norm,P,K_n2,variance,nehari\n"));
    let grad: Vec<f64> = csv_column(&trace, "grad_norm").iter().map(|v| v.parse().unwrap()).collect();
    assert!(grad.last().unwrap() / grad[0] < 2.0);
    let t: Vec<f64> = csv_column(&trace, "t").iter().map(|v| v.parse().unwrap()).collect();
    assert!((t.last().unwrap() - 5.0).abs() < 1e-9);
    let events: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("e/events.json")).unwrap()).unwrap();
    assert_eq!(events["events"][0]["kind"], "Completed");
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("e/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    assert!(manifest["files"]["trace.csv"].is_string());
    assert_eq!(manifest["grid"]["cells"], 4096);
}

#[test]
fn sweep_over_amplitude_splits_at_the_ground_state() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{MASS_CRITICAL}grid.N = 2048\nevolution.t_end = 3\nsweep.key = initial.alpha\nsweep.values = 0.8, 0.9, 1.1, 1.2\n");
    let cfg = write_config(dir.path(), "sweep.conf", &text);
    let out = run(dir.path(), &["sweep", "--config", &cfg, "--out", "s", "--jobs", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(dir.path().join("s/summary.csv")).unwrap();
    assert_eq!(csv_column(&summary, "verdict"), ["GlobalCandidate", "GlobalCandidate", "BlowupCandidate", "BlowupCandidate"]);
    assert_eq!(csv_column(&summary, "outcome"), ["completed", "completed", "blowup_triggered", "blowup_triggered"]);
    let trigger = csv_column(&summary, "t_trigger");
    assert!(trigger[0].is_empty() && trigger[1].is_empty());
    assert!(trigger[2].parse::<f64>().unwrap() > trigger[3].parse::<f64>().unwrap());
    for i in 0..4 {
        for f in ["classification.json", "trace.csv", "events.json", "manifest.json"] {
            assert!(dir.path().join(format!("s/point_{i:03}/{f}")).is_file(), "point {i} lacks {f}");
        }
    }
}

#[test]
fn identical_configs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let text = "params.n = 3\nparams.b = -0.5\nparams.p = 2\ngrid.N = 1024\ninitial.kind = gaussian\nevolution.t_end = 0.2\n";
    let cfg = write_config(dir.path(), "g.conf", text);
    // comments and ordering do not change the config hash
    let shuffled: String = text.lines().rev().map(|l| format!("{l}  # note\n")).collect();
    let cfg2 = write_config(dir.path(), "g2.conf", &shuffled);
    for (c, o) in [(&cfg, "a"), (&cfg, "b"), (&cfg2, "c")] {
        assert_eq!(run(dir.path(), &["evolve", "--config", c, "--out", o]).status.code(), Some(0));
    }
    let read = |p: &str| fs::read(dir.path().join(p)).unwrap();
    assert_eq!(read("a/trace.csv"), read("b/trace.csv"));
    assert_eq!(read("a/trace.csv"), read("c/trace.csv"));
    assert_eq!(read("a/manifest.json"), read("c/manifest.json"));
}

#[test]
fn groundstate_classify_and_check_potential_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let text = "params.n = 3\nparams.p = 2\ngrid.N = 2048\ninitial.alpha = 1.5\npotential.kind = const_plus_gaussian\npotential.a = 1\n";
    let cfg = write_config(dir.path(), "c.conf", text);
    for cmd in ["groundstate", "classify", "check-potential"] {
        let out = run(dir.path(), &[cmd, "--config", &cfg, "--out", cmd]);
        assert_eq!(out.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(dir.path().join(cmd).join("manifest.json").is_file());
    }
    let profile = fs::read_to_string(dir.path().join("groundstate/profile.csv")).unwrap();
    assert_eq!(profile.lines().count(), 2049);
    let gs: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("groundstate/groundstate.json")).unwrap()).unwrap();
    assert!(gs["pohozaev_res"][0].as_f64().unwrap() < 1e-4);
    assert!(gs["thresholds"]["em_sigma"].is_number());
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("check-potential/assumptions.json")).unwrap()).unwrap();
    assert_eq!(report["holds_IV"]["status"], "fails", "{report}");
    assert!(report["holds_IV"]["witness_radius"].is_number());
    let cls: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("classify/classification.json")).unwrap()).unwrap();
    let entries = cls["entries"].as_array().unwrap();
    let inter = entries.iter().find(|e| e["id"] == "intercritical_threshold").unwrap();
    assert_eq!(inter["verdict"], "BlowupCandidate");
    let sets = entries.iter().find(|e| e["id"] == "action_sets").unwrap();
    assert_eq!(sets["verdict"], "NotApplicable");
}

#[test]
fn profile_round_trips_as_initial_data() {
    let dir = tempfile::tempdir().unwrap();
    let base = "params.n = 3\nparams.p = 2\ngrid.N = 1024\n";
    let cfg = write_config(dir.path(), "gs.conf", base);
    assert_eq!(run(dir.path(), &["groundstate", "--config", &cfg, "--out", "gs"]).status.code(), Some(0));
    let text = format!("{base}initial.kind = file\ninitial.path = gs/profile.csv\nevolution.t_end = 0.1\n");
    let cfg = write_config(dir.path(), "from_file.conf", &text);
    let out = run(dir.path(), &["evolve", "--config", &cfg, "--out", "e"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad_key = write_config(dir.path(), "a.conf", "params.n = 3\nparams.q = 2\n");
    let out = run(dir.path(), &["evolve", "--config", &bad_key]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2") && err.contains("params.q"), "{err}");

    let bad_value = write_config(dir.path(), "b.conf", "params.n = 3\nparams.p = 2\ngrid.N = many\n");
    assert_eq!(run(dir.path(), &["groundstate", "--config", &bad_value]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["groundstate"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["launch"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["evolve", "--config", "missing.conf"]).status.code(), Some(2));
    let missing_file = write_config(dir.path(), "c.conf", "params.n = 3\nparams.p = 2\ninitial.kind = file\ninitial.path = nope.csv\n");
    assert_eq!(run(dir.path(), &["evolve", "--config", &missing_file]).status.code(), Some(2));

    // mass-subcritical parameters have no thresholds to classify against
    let subcritical = write_config(dir.path(), "d.conf", "params.n = 3\nparams.p = 1\ngrid.N = 512\n");
    let out = run(dir.path(), &["classify", "--config", &subcritical, "--out", "x"]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}
