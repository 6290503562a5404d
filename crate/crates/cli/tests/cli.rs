use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use eulerlab_core::snapshot::{read_snapshot, SnapshotManifest};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_eulerlab"));
    c.env_remove("EULERLAB_OUTPUT_ROOT");
    c
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const TG_ENERGY: &str = r#"
experiment = "energy_conservation"
seed = 0

[run]
grid_n = 128
dt = 1e-3
T = 0.5
snapshot_stride = 100

[initial_condition]
kind = "taylor_green"
"#;

const SMALL_PAIR: &str = r#"
experiment = "uniqueness"
seed = 3

[run]
grid_n = 32
dt = 1e-2
T = 0.2
snapshot_stride = 5

[initial_condition]
kind = "taylor_green"

[analysis]
alpha = 0.9
"#;

#[test]
fn taylor_green_energy_run_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "tg.toml", TG_ENERGY);
    let out = dir.path().join("out");
    let o = bin().args(["run"]).arg(&cfg).arg("--output-dir").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("energy_conservation: PASS"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(report["result"]["relative_energy_drift"].as_f64().unwrap() <= 1e-6);
    assert_eq!(report["status"], "pass");

    let m = SnapshotManifest::read(&out.join("snapshots/manifest.json")).unwrap();
    assert_eq!(m.components, ["u1", "u2", "omega", "p"]);
    assert_eq!(m.times.len(), 6);
    for (i, t) in m.times.iter().enumerate() {
        assert!((t - 0.1 * i as f64).abs() < 1e-12);
    }
    let (grid, comps) = read_snapshot(&m.paths(&out.join("snapshots"))[0]).unwrap();
    assert_eq!(grid.n_per_axis(), 128);
    assert_eq!(comps.len(), 4);

    let run_manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let listed: Vec<&str> = run_manifest["artifacts"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(listed.contains(&"report.json") && listed.contains(&"series.csv"));
    assert!(!listed.contains(&"metadata.json"));
    for a in listed {
        assert!(out.join(a).exists(), "{a}");
    }
}

#[test]
fn bad_grid_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "g7.toml", &TG_ENERGY.replace("grid_n = 128", "grid_n = 7"));
    let o = bin().arg("run").arg(&cfg).arg("--output-dir").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let e = stderr(&o);
    assert!(e.contains("run.grid_n") && e.contains("power of two"), "{e}");
    assert!(!dir.path().join("o").exists());
}

#[test]
fn identical_pair_certifies_with_zero_energy() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "pair.toml", SMALL_PAIR);
    let out = dir.path().join("out");
    let o = bin().arg("run").arg(&cfg).arg("--output-dir").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let e = report["result"]["series"]["E"].as_array().unwrap();
    assert!(e.iter().all(|v| v.as_f64() == Some(0.0)));
    assert_eq!(report["result"]["verdict"], "certified");
    let csv = std::fs::read_to_string(out.join("series.csv")).unwrap();
    assert!(csv.starts_with("t,E,C\n"));
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "pair.toml", SMALL_PAIR);
    let run = |name: &str, extra: &[&str]| {
        let out = dir.path().join(name);
        let o = bin().arg("run").arg(&cfg).arg("--output-dir").arg(&out).args(extra).output().unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        (
            std::fs::read(out.join("report.json")).unwrap(),
            std::fs::read(out.join("manifest.json")).unwrap(),
        )
    };
    let a = run("a", &[]);
    let b = run("b", &["--jobs", "1"]);
    assert_eq!(a, b);
    let c = run("c", &["--seed-override", "4"]);
    assert_ne!(a.1, c.1);
}

#[test]
fn output_root_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "pair.toml", SMALL_PAIR);
    let root = dir.path().join("root");
    let o = bin().arg("run").arg(&cfg).env("EULERLAB_OUTPUT_ROOT", &root).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(root.join("pair/report.json").exists());
}

#[test]
fn validate_lists_derived_quantities() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "tg.toml", TG_ENERGY);
    let o = bin().arg("validate").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(!s.contains("error"));
    for k in ["run.spacing", "run.epsilon_range", "run.cfl_dt_bound", "run.steps"] {
        assert!(s.contains(k), "{k} missing from\n{s}");
    }
    assert!(!dir.path().join("runs").exists());
}

#[test]
fn validate_names_the_minimum_grid_for_small_epsilon() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "eps.toml",
        r#"
experiment = "commutator_scaling"
[initial_condition]
kind = "lacunary"
alpha = 0.6
[analysis]
grid_n = 256
epsilons = [0.125, 0.0625, 0.03125, 0.015625]
"#,
    );
    let o = bin().arg("validate").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let s = stdout(&o);
    assert!(s.contains("analysis.epsilons[3]") && s.contains("needs grid_n >= 512"), "{s}");
}

#[test]
fn validate_names_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "u.toml", &TG_ENERGY.replace("[run]", "[run]\nviscosity = 0.1"));
    let o = bin().arg("validate").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("unknown field `viscosity`"), "{}", stdout(&o));
}

#[test]
fn exponent_miss_is_a_certificate_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "b.toml",
        r#"
experiment = "besov_fit"
seed = 1
[initial_condition]
kind = "lacunary"
alpha = 0.5
[analysis]
grid_n = 64
tolerance = 1e-9
"#,
    );
    let o = bin().arg("run").arg(&cfg).arg("--output-dir").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(dir.path().join("o/shift_table.csv").exists());
}

#[test]
fn rough_data_is_reported_as_hypothesis_not_met() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "r.toml",
        r#"
experiment = "uniqueness"
seed = 1
[run]
grid_n = 64
dt = 1e-3
T = 4e-3
snapshot_stride = 2
[initial_condition]
kind = "lacunary"
alpha = 0.3
[analysis]
alpha = 0.6
path = "commutator"
"#,
    );
    let o = bin().arg("run").arg(&cfg).arg("--output-dir").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(o.status.code(), Some(3), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("HYPOTHESIS NOT MET"));
}

#[test]
fn example_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for e in std::fs::read_dir(&dir).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "toml") {
            let o = bin().arg("validate").arg(&p).output().unwrap();
            assert_eq!(o.status.code(), Some(0), "{}: {}", p.display(), stdout(&o));
            n += 1;
        }
    }
    assert_eq!(n, 8);
}
