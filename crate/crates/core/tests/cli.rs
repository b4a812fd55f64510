use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rayswim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rayswim"))
        .args(args)
        .output()
        .unwrap()
}

fn write_cfg(dir: &Path, text: &str) -> String {
    let p = dir.join("exp.cfg");
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn malformed_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "coil.q.turns = 3\n");
    let out = rayswim(&["--config", &cfg, "field", "homogeneity"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("coil.q.turns"));
}

#[test]
fn uncalibrated_sweep_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = rayswim(&["--out", dir.path().to_str().unwrap(), "sweep"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("sweep.csv").exists());
}

#[test]
fn infeasible_calibration_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "fin.magnetization_a_per_m = 0\n");
    let out = rayswim(&[
        "--config",
        &cfg,
        "--out",
        dir.path().to_str().unwrap(),
        "calibrate",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!dir.path().join("calibrated.cfg").exists());
}

#[test]
fn calibrate_then_run_writes_stamped_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert!(rayswim(&["--out", d, "calibrate"]).status.success());
    let cal = dir.path().join("calibrated.cfg");
    let cal = cal.to_str().unwrap();
    let out = rayswim(&["--config", cal, "--out", d, "run", "--plan", "nabla"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for name in [
        "nabla_trajectory.csv",
        "nabla_metrics.json",
        "nabla_trajectory.svg",
    ] {
        let body = fs::read_to_string(dir.path().join(name)).unwrap();
        assert!(body.contains("config_hash"), "{name}");
    }
    let csv = fs::read_to_string(dir.path().join("nabla_trajectory.csv")).unwrap();
    assert_eq!(
        csv.lines().nth(1).unwrap(),
        "t_s,x_mm,y_mm,psi_deg,v_mm_s,gamma_cmd_deg"
    );
}

#[test]
fn unknown_plan_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert!(rayswim(&["--out", d, "calibrate"]).status.success());
    let cal = dir.path().join("calibrated.cfg");
    let out = rayswim(&[
        "--config",
        cal.to_str().unwrap(),
        "--out",
        d,
        "run",
        "--plan",
        "spiral",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn dt_override_changes_the_hash() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert!(
        rayswim(&["--out", d, "surface", "--nx", "3", "--ny", "3", "--nt", "2"])
            .status
            .success()
    );
    let a = fs::read_to_string(dir.path().join("surface.csv")).unwrap();
    assert!(rayswim(&[
        "--out", d, "--dt", "0.5", "surface", "--nx", "3", "--ny", "3", "--nt", "2"
    ])
    .status
    .success());
    let b = fs::read_to_string(dir.path().join("surface.csv")).unwrap();
    assert_ne!(a.lines().next(), b.lines().next());
    assert_eq!(
        a.lines().skip(1).collect::<Vec<_>>(),
        b.lines().skip(1).collect::<Vec<_>>()
    );
}
