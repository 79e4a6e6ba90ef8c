//! Black-box tests of the command-line binary: artifact layout, render
//! round trips, config validation, and seed precedence.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pareto-explore"))
}

fn room_text(n: usize) -> String {
    let mut s = String::new();
    for j in 0..n {
        for i in 0..n {
            s.push(if i == 0 || j == 0 || i == n - 1 || j == n - 1 { '#' } else { '.' });
        }
        s.push('\n');
    }
    s
}

/// Small room and a fast config, written next to each other so the
/// relative `world` path resolves against the config's directory.
fn write_setup(dir: &Path) -> std::path::PathBuf {
    std::fs::write(dir.join("room.txt"), room_text(24)).unwrap();
    let cfg = "world = room.txt\n\
               start_x = 2.4\nstart_y = 2.4\n\
               lidar_beams = 36\nbudget = 80\n\
               max_steps = 30\nentropy_fraction = 0.4\n\
               seed = 5\n";
    let path = dir.join("run.cfg");
    std::fs::write(&path, cfg).unwrap();
    path
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr),
    );
}

#[test]
fn run_writes_artifacts_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_setup(dir.path());
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out_dir in [&out_a, &out_b] {
        let out = bin().args(["run", "--config"]).arg(&cfg).arg("--out").arg(out_dir).output().unwrap();
        assert_success(&out);
        let text = String::from_utf8(out.stdout).unwrap();
        assert!(text.contains("stopped after"), "stdout: {text}");
        for name in ["metrics.csv", "timings.csv", "trajectory.csv", "map_final.csv", "map_final.pgm"] {
            assert!(out_dir.join(name).exists(), "missing {name}");
        }
    }
    let metrics_a = std::fs::read(out_a.join("metrics.csv")).unwrap();
    let metrics_b = std::fs::read(out_b.join("metrics.csv")).unwrap();
    assert_eq!(metrics_a, metrics_b);
    assert_eq!(
        std::fs::read(out_a.join("map_final.csv")).unwrap(),
        std::fs::read(out_b.join("map_final.csv")).unwrap()
    );
    let metrics = String::from_utf8(metrics_a).unwrap();
    assert!(metrics.starts_with("step,x,y,theta,arc_length,dtheta,recovery,total_entropy,coverage\n"));
    let trajectory = std::fs::read_to_string(out_a.join("trajectory.csv")).unwrap();
    assert!(trajectory.lines().nth(1).unwrap().starts_with("0,2.4,2.4,"));
    // One more line than metrics: the start pose.
    assert_eq!(trajectory.lines().count(), metrics.lines().count() + 1);
}

#[test]
fn snapshots_and_tree_dumps_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_setup(dir.path());
    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .args(["--snapshot-every", "2", "--dump-trees"])
        .output()
        .unwrap();
    assert_success(&out);
    assert!(out_dir.join("map_00002.pgm").exists());
    assert!(out_dir.join("tree_00001.csv").exists());
    let tree = std::fs::read_to_string(out_dir.join("tree_00001.csv")).unwrap();
    assert!(tree.starts_with("id,parent_id,x,y,theta,visits,mean_h,mean_d\n"));
    let snapshot = std::fs::read(out_dir.join("map_00002.pgm")).unwrap();
    assert!(snapshot.starts_with(b"P5\n"));
}

#[test]
fn render_round_trips_the_final_map() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_setup(dir.path());
    let out_dir = dir.path().join("out");
    assert_success(&bin().args(["run", "--config"]).arg(&cfg).arg("--out").arg(&out_dir).output().unwrap());

    // CSV -> load -> PGM must equal the PGM the run wrote directly.
    let rendered = dir.path().join("occ.pgm");
    let out = bin()
        .args(["render", "--layer", "occupancy", "--in"])
        .arg(out_dir.join("map_final.csv"))
        .arg("--out")
        .arg(&rendered)
        .output()
        .unwrap();
    assert_success(&out);
    assert_eq!(
        std::fs::read(&rendered).unwrap(),
        std::fs::read(out_dir.join("map_final.pgm")).unwrap()
    );

    let entropy = dir.path().join("h.pgm");
    let out = bin()
        .args(["render", "--layer", "entropy", "--in"])
        .arg(out_dir.join("map_final.csv"))
        .arg("--out")
        .arg(&entropy)
        .output()
        .unwrap();
    assert_success(&out);
    let h = std::fs::read(&entropy).unwrap();
    assert!(h.starts_with(b"P5\n"));
    assert_ne!(h, std::fs::read(&rendered).unwrap());
}

#[test]
fn validate_config_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_setup(dir.path());
    let out = bin().arg("validate-config").arg(&cfg).output().unwrap();
    assert_success(&out);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok:"));

    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "world = room.txt\ngama = 40\n").unwrap();
    let out = bin().arg("validate-config").arg(&bad).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "stderr: {err}");

    let out = bin().arg("validate-config").arg(dir.path().join("absent.cfg")).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn missing_world_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "world = nowhere.txt\n").unwrap();
    let out = bin().args(["run", "--config"]).arg(&cfg).arg("--out").arg(dir.path().join("out")).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn seed_precedence_env_then_flag() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_setup(dir.path()); // config seed 5
    let run = |out_name: &str, env_seed: Option<&str>, flag_seed: Option<&str>| {
        let out_dir = dir.path().join(out_name);
        let mut cmd = bin();
        cmd.args(["run", "--config"]).arg(&cfg).arg("--out").arg(&out_dir);
        if let Some(s) = env_seed {
            cmd.env("PARETO_EXPLORE_SEED", s);
        } else {
            cmd.env_remove("PARETO_EXPLORE_SEED");
        }
        if let Some(s) = flag_seed {
            cmd.args(["--seed", s]);
        }
        assert_success(&cmd.output().unwrap());
        std::fs::read(out_dir.join("metrics.csv")).unwrap()
    };

    let plain = run("plain", None, None);
    let env_run = run("env", Some("99"), None);
    let env_and_flag = run("env_flag", Some("99"), Some("5"));
    let flag_99 = run("flag", None, Some("99"));

    // The environment seed overrides the config...
    assert_ne!(plain, env_run);
    // ...the flag overrides the environment...
    assert_eq!(plain, env_and_flag);
    // ...and a flag seed equals the same seed set through the environment.
    assert_eq!(env_run, flag_99);
}
