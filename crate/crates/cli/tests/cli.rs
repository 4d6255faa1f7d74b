use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const RING: &str = "[scenario]\nkind = \"ac_ring\"\nalpha = 0.3\nchi_tilt = 0.5\n\
                    [integrator]\nsteps = 1024\n\
                    [drive]\ntarget = \"alpha\"\nknots = [[0.0, 0.1], [10.0, 0.6]]\nsamples = 9\n";

const SWEEP: &str = "[scenario]\nkind = \"stern\"\nb_phi = 0.6\nb_z = 0.8\nomega = 0.45\n\
                     [integrator]\nsteps = 512\n\
                     [sweep]\nparameter = \"omega\"\nfrom = 0.2\nto = 1.5\ncount = 9\n";

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_spinfaraday"));
    c.env_remove("SPINFARADAY_OUT");
    c
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "ring.toml", RING);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let o = run(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (fa, fb) = (read_all(&a), read_all(&b));
    let names: Vec<_> = fa.iter().map(|(n, _)| n.as_str()).collect();
    for expected in ["phases.json", "trajectory.csv", "faraday.csv", "summary.txt", "bloch_path.dat", "faraday_overlay.dat"] {
        assert!(names.contains(&expected), "missing {expected}");
    }
    assert_eq!(fa, fb);
}

#[test]
fn trajectory_header_is_fixed() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "ring.toml", RING);
    let out = tmp.path().join("o");
    run(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    let traj = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(traj.lines().next(), Some("param,re0,im0,re1,im1,sx,sy,sz"));
    let far = fs::read_to_string(out.join("faraday.csv")).unwrap();
    assert_eq!(far.lines().next(), Some("t,eps_force,eps_flux,phi_ab,phi_dyn,phi_geo"));
}

#[test]
fn set_override_changes_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "ring.toml", RING);
    let out = tmp.path().join("o");
    let o = run(&["run", "--config", &cfg, "--out", out.to_str().unwrap(), "--set", "scenario.alpha=0.0"]);
    assert_eq!(o.status.code(), Some(0));
    let phases = fs::read_to_string(out.join("phases.json")).unwrap();
    let v: Vec<&str> = phases.lines().filter(|l| l.contains("\"cone_angle\"")).collect();
    assert!(!v.is_empty());
    assert!(v.iter().all(|l| l.trim_end_matches(',').ends_with(": 0.0")), "{v:?}");
}

#[test]
fn env_variable_supplies_default_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "ring.toml", RING);
    let out = tmp.path().join("from_env");
    let o = bin().args(["run", "--config", &cfg]).env("SPINFARADAY_OUT", &out).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(out.join("summary.txt").exists());
}

#[test]
fn config_errors_exit_two_and_list_every_violation() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = "[scenario]\nkind = \"ac_ring\"\nalpha = 0.3\nchi_tilt = 0.5\nbogus = 1\n[integrator]\nsteps = 1000\n";
    let cfg = write_config(tmp.path(), "bad.toml", bad);
    let o = run(&["run", "--config", &cfg, "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bogus") && err.contains("integrator.steps"), "{err}");

    let cfg = write_config(tmp.path(), "syntax.toml", "[scenario\nkind = 1\n");
    let o = run(&["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line"));
}

#[test]
fn io_errors_exit_four() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["run", "--config", tmp.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));

    let cfg = write_config(tmp.path(), "ring.toml", RING);
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = run(&["run", "--config", &cfg, "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn flagged_run_exits_three_but_still_writes() {
    // At 4 alpha cos(chi) = -1 the cone axis degenerates.
    let text = "[scenario]\nkind = \"ac_ring\"\nalpha = 0.5\nchi_tilt = 2.0943951023931957\n[integrator]\nsteps = 256\n";
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "edge.toml", text);
    let out = tmp.path().join("o");
    let o = run(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("WARNINGS"));
}

#[test]
fn sweep_output_ignores_job_count() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "sweep.toml", SWEEP);
    let mut outputs = Vec::new();
    for jobs in ["1", "3", "8"] {
        let out = tmp.path().join(format!("j{jobs}"));
        let o = run(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap(), "--jobs", jobs]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(read_all(&out));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
    let csv = String::from_utf8(outputs[0].iter().find(|(n, _)| n == "sweep.csv").unwrap().1.clone()).unwrap();
    assert_eq!(csv.lines().next(), Some("value,cone,dynamical,geometric,defect,status"));
    assert_eq!(csv.lines().count(), 10);
}

#[test]
fn run_rejects_sweep_configs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "sweep.toml", SWEEP);
    assert_eq!(run(&["run", "--config", &cfg]).status.code(), Some(2));
}
