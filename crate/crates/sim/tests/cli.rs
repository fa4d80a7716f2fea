use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use elastocap_sim::output::{read_record, RecordRow, Snapshot, CHECKPOINT_FILE, RECORD_FILE, SNAPSHOT_DIR};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_elastocap"))
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn exec(args: &[&str]) -> Output {
    bin().args(args).arg("--verbosity").arg("warn").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL_BOX: &str = r#"
symmetry = "planar"

[geometry]
domain = [0.0, 32.0, 0.0, 32.0]
droplet_radius = 10.0
droplet_center = [15.0, 16.5]
substrate = "none"

[physics]
density_1 = 1260.0
density_2 = 1260.0
viscosity_1 = 1.412
viscosity_2 = 1.412
surface_tension = 0.046
wall_tension_1 = 0.036
wall_tension_2 = 0.031
interface_thickness = 2e-6
mobility = 1e-11

[discretization]
base_resolution = [8, 8]
cells_per_epsilon = 2.0

[time]
dt = 0.5
t_end = 2.0

[output]
directory = "unused"
snapshot_every = 2
droplet_probe = [15.0, 16.5]
ambient_probe = [30.0, 30.0]
"#;

const SMALL_SOFT: &str = r#"
symmetry = "axisymmetric"

[geometry]
domain = [0.0, 40.0, 0.0, 30.0]
droplet_radius = 16.0
droplet_center = [0.0, 1.7]
substrate = "elastic"
substrate_thickness = 10.0

[physics]
density_1 = 1260.0
density_2 = 1260.0
viscosity_1 = 1.412
viscosity_2 = 1.412
surface_tension = 0.046
wall_tension_1 = 0.036
wall_tension_2 = 0.031
interface_thickness = 2e-6
mobility = 1e-11
young_modulus = 30000.0
poisson_ratio = 0.45
solid_density = 12600.0

[discretization]
base_resolution = [8, 6]
cells_per_epsilon = 2.0
band_half_width = 1.5

[time]
dt = 0.5
t_end = 2.0

[output]
directory = "unused"
snapshot_every = 0
droplet_probe = [0.0, 8.0]
ambient_probe = [38.0, 28.0]
"#;

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run_to(cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", "--config", cfg.to_str().unwrap(), "--output", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    exec(&args)
}

fn assert_rows_close(a: &[RecordRow], b: &[RecordRow], tol: f64) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert_eq!(x.step, y.step);
        let pairs = [
            (x.free_energy, y.free_energy),
            (x.phase_total, y.phase_total),
            (x.pressure_probe, y.pressure_probe),
            (x.ridge_height, y.ridge_height),
            (x.center_indentation, y.center_indentation),
            (x.solid_volume_change, y.solid_volume_change),
        ];
        for (p, q) in pairs {
            if p.is_nan() && q.is_nan() {
                continue;
            }
            assert!((p - q).abs() <= tol * p.abs().max(q.abs()).max(1e-300), "step {}: {p} vs {q}", x.step);
        }
    }
}

#[test]
fn shipped_configs_validate() {
    for name in ["closed_box.cfg", "rigid_wetting.cfg", "soft_substrate.cfg"] {
        let p = configs().join(name);
        let o = exec(&["validate", "--config", p.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{name}: {}", stderr(&o));
        assert!(String::from_utf8_lossy(&o.stdout).starts_with("ok:"));
    }
}

#[test]
fn negative_time_step_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.cfg", &SMALL_BOX.replace("dt = 0.5", "dt = -0.5"));
    let o = exec(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("time.dt"), "{}", stderr(&o));
    let o = run_to(&cfg, &dir.path().join("out"), &[]);
    assert_eq!(code(&o), 2);
}

#[test]
fn unknown_keys_and_missing_elastic_data_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a.cfg", &SMALL_BOX.replace("mobility = 1e-11", "mobility = 1e-11\nmobilty = 2"));
    let o = exec(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("mobilty"), "{}", stderr(&o));
    let cfg = write_config(dir.path(), "b.cfg", &SMALL_SOFT.replace("young_modulus = 30000.0\n", ""));
    let o = exec(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("young_modulus"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(code(&exec(&["run", "--no-such-flag"])), 1);
    assert_eq!(code(&exec(&["frobnicate"])), 1);
    assert_eq!(code(&exec(&["probe", "--snapshot", "x", "--at", "1;2", "--field", "p"])), 1);
    assert_eq!(code(&bin().arg("--help").output().unwrap()), 0);
}

#[test]
fn unreadable_config_is_a_configuration_error() {
    let o = exec(&["validate", "--config", "/nonexistent/config.cfg"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn run_writes_record_snapshots_and_probe_reads_them() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "box.cfg", SMALL_BOX);
    let out = dir.path().join("out");
    let o = run_to(&cfg, &out, &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = read_record(&out.join(RECORD_FILE)).unwrap();
    assert_eq!(rows.iter().map(|r| r.step).collect::<Vec<_>>(), vec![0, 1, 2, 3, 4]);
    assert!(rows.windows(2).all(|w| w[1].free_energy <= w[0].free_energy));
    assert!(out.join(CHECKPOINT_FILE).exists() && out.join("config.toml").exists());
    for step in [0, 2, 4] {
        assert!(out.join(SNAPSHOT_DIR).join(format!("snapshot_{step:06}.txt")).exists());
    }
    let snap_path = out.join(SNAPSHOT_DIR).join("snapshot_000004.txt");
    let snap = Snapshot::read(&snap_path).unwrap();
    assert_eq!(snap.step, 4);
    assert!(!snap.contour.is_empty());

    let snap_arg = snap_path.to_str().unwrap();
    let o = exec(&["probe", "--snapshot", snap_arg, "--at", "15,16.5", "--field", "phi"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let phi: f64 = String::from_utf8_lossy(&o.stdout).trim().parse().unwrap();
    assert!(phi > 0.9, "φ at the centre {phi}");
    let o = exec(&["probe", "--snapshot", snap_arg, "--at", "3,3", "--field", "u"]);
    assert_eq!(String::from_utf8_lossy(&o.stdout).split_whitespace().count(), 2);
    let o = exec(&["probe", "--snapshot", snap_arg, "--at", "15,16.5", "--field", "p"]);
    let pd: f64 = String::from_utf8_lossy(&o.stdout).trim().parse().unwrap();
    let o = exec(&["probe", "--snapshot", snap_arg, "--at", "30,30", "--field", "p"]);
    let pa: f64 = String::from_utf8_lossy(&o.stdout).trim().parse().unwrap();
    assert!(((pd - pa) - rows[4].pressure_probe).abs() < 1e-6 * rows[4].pressure_probe.abs());
    let o = exec(&["probe", "--snapshot", snap_arg, "--at", "100,3", "--field", "p"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn repeated_runs_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "box.cfg", SMALL_BOX);
    for name in ["a", "b"] {
        assert_eq!(code(&run_to(&cfg, &dir.path().join(name), &["--max-steps", "2"])), 0);
    }
    let a = std::fs::read_to_string(dir.path().join("a").join(RECORD_FILE)).unwrap();
    let b = std::fs::read_to_string(dir.path().join("b").join(RECORD_FILE)).unwrap();
    assert_eq!(a, b);
}

fn resume_matches_uninterrupted(text: &str) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.cfg", text);
    let (full, split) = (dir.path().join("full"), dir.path().join("split"));
    assert_eq!(code(&run_to(&cfg, &full, &[])), 0);
    let o = run_to(&cfg, &split, &["--max-steps", "2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(read_record(&split.join(RECORD_FILE)).unwrap().len(), 3);
    let cp = split.join(CHECKPOINT_FILE);
    let o = run_to(&cfg, &split, &["--resume", cp.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let a = read_record(&full.join(RECORD_FILE)).unwrap();
    let b = read_record(&split.join(RECORD_FILE)).unwrap();
    assert_rows_close(&a, &b, 1e-12);
}

#[test]
fn fluid_run_resumes_from_a_checkpoint() {
    resume_matches_uninterrupted(SMALL_BOX);
}

#[test]
fn coupled_run_resumes_from_a_checkpoint() {
    resume_matches_uninterrupted(SMALL_SOFT);
}

#[test]
fn checkpoint_of_another_configuration_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "box.cfg", SMALL_BOX);
    let out = dir.path().join("out");
    assert_eq!(code(&run_to(&cfg, &out, &["--max-steps", "1"])), 0);
    let other = write_config(dir.path(), "other.cfg", &SMALL_BOX.replace("base_resolution = [8, 8]", "base_resolution = [10, 10]"));
    let cp = out.join(CHECKPOINT_FILE);
    let o = run_to(&other, &dir.path().join("o2"), &["--resume", cp.to_str().unwrap()]);
    assert_ne!(code(&o), 0);
}
