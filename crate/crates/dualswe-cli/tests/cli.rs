//! End-to-end checks of the command-line surface: exit codes, file
//! outputs, and failure reporting.

use std::path::{Path, PathBuf};
use std::process::Command;

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_dualswe")
}

fn tempdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dualswe-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.txt");
    std::fs::write(&path, body).unwrap();
    path
}

const PERIODIC: &str = "[mesh]\ntype = periodic-quad\nnx = 8\nny = 8\n";
const BOUNDED: &str = "[mesh]\ntype = lattice-voronoi\nnx = 4\nny = 4\nmesh_seed = 7\n";

#[test]
fn verify_calculus_passes_on_periodic_mesh() {
    let dir = tempdir("verify-periodic");
    let cfg = write_config(&dir, PERIODIC);
    let out = Command::new(binary())
        .args(["--config", cfg.to_str().unwrap(), "verify-calculus"])
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}");
    assert!(
        stdout.contains("all identities within tolerance"),
        "{stdout}"
    );
}

#[test]
fn verify_calculus_includes_boundary_identities_on_bounded_mesh() {
    let dir = tempdir("verify-bounded");
    let cfg = write_config(&dir, BOUNDED);
    let out = Command::new(binary())
        .args(["--config", cfg.to_str().unwrap(), "verify-calculus"])
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}");
    assert!(stdout.contains("bounded mesh"), "{stdout}");
    assert!(stdout.contains("ibp-skew-grad-vertex"), "{stdout}");
}

#[test]
fn verify_calculus_names_failing_identity_on_injected_fault() {
    let dir = tempdir("verify-fault");
    // Generate a mesh file, then flip one direction indicator in the #CE
    // section only (leaving its transpose intact).
    let cfg = write_config(&dir, PERIODIC);
    let gen = Command::new(binary())
        .args([
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
            "mesh-gen",
        ])
        .output()
        .unwrap();
    assert!(gen.status.success());
    let mesh_path = dir.join("mesh.txt");
    let text = std::fs::read_to_string(&mesh_path).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let ce = lines.iter().position(|l| l == "#CE").unwrap();
    let record = lines[ce + 1].clone();
    let mut fields: Vec<String> = record.split_whitespace().map(str::to_string).collect();
    fields[2] = if fields[2] == "1" {
        "-1".into()
    } else {
        "1".into()
    };
    lines[ce + 1] = fields.join(" ");
    std::fs::write(&mesh_path, lines.join("\n")).unwrap();

    let cfg = write_config(
        &dir,
        &format!("[mesh]\ntype = file\npath = {}\n", mesh_path.display()),
    );
    let out = Command::new(binary())
        .args(["--config", cfg.to_str().unwrap(), "verify-calculus"])
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(1), "{stdout}");
    assert!(stdout.contains("failing identities:"), "{stdout}");
    assert!(
        stdout.contains("ibp-grad-cell") || stdout.contains("curl-grad-null"),
        "{stdout}"
    );
}

#[test]
fn mesh_check_flags_corrupted_geometry() {
    let dir = tempdir("mesh-check");
    let cfg = write_config(&dir, PERIODIC);
    let gen = Command::new(binary())
        .args([
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
            "mesh-gen",
        ])
        .output()
        .unwrap();
    assert!(gen.status.success());
    let mesh_path = dir.join("mesh.txt");

    let cfg_file = write_config(
        &dir,
        &format!("[mesh]\ntype = file\npath = {}\n", mesh_path.display()),
    );
    let ok = Command::new(binary())
        .args(["--config", cfg_file.to_str().unwrap(), "mesh-check"])
        .output()
        .unwrap();
    assert!(ok.status.success());

    // Corrupt one edge length.
    let text = std::fs::read_to_string(&mesh_path).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let edges = lines.iter().position(|l| l == "#EDGES").unwrap();
    let mut fields: Vec<String> = lines[edges + 1]
        .split_whitespace()
        .map(str::to_string)
        .collect();
    fields[4] = "9.0e0".into();
    lines[edges + 1] = fields.join(" ");
    std::fs::write(&mesh_path, lines.join("\n")).unwrap();

    let bad = Command::new(binary())
        .args(["--config", cfg_file.to_str().unwrap(), "mesh-check"])
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&bad.stdout);
    assert_eq!(bad.status.code(), Some(1), "{stdout}");
    assert!(stdout.contains("FAIL"), "{stdout}");
}

#[test]
fn run_reports_conservation_drifts() {
    let dir = tempdir("run");
    let cfg = write_config(
        &dir,
        &format!(
            "{PERIODIC}\n[physics]\npsi_amp = 0.03\nphi_amp = 0.05\n\
             [time]\nscheme = energy-enstrophy\ndt = 0.01\nsteps = 100\n\
             [output]\nevery = 50\n"
        ),
    );
    let out_dir = dir.join("out");
    let out = Command::new(binary())
        .args([
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "run",
        ])
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}");
    assert!(stdout.contains("energy_drift"), "{stdout}");
    assert!(stdout.contains("enstrophy_drift"), "{stdout}");
    let series = std::fs::read_to_string(out_dir.join("series.csv")).unwrap();
    assert!(series.starts_with("t,mass,circulation,energy,enstrophy,iters,residual"));
    assert_eq!(series.lines().count(), 1 + 3); // header + t=0, t=0.5, t=1.0
    assert!(out_dir.join("snapshot_000000.csv").exists());
    assert!(out_dir.join("snapshot_000100.csv").exists());
    let snapshot = std::fs::read_to_string(out_dir.join("snapshot_000100.csv")).unwrap();
    assert!(snapshot.starts_with("cell_id,x,y,phi,zeta,gamma,psi,chi"));
}

#[test]
fn bounded_mesh_run_with_implicit_midpoint_conserves() {
    let dir = tempdir("run-bounded");
    let cfg = write_config(
        &dir,
        &format!(
            "{BOUNDED}\n[physics]\npsi_amp = 0.02\nphi_amp = 0.1\nphi_mean = 1.5\ngravity = 2.0\n\
             [time]\nscheme = energy-enstrophy\nintegrator = implicit-midpoint\ndt = 0.002\nsteps = 20\n\
             [output]\nevery = 10\n"
        ),
    );
    let out_dir = dir.join("out");
    let out = Command::new(binary())
        .args([
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "run",
        ])
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}");
    // Mass is conserved to roundoff; the midpoint rule keeps the other
    // invariants near the fixed-point tolerance at this step size.
    let drift_of = |name: &str| -> f64 {
        stdout
            .lines()
            .find(|l| l.contains(name))
            .and_then(|l| l.split(':').nth(1))
            .map(|v| v.trim().trim_end_matches(',').parse().unwrap())
            .unwrap()
    };
    assert!(drift_of("mass_drift") < 1e-13, "{stdout}");
    assert!(drift_of("energy_drift") < 1e-8, "{stdout}");
    assert!(drift_of("enstrophy_drift") < 1e-8, "{stdout}");
}

#[test]
fn zero_step_run_emits_only_initial_diagnostics() {
    let dir = tempdir("run-zero");
    let cfg = write_config(&dir, PERIODIC);
    let out_dir = dir.join("out");
    let out = Command::new(binary())
        .args([
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--steps",
            "0",
            "run",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let series = std::fs::read_to_string(out_dir.join("series.csv")).unwrap();
    assert_eq!(series.lines().count(), 2); // header + t=0
}

#[test]
fn bad_config_key_is_a_usage_error() {
    let dir = tempdir("bad-key");
    let cfg = write_config(&dir, "[time]\ntimestep = 0.1\n");
    let out = Command::new(binary())
        .args(["--config", cfg.to_str().unwrap(), "run"])
        .output()
        .unwrap();
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(out.status.code(), Some(2), "{stderr}");
    assert!(stderr.contains("timestep"), "{stderr}");
}

#[test]
fn dispersion_meets_z_grid_relation() {
    let dir = tempdir("dispersion");
    let cfg = write_config(&dir, PERIODIC);
    let out_dir = dir.join("out");
    let out = Command::new(binary())
        .args([
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "dispersion",
        ])
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}");
    let csv = std::fs::read_to_string(out_dir.join("dispersion.csv")).unwrap();
    assert!(csv.starts_with("mode,lambda,omega_numeric,omega_zgrid,abs_err"));
    assert_eq!(csv.lines().count(), 1 + 64);
}

#[test]
fn dispersion_with_zero_coriolis_passes() {
    let dir = tempdir("dispersion-f0");
    let cfg = write_config(&dir, &format!("{PERIODIC}\n[physics]\nf0 = 0.0\n"));
    let out = Command::new(binary())
        .args([
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.join("out").to_str().unwrap(),
            "dispersion",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
}

#[test]
fn dispersion_rejects_bounded_meshes() {
    let dir = tempdir("dispersion-bounded");
    let cfg = write_config(&dir, BOUNDED);
    let out = Command::new(binary())
        .args([
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.join("out").to_str().unwrap(),
            "dispersion",
        ])
        .output()
        .unwrap();
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(out.status.code(), Some(2), "{stderr}");
    assert!(stderr.contains("periodic"), "{stderr}");
}

#[test]
fn unknown_flag_is_rejected() {
    let out = Command::new(binary())
        .args(["--frobnicate", "run"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
