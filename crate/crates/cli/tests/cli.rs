use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use eesim_cli::{RunConfig, RunManifest};

const BIN: &str = env!("CARGO_BIN_EXE_eesim");

fn figure(name: &str) -> String {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../figures").join(name);
    std::fs::read_to_string(p).unwrap()
}

/// Writes `text` with its output directory redirected into `dir`.
fn config_in(dir: &Path, text: &str) -> (PathBuf, PathBuf) {
    let out = dir.join("out");
    let mut lines: Vec<String> = text.lines().filter(|l| !l.starts_with("directory")).map(String::from).collect();
    if let Some(k) = lines.iter().position(|l| l.trim() == "[output]") {
        lines.insert(k + 1, format!("directory = {:?}", out.to_str().unwrap()));
    } else {
        lines.push(format!("\n[output]\ndirectory = {:?}", out.to_str().unwrap()));
    }
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, lines.join("\n")).unwrap();
    (cfg, out)
}

fn eesim(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn manifest(out: &Path) -> RunManifest {
    RunManifest::from_json(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

const TRAP: &str = r#"
[system]
kind = "cavity-atom"
omega_a = 1.0
omega_c = 0.96
v_a = 0.1
v_c = 0.05

[experiment]
kind = "trap"
"#;

#[test]
fn dry_run_writes_only_the_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let (cfg, out) = config_in(tmp.path(), &figure("fig3.cfg"));
    let o = eesim(&["run", "--dry-run", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let names: Vec<_> = std::fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names, ["manifest.json"]);
    let m = manifest(&out);
    assert!(m.dry_run && m.artifacts.is_empty() && m.results.is_empty());
    assert!((m.derived.j_coupling - 0.0266667).abs() < 1e-6);
    assert!((m.derived.omega_ee - 0.9466667).abs() < 1e-6);
}

#[test]
fn manifest_config_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    for fig in ["fig1b.cfg", "fig1d.cfg", "fig2a.cfg", "fig2c.cfg", "fig2d.cfg", "fig4a.cfg", "fig4c.cfg"] {
        let (cfg, out) = config_in(tmp.path(), &figure(fig));
        assert!(eesim(&["run", "--dry-run", cfg.to_str().unwrap()]).status.success(), "{fig}");
        let original = RunConfig::load(&cfg).unwrap();
        let again = RunConfig::parse(&manifest(&out).config_toml()).unwrap();
        assert_eq!(original, again, "{fig}");
    }
}

#[test]
fn identical_configs_give_identical_checksums() {
    let tmp = tempfile::tempdir().unwrap();
    let mut sums = Vec::new();
    for k in 0..2 {
        let dir = tmp.path().join(k.to_string());
        std::fs::create_dir(&dir).unwrap();
        let (cfg, out) = config_in(&dir, &figure("fig2a.cfg"));
        let o = eesim(&["run", cfg.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let m = manifest(&out);
        let p = m.results["p_ee"].unwrap();
        assert!((0.45..=0.55).contains(&p), "{p}");
        sums.push(m.artifacts);
    }
    assert!(!sums[0].is_empty());
    assert_eq!(sums[0], sums[1]);
}

#[test]
fn linear_run_of_two_cavities_is_transparent() {
    let tmp = tempfile::tempdir().unwrap();
    let (cfg, out) = config_in(tmp.path(), &figure("fig1b.cfg"));
    assert!(eesim(&["run", cfg.to_str().unwrap()]).status.success());
    let m = manifest(&out);
    assert!(m.results["post_pulse_ratio"].unwrap() < 1e-2);
    let traj = eesim_core::trajectory::Trajectory::read_csv(&out.join("trajectory.csv")).unwrap();
    assert!(traj.column("intensity_1").is_some());
}

#[test]
fn config_errors_exit_with_code_2() {
    let tmp = tempfile::tempdir().unwrap();
    let degenerate = TRAP.replace("v_c = 0.05", "v_c = 0.1");
    let (cfg, out) = config_in(tmp.path(), &degenerate);
    let o = eesim(&["spectrum", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("DegenerateCouplings"));
    assert!(!out.exists());

    let (cfg, _) = config_in(tmp.path(), &TRAP.replace("kind = \"trap\"", "kind = \"trap\"\nwidth = 1"));
    let o = eesim(&["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("width"));
}

#[test]
fn simulation_errors_exit_with_code_3_and_leave_nothing_behind() {
    let tmp = tempfile::tempdir().unwrap();
    // the pulse does not fit on this grid
    let text = format!("{TRAP}\n[grid]\ncells = 64\ndx_gamma = 0.05\nx0_gamma = -1.0\n");
    let (cfg, out) = config_in(tmp.path(), &text);
    let o = eesim(&["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("PulseOutOfDomain"));
    assert!(!out.exists());
}

#[test]
fn spectrum_reports_the_ee_and_writes_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let (cfg, out) = config_in(tmp.path(), &figure("fig2a.cfg"));
    let o = eesim(&["spectrum", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("2.666666666667e-2"), "{text}");
    assert!(text.contains("9.466666666667e-1"), "{text}");
    let csv = std::fs::read_to_string(out.join("spectrum.csv")).unwrap();
    assert!(csv.starts_with("quantity,re,im\n"));
    let balance: f64 = csv.lines().find(|l| l.starts_with("ee_balance")).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!(balance.abs() < 1e-12);

    let (cfg, _) = config_in(tmp.path(), &figure("fig4c.cfg"));
    let o = eesim(&["spectrum", cfg.to_str().unwrap()]);
    let text = String::from_utf8_lossy(&o.stdout);
    let residual: f64 = text.lines().find(|l| l.starts_with("ee_residual")).unwrap().split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!(residual.abs() < 1e-10);
}

#[test]
fn verify_passes_and_the_negative_control_fails() {
    let o = eesim(&["verify"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{text}");
    assert!(!text.contains("FAIL"));

    let o = eesim(&["verify", "--corrupt-negative-control"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(1), "{text}");
    assert!(text.lines().any(|l| l.starts_with("FAIL") && l.contains("hermiticity")), "{text}");
}
