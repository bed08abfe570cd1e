use std::path::Path;
use std::process::{Command, Output};

use proptest::prelude::*;
use thermohom::config::{FamilyName, RunConfig};

fn run(dir: &Path, sub: &str, config: &str) -> Output {
    let path = dir.join("run.toml");
    std::fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_thermohom"))
        .args([sub, "--config"])
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

#[test]
fn unknown_key_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), "checks", "[geometry]\nradius = 0.2\nradiuss = 0.3\n");
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn invalid_value_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), "cell", "[time]\nt_end = 0.1\ndt = 0.2\n");
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("dt"));
}

#[test]
fn missing_config_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_thermohom"))
        .args(["cell", "--config"])
        .arg(dir.path().join("absent.toml"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn cell_run_writes_manifest_with_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    let text = "[geometry]\ncell_resolution = 8\n";
    let o = run(dir.path(), "cell", text);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = std::fs::read_to_string(dir.path().join("out/cell.manifest.toml")).unwrap();
    let hash = RunConfig::from_toml(text, dir.path()).unwrap().hash();
    assert!(manifest.contains(&hash));
    let echo = std::fs::read_to_string(dir.path().join("out/config.echo.toml")).unwrap();
    assert_eq!(RunConfig::from_toml(&echo, dir.path()).unwrap().hash(), hash);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn echo_round_trips(radius in 0.05..0.4_f64, rate in -0.1..0.1_f64, n in 4usize..40, t_end in 0.1..2.0_f64,
                        steps in 1usize..50, identity in any::<bool>(), k in 0.1..10.0_f64) {
        let mut cfg = RunConfig::default();
        cfg.geometry.radius = radius;
        cfg.geometry.cell_resolution = n;
        cfg.transformation.rate = rate;
        if identity {
            cfg.transformation.family = FamilyName::Identity;
        }
        cfg.time.t_end = t_end;
        cfg.time.dt = t_end / steps as f64;
        cfg.inclusion.conductivity = k;
        let text = cfg.to_toml();
        let back = RunConfig::from_toml(&text, Path::new(".")).unwrap();
        prop_assert_eq!(back.to_toml(), text);
        prop_assert_eq!(back.hash(), cfg.hash());
    }
}
