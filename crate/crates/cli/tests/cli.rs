use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

const FREE_HALF: &str = r#"
seed = 1
[model]
s = 0.5
hbar = 0.05
[distortion]
beta = 0.05
[grid]
r_min = 0.5
r_max = 30.0
n = 800
[virial]
energy = -1.0
mu = "auto"
"#;

fn run(dir: &TempDir, config: &str, args: &[&str]) -> (Output, PathBuf) {
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, config).unwrap();
    let out = dir.path().join(format!("out_{}", args.join("_")));
    let output = Command::new(env!("CARGO_BIN_EXE_resfree"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    (output, out)
}

fn result(out: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(out.join("result.json")).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn free_half_certifies() {
    let dir = TempDir::new().unwrap();
    let (o, out) = run(&dir, FREE_HALF, &["certify"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = result(&out);
    assert_eq!(r["pass"], true);
    assert_eq!(r["certificate"]["pass"], true);
    assert!(r["min_sigma"].as_f64().unwrap() > 0.0);
    assert_eq!(r["config"]["virial"]["mu"], "auto");
    assert!(out.join("scan_l0.csv").exists() && out.join("eigen_l0.json").exists() && out.join("timings.json").exists());
}

#[test]
fn shallow_oscillator_is_rejected_at_virial_stage() {
    let cfg = FREE_HALF.replace("s = 0.5", "s = 1.0").replace("energy = -1.0", "energy = -0.4");
    let dir = TempDir::new().unwrap();
    let (o, out) = run(&dir, &cfg, &["certify"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let r = result(&out);
    assert_eq!(r["pass"], false);
    assert_eq!(r["stage"], "virial");
    assert!(r["rejection"].as_str().unwrap().contains("E < -1/2"));
}

#[test]
fn rectangle_on_the_essential_line_is_flagged() {
    let cfg = FREE_HALF.replace("n = 800", "n = 300")
        + "[scan]\nre_min = -1.2\nre_max = -0.8\nim_min = -0.04\nim_max = -0.01\nn_re = 5\nn_im = 4\n";
    let dir = TempDir::new().unwrap();
    let (o, out) = run(&dir, &cfg, &["certify"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let r = result(&out);
    assert_eq!(r["pass"], false);
    let msg = r["sectors"][0]["proximity"].as_str().unwrap();
    assert!(msg.contains("essential-line proximity"), "{msg}");
}

#[test]
fn scan_writes_one_row_per_point() {
    let cfg = FREE_HALF.replace("n = 800", "n = 200") + "[scan]\nn_re = 7\nn_im = 4\n";
    let dir = TempDir::new().unwrap();
    let (o, out) = run(&dir, &cfg, &["scan"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(out.join("scan_l0.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("re_z,im_z,sigma_min"));
    assert_eq!(lines.count(), 28);
}

#[test]
fn distort_at_zero_theta_is_identity() {
    let cfg = FREE_HALF.replace("beta = 0.05", "beta = 0.0").replace("n = 800", "n = 101");
    let dir = TempDir::new().unwrap();
    let (o, out) = run(&dir, &cfg, &["distort"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(out.join("distort.csv")).unwrap();
    let mut rows = 0;
    for line in text.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(v[1], v[0]);
        assert_eq!(v[2], 0.0);
        assert_eq!((v[5], v[6]), (1.0, 0.0));
        rows += 1;
    }
    assert_eq!(rows, 101);
}

#[test]
fn distort_reports_seeded_roundtrip_for_real_theta() {
    let cfg = FREE_HALF.replace("beta = 0.05", "beta = 0.0\ntheta_re = 0.1").replace("n = 800", "n = 50");
    let dir = TempDir::new().unwrap();
    let (o, out) = run(&dir, &cfg, &["distort", "--seed", "9"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = result(&out);
    assert_eq!(r["config"]["seed"], 9);
    assert!(r["roundtrip_max_relative_error"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn weyl_residuals_decrease() {
    let dir = TempDir::new().unwrap();
    let (o, out) = run(&dir, FREE_HALF, &["weyl"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(result(&out)["all_decreasing"], true);
    let text = fs::read_to_string(out.join("weyl.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 3 * 5);
}

#[test]
fn classical_trajectory_escapes() {
    let dir = TempDir::new().unwrap();
    let (o, out) = run(&dir, FREE_HALF, &["classical"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,r,g,h"));
    let r: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(r.windows(2).all(|w| w[1] > w[0]));
    assert!(result(&out)["max_energy_drift"].as_f64().unwrap() < 1e-6);
}

#[test]
fn virial_reports_support_failure_in_oscillator_band() {
    let cfg = FREE_HALF.replace("s = 0.5", "s = 1.0");
    let dir = TempDir::new().unwrap();
    let (o, out) = run(&dir, &cfg, &["virial"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let failures = result(&out)["certificate"]["failures"].to_string();
    assert!(failures.contains("(i)"), "{failures}");
}

#[test]
fn invalid_fields_exit_with_validation_code() {
    let dir = TempDir::new().unwrap();
    let (o, _) = run(&dir, &FREE_HALF.replace("hbar = 0.05", "hbar = -0.05"), &["certify"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("model.hbar"), "{}", stderr(&o));
    let (o, _) = run(&dir, &FREE_HALF.replace("[grid]", "[grid]\nspacing = 1.0"), &["scan"]);
    assert_eq!(o.status.code(), Some(3));
    let (o, _) = run(&dir, FREE_HALF, &["certify", "--threads", "0"]);
    assert_eq!(o.status.code(), Some(3));
}

fn snapshot(out: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(out)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "timings.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn reruns_are_bit_identical() {
    // top-level keys must precede the tables
    let cfg = format!("sectors = [0, 1]\n{}", FREE_HALF.replace("n = 800", "n = 300"));
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let (oa, out_a) = run(&a, &cfg, &["certify"]);
    let (ob, out_b) = run(&b, &cfg, &["certify", "--threads", "1"]);
    assert_eq!(oa.status.code(), ob.status.code());
    let (sa, sb) = (snapshot(&out_a), snapshot(&out_b));
    assert_eq!(sa.len(), 5);
    assert_eq!(sa, sb);
}
