use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn inducer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_inducer")).args(args).env("INDUCER_THREADS", "1").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("inducer-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&d);
    fs::create_dir_all(&d).unwrap();
    d
}

fn induce_small(out: &Path, seed: &str) -> Output {
    inducer(&[
        "induce", "--map", "m0", "--eta", "0.000244140625", "--seeds", "3", "--rounds", "6", "--max-unresolved", "1",
        "--seed", seed, "--out", out.to_str().unwrap(),
    ])
}

#[test]
fn verify_catalog_doubling_map() {
    let dir = scratch("verify");
    let o = inducer(&["verify", "--map", "M0", "--eta", "0.0009765625", "--boxes", "10", "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: toml::Table = fs::read_to_string(dir.join("verify.toml")).unwrap().parse().unwrap();
    let text = report.to_string();
    assert!(text.contains("sigma_hat"));
}

#[test]
fn bad_specs_are_config_errors() {
    let dir = scratch("specs");
    let doubling = inducer::dynamics::catalog::spec("M0").unwrap().text().to_string();

    // sigma not below lambda^-n0 - 1 = 3
    let loose = dir.join("loose.toml");
    fs::write(&loose, doubling.replace("sigma = 1.0", "sigma = 3.0")).unwrap();
    let o = inducer(&["verify", "--map", loose.to_str().unwrap(), "--eta", "0.0009765625"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("sigma"));

    let broken = dir.join("broken.toml");
    fs::write(&broken, doubling.replace("forward = [\"2*x\"]", "forward = [\"2*(x\"]")).unwrap();
    let o = inducer(&["verify", "--map", broken.to_str().unwrap(), "--eta", "0.0009765625"]);
    assert_eq!(code(&o), 2);
    // errors carry a line:column position
    let err = String::from_utf8_lossy(&o.stderr).to_string();
    assert!(err.split(':').any(|p| p.trim().parse::<usize>().is_ok()), "{err}");

    let o = inducer(&["verify", "--map", "M9", "--eta", "0.01"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn recurrent_mode_without_z_is_a_usage_error() {
    let dir = scratch("usage");
    let o = inducer(&["induce", "--map", "m0", "--eta", "0.0009765625", "--mode", "recurrent", "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let o = inducer(&["induce", "--map", "m0", "--eta", "0.3", "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let o = inducer(&["induce", "--bogus"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn induce_is_deterministic_and_audits_clean() {
    let a = scratch("det-a");
    let b = scratch("det-b");
    let o = induce_small(&a, "3");
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(code(&induce_small(&b, "3")), 0);
    for f in ["scheme.txt", "tail.csv", "audit.csv", "manifest.toml"] {
        assert!(a.join(f).exists(), "{f}");
    }
    assert_eq!(fs::read(a.join("scheme.txt")).unwrap(), fs::read(b.join("scheme.txt")).unwrap());

    let o = inducer(&["audit", a.join("scheme.txt").to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(!String::from_utf8_lossy(&o.stdout).contains("FAIL"));
}

#[test]
fn audit_reports_truncation_and_planted_faults() {
    let dir = scratch("audit");
    assert_eq!(code(&induce_small(&dir, "0")), 0);
    let text = fs::read_to_string(dir.join("scheme.txt")).unwrap();

    let cut = dir.join("cut.txt");
    fs::write(&cut, &text[..text.len() / 2]).unwrap();
    let o = inducer(&["audit", cut.to_str().unwrap()]);
    assert_eq!(code(&o), 5);
    assert!(String::from_utf8_lossy(&o.stderr).contains("schema"));

    // decrement the return time of the first cell with tau > 1
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let start = lines.iter().position(|l| l.starts_with("cells ")).unwrap() + 1;
    let k = lines[start..].iter().position(|l| l.split(' ').nth(1).unwrap().parse::<usize>().unwrap() > 1).unwrap();
    let mut f: Vec<String> = lines[start + k].split(' ').map(String::from).collect();
    f[1] = (f[1].parse::<usize>().unwrap() - 1).to_string();
    lines[start + k] = f.join(" ");
    let bad = dir.join("bad.txt");
    fs::write(&bad, lines.join("\n") + "\n").unwrap();
    let o = inducer(&["audit", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 5);
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.contains(&format!("cell {k}:")), "{out}");
}
