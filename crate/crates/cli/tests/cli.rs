use std::path::{Path, PathBuf};
use std::process::Command;

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_chaintrunc"))
}

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, json).unwrap();
    p
}

fn run(sub: &str, config: &Path, out: &Path, extra: &[&str]) -> (i32, String) {
    let o = bin()
        .arg(sub)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap();
    let text =
        String::from_utf8_lossy(&o.stdout).into_owned() + &String::from_utf8_lossy(&o.stderr);
    (o.status.code().unwrap(), text)
}

const RANDOM: &str = r#"{"model": {"kind": "random", "modes": 8}, "truncations": [1, 2],
    "grid": {"t_max": 1.0, "samples": 41}, "seed": 5}"#;

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn build_chain_writes_table_and_diagnostics() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", RANDOM);
    let out = dir.path().join("chain.csv");
    let (code, msg) = run("build-chain", &cfg, &out, &[]);
    assert_eq!(code, 0, "{msg}");
    let table = read(&out);
    assert!(table.starts_with("site,frequency,coupling\n"));
    assert_eq!(table.lines().count(), 9);
    assert!(!table.contains('\r'));
    let diag = read(&dir.path().join("chain.csv.diag.csv"));
    for line in diag.lines().skip(1).take(4) {
        let v: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(v <= 1e-9, "{line}");
    }
    assert!(dir.path().join("chain.csv.config.json").exists());
}

#[test]
fn large_chain_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"model": {"kind": "random", "modes": 32}, "grid": {"t_max": 1.0, "samples": 2}}"#,
    );
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    assert_eq!(run("build-chain", &cfg, &a, &["--seed", "11"]).0, 0);
    assert_eq!(run("build-chain", &cfg, &b, &["--seed", "11"]).0, 0);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(run("build-chain", &cfg, &b, &["--seed", "12"]).0, 0);
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn resolved_config_reproduces_the_run() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", RANDOM);
    let first = dir.path().join("first.csv");
    assert_eq!(
        run("bound", &cfg, &first, &["--samples", "31", "--tmax", "0.7"]).0,
        0
    );
    let resolved = dir.path().join("first.csv.config.json");
    let second = dir.path().join("second.csv");
    assert_eq!(run("bound", &resolved, &second, &[]).0, 0);
    assert_eq!(read(&first), read(&second));
    assert_eq!(read(&first).lines().count(), 1 + 2 * 31);
}

#[test]
fn every_command_succeeds_on_a_small_model() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"model": {"kind": "geometric", "modes": 4, "omega_min": 0.8, "ratio": 1.4,
                      "coupling": {"law": "power", "scale": 0.3, "exponent": 0.5}},
            "system_frequency": 2.5, "truncations": [1, 4], "grid": {"t_max": 3.0, "samples": 31},
            "tolerances": [1e-2, 1e-6],
            "sweep": {"modes": [2, 4], "truncations": [1], "temperatures": [0.5, 2.0]}}"#,
    );
    for sub in [
        "build-chain",
        "simulate",
        "kernels",
        "bound",
        "min-modes",
        "sweep",
    ] {
        let out = dir.path().join(format!("{sub}.csv"));
        let (code, msg) = run(sub, &cfg, &out, &[]);
        assert_eq!(code, 0, "{sub}: {msg}");
        assert!(read(&out).lines().count() > 1);
    }
    assert_eq!(
        read(&dir.path().join("sweep.csv.timings.csv"))
            .lines()
            .count(),
        5
    );
    let sim = read(&dir.path().join("simulate.csv"));
    assert!(sim.starts_with("t,x_full,x_n1,x_n4,x_volterra,abs_error\n"));
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("o.csv");
    assert_eq!(
        run("simulate", &dir.path().join("missing.json"), &out, &[]).0,
        1
    );
    let bad = write_config(
        dir.path(),
        "bad.json",
        r#"{"model": {"kind": "random", "modes": 2}}"#,
    );
    assert_eq!(run("simulate", &bad, &out, &[]).0, 2);
    let neg = write_config(dir.path(), "neg.json", RANDOM);
    assert_eq!(run("simulate", &neg, &out, &["--samples", "1"]).0, 2);
    let unstable = write_config(
        dir.path(),
        "u.json",
        r#"{"model": {"kind": "explicit", "omega": [1.0, 2.0], "couplings": [1.0, 1.0]},
            "system_frequency": 0.5, "grid": {"t_max": 1.0, "samples": 11}}"#,
    );
    let (code, msg) = run("simulate", &unstable, &out, &[]);
    assert_eq!(code, 4);
    assert!(msg.contains("non-positive eigenvalue"), "{msg}");
    let failing = write_config(
        dir.path(),
        "s.json",
        r#"{"model": {"kind": "random", "modes": 3}, "grid": {"t_max": 1.0, "samples": 11},
            "sweep": {"modes": [2], "truncations": [5], "temperatures": [1.0]}}"#,
    );
    assert_eq!(run("sweep", &failing, &out, &[]).0, 5);
}
