use std::path::{Path, PathBuf};
use std::process::Command;

use bss_core::bss::planted_beta;
use bss_core::designs::DesignSpec;
use bss_core::model::{DesignMatrix, LinearInstance};
use serde_json::Value;

struct Scratch(PathBuf);

impl Scratch {
    fn new(tag: &str) -> Self {
        let dir = std::env::temp_dir().join(format!("bss-cli-{tag}-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        Scratch(dir)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }
}

impl Drop for Scratch {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

fn bss(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_bss"))
        .args(args)
        .output()
        .unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn write_vector(path: &Path, v: &[f64]) {
    let text: String = v.iter().map(|x| format!("{x}\n")).collect();
    std::fs::write(path, text).unwrap();
}

fn fixture(dir: &Scratch) -> (PathBuf, PathBuf, PathBuf) {
    let design = DesignSpec::block(6, 0.2, 0.3, 5)
        .unwrap()
        .sample(40)
        .unwrap();
    let beta = planted_beta(6, 2, 1.0);
    let inst = LinearInstance::with_noise(design.clone(), beta.clone(), 0.5, 8).unwrap();
    let (x, b, y) = (dir.path("x.csv"), dir.path("beta.csv"), dir.path("y.csv"));
    design.save(&x).unwrap();
    write_vector(&b, beta.as_slice());
    write_vector(&y, inst.y.as_slice());
    (x, b, y)
}

#[test]
fn solve_recovers_support() {
    let dir = Scratch::new("solve");
    let (x, _, y) = fixture(&dir);
    let (code, out, _) = bss(&[
        "solve",
        "--design",
        x.to_str().unwrap(),
        "--response",
        y.to_str().unwrap(),
        "--s-hat",
        "2",
    ]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["best"], serde_json::json!([0, 1]));
}

#[test]
fn margins_report_is_json() {
    let dir = Scratch::new("margins");
    let (x, b, _) = fixture(&dir);
    let (code, out, err) = bss(&[
        "margins",
        "--design",
        x.to_str().unwrap(),
        "--beta",
        b.to_str().unwrap(),
        "--sigma",
        "1.0",
        "--s-hat",
        "2",
    ]);
    assert_eq!(code, 0, "{err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!(v["tau_star"].as_f64().unwrap() > 0.0);
    assert!(v["tau_hat"].as_f64().unwrap() >= v["tau_star"].as_f64().unwrap());
    assert_eq!(v["per_overlap"].as_array().unwrap().len(), 3);

    let (code, out, _) = bss(&[
        "complexity",
        "--design",
        x.to_str().unwrap(),
        "--beta",
        b.to_str().unwrap(),
        "--overlap",
        "0",
        "--s-hat",
        "2",
    ]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["overlap"], serde_json::json!([0]));
}

#[test]
fn glm_command_runs_both_families() {
    let dir = Scratch::new("glm");
    let (x, b, _) = fixture(&dir);
    for family in ["linear", "logistic"] {
        let (code, out, err) = bss(&[
            "glm",
            "--design",
            x.to_str().unwrap(),
            "--beta",
            b.to_str().unwrap(),
            "--family",
            family,
            "--seed",
            "3",
            "--s-hat",
            "2",
        ]);
        assert_eq!(code, 0, "{family}: {err}");
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["margins"]["family"], family);
        assert!(v["bss"]["best"].is_array());
    }
    let (code, _, err) = bss(&[
        "glm",
        "--design",
        x.to_str().unwrap(),
        "--beta",
        b.to_str().unwrap(),
        "--family",
        "logistic",
    ]);
    assert_eq!(code, 2);
    assert_eq!(err.lines().count(), 1);
}

#[test]
fn malformed_input_exits_two_with_one_line() {
    let dir = Scratch::new("bad");
    let bad = dir.path("bad.csv");
    std::fs::write(&bad, "1,2\n3\n").unwrap();
    let (code, _, err) = bss(&[
        "solve",
        "--design",
        bad.to_str().unwrap(),
        "--response",
        bad.to_str().unwrap(),
        "--s-hat",
        "1",
    ]);
    assert_eq!(code, 2);
    assert_eq!(err.lines().count(), 1, "{err}");

    let cfg = dir.path("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"experiment":"recovery","c_values":[0.9],"r_values":[0.1],"n":50,"p":30,"reps":1}"#,
    )
    .unwrap();
    let (code, _, err) = bss(&["simulate", "--config", cfg.to_str().unwrap(), "--seed", "1"]);
    assert_eq!(code, 2);
    assert!(err.contains("c^2 < r + (1-r)/(p-1)"), "{err}");
}

#[test]
fn dumped_design_reloads_bit_identical() {
    let dir = Scratch::new("dump");
    let cfg = dir.path("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"experiment":"recovery","c_values":[0.3],"r_values":[0.4],"n":30,"p":8,"reps":2}"#,
    )
    .unwrap();
    let dump = dir.path("design.csv");
    let (code, _, err) = bss(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "12",
        "--dump-design",
        dump.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let loaded = DesignMatrix::load(&dump).unwrap();
    let seed = bss_core::experiments::cell_seed(12, 0.3, 0.4, 0);
    let expected = DesignSpec::block(8, 0.3, 0.4, seed)
        .unwrap()
        .normalized(true)
        .sample(30)
        .unwrap();
    let same = loaded
        .matrix()
        .iter()
        .zip(expected.matrix().iter())
        .all(|(a, b)| a.to_bits() == b.to_bits());
    assert!(same);
}

#[test]
fn simulate_is_byte_identical_across_threads() {
    let dir = Scratch::new("threads");
    let cfg = dir.path("cfg.json");
    std::fs::write(&cfg, r#"{"experiment":"complexity","c_values":[0.2],"r_values":[0.1,0.5],"n":200,"p":12,"reps":3}"#).unwrap();
    let run = |threads: &str, prefix: &str| {
        let out = dir.path(prefix);
        let report = dir.path(&format!("{prefix}.json"));
        let (code, _, err) = bss(&[
            "--threads",
            threads,
            "--output",
            report.to_str().unwrap(),
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            "5",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{err}");
        (
            std::fs::read_to_string(report)
                .unwrap()
                .replace(prefix, "P"),
            std::fs::read(dir.path(&format!("{prefix}.csv"))).unwrap(),
        )
    };
    assert_eq!(run("1", "one"), run("8", "eight"));
}

#[test]
fn validate_block_design_example_exits_zero() {
    let (code, out, err) = bss(&[
        "validate", "--c", "0.5", "--r", "0.5", "--n", "4000", "--p", "50", "--seeds", "20",
    ]);
    assert_eq!(code, 0, "{out}{err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["passed"], true);
}

#[test]
fn validate_small_n_fails_with_band_shown() {
    let (code, out, _) = bss(&[
        "validate", "--c", "0.6", "--r", "0.5", "--n", "12", "--p", "40", "--seeds", "3",
    ]);
    assert!(code == 0 || code == 1);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!(v["summary"]["band"].as_f64().unwrap() > 0.0);
}
