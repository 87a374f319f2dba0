//! End-to-end runs of the `levy-dd` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_levy-dd"));
    cmd.env_remove("LEVY_DD_THREADS");
    cmd
}

fn sample_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn run(config: &Path, out: &Path, args: &[&str]) -> Output {
    bin()
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &TempDir, text: &str) -> PathBuf {
    let path = dir.path().join("run.ini");
    fs::write(&path, text).unwrap();
    path
}

/// `(label, arg, value)` rows of a laws or exit CSV.
fn read_rows(path: &Path) -> Vec<(String, f64, f64)> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            (
                r[0].to_string(),
                r[1].parse().unwrap(),
                r[2].parse().unwrap(),
            )
        })
        .collect()
}

fn find(rows: &[(String, f64, f64)], label: &str, arg: f64) -> f64 {
    rows.iter()
        .find(|(l, a, _)| l == label && *a == arg)
        .unwrap_or_else(|| panic!("no row {label} at {arg}"))
        .2
}

const BM: &str = "\
[model]
family = brownian_drift
mu = 0
sigma = 1
gamma = 0.5
";

#[test]
fn scale_table_has_the_hyperbolic_values() {
    let dir = TempDir::new().unwrap();
    let out = run(
        &sample_config("standard_bm.ini"),
        dir.path(),
        &["scale", "--compare"],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fs::read_to_string(dir.path().join("scale.csv")).unwrap();
    assert!(text.starts_with("# model="));
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    assert_eq!(reader.headers().unwrap(), vec!["x", "W", "Wprime", "Z"]);
    let row = reader
        .records()
        .map(|r| r.unwrap())
        .find(|r| r[0].parse::<f64>().unwrap() == 1.0)
        .expect("x = 1 row");
    let w: f64 = row[1].parse().unwrap();
    let z: f64 = row[3].parse().unwrap();
    assert!((w - 2.0 * 1f64.sinh()).abs() < 1e-12);
    assert!((z - 1f64.cosh()).abs() < 1e-12);
    assert!(dir.path().join("scale_compare.csv").exists());
    assert!(String::from_utf8_lossy(&out.stdout).contains("max |W_closed_form - W_inverted|"));
}

#[test]
fn law_and_exit_sweeps_hold_the_reference_values() {
    let dir = TempDir::new().unwrap();
    let config = sample_config("standard_bm.ini");
    assert!(run(&config, dir.path(), &["law"]).status.success());
    let rows = read_rows(&dir.path().join("laws.csv"));
    let d = 1.0f64;
    assert!((find(&rows, "pre_sup", 1.0) - (-(1.0 / d.tanh() - 1.0)).exp()).abs() < 1e-9);
    assert!((find(&rows, "post_sup", 2.0) - (1.0 - 1f64.tanh())).abs() < 1e-9);
    assert!((find(&rows, "post_inf", 1.0) - (1.0 - 1f64.tanh())).abs() < 1e-9);
    assert!((find(&rows, "post_inf_sup", 2.0) - 1f64.tanh()).abs() < 1e-9);
    assert!((find(&rows, "alpha", 1.0) - 1.0 / 1f64.sinh()).abs() < 1e-9);
    assert!((find(&rows, "joint", 1.0) - 0.35195).abs() < 5e-6);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("laws.json")).unwrap()).unwrap();
    assert_eq!(summary["rows"], rows.len());

    assert!(run(&config, dir.path(), &["exit"]).status.success());
    let rows = read_rows(&dir.path().join("exit.csv"));
    // Z(x) - Z(b) W(x)/W(b) for BM with b = 2
    let x = 1.0f64;
    let expected = x.cosh() - 2f64.cosh() * x.sinh() / 2f64.sinh();
    assert!((find(&rows, "two_sided", 1.0) - expected).abs() < 1e-9);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        &dir,
        &format!(
            "{BM}
[law.pre]
id = pre_sup_mdd_cdf
b = 1
arg = 0.5..2:4

[sim]
dt = 1e-2
n_paths = 3000
seed = 4
"
        ),
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for (out, threads) in [(&a, "1"), (&b, "3")] {
        for cmd in ["law", "simulate"] {
            let status = bin()
                .arg("--config")
                .arg(&config)
                .arg("--out")
                .arg(out)
                .arg(cmd)
                .env("LEVY_DD_THREADS", threads)
                .output()
                .unwrap()
                .status;
            assert!(status.success());
        }
    }
    for file in ["laws.csv", "laws.json", "paths.csv"] {
        let (x, y) = (
            fs::read(a.join(file)).unwrap(),
            fs::read(b.join(file)).unwrap(),
        );
        assert!(!x.is_empty());
        assert!(x == y, "{file} differs between runs");
    }
    let seed5 = dir.path().join("c");
    assert!(run(&config, &seed5, &["--seed", "5", "simulate"])
        .status
        .success());
    assert_ne!(
        fs::read(a.join("paths.csv")).unwrap(),
        fs::read(seed5.join("paths.csv")).unwrap()
    );
}

#[test]
fn printed_variants_fail_verification() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        &dir,
        &format!(
            "{BM}
[law.duration]
id = duration_lt_post_sup
arg = 1
allowance = 0.05

[law.intermediate]
id = intermediate_mdd_cdf
gap = 2
arg = 1
band = 0.1
allowance = 0.08

[sim]
dt = 1e-2
n_paths = 200000
seed = 1
"
        ),
    );
    let good = run(&config, dir.path(), &["verify"]);
    let stdout = String::from_utf8_lossy(&good.stdout);
    assert_eq!(good.status.code(), Some(0), "{stdout}");

    let bad = run(&config, dir.path(), &["--printed", "verify"]);
    let stdout = String::from_utf8_lossy(&bad.stdout);
    assert_eq!(bad.status.code(), Some(1), "{stdout}");
    assert!(stdout.contains("FAIL duration"), "{stdout}");
    assert!(stdout.contains("FAIL intermediate"), "{stdout}");
    let report = fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert!(report.contains("duration_lt_post_sup_printed"));
}

#[test]
fn thin_conditional_sample_exits_with_code_two() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        &dir,
        &format!(
            "{BM}
[law.intermediate]
id = intermediate_mdd_cdf
gap = 2
arg = 1

[sim]
dt = 1e-2
n_paths = 2000
seed = 1
"
        ),
    );
    let out = run(&config, dir.path(), &["verify"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("insufficient conditional sample for [law.intermediate]"),
        "{stderr}"
    );
}

#[test]
fn config_errors_name_the_line() {
    let dir = TempDir::new().unwrap();
    let config = write_config(&dir, &format!("{BM}\n[sim]\ndt = 1e-3\nsteps = 4\n"));
    let out = run(&config, dir.path(), &["law"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 9"), "{stderr}");

    let out = bin().arg("law").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
