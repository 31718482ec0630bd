use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bridge-lab")).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn error(args: &[&str], code: i32) -> Value {
    let out = run(args);
    assert_eq!(out.status.code(), Some(code), "{args:?}");
    assert!(out.stdout.is_empty());
    serde_json::from_slice(&out.stderr).unwrap()
}

fn temp_path(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("bridge-lab-{}-{name}", std::process::id()))
}

#[test]
fn spherical_profile_passes_its_invariants() {
    let v = json(&["profile", "--n", "3", "--T-ratio", "0.5"]);
    assert_eq!(v["schema"], "bridge-lab/1");
    assert_eq!(v["command"], "profile");
    assert_eq!(v["result"]["profile"]["branch"], "spherical");
    assert_eq!(v["invariants"]["all_pass"], true);
    assert!(v["invariants"]["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true));
    let sel = &v["result"]["selection"];
    assert!((sel["t_ratio"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn threshold_trace_is_a_domain_error() {
    let e = error(&["profile", "--n", "3", "--T-ratio", "1.0"], 2);
    assert_eq!(e["error"], "DegenerateBridgeError");
    assert_eq!(e["exit_code"], 2);
    assert!(e["message"].as_str().unwrap().contains("threshold"));
}

#[test]
fn hyperbolic_shift_lies_above_the_threshold() {
    let v = json(&["profile", "--n", "4", "--t", "-2", "--branch", "hyperbolic"]);
    let sel = &v["result"]["selection"];
    assert_eq!(sel["above_escobar"], true);
    assert!(sel["trace"].as_f64().unwrap() > sel["t_e"].as_f64().unwrap());
    let e = error(&["profile", "--n", "4", "--t", "-0.5", "--branch", "hyperbolic"], 2);
    assert_eq!(e["exit_code"], 2);
}

#[test]
fn gap_is_positive_with_a_zero_kernel_bottom() {
    let v = json(&["gap", "--n", "3", "--T-ratio", "0.5", "--l-max", "10"]);
    let s = &v["result"]["spectral"];
    assert!(s["gap"].as_f64().unwrap() > 0.0);
    assert_eq!(s["gap_positive"], true);
    assert!(s["kernel"]["unconstrained_bottom"].as_f64().unwrap().abs() < 1e-7);
    assert_eq!(s["per_sector"].as_array().unwrap().len(), 11);
}

#[test]
fn kernel_residuals_are_small() {
    let v = json(&["kernel", "--n", "5", "--T-ratio", "2.0"]);
    assert_eq!(v["invariants"]["all_pass"], true);
    let d = &v["result"]["diagnostics"];
    assert_eq!(d["dimension"], 5);
    for key in ["shooting_mismatch", "profile_deviation", "robin_residual"] {
        assert!(d[key].as_f64().unwrap() < 1e-8, "{key}");
    }
}

#[test]
fn stability_coefficient_clears_half_the_gap() {
    let v = json(&["stability", "--n", "3", "--T-ratio", "0.5", "--sector", "2"]);
    let s = &v["result"]["stability"];
    let fitted = s["fitted_coefficient"].as_f64().unwrap();
    assert!(fitted >= 0.99 * s["gap_half"].as_f64().unwrap());
    assert_eq!(s["ell"], 2);
    assert_eq!(s["sweep"].as_array().unwrap().len(), 7);
}

#[test]
fn selector_flags_conflict() {
    let out = run(&["profile", "--T-ratio", "0.5", "--T", "1.0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let e = error(&["profile", "--T-ratio", "0.5", "--output", "/nonexistent/dir/out.json"], 4);
    assert_eq!(e["error"], "IoError");
}

#[test]
fn output_file_matches_standard_output() {
    let path = temp_path("profile.json");
    let args = ["profile", "--n", "4", "--T-ratio", "0.3"];
    let stdout = run(&args).stdout;
    let mut with_file = args.to_vec();
    let p = path.to_str().unwrap();
    with_file.extend(["--output", p]);
    let out = run(&with_file);
    assert!(out.status.success());
    let written = std::fs::read(&path).unwrap();
    std::fs::remove_file(&path).ok();
    let a: Value = serde_json::from_slice(&stdout).unwrap();
    let mut b: Value = serde_json::from_slice(&written).unwrap();
    assert_eq!(b["config"]["output"], p);
    b["config"]["output"] = Value::Null;
    assert_eq!(a, b);
}

#[test]
fn csv_has_metadata_and_a_crlf_table() {
    let out = run(&["curve", "--n", "3", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let (meta, table): (Vec<&str>, Vec<&str>) = text.split_inclusive('\n').partition(|l| l.starts_with('#'));
    assert!(meta[0].starts_with("# schema: bridge-lab/1"));
    assert!(table.iter().all(|l| l.ends_with("\r\n")));
    let body: String = table.concat();
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let width = reader.headers().unwrap().len();
    let mut rows = 0;
    for record in reader.records() {
        let record = record.unwrap();
        assert_eq!(record.len(), width);
        for field in record.iter().filter(|f| f.contains('e') && f.parse::<f64>().is_ok()) {
            // 17 significant digits in scientific notation.
            let mantissa = field.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.chars().filter(|c| c.is_ascii_digit()).count(), 17, "{field}");
        }
        rows += 1;
    }
    assert!(rows > 10);
}

#[test]
fn runs_are_byte_identical() {
    for args in [
        &["spectrum", "--n", "3", "--T-ratio", "1.5", "--count", "3"][..],
        &["oracle", "--n", "3", "--T-ratio", "0.5", "--samples", "20000", "--pairs", "2"][..],
    ] {
        let a = run(args);
        let b = run(args);
        assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
        assert_eq!(a.stdout, b.stdout);
    }
}
