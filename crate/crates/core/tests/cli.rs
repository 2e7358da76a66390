use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const SOLVE: &str = r#"
schema = 1
[solve]
phi = { kind = "power", sigma = 1.5 }
operator = "pucci-plus"
h = 0.03125
rhs = 1.0
exterior = { kind = "constant", value = 0.5 }
"#;

const EK: &str = r#"
schema = 1
[ek-sweep]
sigma_values = [1.5, 1.8]
family_size = 1
h_values = [0.03125, 0.015625]
"#;

const SCHAUDER: &str = r#"
schema = 1
[schauder]
h_values = [0.03125, 0.015625]
"#;

fn varorder(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_varorder"))
        .args(args)
        .current_dir(dir)
        .env_remove("VARORDER_OUT_DIR")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn cphi_prints_the_constant() {
    let tmp = TempDir::new().unwrap();
    let out = varorder(tmp.path(), &["cphi", "--phi-kind", "power", "--phi-params", "1.5"]);
    assert_eq!(code(&out), 0);
    let c: f64 = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
    assert!((c - 0.5).abs() < 1e-12);
    let out = varorder(tmp.path(), &["cphi", "--phi-kind", "power", "--phi-params", "1.0"]);
    let c: f64 = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
    assert!((c - 1.0).abs() < 1e-12);
}

#[test]
fn zero_data_gives_zero() {
    let tmp = TempDir::new().unwrap();
    let text = "schema = 1\n[solve]\nphi = { kind = \"power\", sigma = 0.8 }\noperator = \"linear\"\nh = 0.0625\n";
    let cfg = write(tmp.path(), "zero.toml", text);
    assert_eq!(code(&varorder(tmp.path(), &["solve", "--config", &cfg])), 0);
    let u = varorder::holder::GridFunction::load(&tmp.path().join("out/solution.csv")).unwrap();
    assert!(u.values().iter().all(|&v| v == 0.0));
}

#[test]
fn seminorm_of_affine_data_and_bad_windows() {
    let tmp = TempDir::new().unwrap();
    let u = varorder::holder::GridFunction::on_interval(-1.0, 1.0, 1.0 / 32.0, |x| 2.0 * x - 1.0, varorder::holder::Exterior::Zero).unwrap();
    let csv = tmp.path().join("affine.csv");
    u.save(&csv).unwrap();
    let csv = csv.to_str().unwrap();
    let base = ["seminorm", "--input", csv, "--modulus", "power", "--modulus-params", "0.2", "--phi-kind", "power", "--phi-params", "1.3"];
    let out = varorder(tmp.path(), &base);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["value"].as_f64().unwrap() < 1e-10);
    let out = varorder(tmp.path(), &[&base[..], &["--window", "0.5", "3.0"]].concat());
    assert_eq!(code(&out), 2);
}

#[test]
fn bad_parameters_and_usage() {
    let tmp = TempDir::new().unwrap();
    let out = varorder(tmp.path(), &["cphi", "--phi-kind", "power", "--phi-params", "2.5"]);
    assert_eq!(code(&out), 2);
    assert!(!out.stderr.is_empty());
    assert_eq!(code(&varorder(tmp.path(), &["cphi"])), 2);
    assert_eq!(code(&varorder(tmp.path(), &["frobnicate"])), 2);
    let cfg = write(tmp.path(), "bad.toml", &format!("{SOLVE}\nunknown_key = 1\n"));
    assert_eq!(code(&varorder(tmp.path(), &["solve", "--config", &cfg])), 2);
    let missing = tmp.path().join("missing.toml");
    assert_eq!(code(&varorder(tmp.path(), &["solve", "--config", missing.to_str().unwrap()])), 2);
}

#[test]
fn solve_writes_a_solution_and_seminorm_reads_it() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "solve.toml", SOLVE);
    let out = varorder(tmp.path(), &["solve", "--config", &cfg]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = tmp.path().join("out/solution.csv");
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("out/solve.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["converged"], true);
    assert_eq!(summary["nodes"], 65);

    let out = varorder(
        tmp.path(),
        &["seminorm", "--input", csv.to_str().unwrap(), "--modulus", "power", "--modulus-params", "0.5", "--window", "-0.5", "0.5"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["value"].as_f64().unwrap() > 0.0);
}

#[test]
fn iteration_cap_exits_with_one() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "solve.toml", &format!("{SOLVE}solver = {{ max_iter = 1 }}\n"));
    let out = varorder(tmp.path(), &["solve", "--config", &cfg]);
    assert_eq!(code(&out), 1, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn failed_gate_exits_with_three() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "ek.toml", "schema = 1\n[ek-sweep]\nsigma_values = [1.5]\npsi_alpha = 0.5\n");
    let out = varorder(tmp.path(), &["experiment", "--name", "ek-sweep", "--config", &cfg]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn experiments_are_reproducible() {
    let tmp = TempDir::new().unwrap();
    for (name, text) in [("ek-sweep", EK), ("schauder", SCHAUDER)] {
        let cfg = write(tmp.path(), &format!("{name}.toml"), text);
        let mut outputs = Vec::new();
        for jobs in ["1", "2"] {
            let dir = tmp.path().join(format!("{name}-{jobs}"));
            let out = Command::new(env!("CARGO_BIN_EXE_varorder"))
                .args(["--jobs", jobs, "experiment", "--name", name, "--config", &cfg])
                .current_dir(tmp.path())
                .env("VARORDER_OUT_DIR", &dir)
                .output()
                .unwrap();
            assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
            let csv = fs::read(dir.join(format!("{name}.csv"))).unwrap();
            let json = fs::read(dir.join(format!("{name}.summary.json"))).unwrap();
            outputs.push((csv, json));
        }
        assert!(outputs[0] == outputs[1], "{name} outputs differ");
        assert!(!tmp.path().join("out").exists());
    }
}
