//! End-to-end runs of the `confmech` binary.

use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_confmech")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

#[test]
fn exit_codes() {
    assert_eq!(code(&run(&["verify-algebra", "--model", "free", "--dim", "2", "--samples", "20"])), 0);
    assert_eq!(code(&run(&["simulate", "--dt", "-1"])), 2);
    assert_eq!(code(&run(&["simulate", "--model", "nonsense"])), 2);
    assert_eq!(code(&run(&["verify-algebra", "--format", "csv"])), 2);
    assert_eq!(code(&run(&["reduce", "--model", "calogero", "--particles", "3", "--dim", "4"])), 2);
    assert_eq!(code(&run(&["no-such-command"])), 2);
    // Catalog models all close the algebra; an unreachable tolerance fails it.
    assert_eq!(code(&run(&["verify-algebra", "--model", "higgs", "--dim", "3", "--tol", "1e-30"])), 1);
}

#[test]
fn singular_start_reports_diagnostic() {
    let out = run(&[
        "simulate", "--model", "calogero", "--particles", "3", "--q", "0,0,1", "--p", "0,0,0", "--t-end", "1",
    ]);
    assert_eq!(code(&out), 3);
    let diag: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(diag["error"], "SingularityApproach");
    assert_eq!(diag["command"], "simulate");
}

#[test]
fn simulate_csv_layout() {
    let out = run(&["simulate", "--dim", "1", "--q", "1", "--p", "0", "--dt", "0.5", "--t-end", "1"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0], "t,q1,p1,H,D,K,I");
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 7));
}

#[test]
fn csv_and_json_agree_bit_for_bit() {
    let base = ["simulate", "--model", "coulomb", "--dim", "3", "--dt", "0.01", "--t-end", "0.5", "--seed", "3"];
    let csv = run(&base);
    let mut with_json = base.to_vec();
    with_json.extend(["--format", "json"]);
    let js = json(&run(&with_json));
    let rows = js["trajectory"]["rows"].as_array().unwrap();
    let text = String::from_utf8(csv.stdout).unwrap();
    let body: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), body.len());
    for (line, row) in body.iter().zip(rows) {
        let a: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let b: Vec<f64> = row.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        assert_eq!(a.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), b.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
    }
}

#[test]
fn same_seed_same_bytes() {
    let args = ["verify-decoupling", "--model", "free", "--dim", "2", "--samples", "30", "--seed", "11"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
}

#[test]
fn config_file_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let out_path = dir.path().join("report.json");
    fs::write(&cfg, format!("model = free\ndim = 3\nsamples = 15\noutput = {}\n", out_path.display())).unwrap();
    let out = run(&["verify-algebra", "--config", cfg.to_str().unwrap(), "--dim", "2"]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let report: Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(report["config"]["model"]["dim"], 2);
    assert_eq!(report["report"]["samples"], 15);

    fs::write(&cfg, "colour = blue\n").unwrap();
    assert_eq!(code(&run(&["verify-algebra", "--config", cfg.to_str().unwrap()])), 2);
}

#[test]
fn report_keys() {
    let alg = json(&run(&["verify-algebra", "--samples", "10"]));
    for key in ["tool_version", "command", "seed", "config", "report"] {
        assert!(alg.get(key).is_some(), "{key}");
    }
    assert_eq!(alg["report"]["relations"].as_array().unwrap().len(), 3);

    let one = run(&["verify-decoupling", "--dim", "1", "--samples", "20"]);
    assert_eq!(code(&one), 0);
    let one = json(&one);
    assert_eq!(one["report"]["verdict"], "canonical");
    assert!(one["report"]["paper_sign_notes"].as_array().is_some());

    let two = run(&["verify-decoupling", "--model", "free", "--dim", "2", "--samples", "20"]);
    assert_eq!(code(&two), 0);
    let two = json(&two);
    assert_eq!(two["report"]["verdict"], "non-canonical");
    assert_eq!(two["pass"], true);

    let red = json(&run(&["reduce", "--model", "higgs", "--dim", "3", "--q", "0.3,0.4,1", "--p", "0.1,0,0.2"]));
    for key in ["H", "D", "K", "I", "reduced", "unit_vector", "angular_potential", "counterpart", "klein"] {
        assert!(red["reduction"].get(key).is_some(), "{key}");
    }

    let models = json(&run(&["models"]));
    assert_eq!(models["models"].as_array().unwrap().len(), 8);
}

#[test]
fn exact_stops_at_fall_time() {
    let out = run(&["exact", "--kappa", "-2", "--q", "1", "--p", "-2.449489742783178", "--dt", "0.05", "--t-end", "1"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let last: f64 = text.lines().last().unwrap().split(',').next().unwrap().parse().unwrap();
    assert!(last < (6.0_f64.sqrt() - 2.0) / 2.0);
    assert_eq!(text.lines().next().unwrap(), "t,r2,p_r,T");
}
