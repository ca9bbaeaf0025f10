use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const COUNTS: &str = "group,low,mid,high\nA,15,226,4\nB,4,226,15\nC,6,196,43\n";

fn intervalmt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_intervalmt"))
        .args(args)
        .env_remove("INTERVALMT_SEED")
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn decisions(report: &Value) -> Vec<String> {
    report["outcome"]["report"]["decisions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|d| d["decision"].as_str().unwrap().to_string())
        .collect()
}

#[test]
fn analyze_counts_rejects_both_hypotheses() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "counts.csv", COUNTS);
    let out = intervalmt(&[
        "analyze",
        "--model",
        "multinomial",
        "--family",
        "change-point",
        "--procedure",
        "rsd",
        "--criticals",
        "1.645,1.96",
        "--input",
        &input,
        "--json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    assert_eq!(report["schema"], 1);
    assert_eq!(report["run"]["model"], "multinomial");
    assert_eq!(report["run"]["criticals"]["source"], "inline");
    assert_eq!(report["criticals"]["values"], serde_json::json!([1.645, 1.96]));
    assert_eq!(decisions(&report), ["reject", "reject"]);
    assert!(report.get("extrapolation").is_none());
    assert_eq!(
        report["outcome"]["trace"]["steps"][0]["split"],
        serde_json::json!([0, 1])
    );
}

#[test]
fn analyze_prints_one_based_table_and_writes_report() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "x.csv", "1\n4\n-2\n0\n");
    let criticals = write(&dir, "c.txt", "1.48 1.97 2.40\n");
    let report_path = dir.path().join("report.json");
    let out = intervalmt(&[
        "analyze",
        "--model",
        "normal",
        "--family",
        "tvc",
        "--criticals-file",
        &criticals,
        "--input",
        &input,
        "--output",
        report_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("final partition: {1,4} {2} {3}"), "{text}");
    assert!(text.contains("H(2,4)"), "{text}");
    let saved: Value = serde_json::from_str(&fs::read_to_string(report_path).unwrap()).unwrap();
    assert_eq!(saved["run"]["sided"], "two");
    assert_eq!(decisions(&saved), ["accept", "reject", "reject"]);
}

#[test]
fn generated_criticals_are_echoed() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "x.csv", "1\n4\n-2\n0\n");
    let out = intervalmt(&[
        "analyze",
        "--model",
        "normal",
        "--family",
        "tvc",
        "--criticals",
        "bg",
        "--alpha",
        "0.05",
        "--input",
        &input,
        "--json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    assert_eq!(report["criticals"]["source"], "bg");
    assert_eq!(report["criticals"]["alpha"], 0.05);
    let values: Vec<f64> = report["criticals"]["values"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(values.len(), 3);
    for (got, want) in values.iter().zip([1.48, 1.97, 2.40]) {
        assert!((got - want).abs() < 0.005, "{values:?}");
    }
}

#[test]
fn step_up_on_one_sided_multinomial_change_point_is_flagged() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "counts.csv", COUNTS);
    let out = intervalmt(&[
        "analyze",
        "--model",
        "multinomial",
        "--family",
        "change-point",
        "--procedure",
        "step-up",
        "--criticals",
        "bh",
        "--input",
        &input,
        "--json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(json(&out)["extrapolation"].is_string());
}

#[test]
fn audit_of_step_down_counterexample_exits_with_violation() {
    let out = intervalmt(&["audit", "--procedure", "step-down", "--builtin", "figure2", "--json"]);
    assert_eq!(out.status.code(), Some(3));
    let report = json(&out);
    assert_eq!(report["violations"], 1);
    assert_eq!(report["rays"][0]["violation"]["kind"], "two-sided");
    assert_eq!(report["run"]["builtin"], "figure2");

    let out = intervalmt(&["audit", "--procedure", "step-down", "--builtin", "figure1", "--json"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out)["rays"][0]["violation"]["kind"], "one-sided");
}

#[test]
fn audit_of_rsd_counterexamples_is_clean() {
    for builtin in ["figure1", "figure2"] {
        let out = intervalmt(&["audit", "--procedure", "rsd", "--builtin", builtin]);
        assert_eq!(out.status.code(), Some(0), "{builtin}");
        assert!(String::from_utf8(out.stdout).unwrap().contains("0 violation(s)"));
    }
}

#[test]
fn audit_ray_through_counts() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "counts.csv", COUNTS);
    let base = [
        "audit",
        "--model",
        "multinomial",
        "--family",
        "change-point",
        "--criticals",
        "1.645,1.96",
        "--input",
        &input,
        "--pair",
        "1,2",
        "--grid-points",
        "5",
        "--json",
    ];
    let mut args = base.to_vec();
    args.extend(["--procedure", "step-down"]);
    let out = intervalmt(&args);
    assert_eq!(out.status.code(), Some(3));
    let pattern = &json(&out)["rays"][0]["pattern"];
    assert_eq!(pattern[0], "reject");
    assert_eq!(pattern[1], "accept");

    let mut args = base.to_vec();
    args.extend(["--procedure", "rsd"]);
    assert_eq!(intervalmt(&args).status.code(), Some(0));
}

#[test]
fn certify_sweeps_every_model_and_family() {
    let out = intervalmt(&[
        "audit",
        "--procedure",
        "rsd",
        "--certify",
        "20",
        "--seed",
        "3",
        "--json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    assert_eq!(report["certification"].as_array().unwrap().len(), 9);
    assert_eq!(report["run"]["seed"], 3);

    let out = intervalmt(&[
        "audit",
        "--procedure",
        "step-down",
        "--model",
        "normal",
        "--family",
        "tvc",
        "--certify",
        "200",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn reproduce_writes_csv_and_embeds_seed_from_env() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("t5.csv");
    let out = Command::new(env!("CARGO_BIN_EXE_intervalmt"))
        .args([
            "reproduce",
            "--table",
            "5",
            "--rows",
            "1",
            "--iterations",
            "100",
            "--json",
            "--output",
        ])
        .arg(&csv)
        .env("INTERVALMT_SEED", "7")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out);
    assert_eq!(report["run"]["seed"], 7);
    assert_eq!(report["report"]["rows"][0]["row"], 1);
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(
        lines[0].starts_with("row,means_1_5,means_6_10,means_11_15,type_i_rsd"),
        "{}",
        lines[0]
    );
    assert!(lines[1].starts_with("1,0.00,0.00,0.00,"));
}

#[test]
fn reproduce_table_layout() {
    let out = intervalmt(&["reproduce", "--table", "6", "--rows", "17", "--iterations", "50"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("Table 6: k = 101, blocks of 8"), "{text}");
    assert!(text.contains("reference"));
}

#[test]
fn simulate_from_flags_and_config() {
    let out = intervalmt(&[
        "simulate",
        "--k",
        "11",
        "--block",
        "1-5:2",
        "--block",
        "6-10:-2",
        "--iterations",
        "100",
        "--json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let from_flags = json(&out);
    assert_eq!(from_flags["config"]["blocks"].as_array().unwrap().len(), 2);
    assert_eq!(from_flags["run"]["seed"], 42);

    let dir = TempDir::new().unwrap();
    let config = write(&dir, "sim.json", &from_flags["config"].to_string());
    let out = intervalmt(&["simulate", "--config", &config, "--json"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["result"], from_flags["result"]);
}

#[test]
fn usage_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "counts.csv", COUNTS);
    for args in [
        vec![
            "analyze",
            "--model",
            "multinomial",
            "--family",
            "change-point",
            "--input",
            &input,
        ],
        vec![
            "analyze",
            "--model",
            "multinomial",
            "--family",
            "change-point",
            "--criticals",
            "2,1",
            "--input",
            &input,
        ],
        vec![
            "analyze",
            "--model",
            "normal",
            "--family",
            "all-pairwise",
            "--sided",
            "one",
            "--criticals",
            "1,2",
            "--input",
            &input,
        ],
        vec!["reproduce", "--table", "7"],
        vec!["simulate", "--k", "11", "--block", "1-12:2"],
        vec!["audit"],
        vec!["frobnicate"],
    ] {
        let out = intervalmt(&args);
        assert_eq!(
            out.status.code(),
            Some(1),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn data_errors_exit_two_with_position() {
    let dir = TempDir::new().unwrap();
    let run = |name: &str, text: &str| {
        let input = write(&dir, name, text);
        intervalmt(&[
            "analyze",
            "--model",
            "multinomial",
            "--family",
            "tvc",
            "--criticals",
            "1,2",
            "--input",
            &input,
        ])
    };
    let out = run("neg.csv", "1,2,3\n4,-5,6\n7,8,9\n");
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("row 2, column 2"), "{err}");

    let out = run("empty.csv", "");
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("no data rows"));

    let missing = dir.path().join("absent.csv");
    assert!(!Path::new(&missing).exists());
    let out = intervalmt(&[
        "analyze",
        "--model",
        "normal",
        "--family",
        "tvc",
        "--criticals",
        "1,2",
        "--input",
        missing.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn help_exits_zero() {
    let out = intervalmt(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains("analyze"));
}
