use std::collections::BTreeMap;
use std::io::Write;
use std::process::{Command, Output, Stdio};

use serde_json::{json, Value};

use furstenberg::certificate::{build_example, two_gen_log_m, Family, VERDICT_PREFIX};
use furstenberg::circle::{order_k_detail, CircleMeasure};
use furstenberg::Error;
use furstenberg_cli::{parse_config, parse_measure_text, MeasureInput, RunConfig, BUILD_ID, SCHEMA_VERSION};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_furstenberg"));
    for (k, _) in std::env::vars() {
        if k.starts_with("FURSTENBERG_") {
            c.env_remove(k);
        }
    }
    c
}

fn run(args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = bin()
        .args(args)
        .stdin(if stdin.is_some() { Stdio::piped() } else { Stdio::null() })
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    if let Some(s) = stdin {
        child.stdin.take().unwrap().write_all(s.as_bytes()).unwrap();
    }
    child.wait_with_output().unwrap()
}

fn json_out(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stderr)))
}

const TWO_GEN_3: &str = r#"{"atoms":[{"m":[["4/5","-3/5"],["3/5","4/5"]],"w":"1/2"},{"m":[["28/27","0"],["0","27/28"]],"w":"1/2"}]}"#;

#[test]
fn parses_the_two_gen_fixture() {
    let spec = parse_measure_text(TWO_GEN_3).unwrap();
    let want = build_example(&Family::TwoGen { n: 3 }).unwrap();
    assert_eq!(spec.exact_matrices().unwrap(), want.exact_matrices().unwrap());
}

#[test]
fn rejects_bad_weights_and_determinants() {
    let weights = r#"{"atoms":[{"m":[["1","0"],["0","1"]],"w":"1/3"},{"m":[["2","0"],["0","1/2"]],"w":"1/3"}]}"#;
    assert!(matches!(parse_measure_text(weights), Err(Error::WeightsNotProbability(_))));
    let det = r#"{"atoms":[{"m":[["1+1*sqrt(5)","0"],["0","1"]],"w":"1"}]}"#;
    assert!(matches!(parse_measure_text(det), Err(Error::DeterminantNotOne(_))));
    match parse_measure_text("{\"atoms\": [\n  {\"m\": 3,}]}") {
        Err(Error::ParseError { location, .. }) => assert!(location.starts_with("line 2"), "{location}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn run_config_roundtrip() {
    let cfg = RunConfig {
        command: "certificate".into(),
        seed: 42,
        workers: 3,
        measure: Some(MeasureInput::Spec { origin: "inline".into(), spec: serde_json::from_str(TWO_GEN_3).unwrap() }),
        budgets: BTreeMap::from([("samples".to_string(), 1000), ("n_max".to_string(), 8)]),
        params: BTreeMap::from([("t".to_string(), json!(0.5)), ("C".to_string(), json!(1.0))]),
        out: Some("/tmp/x".into()),
    };
    let text = serde_json::to_string(&cfg).unwrap();
    assert_eq!(parse_config(&text).unwrap(), cfg);
}

#[test]
fn outputs_carry_provenance() {
    let o = run(&["--seed", "9", "example", "two_gen", "--n", "3"], None);
    assert!(o.status.success());
    let v = json_out(&o);
    assert_eq!(v["schema_version"], SCHEMA_VERSION);
    assert_eq!(v["build_id"], BUILD_ID);
    assert_eq!(v["seed"], 9);
    assert_eq!(v["config"]["params"]["family"]["n"], 3);
    // the report itself is a valid measure input
    let spec = parse_measure_text(std::str::from_utf8(&o.stdout).unwrap()).unwrap();
    assert_eq!(spec.len(), 2);
}

#[test]
fn environment_overrides_flags_defaults() {
    let o = bin()
        .args(["example", "two_gen", "--n", "2"])
        .env("FURSTENBERG_SEED", "31")
        .stdin(Stdio::null())
        .output()
        .unwrap();
    assert_eq!(json_out(&o)["seed"], 31);
}

#[test]
fn example_pipes_into_certificate() {
    let ex = run(&["example", "two_gen", "--n", "20"], None);
    let o = run(
        &["--samples", "2000", "--runs", "100", "--n-max", "8", "certificate", "--t", "0.5", "--C", "1", "--steps", "1000"],
        Some(std::str::from_utf8(&ex.stdout).unwrap()),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json_out(&o);
    let r = &v["result"];
    assert!(r["verdict"].as_str().unwrap().starts_with(VERDICT_PREFIX));
    assert_eq!(r["log_m_bound"].as_f64().unwrap(), two_gen_log_m(20));
    assert_eq!(r["distinct_to_depth"], 8);
    assert_eq!(v["config"]["measure"]["origin"], "stdin");
    assert_eq!(v["config"]["budgets"]["samples"], 2000);
}

#[test]
fn checks_are_byte_identical_across_runs() {
    let args = ["--seed", "7", "--runs", "2000", "--samples", "20000", "--n-max", "6", "checks", "--instances", "10"];
    let a = run(&args, None);
    let b = run(&args, None);
    assert_eq!(a.stdout, b.stdout);
    // exit 2: the √(2/π) and a = 2 checks are expected failures
    assert!(matches!(a.status.code(), Some(0) | Some(2)));
    let text = String::from_utf8(a.stdout).unwrap();
    let lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines[0]["command"], "checks");
    assert_eq!(lines[0]["build_id"], BUILD_ID);
    let summary = &lines.last().unwrap()["summary"];
    let failures: Vec<&str> = summary["failures"].as_array().unwrap().iter().map(|f| f.as_str().unwrap()).collect();
    assert!(failures.iter().all(|f| ["wasserstein_gap_sqrt_2_over_pi", "truncated_gaussian_gap_a2"].contains(f)));
    assert_eq!(a.status.code() == Some(2), !failures.is_empty());

    // worker count changes nothing but the recorded config
    let mut w = args.to_vec();
    w.splice(0..0, ["--workers", "3"]);
    let c = run(&w, None);
    let body = |s: &[u8]| String::from_utf8(s.to_vec()).unwrap().lines().skip(1).collect::<Vec<_>>().join("\n");
    assert_eq!(body(&c.stdout), body(text.as_bytes()));
}

#[test]
fn stationary_csv_feeds_detail() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let ex = run(&["example", "two_gen", "--n", "2"], None);
    let o = run(
        &["--samples", "2000", "--burn-in", "300", "--out", out, "stationary"],
        Some(std::str::from_utf8(&ex.stdout).unwrap()),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv_path = dir.path().join("stationary.csv");
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("# variant=atoms,N=2000"));
    assert!(csv.contains(&format!("# build_id={BUILD_ID}")));
    assert!(dir.path().join("stationary.json").exists());

    let d = run(&["detail", "--input", csv_path.to_str().unwrap(), "--r", "0.01", "--k", "2"], None);
    assert!(d.status.success());
    let v = json_out(&d);
    let m = CircleMeasure::read_csv(csv.as_bytes()).unwrap();
    assert_eq!(v["result"]["detail"].as_f64().unwrap(), order_k_detail(&m, 0.01, 2).unwrap());
    assert_eq!(v["result"].as_object().unwrap().len(), 3);
}

#[test]
fn errors_exit_one_with_a_code() {
    let bad = r#"{"atoms":[{"m":[["1","0"],["0","1"]],"w":"2/3"}]}"#;
    let o = run(&["lyapunov", "--spec", bad], None);
    assert_eq!(o.status.code(), Some(1));
    let e: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(e["error"]["code"], "weights_not_probability");
    assert_eq!(run(&["lyapunov", "--bogus"], None).status.code(), Some(1));
    assert_eq!(run(&["--help"], None).status.code(), Some(0));
}

#[test]
fn refused_pingpong_exits_two() {
    let o = run(&["pingpong", "--element", "0,1.5", "--element", "0.1,1.5"], None);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(json_out(&o)["result"]["certified"], false);
    let ok = run(&["pingpong", "--large-element", "2"], None);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(json_out(&ok)["result"]["certified"], true);
}
