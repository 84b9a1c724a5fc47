use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_triquad")).args(args).output().expect("run triquad")
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json output")
}

fn euler(a: u64, p: u64) -> i64 {
    let mut r = 1u64;
    for _ in 0..(p - 1) / 2 {
        r = r * (a % p) % p;
    }
    if r == 1 {
        1
    } else {
        -1
    }
}

fn is_prime(n: u64) -> bool {
    n >= 2 && (2..n).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
}

#[test]
fn verify_is_deterministic_without_timestamp() {
    let args = ["verify", "--p", "5", "--q", "31", "--json", "--timestamp", "off"];
    let (a, b) = (run(&args), run(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert!(v.get("timestamp").is_none());
    for key in ["pair", "condition", "certificates", "fsu", "h2_table", "splitting", "iwasawa", "verdicts"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    for key in ["lambda", "structure", "rank_sequence", "assumptions"] {
        assert!(v["iwasawa"].get(key).is_some(), "missing iwasawa.{key}");
    }
    let stamped = json(&["verify", "--p", "5", "--q", "31", "--json"]);
    assert!(stamped["timestamp"].is_u64());
}

#[test]
fn verify_formats() {
    let md = run(&["verify", "--p", "3", "--q", "23", "--markdown", "--timestamp", "off"]);
    let md = String::from_utf8(md.stdout).unwrap();
    assert!(md.contains("## Claims") && md.contains("Z_2^3"));
    let text = Command::new(env!("CARGO_BIN_EXE_triquad")).args(["verify", "--p", "3", "--q", "23"]).env("NO_COLOR", "1").output().unwrap();
    let text = String::from_utf8(text.stdout).unwrap();
    assert!(text.contains("VERIFIED") && !text.contains('\x1b'));
}

#[test]
fn exit_codes() {
    let out = run(&["verify", "--p", "11", "--q", "13"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("out of family"));
    let v = json(&["verify", "--p", "11", "--q", "13", "--json"]);
    assert_eq!(v["out_of_family"], true);
    let out = run(&["verify", "--p", "9", "--q", "7"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("9"));
    assert_eq!(run(&["survey", "--bound", "5"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--p", "5"]).status.code(), Some(2));
}

#[test]
fn survey_matches_enumeration() {
    let v = json(&["survey", "--bound", "50", "--json", "--timestamp", "off"]);
    let got: Vec<(u64, u64, u64)> = v["rows"].as_array().unwrap().iter().map(|r| (r["p"].as_u64().unwrap(), r["q"].as_u64().unwrap(), r["condition"].as_u64().unwrap())).collect();
    let mut want = Vec::new();
    for p in (3..=50).filter(|&n| is_prime(n)) {
        for q in (3..=50).filter(|&n| is_prime(n) && n != p && n % 8 == 7) {
            let pq = euler(p, q);
            if pq == 1 && euler(2, p) == -1 {
                want.push((p, q, 1));
            } else if p % 8 == 5 && pq == -1 {
                want.push((p, q, 2));
            }
        }
    }
    want.sort();
    assert_eq!(got, want);
    assert!(got.contains(&(5, 31, 1)) && got.contains(&(3, 23, 1)));
    assert_eq!(v["failed_pairs"], 0);
    let v = json(&["survey", "--bound", "10", "--json", "--timestamp", "off"]);
    assert_eq!(v["rows"][0]["p"], 5);
    assert_eq!(v["rows"][0]["condition"], 2);
}

#[test]
fn survey_is_order_stable_across_workers() {
    let a = run(&["survey", "--bound", "40", "--cond", "1", "--jobs", "1", "--timestamp", "off"]);
    let b = run(&["survey", "--bound", "40", "--cond", "1", "--jobs", "3", "--timestamp", "off"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn survey_output_file() {
    let dir = std::env::temp_dir().join(format!("triquad-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("survey.json");
    let out = run(&["survey", "--bound", "10", "--json", "--timestamp", "off", "--output", path.to_str().unwrap()]);
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["pairs"], 1);
    let bad = dir.join("missing").join("survey.json");
    let out = run(&["survey", "--bound", "10", "--output", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn tool_subcommands() {
    let v = json(&["fsu", "--radicands", "2,5", "--json"]);
    assert_eq!(v["q_index"], 2);
    let v = json(&["classnum", "--d", "155", "--json"]);
    assert_eq!(v["class_group"]["h"], 2);
    assert_eq!(v["unit"]["x"], "249");
    let v = json(&["classnum", "--d", "-23", "--json"]);
    assert_eq!(v["class_group"]["h"], 3);
    let v = json(&["split", "--p", "5", "--level", "2", "--json"]);
    assert_eq!((v["splitting"]["g"].as_u64(), v["splitting"]["f"].as_u64()), (Some(2), Some(4)));
    let v = json(&["split", "--p", "5", "--level", "2", "--plus", "--json"]);
    assert_eq!(v["splitting"]["g"], 1);
    let v = json(&["tower", "--p", "5", "--q", "7", "--levels", "3", "--json"]);
    let layers = v["layers"].as_array().unwrap();
    assert_eq!(layers.len(), 3);
    assert_eq!(layers[2]["pi"], "2+sqrt(2+sqrt(2))");
    assert_eq!(layers[2]["rank"]["value"], 3);
}
