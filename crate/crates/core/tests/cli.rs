use std::process::{Command, Output};

use serde_json::Value;

fn tropbbs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tropbbs")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

/// Every number in the document is a `p/q` string.
fn assert_rational_strings(v: &Value) {
    match v {
        Value::Number(n) => {
            assert!(n.is_u64() || n.is_i64(), "float {n} in JSON output");
        }
        Value::String(s) if s.contains('/') => {
            let (p, q) = s.split_once('/').unwrap();
            assert!(p.parse::<i64>().is_ok() && q.parse::<u64>().is_ok(), "bad rational {s}");
        }
        Value::Array(a) => a.iter().for_each(assert_rational_strings),
        Value::Object(m) => m.values().for_each(assert_rational_strings),
        _ => {}
    }
}

#[test]
fn simulate_reproduces_the_collision_figure() {
    let o = tropbbs(&[
        "simulate",
        "--bbs",
        "..111...11...1",
        "--steps",
        "3",
        "--window",
        "0:22",
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        stdout(&o),
        "t=0:   ..111...11...1........\n\
         t=1:   .....111..11..1.......\n\
         t=2:   ........11..11.11.....\n\
         t=3:   ..........11..1..111..\n"
    );
}

#[test]
fn simulate_csv_and_json() {
    let o = tropbbs(&["simulate", "--pbbs", ".11...1...", "--steps", "1", "--format", "csv"]);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,n,U");
    assert_eq!(lines.len(), 1 + 2 * 10);
    assert_eq!(lines[2], "0,1,1");
    assert_eq!(lines[14], "1,3,1");

    let o = tropbbs(&["simulate", "--pbbs", ".11...1...", "--steps", "1", "--format", "json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["rows"][1], "...11..1..");
    assert_rational_strings(&v);
}

#[test]
fn analyze_json_of_the_worked_example() {
    let o = tropbbs(&["analyze", "--pbbs", ".11...1...", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_rational_strings(&v);
    let curve = &v["curve"];
    for key in ["L", "solitons", "A", "B", "mu", "omega", "kappa", "vertices", "edges"] {
        assert!(curve.get(key).is_some(), "missing {key}");
    }
    assert_eq!(curve["B"], serde_json::json!([["8/1", "2/1"], ["2/1", "8/1"]]));
    assert_eq!(curve["kappa"], serde_json::json!(["5/1", "5/1"]));
    assert_eq!(v["c0"], serde_json::json!(["0/1", "3/1"]));
    let mut points: Vec<(String, String)> = v["points"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| (p["x"].as_str().unwrap().to_owned(), p["y"].as_str().unwrap().to_owned()))
        .collect();
    points.sort();
    assert_eq!(points, vec![("2/1".into(), "1/1".into()), ("5/1".into(), "1/1".into())]);
}

#[test]
fn analyze_svg() {
    let o = tropbbs(&["analyze", "--pbbs", ".11...1...", "--format", "svg"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).trim_start().starts_with("<svg"));
}

#[test]
fn verify_passes_and_reports_a_forced_mismatch() {
    let o = tropbbs(&["verify", "--pbbs", ".11...1..."]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let o = tropbbs(&["verify", "--pbbs", ".11...1...", "--c0-override", "0,2"]);
    assert_eq!(code(&o), 3);
    assert!(stdout(&o).contains("FAIL at n="), "{}", stdout(&o));
    let o = tropbbs(&[
        "verify",
        "--pbbs",
        ".11...1...",
        "--c0-override",
        "1/2,3",
        "--format",
        "json",
    ]);
    assert_eq!(code(&o), 3);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["periodic"]["pass"], false);
    assert!(v["periodic"]["n"].is_i64());
}

#[test]
fn stability_table_and_verdicts() {
    let o = tropbbs(&["stability", "--pbbs", ".11...1...", "--m-range", "1:12", "--run", "10"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("m0 = 0"), "{text}");
    let o = tropbbs(&["stability", "--pbbs", ".11...1...", "--m-range", "1:4"]);
    assert!(stdout(&o).contains("not yet stable"));
}

#[test]
fn state_file_with_comments() {
    let dir = std::env::temp_dir().join(format!("tropbbs-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("states.txt");
    std::fs::write(&path, "# two states\n.11...1...\n\n1..1.....  # comment\n").unwrap();
    let o = tropbbs(&["verify", "--state", path.to_str().unwrap(), "--steps", "5"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert_eq!(stdout(&o).matches("state ").count(), 2);
    let o = tropbbs(&["analyze", "--state", path.to_str().unwrap(), "--format", "json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 2);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn exit_codes() {
    assert_eq!(code(&tropbbs(&["simulate", "--pbbs", ".1x."])), 2);
    assert_eq!(code(&tropbbs(&["simulate", "--steps", "3"])), 2);
    assert_eq!(code(&tropbbs(&["analyze", "--pbbs", ".11", "--format", "csv"])), 2);
    assert_eq!(code(&tropbbs(&["frobnicate"])), 2);
    assert_eq!(code(&tropbbs(&["analyze", "--pbbs", "111."])), 1);
    assert_eq!(code(&tropbbs(&["analyze", "--pbbs", ""])), 1);
    assert_eq!(code(&tropbbs(&["analyze", "--state", "/nonexistent/states"])), 1);
    assert_eq!(
        code(&tropbbs(&["verify", "--pbbs", ".11...1...", "--c0-override", "1"])),
        2
    );
}
