use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::{json, Value};

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

impl Run {
    fn json(&self) -> Value {
        serde_json::from_str(&self.stdout).unwrap_or_else(|e| panic!("bad JSON ({e}): {}", self.stdout))
    }

    fn error(&self) -> Value {
        serde_json::from_str(self.stderr.trim()).unwrap_or_else(|e| panic!("bad error JSON ({e}): {}", self.stderr))
    }
}

fn ersnet_env(args: &[&str], backend: Option<&str>) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ersnet"));
    cmd.args(args).env_remove("ERSNET_BACKEND");
    if let Some(b) = backend {
        cmd.env("ERSNET_BACKEND", b);
    }
    let out = cmd.output().expect("binary runs");
    Run {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn ersnet(args: &[&str]) -> Run {
    ersnet_env(args, None)
}

fn write(dir: &Path, name: &str, doc: &Value) -> String {
    let path = dir.join(name);
    fs::write(&path, doc.to_string()).unwrap();
    path.display().to_string()
}

/// Edge weights of a graph document keyed by the unordered vertex pair.
fn weights(graph: &Value) -> Vec<(String, String, String)> {
    let mut out: Vec<_> = graph["edges"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| {
            let (u, v) = (e["u"].as_str().unwrap(), e["v"].as_str().unwrap());
            let (u, v) = if u <= v { (u, v) } else { (v, u) };
            (u.to_string(), v.to_string(), e["w"].as_str().unwrap().to_string())
        })
        .collect();
    out.sort();
    out
}

fn entry(m: &Value, i: usize, j: usize) -> &str {
    m["rows"][i][j].as_str().unwrap()
}

#[test]
fn cycle_geodesic_is_rejected_with_singular_defect() {
    let r = ersnet(&["check-ers", "--metric", "c4-geodesic"]);
    assert_eq!(r.code, 2);
    let report = &r.json()["report"];
    assert_eq!(report["reason"]["kind"], "singular_defect");
    assert_eq!(report["reason"]["det"], "0");
}

#[test]
fn witness_metric_has_negative_weight() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(
        dir.path(),
        "witness.json",
        &json!({"d": [
            ["0", "23/260", "36/260", "40/260"],
            ["23/260", "0", "39/260", "23/260"],
            ["36/260", "39/260", "0", "36/260"],
            ["40/260", "23/260", "36/260", "0"],
        ]}),
    );
    let builtin = ersnet(&["check-ers", "--metric", "negative-witness"]);
    let from_file = ersnet(&["check-ers", "--metric", &file]);
    for r in [&builtin, &from_file] {
        assert_eq!(r.code, 2, "{}", r.stderr);
        let reason = &r.json()["report"]["reason"];
        assert_eq!(reason["kind"], "negative_weight");
        assert_eq!(reason["x"], "v0");
        assert_eq!(reason["y"], "v3");
        assert_eq!(reason["value"], "-1");
    }
    assert_eq!(builtin.json()["report"], from_file.json()["report"]);
}

#[test]
fn two_points_recover_a_single_edge() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "two.json", &json!({"labels": ["a", "b"], "d": [[0, 4], [4, 0]]}));
    let graph_out = dir.path().join("g.json");
    let r = ersnet(&["check-ers", "--metric", &file, "--write-graph", graph_out.to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(r.json()["report"]["outcome"], "is_ers");
    let g: Value = serde_json::from_str(&fs::read_to_string(graph_out).unwrap()).unwrap();
    assert_eq!(weights(&g), [("a".into(), "b".into(), "1/4".into())]);
}

#[test]
fn effres_on_unit_cycle() {
    let r = ersnet(&["effres", "--graph", "cycle:4"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let m = &r.json()["report"]["resistance"];
    assert_eq!(entry(m, 0, 2), "1");
    assert_eq!(entry(m, 0, 1), "3/4");
}

#[test]
fn effres_on_single_edge() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "edge.json", &json!({"edges": [{"u": "a", "v": "b", "w": 5}]}));
    let r = ersnet(&["effres", "--graph", &file]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(entry(&r.json()["report"]["resistance"], 0, 1), "1/5");
}

#[test]
fn effres_on_tree_matches_geodesic() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(
        dir.path(),
        "tree.json",
        &json!({"edges": [
            {"u": "r", "v": "a", "w": "2"},
            {"u": "r", "v": "b", "w": "1/3"},
            {"u": "a", "v": "c", "w": "5"},
            {"u": "a", "v": "d", "w": "7/2"},
            {"u": "b", "v": "e", "w": "1"},
        ]}),
    );
    let effres = ersnet(&["effres", "--graph", &file]);
    let geodesic = ersnet(&["geodesic", "--graph", &file]);
    assert_eq!(effres.code, 0, "{}", effres.stderr);
    assert_eq!(geodesic.code, 0, "{}", geodesic.stderr);
    let r = &effres.json()["report"]["resistance"];
    let d = &geodesic.json()["report"];
    assert_eq!(r["rows"], d["d"]);
    assert_eq!(entry(r, 3, 5), "47/10");
}

#[test]
fn reduce_tightness_five_to_four() {
    let keep = "v0,v1,v2,v3,v4";
    let r = ersnet(&["reduce", "--graph", "tightness:5", "--keep", keep]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let g4 = ersnet(&["generate", "tightness", "4"]);
    assert_eq!(weights(&r.json()["report"]["result"]), weights(&g4.json()));
}

#[test]
fn reduce_keeping_everything_is_the_identity() {
    let r = ersnet(&["reduce", "--graph", "cycle:5", "--keep", "v0,v1,v2,v3,v4"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let report = &r.json()["report"];
    assert_eq!(report["steps"].as_array().unwrap().len(), 0);
    assert_eq!(report["result"], report["original"]);
}

#[test]
fn reduce_is_order_independent() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(
        dir.path(),
        "g.json",
        &json!({"edges": [
            {"u": "a", "v": "b", "w": "2"},
            {"u": "b", "v": "c", "w": "1/3"},
            {"u": "c", "v": "d", "w": "3"},
            {"u": "d", "v": "e", "w": "1"},
            {"u": "e", "v": "a", "w": "5/2"},
            {"u": "a", "v": "c", "w": "1"},
            {"u": "b", "v": "e", "w": "4"},
            {"u": "c", "v": "f", "w": "2"},
            {"u": "f", "v": "a", "w": "1/2"},
        ]}),
    );
    let one = ersnet(&["reduce", "--graph", &file, "--keep", "a,e", "--order", "b,c,d,f"]);
    let two = ersnet(&["reduce", "--graph", &file, "--keep", "a,e", "--order", "f,d,c,b"]);
    assert_eq!(one.code, 0, "{}", one.stderr);
    assert_eq!(two.code, 0, "{}", two.stderr);
    assert_eq!(one.json()["report"]["result"], two.json()["report"]["result"]);
    assert_eq!(one.json()["report"]["removal_order"], json!(["b", "c", "d", "f"]));
}

#[test]
fn generate_tightness_four() {
    let r = ersnet(&["generate", "tightness", "4"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let g = r.json();
    let w = weights(&g);
    let find = |u: &str, v: &str| w.iter().find(|e| e.0 == u && e.1 == v).map(|e| e.2.as_str());
    assert_eq!(find("v0", "v1"), Some("1"));
    assert_eq!(find("v0", "v2"), Some("1/2"));
    assert_eq!(find("v0", "v3"), Some("1/4"));
    assert_eq!(find("v0", "v4"), Some("1"));
    assert_eq!(find("v2", "v3"), Some("1"));
    assert_eq!(find("v3", "v4"), Some("3"));
    assert_eq!(w.len(), 6);
}

#[test]
fn generated_files_load_back() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t4.json");
    let r = ersnet(&["generate", "tightness", "4", "--output", out.to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.is_empty());
    let a = ersnet(&["effres", "--graph", out.to_str().unwrap()]);
    let b = ersnet(&["effres", "--graph", "tightness:4"]);
    assert_eq!(a.json()["report"], b.json()["report"]);
}

#[test]
fn discrete_limit_is_disconnected() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("traj.csv");
    let r = ersnet(&["limit", "discrete", "2..12", "--csv", csv.to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let report = &r.json()["report"];
    assert_eq!(report["completely_disconnected"], true);
    assert_eq!(report["sizes"].as_array().unwrap().len(), 11);
    let text = fs::read_to_string(csv).unwrap();
    assert_eq!(text.lines().next(), Some("series,n,value"));
}

#[test]
fn transient_escape_probability() {
    let r = ersnet(&["walk", "exact", "--graph", "t20", "--from", "B", "--to", "T"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let report = &r.json()["report"];
    let value = |v: &Value| -> f64 {
        let s = v.as_str().unwrap();
        let (p, q) = s.split_once('/').unwrap();
        p.parse::<f64>().unwrap() / q.parse::<f64>().unwrap()
    };
    assert!((value(&report["absorbed"]["hit_first"]) - 0.4).abs() < 1e-3);
    assert!((value(&report["absorbed"]["hit_or_escape"]) - 0.6).abs() < 1e-3);
    assert_eq!(report["resistance"], "2");

    let reflecting = ersnet(&["walk", "exact", "--graph", "t20", "--from", "B", "--to", "T", "--reflecting"]);
    assert_eq!(reflecting.json()["report"]["hit_before_return"], "1/2");
    assert!(reflecting.json()["report"].get("absorbed").is_none());
}

#[test]
fn monte_carlo_is_seeded() {
    let args = ["walk", "mc", "--graph", "cycle:4", "--from", "v0", "--to", "v2", "--walks", "2000"];
    let a = ersnet(&[&args[..], &["--seed", "9", "--workers", "1"]].concat());
    let b = ersnet(&[&args[..], &["--seed", "9", "--workers", "3"]].concat());
    let c = ersnet(&[&args[..], &["--seed", "10"]].concat());
    assert_eq!(a.code, 0, "{}", a.stderr);
    assert_eq!(a.json()["report"], b.json()["report"]);
    assert_ne!(a.json()["report"]["estimate"], c.json()["report"]["estimate"]);
    assert_eq!(a.json()["config"]["seed"], 9);
}

#[test]
fn limit_check_requires_recurrence() {
    let r = ersnet(&[
        "walk", "limit-check", "--family", "two-ray", "--sizes", "2..6", "--from", "0", "--to", "1",
    ]);
    assert_eq!(r.code, 65);
    assert!(r.error()["error"]["message"].as_str().unwrap().contains("recurrence"));
}

#[test]
fn report_embeds_configuration() {
    let r = ersnet(&["--tolerance", "1e-7", "--seed", "42", "effres", "--graph", "path:3"]);
    let doc = r.json();
    assert_eq!(doc["command"], "effres");
    assert_eq!(doc["config"]["backend"], "rational");
    assert_eq!(doc["config"]["tolerance"], 1e-7);
    assert_eq!(doc["config"]["seed"], 42);
    assert_eq!(doc["config"]["parameters"]["graph"], "path:3");
    assert!(doc["ersnet_version"].is_string());
}

#[test]
fn output_flag_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let r = ersnet(&["effres", "--graph", "cycle:4", "--output", out.to_str().unwrap()]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.is_empty());
    let doc: Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(doc["command"], "effres");
}

#[test]
fn backend_from_environment_and_flag_precedence() {
    let env_only = ersnet_env(&["effres", "--graph", "cycle:4"], Some("float"));
    assert_eq!(env_only.json()["config"]["backend"], "float");
    assert_eq!(env_only.json()["report"]["resistance"]["rows"][0][2], 1.0);
    let flag = ersnet_env(&["--backend", "rational", "effres", "--graph", "cycle:4"], Some("float"));
    assert_eq!(flag.json()["config"]["backend"], "rational");
    assert_eq!(flag.json()["report"]["resistance"]["rows"][0][1], "3/4");
}

#[test]
fn parse_errors_exit_64_without_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{not json").unwrap();
    for r in [
        ersnet(&["effres", "--graph", bad.to_str().unwrap()]),
        ersnet(&["--backend", "quaternion", "effres", "--graph", "cycle:4"]),
        ersnet(&["limit", "discrete", "two..five"]),
        ersnet(&["frobnicate"]),
    ] {
        assert_eq!(r.code, 64, "{}", r.stderr);
        assert!(r.stdout.is_empty());
        assert_eq!(r.error()["error"]["kind"], "parse");
    }
}

#[test]
fn validation_errors_exit_65() {
    let dir = tempfile::tempdir().unwrap();
    let asymmetric = write(dir.path(), "m.json", &json!({"d": [[0, 1], [2, 0]]}));
    for r in [
        ersnet(&["check-ers", "--metric", &asymmetric]),
        ersnet(&["effres", "--graph", "nosuchfamily:3"]),
        ersnet(&["reduce", "--graph", "cycle:4", "--keep", "v0,v9"]),
    ] {
        assert_eq!(r.code, 65, "{}", r.stderr);
        assert_eq!(r.error()["error"]["kind"], "validation");
    }
}

#[test]
fn missing_input_file_is_a_failure() {
    let r = ersnet(&["effres", "--graph", "/nonexistent/graph.json"]);
    assert_eq!(r.code, 1);
}

#[test]
fn help_exits_zero() {
    let r = ersnet(&["--help"]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.contains("check-ers"));
}
