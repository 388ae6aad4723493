use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const BLOCKED: &str = r#"{"s":1,"A0":[0.3,-0.96],"B0":[0,0],"A1":[1.9,-0.96],"B1":[2.2,0]}"#;
const DETOUR: &str = r#"{"s":1,"A0":[1,0.5],"B0":[0,0],"A1":[-3,2],"B1":[10,0]}"#;

fn discpair(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_discpair"))
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn read(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn straight_instance_plans_and_verifies() {
    let dir = TempDir::new().unwrap();
    let input = write(
        &dir,
        "in.json",
        r#"{"s":1,"A0":[0,0],"B0":[-3,0],"A1":[5,0],"B1":[3,0]}"#,
    );
    let out = dir.path().join("plan.json");
    let o = discpair(&["plan", s(&input), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = read(&out);
    assert_eq!(v["orientation"], "straight");
    assert_eq!(v["method"], "straight");
    assert_eq!(v["certified"], true);
    assert_eq!(v["lengths"]["chosen"].as_f64().unwrap(), 11.0);

    let o = discpair(&["verify", s(&out)]);
    assert_eq!(code(&o), 0);
    let table = String::from_utf8(o.stdout).unwrap();
    for name in [
        "feasibility",
        "convexity",
        "bound-equality",
        "quadrature",
        "grid-oracle",
        "primitive-count",
    ] {
        assert!(
            table
                .lines()
                .any(|l| l.starts_with(name) && l.contains("pass")),
            "{table}"
        );
    }
}

#[test]
fn malformed_and_missing_inputs_exit_one() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.json", "{\"s\":1,\n\"A0\":[0,");
    let o = discpair(&["plan", s(&bad)]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("line") && err.contains("column"), "{err}");

    let unknown = write(
        &dir,
        "u.json",
        r#"{"s":1,"A0":[3,0],"B0":[0,0],"A1":[5,0],"B1":[1,0],"x":0}"#,
    );
    assert_eq!(code(&discpair(&["plan", s(&unknown)])), 1);

    let overlapping = write(
        &dir,
        "o.json",
        r#"{"s":1,"A0":[0.5,0],"B0":[0,0],"A1":[5,0],"B1":[1,0]}"#,
    );
    assert_eq!(code(&discpair(&["plan", s(&overlapping)])), 1);

    let missing = dir.path().join("nope.json");
    assert_eq!(code(&discpair(&["plan", s(&missing)])), 1);
    assert_eq!(code(&discpair(&["verify", s(&missing)])), 1);
    assert_eq!(code(&discpair(&["plan"])), 1);
}

#[test]
fn unavailable_orientation_writes_refusal() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "in.json", BLOCKED);
    let out = dir.path().join("r.json");
    let o = discpair(&["plan", s(&input), "--orientation", "ccw", "--out", s(&out)]);
    assert_eq!(code(&o), 2);
    let v = read(&out);
    assert_eq!(v["forcedClockwise"], true);
    assert_eq!(v["certified"], false);
    assert!(v["lengths"]["ccw"].is_null());

    let o = discpair(&["plan", s(&input), "--orientation", "cw", "--out", s(&out)]);
    assert_eq!(code(&o), 0);
    assert_eq!(read(&out)["orientation"], "cw");
}

#[test]
fn corrupted_plan_fails_verification() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "in.json", DETOUR);
    let out = dir.path().join("plan.json");
    assert_eq!(code(&discpair(&["plan", s(&input), "--out", s(&out)])), 0);
    let mut v = read(&out);
    let prims = v["trajectories"]["A"]["primitives"].as_array_mut().unwrap();
    let arc = prims
        .iter_mut()
        .find(|p| p["type"] == "arc")
        .expect("detour has an arc");
    // Going the long way round keeps the endpoints but lengthens the motion.
    let flipped = if arc["direction"] == "ccw" {
        "cw"
    } else {
        "ccw"
    };
    arc["direction"] = Value::from(flipped);
    let bad = write(&dir, "bad.json", &serde_json::to_string(&v).unwrap());
    let o = discpair(&["verify", s(&bad)]);
    assert_eq!(code(&o), 2);
    let table = String::from_utf8(o.stdout).unwrap();
    for name in ["bound-equality", "grid-oracle"] {
        assert!(
            table
                .lines()
                .any(|l| l.starts_with(name) && l.contains("FAIL")),
            "{table}"
        );
    }
}

#[test]
fn identical_placements_give_empty_plan() {
    let dir = TempDir::new().unwrap();
    let input = write(
        &dir,
        "in.json",
        r#"{"s":1,"A0":[2,1],"B0":[0,0],"A1":[2,1],"B1":[0,0]}"#,
    );
    let out = dir.path().join("plan.json");
    assert_eq!(code(&discpair(&["plan", s(&input), "--out", s(&out)])), 0);
    let v = read(&out);
    assert_eq!(v["lengths"]["chosen"].as_f64().unwrap(), 0.0);
    assert_eq!(v["method"], "empty");
    for r in ["A", "B"] {
        assert!(v["trajectories"][r]["primitives"]
            .as_array()
            .unwrap()
            .is_empty());
    }
}

#[test]
fn plan_file_round_trips_through_verify() {
    let dir = TempDir::new().unwrap();
    let input = write(
        &dir,
        "in.json",
        r#"{"s":1,"A0":[0.1,0.7],"B0":[0,-0.3],"A1":[1.1,0.45],"B1":[2.2,0.1]}"#,
    );
    let out = dir.path().join("plan.json");
    assert_eq!(code(&discpair(&["plan", s(&input), "--out", s(&out)])), 0);
    let first = std::fs::read_to_string(&out).unwrap();
    let v = read(&out);
    let inst = serde_json::to_string(&v["instance"]).unwrap();
    let expected: Value = serde_json::from_str(
        r#"{"s":1.0,"A0":[0.1,0.7],"B0":[0.0,-0.3],"A1":[1.1,0.45],"B1":[2.2,0.1]}"#,
    )
    .unwrap();
    assert_eq!(v["instance"], expected);
    assert!(first.contains("0.45") && !first.contains("0.45000"));
    let again = write(&dir, "again.json", &inst);
    let out2 = dir.path().join("plan2.json");
    assert_eq!(code(&discpair(&["plan", s(&again), "--out", s(&out2)])), 0);
    assert_eq!(std::fs::read_to_string(&out2).unwrap(), first);
    assert_eq!(code(&discpair(&["verify", s(&out)])), 0);
}

#[test]
fn coupled_plan_certifies_with_same_length() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "in.json", BLOCKED);
    let (p, c) = (dir.path().join("p.json"), dir.path().join("c.json"));
    assert_eq!(code(&discpair(&["plan", s(&input), "--out", s(&p)])), 0);
    assert_eq!(
        code(&discpair(&["plan", s(&input), "--couple", "--out", s(&c)])),
        0
    );
    let (p, c) = (read(&p), read(&c));
    assert_eq!(c["schedule"]["type"], "coupled");
    let (lp, lc) = (
        p["lengths"]["chosen"].as_f64().unwrap(),
        c["lengths"]["chosen"].as_f64().unwrap(),
    );
    assert!((lp - lc).abs() <= 1e-9);
    let cp = dir.path().join("c2.json");
    std::fs::write(&cp, serde_json::to_string(&c).unwrap()).unwrap();
    assert_eq!(code(&discpair(&["verify", s(&cp)])), 0);
}

#[test]
fn fuzz_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let (r1, r2) = (dir.path().join("a.json"), dir.path().join("b.json"));
    let args = |r: &Path| {
        vec![
            "fuzz".to_string(),
            "--n".into(),
            "25".into(),
            "--seed".into(),
            "7".into(),
            "--box".into(),
            "2".into(),
            "--report".into(),
            s(r).to_string(),
        ]
    };
    let run = |r: &Path| {
        let a = args(r);
        discpair(&a.iter().map(String::as_str).collect::<Vec<_>>())
    };
    assert_eq!(code(&run(&r1)), 0);
    assert_eq!(code(&run(&r2)), 0);
    let (a, b) = (
        std::fs::read_to_string(&r1).unwrap(),
        std::fs::read_to_string(&r2).unwrap(),
    );
    assert_eq!(a, b);
    let v: Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["certified"], 25);
    assert_eq!(v["passCounts"]["grid-oracle"], 25);
}

#[test]
fn fuzz_box_too_small_is_a_clean_error() {
    let o = discpair(&["fuzz", "--n", "3", "--box", "0.2"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8(o.stderr).unwrap().contains("too small"));
}

#[test]
fn svg_output_is_well_formed() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "in.json", DETOUR);
    let (plan, svg) = (dir.path().join("p.json"), dir.path().join("p.svg"));
    assert_eq!(
        code(&discpair(&[
            "plan",
            s(&input),
            "--out",
            s(&plan),
            "--svg",
            s(&svg)
        ])),
        0
    );
    let text = std::fs::read_to_string(&svg).unwrap();
    let doc = roxmltree::Document::parse(&text).unwrap();
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    assert_eq!(
        doc.descendants().filter(|n| n.has_tag_name("path")).count(),
        2
    );

    for (frames, discs) in [(0, 0), (4, 8)] {
        let out = dir.path().join(format!("r{frames}.svg"));
        let f = frames.to_string();
        assert_eq!(
            code(&discpair(&[
                "render",
                s(&plan),
                "--svg",
                s(&out),
                "--frames",
                &f
            ])),
            0
        );
        let text = std::fs::read_to_string(&out).unwrap();
        let doc = roxmltree::Document::parse(&text).unwrap();
        let n = doc
            .descendants()
            .filter(|n| n.has_tag_name("circle") && n.attribute("opacity").is_some())
            .count();
        assert_eq!(n, discs);
    }
}
