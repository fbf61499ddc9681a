use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use influx::report::{Record, RunReport};
use influx::streamgen::max_weight_gap;
use influx::{graph, Graph};

fn influx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_influx"))
        .args(args)
        .env("INFLUX_ASSERT", "1")
        .output()
        .expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("influx-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "exit {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn gen_stream_replays_to_the_input_graph() {
    let dir = scratch("replay");
    let full = dir.join("full.txt");
    let prefix = dir.join("run");
    for model in ["LT", "IC"] {
        stdout(&influx(&["gen-graph", "--n", "80", "--model", model, "--seed", "4", "--out", s(&full)]));
        stdout(&influx(&["gen-stream", "--graph", s(&full), "--model", model, "--seed", "9", "--out", s(&prefix)]));
        let input = Graph::from_text(&std::fs::read_to_string(&full).unwrap()).unwrap();
        let mut g = Graph::from_text(&std::fs::read_to_string(dir.join("run.base")).unwrap()).unwrap();
        let text = std::fs::read_to_string(dir.join("run.stream")).unwrap();
        let events = graph::parse_stream(text.as_bytes()).unwrap();
        assert!(!events.is_empty());
        for e in &events {
            g.apply_update(e).unwrap();
        }
        let gap = max_weight_gap(&g, &input).expect("same edge sets");
        assert!(gap <= 1e-12, "{model}: gap {gap}");
    }
}

#[test]
fn every_report_line_fits_the_schema() {
    let dir = scratch("schema");
    let full = dir.join("full.txt");
    let prefix = dir.join("run");
    stdout(&influx(&["gen-graph", "--n", "60", "--seed", "2", "--out", s(&full)]));
    stdout(&influx(&["gen-stream", "--graph", s(&full), "--model", "LT", "--seed", "3", "--out", s(&prefix)]));
    let base = dir.join("run.base");
    let stream = dir.join("run.stream");
    let common = ["--graph", s(&base), "--stream", s(&stream), "--eps", "0.3", "--delta", "0.2", "--summary"];

    let topk = stdout(&influx(&[&["track-topk", "--k", "3"], &common[..]].concat()));
    let im = stdout(&influx(&[&["track-im", "--kmax", "4", "--tau", "5"], &common[..]].concat()));
    let timed = stdout(&influx(&[&["track-topk", "--k", "3", "--timings"], &common[..]].concat()));
    for text in [&topk, &im, &timed] {
        let r = RunReport::parse_jsonl(text).unwrap();
        assert_eq!(r.records.len(), text.lines().count());
        assert!(matches!(r.records.first(), Some(Record::Init { .. })));
        assert!(matches!(r.records.last(), Some(Record::Summary { .. })));
        assert!(r.queries().count() >= 1);
    }
    assert!(!topk.contains("wall_ns"));
    assert!(timed.contains("wall_ns"));
}

#[test]
fn empty_stream_reports_init_and_one_query() {
    let dir = scratch("empty");
    let g = dir.join("g.txt");
    std::fs::write(&g, "3 2 LT\n1 0 1.0\n2 0 1.0\n").unwrap();
    let text = stdout(&influx(&["track-topk", "--graph", s(&g), "--eps", "0.3", "--delta", "0.2", "--k", "1"]));
    let r = RunReport::parse_jsonl(&text).unwrap();
    assert_eq!(r.records.len(), 2);
    match &r.records[1] {
        Record::Query { after, vertices, .. } => {
            assert_eq!(*after, 0);
            // 1 and 2 each reach 0; 0 reaches nobody
            assert!(matches!(vertices.first(), Some(1 | 2)), "{vertices:?}");
        }
        other => panic!("expected a query, got {other:?}"),
    }
}

#[test]
fn unknown_fields_are_rejected() {
    let line = r#"{"type":"summary","events":0,"queries":0,"refreshed":0,"appended":0,"removed":0,"m1_min":0,"m1_max":0,"m1":0,"m2":0,"cost":0}"#;
    assert!(RunReport::parse_jsonl(line).is_ok());
    let extra = line.replace("\"cost\":0", "\"cost\":0,\"bogus\":1");
    assert!(RunReport::parse_jsonl(&extra).is_err());
}

#[test]
fn exit_codes() {
    let dir = scratch("codes");
    let g = dir.join("g.txt");
    std::fs::write(&g, "3 2 LT\n1 0 1.0\n2 0 1.0\n").unwrap();
    let code = |args: &[&str]| influx(args).status.code();

    assert_eq!(code(&["--help"]), Some(0));
    assert_eq!(code(&["oracle", "exact", "--graph", s(&g), "--seeds", "1"]), Some(0));
    // usage and domain errors
    assert_eq!(code(&["track-topk", "--graph", s(&g)]), Some(1));
    assert_eq!(code(&["track-topk", "--graph", s(&g), "--eps", "0.3", "--delta", "0.2", "--k", "9"]), Some(1));
    assert_eq!(code(&["track-topk", "--graph", s(&g), "--eps", "0.3", "--delta", "0.2", "--k", "1", "--model", "IC"]), Some(1));
    // missing files and malformed input
    assert_eq!(code(&["track-topk", "--graph", s(&dir.join("nope")), "--eps", "0.3", "--delta", "0.2", "--k", "1"]), Some(2));
    let bad = dir.join("bad.txt");
    std::fs::write(&bad, "3 2 LT\n1 0 x\n").unwrap();
    assert_eq!(code(&["oracle", "exact", "--graph", s(&bad), "--seeds", "1"]), Some(2));
}
