use std::fs;
use std::process::{Command, Output};

use crossbar_sim::codegen::{emit_document, parse_document};
use crossbar_sim::engine::parse_event_log;
use crossbar_sim::{generate_crossbar, CrossbarSpec, RateParams};

fn crossbar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crossbar")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn generate_writes_a_parseable_graph() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("net.cbgraph");
    let model = dir.path().join("net.cbmodel");
    let out = crossbar(&[
        "generate", "--width", "2", "--height", "2",
        "--out", path.to_str().unwrap(), "--model", model.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "11 20 328\n");
    let doc = parse_document(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc.graph, generate_crossbar(CrossbarSpec::new(2, 2)).unwrap());
    assert!(fs::read_to_string(&model).unwrap().contains("component Pedestrian"));
}

#[test]
fn table_lists_nine_instances() {
    let out = crossbar(&["table"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split_whitespace().collect()).collect();
    let labels: Vec<&str> = rows.iter().map(|r| r[0]).collect();
    assert_eq!(labels, ["1x1", "1x2", "1x3", "2x1", "2x2", "2x3", "3x1", "3x2", "3x3"]);
    assert_eq!(rows[5], ["2x3", "14", "27", "398"]);
    assert_eq!(rows[7], ["3x2", "14", "28", "408"]);
}

#[test]
fn simulate_from_a_graph_file() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.cbgraph");
    let g = generate_crossbar(CrossbarSpec::new(1, 2)).unwrap();
    fs::write(&graph, emit_document(&g, Some(&RateParams { arr_b: 0.0, ..RateParams::default() }))).unwrap();
    let csv = dir.path().join("out.csv");
    let log = dir.path().join("events.tsv");
    let out = crossbar(&[
        "simulate", "--graph", graph.to_str().unwrap(), "--scenario", "no-routing",
        "--stop-time", "15", "--sample-interval", "0.5", "--replications", "1", "--seed", "9",
        "--out", csv.to_str().unwrap(), "--event-log", log.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    // header, 31 samples, summary
    assert_eq!(text.lines().count(), 33);
    let events = parse_event_log(&fs::read_to_string(&log).unwrap()).unwrap();
    assert!(!events.is_empty());
    // the file's own arrival rates apply
    assert!(events.iter().all(|e| e.ptype == crossbar_sim::PedType::A));
}

#[test]
fn exit_codes_distinguish_failures() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cbgraph");
    let g = generate_crossbar(CrossbarSpec::new(1, 1)).unwrap();
    let text = emit_document(&g, None).replacen("NODES\n", "NODES\n0 7 7\n", 1);
    fs::write(&bad, text).unwrap();
    let out = crossbar(&["simulate", "--graph", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("E_DUPLICATE_NODE"));

    assert_eq!(crossbar(&["simulate", "--graph", "/no/such/file"]).status.code(), Some(3));
    assert_eq!(crossbar(&["simulate", "--width", "1", "--height", "1", "--scenario", "fast"]).status.code(), Some(2));
    assert_eq!(crossbar(&["generate", "--width", "0", "--height", "2"]).status.code(), Some(2));
    assert_eq!(crossbar(&["frobnicate"]).status.code(), Some(2));
}
