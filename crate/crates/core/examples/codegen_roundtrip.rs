//! Graph specification and generated model text, read back and simulated.

use std::sync::Arc;

use crossbar_sim::codegen::{emit_document, emit_model_with_routes, load_model, parse_document};
use crossbar_sim::engine::format_event_log;
use crossbar_sim::{generate_crossbar, run, CrossbarSpec, Model, RateParams, RouteTable, RunConfig};

fn main() {
    let g = generate_crossbar(CrossbarSpec::new(1, 2)).unwrap();
    let params = RateParams { arr_a: 0.5, ..RateParams::default() };

    let spec = emit_document(&g, Some(&params));
    let doc = parse_document(&spec).unwrap();
    assert_eq!(doc.graph, g);
    println!("graph spec: {} lines, parses back to the same graph", spec.lines().count());

    let routes = RouteTable::separated_entries(&g);
    let generated = emit_model_with_routes(&g, &params, &routes);
    println!(
        "model text: {} lines, {} movement clauses",
        generated.line_count,
        generated.movement_clauses()
    );

    let from_text = load_model(&generated.text).unwrap();
    let in_memory = Model::new(Arc::new(g), params, routes).unwrap();
    let cfg = RunConfig { stop_time: 30.0, ..RunConfig::default() };
    let a = format_event_log(run(&from_text, &cfg, true).unwrap().log.as_deref().unwrap());
    let b = format_event_log(run(&in_memory, &cfg, true).unwrap().log.as_deref().unwrap());
    println!("event logs identical: {} ({} events)", a == b, a.lines().count());
    for line in a.lines().take(8) {
        println!("  {line}");
    }
}
