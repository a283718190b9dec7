//! Build a cross-bar network and print its nodes and per-type edges.
//!
//! cargo run --example generate_network -- 2 1

use crossbar_sim::codegen::emit_graph_spec;
use crossbar_sim::{generate_crossbar, CrossbarSpec, PedType};

fn main() {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<u32>().expect("width and height are integers"));
    let width = args.next().unwrap_or(1);
    let height = args.next().unwrap_or(1);
    let g = generate_crossbar(CrossbarSpec::new(width, height)).expect("dimensions must be positive");

    println!("{} nodes, {} connections", g.nodes().len(), g.connection_count());
    for p in PedType::ALL {
        let sub = g.subgraph(p);
        println!(
            "{p}: {} -> {} over {} directed {} edges",
            g.start_coords(p),
            g.goal_coords(p),
            sub.edges.len(),
            p.colour()
        );
    }
    println!();
    print!("{}", emit_graph_spec(&g));
}
