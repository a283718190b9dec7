//! Nodes, connections and estimated lines of generated code per instance.

use crossbar_sim::cli::table_rows;

fn main() {
    println!("{:<7}{:>6}{:>13}{:>6}", "Model", "Nodes", "Connections", "LoC");
    for r in table_rows(3, 3).expect("valid bounds") {
        println!("{:<7}{:>6}{:>13}{:>6}", r.spec.label(), r.nodes, r.connections, r.loc);
    }
}
