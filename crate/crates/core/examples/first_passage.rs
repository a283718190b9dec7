//! Exact expected crossing time of a lone pedestrian against simulation.

use std::sync::Arc;

use crossbar_sim::engine::expected_first_passage;
use crossbar_sim::stats::{aggregate, average_traversal};
use crossbar_sim::{generate_crossbar, run_replications, CrossbarSpec, Model, PedType, RateParams, RunConfig};

fn main() {
    let params = RateParams::default();
    let cfg = RunConfig { stop_time: 1e4, sample_interval: 1e4, seed: 7, scenario: "single".into() };
    println!("{:<5}{:>10}{:>12}{:>10}", "net", "exact", "simulated", "+/-");
    for (w, h) in [(1, 1), (2, 1), (1, 2), (2, 2), (3, 3)] {
        let g = generate_crossbar(CrossbarSpec::new(w, h)).unwrap();
        let exact = expected_first_passage(&g, PedType::A, &params).unwrap();
        let model = Model::single_traversal(Arc::new(g), params, PedType::A).unwrap();
        let times: Vec<f64> = run_replications(&model, &cfg, 2000, false)
            .unwrap()
            .iter()
            .map(|r| average_traversal(&r.global, PedType::A))
            .collect();
        let s = aggregate(&times).unwrap();
        println!(
            "{:<5}{exact:>10.4}{:>12.4}{:>10.4}",
            CrossbarSpec::new(w, h).label(),
            s.mean,
            s.half_width.unwrap()
        );
    }
}
