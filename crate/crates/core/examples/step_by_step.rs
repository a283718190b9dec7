//! Drive the simulator one event at a time and inspect the candidate set.

use crossbar_sim::engine::StepOutcome;
use crossbar_sim::{generate_crossbar, CrossbarSpec, Model, PedType, RateParams, RouteTable, Simulation};

fn main() {
    let g = generate_crossbar(CrossbarSpec::new(1, 1)).unwrap();
    let model = Model::from_graph(g, RateParams::default(), RouteTable::none()).unwrap();
    let mut sim = Simulation::new(&model, 42).unwrap();

    for _ in 0..12 {
        let candidates = sim.collect_candidates().unwrap();
        let total: f64 = candidates.iter().map(|c| c.rate).sum();
        match sim.step().unwrap() {
            StepOutcome::Fired(e) => println!(
                "t={:8.4}  {:<9} {:>3} {}  ({} candidates, total rate {total:.3})",
                e.time,
                e.action.to_string(),
                e.component,
                e.ptype,
                candidates.len()
            ),
            StepOutcome::Deadlock => break,
        }
    }
    let live = sim.travelling();
    println!(
        "travelling: A {} B {}; finished: A {} B {}",
        live[0],
        live[1],
        sim.global().count(PedType::A),
        sim.global().count(PedType::B)
    );
}
