//! Replicated simulation of one scenario with confidence intervals on the
//! final traversal times.
//!
//! cargo run --release --example simulate_scenario -- routing

use crossbar_sim::cli::{Scenario, ScenarioTag};
use crossbar_sim::stats::{aggregate, average_traversal};
use crossbar_sim::{generate_crossbar, run_replications, CrossbarSpec, PedType, RateParams, RunConfig};

fn main() {
    let tag = match std::env::args().nth(1).as_deref() {
        Some("no-congestion") => ScenarioTag::NoCongestion,
        Some("routing") => ScenarioTag::Routing,
        _ => ScenarioTag::NoRouting,
    };
    let g = generate_crossbar(CrossbarSpec::new(2, 2)).unwrap();
    let model = Scenario::new(tag).model(&g, RateParams::default()).unwrap();
    let cfg = RunConfig { scenario: tag.as_str().into(), ..RunConfig::default() };
    let runs = run_replications(&model, &cfg, 50, false).unwrap();

    println!("2x2, {}, {} replications to t = {}", tag.as_str(), runs.len(), cfg.stop_time);
    for p in PedType::ALL {
        let finished: Vec<f64> = runs
            .iter()
            .filter(|r| r.global.count(p) > 0)
            .map(|r| average_traversal(&r.global, p))
            .collect();
        if finished.is_empty() {
            println!("{p}: no crossings");
            continue;
        }
        let s = aggregate(&finished).unwrap();
        let crossings: u64 = runs.iter().map(|r| r.global.count(p)).sum();
        println!(
            "{p}: mean traversal {:.3} +/- {:.3}, {:.1} crossings per run",
            s.mean,
            s.half_width.unwrap_or(f64::NAN),
            crossings as f64 / runs.len() as f64
        );
    }
}
