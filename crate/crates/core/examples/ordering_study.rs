//! The structure x scenario study: mean travel times and ordering verdicts.
//!
//! cargo run --release --example ordering_study -- 100

use crossbar_sim::cli::{experiment_csv, run_experiment, verdict_report, ExperimentPlan};
use crossbar_sim::RunConfig;

fn main() {
    let replications = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(30);
    let plan = ExperimentPlan::standard(RunConfig::default(), replications);
    let results = run_experiment(&plan).unwrap();
    print!("{}", experiment_csv(&results));
    println!();
    print!("{}", verdict_report(&results));
}
