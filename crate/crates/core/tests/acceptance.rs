//! One test per acceptance criterion; each prints a single PASS/FAIL line.

use std::collections::HashMap;
use std::sync::Arc;

use crossbar_sim::cli::{
    cmd_simulate, run_experiment, ExperimentPlan, RunArgs, Scenario, ScenarioTag, SimulateArgs,
};
use crossbar_sim::codegen::{emit_graph_spec, emit_model_with_routes, load_model, loc_estimate, parse_graph_spec};
use crossbar_sim::engine::{expected_first_passage, format_event_log, run, run_replications, EventRecord};
use crossbar_sim::kernel::ActionName;
use crossbar_sim::spatial::move_rate;
use crossbar_sim::stats::{aggregate, average_traversal};
use crossbar_sim::{generate_crossbar, CrossbarSpec, Model, PedType, RateParams, RunConfig, SpatialGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(n: u32, name: &str, ok: bool, detail: &str) {
    println!("criterion {n} [{}] {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {n} failed: {detail}");
}

fn crossbar(w: u32, h: u32) -> SpatialGraph {
    generate_crossbar(CrossbarSpec::new(w, h)).unwrap()
}

#[test]
fn criterion_1_size_table() {
    // (width, height) -> (nodes, connections, loc) as published
    let table = [
        ((1, 1), (6, 8, 208)),
        ((2, 1), (8, 12, 248)),
        ((3, 1), (10, 16, 288)),
        ((1, 2), (8, 13, 258)),
        ((2, 2), (11, 20, 328)),
        ((3, 2), (14, 27, 398)),
        ((1, 3), (10, 18, 308)),
        ((2, 3), (14, 28, 408)),
        ((3, 3), (18, 38, 508)),
    ];
    let mut mismatches = Vec::new();
    for ((w, h), expected) in table {
        let g = crossbar(w, h);
        let got = (g.nodes().len() as u64, g.connection_count(), loc_estimate(&g));
        if got != expected {
            mismatches.push(format!("{}: {got:?} != {expected:?}", CrossbarSpec::new(w, h).label()));
        }
    }
    let detail = if mismatches.is_empty() { "all 9 rows exact".to_owned() } else { mismatches.join("; ") };
    report(1, "size table", mismatches.is_empty(), &detail);
}

#[test]
fn criterion_2_first_passage_oracle() {
    let params = RateParams::default();
    let n = 10_000;
    let cfg = RunConfig { stop_time: 1.0e4, sample_interval: 1.0e4, seed: 2024, scenario: "single".into() };
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for w in 1..=2 {
        for h in 1..=2 {
            let g = crossbar(w, h);
            for p in PedType::ALL {
                let oracle = expected_first_passage(&g, p, &params).unwrap();
                let model = Model::single_traversal(Arc::new(g.clone()), params, p).unwrap();
                let runs = run_replications(&model, &cfg, n, false).unwrap();
                let times: Vec<f64> = runs
                    .iter()
                    .map(|r| {
                        assert_eq!(r.global.count(p), 1, "pedestrian did not finish");
                        average_traversal(&r.global, p)
                    })
                    .collect();
                let s = aggregate(&times).unwrap();
                let z = (s.mean - oracle).abs() / s.std_error();
                worst = worst.max(z);
                if z >= 3.0 {
                    failures.push(format!("{} {p}: mean {:.4} oracle {oracle:.4} ({z:.2} SE)", CrossbarSpec::new(w, h).label(), s.mean));
                }
            }
        }
    }
    let detail = if failures.is_empty() {
        format!("8 graph/type pairs, worst deviation {worst:.2} SE")
    } else {
        failures.join("; ")
    };
    report(2, "first-passage oracle", failures.is_empty(), &detail);
}

#[test]
fn criterion_3_ordering_claims() {
    let plan = ExperimentPlan::standard(RunConfig::default(), 100);
    let results = run_experiment(&plan).unwrap();
    for c in &results.claims {
        println!("    [{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.claim, c.detail);
    }
    let failed = results.claims.iter().filter(|c| !c.passed).count();
    report(
        3,
        "ordering claims",
        failed == 0,
        &format!("{} of {} claims hold", results.claims.len() - failed, results.claims.len()),
    );
}

/// Checks the log of one run against its final global store and the graph.
fn check_trace(g: &SpatialGraph, log: &[EventRecord], count: [u64; 2], total: [f64; 2], live_at_samples: &[(f64, [u64; 2])]) -> Result<(), String> {
    let mut spawned: HashMap<u64, f64> = HashMap::new();
    let mut fins = [0u64; 2];
    let mut recomputed = [0.0f64; 2];
    let mut live = [0i64; 2];
    let mut live_after: Vec<(f64, [i64; 2])> = Vec::new();
    for e in log {
        let k = e.ptype.index();
        match e.action {
            ActionName::Arrive => {
                spawned.insert(e.component.0, e.time);
                live[k] += 1;
            }
            ActionName::Fin => {
                fins[k] += 1;
                let t0 = spawned.get(&e.component.0).ok_or("fin of unknown pedestrian")?;
                recomputed[k] += e.time - t0;
                live[k] -= 1;
            }
            ActionName::Move(to) => {
                let from = e.from.ok_or("move without origin")?;
                let ok = g.successors(e.ptype, from).map_err(|e| e.to_string())?.contains(&to);
                if !ok || e.to != Some(to) {
                    return Err(format!("inadmissible move {from} -> {to} for {}", e.ptype));
                }
            }
        }
        if live[k] < 0 {
            return Err("more completions than arrivals".into());
        }
        live_after.push((e.time, live));
    }
    if fins != count {
        return Err(format!("fin events {fins:?} vs count {count:?}"));
    }
    for k in 0..2 {
        let scale = total[k].abs().max(1.0);
        if (recomputed[k] - total[k]).abs() / scale > 1e-9 {
            return Err(format!("total {} recomputed {}", total[k], recomputed[k]));
        }
    }
    for &(t, sampled) in live_at_samples {
        let expected = live_after.iter().take_while(|(et, _)| *et < t).last().map_or([0, 0], |x| x.1);
        if [expected[0] as u64, expected[1] as u64] != sampled {
            return Err(format!("live population at {t}: sampled {sampled:?}, log says {expected:?}"));
        }
    }
    Ok(())
}

#[test]
fn criterion_4_conservation_and_traces() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let configs = 60;
    let mut failures = Vec::new();
    for i in 0..configs {
        let (w, h) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
        let tag = ScenarioTag::ALL[rng.gen_range(0..3)];
        let seed: u64 = rng.gen();
        let g = crossbar(w, h);
        let model = Scenario::new(tag).model(&g, RateParams::default()).unwrap();
        let cfg = RunConfig { stop_time: 60.0, sample_interval: 0.5, seed, scenario: tag.as_str().into() };
        let out = run(&model, &cfg, true).unwrap();
        let samples: Vec<(f64, [u64; 2])> = out.samples.iter().map(|s| (s.time, s.live)).collect();
        if let Err(e) = check_trace(&g, out.log.as_ref().unwrap(), out.global.count, out.global.total, &samples) {
            failures.push(format!("config {i} ({}, {}, seed {seed}): {e}", CrossbarSpec::new(w, h).label(), tag.as_str()));
        }
    }
    let detail = if failures.is_empty() { format!("{configs} randomized configurations") } else { failures.join("; ") };
    report(4, "conservation and trace invariants", failures.is_empty(), &detail);
}

#[test]
fn criterion_5_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut failures = Vec::new();
    for i in 0..10 {
        let (w, h) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
        let scenario = ScenarioTag::ALL[rng.gen_range(0..3)];
        let seed: u64 = rng.gen();
        let mut outputs = Vec::new();
        for attempt in 0..2 {
            let csv = dir.path().join(format!("run{i}_{attempt}.csv"));
            let log = dir.path().join(format!("run{i}_{attempt}.log"));
            let args = SimulateArgs {
                width: Some(w),
                height: Some(h),
                graph: None,
                scenario,
                run: RunArgs { stop_time: 40.0, sample_interval: 1.0, replications: 3, seed },
                out: Some(csv.clone()),
                event_log: Some(log.clone()),
            };
            cmd_simulate(&args).unwrap();
            let logs: Vec<Vec<u8>> = (0..3)
                .map(|r| std::fs::read(format!("{}.{r}", log.display())).unwrap())
                .collect();
            outputs.push((std::fs::read(&csv).unwrap(), logs));
        }
        if outputs[0] != outputs[1] {
            failures.push(format!("configuration {i} differs between invocations"));
        }
    }
    let detail = if failures.is_empty() { "10 configurations byte-identical".to_owned() } else { failures.join("; ") };
    report(5, "determinism", failures.is_empty(), &detail);
}

#[test]
fn criterion_6_codegen_round_trip() {
    let mut failures = Vec::new();
    for w in 1..=6 {
        for h in 1..=6 {
            let g = crossbar(w, h);
            let text = emit_graph_spec(&g);
            match parse_graph_spec(&text) {
                Ok(back) if back == g && emit_graph_spec(&back) == text => {}
                Ok(_) => failures.push(format!("{} does not round-trip", CrossbarSpec::new(w, h).label())),
                Err(e) => failures.push(format!("{}: {e}", CrossbarSpec::new(w, h).label())),
            }
        }
    }
    let configs = [(1, 1, ScenarioTag::NoRouting, 11), (2, 1, ScenarioTag::Routing, 12), (1, 2, ScenarioTag::NoCongestion, 13), (2, 2, ScenarioTag::Routing, 14), (3, 2, ScenarioTag::NoRouting, 15)];
    for (w, h, tag, seed) in configs {
        let g = crossbar(w, h);
        let (params, routes) = Scenario::new(tag).apply(&g, RateParams::default());
        let direct = Model::new(Arc::new(g.clone()), params, routes.clone()).unwrap();
        let generated = load_model(&emit_model_with_routes(&g, &params, &routes).text).unwrap();
        let cfg = RunConfig { stop_time: 50.0, sample_interval: 1.0, seed, scenario: tag.as_str().into() };
        let a = run(&direct, &cfg, true).unwrap();
        let b = run(&generated, &cfg, true).unwrap();
        if format_event_log(a.log.as_deref().unwrap()) != format_event_log(b.log.as_deref().unwrap()) {
            failures.push(format!("{} {} seed {seed}: event logs differ", CrossbarSpec::new(w, h).label(), tag.as_str()));
        }
    }
    let detail = if failures.is_empty() {
        "36 graphs round-trip, 5 differential runs identical".to_owned()
    } else {
        failures.join("; ")
    };
    report(6, "codegen round trip", failures.is_empty(), &detail);
}

#[test]
fn criterion_7_move_rate_law() {
    let bases = [0.5, 1.0, 2.0];
    let mut checked = 0;
    let mut failures = Vec::new();
    for move_a in bases {
        for move_b in bases {
            let params = RateParams { move_a, move_b, ..RateParams::default() };
            for a in 0..=10u64 {
                for b in 0..=10u64 {
                    let ra = move_rate(&params, PedType::A, a, b);
                    let rb = move_rate(&params, PedType::B, a, b);
                    let expect_a = move_a / (b as f64 + 1.0);
                    let expect_b = move_b / (a as f64 + 1.0);
                    if ra != expect_a || rb != expect_b {
                        failures.push(format!("move_A={move_a} move_B={move_b} a={a} b={b}"));
                    }
                    // same-type count has no effect
                    if ra != move_rate(&params, PedType::A, 0, b) || rb != move_rate(&params, PedType::B, a, 0) {
                        failures.push(format!("same-type dependence at a={a} b={b}"));
                    }
                    checked += 1;
                }
            }
        }
    }
    let detail = if failures.is_empty() { format!("{checked} combinations exact") } else { failures.join("; ") };
    report(7, "congestion rate law", failures.is_empty(), &detail);
}
