//! Kinetic Monte-Carlo execution of a [`Model`].
//!
//! Each step prices every enabled action against the current collective,
//! draws an exponential delay at the total rate, and picks one action with
//! probability proportional to its rate. Enabled-action lists depend only on
//! a component's own store, so they are cached per component and refreshed
//! when that component changes; rates are recomputed every step because they
//! read live node occupancy.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::io;

use nalgebra::{DMatrix, DVector};
use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::kernel::{
    apply_local_update, broadcast_receivers, enabled_actions, ActionName, Component, ComponentId,
    ComponentKind, EnabledAction, GlobalStore, KernelError, Occupancy, Predicate, ProcessTerm,
    Spawn,
};
use crate::model::{FinishedPolicy, Model};
use crate::spatial::{Coord, PedType, RateParams, SpatialGraph};
use crate::stats::MeasureSample;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("invariant violation: {0}")]
    Invariant(String),
    #[error("first-passage system: {0}")]
    Oracle(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub stop_time: f64,
    pub sample_interval: f64,
    pub seed: u64,
    pub scenario: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { stop_time: 200.0, sample_interval: 1.0, seed: 1, scenario: "no-routing".into() }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        if !(self.stop_time.is_finite() && self.stop_time > 0.0) {
            return Err(EngineError::InvalidConfig(format!(
                "stop time must be positive, got {}",
                self.stop_time
            )));
        }
        if !(self.sample_interval.is_finite() && self.sample_interval > 0.0) {
            return Err(EngineError::InvalidConfig(format!(
                "sample interval must be positive, got {}",
                self.sample_interval
            )));
        }
        Ok(())
    }

    /// Sample times `k * interval` for every `k` with the product in `[0, stop_time]`.
    pub fn sample_times(&self) -> Vec<f64> {
        let last = (self.stop_time / self.sample_interval + 1e-9).floor() as u64;
        (0..=last).map(|k| k as f64 * self.sample_interval).collect()
    }
}

/// `splitmix64` finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replication `index`: `mix64(seed + (index + 1) * 0x9E3779B97F4A7C15)`.
pub fn replication_seed(seed: u64, index: u64) -> u64 {
    mix64(seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventCandidate {
    pub component: ComponentId,
    pub action: ActionName,
    pub update: Vec<(String, crate::kernel::Value)>,
    pub rate: f64,
    slot: usize,
}

/// One fired event. For `arrive` the subject is the spawned pedestrian and
/// the actor the arrival component; otherwise both are the same.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub time: f64,
    pub action: ActionName,
    pub component: ComponentId,
    pub actor: ComponentId,
    pub ptype: PedType,
    pub from: Option<Coord>,
    pub to: Option<Coord>,
}

impl EventRecord {
    /// Tab-separated line: time, action, component id, type, from, to.
    pub fn to_line(&self) -> String {
        let opt = |c: Option<Coord>| c.map_or_else(|| "-".to_owned(), |c| c.to_string());
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}",
            self.time,
            self.action,
            self.component,
            self.ptype,
            opt(self.from),
            opt(self.to)
        )
    }

    pub fn parse_line(line: &str) -> Result<EventRecord, String> {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 6 {
            return Err(format!("expected 6 columns, found {}", cols.len()));
        }
        let opt = |s: &str| -> Result<Option<Coord>, String> {
            if s == "-" {
                Ok(None)
            } else {
                s.parse().map(Some)
            }
        };
        let component = ComponentId(cols[2].parse().map_err(|_| format!("bad id `{}`", cols[2]))?);
        Ok(EventRecord {
            time: cols[0].parse().map_err(|_| format!("bad time `{}`", cols[0]))?,
            action: cols[1].parse()?,
            component,
            actor: component,
            ptype: cols[3].parse()?,
            from: opt(cols[4])?,
            to: opt(cols[5])?,
        })
    }
}

pub fn write_event_log<W: io::Write>(records: &[EventRecord], mut out: W) -> io::Result<()> {
    for r in records {
        writeln!(out, "{}", r.to_line())?;
    }
    Ok(())
}

pub fn format_event_log(records: &[EventRecord]) -> String {
    let mut s = String::new();
    for r in records {
        let _ = writeln!(s, "{}", r.to_line());
    }
    s
}

pub fn parse_event_log(text: &str) -> Result<Vec<EventRecord>, String> {
    text.lines()
        .filter(|l| !l.is_empty())
        .enumerate()
        .map(|(n, l)| EventRecord::parse_line(l).map_err(|e| format!("line {}: {e}", n + 1)))
        .collect()
}

#[derive(Debug, Clone)]
struct Live {
    component: Component,
    enabled: Vec<EnabledAction>,
}

#[derive(Debug, Clone, Default)]
struct OccupancyMap(HashMap<(PedType, Coord), u64>);

impl OccupancyMap {
    fn add(&mut self, p: PedType, at: Coord) {
        *self.0.entry((p, at)).or_default() += 1;
    }

    fn remove(&mut self, p: PedType, at: Coord) -> Result<(), EngineError> {
        match self.0.get_mut(&(p, at)) {
            Some(n) if *n > 0 => {
                *n -= 1;
                Ok(())
            }
            _ => Err(EngineError::Invariant(format!("no {p} pedestrian recorded at {at}"))),
        }
    }
}

impl Occupancy for OccupancyMap {
    fn occupants(&self, p: PedType, at: Coord) -> u64 {
        self.0.get(&(p, at)).copied().unwrap_or(0)
    }
}

/// Mutable state of a single run.
#[derive(Debug, Clone)]
pub struct SimulationState {
    pub now: f64,
    pub global: GlobalStore,
    live: BTreeMap<ComponentId, Live>,
    occupancy: OccupancyMap,
    travelling: [u64; 2],
    next_id: u64,
    events: u64,
    rng: ChaCha8Rng,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    Fired(EventRecord),
    /// No component has a positive-rate action.
    Deadlock,
}

struct Drawn {
    time: f64,
    candidate: EventCandidate,
}

/// A model together with the state of one run over it.
pub struct Simulation<'m> {
    model: &'m Model,
    state: SimulationState,
}

impl<'m> Simulation<'m> {
    pub fn new(model: &'m Model, seed: u64) -> Result<Self, EngineError> {
        let mut sim = Simulation {
            model,
            state: SimulationState {
                now: 0.0,
                global: GlobalStore::default(),
                live: BTreeMap::new(),
                occupancy: OccupancyMap::default(),
                travelling: [0, 0],
                next_id: 0,
                events: 0,
                rng: ChaCha8Rng::seed_from_u64(seed),
            },
        };
        for spawn in &model.initial {
            sim.spawn(spawn.clone())?;
        }
        Ok(sim)
    }

    pub fn state(&self) -> &SimulationState {
        &self.state
    }

    pub fn now(&self) -> f64 {
        self.state.now
    }

    pub fn global(&self) -> &GlobalStore {
        &self.state.global
    }

    pub fn events(&self) -> u64 {
        self.state.events
    }

    /// Live components in id order.
    pub fn components(&self) -> impl Iterator<Item = &Component> {
        self.state.live.values().map(|l| &l.component)
    }

    /// Pedestrians still travelling, per type.
    pub fn travelling(&self) -> [u64; 2] {
        self.state.travelling
    }

    pub fn occupants(&self, p: PedType, at: Coord) -> u64 {
        self.state.occupancy.occupants(p, at)
    }

    pub fn sample(&self, time: f64) -> MeasureSample {
        MeasureSample::observe(time, &self.state.global, self.state.travelling)
    }

    fn spawn(&mut self, spawn: Spawn) -> Result<ComponentId, EngineError> {
        let id = ComponentId(self.state.next_id);
        self.state.next_id += 1;
        let component = Component { id, kind: spawn.kind, store: spawn.store, process: spawn.process };
        if component.kind == ComponentKind::Pedestrian {
            let (p, at) = pedestrian_position(&component)?;
            self.state.occupancy.add(p, at);
            self.state.travelling[p.index()] += 1;
        }
        let enabled = enabled_actions(&component, &self.model.definitions, self.model.topology.as_ref())?;
        self.state.live.insert(id, Live { component, enabled });
        Ok(id)
    }

    /// Every enabled action with a positive rate, ordered by component id and
    /// then action name.
    pub fn collect_candidates(&self) -> Result<Vec<EventCandidate>, EngineError> {
        let env = self.model.environment.as_ref();
        let mut out = Vec::new();
        for (id, live) in &self.state.live {
            let start = out.len();
            for (slot, act) in live.enabled.iter().enumerate() {
                let rate = crate::kernel::EvaluationContext::rate(
                    env,
                    &live.component.store,
                    act.action,
                    &self.state.occupancy,
                );
                if !rate.is_finite() || rate < 0.0 {
                    return Err(EngineError::Invariant(format!(
                        "rate {rate} for {} of component {id}",
                        act.action
                    )));
                }
                if rate > 0.0 {
                    out.push(EventCandidate {
                        component: *id,
                        action: act.action,
                        update: act.update.clone(),
                        rate,
                        slot,
                    });
                }
            }
            out[start..].sort_by_key(|a| a.action);
        }
        Ok(out)
    }

    /// Candidates rebuilt from scratch, bypassing the per-component cache.
    pub fn fresh_candidates(&self) -> Result<Vec<(ComponentId, ActionName, f64)>, EngineError> {
        let env = self.model.environment.as_ref();
        let mut out = Vec::new();
        for c in self.components() {
            let mut acts: Vec<(ComponentId, ActionName, f64)> =
                enabled_actions(c, &self.model.definitions, self.model.topology.as_ref())?
                    .into_iter()
                    .map(|a| {
                        let r = crate::kernel::EvaluationContext::rate(
                            env,
                            &c.store,
                            a.action,
                            &self.state.occupancy,
                        );
                        (c.id, a.action, r)
                    })
                    .filter(|t| t.2 > 0.0)
                    .collect();
            acts.sort_by_key(|a| a.1);
            out.extend(acts);
        }
        Ok(out)
    }

    fn draw(&mut self) -> Result<Option<Drawn>, EngineError> {
        let candidates = self.collect_candidates()?;
        if candidates.is_empty() {
            return Ok(None);
        }
        let total: f64 = candidates.iter().map(|c| c.rate).sum();
        let u: f64 = self.state.rng.sample(Open01);
        let dt = -u.ln() / total;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(EngineError::Invariant(format!("non-positive time step {dt}")));
        }
        let pick = self.state.rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut chosen = candidates.len() - 1;
        for (k, c) in candidates.iter().enumerate() {
            acc += c.rate;
            if pick < acc {
                chosen = k;
                break;
            }
        }
        let candidate = candidates.into_iter().nth(chosen).expect("index in range");
        Ok(Some(Drawn { time: self.state.now + dt, candidate }))
    }

    fn fire(&mut self, drawn: Drawn) -> Result<EventRecord, EngineError> {
        let Drawn { time, candidate } = drawn;
        let live = self
            .state
            .live
            .get(&candidate.component)
            .ok_or_else(|| EngineError::Invariant("candidate component vanished".into()))?;
        let enabled = live.enabled[candidate.slot].clone();
        let sender = live.component.clone();
        let ptype = sender
            .store
            .ped_type()
            .ok_or_else(|| EngineError::Invariant(format!("component {} has no type", sender.id)))?;

        if enabled.target != Predicate::BOTTOM {
            // No component offers an input prefix, so receivers are only identified.
            let _ = broadcast_receivers(
                sender.id,
                &enabled.target,
                self.components(),
                self.model.topology.as_ref(),
            );
        }

        let mut updated = apply_local_update(&sender, &enabled.update)?;
        updated.process = enabled.next.clone();
        let effect = crate::kernel::EvaluationContext::update(
            self.model.environment.as_ref(),
            &self.state.global,
            time,
            enabled.action,
            &sender.store,
        )?;

        self.state.now = time;
        self.state.global = effect.global;
        self.state.events += 1;

        let mut record = EventRecord {
            time,
            action: enabled.action,
            component: sender.id,
            actor: sender.id,
            ptype,
            from: None,
            to: None,
        };

        if sender.kind == ComponentKind::Pedestrian {
            let (_, from) = pedestrian_position(&sender)?;
            let (_, to) = pedestrian_position(&updated)?;
            record.from = Some(from);
            if from != to {
                record.to = Some(to);
                self.state.occupancy.remove(ptype, from)?;
                self.state.occupancy.add(ptype, to);
            }
        }

        let retain = self.model.finished == FinishedPolicy::Retain;
        if enabled.action == ActionName::Fin {
            self.state.travelling[ptype.index()] = self.state.travelling[ptype.index()]
                .checked_sub(1)
                .ok_or_else(|| EngineError::Invariant("population underflow".into()))?;
        }
        let remove = (effect.remove_sender && !retain) || updated.process == ProcessTerm::Kill;
        if remove {
            self.state.live.remove(&sender.id);
            if sender.kind == ComponentKind::Pedestrian {
                let (_, at) = pedestrian_position(&updated)?;
                self.state.occupancy.remove(ptype, at)?;
            }
        } else {
            let enabled =
                enabled_actions(&updated, &self.model.definitions, self.model.topology.as_ref())?;
            self.state.live.insert(sender.id, Live { component: updated, enabled });
        }

        for spawn in effect.spawn {
            let at = spawn.store.coord();
            let id = self.spawn(spawn)?;
            record.component = id;
            record.to = at;
        }
        Ok(record)
    }

    /// Fires exactly one event, or reports that nothing can fire.
    pub fn step(&mut self) -> Result<StepOutcome, EngineError> {
        match self.draw()? {
            None => Ok(StepOutcome::Deadlock),
            Some(d) => Ok(StepOutcome::Fired(self.fire(d)?)),
        }
    }
}

fn pedestrian_position(c: &Component) -> Result<(PedType, Coord), EngineError> {
    match (c.store.ped_type(), c.store.coord()) {
        (Some(p), Some(at)) => Ok((p, at)),
        _ => Err(EngineError::Invariant(format!("pedestrian {} lacks type or position", c.id))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub samples: Vec<MeasureSample>,
    pub global: GlobalStore,
    pub events: u64,
    pub end_time: f64,
    pub deadlocked: bool,
    pub log: Option<Vec<EventRecord>>,
}

/// Runs until the next event would fall after `stop_time`, sampling the
/// measures at every grid point with the value in force just before it.
pub fn run(model: &Model, cfg: &RunConfig, keep_log: bool) -> Result<RunOutput, EngineError> {
    cfg.validate()?;
    let grid = cfg.sample_times();
    let mut sim = Simulation::new(model, cfg.seed)?;
    let mut samples = Vec::with_capacity(grid.len());
    let mut next_sample = 0;
    let mut log = keep_log.then(Vec::new);
    let mut deadlocked = false;

    loop {
        let drawn = sim.draw()?;
        let horizon = match &drawn {
            Some(d) if d.time <= cfg.stop_time => d.time,
            other => {
                deadlocked = other.is_none();
                f64::INFINITY
            }
        };
        while next_sample < grid.len() && grid[next_sample] < horizon {
            samples.push(sim.sample(grid[next_sample]));
            next_sample += 1;
        }
        match drawn {
            Some(d) if d.time <= cfg.stop_time => {
                let record = sim.fire(d)?;
                if let Some(log) = log.as_mut() {
                    log.push(record);
                }
            }
            _ => break,
        }
    }

    Ok(RunOutput {
        samples,
        global: sim.state.global,
        events: sim.state.events,
        end_time: sim.state.now,
        deadlocked,
        log,
    })
}

/// Independent replications with seeds derived by [`replication_seed`],
/// returned in replication order.
pub fn run_replications(
    model: &Model,
    cfg: &RunConfig,
    replications: usize,
    keep_log: bool,
) -> Result<Vec<RunOutput>, EngineError> {
    cfg.validate()?;
    (0..replications as u64)
        .into_par_iter()
        .map(|i| {
            let cfg = RunConfig { seed: replication_seed(cfg.seed, i), ..cfg.clone() };
            run(model, &cfg, keep_log)
        })
        .collect()
}

/// Expected time for a lone type-`p` pedestrian to cross from start to goal
/// and finish, with every move at the uncongested rate `move_p`.
///
/// Solves `R_v E[T_v] - sum_w r_vw E[T_w] = 1` over the non-goal nodes
/// reachable from the start (the goal is absorbing with `E[T] = 0`) and adds
/// the mean `fin` delay `1 / lambda_fast`.
pub fn expected_first_passage(
    g: &SpatialGraph,
    p: PedType,
    params: &RateParams,
) -> Result<f64, EngineError> {
    let start = g.start_coords(p);
    let goal = g.goal_coords(p);
    let rate = params.move_base(p);

    let mut index: BTreeMap<Coord, usize> = BTreeMap::new();
    let mut order = vec![start];
    index.insert(start, 0);
    let mut k = 0;
    while k < order.len() {
        let v = order[k];
        k += 1;
        if v == goal {
            continue;
        }
        for w in g.successors(p, v).map_err(|e| EngineError::Oracle(e.to_string()))? {
            if let std::collections::btree_map::Entry::Vacant(e) = index.entry(w) {
                e.insert(order.len());
                order.push(w);
            }
        }
    }
    if !index.contains_key(&goal) {
        return Err(EngineError::Oracle(format!("goal of {p} unreachable")));
    }
    if start == goal {
        return Ok(1.0 / params.lambda_fast);
    }

    let transient: Vec<Coord> = order.iter().copied().filter(|&v| v != goal).collect();
    let pos: BTreeMap<Coord, usize> = transient.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let n = transient.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    let b = DVector::<f64>::from_element(n, 1.0);
    for (i, &v) in transient.iter().enumerate() {
        let succ = g.successors(p, v).map_err(|e| EngineError::Oracle(e.to_string()))?;
        if succ.is_empty() {
            return Err(EngineError::Oracle(format!("node {v} is a dead end for {p}")));
        }
        a[(i, i)] = rate * succ.len() as f64;
        for w in succ {
            if let Some(&j) = pos.get(&w) {
                a[(i, j)] -= rate;
            }
        }
    }
    let solution = a
        .lu()
        .solve(&b)
        .ok_or_else(|| EngineError::Oracle("singular system (goal not reachable from every node)".into()))?;
    Ok(solution[pos[&start]] + 1.0 / params.lambda_fast)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RouteTable;
    use crate::spatial::{generate_crossbar, CrossbarSpec, Node, DirectedEdge, Subgraph, Colour};
    use std::sync::Arc;

    fn model(w: u32, h: u32, params: RateParams) -> Model {
        let g = generate_crossbar(CrossbarSpec::new(w, h)).unwrap();
        Model::from_graph(g, params, RouteTable::none()).unwrap()
    }

    #[test]
    fn initial_candidates_are_the_two_arrivals() {
        let params = RateParams { arr_a: 0.3, arr_b: 0.6, ..Default::default() };
        let m = model(1, 1, params);
        let sim = Simulation::new(&m, 1).unwrap();
        let c = sim.collect_candidates().unwrap();
        assert_eq!(c.len(), 2);
        assert!(c.iter().all(|c| c.action == ActionName::Arrive));
        assert_eq!((c[0].rate, c[1].rate), (0.3, 0.6));
    }

    #[test]
    fn zero_rate_arrivals_are_not_candidates() {
        let m = model(1, 1, RateParams { arr_b: 0.0, ..Default::default() });
        let sim = Simulation::new(&m, 1).unwrap();
        let c = sim.collect_candidates().unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].component, ComponentId(0));
    }

    #[test]
    fn arrived_pedestrian_adds_its_moves() {
        let g = generate_crossbar(CrossbarSpec::new(1, 1)).unwrap();
        let m = Model::from_graph(g, RateParams::default(), RouteTable::none()).unwrap();
        let mut sim = Simulation::new(&m, 11).unwrap();
        // fire until exactly one pedestrian is on the network
        loop {
            sim.step().unwrap();
            let peds = sim.components().filter(|c| c.kind == ComponentKind::Pedestrian).count();
            if peds == 1 {
                break;
            }
        }
        let ped = sim.components().find(|c| c.kind == ComponentKind::Pedestrian).unwrap().clone();
        let c = sim.collect_candidates().unwrap();
        let moves = c.iter().filter(|c| c.component == ped.id).count();
        // L and R each have two admissible exits on the 1x1 graph
        assert_eq!(moves, 2);
        assert_eq!(c.len(), 4);
    }

    #[test]
    fn proportional_selection_frequency() {
        let params = RateParams { arr_a: 1.0, arr_b: 3.0, ..Default::default() };
        let m = model(1, 1, params);
        let n = 20_000;
        let mut picked_b = 0;
        let mut dt_sum = 0.0;
        for seed in 0..n {
            let mut sim = Simulation::new(&m, seed).unwrap();
            match sim.step().unwrap() {
                StepOutcome::Fired(r) => {
                    if r.ptype == PedType::B {
                        picked_b += 1;
                    }
                    dt_sum += r.time;
                }
                StepOutcome::Deadlock => panic!("arrivals are active"),
            }
        }
        let freq = picked_b as f64 / n as f64;
        // binomial sd = sqrt(0.75*0.25/n) ~ 0.0031
        assert!((freq - 0.75).abs() < 0.015, "freq {freq}");
        // exponential mean 1/4 with sd 0.25/sqrt(n) ~ 0.0018
        assert!((dt_sum / n as f64 - 0.25).abs() < 0.01);
    }

    #[test]
    fn dead_system_has_no_events() {
        let m = model(1, 1, RateParams { arr_a: 0.0, arr_b: 0.0, ..Default::default() });
        let cfg = RunConfig { stop_time: 10.0, sample_interval: 1.0, ..Default::default() };
        let out = run(&m, &cfg, true).unwrap();
        assert_eq!(out.events, 0);
        assert!(out.deadlocked);
        assert_eq!(out.samples.len(), 11);
        assert_eq!(out.global, GlobalStore::default());
    }

    #[test]
    fn sample_grid_has_eleven_points() {
        let m = model(1, 1, RateParams::default());
        let cfg = RunConfig { stop_time: 10.0, sample_interval: 1.0, ..Default::default() };
        let out = run(&m, &cfg, false).unwrap();
        let times: Vec<f64> = out.samples.iter().map(|s| s.time).collect();
        assert_eq!(times, (0..=10).map(f64::from).collect::<Vec<_>>());
        assert!(out.end_time <= 10.0);
    }

    #[test]
    fn invalid_config_rejected() {
        let m = model(1, 1, RateParams::default());
        for (stop, dt) in [(0.0, 1.0), (10.0, 0.0), (-1.0, 1.0), (f64::NAN, 1.0)] {
            let cfg = RunConfig { stop_time: stop, sample_interval: dt, ..Default::default() };
            assert!(matches!(run(&m, &cfg, false), Err(EngineError::InvalidConfig(_))));
        }
    }

    #[test]
    fn same_seed_same_log() {
        let m = model(2, 2, RateParams::default());
        let cfg = RunConfig { stop_time: 30.0, seed: 99, ..Default::default() };
        let a = run(&m, &cfg, true).unwrap();
        let b = run(&m, &cfg, true).unwrap();
        assert_eq!(a, b);
        assert!(a.events > 0);
    }

    #[test]
    fn cached_candidates_match_fresh_recomputation() {
        for (w, h, seed) in [(1, 1, 1), (2, 2, 2), (3, 2, 3)] {
            let g = generate_crossbar(CrossbarSpec::new(w, h)).unwrap();
            let routes = RouteTable::separated_entries(&g);
            let m = Model::from_graph(g, RateParams::default(), routes).unwrap();
            let mut sim = Simulation::new(&m, seed).unwrap();
            for _ in 0..2000 {
                let cached: Vec<_> = sim
                    .collect_candidates()
                    .unwrap()
                    .into_iter()
                    .map(|c| (c.component, c.action, c.rate))
                    .collect();
                assert_eq!(cached, sim.fresh_candidates().unwrap());
                sim.step().unwrap();
            }
        }
    }

    #[test]
    fn occupancy_matches_direct_count() {
        let m = model(2, 1, RateParams::default());
        let mut sim = Simulation::new(&m, 5).unwrap();
        let coords = m.topology.nodes();
        for _ in 0..1500 {
            sim.step().unwrap();
            for p in PedType::ALL {
                let mut sum = 0;
                for &c in &coords {
                    let direct = crate::spatial::count_at(sim.components(), p, c);
                    assert_eq!(sim.occupants(p, c), direct);
                    sum += direct;
                }
                assert_eq!(sum, sim.travelling()[p.index()]);
            }
        }
    }

    #[test]
    fn log_lines_round_trip() {
        let m = model(1, 2, RateParams::default());
        let cfg = RunConfig { stop_time: 20.0, seed: 4, ..Default::default() };
        let log = run(&m, &cfg, true).unwrap().log.unwrap();
        let text = format_event_log(&log);
        let parsed = parse_event_log(&text).unwrap();
        assert_eq!(parsed.len(), log.len());
        for (a, b) in parsed.iter().zip(&log) {
            assert_eq!((a.time, a.action, a.component, a.ptype, a.from, a.to),
                       (b.time, b.action, b.component, b.ptype, b.from, b.to));
        }
    }

    fn chain(rates_nodes: usize) -> SpatialGraph {
        // straight line 0 -> 1 -> ... -> n for A, reverse for B
        let nodes: Vec<Node> =
            (0..=rates_nodes as u32).map(|i| Node { id: i, x: i64::from(i), y: 0 }).collect();
        let mut edges = Vec::new();
        for i in 0..rates_nodes as u32 {
            edges.push(DirectedEdge { from: i, to: i + 1, colour: Colour::Red });
            edges.push(DirectedEdge { from: i + 1, to: i, colour: Colour::Blue });
        }
        let red = (0..edges.len()).step_by(2).collect();
        let blue = (1..edges.len()).step_by(2).collect();
        let n = rates_nodes as u32;
        SpatialGraph::new(
            nodes,
            edges,
            [Subgraph { edges: red, start: 0, goal: n }, Subgraph { edges: blue, start: n, goal: 0 }],
            rates_nodes as u64,
        )
        .unwrap()
    }

    #[test]
    fn first_passage_on_chains() {
        let p1 = RateParams { move_a: 1.0, ..Default::default() };
        let t = expected_first_passage(&chain(1), PedType::A, &p1).unwrap();
        assert!((t - 1.001).abs() < 1e-12);
        let p2 = RateParams { move_a: 2.0, ..Default::default() };
        let t = expected_first_passage(&chain(2), PedType::A, &p2).unwrap();
        assert!((t - 1.001).abs() < 1e-12);
    }

    #[test]
    fn first_passage_on_crossbar_1x1() {
        // Hand solution on the 1x1 red subgraph with unit rates:
        // from L: 1/2 + (E10 + E11)/2; E10 = 1/2 + (E20 + E11)/2; E11 = 1/2 + (E21 + E10)/2;
        // E20 = 1/2 + (R + E21)/2 with R = 0; E21 = 1/2 + (R + E20)/2.
        // => E20 = E21 = 1, E10 = E11 = 2, E_L = 2.5
        let g = generate_crossbar(CrossbarSpec::new(1, 1)).unwrap();
        let t = expected_first_passage(&g, PedType::A, &RateParams::default()).unwrap();
        assert!((t - 2.501).abs() < 1e-12, "{t}");
        let tb = expected_first_passage(&g, PedType::B, &RateParams::default()).unwrap();
        assert!((t - tb).abs() < 1e-12);
    }

    #[test]
    fn single_traversal_terminates() {
        let g = Arc::new(generate_crossbar(CrossbarSpec::new(2, 2)).unwrap());
        let m = Model::single_traversal(g, RateParams::default(), PedType::B).unwrap();
        let cfg = RunConfig { stop_time: 1e9, sample_interval: 1e9, ..Default::default() };
        let out = run(&m, &cfg, false).unwrap();
        assert!(out.deadlocked);
        assert_eq!(out.global.count, [0, 1]);
        assert!(out.global.total[1] > 0.0);
    }

    #[test]
    fn replication_seeds_are_distinct() {
        let seeds: std::collections::BTreeSet<u64> = (0..1000).map(|i| replication_seed(7, i)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_eq!(replication_seed(7, 3), replication_seed(7, 3));
    }
}
