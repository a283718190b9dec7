//! The pedestrian counter-flow model: `Pedestrian` and `Arrival` behaviour,
//! the environment's rate and update functions, and entry-route restrictions.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::kernel::{
    ActionName, ComponentKind, Definitions, EnvEffect, EvaluationContext, Expr, GlobalStore,
    KernelError, Occupancy, Predicate, ProcessTerm, Schema, Spawn, Store, Topology, UpdateBlock,
    Value, ValueKind,
};
use crate::spatial::{arrival_rate, move_rate, Coord, PedType, RateParams, SpatialGraph};

pub const PED: &str = "Ped";
pub const ARR: &str = "Arr";

pub fn pedestrian_schema() -> Schema {
    Schema::default()
        .declare("P", ValueKind::Sym)
        .declare("x", ValueKind::Int)
        .declare("y", ValueKind::Int)
        .declare("stime", ValueKind::Real)
}

pub fn arrival_schema() -> Schema {
    Schema::default().declare("P", ValueKind::Sym)
}

/// `Ped` is the sum over every node `(i, j)` of
/// `[ExistsPath(P,x,y,i,j)] move_ij*{x <- i, y <- j}.Ped`, plus
/// `[AtGoal(P,x,y)] fin*.nil`. `Arr` is `arrive*.Arr`.
pub fn pedestrian_definitions(nodes: &[Coord]) -> Definitions {
    let mut summands: Vec<ProcessTerm> = nodes
        .iter()
        .map(|&to| {
            let guard = Predicate::ExistsPath {
                ptype: Expr::attr("P"),
                x: Expr::attr("x"),
                y: Expr::attr("y"),
                i: Expr::int(to.x),
                j: Expr::int(to.y),
            };
            let step = ProcessTerm::broadcast(
                ActionName::Move(to),
                UpdateBlock::default()
                    .assign("x", Expr::int(to.x))
                    .assign("y", Expr::int(to.y)),
                ProcessTerm::constant(PED),
            );
            ProcessTerm::guard(guard, step)
        })
        .collect();
    summands.push(ProcessTerm::guard(
        Predicate::AtGoal { ptype: Expr::attr("P"), x: Expr::attr("x"), y: Expr::attr("y") },
        ProcessTerm::broadcast(ActionName::Fin, UpdateBlock::default(), ProcessTerm::Nil),
    ));

    let mut defs = Definitions::new();
    defs.define(PED, ProcessTerm::Choice(summands))
        .define(
            ARR,
            ProcessTerm::broadcast(ActionName::Arrive, UpdateBlock::default(), ProcessTerm::constant(ARR)),
        )
        .declare_kind(ComponentKind::Pedestrian, pedestrian_schema(), PED)
        .declare_kind(ComponentKind::Arrival, arrival_schema(), ARR);
    defs
}

pub fn pedestrian_store(p: PedType, at: Coord, stime: f64) -> Store {
    Store::new()
        .with("P", Value::sym(p.as_str()))
        .with("x", Value::Int(at.x))
        .with("y", Value::Int(at.y))
        .with("stime", Value::Real(stime))
}

pub fn arrival_store(p: PedType) -> Store {
    Store::new().with("P", Value::sym(p.as_str()))
}

/// Per-type directed moves whose rate is forced to zero.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RouteTable {
    blocked: BTreeSet<(PedType, Coord, Coord)>,
}

impl RouteTable {
    pub fn none() -> Self {
        RouteTable::default()
    }

    pub fn block(&mut self, p: PedType, from: Coord, to: Coord) {
        self.blocked.insert((p, from, to));
    }

    pub fn is_blocked(&self, p: PedType, from: Coord, to: Coord) -> bool {
        self.blocked.contains(&(p, from, to))
    }

    pub fn is_empty(&self) -> bool {
        self.blocked.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(PedType, Coord, Coord)> {
        self.blocked.iter()
    }

    /// Keeps one entry edge per type: `A` may only leave its start towards the
    /// highest-`y` successor, `B` only towards the lowest-`y` successor.
    pub fn separated_entries(g: &SpatialGraph) -> RouteTable {
        let mut table = RouteTable::none();
        for p in PedType::ALL {
            let start = g.start_coords(p);
            let succ = g.successors(p, start).expect("start is a node");
            let keep = match p {
                PedType::A => succ.iter().max_by_key(|c| (c.y, c.x)),
                PedType::B => succ.iter().min_by_key(|c| (c.y, -c.x)),
            }
            .copied();
            for to in succ {
                if Some(to) != keep {
                    table.block(p, start, to);
                }
            }
        }
        table
    }

    /// Number of admissible entry edges left open for `p`.
    pub fn open_entries(&self, g: &SpatialGraph, p: PedType) -> usize {
        let start = g.start_coords(p);
        g.successors(p, start)
            .expect("start is a node")
            .into_iter()
            .filter(|&to| !self.is_blocked(p, start, to))
            .count()
    }
}

/// Evaluation context of the counter-flow model: receivers accept with
/// probability 1 and weight 1, arrivals fire at `ArrivalRate`, moves at the
/// congestion-dependent `MoveRate` and everything else at `lambda_fast`.
#[derive(Debug, Clone)]
pub struct PedestrianEnvironment {
    pub params: RateParams,
    pub routes: RouteTable,
    topology: Arc<dyn Topology>,
}

impl std::fmt::Debug for dyn Topology {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Topology({} nodes)", self.nodes().len())
    }
}

impl PedestrianEnvironment {
    pub fn new(params: RateParams, routes: RouteTable, topology: Arc<dyn Topology>) -> Self {
        PedestrianEnvironment { params, routes, topology }
    }

    fn sender_type(sender: &Store) -> Result<PedType, KernelError> {
        sender
            .ped_type()
            .ok_or_else(|| KernelError::Invariant("sender has no pedestrian type".into()))
    }
}

impl EvaluationContext for PedestrianEnvironment {
    fn probability(&self, _sender: &Store, _receiver: &Store, _action: ActionName) -> f64 {
        1.0
    }

    fn weight(&self, _sender: &Store, _receiver: &Store, _action: ActionName) -> f64 {
        1.0
    }

    fn rate(&self, sender: &Store, action: ActionName, occupancy: &dyn Occupancy) -> f64 {
        let Some(p) = sender.ped_type() else { return 0.0 };
        match action {
            ActionName::Arrive => arrival_rate(&self.params, p),
            ActionName::Move(to) => {
                let from = sender.coord().expect("moving component has a position");
                if self.routes.is_blocked(p, from, to) {
                    return 0.0;
                }
                move_rate(
                    &self.params,
                    p,
                    occupancy.occupants(PedType::A, to),
                    occupancy.occupants(PedType::B, to),
                )
            }
            ActionName::Fin => self.params.lambda_fast,
        }
    }

    fn update(
        &self,
        global: &GlobalStore,
        now: f64,
        action: ActionName,
        sender: &Store,
    ) -> Result<EnvEffect, KernelError> {
        let mut effect = EnvEffect { global: *global, spawn: Vec::new(), remove_sender: false };
        match action {
            ActionName::Arrive => {
                let p = Self::sender_type(sender)?;
                let start = self.topology.start_coords(p);
                effect.spawn.push(Spawn {
                    kind: ComponentKind::Pedestrian,
                    store: pedestrian_store(p, start, now),
                    process: ProcessTerm::constant(PED),
                });
            }
            ActionName::Fin => {
                let p = Self::sender_type(sender)?;
                let stime = sender
                    .stime()
                    .ok_or_else(|| KernelError::Invariant("finishing pedestrian has no stime".into()))?;
                if now < stime {
                    return Err(KernelError::Invariant(format!(
                        "fin at {now} precedes arrival at {stime}"
                    )));
                }
                effect.global.count[p.index()] += 1;
                effect.global.total[p.index()] += now - stime;
                effect.remove_sender = true;
            }
            ActionName::Move(_) => {}
        }
        Ok(effect)
    }
}

/// What happens to a pedestrian once `fin*` has fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FinishedPolicy {
    #[default]
    Remove,
    /// Keep the inert component in the collective, still occupying its goal.
    Retain,
}

/// Immutable, shareable model: topology, behaviour, environment and the
/// initial collective.
#[derive(Debug, Clone)]
pub struct Model {
    pub topology: Arc<dyn Topology>,
    pub definitions: Arc<Definitions>,
    pub environment: Arc<PedestrianEnvironment>,
    pub initial: Vec<Spawn>,
    pub finished: FinishedPolicy,
}

impl Model {
    /// The two-arrival collective `(Arrival, {P -> A}) || (Arrival, {P -> B})`.
    pub fn new(
        topology: Arc<dyn Topology>,
        params: RateParams,
        routes: RouteTable,
    ) -> Result<Model, KernelError> {
        let definitions = pedestrian_definitions(&topology.nodes());
        Model::assemble(topology, definitions, params, routes, None)
    }

    pub fn from_graph(g: SpatialGraph, params: RateParams, routes: RouteTable) -> Result<Model, KernelError> {
        Model::new(Arc::new(g), params, routes)
    }

    /// A single pedestrian of type `p` placed at its start at time 0 and no
    /// arrivals: the run ends once it has finished.
    pub fn single_traversal(
        topology: Arc<dyn Topology>,
        params: RateParams,
        p: PedType,
    ) -> Result<Model, KernelError> {
        let start = topology.start_coords(p);
        let initial = vec![Spawn {
            kind: ComponentKind::Pedestrian,
            store: pedestrian_store(p, start, 0.0),
            process: ProcessTerm::constant(PED),
        }];
        let definitions = pedestrian_definitions(&topology.nodes());
        Model::assemble(topology, definitions, params, RouteTable::none(), Some(initial))
    }

    /// Validates the definitions and initial stores. `initial = None` starts
    /// from the two arrival components.
    pub fn assemble(
        topology: Arc<dyn Topology>,
        definitions: Definitions,
        params: RateParams,
        routes: RouteTable,
        initial: Option<Vec<Spawn>>,
    ) -> Result<Model, KernelError> {
        params.validate()?;
        definitions.validate()?;
        let initial = initial.unwrap_or_else(|| {
            PedType::ALL
                .into_iter()
                .map(|p| Spawn {
                    kind: ComponentKind::Arrival,
                    store: arrival_store(p),
                    process: ProcessTerm::constant(ARR),
                })
                .collect()
        });
        for s in &initial {
            let schema = definitions
                .schema(s.kind)
                .ok_or_else(|| KernelError::Invariant(format!("no schema for {}", s.kind)))?;
            if !schema.admits(&s.store) {
                return Err(KernelError::Invariant(format!(
                    "initial {} store does not match its declared attributes",
                    s.kind
                )));
            }
        }
        let environment = PedestrianEnvironment::new(params, routes, Arc::clone(&topology));
        Ok(Model {
            topology,
            definitions: Arc::new(definitions),
            environment: Arc::new(environment),
            initial,
            finished: FinishedPolicy::Remove,
        })
    }

    pub fn with_finished_policy(mut self, policy: FinishedPolicy) -> Model {
        self.finished = policy;
        self
    }

    pub fn params(&self) -> &RateParams {
        &self.environment.params
    }
}
