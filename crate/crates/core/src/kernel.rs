//! Process-calculus core.
//!
//! Components pair an attribute [`Store`] with a [`ProcessTerm`]. Actions are
//! broadcasts guarded by boolean predicates; each firing may update the local
//! store and hands control to an [`EvaluationContext`] which prices the action
//! and applies environment effects (global-store updates, spawning).
//!
//! Names used in guards and updates are checked once, when a set of
//! [`Definitions`] is validated, so evaluation at run time only fails on
//! genuine invariant violations such as a position that is not a node.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::spatial::{Coord, PedType, SpatialError, SpatialGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ValueKind {
    Int,
    Real,
    Bool,
    Sym,
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ValueKind::Int => "integer",
            ValueKind::Real => "real",
            ValueKind::Bool => "boolean",
            ValueKind::Sym => "symbol",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Real(f64),
    Bool(bool),
    Sym(String),
}

impl Value {
    pub fn kind(&self) -> ValueKind {
        match self {
            Value::Int(_) => ValueKind::Int,
            Value::Real(_) => ValueKind::Real,
            Value::Bool(_) => ValueKind::Bool,
            Value::Sym(_) => ValueKind::Sym,
        }
    }

    pub fn sym(s: &str) -> Value {
        Value::Sym(s.to_owned())
    }

    fn as_int(&self) -> Result<i64, KernelError> {
        match self {
            Value::Int(v) => Ok(*v),
            other => Err(KernelError::type_error(ValueKind::Int, other.kind())),
        }
    }

    fn as_ped_type(&self) -> Result<PedType, KernelError> {
        match self {
            Value::Sym(s) => s.parse().map_err(KernelError::Type),
            other => Err(KernelError::type_error(ValueKind::Sym, other.kind())),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Real(v) => write!(f, "{v}"),
            Value::Bool(v) => write!(f, "{v}"),
            Value::Sym(v) => f.write_str(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("attribute `{name}` is not declared for {kind} components")]
    UndeclaredAttribute { kind: ComponentKind, name: String },
    #[error("attribute `{0}` is not present in the store")]
    MissingAttribute(String),
    #[error("process constant `{0}` is not defined")]
    UndefinedConstant(String),
    #[error("process constant `{0}` recurses without passing an action prefix")]
    UnguardedRecursion(String),
    #[error("attribute `{name}` holds a {expected} value, cannot assign a {found}")]
    VariantMismatch { name: String, expected: ValueKind, found: ValueKind },
    #[error("type error: {0}")]
    Type(String),
    #[error(transparent)]
    Spatial(#[from] SpatialError),
    #[error("invariant violation: {0}")]
    Invariant(String),
}

impl KernelError {
    fn type_error(expected: ValueKind, found: ValueKind) -> Self {
        KernelError::Type(format!("expected {expected}, found {found}"))
    }
}

/// Attribute map of a single component.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Store {
    attrs: BTreeMap<String, Value>,
}

impl Store {
    pub fn new() -> Self {
        Store::default()
    }

    pub fn with(mut self, name: &str, value: Value) -> Self {
        self.attrs.insert(name.to_owned(), value);
        self
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.attrs.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Value)> {
        self.attrs.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Overwrites an existing attribute, keeping its variant.
    pub fn set(&mut self, name: &str, value: Value) -> Result<(), KernelError> {
        let slot = self
            .attrs
            .get_mut(name)
            .ok_or_else(|| KernelError::MissingAttribute(name.to_owned()))?;
        if slot.kind() != value.kind() {
            return Err(KernelError::VariantMismatch {
                name: name.to_owned(),
                expected: slot.kind(),
                found: value.kind(),
            });
        }
        *slot = value;
        Ok(())
    }

    pub fn ped_type(&self) -> Option<PedType> {
        self.get("P").and_then(|v| v.as_ped_type().ok())
    }

    pub fn coord(&self) -> Option<Coord> {
        match (self.get("x"), self.get("y")) {
            (Some(Value::Int(x)), Some(Value::Int(y))) => Some(Coord::new(*x, *y)),
            _ => None,
        }
    }

    pub fn stime(&self) -> Option<f64> {
        match self.get("stime") {
            Some(Value::Real(t)) => Some(*t),
            _ => None,
        }
    }
}

/// Value expressions over the local store and the graph's start functions.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Lit(Value),
    Attr(String),
    StartX(Box<Expr>),
    StartY(Box<Expr>),
}

impl Expr {
    pub fn attr(name: &str) -> Expr {
        Expr::Attr(name.to_owned())
    }

    pub fn int(v: i64) -> Expr {
        Expr::Lit(Value::Int(v))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Predicate {
    /// `Const(false)` is the bottom predicate used by spontaneous broadcasts.
    Const(bool),
    Not(Box<Predicate>),
    And(Vec<Predicate>),
    Or(Vec<Predicate>),
    Eq(Expr, Expr),
    ExistsPath { ptype: Expr, x: Expr, y: Expr, i: Expr, j: Expr },
    AtGoal { ptype: Expr, x: Expr, y: Expr },
}

impl Predicate {
    pub const TRUE: Predicate = Predicate::Const(true);
    pub const BOTTOM: Predicate = Predicate::Const(false);
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub target: String,
    pub value: Expr,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct UpdateBlock(pub Vec<Assignment>);

impl UpdateBlock {
    pub fn assign(mut self, target: &str, value: Expr) -> Self {
        self.0.push(Assignment { target: target.to_owned(), value });
        self
    }
}

/// Action labels of the pedestrian model. `Move` carries the target node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ActionName {
    Arrive,
    Fin,
    Move(Coord),
}

impl fmt::Display for ActionName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActionName::Arrive => f.write_str("arrive"),
            ActionName::Fin => f.write_str("fin"),
            ActionName::Move(c) => write!(f, "move_{}_{}", c.x, c.y),
        }
    }
}

impl std::str::FromStr for ActionName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "arrive" => Ok(ActionName::Arrive),
            "fin" => Ok(ActionName::Fin),
            _ => {
                let rest = s
                    .strip_prefix("move_")
                    .ok_or_else(|| format!("unknown action `{s}`"))?;
                let (i, j) = rest
                    .rsplit_once('_')
                    .ok_or_else(|| format!("malformed move action `{s}`"))?;
                let i = i.parse().map_err(|_| format!("malformed move action `{s}`"))?;
                let j = j.parse().map_err(|_| format!("malformed move action `{s}`"))?;
                Ok(ActionName::Move(Coord::new(i, j)))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prefix {
    pub action: ActionName,
    /// Receiver predicate of the broadcast.
    pub target: Predicate,
    pub payload: Vec<Expr>,
    pub update: UpdateBlock,
    pub next: ProcessTerm,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProcessTerm {
    Nil,
    Kill,
    Prefix(Box<Prefix>),
    Choice(Vec<ProcessTerm>),
    Guard(Predicate, Box<ProcessTerm>),
    Const(String),
}

impl ProcessTerm {
    pub fn constant(name: &str) -> ProcessTerm {
        ProcessTerm::Const(name.to_owned())
    }

    pub fn guard(pred: Predicate, body: ProcessTerm) -> ProcessTerm {
        ProcessTerm::Guard(pred, Box::new(body))
    }

    /// Spontaneous broadcast `action*` with an empty payload.
    pub fn broadcast(action: ActionName, update: UpdateBlock, next: ProcessTerm) -> ProcessTerm {
        ProcessTerm::Prefix(Box::new(Prefix {
            action,
            target: Predicate::BOTTOM,
            payload: Vec::new(),
            update,
            next,
        }))
    }

    /// Pushes guards through choices: `[g](P + Q)` becomes `[g]P + [g]Q`,
    /// nested guards become conjunctions and nested choices are flattened.
    pub fn normalize(&self) -> ProcessTerm {
        fn go(term: &ProcessTerm, guards: &[Predicate]) -> Vec<ProcessTerm> {
            match term {
                ProcessTerm::Choice(items) => items.iter().flat_map(|t| go(t, guards)).collect(),
                ProcessTerm::Guard(g, body) => {
                    let mut more = guards.to_vec();
                    more.push(g.clone());
                    go(body, &more)
                }
                other => {
                    let wrapped = match guards.len() {
                        0 => other.clone(),
                        1 => ProcessTerm::guard(guards[0].clone(), other.clone()),
                        _ => ProcessTerm::guard(Predicate::And(guards.to_vec()), other.clone()),
                    };
                    vec![wrapped]
                }
            }
        }
        let mut summands = go(self, &[]);
        if summands.len() == 1 {
            summands.pop().unwrap()
        } else {
            ProcessTerm::Choice(summands)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ComponentKind {
    Pedestrian,
    Arrival,
}

impl fmt::Display for ComponentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ComponentKind::Pedestrian => f.write_str("Pedestrian"),
            ComponentKind::Arrival => f.write_str("Arrival"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ComponentId(pub u64);

impl fmt::Display for ComponentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub id: ComponentId,
    pub kind: ComponentKind,
    pub store: Store,
    pub process: ProcessTerm,
}

/// Declared attributes of a component kind.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Schema(pub BTreeMap<String, ValueKind>);

impl Schema {
    pub fn declare(mut self, name: &str, kind: ValueKind) -> Self {
        self.0.insert(name.to_owned(), kind);
        self
    }

    pub fn admits(&self, store: &Store) -> bool {
        store.attrs.len() == self.0.len()
            && store.iter().all(|(k, v)| self.0.get(k) == Some(&v.kind()))
    }
}

/// Process definitions plus per-kind attribute schemas and entry constants.
#[derive(Debug, Clone, Default)]
pub struct Definitions {
    processes: BTreeMap<String, ProcessTerm>,
    kinds: BTreeMap<ComponentKind, (Schema, String)>,
}

impl Definitions {
    pub fn new() -> Self {
        Definitions::default()
    }

    pub fn define(&mut self, name: &str, body: ProcessTerm) -> &mut Self {
        self.processes.insert(name.to_owned(), body);
        self
    }

    pub fn declare_kind(&mut self, kind: ComponentKind, schema: Schema, entry: &str) -> &mut Self {
        self.kinds.insert(kind, (schema, entry.to_owned()));
        self
    }

    pub fn process(&self, name: &str) -> Option<&ProcessTerm> {
        self.processes.get(name)
    }

    pub fn schema(&self, kind: ComponentKind) -> Option<&Schema> {
        self.kinds.get(&kind).map(|(s, _)| s)
    }

    pub fn entry(&self, kind: ComponentKind) -> Option<&str> {
        self.kinds.get(&kind).map(|(_, e)| e.as_str())
    }

    /// Static checks: every constant is defined, recursion passes through a
    /// prefix, and every attribute used by a kind's reachable behaviour is
    /// declared with a compatible variant.
    pub fn validate(&self) -> Result<(), KernelError> {
        for name in self.processes.keys() {
            self.check_guarded(name)?;
        }
        for (&kind, (schema, entry)) in &self.kinds {
            let mut seen = BTreeSet::new();
            let mut pending = vec![entry.clone()];
            while let Some(name) = pending.pop() {
                if !seen.insert(name.clone()) {
                    continue;
                }
                let body = self
                    .processes
                    .get(&name)
                    .ok_or_else(|| KernelError::UndefinedConstant(name.clone()))?;
                check_term(body, kind, schema, &mut pending)?;
            }
        }
        Ok(())
    }

    fn check_guarded(&self, root: &str) -> Result<(), KernelError> {
        // Follow constants reachable without crossing a prefix.
        let mut stack = vec![root.to_owned()];
        let mut seen = BTreeSet::new();
        while let Some(name) = stack.pop() {
            let body = self
                .processes
                .get(&name)
                .ok_or_else(|| KernelError::UndefinedConstant(name.clone()))?;
            let mut heads = Vec::new();
            unguarded_constants(body, &mut heads);
            for h in heads {
                if h == root {
                    return Err(KernelError::UnguardedRecursion(root.to_owned()));
                }
                if seen.insert(h.clone()) {
                    stack.push(h);
                }
            }
        }
        Ok(())
    }
}

fn unguarded_constants(term: &ProcessTerm, out: &mut Vec<String>) {
    match term {
        ProcessTerm::Const(n) => out.push(n.clone()),
        ProcessTerm::Choice(items) => items.iter().for_each(|t| unguarded_constants(t, out)),
        ProcessTerm::Guard(_, body) => unguarded_constants(body, out),
        ProcessTerm::Nil | ProcessTerm::Kill | ProcessTerm::Prefix(_) => {}
    }
}

fn check_term(
    term: &ProcessTerm,
    kind: ComponentKind,
    schema: &Schema,
    pending: &mut Vec<String>,
) -> Result<(), KernelError> {
    match term {
        ProcessTerm::Nil | ProcessTerm::Kill => Ok(()),
        ProcessTerm::Const(n) => {
            pending.push(n.clone());
            Ok(())
        }
        ProcessTerm::Choice(items) => items
            .iter()
            .try_for_each(|t| check_term(t, kind, schema, pending)),
        ProcessTerm::Guard(g, body) => {
            check_predicate(g, kind, schema)?;
            check_term(body, kind, schema, pending)
        }
        ProcessTerm::Prefix(p) => {
            for e in &p.payload {
                expr_kind(e, kind, schema)?;
            }
            for a in &p.update.0 {
                let expected = *schema.0.get(&a.target).ok_or_else(|| {
                    KernelError::UndeclaredAttribute { kind, name: a.target.clone() }
                })?;
                let found = expr_kind(&a.value, kind, schema)?;
                if expected != found {
                    return Err(KernelError::VariantMismatch {
                        name: a.target.clone(),
                        expected,
                        found,
                    });
                }
            }
            check_term(&p.next, kind, schema, pending)
        }
    }
}

fn expr_kind(e: &Expr, kind: ComponentKind, schema: &Schema) -> Result<ValueKind, KernelError> {
    match e {
        Expr::Lit(v) => Ok(v.kind()),
        Expr::Attr(name) => schema
            .0
            .get(name)
            .copied()
            .ok_or_else(|| KernelError::UndeclaredAttribute { kind, name: name.clone() }),
        Expr::StartX(p) | Expr::StartY(p) => {
            expect_kind(p, ValueKind::Sym, kind, schema)?;
            Ok(ValueKind::Int)
        }
    }
}

fn expect_kind(
    e: &Expr,
    want: ValueKind,
    kind: ComponentKind,
    schema: &Schema,
) -> Result<(), KernelError> {
    let got = expr_kind(e, kind, schema)?;
    if got == want {
        Ok(())
    } else {
        Err(KernelError::type_error(want, got))
    }
}

fn check_predicate(p: &Predicate, kind: ComponentKind, schema: &Schema) -> Result<(), KernelError> {
    use ValueKind::{Int, Sym};
    match p {
        Predicate::Const(_) => Ok(()),
        Predicate::Not(inner) => check_predicate(inner, kind, schema),
        Predicate::And(ps) | Predicate::Or(ps) => {
            ps.iter().try_for_each(|q| check_predicate(q, kind, schema))
        }
        Predicate::Eq(a, b) => {
            let (ka, kb) = (expr_kind(a, kind, schema)?, expr_kind(b, kind, schema)?);
            if ka == kb {
                Ok(())
            } else {
                Err(KernelError::type_error(ka, kb))
            }
        }
        Predicate::ExistsPath { ptype, x, y, i, j } => {
            expect_kind(ptype, Sym, kind, schema)?;
            [x, y, i, j]
                .into_iter()
                .try_for_each(|e| expect_kind(e, Int, kind, schema))
        }
        Predicate::AtGoal { ptype, x, y } => {
            expect_kind(ptype, Sym, kind, schema)?;
            expect_kind(x, Int, kind, schema)?;
            expect_kind(y, Int, kind, schema)
        }
    }
}

/// Read-only view of the graph functions guards and spawns refer to.
pub trait Topology: Send + Sync {
    /// The node set, ascending.
    fn nodes(&self) -> Vec<Coord>;
    fn exists_path(&self, p: PedType, from: Coord, to: Coord) -> Result<bool, SpatialError>;
    fn at_goal(&self, p: PedType, at: Coord) -> Result<bool, SpatialError>;
    fn start_coords(&self, p: PedType) -> Coord;
}

impl Topology for SpatialGraph {
    fn nodes(&self) -> Vec<Coord> {
        self.coords()
    }

    fn exists_path(&self, p: PedType, from: Coord, to: Coord) -> Result<bool, SpatialError> {
        SpatialGraph::exists_path(self, p, from, to)
    }

    fn at_goal(&self, p: PedType, at: Coord) -> Result<bool, SpatialError> {
        SpatialGraph::at_goal(self, p, at)
    }

    fn start_coords(&self, p: PedType) -> Coord {
        SpatialGraph::start_coords(self, p)
    }
}

pub fn evaluate_expr(e: &Expr, store: &Store, topo: &dyn Topology) -> Result<Value, KernelError> {
    match e {
        Expr::Lit(v) => Ok(v.clone()),
        Expr::Attr(name) => store
            .get(name)
            .cloned()
            .ok_or_else(|| KernelError::MissingAttribute(name.clone())),
        Expr::StartX(p) => {
            let p = evaluate_expr(p, store, topo)?.as_ped_type()?;
            Ok(Value::Int(topo.start_coords(p).x))
        }
        Expr::StartY(p) => {
            let p = evaluate_expr(p, store, topo)?.as_ped_type()?;
            Ok(Value::Int(topo.start_coords(p).y))
        }
    }
}

pub fn evaluate_predicate(
    pred: &Predicate,
    store: &Store,
    topo: &dyn Topology,
) -> Result<bool, KernelError> {
    let int = |e: &Expr| evaluate_expr(e, store, topo)?.as_int();
    let ptype = |e: &Expr| evaluate_expr(e, store, topo)?.as_ped_type();
    match pred {
        Predicate::Const(b) => Ok(*b),
        Predicate::Not(p) => Ok(!evaluate_predicate(p, store, topo)?),
        Predicate::And(ps) => {
            for p in ps {
                if !evaluate_predicate(p, store, topo)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        Predicate::Or(ps) => {
            for p in ps {
                if evaluate_predicate(p, store, topo)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        Predicate::Eq(a, b) => Ok(evaluate_expr(a, store, topo)? == evaluate_expr(b, store, topo)?),
        Predicate::ExistsPath { ptype: p, x, y, i, j } => {
            let from = Coord::new(int(x)?, int(y)?);
            let to = Coord::new(int(i)?, int(j)?);
            Ok(topo.exists_path(ptype(p)?, from, to)?)
        }
        Predicate::AtGoal { ptype: p, x, y } => {
            Ok(topo.at_goal(ptype(p)?, Coord::new(int(x)?, int(y)?))?)
        }
    }
}

/// A prefix whose guards hold, with payload and update resolved against the
/// component's store. Rates are attached separately by the environment.
#[derive(Debug, Clone, PartialEq)]
pub struct EnabledAction {
    pub action: ActionName,
    pub target: Predicate,
    pub payload: Vec<Value>,
    pub update: Vec<(String, Value)>,
    pub next: ProcessTerm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionInstance {
    pub component: ComponentId,
    pub enabled: EnabledAction,
    pub rate: f64,
}

/// Enabled actions of `c`, in syntactic order.
pub fn enabled_actions(
    c: &Component,
    defs: &Definitions,
    topo: &dyn Topology,
) -> Result<Vec<EnabledAction>, KernelError> {
    let mut out = Vec::new();
    collect_enabled(&c.process, &c.store, defs, topo, 0, &mut out)?;
    Ok(out)
}

fn collect_enabled(
    term: &ProcessTerm,
    store: &Store,
    defs: &Definitions,
    topo: &dyn Topology,
    depth: usize,
    out: &mut Vec<EnabledAction>,
) -> Result<(), KernelError> {
    match term {
        ProcessTerm::Nil | ProcessTerm::Kill => Ok(()),
        ProcessTerm::Choice(items) => items
            .iter()
            .try_for_each(|t| collect_enabled(t, store, defs, topo, depth, out)),
        ProcessTerm::Guard(g, body) => {
            if evaluate_predicate(g, store, topo)? {
                collect_enabled(body, store, defs, topo, depth, out)
            } else {
                Ok(())
            }
        }
        ProcessTerm::Const(name) => {
            if depth > defs.processes.len() {
                return Err(KernelError::UnguardedRecursion(name.clone()));
            }
            let body = defs
                .process(name)
                .ok_or_else(|| KernelError::UndefinedConstant(name.clone()))?;
            collect_enabled(body, store, defs, topo, depth + 1, out)
        }
        ProcessTerm::Prefix(p) => {
            let payload = p
                .payload
                .iter()
                .map(|e| evaluate_expr(e, store, topo))
                .collect::<Result<_, _>>()?;
            let update = p
                .update
                .0
                .iter()
                .map(|a| Ok((a.target.clone(), evaluate_expr(&a.value, store, topo)?)))
                .collect::<Result<_, KernelError>>()?;
            out.push(EnabledAction {
                action: p.action,
                target: p.target.clone(),
                payload,
                update,
                next: p.next.clone(),
            });
            Ok(())
        }
    }
}

/// Applies resolved assignments in order. Identifier and kind are untouched.
pub fn apply_local_update(c: &Component, update: &[(String, Value)]) -> Result<Component, KernelError> {
    let mut next = c.clone();
    for (name, value) in update {
        next.store.set(name, value.clone())?;
    }
    Ok(next)
}

/// Resolves and applies an update block against the component's own store.
pub fn apply_update_block(
    c: &Component,
    block: &UpdateBlock,
    topo: &dyn Topology,
) -> Result<Component, KernelError> {
    let resolved = block
        .0
        .iter()
        .map(|a| Ok((a.target.clone(), evaluate_expr(&a.value, &c.store, topo)?)))
        .collect::<Result<Vec<_>, KernelError>>()?;
    apply_local_update(c, &resolved)
}

/// Components whose store satisfies a broadcast's receiver predicate. With
/// the bottom predicate the set is empty. Stores lacking an attribute the
/// predicate mentions are not receivers.
pub fn broadcast_receivers<'a, I>(
    sender: ComponentId,
    target: &Predicate,
    collective: I,
    topo: &dyn Topology,
) -> Vec<ComponentId>
where
    I: IntoIterator<Item = &'a Component>,
{
    collective
        .into_iter()
        .filter(|c| c.id != sender)
        .filter(|c| evaluate_predicate(target, &c.store, topo).unwrap_or(false))
        .map(|c| c.id)
        .collect()
}

/// Completion counters and accumulated traversal time per type.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GlobalStore {
    pub count: [u64; 2],
    pub total: [f64; 2],
}

impl GlobalStore {
    pub fn count(&self, p: PedType) -> u64 {
        self.count[p.index()]
    }

    pub fn total(&self, p: PedType) -> f64 {
        self.total[p.index()]
    }
}

/// Component to be created by an environment update; the engine assigns its id.
#[derive(Debug, Clone, PartialEq)]
pub struct Spawn {
    pub kind: ComponentKind,
    pub store: Store,
    pub process: ProcessTerm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvEffect {
    pub global: GlobalStore,
    pub spawn: Vec<Spawn>,
    pub remove_sender: bool,
}

/// Live pedestrian counts per node, as seen when pricing moves.
pub trait Occupancy {
    fn occupants(&self, p: PedType, at: Coord) -> u64;
}

/// The environment's four evolution-rule functions.
pub trait EvaluationContext: Send + Sync {
    /// Probability that `receiver` accepts a broadcast from `sender`.
    fn probability(&self, sender: &Store, receiver: &Store, action: ActionName) -> f64;
    /// Weight of `receiver` for unicast selection.
    fn weight(&self, sender: &Store, receiver: &Store, action: ActionName) -> f64;
    /// Rate of `action` fired by a component with store `sender`.
    fn rate(&self, sender: &Store, action: ActionName, occupancy: &dyn Occupancy) -> f64;
    /// Global-store assignments and spawns after `action` fired at `now`.
    fn update(
        &self,
        global: &GlobalStore,
        now: f64,
        action: ActionName,
        sender: &Store,
    ) -> Result<EnvEffect, KernelError>;
}
