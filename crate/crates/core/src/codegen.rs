//! Graph-spec files (`.cbgraph`) and generated model text (`.cbmodel`).
//!
//! A `.cbgraph` document is line oriented, UTF-8 with LF endings, `#`
//! starting a comment. After the `cbgraph <version>` header come the
//! sections `NODES`, `EDGES`, `SUBGRAPHS`, `PARAMS` and a final
//! `CONNECTIONS <n>` line, in that order:
//!
//! ```text
//! cbgraph 1
//! NODES
//! <id> <x> <y>
//! EDGES
//! <from-id> <to-id> <Red|Blue> <bidirectional 0|1>
//! SUBGRAPHS
//! <A|B> <start-id> <goal-id> <edge record indices, comma separated, or ->
//! PARAMS
//! <key> = <value>
//! CONNECTIONS <n>
//! ```
//!
//! A bidirectional record stands for two directed edges of the same colour.
//! Subgraph lists index EDGES records in file order, starting at 0.
//!
//! A `.cbmodel` file is the generated model: a readable rendering of the
//! topology functions and component behaviour followed by a clause table
//! between `@clauses` and `@end` that [`load_model`] turns back into a
//! runnable [`Model`].

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::{self, Write as _};
use std::sync::Arc;

use thiserror::Error;

use crate::kernel::{
    ActionName, ComponentKind, Definitions, Expr, KernelError, Predicate, ProcessTerm, Topology,
    UpdateBlock, Value,
};
use crate::model::{arrival_schema, pedestrian_schema, Model, RouteTable, ARR, PED};
use crate::spatial::{
    Colour, Coord, DirectedEdge, Node, PedType, RateParams, SpatialError, SpatialGraph, Subgraph,
};

pub const FORMAT_VERSION: u32 = 1;
const SECTIONS: [&str; 4] = ["NODES", "EDGES", "SUBGRAPHS", "PARAMS"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecErrorCode {
    Syntax,
    DuplicateNode,
    DanglingEndpoint,
    SelfLoop,
    DuplicateEdge,
    UnknownReference,
    ColourMismatch,
    UnreachableGoal,
    BadParameter,
}

impl SpecErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            SpecErrorCode::Syntax => "E_SYNTAX",
            SpecErrorCode::DuplicateNode => "E_DUPLICATE_NODE",
            SpecErrorCode::DanglingEndpoint => "E_DANGLING_ENDPOINT",
            SpecErrorCode::SelfLoop => "E_SELF_LOOP",
            SpecErrorCode::DuplicateEdge => "E_DUPLICATE_EDGE",
            SpecErrorCode::UnknownReference => "E_UNKNOWN_REFERENCE",
            SpecErrorCode::ColourMismatch => "E_COLOUR_MISMATCH",
            SpecErrorCode::UnreachableGoal => "E_UNREACHABLE_GOAL",
            SpecErrorCode::BadParameter => "E_BAD_PARAMETER",
        }
    }
}

impl fmt::Display for SpecErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{code}{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
pub struct GraphSpecError {
    pub code: SpecErrorCode,
    pub line: Option<usize>,
    pub message: String,
}

impl GraphSpecError {
    fn at(code: SpecErrorCode, line: usize, message: impl Into<String>) -> Self {
        GraphSpecError { code, line: Some(line), message: message.into() }
    }

    fn from_spatial(e: SpatialError) -> Self {
        let code = match e {
            SpatialError::DuplicateNodeId(_) | SpatialError::DuplicateCoord(_) => SpecErrorCode::DuplicateNode,
            SpatialError::DanglingEndpoint { .. } => SpecErrorCode::DanglingEndpoint,
            SpatialError::SelfLoop { .. } => SpecErrorCode::SelfLoop,
            SpatialError::DuplicateEdge { .. } => SpecErrorCode::DuplicateEdge,
            SpatialError::ColourMismatch { .. } => SpecErrorCode::ColourMismatch,
            SpatialError::UnknownEdgeIndex { .. } | SpatialError::UnknownTerminal { .. } => {
                SpecErrorCode::UnknownReference
            }
            SpatialError::UnreachableGoal(_) => SpecErrorCode::UnreachableGoal,
            SpatialError::BadParameter(_) => SpecErrorCode::BadParameter,
            SpatialError::BadDimensions { .. } | SpatialError::NotANode(_) => SpecErrorCode::Syntax,
        };
        GraphSpecError { code, line: None, message: e.to_string() }
    }
}

/// Parsed `.cbgraph` content. `params` is `None` when the PARAMS section is empty.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSpecDocument {
    pub graph: SpatialGraph,
    pub params: Option<RateParams>,
}

struct EdgeRecord {
    from: u32,
    to: u32,
    colour: Colour,
    bidirectional: bool,
    members: [bool; 2],
}

fn edge_records(g: &SpatialGraph) -> Vec<EdgeRecord> {
    let member = |i: usize| PedType::ALL.map(|p| g.subgraph(p).edges.binary_search(&i).is_ok());
    let index: BTreeMap<DirectedEdge, usize> =
        g.edges().iter().enumerate().map(|(i, e)| (*e, i)).collect();
    let mut consumed = vec![false; g.edges().len()];
    let mut out = Vec::new();
    for (i, e) in g.edges().iter().enumerate() {
        if consumed[i] {
            continue;
        }
        consumed[i] = true;
        let reverse = DirectedEdge { from: e.to, to: e.from, colour: e.colour };
        let pair = index
            .get(&reverse)
            .copied()
            .filter(|&j| !consumed[j] && member(j) == member(i));
        if let Some(j) = pair {
            consumed[j] = true;
        }
        out.push(EdgeRecord {
            from: e.from,
            to: e.to,
            colour: e.colour,
            bidirectional: pair.is_some(),
            members: member(i),
        });
    }
    out
}

fn fmt_real(v: f64) -> String {
    let s = format!("{v}");
    if s.contains(['.', 'e', 'E']) || !v.is_finite() {
        s
    } else {
        format!("{s}.0")
    }
}

/// Canonical `.cbgraph` text with an empty PARAMS section.
pub fn emit_graph_spec(g: &SpatialGraph) -> String {
    emit_document(g, None)
}

pub fn emit_document(g: &SpatialGraph, params: Option<&RateParams>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# cross-bar path network");
    let _ = writeln!(s, "cbgraph {FORMAT_VERSION}");
    let _ = writeln!(s, "NODES");
    for n in g.nodes() {
        let _ = writeln!(s, "{} {} {}", n.id, n.x, n.y);
    }
    let records = edge_records(g);
    let _ = writeln!(s, "EDGES");
    for r in &records {
        let _ = writeln!(s, "{} {} {} {}", r.from, r.to, r.colour, u8::from(r.bidirectional));
    }
    let _ = writeln!(s, "SUBGRAPHS");
    for p in PedType::ALL {
        let sg = g.subgraph(p);
        let members: Vec<String> = records
            .iter()
            .enumerate()
            .filter(|(_, r)| r.members[p.index()])
            .map(|(k, _)| k.to_string())
            .collect();
        let list = if members.is_empty() { "-".to_owned() } else { members.join(",") };
        let _ = writeln!(s, "{p} {} {} {list}", sg.start, sg.goal);
    }
    let _ = writeln!(s, "PARAMS");
    if let Some(params) = params {
        for (k, v) in params.entries() {
            let _ = writeln!(s, "{k} = {}", fmt_real(v));
        }
    }
    let _ = writeln!(s, "CONNECTIONS {}", g.connection_count());
    s
}

pub fn parse_graph_spec(text: &str) -> Result<SpatialGraph, GraphSpecError> {
    parse_document(text).map(|d| d.graph)
}

pub fn parse_document(text: &str) -> Result<GraphSpecDocument, GraphSpecError> {
    use SpecErrorCode::*;

    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
        .peekable();

    let (n, header) = lines
        .next()
        .ok_or_else(|| GraphSpecError { code: Syntax, line: None, message: "empty document".into() })?;
    match header.split_whitespace().collect::<Vec<_>>().as_slice() {
        ["cbgraph", v] if v.parse::<u32>() == Ok(FORMAT_VERSION) => {}
        _ => return Err(GraphSpecError::at(Syntax, n, format!("expected `cbgraph {FORMAT_VERSION}`"))),
    }

    let mut sections: [Vec<(usize, &str)>; 4] = Default::default();
    for (k, name) in SECTIONS.iter().enumerate() {
        match lines.next() {
            Some((_, l)) if l == *name => {}
            Some((n, l)) => return Err(GraphSpecError::at(Syntax, n, format!("expected `{name}`, found `{l}`"))),
            None => return Err(GraphSpecError { code: Syntax, line: None, message: format!("missing `{name}` section") }),
        }
        while let Some(&(n, l)) = lines.peek() {
            if SECTIONS.contains(&l) || l.starts_with("CONNECTIONS") {
                break;
            }
            sections[k].push((n, l));
            lines.next();
        }
    }
    let connections = match lines.next() {
        Some((n, l)) => {
            let v = l
                .strip_prefix("CONNECTIONS")
                .map(str::trim)
                .and_then(|v| v.parse::<u64>().ok())
                .ok_or_else(|| GraphSpecError::at(Syntax, n, "expected `CONNECTIONS <n>`"))?;
            v
        }
        None => return Err(GraphSpecError { code: Syntax, line: None, message: "missing CONNECTIONS line".into() }),
    };
    if let Some((n, l)) = lines.next() {
        return Err(GraphSpecError::at(Syntax, n, format!("unexpected content `{l}` after CONNECTIONS")));
    }

    let mut nodes = Vec::new();
    let mut ids = BTreeSet::new();
    let mut coords = BTreeSet::new();
    for &(n, l) in &sections[0] {
        let f: Vec<&str> = l.split_whitespace().collect();
        let [id, x, y] = f.as_slice() else {
            return Err(GraphSpecError::at(Syntax, n, "node line needs `<id> <x> <y>`"));
        };
        let id: u32 = id.parse().map_err(|_| GraphSpecError::at(Syntax, n, "bad node id"))?;
        let x: i64 = x.parse().map_err(|_| GraphSpecError::at(Syntax, n, "bad x coordinate"))?;
        let y: i64 = y.parse().map_err(|_| GraphSpecError::at(Syntax, n, "bad y coordinate"))?;
        if !ids.insert(id) || !coords.insert((x, y)) {
            return Err(GraphSpecError::at(DuplicateNode, n, format!("node {id} at {x},{y} duplicates an earlier node")));
        }
        nodes.push(Node { id, x, y });
    }

    let mut edges = Vec::new();
    let mut record_edges: Vec<Vec<usize>> = Vec::new();
    let mut seen_edges = BTreeSet::new();
    for &(n, l) in &sections[1] {
        let f: Vec<&str> = l.split_whitespace().collect();
        let [from, to, colour, bidir] = f.as_slice() else {
            return Err(GraphSpecError::at(Syntax, n, "edge line needs `<from> <to> <colour> <0|1>`"));
        };
        let from: u32 = from.parse().map_err(|_| GraphSpecError::at(Syntax, n, "bad edge source"))?;
        let to: u32 = to.parse().map_err(|_| GraphSpecError::at(Syntax, n, "bad edge target"))?;
        let colour: Colour = colour.parse().map_err(|e: String| GraphSpecError::at(Syntax, n, e))?;
        let bidirectional = match *bidir {
            "0" => false,
            "1" => true,
            _ => return Err(GraphSpecError::at(Syntax, n, "bidirectional flag must be 0 or 1")),
        };
        for end in [from, to] {
            if !ids.contains(&end) {
                return Err(GraphSpecError::at(
                    DanglingEndpoint,
                    n,
                    format!("edge {from}->{to} references missing node {end}"),
                ));
            }
        }
        if from == to {
            return Err(GraphSpecError::at(SelfLoop, n, format!("edge {from}->{to} is a self-loop")));
        }
        let mut members = Vec::new();
        let mut directed = vec![(from, to)];
        if bidirectional {
            directed.push((to, from));
        }
        for (a, b) in directed {
            if !seen_edges.insert((a, b, colour)) {
                return Err(GraphSpecError::at(DuplicateEdge, n, format!("edge {a}->{b} {colour} repeated")));
            }
            members.push(edges.len());
            edges.push(DirectedEdge { from: a, to: b, colour });
        }
        record_edges.push(members);
    }

    let mut subgraphs: [Option<Subgraph>; 2] = [None, None];
    for &(n, l) in &sections[2] {
        let f: Vec<&str> = l.split_whitespace().collect();
        let [ptype, start, goal, list] = f.as_slice() else {
            return Err(GraphSpecError::at(Syntax, n, "subgraph line needs `<type> <start> <goal> <records>`"));
        };
        let p: PedType = ptype.parse().map_err(|e: String| GraphSpecError::at(Syntax, n, e))?;
        let start: u32 = start.parse().map_err(|_| GraphSpecError::at(Syntax, n, "bad start id"))?;
        let goal: u32 = goal.parse().map_err(|_| GraphSpecError::at(Syntax, n, "bad goal id"))?;
        for t in [start, goal] {
            if !ids.contains(&t) {
                return Err(GraphSpecError::at(UnknownReference, n, format!("node {t} does not exist")));
            }
        }
        let mut members = Vec::new();
        if *list != "-" {
            for item in list.split(',') {
                let k: usize = item
                    .parse()
                    .map_err(|_| GraphSpecError::at(Syntax, n, format!("bad edge record index `{item}`")))?;
                let rec = record_edges.get(k).ok_or_else(|| {
                    GraphSpecError::at(UnknownReference, n, format!("edge record {k} does not exist"))
                })?;
                for &e in rec {
                    if edges[e].colour != p.colour() {
                        return Err(GraphSpecError::at(
                            ColourMismatch,
                            n,
                            format!("edge record {k} is {} but type {p} uses {}", edges[e].colour, p.colour()),
                        ));
                    }
                    members.push(e);
                }
            }
        }
        if subgraphs[p.index()].is_some() {
            return Err(GraphSpecError::at(Syntax, n, format!("subgraph {p} declared twice")));
        }
        subgraphs[p.index()] = Some(Subgraph { edges: members, start, goal });
    }
    let [Some(red), Some(blue)] = subgraphs else {
        return Err(GraphSpecError { code: Syntax, line: None, message: "both A and B subgraphs are required".into() });
    };

    let params = if sections[3].is_empty() {
        None
    } else {
        let mut params = RateParams::default();
        for &(n, l) in &sections[3] {
            let (k, v) = l
                .split_once('=')
                .ok_or_else(|| GraphSpecError::at(Syntax, n, "parameter line needs `key = value`"))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| GraphSpecError::at(Syntax, n, format!("bad value for `{}`", k.trim())))?;
            params
                .set(k.trim(), v)
                .map_err(|e| GraphSpecError::at(BadParameter, n, e.to_string()))?;
        }
        params
            .validate()
            .map_err(|e| GraphSpecError { code: BadParameter, line: None, message: e.to_string() })?;
        Some(params)
    };

    let graph = SpatialGraph::new(nodes, edges, [red, blue], connections).map_err(GraphSpecError::from_spatial)?;
    Ok(GraphSpecDocument { graph, params })
}

/// Lines of model code the graphical tool produces for a network with the
/// given connection tally: a fixed 128-line shell plus 10 per connection.
pub fn loc_estimate(g: &SpatialGraph) -> u64 {
    loc_for_connections(g.connection_count())
}

pub fn loc_for_connections(connections: u64) -> u64 {
    128 + 10 * connections
}

/// Machine-readable content of a generated model.
#[derive(Debug, Clone, PartialEq)]
pub struct ClauseTable {
    pub nodes: Vec<Coord>,
    /// One per admissible directed edge: `(type, from, to)`.
    pub moves: Vec<(PedType, Coord, Coord)>,
    pub goals: [Coord; 2],
    pub starts: [Coord; 2],
    pub params: RateParams,
    pub routes: Vec<(PedType, Coord, Coord)>,
}

impl ClauseTable {
    pub fn from_graph(g: &SpatialGraph, params: &RateParams, routes: &RouteTable) -> ClauseTable {
        let mut moves = Vec::new();
        for p in PedType::ALL {
            for &ei in &g.subgraph(p).edges {
                let e = g.edges()[ei];
                let from = g.node_by_id(e.from).expect("validated").coord();
                let to = g.node_by_id(e.to).expect("validated").coord();
                moves.push((p, from, to));
            }
        }
        moves.sort();
        ClauseTable {
            nodes: g.coords(),
            moves,
            goals: PedType::ALL.map(|p| g.goal_coords(p)),
            starts: PedType::ALL.map(|p| g.start_coords(p)),
            params: *params,
            routes: routes.iter().copied().collect(),
        }
    }

    pub fn route_table(&self) -> RouteTable {
        let mut t = RouteTable::none();
        for &(p, a, b) in &self.routes {
            t.block(p, a, b);
        }
        t
    }

    fn movement_guard(p: PedType, from: Coord) -> Predicate {
        Predicate::And(vec![
            Predicate::Eq(Expr::attr("P"), Expr::Lit(Value::sym(p.as_str()))),
            Predicate::Eq(Expr::attr("x"), Expr::int(from.x)),
            Predicate::Eq(Expr::attr("y"), Expr::int(from.y)),
        ])
    }

    /// Behaviour built clause by clause: one guarded move per admissible
    /// edge and one guarded `fin` per type, instead of the sum over nodes.
    pub fn definitions(&self) -> Definitions {
        let mut summands: Vec<ProcessTerm> = self
            .moves
            .iter()
            .map(|&(p, from, to)| {
                ProcessTerm::guard(
                    Self::movement_guard(p, from),
                    ProcessTerm::broadcast(
                        ActionName::Move(to),
                        UpdateBlock::default().assign("x", Expr::int(to.x)).assign("y", Expr::int(to.y)),
                        ProcessTerm::constant(PED),
                    ),
                )
            })
            .collect();
        for p in PedType::ALL {
            summands.push(ProcessTerm::guard(
                Self::movement_guard(p, self.goals[p.index()]),
                ProcessTerm::broadcast(ActionName::Fin, UpdateBlock::default(), ProcessTerm::Nil),
            ));
        }
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
}

/// Topology functions backed by a clause table.
#[derive(Debug, Clone)]
pub struct ClauseTopology {
    nodes: Vec<Coord>,
    node_set: HashSet<Coord>,
    moves: HashSet<(PedType, Coord, Coord)>,
    goals: [Coord; 2],
    starts: [Coord; 2],
}

impl ClauseTopology {
    pub fn new(table: &ClauseTable) -> Self {
        ClauseTopology {
            nodes: table.nodes.clone(),
            node_set: table.nodes.iter().copied().collect(),
            moves: table.moves.iter().copied().collect(),
            goals: table.goals,
            starts: table.starts,
        }
    }
}

impl Topology for ClauseTopology {
    fn nodes(&self) -> Vec<Coord> {
        self.nodes.clone()
    }

    fn exists_path(&self, p: PedType, from: Coord, to: Coord) -> Result<bool, SpatialError> {
        if !self.node_set.contains(&from) {
            return Err(SpatialError::NotANode(from));
        }
        Ok(self.moves.contains(&(p, from, to)))
    }

    fn at_goal(&self, p: PedType, at: Coord) -> Result<bool, SpatialError> {
        if !self.node_set.contains(&at) {
            return Err(SpatialError::NotANode(at));
        }
        Ok(self.goals[p.index()] == at)
    }

    fn start_coords(&self, p: PedType) -> Coord {
        self.starts[p.index()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedModel {
    pub text: String,
    pub line_count: usize,
    pub clauses: ClauseTable,
}

impl GeneratedModel {
    pub fn movement_clauses(&self) -> usize {
        self.clauses.moves.len()
    }
}

pub fn emit_model(g: &SpatialGraph, params: &RateParams) -> GeneratedModel {
    emit_model_with_routes(g, params, &RouteTable::none())
}

pub fn emit_model_with_routes(g: &SpatialGraph, params: &RateParams, routes: &RouteTable) -> GeneratedModel {
    let clauses = ClauseTable::from_graph(g, params, routes);
    let text = render_model(g, &clauses);
    GeneratedModel { line_count: text.lines().count(), text, clauses }
}

fn render_model(g: &SpatialGraph, t: &ClauseTable) -> String {
    let mut s = String::new();
    let w = &mut s;
    let _ = writeln!(w, "// Pedestrian counter-flow model");
    let _ = writeln!(
        w,
        "// {} nodes, {} connections, estimated editor output {} lines",
        g.nodes().len(),
        g.connection_count(),
        loc_estimate(g)
    );
    let _ = writeln!(w);
    let _ = writeln!(w, "enum PedType = A, B;");
    let _ = writeln!(w);
    for (k, v) in t.params.entries() {
        let _ = writeln!(w, "const {k} = {};", fmt_real(v));
    }
    let _ = writeln!(w);

    let _ = writeln!(w, "fun bool ExistsPath(PedType P, int x, int y, int i, int j) {{");
    for &(p, a, b) in &t.moves {
        let _ = writeln!(
            w,
            "  if ((P == {p}) && (x == {}) && (y == {}) && (i == {}) && (j == {})) {{ return true; }}",
            a.x, a.y, b.x, b.y
        );
    }
    let _ = writeln!(w, "  return false;\n}}\n");

    let _ = writeln!(w, "fun bool AtGoal(PedType P, int x, int y) {{");
    for p in PedType::ALL {
        let c = t.goals[p.index()];
        let _ = writeln!(w, "  if ((P == {p}) && (x == {}) && (y == {})) {{ return true; }}", c.x, c.y);
    }
    let _ = writeln!(w, "  return false;\n}}\n");

    let _ = writeln!(w, "fun real ArrivalRate(PedType P) {{");
    let _ = writeln!(w, "  if (P == A) {{ return arr_A; }}\n  return arr_B;\n}}\n");
    for (axis, pick) in [("x", 0usize), ("y", 1)] {
        let _ = writeln!(w, "fun int Start_{axis}(PedType P) {{");
        for p in PedType::ALL {
            let c = t.starts[p.index()];
            let v = if pick == 0 { c.x } else { c.y };
            let _ = writeln!(w, "  if (P == {p}) {{ return {v}; }}");
        }
        let _ = writeln!(w, "  return 0;\n}}\n");
    }
    let _ = writeln!(w, "fun real MoveRate(PedType P, int a_ij, int b_ij) {{");
    let _ = writeln!(w, "  if (P == A) {{ return move_A / (b_ij + 1); }}\n  return move_B / (a_ij + 1);\n}}\n");

    let _ = writeln!(w, "component Pedestrian(PedType P, int x, int y, real stime) {{");
    let _ = writeln!(w, "  store {{ attrib P := P; attrib x := x; attrib y := y; attrib stime := stime; }}");
    let _ = writeln!(w, "  behaviour {{\n    Ped =");
    for &(p, a, b) in &t.moves {
        let _ = writeln!(
            w,
            "      [my.P == {p} && my.x == {} && my.y == {}] move_{}_{}*[false]<>{{ my.x := {}; my.y := {}; }}.Ped +",
            a.x, a.y, b.x, b.y, b.x, b.y
        );
    }
    for p in PedType::ALL {
        let c = t.goals[p.index()];
        let _ = writeln!(w, "      [my.P == {p} && my.x == {} && my.y == {}] fin*[false]<>.nil +", c.x, c.y);
    }
    let _ = writeln!(w, "      nil;\n  }}\n  init {{ Ped }}\n}}\n");
    let _ = writeln!(w, "component Arrival(PedType P) {{");
    let _ = writeln!(w, "  store {{ attrib P := P; }}\n  behaviour {{ Arr = arrive*[false]<>.Arr; }}\n  init {{ Arr }}\n}}\n");

    let _ = writeln!(w, "measure average_A = global.total_A / global.count_A;");
    let _ = writeln!(w, "measure average_B = global.total_B / global.count_B;\n");
    let _ = writeln!(w, "system PedAB {{");
    let _ = writeln!(w, "  collective {{ new Arrival(A); new Arrival(B); }}");
    let _ = writeln!(w, "  environment {{");
    let _ = writeln!(w, "    store {{ attrib count_A := 0; attrib count_B := 0; attrib total_A := 0.0; attrib total_B := 0.0; }}");
    let _ = writeln!(w, "    prob {{ default: 1.0; }}\n    weight {{ default: 1.0; }}");
    let _ = writeln!(w, "    rate {{");
    let _ = writeln!(w, "      [true] arrive* : ArrivalRate(sender.P);");
    for &(p, a, b) in &t.moves {
        let blocked = t.routes.contains(&(p, a, b));
        let rate = if blocked { "0.0".to_owned() } else { format!("MoveRate({p}, #{{A@({},{})}}, #{{B@({},{})}})", b.x, b.y, b.x, b.y) };
        let _ = writeln!(
            w,
            "      [sender.P == {p} && sender.x == {} && sender.y == {}] move_{}_{}* : {rate};",
            a.x, a.y, b.x, b.y
        );
    }
    let _ = writeln!(w, "      default : lambda_fast;\n    }}");
    let _ = writeln!(w, "    update {{");
    let _ = writeln!(w, "      arrive* : new Pedestrian(sender.P, Start_x(sender.P), Start_y(sender.P), now);");
    let _ = writeln!(w, "      fin* : count[sender.P] := count[sender.P] + 1; total[sender.P] := total[sender.P] + (now - sender.stime);");
    let _ = writeln!(w, "    }}\n  }}\n}}\n");

    let _ = writeln!(w, "@clauses");
    for c in &t.nodes {
        let _ = writeln!(w, "node {} {}", c.x, c.y);
    }
    for &(p, a, b) in &t.moves {
        let _ = writeln!(w, "move {p} {} {} {} {}", a.x, a.y, b.x, b.y);
    }
    for p in PedType::ALL {
        let g = t.goals[p.index()];
        let st = t.starts[p.index()];
        let _ = writeln!(w, "goal {p} {} {}", g.x, g.y);
        let _ = writeln!(w, "start {p} {} {}", st.x, st.y);
    }
    for (k, v) in t.params.entries() {
        let _ = writeln!(w, "param {k} {}", fmt_real(v));
    }
    for &(p, a, b) in &t.routes {
        let _ = writeln!(w, "route {p} {} {} {} {}", a.x, a.y, b.x, b.y);
    }
    let _ = writeln!(w, "@end");
    s
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelLoadError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("clause table missing: {0}")]
    Missing(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Parses the clause table of a `.cbmodel` file.
pub fn parse_clauses(text: &str) -> Result<ClauseTable, ModelLoadError> {
    let mut inside = false;
    let mut closed = false;
    let mut nodes = Vec::new();
    let mut moves = Vec::new();
    let mut goals: [Option<Coord>; 2] = [None, None];
    let mut starts: [Option<Coord>; 2] = [None, None];
    let mut params = RateParams::default();
    let mut routes = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.trim();
        if !inside {
            inside = l == "@clauses";
            continue;
        }
        if l == "@end" {
            closed = true;
            break;
        }
        if l.is_empty() {
            continue;
        }
        let err = |m: &str| ModelLoadError::Syntax { line, message: m.to_owned() };
        let f: Vec<&str> = l.split_whitespace().collect();
        let int = |s: &str| s.parse::<i64>().map_err(|_| err(&format!("bad integer `{s}`")));
        let ptype = |s: &str| s.parse::<PedType>().map_err(|e| err(&e));
        match f.as_slice() {
            ["node", x, y] => nodes.push(Coord::new(int(x)?, int(y)?)),
            ["move", p, x, y, i, j] => moves.push((ptype(p)?, Coord::new(int(x)?, int(y)?), Coord::new(int(i)?, int(j)?))),
            ["route", p, x, y, i, j] => routes.push((ptype(p)?, Coord::new(int(x)?, int(y)?), Coord::new(int(i)?, int(j)?))),
            ["goal", p, x, y] => goals[ptype(p)?.index()] = Some(Coord::new(int(x)?, int(y)?)),
            ["start", p, x, y] => starts[ptype(p)?.index()] = Some(Coord::new(int(x)?, int(y)?)),
            ["param", k, v] => {
                let v: f64 = v.parse().map_err(|_| err(&format!("bad real `{v}`")))?;
                params.set(k, v).map_err(|e| err(&e.to_string()))?;
            }
            _ => return Err(err(&format!("unrecognised clause `{l}`"))),
        }
    }
    if !closed {
        return Err(ModelLoadError::Missing("no `@clauses ... @end` block".into()));
    }
    let pick = |v: [Option<Coord>; 2], what: &str| -> Result<[Coord; 2], ModelLoadError> {
        match v {
            [Some(a), Some(b)] => Ok([a, b]),
            _ => Err(ModelLoadError::Missing(format!("{what} for both types"))),
        }
    };
    Ok(ClauseTable {
        nodes,
        moves,
        goals: pick(goals, "goal")?,
        starts: pick(starts, "start")?,
        params,
        routes,
    })
}

/// Builds a runnable model from generated model text.
pub fn load_model(text: &str) -> Result<Model, ModelLoadError> {
    let table = parse_clauses(text)?;
    let topology = Arc::new(ClauseTopology::new(&table));
    Ok(Model::assemble(
        topology,
        table.definitions(),
        table.params,
        table.route_table(),
        None,
    )?)
}
