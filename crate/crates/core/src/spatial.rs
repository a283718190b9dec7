//! Spatial graphs with per-type mobility subgraphs, the topology functions
//! the pedestrian model is parameterised by, and the cross-bar generator.
//!
//! A [`SpatialGraph`] is immutable once built. Construction validates every
//! structural invariant (unique coordinates, no self-loops, colour/type
//! agreement, goal reachability), so downstream code can treat lookups of
//! valid coordinates as infallible.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::kernel::{Component, ComponentKind};

/// Pedestrian type. `A` crosses left to right on the red sub-network,
/// `B` right to left on the blue one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PedType {
    A,
    B,
}

impl PedType {
    pub const ALL: [PedType; 2] = [PedType::A, PedType::B];

    pub fn index(self) -> usize {
        match self {
            PedType::A => 0,
            PedType::B => 1,
        }
    }

    pub fn opposite(self) -> PedType {
        match self {
            PedType::A => PedType::B,
            PedType::B => PedType::A,
        }
    }

    /// Colour of the sub-network this type is restricted to.
    pub fn colour(self) -> Colour {
        match self {
            PedType::A => Colour::Red,
            PedType::B => Colour::Blue,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PedType::A => "A",
            PedType::B => "B",
        }
    }
}

impl fmt::Display for PedType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PedType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "A" => Ok(PedType::A),
            "B" => Ok(PedType::B),
            other => Err(format!("unknown pedestrian type `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Colour {
    Red,
    Blue,
}

impl Colour {
    pub fn as_str(self) -> &'static str {
        match self {
            Colour::Red => "Red",
            Colour::Blue => "Blue",
        }
    }

    pub fn owner(self) -> PedType {
        match self {
            Colour::Red => PedType::A,
            Colour::Blue => PedType::B,
        }
    }
}

impl fmt::Display for Colour {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Colour {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Red" => Ok(Colour::Red),
            "Blue" => Ok(Colour::Blue),
            other => Err(format!("unknown edge colour `{other}`")),
        }
    }
}

/// Integer grid position of a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Coord {
    pub x: i64,
    pub y: i64,
}

impl Coord {
    pub const fn new(x: i64, y: i64) -> Self {
        Coord { x, y }
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.x, self.y)
    }
}

impl FromStr for Coord {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (x, y) = s
            .split_once(',')
            .ok_or_else(|| format!("coordinate `{s}` is not of the form x,y"))?;
        let x = x.trim().parse().map_err(|_| format!("bad x in `{s}`"))?;
        let y = y.trim().parse().map_err(|_| format!("bad y in `{s}`"))?;
        Ok(Coord { x, y })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Node {
    pub id: u32,
    pub x: i64,
    pub y: i64,
}

impl Node {
    pub fn coord(&self) -> Coord {
        Coord::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DirectedEdge {
    pub from: u32,
    pub to: u32,
    pub colour: Colour,
}

/// Mobility restriction for one pedestrian type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subgraph {
    /// Indices into [`SpatialGraph::edges`], ascending.
    pub edges: Vec<usize>,
    pub start: u32,
    pub goal: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrossbarSpec {
    pub width: u32,
    pub height: u32,
}

impl CrossbarSpec {
    pub fn new(width: u32, height: u32) -> Self {
        CrossbarSpec { width, height }
    }

    /// Label in `height x width` form, the way the instances are usually named.
    pub fn label(&self) -> String {
        format!("{}x{}", self.height, self.width)
    }

    pub fn expected_nodes(&self) -> u64 {
        let (w, h) = (self.width as u64, self.height as u64);
        (h + 3) + w * (h + 1)
    }

    pub fn expected_connections(&self) -> u64 {
        let (w, h) = (self.width as u64, self.height as u64);
        (2 * h + 2) + w * (3 * h + 1)
    }
}

/// Rate constants of the model, all in events per time unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateParams {
    pub move_a: f64,
    pub move_b: f64,
    pub arr_a: f64,
    pub arr_b: f64,
    pub lambda_fast: f64,
}

impl Default for RateParams {
    fn default() -> Self {
        RateParams {
            move_a: 1.0,
            move_b: 1.0,
            arr_a: 1.0,
            arr_b: 1.0,
            lambda_fast: 1000.0,
        }
    }
}

impl RateParams {
    pub fn move_base(&self, p: PedType) -> f64 {
        match p {
            PedType::A => self.move_a,
            PedType::B => self.move_b,
        }
    }

    pub fn validate(&self) -> Result<(), SpatialError> {
        let positive = [
            ("move_A", self.move_a),
            ("move_B", self.move_b),
            ("lambda_fast", self.lambda_fast),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(SpatialError::BadParameter(format!("{name} must be > 0, got {v}")));
            }
        }
        for (name, v) in [("arr_A", self.arr_a), ("arr_B", self.arr_b)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(SpatialError::BadParameter(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Key/value view used by the file formats.
    pub fn entries(&self) -> [(&'static str, f64); 5] {
        [
            ("move_A", self.move_a),
            ("move_B", self.move_b),
            ("arr_A", self.arr_a),
            ("arr_B", self.arr_b),
            ("lambda_fast", self.lambda_fast),
        ]
    }

    pub fn set(&mut self, key: &str, value: f64) -> Result<(), SpatialError> {
        match key {
            "move_A" => self.move_a = value,
            "move_B" => self.move_b = value,
            "arr_A" => self.arr_a = value,
            "arr_B" => self.arr_b = value,
            "lambda_fast" => self.lambda_fast = value,
            other => return Err(SpatialError::BadParameter(format!("unknown parameter `{other}`"))),
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpatialError {
    #[error("width and height must be >= 1 (got width {width}, height {height})")]
    BadDimensions { width: u32, height: u32 },
    #[error("duplicate node id {0}")]
    DuplicateNodeId(u32),
    #[error("duplicate node coordinates {0}")]
    DuplicateCoord(Coord),
    #[error("edge {index} ({from}->{to}) references a missing node")]
    DanglingEndpoint { index: usize, from: u32, to: u32 },
    #[error("edge {index} is a self-loop on node {node}")]
    SelfLoop { index: usize, node: u32 },
    #[error("duplicate directed edge {from}->{to} {colour}")]
    DuplicateEdge { from: u32, to: u32, colour: Colour },
    #[error("edge {index} has colour {colour} but belongs to the subgraph of type {ptype}")]
    ColourMismatch { index: usize, colour: Colour, ptype: PedType },
    #[error("subgraph of type {ptype} references edge index {index} which does not exist")]
    UnknownEdgeIndex { ptype: PedType, index: usize },
    #[error("subgraph of type {ptype} names missing node {node} as start or goal")]
    UnknownTerminal { ptype: PedType, node: u32 },
    #[error("goal of type {0} is not reachable from its start")]
    UnreachableGoal(PedType),
    #[error("position {0} is not a node of the graph")]
    NotANode(Coord),
    #[error("bad parameter: {0}")]
    BadParameter(String),
}

/// Node/edge graph with one restriction subgraph per pedestrian type.
#[derive(Debug, Clone)]
pub struct SpatialGraph {
    nodes: Vec<Node>,
    edges: Vec<DirectedEdge>,
    subgraphs: [Subgraph; 2],
    connection_count: u64,
    by_coord: HashMap<Coord, usize>,
    by_id: HashMap<u32, usize>,
    // per type, per node position: sorted target positions
    adjacency: [Vec<Vec<usize>>; 2],
}

impl PartialEq for SpatialGraph {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes
            && self.edges == other.edges
            && self.subgraphs == other.subgraphs
            && self.connection_count == other.connection_count
    }
}

impl SpatialGraph {
    /// Builds and validates a graph. Nodes are stored sorted by id and edges
    /// sorted by `(from, to, colour)`; subgraph edge indices are remapped
    /// accordingly, so two graphs with the same content compare equal
    /// regardless of input order.
    pub fn new(
        mut nodes: Vec<Node>,
        edges: Vec<DirectedEdge>,
        subgraphs: [Subgraph; 2],
        connection_count: u64,
    ) -> Result<Self, SpatialError> {
        nodes.sort();
        let mut by_id = HashMap::with_capacity(nodes.len());
        let mut by_coord = HashMap::with_capacity(nodes.len());
        for (pos, n) in nodes.iter().enumerate() {
            if by_id.insert(n.id, pos).is_some() {
                return Err(SpatialError::DuplicateNodeId(n.id));
            }
            if by_coord.insert(n.coord(), pos).is_some() {
                return Err(SpatialError::DuplicateCoord(n.coord()));
            }
        }
        for (index, e) in edges.iter().enumerate() {
            if !by_id.contains_key(&e.from) || !by_id.contains_key(&e.to) {
                return Err(SpatialError::DanglingEndpoint { index, from: e.from, to: e.to });
            }
            if e.from == e.to {
                return Err(SpatialError::SelfLoop { index, node: e.from });
            }
        }

        let mut order: Vec<usize> = (0..edges.len()).collect();
        order.sort_by_key(|&i| edges[i]);
        let mut remap = vec![0usize; edges.len()];
        for (new, &old) in order.iter().enumerate() {
            remap[old] = new;
        }
        let sorted: Vec<DirectedEdge> = order.iter().map(|&i| edges[i]).collect();
        for pair in sorted.windows(2) {
            if pair[0] == pair[1] {
                let e = pair[0];
                return Err(SpatialError::DuplicateEdge { from: e.from, to: e.to, colour: e.colour });
            }
        }

        let mut subgraphs = subgraphs;
        for p in PedType::ALL {
            let sg = &mut subgraphs[p.index()];
            for t in [sg.start, sg.goal] {
                if !by_id.contains_key(&t) {
                    return Err(SpatialError::UnknownTerminal { ptype: p, node: t });
                }
            }
            let mut mapped = BTreeSet::new();
            for &old in &sg.edges {
                let new = *remap
                    .get(old)
                    .ok_or(SpatialError::UnknownEdgeIndex { ptype: p, index: old })?;
                if sorted[new].colour != p.colour() {
                    return Err(SpatialError::ColourMismatch {
                        index: old,
                        colour: sorted[new].colour,
                        ptype: p,
                    });
                }
                mapped.insert(new);
            }
            sg.edges = mapped.into_iter().collect();
        }

        let adjacency = PedType::ALL.map(|p| {
            let mut adj = vec![Vec::new(); nodes.len()];
            for &ei in &subgraphs[p.index()].edges {
                let e = sorted[ei];
                adj[by_id[&e.from]].push(by_id[&e.to]);
            }
            for targets in &mut adj {
                targets.sort_unstable();
            }
            adj
        });

        let graph = SpatialGraph {
            nodes,
            edges: sorted,
            subgraphs,
            connection_count,
            by_coord,
            by_id,
            adjacency,
        };
        for p in PedType::ALL {
            if !graph.goal_reachable(p) {
                return Err(SpatialError::UnreachableGoal(p));
            }
        }
        Ok(graph)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[DirectedEdge] {
        &self.edges
    }

    pub fn subgraph(&self, p: PedType) -> &Subgraph {
        &self.subgraphs[p.index()]
    }

    /// Drawn-connection tally, as opposed to the number of directed edges.
    pub fn connection_count(&self) -> u64 {
        self.connection_count
    }

    pub fn node_by_id(&self, id: u32) -> Option<&Node> {
        self.by_id.get(&id).map(|&pos| &self.nodes[pos])
    }

    pub fn node_at(&self, c: Coord) -> Option<&Node> {
        self.by_coord.get(&c).map(|&pos| &self.nodes[pos])
    }

    pub fn contains(&self, c: Coord) -> bool {
        self.by_coord.contains_key(&c)
    }

    /// All node coordinates, ascending.
    pub fn coords(&self) -> Vec<Coord> {
        let mut v: Vec<Coord> = self.nodes.iter().map(Node::coord).collect();
        v.sort();
        v
    }

    fn position(&self, c: Coord) -> Result<usize, SpatialError> {
        self.by_coord.get(&c).copied().ok_or(SpatialError::NotANode(c))
    }

    /// Admissible one-step targets of type `p` from `from`, ascending by node id.
    pub fn successors(&self, p: PedType, from: Coord) -> Result<Vec<Coord>, SpatialError> {
        let pos = self.position(from)?;
        Ok(self.adjacency[p.index()][pos]
            .iter()
            .map(|&t| self.nodes[t].coord())
            .collect())
    }

    /// True iff a directed edge of `p`'s subgraph runs from `from` to `to`.
    pub fn exists_path(&self, p: PedType, from: Coord, to: Coord) -> Result<bool, SpatialError> {
        let pos = self.position(from)?;
        let Some(&target) = self.by_coord.get(&to) else {
            return Ok(false);
        };
        Ok(self.adjacency[p.index()][pos].binary_search(&target).is_ok())
    }

    pub fn at_goal(&self, p: PedType, at: Coord) -> Result<bool, SpatialError> {
        let pos = self.position(at)?;
        Ok(self.nodes[pos].id == self.subgraph(p).goal)
    }

    pub fn start_coords(&self, p: PedType) -> Coord {
        self.nodes[self.by_id[&self.subgraph(p).start]].coord()
    }

    pub fn goal_coords(&self, p: PedType) -> Coord {
        self.nodes[self.by_id[&self.subgraph(p).goal]].coord()
    }

    /// Breadth-first search from start to goal over `p`'s subgraph.
    pub fn goal_reachable(&self, p: PedType) -> bool {
        let start = self.by_id[&self.subgraph(p).start];
        let goal = self.by_id[&self.subgraph(p).goal];
        let mut seen = vec![false; self.nodes.len()];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(v) = queue.pop_front() {
            if v == goal {
                return true;
            }
            for &w in &self.adjacency[p.index()][v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        false
    }
}

/// Generates the `width x height` cross-bar network.
///
/// The middle is a grid of `height + 1` rows by `width + 1` columns. Column
/// `c` (1-based) sits at `x = c` and row `r` at `y = r`; the left endpoint is
/// at `(0, 0)` and the right endpoint at `(width + 2, 0)`. Every row runs
/// `L -> column 1 -> ... -> column width+1 -> R` (red, left to right) with a
/// blue copy in the opposite direction. Each vertical slot between adjacent
/// rows carries red and blue edges in both directions. For the connection
/// tally a vertical slot counts once in the two boundary columns and twice
/// (a red and a blue bar) in each interior column.
pub fn generate_crossbar(spec: CrossbarSpec) -> Result<SpatialGraph, SpatialError> {
    let CrossbarSpec { width, height } = spec;
    if width == 0 || height == 0 {
        return Err(SpatialError::BadDimensions { width, height });
    }
    let w = i64::from(width);
    let h = i64::from(height);

    let mut nodes = Vec::new();
    let mut id_of: HashMap<Coord, u32> = HashMap::new();
    let mut add = |c: Coord, nodes: &mut Vec<Node>| {
        let id = nodes.len() as u32;
        nodes.push(Node { id, x: c.x, y: c.y });
        id_of.insert(c, id);
    };
    let left = Coord::new(0, 0);
    let right = Coord::new(w + 2, 0);
    add(left, &mut nodes);
    for c in 1..=w + 1 {
        for r in 0..=h {
            add(Coord::new(c, r), &mut nodes);
        }
    }
    add(right, &mut nodes);

    let mut edges = Vec::new();
    let mut red = Vec::new();
    let mut blue = Vec::new();
    let mut push = |from: Coord, to: Coord, colour: Colour, edges: &mut Vec<DirectedEdge>| {
        let index = edges.len();
        edges.push(DirectedEdge { from: id_of[&from], to: id_of[&to], colour });
        match colour {
            Colour::Red => red.push(index),
            Colour::Blue => blue.push(index),
        }
    };

    let mut connections = 0u64;
    for r in 0..=h {
        let mut row = vec![left];
        row.extend((1..=w + 1).map(|c| Coord::new(c, r)));
        row.push(right);
        for pair in row.windows(2) {
            push(pair[0], pair[1], Colour::Red, &mut edges);
            push(pair[1], pair[0], Colour::Blue, &mut edges);
            connections += 1;
        }
    }
    for c in 1..=w + 1 {
        let boundary = c == 1 || c == w + 1;
        for r in 0..h {
            let (lo, hi) = (Coord::new(c, r), Coord::new(c, r + 1));
            for colour in [Colour::Red, Colour::Blue] {
                push(lo, hi, colour, &mut edges);
                push(hi, lo, colour, &mut edges);
            }
            connections += if boundary { 1 } else { 2 };
        }
    }

    let subgraphs = [
        Subgraph { edges: red, start: id_of[&left], goal: id_of[&right] },
        Subgraph { edges: blue, start: id_of[&right], goal: id_of[&left] },
    ];
    SpatialGraph::new(nodes, edges, subgraphs, connections)
}

pub fn arrival_rate(params: &RateParams, p: PedType) -> f64 {
    match p {
        PedType::A => params.arr_a,
        PedType::B => params.arr_b,
    }
}

/// Congestion-dependent movement rate: the base rate of `p` divided by one
/// plus the number of opposing pedestrians at the target node.
pub fn move_rate(params: &RateParams, p: PedType, a_at_target: u64, b_at_target: u64) -> f64 {
    match p {
        PedType::A => params.move_a / (b_at_target as f64 + 1.0),
        PedType::B => params.move_b / (a_at_target as f64 + 1.0),
    }
}

/// Number of live pedestrians of type `p` positioned at `at`, by direct scan.
pub fn count_at<'a, I>(collective: I, p: PedType, at: Coord) -> u64
where
    I: IntoIterator<Item = &'a Component>,
{
    collective
        .into_iter()
        .filter(|c| c.kind == ComponentKind::Pedestrian)
        .filter(|c| c.store.ped_type() == Some(p) && c.store.coord() == Some(at))
        .count() as u64
}
