//! Multigraph, instance and routing types shared by all solvers.
//!
//! Edges are identified by their position in the edge list and are
//! tombstoned rather than removed, so edge ids stay stable across
//! contractions. Parallel edges are allowed; self-loops may only appear
//! transiently inside `contract_edge` and are deleted there.

use std::fmt;

use thiserror::Error;

pub type NodeId = usize;
pub type EdgeId = usize;

pub const MAX_NODES: usize = 1 << 31;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("node {0} out of range (node_count {1})")]
    NodeOutOfRange(NodeId, usize),
    #[error("edge {0} is not live")]
    DeadEdge(EdgeId),
    #[error("edge {0} is a self-loop")]
    SelfLoop(EdgeId),
    #[error("pair {0} has identical endpoints {1}")]
    DegeneratePair(usize, NodeId),
    #[error("graph too large: {0} nodes")]
    TooManyNodes(usize),
}

/// Undirected multigraph with stable, tombstoned edge ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    node_count: usize,
    endpoints: Vec<(NodeId, NodeId)>,
    deleted: Vec<bool>,
}

impl Graph {
    pub fn new(node_count: usize) -> Self {
        assert!(node_count < MAX_NODES, "graphs are capped at 2^31 nodes");
        Graph {
            node_count,
            endpoints: Vec::new(),
            deleted: Vec::new(),
        }
    }

    pub fn with_edges(node_count: usize, edges: &[(NodeId, NodeId)]) -> Self {
        let mut g = Graph::new(node_count);
        for &(u, v) in edges {
            g.add_edge(u, v);
        }
        g
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Total number of edge slots ever allocated, including tombstones.
    pub fn edge_slots(&self) -> usize {
        self.endpoints.len()
    }

    pub fn live_edge_count(&self) -> usize {
        self.deleted.iter().filter(|&&d| !d).count()
    }

    pub fn add_node(&mut self) -> NodeId {
        assert!(self.node_count + 1 < MAX_NODES);
        self.node_count += 1;
        self.node_count - 1
    }

    pub fn add_edge(&mut self, u: NodeId, v: NodeId) -> EdgeId {
        assert!(u < self.node_count && v < self.node_count, "edge endpoint out of range");
        self.endpoints.push((u, v));
        self.deleted.push(false);
        self.endpoints.len() - 1
    }

    pub fn is_live(&self, e: EdgeId) -> bool {
        e < self.endpoints.len() && !self.deleted[e]
    }

    /// Endpoints of an edge slot, whether or not it is live.
    pub fn raw_endpoints(&self, e: EdgeId) -> (NodeId, NodeId) {
        self.endpoints[e]
    }

    pub fn endpoints(&self, e: EdgeId) -> Result<(NodeId, NodeId), GraphError> {
        if !self.is_live(e) {
            return Err(GraphError::DeadEdge(e));
        }
        Ok(self.endpoints[e])
    }

    /// The other endpoint of `e` as seen from `v`.
    pub fn other_end(&self, e: EdgeId, v: NodeId) -> NodeId {
        let (a, b) = self.endpoints[e];
        if a == v {
            b
        } else {
            a
        }
    }

    pub fn is_loop(&self, e: EdgeId) -> bool {
        let (a, b) = self.endpoints[e];
        a == b
    }

    pub fn delete_edge(&mut self, e: EdgeId) {
        self.deleted[e] = true;
    }

    pub fn live_edges(&self) -> impl Iterator<Item = EdgeId> + '_ {
        (0..self.endpoints.len()).filter(move |&e| !self.deleted[e])
    }

    /// Adjacency lists over live edges: `adj[v]` holds `(neighbor, edge)`.
    /// Self-loops contribute two entries at their node.
    pub fn adjacency(&self) -> Vec<Vec<(NodeId, EdgeId)>> {
        let mut adj = vec![Vec::new(); self.node_count];
        for e in self.live_edges() {
            let (u, v) = self.endpoints[e];
            adj[u].push((v, e));
            if u != v {
                adj[v].push((u, e));
            } else {
                adj[u].push((u, e));
            }
        }
        adj
    }

    pub fn degree(&self, v: NodeId) -> usize {
        let mut d = 0;
        for e in self.live_edges() {
            let (a, b) = self.endpoints[e];
            if a == v {
                d += 1;
            }
            if b == v {
                d += 1;
            }
        }
        d
    }

    /// True if the live subgraph is acyclic (parallel edges and loops count
    /// as cycles).
    pub fn is_forest(&self) -> bool {
        let mut parent: Vec<usize> = (0..self.node_count).collect();
        fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for e in self.live_edges() {
            let (u, v) = self.endpoints[e];
            if u == v {
                return false;
            }
            let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
            if ru == rv {
                return false;
            }
            parent[ru] = rv;
        }
        true
    }

    /// True if the live subgraph minus `removed` nodes is acyclic.
    pub fn is_forest_without(&self, removed: &[NodeId]) -> bool {
        let mut gone = vec![false; self.node_count];
        for &v in removed {
            gone[v] = true;
        }
        let mut parent: Vec<usize> = (0..self.node_count).collect();
        fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for e in self.live_edges() {
            let (u, v) = self.endpoints[e];
            if gone[u] || gone[v] {
                continue;
            }
            if u == v {
                return false;
            }
            let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
            if ru == rv {
                return false;
            }
            parent[ru] = rv;
        }
        true
    }
}

/// Result of contracting one edge: the minor, plus maps from old ids.
///
/// `node_map[old]` is the surviving node id. `edge_map[old]` is `Some(new)`
/// for edges that survive (ids are preserved), `None` for the contracted
/// edge, edges that became self-loops, and edges that were already dead.
#[derive(Debug, Clone)]
pub struct Contraction {
    pub graph: Graph,
    pub node_map: Vec<NodeId>,
    pub edge_map: Vec<Option<EdgeId>>,
}

/// Contract a live, non-loop edge. The endpoints merge into one node and
/// node ids are renumbered compactly; self-loops created by the merge are
/// deleted immediately.
pub fn contract_edge(g: &Graph, e: EdgeId) -> Result<Contraction, GraphError> {
    if !g.is_live(e) {
        return Err(GraphError::DeadEdge(e));
    }
    let (a, b) = g.raw_endpoints(e);
    if a == b {
        return Err(GraphError::SelfLoop(e));
    }
    let (keep, gone) = if a < b { (a, b) } else { (b, a) };
    let mut node_map = vec![0; g.node_count()];
    for v in 0..g.node_count() {
        let merged = if v == gone { keep } else { v };
        node_map[v] = if merged > gone { merged - 1 } else { merged };
    }
    let mut out = Graph::new(g.node_count() - 1);
    let mut edge_map = vec![None; g.edge_slots()];
    for slot in 0..g.edge_slots() {
        if !g.is_live(slot) || slot == e {
            out.endpoints.push((0, 0));
            out.deleted.push(true);
            continue;
        }
        let (u, v) = g.raw_endpoints(slot);
        let (nu, nv) = (node_map[u], node_map[v]);
        out.endpoints.push((nu, nv));
        // merge-created loops are deleted on the spot
        out.deleted.push(nu == nv);
        if nu != nv {
            edge_map[slot] = Some(slot);
        }
    }
    Ok(Contraction { graph: out, node_map, edge_map })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    EdgeDisjoint,
    NodeDisjoint,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::EdgeDisjoint => write!(f, "edp"),
            Mode::NodeDisjoint => write!(f, "ndp"),
        }
    }
}

/// A routing instance: graph, terminal pairs and disjointness mode.
#[derive(Debug, Clone)]
pub struct Instance {
    pub graph: Graph,
    pub pairs: Vec<(NodeId, NodeId)>,
    pub mode: Mode,
}

impl Instance {
    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }

    pub fn terminals(&self) -> Vec<NodeId> {
        let mut t = Vec::with_capacity(2 * self.pairs.len());
        for &(s, u) in &self.pairs {
            t.push(s);
            t.push(u);
        }
        t
    }
}

/// A walk with explicit edge ids so parallel edges stay distinguishable.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PathSeq {
    pub nodes: Vec<NodeId>,
    pub edges: Vec<EdgeId>,
}

impl PathSeq {
    pub fn single(node: NodeId) -> Self {
        PathSeq { nodes: vec![node], edges: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn first(&self) -> NodeId {
        self.nodes[0]
    }

    pub fn last(&self) -> NodeId {
        *self.nodes.last().unwrap()
    }

    /// Checks the node/edge interleaving against the graph: edge i must be
    /// live and connect nodes i and i+1.
    pub fn is_walk(&self, g: &Graph) -> bool {
        if self.nodes.is_empty() || self.nodes.len() != self.edges.len() + 1 {
            return false;
        }
        for (i, &e) in self.edges.iter().enumerate() {
            if !g.is_live(e) {
                return false;
            }
            let (a, b) = g.raw_endpoints(e);
            let (x, y) = (self.nodes[i], self.nodes[i + 1]);
            if !((a, b) == (x, y) || (a, b) == (y, x)) {
                return false;
            }
        }
        true
    }

    pub fn is_node_simple(&self) -> bool {
        let mut seen = self.nodes.clone();
        seen.sort_unstable();
        seen.windows(2).all(|w| w[0] != w[1])
    }

    /// Removes cycles by loop erasure, keeping endpoints. The result is a
    /// node-simple path using a subset of the original edges.
    pub fn simplified(&self) -> PathSeq {
        let mut nodes: Vec<NodeId> = vec![self.nodes[0]];
        let mut edges: Vec<EdgeId> = Vec::new();
        for i in 1..self.nodes.len() {
            let v = self.nodes[i];
            if let Some(pos) = nodes.iter().position(|&w| w == v) {
                nodes.truncate(pos + 1);
                edges.truncate(pos);
            } else {
                nodes.push(v);
                edges.push(self.edges[i - 1]);
            }
        }
        PathSeq { nodes, edges }
    }

    pub fn reversed(&self) -> PathSeq {
        let mut nodes = self.nodes.clone();
        let mut edges = self.edges.clone();
        nodes.reverse();
        edges.reverse();
        PathSeq { nodes, edges }
    }
}

/// An integral routing: at most one path per pair index.
#[derive(Debug, Clone, Default)]
pub struct Routing {
    pub entries: Vec<(usize, PathSeq)>,
}

impl Routing {
    pub fn size(&self) -> usize {
        self.entries.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    BadPairIndex(usize),
    DuplicatePair(usize),
    MalformedPath { pair: usize, detail: String },
    EndpointMismatch { pair: usize },
    NotSimple { pair: usize },
    EdgeCongestion { edge: EdgeId, uses: usize },
    NodeCongestion { node: NodeId, uses: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::BadPairIndex(i) => write!(f, "pair index {i} out of range"),
            Violation::DuplicatePair(i) => write!(f, "pair {i} routed more than once"),
            Violation::MalformedPath { pair, detail } => {
                write!(f, "malformed path for pair {pair}: {detail}")
            }
            Violation::EndpointMismatch { pair } => {
                write!(f, "path for pair {pair} does not connect its terminals")
            }
            Violation::NotSimple { pair } => write!(f, "path for pair {pair} is not simple"),
            Violation::EdgeCongestion { edge, uses } => {
                write!(f, "edge {edge} used by {uses} paths")
            }
            Violation::NodeCongestion { node, uses } => {
                write!(f, "node {node} used by {uses} paths")
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub feasible: bool,
    pub max_edge_congestion: usize,
    pub max_node_congestion: usize,
    pub violations: Vec<Violation>,
}

/// Checks a routing against an instance: paths must be well-formed simple
/// walks connecting their pairs, and the mode-relevant congestion must stay
/// within `congestion_cap`. Node congestion counts endpoints.
pub fn verify_routing(inst: &Instance, r: &Routing, congestion_cap: usize) -> VerifyReport {
    let g = &inst.graph;
    let mut violations = Vec::new();
    let mut seen_pair = vec![false; inst.pairs.len()];
    let mut edge_uses = vec![0usize; g.edge_slots()];
    let mut node_uses = vec![0usize; g.node_count()];
    for (idx, path) in &r.entries {
        if *idx >= inst.pairs.len() {
            violations.push(Violation::BadPairIndex(*idx));
            continue;
        }
        if seen_pair[*idx] {
            violations.push(Violation::DuplicatePair(*idx));
            continue;
        }
        seen_pair[*idx] = true;
        if !path.is_walk(g) {
            violations.push(Violation::MalformedPath {
                pair: *idx,
                detail: "edge/node interleaving broken or dead edge".into(),
            });
            continue;
        }
        let (s, t) = inst.pairs[*idx];
        if !(path.first() == s && path.last() == t) && !(path.first() == t && path.last() == s) {
            violations.push(Violation::EndpointMismatch { pair: *idx });
        }
        if !path.is_node_simple() {
            violations.push(Violation::NotSimple { pair: *idx });
        }
        for &e in &path.edges {
            edge_uses[e] += 1;
        }
        for &v in &path.nodes {
            node_uses[v] += 1;
        }
    }
    let max_edge_congestion = edge_uses.iter().copied().max().unwrap_or(0);
    let max_node_congestion = node_uses.iter().copied().max().unwrap_or(0);
    match inst.mode {
        Mode::EdgeDisjoint => {
            if max_edge_congestion > congestion_cap {
                for (e, &u) in edge_uses.iter().enumerate() {
                    if u > congestion_cap {
                        violations.push(Violation::EdgeCongestion { edge: e, uses: u });
                    }
                }
            }
        }
        Mode::NodeDisjoint => {
            if max_node_congestion > congestion_cap {
                for (v, &u) in node_uses.iter().enumerate() {
                    if u > congestion_cap {
                        violations.push(Violation::NodeCongestion { node: v, uses: u });
                    }
                }
            }
        }
    }
    VerifyReport {
        feasible: violations.is_empty(),
        max_edge_congestion,
        max_node_congestion,
        violations,
    }
}

/// A normalized instance plus the map back to the instance it came from.
///
/// Every terminal occurrence became a fresh leaf; `origin[v]` gives the node
/// of the original graph that `v` stands for (identity on original nodes).
#[derive(Debug, Clone)]
pub struct Normalized {
    pub instance: Instance,
    pub origin: Vec<NodeId>,
}

/// Attach a fresh leaf per terminal occurrence so the pairs form a matching
/// on degree-1 nodes. Original node and edge ids are preserved.
pub fn normalize_instance(raw: &Instance) -> Result<Normalized, GraphError> {
    for (i, &(s, t)) in raw.pairs.iter().enumerate() {
        if s >= raw.graph.node_count() {
            return Err(GraphError::NodeOutOfRange(s, raw.graph.node_count()));
        }
        if t >= raw.graph.node_count() {
            return Err(GraphError::NodeOutOfRange(t, raw.graph.node_count()));
        }
        if s == t {
            return Err(GraphError::DegeneratePair(i, s));
        }
    }
    let mut graph = raw.graph.clone();
    let mut origin: Vec<NodeId> = (0..graph.node_count()).collect();
    let mut pairs = Vec::with_capacity(raw.pairs.len());
    for &(s, t) in &raw.pairs {
        let ls = graph.add_node();
        origin.push(s);
        graph.add_edge(s, ls);
        let lt = graph.add_node();
        origin.push(t);
        graph.add_edge(t, lt);
        pairs.push((ls, lt));
    }
    Ok(Normalized {
        instance: Instance { graph, pairs, mode: raw.mode },
        origin,
    })
}

impl Normalized {
    /// Translate a routing on the normalized instance back to the original
    /// one: leaf endpoints are replaced by their origin nodes.
    pub fn denormalize_routing(&self, r: &Routing) -> Routing {
        let orig_nodes = self.origin.len() - 2 * self.instance.pairs.len();
        let mut entries = Vec::with_capacity(r.entries.len());
        for (idx, path) in &r.entries {
            let mut nodes = path.nodes.clone();
            let mut edges = path.edges.clone();
            // strip the two leaf steps added by normalization
            if nodes.first().is_some_and(|&v| v >= orig_nodes) {
                nodes.remove(0);
                edges.remove(0);
            }
            if nodes.last().is_some_and(|&v| v >= orig_nodes) {
                nodes.pop();
                edges.pop();
            }
            entries.push((*idx, PathSeq { nodes, edges }));
        }
        Routing { entries }
    }
}
