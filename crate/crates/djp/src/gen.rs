//! Instance generators: the integrality-gap wall, the edge-coloring
//! reductions, the multicolored-clique reduction, and seeded random
//! bounded-FVS instances for the statistical suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use crate::graph::{normalize_instance, Graph, Instance, Mode, NodeId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenError {
    #[error("input graph is not cubic: node {0} has degree {1}")]
    NotCubic(NodeId, usize),
    #[error("input graph is not simple")]
    NotSimple,
    #[error("invalid partition: {0}")]
    BadPartition(String),
    #[error("need k >= 2, got {0}")]
    TooFewPairs(usize),
}

/// Integrality-gap instance: k wires that pairwise cross at a shared edge.
///
/// Laid out as row-then-column monotone paths in a k x k arrangement, with
/// s_i entering row i from the left and t_i leaving a column at the top.
/// Every crossing is a two-node gadget traversed by both wires, so the graph
/// is subcubic and any two integral paths must share an edge, while half a
/// unit of flow per wire fits everywhere.
pub fn gen_grid_gap(k: usize) -> Instance {
    assert!(k >= 2, "gap instance needs k >= 2");
    let mut g = Graph::new(2 * k);
    let s = |i: usize| i;
    let t = |i: usize| k + i;
    // gadget nodes for each unordered pair {a,b}, a < b
    let mut gadget = vec![vec![(0usize, 0usize); k]; k];
    for a in 0..k {
        for b in a + 1..k {
            let u = g.add_node();
            let v = g.add_node();
            gadget[a][b] = (u, v);
            g.add_edge(u, v);
        }
    }
    // wire i: row i rightward across gadgets {i,j} for j > i, then up the
    // column across gadgets {j,i} for j < i
    for i in 0..k {
        let mut prev = s(i);
        let stops = (i + 1..k).rev().map(|j| gadget[i][j]).chain((0..i).rev().map(|j| gadget[j][i]));
        for (u, v) in stops {
            g.add_edge(prev, u);
            prev = v;
        }
        g.add_edge(prev, t(i));
    }
    let pairs = (0..k).map(|i| (s(i), t(i))).collect();
    Instance { graph: g, pairs, mode: Mode::EdgeDisjoint }
}

fn check_cubic_simple(h: &Graph) -> Result<(), GenError> {
    let mut seen = std::collections::HashSet::new();
    for e in h.live_edges() {
        let (u, v) = h.raw_endpoints(e);
        if u == v || !seen.insert((u.min(v), u.max(v))) {
            return Err(GenError::NotSimple);
        }
    }
    for v in 0..h.node_count() {
        let d = h.degree(v);
        if d != 3 {
            return Err(GenError::NotCubic(v, d));
        }
    }
    Ok(())
}

/// Edge-3-coloring reduction with a 3-hub complete bipartite core: all
/// |E(H)| pairs are routable iff H is 3-edge-colorable. Core FVS number
/// is at most 2.
pub fn gen_coloring_r2(h: &Graph) -> Result<Instance, GenError> {
    check_cubic_simple(h)?;
    build_coloring(h, 3)
}

/// Two-hub variant: the optimum is |V(H)| iff H is 3-edge-colorable. Core
/// FVS number is at most 1.
pub fn gen_coloring_r1(h: &Graph) -> Result<Instance, GenError> {
    check_cubic_simple(h)?;
    build_coloring(h, 2)
}

fn build_coloring(h: &Graph, hubs: usize) -> Result<Instance, GenError> {
    let nh = h.node_count();
    let mut g = Graph::new(hubs + nh);
    for w in 0..nh {
        for c in 0..hubs {
            g.add_edge(c, hubs + w);
        }
    }
    let mut pairs = Vec::new();
    for e in h.live_edges() {
        let (u, v) = h.raw_endpoints(e);
        pairs.push((hubs + u, hubs + v));
    }
    let raw = Instance { graph: g, pairs, mode: Mode::EdgeDisjoint };
    let norm = normalize_instance(&raw).expect("coloring pairs are distinct");
    Ok(norm.instance)
}

pub mod cubic {
    //! Named cubic graphs used by the hardness-equivalence tests.

    use crate::graph::Graph;

    pub fn k4() -> Graph {
        Graph::with_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])
    }

    pub fn k33() -> Graph {
        let mut edges = Vec::new();
        for u in 0..3 {
            for v in 3..6 {
                edges.push((u, v));
            }
        }
        Graph::with_edges(6, &edges)
    }

    /// Triangular prism, 3-edge-colorable.
    pub fn prism() -> Graph {
        Graph::with_edges(
            6,
            &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (0, 3), (1, 4), (2, 5)],
        )
    }

    /// The Petersen graph, the classic class-2 cubic graph.
    pub fn petersen() -> Graph {
        let mut edges = Vec::new();
        for i in 0..5 {
            edges.push((i, (i + 1) % 5)); // outer cycle
            edges.push((5 + i, 5 + (i + 2) % 5)); // inner pentagram
            edges.push((i, 5 + i)); // spokes
        }
        Graph::with_edges(10, &edges)
    }

    pub fn by_name(name: &str) -> Option<Graph> {
        match name {
            "k4" => Some(k4()),
            "k33" => Some(k33()),
            "prism" => Some(prism()),
            "petersen" => Some(petersen()),
            _ => None,
        }
    }
}

/// Output of the multicolored-clique reduction: the node-disjoint instance,
/// the target value, and the feedback vertex set witness that comes with
/// the construction.
#[derive(Debug, Clone)]
pub struct CliqueReduction {
    pub instance: Instance,
    pub target: usize,
    pub fvs_witness: Vec<NodeId>,
}

/// Reduce a multicolored-clique input (graph plus a k-way partition with
/// classes of equal size n >= 2) to a MaxNDP instance whose optimum equals
/// `target = k(n-1) + k(k-1)/2` iff the input has a clique with one node
/// per class.
pub fn gen_multicolored_clique(
    g: &Graph,
    k: usize,
    partition: &[Vec<NodeId>],
) -> Result<CliqueReduction, GenError> {
    if k < 2 || partition.len() != k {
        return Err(GenError::BadPartition(format!(
            "need k >= 2 classes, got {} (k = {k})",
            partition.len()
        )));
    }
    let n = partition[0].len();
    if n < 2 {
        return Err(GenError::BadPartition("classes must have size >= 2".into()));
    }
    let mut owner = vec![usize::MAX; g.node_count()];
    for (i, class) in partition.iter().enumerate() {
        if class.len() != n {
            return Err(GenError::BadPartition("classes must have equal sizes".into()));
        }
        for &v in class {
            if v >= g.node_count() || owner[v] != usize::MAX {
                return Err(GenError::BadPartition(format!("node {v} invalid or repeated")));
            }
            owner[v] = i;
        }
    }

    let mut h = Graph::new(0);
    // x[i][vi][pos] with positions ordered by ascending j (j != i)
    let mut x = vec![vec![Vec::new(); n]; k];
    let js = |i: usize| (0..k).filter(move |&j| j != i);
    for i in 0..k {
        for vi in 0..n {
            for _ in js(i) {
                let node = h.add_node();
                x[i][vi].push(node);
            }
            for w in x[i][vi].windows(2) {
                h.add_edge(w[0], w[1]);
            }
        }
    }
    // u^i is the first node of each class; s/t terminals for the others
    let mut pairs = Vec::new();
    for i in 0..k {
        for vi in 1..n {
            let s = h.add_node();
            h.add_edge(s, x[i][vi][0]);
            h.add_edge(s, x[i][0][0]);
            let t = h.add_node();
            h.add_edge(t, *x[i][vi].last().unwrap());
            h.add_edge(t, *x[i][0].last().unwrap());
            pairs.push((s, t));
        }
    }
    // connector nodes wire position j of gadget i to position i of gadget j
    let pos_of = |i: usize, j: usize| js(i).position(|jj| jj == j).unwrap();
    let mut fvs_witness = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            let p = h.add_node();
            fvs_witness.push(p);
            for vi in 0..n {
                h.add_edge(p, x[i][vi][pos_of(i, j)]);
                h.add_edge(p, x[j][vi][pos_of(j, i)]);
            }
        }
    }
    for i in 0..k {
        let first = x[i][0][0];
        let last = *x[i][0].last().unwrap();
        fvs_witness.push(first);
        if last != first {
            fvs_witness.push(last);
        }
    }
    // one terminal pair per cross-class input edge
    for e in g.live_edges() {
        let (a, b) = g.raw_endpoints(e);
        let (ia, ib) = (owner[a], owner[b]);
        if ia == usize::MAX || ib == usize::MAX || ia == ib {
            continue;
        }
        let (i, j, a, b) = if ia < ib { (ia, ib, a, b) } else { (ib, ia, b, a) };
        let va = partition[i].iter().position(|&v| v == a).unwrap();
        let vb = partition[j].iter().position(|&v| v == b).unwrap();
        pairs.push((x[i][va][pos_of(i, j)], x[j][vb][pos_of(j, i)]));
    }
    let target = k * (n - 1) + k * (k - 1) / 2;
    let raw = Instance { graph: h, pairs, mode: Mode::NodeDisjoint };
    let norm = normalize_instance(&raw).expect("reduction pairs are distinct");
    Ok(CliqueReduction { instance: norm.instance, target, fvs_witness })
}

/// Seeded random instance: a random forest, `r` hub nodes with random
/// hub-forest edges, and `k` random pairs, leaf-normalized. The hubs
/// witness FVS <= r.
pub fn gen_random_fvs(
    n_forest: usize,
    r: usize,
    extra_edges: usize,
    k: usize,
    seed: u64,
    mode: Mode,
) -> Instance {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let n_forest = n_forest.max(2);
    let mut g = Graph::new(n_forest + r);
    for v in 1..n_forest {
        if rng.random::<f64>() < 0.85 {
            let parent = rng.random_range(0..v);
            g.add_edge(parent, v);
        }
    }
    let mut used = std::collections::HashSet::new();
    let mut added = 0;
    let mut attempts = 0;
    while r > 0 && added < extra_edges && attempts < 50 * (extra_edges + 1) {
        attempts += 1;
        let hub = n_forest + rng.random_range(0..r);
        let w = rng.random_range(0..n_forest);
        if used.insert((hub, w)) {
            g.add_edge(hub, w);
            added += 1;
        }
    }
    let total = n_forest + r;
    let mut pairs = Vec::with_capacity(k);
    for _ in 0..k {
        let s = rng.random_range(0..total);
        let mut t = rng.random_range(0..total);
        while t == s {
            t = rng.random_range(0..total);
        }
        pairs.push((s, t));
    }
    let raw = Instance { graph: g, pairs, mode };
    normalize_instance(&raw).expect("pairs are distinct").instance
}

/// G(n, p) graph for unit tests.
pub fn random_graph_for_tests(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0x5eed);
    let mut g = Graph::new(n);
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p {
                g.add_edge(u, v);
            }
        }
    }
    g
}

/// Random non-normalized instance with k distinct-endpoint pairs.
pub fn random_instance_for_tests(n: usize, p: f64, k: usize, mode: Mode, seed: u64) -> Instance {
    let g = random_graph_for_tests(n, p, seed);
    let mut rng = ChaCha12Rng::seed_from_u64(seed.wrapping_mul(31) ^ 0xabcd);
    let mut pairs = Vec::with_capacity(k);
    for _ in 0..k {
        let s = rng.random_range(0..n);
        let mut t = rng.random_range(0..n);
        while t == s {
            t = rng.random_range(0..n);
        }
        pairs.push((s, t));
    }
    Instance { graph: g, pairs, mode }
}
