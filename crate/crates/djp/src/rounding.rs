//! Low-congestion randomized rounding: split the LP paths into subpaths at
//! feedback-vertex and terminal visits, aggregate flow tree by tree onto
//! "hot spot" corridors until every subpath carries one, then round pairs
//! independently with probability equal to their marginal.
//!
//! The aggregation only ever moves weight between paths of the same pair,
//! so marginals are untouched, and pivot corridors are pairwise
//! edge-disjoint, which caps the fractional congestion at 2.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::fvs::{fvs_approx2, fvs_exact, FeedbackVertexSet, FvsExact};
use crate::graph::{EdgeId, Graph, Instance, NodeId, PathSeq, Routing};
use crate::lp::{decompose_paths, solve_lp, FractionalSolution, WeightedPath};

/// Budget up to which the drivers use the exact FVS solver before falling
/// back to the 2-approximation.
pub const EXACT_FVS_BUDGET: usize = 12;

pub fn choose_fvs(g: &Graph) -> FeedbackVertexSet {
    match fvs_exact(g, EXACT_FVS_BUDGET) {
        FvsExact::Found(f) => f,
        FvsExact::ExceedsBudget => fvs_approx2(g),
    }
}

/// R plus all terminals, sorted and deduplicated. Terminals are leaves, so
/// the union is still a feedback vertex set.
pub fn augment_fvs_with_terminals(inst: &Instance, r: &[NodeId]) -> Vec<NodeId> {
    let mut out: Vec<NodeId> = r.to_vec();
    out.extend(inst.terminals());
    out.sort_unstable();
    out.dedup();
    out
}

/// Rooted-forest view of G - R+, with one tree per component rooted at its
/// smallest node.
#[derive(Debug, Clone)]
pub struct ForestView {
    pub in_r_plus: Vec<bool>,
    pub depth: Vec<usize>,
    pub parent: Vec<Option<NodeId>>,
    pub tree_root: Vec<NodeId>,
}

impl ForestView {
    pub fn build(g: &Graph, r_plus: &[NodeId]) -> ForestView {
        let n = g.node_count();
        let mut in_r_plus = vec![false; n];
        for &v in r_plus {
            in_r_plus[v] = true;
        }
        let adj = g.adjacency();
        let mut depth = vec![0usize; n];
        let mut parent = vec![None; n];
        let mut tree_root = vec![usize::MAX; n];
        for root in 0..n {
            if in_r_plus[root] || tree_root[root] != usize::MAX {
                continue;
            }
            tree_root[root] = root;
            let mut stack = vec![root];
            while let Some(v) = stack.pop() {
                for &(w, _) in &adj[v] {
                    if in_r_plus[w] || tree_root[w] != usize::MAX {
                        continue;
                    }
                    tree_root[w] = root;
                    parent[w] = Some(v);
                    depth[w] = depth[v] + 1;
                    stack.push(w);
                }
            }
        }
        ForestView { in_r_plus, depth, parent, tree_root }
    }
}

/// One subpath occurrence: positions into a concrete weighted path.
#[derive(Debug, Clone, Copy)]
pub struct Subpath {
    pub path: usize,
    pub start: usize,
    pub end: usize,
}

/// The multiset of subpaths of all weighted paths, split at R+ visits.
#[derive(Debug)]
pub struct SubpathIndex {
    pub solution: FractionalSolution,
    pub r_plus: Vec<NodeId>,
    pub forest: ForestView,
    /// Per path, the positions of its R+ visits in order.
    pub visits: Vec<Vec<usize>>,
    pub subpaths: Vec<Subpath>,
}

fn r_visits(path: &PathSeq, in_r_plus: &[bool]) -> Vec<usize> {
    path.nodes
        .iter()
        .enumerate()
        .filter_map(|(i, &v)| if in_r_plus[v] { Some(i) } else { None })
        .collect()
}

/// Split every path at its R+ visits. A path visiting l R+ nodes yields
/// l - 1 subpaths; paths must start and end in R+ (terminals are in R+).
pub fn build_subpath_index(
    sol: &FractionalSolution,
    graph: &Graph,
    r_plus: &[NodeId],
) -> SubpathIndex {
    let forest = ForestView::build(graph, r_plus);
    let mut visits = Vec::with_capacity(sol.paths.len());
    let mut subpaths = Vec::new();
    for (pi, wp) in sol.paths.iter().enumerate() {
        let vs = r_visits(&wp.path, &forest.in_r_plus);
        assert!(
            vs.first() == Some(&0) && vs.last() == Some(&wp.path.edges.len()),
            "flow path must start and end in R+"
        );
        for w in vs.windows(2) {
            subpaths.push(Subpath { path: pi, start: w[0], end: w[1] });
        }
        visits.push(vs);
    }
    SubpathIndex { solution: sol.clone(), r_plus: r_plus.to_vec(), forest, visits, subpaths }
}

/// Canonical key of a subpath: its node sequence, direction-normalized.
fn canon_nodes(path: &PathSeq, sp: (usize, usize)) -> Vec<NodeId> {
    let seq: Vec<NodeId> = path.nodes[sp.0..=sp.1].to_vec();
    let mut rev = seq.clone();
    rev.reverse();
    if rev < seq {
        rev
    } else {
        seq
    }
}

#[derive(Debug, Clone)]
pub struct Reroute {
    pub pivot: Vec<NodeId>,
    pub donor_path: usize,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct HotSpotRecord {
    pub node: NodeId,
    /// Endpoints of the defining subpath, normalized u <= v.
    pub endpoints: (NodeId, NodeId),
}

/// Result of the aggregation phase: the modified solution plus everything
/// the congestion analysis and the tests need to audit it.
#[derive(Debug)]
pub struct HotSpotState {
    pub solution: FractionalSolution,
    pub r_plus: Vec<NodeId>,
    pub forest: ForestView,
    pub hot_spots: Vec<NodeId>,
    pub alg_hot: Vec<HotSpotRecord>,
    pub reroutes: Vec<Reroute>,
}

struct Agg {
    graph_nodes: usize,
    paths: Vec<WeightedPath>,
    // persistent id per live path, for donor ordering
    ids: Vec<usize>,
    next_id: usize,
    forest: ForestView,
    hot: Vec<bool>,
}

struct Candidate {
    canon: Vec<NodeId>,
    h_node: Option<NodeId>,
    h_depth: usize,
}

impl Agg {
    fn live_subpaths(&self) -> Vec<Subpath> {
        let mut out = Vec::new();
        for (pi, wp) in self.paths.iter().enumerate() {
            if wp.weight <= 0.0 {
                continue;
            }
            let vs = r_visits(&wp.path, &self.forest.in_r_plus);
            for w in vs.windows(2) {
                out.push(Subpath { path: pi, start: w[0], end: w[1] });
            }
        }
        out
    }

    fn is_hot(&self, sp: &Subpath) -> bool {
        let nodes = &self.paths[sp.path].path.nodes[sp.start..=sp.end];
        nodes.iter().any(|&v| self.hot[v])
    }

    /// Group the hot-free subpaths of one tree (or the edge subpaths, for
    /// `tree == None`) into identity classes.
    fn candidates(&self, tree: Option<NodeId>) -> Vec<Candidate> {
        let mut classes: Vec<Candidate> = Vec::new();
        for sp in self.live_subpaths() {
            if self.is_hot(&sp) {
                continue;
            }
            let p = &self.paths[sp.path].path;
            let interior = if sp.end - sp.start >= 2 { Some(p.nodes[sp.start + 1]) } else { None };
            let sp_tree = interior.map(|v| self.forest.tree_root[v]);
            if sp_tree != tree {
                continue;
            }
            let canon = canon_nodes(p, (sp.start, sp.end));
            if !classes.iter().any(|c| c.canon == canon) {
                let (h_node, h_depth) = match interior {
                    Some(_) => {
                        let top = p.nodes[sp.start + 1..sp.end]
                            .iter()
                            .copied()
                            .min_by_key(|&v| (self.forest.depth[v], v))
                            .unwrap();
                        (Some(top), self.forest.depth[top])
                    }
                    None => (None, 0),
                };
                classes.push(Candidate { canon, h_node, h_depth });
            }
        }
        classes
    }

    fn class_weight(&self, canon: &[NodeId]) -> f64 {
        self.live_subpaths()
            .iter()
            .filter(|sp| {
                canon_nodes(&self.paths[sp.path].path, (sp.start, sp.end)) == canon
            })
            .map(|sp| self.paths[sp.path].weight)
            .sum()
    }

    /// All hot-free subpaths with the given endpoints outside the class.
    fn donors(&self, canon: &[NodeId], u: NodeId, v: NodeId) -> Vec<Subpath> {
        let mut out: Vec<Subpath> = Vec::new();
        for sp in self.live_subpaths() {
            let p = &self.paths[sp.path].path;
            let (a, b) = (p.nodes[sp.start], p.nodes[sp.end]);
            if (a.min(b), a.max(b)) != (u, v) {
                continue;
            }
            if self.is_hot(&sp) || canon_nodes(p, (sp.start, sp.end)) == canon {
                continue;
            }
            out.push(sp);
        }
        out.sort_by_key(|sp| (self.ids[sp.path], sp.start));
        out
    }
}

/// Aggregate flow onto hot-spot corridors, tree by tree (smallest root
/// first, deepest highest-node first inside a tree), then cover the
/// remaining R+-to-R+ edge subpaths.
pub fn aggregate_flow(index: SubpathIndex, graph: &Graph) -> HotSpotState {
    Aggregator::new(index, graph).run()
}

struct Aggregator<'g> {
    graph: &'g Graph,
    adj: Vec<Vec<(NodeId, EdgeId)>>,
    agg: Agg,
    r_plus: Vec<NodeId>,
    marginals: Vec<f64>,
    objective: f64,
    alg_hot: Vec<HotSpotRecord>,
    reroutes: Vec<Reroute>,
}

impl<'g> Aggregator<'g> {
    fn new(index: SubpathIndex, graph: &'g Graph) -> Self {
        let n = index.solution.paths.len();
        Aggregator {
            graph,
            adj: graph.adjacency(),
            agg: Agg {
                graph_nodes: graph.node_count(),
                paths: index.solution.paths.clone(),
                ids: (0..n).collect(),
                next_id: n,
                forest: index.forest.clone(),
                hot: vec![false; graph.node_count()],
            },
            r_plus: index.r_plus.clone(),
            marginals: index.solution.marginals.clone(),
            objective: index.solution.objective,
            alg_hot: Vec::new(),
            reroutes: Vec::new(),
        }
    }

    fn corridor_edges(&self, corridor: &[NodeId]) -> Vec<EdgeId> {
        corridor
            .windows(2)
            .map(|w| {
                self.adj[w[0]]
                    .iter()
                    .filter(|&&(to, _)| to == w[1])
                    .map(|&(_, e)| e)
                    .min()
                    .expect("corridor step must be a live edge")
            })
            .collect()
    }

    fn aggregate_class(&mut self, canon: Vec<NodeId>, hot_node: NodeId) {
        let (a, b) = (canon[0], *canon.last().unwrap());
        let (u, v) = (a.min(b), a.max(b));
        loop {
            let weight = self.agg.class_weight(&canon);
            assert!(
                weight <= 1.0 + 1e-6,
                "identical subpath class exceeds unit weight: {weight}"
            );
            if weight >= 1.0 - 1e-9 {
                break;
            }
            let donors = self.agg.donors(&canon, u, v);
            let Some(donor) = donors.first().copied() else { break };
            let delta = self.agg.paths[donor.path].weight.min(1.0 - weight);
            let corridor_edges = {
                let a0 = self.agg.paths[donor.path].path.nodes[donor.start];
                let corridor: Vec<NodeId> = if canon[0] == a0 {
                    canon.clone()
                } else {
                    canon.iter().rev().copied().collect()
                };
                self.corridor_edges(&corridor)
            };
            self.apply_reroute(donor, &canon, corridor_edges, delta);
        }
        self.agg.hot[hot_node] = true;
        self.alg_hot.push(HotSpotRecord { node: hot_node, endpoints: (u, v) });
    }

    fn apply_reroute(&mut self, donor: Subpath, canon: &[NodeId], corridor_edges: Vec<EdgeId>, delta: f64) {
        let wp = &mut self.agg.paths[donor.path];
        let old_path = wp.path.clone();
        let pair = wp.pair;
        wp.weight -= delta;
        if wp.weight < 1e-12 {
            wp.weight = 0.0;
        }
        let a = old_path.nodes[donor.start];
        let corridor: Vec<NodeId> = if canon[0] == a {
            canon.to_vec()
        } else {
            canon.iter().rev().copied().collect()
        };
        let mut nodes = old_path.nodes[..donor.start].to_vec();
        nodes.extend_from_slice(&corridor);
        nodes.extend_from_slice(&old_path.nodes[donor.end + 1..]);
        let mut edges = old_path.edges[..donor.start].to_vec();
        edges.extend(corridor_edges);
        edges.extend_from_slice(&old_path.edges[donor.end..]);
        self.agg.paths.push(WeightedPath { pair, path: PathSeq { nodes, edges }, weight: delta });
        self.agg.ids.push(self.agg.next_id);
        self.agg.next_id += 1;
        self.reroutes.push(Reroute { pivot: canon.to_vec(), donor_path: donor.path, weight: delta });
    }

    fn run(mut self) -> HotSpotState {
        // trees in smallest-root order
        let mut roots: Vec<NodeId> = (0..self.agg.graph_nodes)
            .filter(|&v| !self.agg.forest.in_r_plus[v] && self.agg.forest.tree_root[v] == v)
            .collect();
        roots.sort_unstable();
        for root in roots {
            loop {
                let classes = self.agg.candidates(Some(root));
                let Some(best) = classes
                    .into_iter()
                    .max_by(|a, b| a.h_depth.cmp(&b.h_depth).then(b.canon.cmp(&a.canon)))
                else {
                    break;
                };
                let hot_node = best.h_node.expect("tree subpath has an interior");
                self.aggregate_class(best.canon, hot_node);
            }
        }
        // leftover R+-to-R+ edge subpaths get an endpoint as hot spot
        loop {
            let mut classes = self.agg.candidates(None);
            classes.sort_by(|a, b| a.canon.cmp(&b.canon));
            let Some(best) = classes.into_iter().next() else { break };
            let hot_node = *best.canon.iter().min().unwrap();
            self.aggregate_class(best.canon, hot_node);
        }
        let paths: Vec<WeightedPath> =
            self.agg.paths.into_iter().filter(|wp| wp.weight > 0.0).collect();
        let mut hot_spots: Vec<NodeId> =
            (0..self.agg.hot.len()).filter(|&v| self.agg.hot[v]).collect();
        hot_spots.sort_unstable();
        HotSpotState {
            solution: FractionalSolution {
                marginals: self.marginals,
                paths,
                objective: self.objective,
                congestion_limit: 2.0,
            },
            r_plus: self.r_plus,
            forest: self.agg.forest,
            hot_spots,
            alg_hot: self.alg_hot,
            reroutes: self.reroutes,
        }
    }
}

/// Analysis-side extension: degree >= 3 nodes of the subforest spanned by
/// hot-spot-connecting paths, then all of R+.
pub fn extend_hotspots_for_analysis(state: &HotSpotState, graph: &Graph) -> Vec<NodeId> {
    let forest = &state.forest;
    let n = graph.node_count();
    let mut hot = vec![false; n];
    for &h in &state.hot_spots {
        hot[h] = true;
    }
    // per tree: count hot spots under each node; an edge (v, parent) is in
    // F' iff both sides of it contain a hot spot of the same tree
    let mut order: Vec<NodeId> = (0..n)
        .filter(|&v| !forest.in_r_plus[v] && forest.tree_root[v] != usize::MAX)
        .collect();
    order.sort_by_key(|&v| std::cmp::Reverse(forest.depth[v]));
    let mut under = vec![0usize; n];
    let mut tree_total = vec![0usize; n];
    for &v in &order {
        if hot[v] {
            under[v] += 1;
            tree_total[forest.tree_root[v]] += 1;
        }
    }
    // order is deepest-first, so children are folded in before their parent
    for &v in &order {
        if let Some(p) = forest.parent[v] {
            let uv = under[v];
            under[p] += uv;
        }
    }
    let mut fprime_deg = vec![0usize; n];
    for v in 0..n {
        if forest.in_r_plus[v] || forest.tree_root[v] == usize::MAX {
            continue;
        }
        if let Some(p) = forest.parent[v] {
            let total = tree_total[forest.tree_root[v]];
            if under[v] >= 1 && total - under[v] >= 1 {
                fprime_deg[v] += 1;
                fprime_deg[p] += 1;
            }
        }
    }
    let mut extended: Vec<NodeId> = state.hot_spots.clone();
    extended.extend((0..n).filter(|&v| fprime_deg[v] >= 3));
    extended.extend(state.r_plus.iter().copied());
    extended.sort_unstable();
    extended.dedup();
    extended
}

/// Guarded desk-scale instantiation of the `log(kr)/loglog(kr)` congestion
/// bound: never below 2, with the inner log clamped to e so the double log
/// stays well-defined for tiny k*r.
pub fn congestion_bound(k: usize, r: usize, c_const: f64) -> usize {
    assert!(c_const > 0.0);
    let kappa = (k * r.max(1)).max(1) as f64;
    let ln_kappa = kappa.ln();
    let denom = ln_kappa.max(std::f64::consts::E).ln();
    let bound = (c_const * ln_kappa / denom).ceil() as usize;
    bound.max(2)
}

/// One rounding trial: the sampled (simplified) routing and its exact
/// congestion profile.
#[derive(Debug, Clone)]
pub struct Trial {
    pub routing: Routing,
    pub edge_loads: Vec<usize>,
    pub max_edge_congestion: usize,
}

/// Route each pair independently with probability x_i, choosing one of its
/// paths with probability proportional to its weight. Sampled paths are
/// loop-erased before the congestion profile is taken.
pub fn randomized_round(state: &HotSpotState, graph: &Graph, seed: u64) -> Trial {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let sol = &state.solution;
    let k = sol.marginals.len();
    let mut entries = Vec::new();
    for i in 0..k {
        let x = sol.marginals[i];
        if x <= 0.0 {
            continue;
        }
        if rng.random::<f64>() >= x {
            continue;
        }
        let paths: Vec<&WeightedPath> = sol.paths.iter().filter(|wp| wp.pair == i).collect();
        let total: f64 = paths.iter().map(|wp| wp.weight).sum();
        if total <= 0.0 {
            continue;
        }
        let mut pick = rng.random::<f64>() * total;
        let mut chosen = paths[paths.len() - 1];
        for wp in &paths {
            if pick < wp.weight {
                chosen = wp;
                break;
            }
            pick -= wp.weight;
        }
        entries.push((i, chosen.path.simplified()));
    }
    let mut edge_loads = vec![0usize; graph.edge_slots()];
    for (_, p) in &entries {
        for &e in &p.edges {
            edge_loads[e] += 1;
        }
    }
    let max_edge_congestion = edge_loads.iter().copied().max().unwrap_or(0);
    Trial { routing: Routing { entries }, edge_loads, max_edge_congestion }
}

/// Everything the retry driver learned, whether or not it succeeded.
#[derive(Debug)]
pub struct RoundReport {
    pub succeeded: bool,
    pub routing: Routing,
    pub max_edge_congestion: usize,
    pub trials_used: usize,
    pub congestion_cap: usize,
    pub target_routed: usize,
    pub lp_objective: f64,
    pub fvs_size: usize,
    pub fvs_nodes: Vec<NodeId>,
    pub hot_spot_count: usize,
    pub state: HotSpotState,
}

/// Full low-congestion pipeline: FVS, terminal augmentation, LP, path
/// decomposition, aggregation, then up to `max_trials` seeded rounding
/// attempts. A trial succeeds when it routes at least half the LP value
/// within twice the congestion bound; the first success (or the best
/// failing trial) is returned.
pub fn round_with_retries(
    inst: &Instance,
    max_trials: usize,
    c_const: f64,
    seed: u64,
) -> RoundReport {
    let fvs = choose_fvs(&inst.graph);
    let r_plus = augment_fvs_with_terminals(inst, &fvs.nodes);
    let flow = solve_lp(inst);
    let dec = decompose_paths(&flow).expect("LP solution decomposes");
    let index = build_subpath_index(&dec.solution, &inst.graph, &r_plus);
    let state = aggregate_flow(index, &inst.graph);
    let cap = 2 * congestion_bound(inst.pairs.len(), fvs.size(), c_const);
    let target = (flow.objective / 2.0 - 1e-9).ceil().max(0.0) as usize;
    let mut best: Option<Trial> = None;
    let mut best_key = (0usize, usize::MAX);
    let mut trials_used = 0;
    let mut success = None;
    for t in 0..max_trials.max(1) {
        trials_used = t + 1;
        let trial = randomized_round(&state, &inst.graph, seed.wrapping_add(t as u64));
        let routed = trial.routing.size();
        let key = (
            if trial.max_edge_congestion <= cap { routed + 1 } else { 0 },
            trial.max_edge_congestion,
        );
        if best.is_none() || key.0 > best_key.0 || (key.0 == best_key.0 && key.1 < best_key.1) {
            best_key = key;
            best = Some(trial.clone());
        }
        if routed >= target && trial.max_edge_congestion <= cap {
            success = Some(trial);
            break;
        }
    }
    let (succeeded, chosen) = match success {
        Some(t) => (true, t),
        None => (false, best.expect("at least one trial ran")),
    };
    RoundReport {
        succeeded,
        routing: chosen.routing,
        max_edge_congestion: chosen.max_edge_congestion,
        trials_used,
        congestion_cap: cap,
        target_routed: target,
        lp_objective: flow.objective,
        fvs_size: fvs.size(),
        fvs_nodes: fvs.nodes,
        hot_spot_count: state.hot_spots.len(),
        state,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::gen_random_fvs;
    use crate::graph::{verify_routing, Mode};
    use crate::lp::fractional_solution;

    fn hand_solution(paths: Vec<(usize, Vec<NodeId>, Vec<EdgeId>, f64)>, k: usize) -> FractionalSolution {
        let mut marginals = vec![0.0; k];
        let mut wps = Vec::new();
        for (pair, nodes, edges, weight) in paths {
            marginals[pair] += weight;
            wps.push(WeightedPath { pair, path: PathSeq { nodes, edges }, weight });
        }
        let objective = marginals.iter().sum();
        FractionalSolution { marginals, paths: wps, objective, congestion_limit: 1.0 }
    }

    /// Two pairs sharing a u..v corridor with different entry branches:
    /// aggregation must reroute the donor onto the picked corridor once.
    #[test]
    fn corridor_aggregation_reroutes_once() {
        // nodes: s1=0 s2=1 t1=2 t2=3 u=4 v=5 m=6 b=7
        let g = Graph::with_edges(
            8,
            &[(0, 4), (1, 4), (4, 6), (6, 5), (4, 7), (7, 6), (5, 2), (5, 3)],
        );
        let inst = Instance {
            graph: g.clone(),
            pairs: vec![(0, 2), (1, 3)],
            mode: Mode::EdgeDisjoint,
        };
        let sol = hand_solution(
            vec![
                (0, vec![0, 4, 6, 5, 2], vec![0, 2, 3, 6], 0.5),
                (1, vec![1, 4, 7, 6, 5, 3], vec![1, 4, 5, 3, 7], 0.5),
            ],
            2,
        );
        let r = vec![4usize, 5];
        let r_plus = augment_fvs_with_terminals(&inst, &r);
        assert!(g.is_forest_without(&r_plus));
        let index = build_subpath_index(&sol, &g, &r_plus);
        // pair 0 path visits s1,u,v,t1 -> 3 subpaths; pair 1 likewise
        assert_eq!(index.subpaths.len(), 6);
        let state = aggregate_flow(index, &g);
        assert_eq!(state.reroutes.len(), 1, "exactly one reroute");
        let rr = &state.reroutes[0];
        assert!((rr.weight - 0.5).abs() < 1e-9);
        assert_eq!(rr.pivot, vec![4, 6, 5]);
        // the picked corridor is saturated and its top is the hot spot
        let loads = state.solution.edge_loads(g.edge_slots());
        assert!((loads[2] - 1.0).abs() < 1e-9, "corridor edge (4,6): {loads:?}");
        assert!((loads[3] - 1.0).abs() < 1e-9, "corridor edge (6,5): {loads:?}");
        assert!(state.hot_spots.contains(&6));
        // marginals unchanged, exactly
        assert_eq!(state.solution.marginals, vec![0.5, 0.5]);
        // every subpath of the final solution contains a hot spot
        assert_subpath_coverage(&state, &g);
    }

    fn assert_subpath_coverage(state: &HotSpotState, g: &Graph) {
        let mut hot = vec![false; g.node_count()];
        for &h in &state.hot_spots {
            hot[h] = true;
        }
        for wp in &state.solution.paths {
            let vs = r_visits(&wp.path, &state.forest.in_r_plus);
            for w in vs.windows(2) {
                let covered = wp.path.nodes[w[0]..=w[1]].iter().any(|&v| hot[v]);
                assert!(covered, "uncovered subpath in {:?}", wp.path.nodes);
            }
        }
    }

    #[test]
    fn single_path_solution_is_untouched() {
        let g = Graph::with_edges(4, &[(0, 2), (2, 3), (3, 1)]);
        let inst =
            Instance { graph: g.clone(), pairs: vec![(0, 1)], mode: Mode::EdgeDisjoint };
        let sol = hand_solution(vec![(0, vec![0, 2, 3, 1], vec![0, 1, 2], 1.0)], 1);
        let r_plus = augment_fvs_with_terminals(&inst, &[]);
        let index = build_subpath_index(&sol, &g, &r_plus);
        let state = aggregate_flow(index, &g);
        assert!(state.reroutes.is_empty());
        assert_eq!(state.solution.paths.len(), 1);
        assert_eq!(state.hot_spots.len(), 1);
        assert_subpath_coverage(&state, &g);
    }

    #[test]
    fn aggregation_invariants_on_random_suite() {
        for seed in 0..25u64 {
            let inst = gen_random_fvs(14, 3, 8, 5, seed, Mode::EdgeDisjoint);
            let sol = fractional_solution(&inst).unwrap();
            let fvs = choose_fvs(&inst.graph);
            let r_plus = augment_fvs_with_terminals(&inst, &fvs.nodes);
            assert!(inst.graph.is_forest_without(&r_plus), "R+ stays an FVS");
            let index = build_subpath_index(&sol, &inst.graph, &r_plus);
            // subpath count identity: sum over paths of (visits - 1)
            let total: usize = index.visits.iter().map(|v| v.len() - 1).sum();
            assert_eq!(index.subpaths.len(), total);
            let state = aggregate_flow(index, &inst.graph);
            // Lemma 1 form: fractional congestion at most 2
            for load in state.solution.edge_loads(inst.graph.edge_slots()) {
                assert!(load <= 2.0 + 1e-6, "seed {seed}: load {load}");
            }
            assert_subpath_coverage(&state, &inst.graph);
            // marginals preserved exactly (they are never recomputed)
            assert_eq!(state.solution.marginals, sol.marginals);
            // per-pair path weights still sum to the marginal
            for i in 0..inst.pairs.len() {
                let sum: f64 = state
                    .solution
                    .paths
                    .iter()
                    .filter(|wp| wp.pair == i)
                    .map(|wp| wp.weight)
                    .sum();
                assert!((sum - sol.marginals[i]).abs() < 1e-6, "seed {seed} pair {i}");
            }
            // hot spots added per unordered endpoint pair: at most k + 1
            let mut counts = std::collections::HashMap::new();
            for rec in &state.alg_hot {
                *counts.entry(rec.endpoints).or_insert(0usize) += 1;
            }
            for (&ends, &c) in &counts {
                assert!(c <= inst.pairs.len() + 1, "seed {seed} pair {ends:?}: {c}");
            }
            // extension bound: |H_ext| <= 2 |H_alg| + |R+|
            let ext = extend_hotspots_for_analysis(&state, &inst.graph);
            assert!(ext.len() <= 2 * state.alg_hot.len() + r_plus.len(), "seed {seed}");
        }
    }

    #[test]
    fn congestion_bound_values() {
        assert_eq!(congestion_bound(1, 1, 2.0), 2);
        // 2 ln(1000) / ln(ln(1000)) = 7.148..., ceiling 8
        assert_eq!(congestion_bound(100, 10, 2.0), 8);
        // monotone in k and r
        let mut prev = 0;
        for k in [1usize, 2, 4, 8, 16, 64, 256] {
            let b = congestion_bound(k, 3, 2.0);
            assert!(b >= prev);
            prev = b;
        }
    }

    #[test]
    fn deterministic_rounding_distribution() {
        let g = Graph::with_edges(4, &[(0, 2), (2, 3), (3, 1)]);
        let inst =
            Instance { graph: g.clone(), pairs: vec![(0, 1)], mode: Mode::EdgeDisjoint };
        let sol = hand_solution(vec![(0, vec![0, 2, 3, 1], vec![0, 1, 2], 1.0)], 1);
        let r_plus = augment_fvs_with_terminals(&inst, &[]);
        let state = aggregate_flow(build_subpath_index(&sol, &g, &r_plus), &g);
        // x = 1: always routed
        for seed in 0..20 {
            let t = randomized_round(&state, &g, seed);
            assert_eq!(t.routing.size(), 1);
        }
        // x = 0: never routed
        let mut zero = hand_solution(vec![(0, vec![0, 2, 3, 1], vec![0, 1, 2], 1.0)], 1);
        zero.marginals[0] = 0.0;
        zero.paths.clear();
        let state0 = aggregate_flow(build_subpath_index(&zero, &g, &r_plus), &g);
        for seed in 0..20 {
            assert_eq!(randomized_round(&state0, &g, seed).routing.size(), 0);
        }
    }

    #[test]
    fn empirical_frequency_tracks_marginal() {
        let inst = gen_random_fvs(12, 2, 6, 4, 42, Mode::EdgeDisjoint);
        let sol = fractional_solution(&inst).unwrap();
        let fvs = choose_fvs(&inst.graph);
        let r_plus = augment_fvs_with_terminals(&inst, &fvs.nodes);
        let state = aggregate_flow(build_subpath_index(&sol, &inst.graph, &r_plus), &inst.graph);
        let trials = 4000;
        let mut counts = vec![0usize; inst.pairs.len()];
        for s in 0..trials {
            for (i, _) in randomized_round(&state, &inst.graph, s).routing.entries {
                counts[i] += 1;
            }
        }
        for i in 0..inst.pairs.len() {
            let freq = counts[i] as f64 / trials as f64;
            assert!(
                (freq - sol.marginals[i]).abs() < 0.03,
                "pair {i}: freq {freq} vs x {}",
                sol.marginals[i]
            );
        }
    }

    #[test]
    fn retries_succeed_on_disjoint_forest() {
        let g = Graph::with_edges(6, &[(0, 1), (1, 2), (3, 4), (4, 5)]);
        let raw = Instance { graph: g, pairs: vec![(0, 2), (3, 5)], mode: Mode::EdgeDisjoint };
        let inst = crate::graph::normalize_instance(&raw).unwrap().instance;
        let rep = round_with_retries(&inst, 5, 2.0, 7);
        assert!(rep.succeeded);
        assert_eq!(rep.trials_used, 1);
        assert_eq!(rep.routing.size(), 2);
        assert_eq!(rep.max_edge_congestion, 1);
        assert!(verify_routing(&inst, &rep.routing, rep.max_edge_congestion).feasible);
    }

    #[test]
    fn retries_on_random_bounded_fvs_suite() {
        let mut successes = 0;
        for seed in 0..20u64 {
            let inst = gen_random_fvs(16, 3, 9, 5, 1000 + seed, Mode::EdgeDisjoint);
            let rep = round_with_retries(&inst, 20, 2.0, seed);
            if rep.succeeded {
                successes += 1;
                assert!(rep.routing.size() >= rep.target_routed);
                assert!(rep.max_edge_congestion <= rep.congestion_cap);
            }
            let rep2 = round_with_retries(&inst, 20, 2.0, seed);
            assert_eq!(rep2.routing.size(), rep.routing.size(), "seed-deterministic");
        }
        assert!(successes >= 18, "only {successes}/20 succeeded");
    }
}
