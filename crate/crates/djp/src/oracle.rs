//! Exhaustive solvers for small instances. These are the ground truth the
//! other solvers are tested against, so they stay simple: subset search over
//! pairs, backtracking path assignment, and a couple of safe prunes.

use thiserror::Error;

use crate::graph::{Instance, Mode, NodeId, PathSeq, Routing};

#[derive(Debug, Clone, Copy)]
pub struct Guard {
    pub max_nodes: usize,
    pub max_pairs: usize,
}

impl Default for Guard {
    fn default() -> Self {
        Guard { max_nodes: 14, max_pairs: 6 }
    }
}

impl Guard {
    pub const UNLIMITED: Guard = Guard { max_nodes: usize::MAX, max_pairs: usize::MAX };
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("instance exceeds oracle guard: {nodes} nodes, {pairs} pairs (max {max_nodes}/{max_pairs})")]
pub struct GuardExceeded {
    pub nodes: usize,
    pub pairs: usize,
    pub max_nodes: usize,
    pub max_pairs: usize,
}

fn check_guard(inst: &Instance, guard: Guard) -> Result<(), GuardExceeded> {
    let nodes = inst.graph.node_count();
    let pairs = inst.pairs.len();
    if nodes > guard.max_nodes || pairs > guard.max_pairs {
        return Err(GuardExceeded {
            nodes,
            pairs,
            max_nodes: guard.max_nodes,
            max_pairs: guard.max_pairs,
        });
    }
    Ok(())
}

struct Search<'a> {
    inst: &'a Instance,
    adj: Vec<Vec<(NodeId, usize)>>,
    edge_used: Vec<bool>,
    node_used: Vec<bool>,
    routed: Vec<(usize, PathSeq)>,
}

impl<'a> Search<'a> {
    fn new(inst: &'a Instance) -> Self {
        Search {
            inst,
            adj: inst.graph.adjacency(),
            edge_used: vec![false; inst.graph.edge_slots()],
            node_used: vec![false; inst.graph.node_count()],
            routed: Vec::new(),
        }
    }

    fn free_degree(&self, v: NodeId) -> usize {
        self.adj[v].iter().filter(|&&(_, e)| !self.edge_used[e]).count()
    }

    /// Edge-mode counting prune: each unrouted pair forces two edge slots at
    /// the neighbor of each leaf terminal (or two at a shared neighbor).
    fn demand_prune(&self, remaining: &[usize]) -> bool {
        let g = &self.inst.graph;
        let mut demand = vec![0usize; g.node_count()];
        for &p in remaining {
            let (s, t) = self.inst.pairs[p];
            let mut forced: Vec<(NodeId, usize)> = vec![(s, 1), (t, 1)];
            let leaf_nbr = |v: NodeId| -> Option<NodeId> {
                if self.adj[v].len() == 1 {
                    Some(self.adj[v][0].0)
                } else {
                    None
                }
            };
            match (leaf_nbr(s), leaf_nbr(t)) {
                (Some(os), Some(ot)) if os == ot => forced.push((os, 2)),
                (os, ot) => {
                    if let Some(o) = os {
                        if o != t {
                            forced.push((o, 2));
                        }
                    }
                    if let Some(o) = ot {
                        if o != s {
                            forced.push((o, 2));
                        }
                    }
                }
            }
            for (v, d) in forced {
                demand[v] += d;
            }
        }
        (0..g.node_count()).any(|v| demand[v] > self.free_degree(v))
    }

    /// Every remaining pair must still be connected in the residual graph.
    fn reachability_prune(&self, remaining: &[usize]) -> bool {
        let g = &self.inst.graph;
        for &p in remaining {
            let (s, t) = self.inst.pairs[p];
            if self.inst.mode == Mode::NodeDisjoint && (self.node_used[s] || self.node_used[t]) {
                return true;
            }
            let mut seen = vec![false; g.node_count()];
            let mut stack = vec![s];
            seen[s] = true;
            let mut found = false;
            while let Some(v) = stack.pop() {
                if v == t {
                    found = true;
                    break;
                }
                for &(w, e) in &self.adj[v] {
                    if self.edge_used[e] || seen[w] {
                        continue;
                    }
                    if self.inst.mode == Mode::NodeDisjoint && self.node_used[w] && w != t {
                        continue;
                    }
                    seen[w] = true;
                    stack.push(w);
                }
            }
            if !found {
                return true;
            }
        }
        false
    }

    /// Most-constrained pair first: smallest residual degree at its
    /// endpoints' attachment nodes.
    fn pick_pair(&self, remaining: &[usize]) -> usize {
        let anchor = |v: NodeId| -> usize {
            if self.adj[v].len() == 1 {
                self.free_degree(self.adj[v][0].0)
            } else {
                self.free_degree(v)
            }
        };
        *remaining
            .iter()
            .min_by_key(|&&p| {
                let (s, t) = self.inst.pairs[p];
                (anchor(s).min(anchor(t)), p)
            })
            .unwrap()
    }

    fn solve(&mut self, remaining: &mut Vec<usize>) -> bool {
        if remaining.is_empty() {
            return true;
        }
        if self.inst.mode == Mode::EdgeDisjoint && self.demand_prune(remaining) {
            return false;
        }
        if self.reachability_prune(remaining) {
            return false;
        }
        let pair = self.pick_pair(remaining);
        let pos = remaining.iter().position(|&p| p == pair).unwrap();
        remaining.swap_remove(pos);
        let (s, t) = self.inst.pairs[pair];
        let mut path = PathSeq::single(s);
        let node_mode = self.inst.mode == Mode::NodeDisjoint;
        if node_mode {
            self.node_used[s] = true;
        }
        let ok = self.extend(pair, t, &mut path, remaining);
        if node_mode {
            self.node_used[s] = false;
        }
        if !ok {
            remaining.push(pair);
        }
        ok
    }

    fn extend(
        &mut self,
        pair: usize,
        target: NodeId,
        path: &mut PathSeq,
        remaining: &mut Vec<usize>,
    ) -> bool {
        let v = path.last();
        if v == target {
            self.routed.push((pair, path.clone()));
            if self.solve(remaining) {
                return true;
            }
            self.routed.pop();
            return false;
        }
        let node_mode = self.inst.mode == Mode::NodeDisjoint;
        let candidates: Vec<(NodeId, usize)> = self.adj[v]
            .iter()
            .copied()
            .filter(|&(w, e)| {
                !self.edge_used[e]
                    && !path.nodes.contains(&w)
                    && !(node_mode && self.node_used[w])
            })
            .collect();
        for (w, e) in candidates {
            self.edge_used[e] = true;
            if node_mode {
                self.node_used[w] = true;
            }
            path.nodes.push(w);
            path.edges.push(e);
            if self.extend(pair, target, path, remaining) {
                return true;
            }
            path.nodes.pop();
            path.edges.pop();
            self.edge_used[e] = false;
            if node_mode {
                self.node_used[w] = false;
            }
        }
        false
    }
}

fn route_subset(inst: &Instance, subset: &[usize]) -> Option<Routing> {
    for &p in subset {
        let (s, t) = inst.pairs[p];
        if s == t {
            return None;
        }
    }
    let mut search = Search::new(inst);
    let mut remaining: Vec<usize> = subset.to_vec();
    if search.solve(&mut remaining) {
        let mut entries = search.routed;
        entries.sort_by_key(|(p, _)| *p);
        Some(Routing { entries })
    } else {
        None
    }
}

/// Optimal routing size by exhaustive search, largest pair subsets first.
pub fn exact_opt(inst: &Instance, guard: Guard) -> Result<(usize, Routing), GuardExceeded> {
    check_guard(inst, guard)?;
    let k = inst.pairs.len();
    for size in (1..=k).rev() {
        let mut subset: Vec<usize> = Vec::with_capacity(size);
        if let Some(r) = combos(k, size, &mut subset, &|s| route_subset(inst, s)) {
            return Ok((size, r));
        }
    }
    Ok((0, Routing::default()))
}

/// Feasibility of routing exactly the given pairs.
pub fn exact_opt_fixed_subset(
    inst: &Instance,
    subset: &[usize],
    guard: Guard,
) -> Result<Option<Routing>, GuardExceeded> {
    check_guard(inst, guard)?;
    Ok(route_subset(inst, subset))
}

fn combos<T>(
    k: usize,
    size: usize,
    prefix: &mut Vec<usize>,
    f: &impl Fn(&[usize]) -> Option<T>,
) -> Option<T> {
    if prefix.len() == size {
        return f(prefix);
    }
    let start = prefix.last().map_or(0, |&p| p + 1);
    let slack = k - (size - prefix.len());
    for next in start..=slack {
        prefix.push(next);
        if let Some(r) = combos(k, size, prefix, f) {
            return Some(r);
        }
        prefix.pop();
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{normalize_instance, verify_routing, Graph};

    #[test]
    fn forest_routes_everything() {
        let g = Graph::with_edges(6, &[(0, 1), (1, 2), (3, 4), (4, 5)]);
        let inst = Instance { graph: g, pairs: vec![(0, 2), (3, 5)], mode: Mode::EdgeDisjoint };
        let (v, r) = exact_opt(&inst, Guard::default()).unwrap();
        assert_eq!(v, 2);
        assert!(verify_routing(&inst, &r, 1).feasible);
    }

    #[test]
    fn crossing_pairs_on_c4() {
        let g = Graph::with_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        for mode in [Mode::EdgeDisjoint, Mode::NodeDisjoint] {
            let inst = Instance { graph: g.clone(), pairs: vec![(0, 2), (1, 3)], mode };
            let (v, _) = exact_opt(&inst, Guard::default()).unwrap();
            assert_eq!(v, 1);
        }
    }

    #[test]
    fn fixed_subset_empty_and_single() {
        let g = Graph::with_edges(3, &[(0, 1), (1, 2)]);
        let inst = Instance { graph: g, pairs: vec![(0, 2)], mode: Mode::EdgeDisjoint };
        assert!(exact_opt_fixed_subset(&inst, &[], Guard::default()).unwrap().is_some());
        let r = exact_opt_fixed_subset(&inst, &[0], Guard::default()).unwrap().unwrap();
        assert!(verify_routing(&inst, &r, 1).feasible);
    }

    #[test]
    fn guard_refuses_large_instances() {
        let g = Graph::new(40);
        let inst = Instance { graph: g, pairs: vec![], mode: Mode::EdgeDisjoint };
        assert!(exact_opt(&inst, Guard::default()).is_err());
        assert!(exact_opt(&inst, Guard::UNLIMITED).is_ok());
    }

    #[test]
    fn value_invariant_under_relabeling() {
        use crate::gen::random_instance_for_tests;
        for seed in 0..10u64 {
            let inst = random_instance_for_tests(8, 0.3, 3, Mode::EdgeDisjoint, seed);
            let (v, _) = exact_opt(&inst, Guard::default()).unwrap();
            // relabel: v -> (v + 3) mod n
            let n = inst.graph.node_count();
            let perm = |x: usize| (x + 3) % n;
            let edges: Vec<(usize, usize)> = inst
                .graph
                .live_edges()
                .map(|e| {
                    let (a, b) = inst.graph.raw_endpoints(e);
                    (perm(a), perm(b))
                })
                .collect();
            let relabeled = Instance {
                graph: Graph::with_edges(n, &edges),
                pairs: inst.pairs.iter().map(|&(s, t)| (perm(s), perm(t))).collect(),
                mode: inst.mode,
            };
            let (v2, _) = exact_opt(&relabeled, Guard::default()).unwrap();
            assert_eq!(v, v2, "seed {seed}");
        }
    }

    #[test]
    fn normalization_preserves_optimum() {
        use crate::gen::random_instance_for_tests;
        for seed in 0..20u64 {
            for mode in [Mode::EdgeDisjoint, Mode::NodeDisjoint] {
                let inst = random_instance_for_tests(7, 0.35, 3, mode, seed);
                let (v, _) = exact_opt(&inst, Guard::default()).unwrap();
                let norm = normalize_instance(&inst).unwrap();
                let (vn, rn) =
                    exact_opt(&norm.instance, Guard { max_nodes: 30, max_pairs: 6 }).unwrap();
                assert_eq!(v, vn, "seed {seed} mode {mode}");
                assert!(verify_routing(&norm.instance, &rn, 1).feasible);
            }
        }
    }
}
