//! Feedback vertex set solvers: an exact branch-and-reduce search and a
//! local-ratio 2-approximation.

use std::collections::VecDeque;

use crate::graph::{Graph, NodeId};

#[derive(Debug, Clone)]
pub struct FeedbackVertexSet {
    pub nodes: Vec<NodeId>,
    pub is_exact: bool,
}

impl FeedbackVertexSet {
    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    pub fn validates(&self, g: &Graph) -> bool {
        g.is_forest_without(&self.nodes)
    }
}

/// Working multigraph for the solvers: adjacency as edge multiset between
/// node pairs, nodes deletable in O(deg).
#[derive(Clone)]
struct Work {
    // adj[v] = list of (neighbor, multiplicity); loops stored as (v, count)
    adj: Vec<Vec<(usize, usize)>>,
    alive: Vec<bool>,
}

impl Work {
    fn from_graph(g: &Graph) -> Self {
        let mut w = Work { adj: vec![Vec::new(); g.node_count()], alive: vec![true; g.node_count()] };
        for e in g.live_edges() {
            let (u, v) = g.raw_endpoints(e);
            w.add(u, v);
        }
        w
    }

    fn add(&mut self, u: usize, v: usize) {
        if u == v {
            match self.adj[u].iter_mut().find(|(w, _)| *w == u) {
                Some((_, c)) => *c += 1,
                None => self.adj[u].push((u, 1)),
            }
            return;
        }
        for (a, b) in [(u, v), (v, u)] {
            match self.adj[a].iter_mut().find(|(w, _)| *w == b) {
                Some((_, c)) => *c += 1,
                None => self.adj[a].push((b, 1)),
            }
        }
    }

    fn delete(&mut self, v: usize) {
        self.alive[v] = false;
        let nbrs = std::mem::take(&mut self.adj[v]);
        for (u, _) in nbrs {
            if u != v {
                self.adj[u].retain(|&(w, _)| w != v);
            }
        }
    }

    fn degree(&self, v: usize) -> usize {
        self.adj[v].iter().map(|&(u, c)| if u == v { 2 * c } else { c }).sum()
    }

    fn has_loop(&self, v: usize) -> bool {
        self.adj[v].iter().any(|&(u, _)| u == v)
    }

    fn live_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.alive.len()).filter(move |&v| self.alive[v])
    }

    /// Shortest cycle through live edges, as a node list. Parallel edges
    /// give 2-cycles, loops 1-cycles.
    fn shortest_cycle(&self) -> Option<Vec<usize>> {
        for v in self.live_nodes() {
            if self.has_loop(v) {
                return Some(vec![v]);
            }
        }
        for v in self.live_nodes() {
            if let Some((u, _)) = self.adj[v].iter().find(|&&(u, c)| u != v && c >= 2) {
                return Some(vec![v.min(*u), v.max(*u)]);
            }
        }
        let n = self.alive.len();
        let mut best: Option<Vec<usize>> = None;
        for src in self.live_nodes() {
            // BFS from src; a non-tree edge closing back through src gives a
            // cycle; taking the minimum over sources finds a shortest cycle.
            let mut dist = vec![usize::MAX; n];
            let mut par = vec![usize::MAX; n];
            dist[src] = 0;
            let mut q = VecDeque::from([src]);
            while let Some(x) = q.pop_front() {
                for &(y, _) in &self.adj[x] {
                    if y == x {
                        continue;
                    }
                    if dist[y] == usize::MAX {
                        dist[y] = dist[x] + 1;
                        par[y] = x;
                        q.push_back(y);
                    } else if par[x] != y && par[y] != x {
                        // cycle through src only if both arms reach it
                        let mut pa = Vec::new();
                        let mut a = x;
                        while a != usize::MAX {
                            pa.push(a);
                            a = par[a];
                        }
                        let mut pb = Vec::new();
                        let mut b = y;
                        while b != usize::MAX {
                            pb.push(b);
                            b = par[b];
                        }
                        // meeting point of the two root paths
                        let meet = pa.iter().find(|v| pb.contains(v)).copied();
                        if let Some(m) = meet {
                            let mut cyc: Vec<usize> =
                                pa.iter().take_while(|&&v| v != m).copied().collect();
                            cyc.push(m);
                            let tail: Vec<usize> =
                                pb.iter().take_while(|&&v| v != m).copied().collect();
                            cyc.extend(tail.into_iter().rev());
                            let cand = cyc;
                            if best.as_ref().is_none_or(|b| cand.len() < b.len()) {
                                best = Some(cand);
                            }
                        }
                    }
                }
            }
        }
        best.map(|mut c| {
            // rotate to smallest id for reproducibility
            let min_pos = c
                .iter()
                .enumerate()
                .min_by_key(|(_, &v)| v)
                .map(|(i, _)| i)
                .unwrap_or(0);
            c.rotate_left(min_pos);
            c
        })
    }
}

/// Exhaustive reductions: forced loop nodes go into `sol`; degree <= 1 nodes
/// are deleted; degree-2 nodes are bypassed.
fn reduce(w: &mut Work, sol: &mut Vec<usize>) {
    loop {
        let mut changed = false;
        for v in 0..w.alive.len() {
            if !w.alive[v] {
                continue;
            }
            if w.has_loop(v) {
                w.delete(v);
                sol.push(v);
                changed = true;
                continue;
            }
            let d = w.degree(v);
            if d <= 1 {
                w.delete(v);
                changed = true;
            } else if d == 2 {
                let ends: Vec<usize> = w.adj[v]
                    .iter()
                    .flat_map(|&(u, c)| std::iter::repeat_n(u, c))
                    .collect();
                let (a, b) = (ends[0], ends[1]);
                w.delete(v);
                w.add(a, b);
                changed = true;
            }
        }
        if !changed {
            return;
        }
    }
}

fn has_cycle(w: &Work) -> bool {
    let n = w.alive.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for v in w.live_nodes() {
        for &(u, c) in &w.adj[v] {
            if u == v {
                return true;
            }
            if u < v {
                continue; // each pair once
            }
            if c >= 2 {
                return true;
            }
            let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
            if ru == rv {
                return true;
            }
            parent[ru] = rv;
        }
    }
    false
}

fn branch(w: &Work, partial: Vec<usize>, best: &mut Option<Vec<usize>>) {
    let mut w = w.clone();
    let mut partial = partial;
    reduce(&mut w, &mut partial);
    if let Some(b) = best {
        if partial.len() >= b.len() {
            return;
        }
    }
    let Some(cycle) = w.shortest_cycle() else {
        debug_assert!(!has_cycle(&w));
        partial.sort_unstable();
        *best = Some(partial);
        return;
    };
    for v in cycle {
        let mut w2 = w.clone();
        w2.delete(v);
        let mut p2 = partial.clone();
        p2.push(v);
        branch(&w2, p2, best);
    }
}

pub enum FvsExact {
    Found(FeedbackVertexSet),
    ExceedsBudget,
}

/// Minimum feedback vertex set if its size is within `budget`, found by
/// branch-and-reduce on shortest cycles.
pub fn fvs_exact(g: &Graph, budget: usize) -> FvsExact {
    let w = Work::from_graph(g);
    let mut best: Option<Vec<usize>> = None;
    branch(&w, Vec::new(), &mut best);
    let sol = best.expect("branch always terminates with a solution");
    if sol.len() > budget {
        FvsExact::ExceedsBudget
    } else {
        FvsExact::Found(FeedbackVertexSet { nodes: sol, is_exact: true })
    }
}

/// Local-ratio 2-approximation (Bafna–Berman–Fujito style): weights drop by
/// either a semidisjoint-cycle round or a degree-proportional round; zeroed
/// nodes enter the cover, then a reverse scan removes redundant ones.
pub fn fvs_approx2(g: &Graph) -> FeedbackVertexSet {
    let mut w = Work::from_graph(g);
    let mut weight = vec![1.0f64; g.node_count()];
    let mut stack: Vec<usize> = Vec::new();
    let mut forced: Vec<usize> = Vec::new();
    loop {
        // cleanup: forced loops and low degrees
        loop {
            let mut changed = false;
            for v in 0..w.alive.len() {
                if !w.alive[v] {
                    continue;
                }
                if w.has_loop(v) {
                    w.delete(v);
                    forced.push(v);
                    changed = true;
                } else if w.degree(v) <= 1 {
                    w.delete(v);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        if !has_cycle(&w) {
            break;
        }
        // semidisjoint cycle: all nodes of degree 2 except at most one
        let semi = find_semidisjoint_cycle(&w);
        if let Some(cyc) = semi {
            let eps = cyc.iter().map(|&v| weight[v]).fold(f64::INFINITY, f64::min);
            for &v in &cyc {
                weight[v] -= eps;
            }
        } else {
            let eps = w
                .live_nodes()
                .filter(|&v| w.degree(v) >= 2)
                .map(|v| weight[v] / (w.degree(v) as f64 - 1.0))
                .fold(f64::INFINITY, f64::min);
            let nodes: Vec<usize> = w.live_nodes().collect();
            for v in nodes {
                let d = w.degree(v);
                if d >= 2 {
                    weight[v] -= eps * (d as f64 - 1.0);
                }
            }
        }
        let zeroed: Vec<usize> =
            w.live_nodes().filter(|&v| weight[v] <= 1e-12).collect();
        for v in zeroed {
            w.delete(v);
            stack.push(v);
        }
    }
    // reverse-delete: drop nodes whose removal from the cover keeps it valid
    let mut in_cover = vec![false; g.node_count()];
    for &v in forced.iter().chain(stack.iter()) {
        in_cover[v] = true;
    }
    for &v in stack.iter().rev() {
        in_cover[v] = false;
        let removed: Vec<usize> =
            (0..g.node_count()).filter(|&x| in_cover[x]).collect();
        if !g.is_forest_without(&removed) {
            in_cover[v] = true;
        }
    }
    let mut nodes: Vec<usize> = (0..g.node_count()).filter(|&x| in_cover[x]).collect();
    nodes.sort_unstable();
    FeedbackVertexSet { nodes, is_exact: false }
}

/// A cycle whose nodes all have degree 2 except at most one.
fn find_semidisjoint_cycle(w: &Work) -> Option<Vec<usize>> {
    for start in w.live_nodes() {
        if w.degree(start) != 2 {
            continue;
        }
        // walk both directions until hitting a non-degree-2 node
        let mut cyc = vec![start];
        let mut prev = start;
        let ends: Vec<usize> = w.adj[start]
            .iter()
            .flat_map(|&(u, c)| std::iter::repeat_n(u, c))
            .collect();
        let mut cur = ends[0];
        loop {
            if cur == start {
                return Some(cyc); // pure cycle of degree-2 nodes
            }
            cyc.push(cur);
            if w.degree(cur) != 2 {
                // walk the other way from start to see if it closes at cur
                let mut prev2 = start;
                let mut cur2 = ends[1];
                let mut arm = Vec::new();
                loop {
                    if cur2 == cur {
                        // cycle: start..cur plus arm reversed
                        cyc.extend(arm.iter().rev());
                        return Some(cyc);
                    }
                    if w.degree(cur2) != 2 {
                        break;
                    }
                    arm.push(cur2);
                    let nbrs: Vec<usize> = w.adj[cur2]
                        .iter()
                        .flat_map(|&(u, c)| std::iter::repeat_n(u, c))
                        .collect();
                    let nxt = if nbrs[0] == prev2 { nbrs[1] } else { nbrs[0] };
                    prev2 = cur2;
                    cur2 = nxt;
                }
                break;
            }
            let nbrs: Vec<usize> = w.adj[cur]
                .iter()
                .flat_map(|&(u, c)| std::iter::repeat_n(u, c))
                .collect();
            let nxt = if nbrs[0] == prev { nbrs[1] } else { nbrs[0] };
            prev = cur;
            cur = nxt;
            if cyc.len() > w.alive.len() + 1 {
                break;
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::random_graph_for_tests;

    fn cycle_graph(n: usize) -> Graph {
        let edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Graph::with_edges(n, &edges)
    }

    fn complete(n: usize) -> Graph {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                edges.push((u, v));
            }
        }
        Graph::with_edges(n, &edges)
    }

    /// Brute-force minimum FVS size by subset enumeration.
    fn brute_min_fvs(g: &Graph) -> usize {
        let n = g.node_count();
        assert!(n <= 20);
        (0u32..1 << n)
            .filter(|&mask| {
                let removed: Vec<usize> = (0..n).filter(|&v| mask >> v & 1 == 1).collect();
                g.is_forest_without(&removed)
            })
            .map(|mask| mask.count_ones() as usize)
            .min()
            .unwrap()
    }

    #[test]
    fn forest_needs_nothing() {
        let g = Graph::with_edges(5, &[(0, 1), (1, 2), (3, 4)]);
        match fvs_exact(&g, 0) {
            FvsExact::Found(f) => assert!(f.nodes.is_empty()),
            _ => panic!("forest should fit budget 0"),
        }
        assert!(fvs_approx2(&g).nodes.is_empty());
    }

    #[test]
    fn single_cycle_needs_one() {
        let g = cycle_graph(5);
        match fvs_exact(&g, 1) {
            FvsExact::Found(f) => {
                assert_eq!(f.size(), 1);
                assert!(f.validates(&g));
            }
            _ => panic!("C5 has FVS of size 1"),
        }
        let a = fvs_approx2(&g);
        assert!(a.validates(&g));
        assert!(a.size() <= 2);
    }

    #[test]
    fn k4_needs_two() {
        let g = complete(4);
        // no single node of K4 breaks all cycles
        for v in 0..4 {
            assert!(!g.is_forest_without(&[v]));
        }
        match fvs_exact(&g, 4) {
            FvsExact::Found(f) => {
                assert_eq!(f.size(), 2);
                assert!(f.validates(&g));
            }
            _ => panic!(),
        }
    }

    #[test]
    fn budget_is_respected() {
        let g = complete(5);
        assert!(matches!(fvs_exact(&g, 1), FvsExact::ExceedsBudget));
    }

    #[test]
    fn exact_matches_brute_force_on_random_graphs() {
        for seed in 0..30u64 {
            let g = random_graph_for_tests(4 + (seed as usize % 9), 0.35, seed);
            let want = brute_min_fvs(&g);
            match fvs_exact(&g, g.node_count()) {
                FvsExact::Found(f) => {
                    assert!(f.validates(&g), "seed {seed}");
                    assert_eq!(f.size(), want, "seed {seed}");
                }
                _ => panic!(),
            }
        }
    }

    #[test]
    fn approx_within_factor_two_of_exact() {
        for seed in 100..150u64 {
            let g = random_graph_for_tests(5 + (seed as usize % 10), 0.3, seed);
            let a = fvs_approx2(&g);
            assert!(a.validates(&g), "seed {seed}");
            match fvs_exact(&g, g.node_count()) {
                FvsExact::Found(f) => {
                    assert!(
                        a.size() <= 2 * f.size().max(0),
                        "seed {seed}: approx {} vs exact {}",
                        a.size(),
                        f.size()
                    );
                }
                _ => panic!(),
            }
        }
    }

    #[test]
    fn exact_is_deterministic() {
        let g = random_graph_for_tests(10, 0.4, 7);
        let a = match fvs_exact(&g, 10) {
            FvsExact::Found(f) => f.nodes,
            _ => panic!(),
        };
        let b = match fvs_exact(&g, 10) {
            FvsExact::Found(f) => f.nodes,
            _ => panic!(),
        };
        assert_eq!(a, b);
    }
}
