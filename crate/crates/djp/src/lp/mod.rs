//! Multi-commodity flow relaxation in compact arc form, plus the flow
//! decomposition that turns an optimal arc flow into the weighted path set
//! the rounding and approximation stages consume.
//!
//! Edge-disjoint instances are modeled directly (two arcs per edge, one
//! capacity row per edge). Node-disjoint instances go through the standard
//! node-splitting construction, with capacity rows on the internal arcs.

pub mod simplex;

use thiserror::Error;

use crate::graph::{EdgeId, Instance, Mode, NodeId, PathSeq};
use simplex::{LpBuilder, RowKind, SolveStatus, FEAS_EPS};

#[derive(Debug, Clone, Copy)]
pub struct Arc {
    /// Endpoints in the (possibly split) network.
    pub from: usize,
    pub to: usize,
    /// Original edge crossed by this arc; `None` for internal node arcs.
    pub edge: Option<EdgeId>,
}

/// Per-pair arc flows of the solved relaxation.
#[derive(Debug, Clone)]
pub struct ArcFlow {
    pub mode: Mode,
    pub arcs: Vec<Arc>,
    pub net_nodes: usize,
    /// `per_pair[i][a]` is the flow of pair i on arc a.
    pub per_pair: Vec<Vec<f64>>,
    pub marginals: Vec<f64>,
    pub objective: f64,
    pub status: SolveStatus,
    /// Source/sink of each pair in network ids.
    pub pair_ends: Vec<(usize, usize)>,
    /// Network node -> original node.
    pub orig_node: Vec<NodeId>,
}

#[derive(Debug, Clone)]
pub struct WeightedPath {
    pub pair: usize,
    pub path: PathSeq,
    pub weight: f64,
}

/// The LP solution as weighted paths: per-pair marginals plus a
/// polynomial-size path set with positive weights.
#[derive(Debug, Clone)]
pub struct FractionalSolution {
    pub marginals: Vec<f64>,
    pub paths: Vec<WeightedPath>,
    pub objective: f64,
    pub congestion_limit: f64,
}

impl FractionalSolution {
    /// Total weight crossing each edge slot.
    pub fn edge_loads(&self, edge_slots: usize) -> Vec<f64> {
        let mut load = vec![0.0; edge_slots];
        for wp in &self.paths {
            for &e in &wp.path.edges {
                load[e] += wp.weight;
            }
        }
        load
    }
}

#[derive(Debug, Error)]
pub enum DecomposeError {
    #[error("conservation violated for pair {pair} at network node {node}: residual {residual}")]
    Conservation { pair: usize, node: usize, residual: f64 },
}

/// Cancelled circulation recorded during decomposition, for auditing.
#[derive(Debug, Clone)]
pub struct CancelledCycle {
    pub pair: usize,
    pub arcs: Vec<usize>,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    pub solution: FractionalSolution,
    pub cancelled: Vec<CancelledCycle>,
}

struct Network {
    arcs: Vec<Arc>,
    nodes: usize,
    orig_node: Vec<NodeId>,
    out_arcs: Vec<Vec<usize>>,
    in_arcs: Vec<Vec<usize>>,
    pair_ends: Vec<(usize, usize)>,
    /// Capacity rows: groups of arcs sharing one unit of capacity.
    cap_groups: Vec<Vec<usize>>,
}

fn build_network(inst: &Instance) -> Network {
    let g = &inst.graph;
    let n = g.node_count();
    let mut arcs = Vec::new();
    let mut cap_groups = Vec::new();
    let (nodes, orig_node, pair_ends);
    match inst.mode {
        Mode::EdgeDisjoint => {
            nodes = n;
            orig_node = (0..n).collect();
            for e in g.live_edges() {
                let (u, v) = g.raw_endpoints(e);
                let a1 = arcs.len();
                arcs.push(Arc { from: u, to: v, edge: Some(e) });
                arcs.push(Arc { from: v, to: u, edge: Some(e) });
                cap_groups.push(vec![a1, a1 + 1]);
            }
            pair_ends = inst.pairs.clone();
        }
        Mode::NodeDisjoint => {
            // v_in = 2v, v_out = 2v + 1
            nodes = 2 * n;
            orig_node = (0..2 * n).map(|x| x / 2).collect();
            for v in 0..n {
                let a = arcs.len();
                arcs.push(Arc { from: 2 * v, to: 2 * v + 1, edge: None });
                cap_groups.push(vec![a]);
            }
            for e in g.live_edges() {
                let (u, v) = g.raw_endpoints(e);
                arcs.push(Arc { from: 2 * u + 1, to: 2 * v, edge: Some(e) });
                arcs.push(Arc { from: 2 * v + 1, to: 2 * u, edge: Some(e) });
            }
            pair_ends = inst.pairs.iter().map(|&(s, t)| (2 * s + 1, 2 * t)).collect();
        }
    }
    let mut out_arcs = vec![Vec::new(); nodes];
    let mut in_arcs = vec![Vec::new(); nodes];
    for (a, arc) in arcs.iter().enumerate() {
        out_arcs[arc.from].push(a);
        in_arcs[arc.to].push(a);
    }
    Network { arcs, nodes, orig_node, out_arcs, in_arcs, pair_ends, cap_groups }
}

fn connected(net: &Network, s: usize, t: usize) -> bool {
    let mut seen = vec![false; net.nodes];
    let mut stack = vec![s];
    seen[s] = true;
    while let Some(v) = stack.pop() {
        if v == t {
            return true;
        }
        for &a in &net.out_arcs[v] {
            let w = net.arcs[a].to;
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    false
}

/// Solve the relaxation: maximize the sum of per-pair marginals subject to
/// conservation and unit capacities. Accepts both modes on normalized
/// instances.
pub fn solve_lp(inst: &Instance) -> ArcFlow {
    let net = build_network(inst);
    let k = inst.pairs.len();
    let na = net.arcs.len();
    let mut lp = LpBuilder::new();
    // var layout: per routable pair, one var per arc, then x_i
    let routable: Vec<bool> =
        net.pair_ends.iter().map(|&(s, t)| connected(&net, s, t)).collect();
    let mut flow_var = vec![usize::MAX; k];
    for i in 0..k {
        if routable[i] {
            flow_var[i] = lp.num_vars();
            for _ in 0..na {
                lp.add_var(0.0, 1.0);
            }
        }
    }
    let mut x_var = vec![usize::MAX; k];
    for i in 0..k {
        if routable[i] {
            x_var[i] = lp.add_var(1.0, 1.0);
        }
    }
    for i in 0..k {
        if !routable[i] {
            continue;
        }
        let (s, t) = net.pair_ends[i];
        for v in 0..net.nodes {
            let mut coeffs: Vec<(usize, f64)> = Vec::new();
            for &a in &net.out_arcs[v] {
                coeffs.push((flow_var[i] + a, 1.0));
            }
            for &a in &net.in_arcs[v] {
                coeffs.push((flow_var[i] + a, -1.0));
            }
            if v == s {
                coeffs.push((x_var[i], -1.0));
            } else if v == t {
                coeffs.push((x_var[i], 1.0));
            }
            if !coeffs.is_empty() {
                lp.add_row(coeffs, RowKind::Eq, 0.0);
            }
        }
    }
    for group in &net.cap_groups {
        let mut coeffs = Vec::new();
        for i in 0..k {
            if !routable[i] {
                continue;
            }
            for &a in group {
                coeffs.push((flow_var[i] + a, 1.0));
            }
        }
        if !coeffs.is_empty() {
            lp.add_row(coeffs, RowKind::Le, 1.0);
        }
    }
    let sol = lp.solve();
    let mut per_pair = vec![vec![0.0; na]; k];
    let mut marginals = vec![0.0; k];
    for i in 0..k {
        if !routable[i] {
            continue;
        }
        for a in 0..na {
            let v = sol.values[flow_var[i] + a];
            per_pair[i][a] = if v < FEAS_EPS { 0.0 } else { v };
        }
        let x = sol.values[x_var[i]];
        marginals[i] = if x < FEAS_EPS { 0.0 } else { x.min(1.0) };
    }
    ArcFlow {
        mode: inst.mode,
        arcs: net.arcs,
        net_nodes: net.nodes,
        per_pair,
        marginals,
        objective: sol.objective.max(0.0),
        status: sol.status,
        pair_ends: net.pair_ends,
        orig_node: net.orig_node,
    }
}

pub fn lp_value(inst: &Instance) -> f64 {
    solve_lp(inst).objective
}

/// Max-bottleneck augmenting path in the support of `flow`, as arc ids from
/// s to t. Deterministic: linear-scan relaxation with smallest-id ties.
fn bottleneck_path(
    net_nodes: usize,
    arcs: &[Arc],
    out_arcs: &[Vec<usize>],
    flow: &[f64],
    s: usize,
    t: usize,
) -> Option<(Vec<usize>, f64)> {
    let mut label = vec![0.0f64; net_nodes];
    let mut parent: Vec<Option<usize>> = vec![None; net_nodes];
    let mut done = vec![false; net_nodes];
    label[s] = f64::INFINITY;
    loop {
        let mut best: Option<usize> = None;
        for v in 0..net_nodes {
            if !done[v] && label[v] > 0.0 && best.is_none_or(|b| label[v] > label[b]) {
                best = Some(v);
            }
        }
        let Some(v) = best else { break };
        if v == t {
            break;
        }
        done[v] = true;
        for &a in &out_arcs[v] {
            if flow[a] <= 0.0 {
                continue;
            }
            let w = arcs[a].to;
            let cand = label[v].min(flow[a]);
            if cand > label[w] {
                label[w] = cand;
                parent[w] = Some(a);
            }
        }
    }
    if label[t] <= 0.0 {
        return None;
    }
    let mut path = Vec::new();
    let mut v = t;
    while v != s {
        let a = parent[v].expect("parent chain reaches source");
        path.push(a);
        v = arcs[a].from;
    }
    path.reverse();
    Some((path, label[t]))
}

fn arc_path_to_pathseq(arcs: &[Arc], orig_node: &[NodeId], start: usize, ids: &[usize]) -> PathSeq {
    let mut nodes = vec![orig_node[start]];
    let mut edges = Vec::new();
    for &a in ids {
        if let Some(e) = arcs[a].edge {
            edges.push(e);
            nodes.push(orig_node[arcs[a].to]);
        }
    }
    PathSeq { nodes, edges }
}

/// Standard flow decomposition: cancel opposite-arc slack, check
/// conservation, repeatedly strip a maximal-bottleneck source-sink path,
/// then cancel residual circulations.
pub fn decompose_paths(flow: &ArcFlow) -> Result<Decomposition, DecomposeError> {
    let na = flow.arcs.len();
    let mut out_arcs = vec![Vec::new(); flow.net_nodes];
    for (a, arc) in flow.arcs.iter().enumerate() {
        out_arcs[arc.from].push(a);
    }
    // arc id of the reverse twin, when there is one
    let mut twin = vec![usize::MAX; na];
    {
        use std::collections::HashMap;
        let mut by_ends: HashMap<(usize, usize), usize> = HashMap::new();
        for (a, arc) in flow.arcs.iter().enumerate() {
            by_ends.insert((arc.from, arc.to), a);
        }
        for (a, arc) in flow.arcs.iter().enumerate() {
            if let Some(&b) = by_ends.get(&(arc.to, arc.from)) {
                twin[a] = b;
            }
        }
    }
    let mut paths = Vec::new();
    let mut cancelled = Vec::new();
    for (i, pair_flow) in flow.per_pair.iter().enumerate() {
        let mut f = pair_flow.clone();
        for a in 0..na {
            let b = twin[a];
            if b != usize::MAX && b > a && f[a] > 0.0 && f[b] > 0.0 {
                let c = f[a].min(f[b]);
                f[a] -= c;
                f[b] -= c;
                cancelled.push(CancelledCycle { pair: i, arcs: vec![a, b], weight: c });
            }
        }
        for a in 0..na {
            if f[a] < FEAS_EPS {
                f[a] = 0.0;
            }
        }
        let (s, t) = flow.pair_ends[i];
        for v in 0..flow.net_nodes {
            if v == s || v == t {
                continue;
            }
            let inflow: f64 = (0..na).filter(|&a| flow.arcs[a].to == v).map(|a| f[a]).sum();
            let outflow: f64 = out_arcs[v].iter().map(|&a| f[a]).sum();
            let residual = inflow - outflow;
            if residual.abs() > 50.0 * FEAS_EPS {
                return Err(DecomposeError::Conservation { pair: i, node: v, residual });
            }
        }
        while flow.marginals[i] > 0.0 {
            let Some((ids, w)) =
                bottleneck_path(flow.net_nodes, &flow.arcs, &out_arcs, &f, s, t)
            else {
                break;
            };
            if w <= simplex::PIVOT_EPS {
                break;
            }
            for &a in &ids {
                f[a] -= w;
            }
            let path = arc_path_to_pathseq(&flow.arcs, &flow.orig_node, s, &ids);
            paths.push(WeightedPath { pair: i, path, weight: w });
        }
        // leftover support is circulation; peel cycles
        loop {
            let Some(start) = (0..na).find(|&a| f[a] > FEAS_EPS) else { break };
            let mut seen_at = vec![usize::MAX; flow.net_nodes];
            let mut walk = vec![start];
            seen_at[flow.arcs[start].from] = 0;
            loop {
                let head = flow.arcs[*walk.last().unwrap()].to;
                if seen_at[head] != usize::MAX {
                    let cyc = walk.split_off(seen_at[head]);
                    let w = cyc.iter().map(|&a| f[a]).fold(f64::INFINITY, f64::min);
                    for &a in &cyc {
                        f[a] -= w;
                    }
                    cancelled.push(CancelledCycle { pair: i, arcs: cyc, weight: w });
                    break;
                }
                seen_at[head] = walk.len();
                let next = out_arcs[head]
                    .iter()
                    .copied()
                    .find(|&a| f[a] > FEAS_EPS)
                    .expect("positive outflow inside circulation support");
                walk.push(next);
            }
        }
    }
    let solution = FractionalSolution {
        marginals: flow.marginals.clone(),
        paths,
        objective: flow.objective,
        congestion_limit: 1.0,
    };
    Ok(Decomposition { solution, cancelled })
}

/// Convenience: solve and decompose in one step.
pub fn fractional_solution(inst: &Instance) -> Result<FractionalSolution, DecomposeError> {
    let flow = solve_lp(inst);
    Ok(decompose_paths(&flow)?.solution)
}
