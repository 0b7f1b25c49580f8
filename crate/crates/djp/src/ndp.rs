//! Exact MaxNDP via the feedback-vertex-set dynamic program: guess how the
//! optimal routing interacts with R as chains of R-visits per routed pair
//! ("essential structures"), then count the best forest-only routing that
//! coexists with a realization of the induced essential pairs.
//!
//! The table is sparse: per forest position (v, i) a map from
//! (essential-pair subset, partner, state) to the best routing size, with
//! absent keys standing for minus infinity.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::graph::{EdgeId, Graph, Instance, Mode, NodeId, PathSeq, Routing};
use crate::rounding::choose_fvs;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NdpError {
    #[error("instance is not node-disjoint mode")]
    WrongMode,
    #[error("terminal {0} is not a leaf; normalize the instance first")]
    TerminalNotLeaf(NodeId),
    #[error("feedback vertex set contains terminal {0}")]
    TerminalInFvs(NodeId),
}

/// Subdivided instance with the rooted ordered forest the DP runs on.
#[derive(Debug)]
pub struct Prepared {
    pub sub: Graph,
    pub pairs: Vec<(NodeId, NodeId)>,
    pub r_nodes: Vec<NodeId>,
    pub in_r: Vec<bool>,
    /// For subdivision nodes, the original edge they sit on.
    pub origin_edge: Vec<Option<EdgeId>>,
    /// Children per forest node; index `root` is the dummy root holding the
    /// tree roots. Ordered by node id.
    pub children: Vec<Vec<usize>>,
    pub root: usize,
    /// Forest nodes in postorder (children before parents), root excluded.
    pub postorder: Vec<usize>,
    /// Sorted R-neighbors per forest node (nonempty only on leaves).
    pub r_neighbors: Vec<Vec<NodeId>>,
    pub tree_of: Vec<usize>,
    orig_nodes: usize,
}

/// Subdivide every edge incident on R, root the forest G - R with a dummy
/// root, and order children by node id. After this every neighbor of R is
/// a leaf of the forest and R is independent.
pub fn preprocess_ndp(inst: &Instance, r_nodes: &[NodeId]) -> Result<Prepared, NdpError> {
    if inst.mode != Mode::NodeDisjoint {
        return Err(NdpError::WrongMode);
    }
    for &(s, t) in &inst.pairs {
        for v in [s, t] {
            if inst.graph.degree(v) != 1 {
                return Err(NdpError::TerminalNotLeaf(v));
            }
            if r_nodes.contains(&v) {
                return Err(NdpError::TerminalInFvs(v));
            }
        }
    }
    let mut sub = inst.graph.clone();
    let orig_nodes = sub.node_count();
    let mut in_r = vec![false; orig_nodes];
    for &v in r_nodes {
        in_r[v] = true;
    }
    let mut origin_edge: Vec<Option<EdgeId>> = vec![None; orig_nodes];
    let to_split: Vec<EdgeId> = sub
        .live_edges()
        .filter(|&e| {
            let (u, v) = sub.raw_endpoints(e);
            in_r[u] || in_r[v]
        })
        .collect();
    for e in to_split {
        let (u, v) = sub.raw_endpoints(e);
        sub.delete_edge(e);
        let x = sub.add_node();
        origin_edge.push(Some(e));
        in_r.push(false);
        sub.add_edge(u, x);
        sub.add_edge(x, v);
    }
    let n = sub.node_count();
    let adj = sub.adjacency();
    let mut r_neighbors = vec![Vec::new(); n];
    for v in 0..n {
        if in_r[v] {
            continue;
        }
        let mut rs: Vec<NodeId> =
            adj[v].iter().filter(|&&(w, _)| in_r[w]).map(|&(w, _)| w).collect();
        rs.sort_unstable();
        rs.dedup();
        r_neighbors[v] = rs;
    }
    let root = n;
    let mut children = vec![Vec::new(); n + 1];
    let mut tree_of = vec![usize::MAX; n];
    let mut postorder = Vec::new();
    for start in 0..n {
        if in_r[start] || tree_of[start] != usize::MAX {
            continue;
        }
        children[root].push(start);
        // iterative DFS producing children lists and a postorder
        let mut stack = vec![(start, usize::MAX, false)];
        while let Some((v, parent, expanded)) = stack.pop() {
            if expanded {
                postorder.push(v);
                continue;
            }
            tree_of[v] = start;
            stack.push((v, parent, true));
            let mut kids: Vec<usize> = adj[v]
                .iter()
                .filter(|&&(w, _)| !in_r[w] && w != parent)
                .map(|&(w, _)| w)
                .collect();
            kids.sort_unstable();
            kids.dedup();
            children[v] = kids.clone();
            for w in kids.into_iter().rev() {
                stack.push((w, v, false));
            }
        }
    }
    Ok(Prepared {
        sub,
        pairs: inst.pairs.clone(),
        r_nodes: r_nodes.to_vec(),
        in_r,
        origin_edge,
        children,
        root,
        postorder,
        r_neighbors,
        tree_of,
        orig_nodes,
    })
}

/// One guessed interaction pattern: which pairs are routed through R, and
/// the ordered chain of distinct R-nodes each of their paths visits.
/// Chains are pairwise disjoint over R.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EssentialStructure {
    pub chains: Vec<(usize, Vec<NodeId>)>,
}

impl EssentialStructure {
    pub fn routed_count(&self) -> usize {
        self.chains.len()
    }

    /// Derived essential pairs in chain order per routed pair:
    /// (s, r_1), (r_1, r_2), ..., (r_l, t).
    pub fn essential_pairs(&self, pairs: &[(NodeId, NodeId)]) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::new();
        for (i, chain) in &self.chains {
            let (s, t) = pairs[*i];
            out.push((s, chain[0]));
            for w in chain.windows(2) {
                out.push((w[0], w[1]));
            }
            out.push((*chain.last().unwrap(), t));
        }
        out
    }
}

/// Lazily stream every chain structure: each pair is either skipped or
/// assigned a nonempty sequence of still-unused R nodes. The empty
/// structure comes first.
pub fn enumerate_essential_structures(
    pair_count: usize,
    r_nodes: &[NodeId],
) -> StructureIter {
    StructureIter {
        r_nodes: r_nodes.to_vec(),
        pair_count,
        stack: vec![Frame { next_pair: 0, used: 0, chains: Vec::new(), building: None }],
    }
}

#[derive(Debug, Clone)]
struct Frame {
    next_pair: usize,
    used: u64,
    chains: Vec<(usize, Vec<NodeId>)>,
    building: Option<Vec<NodeId>>,
}

pub struct StructureIter {
    r_nodes: Vec<NodeId>,
    pair_count: usize,
    stack: Vec<Frame>,
}

impl Iterator for StructureIter {
    type Item = EssentialStructure;

    fn next(&mut self) -> Option<EssentialStructure> {
        while let Some(frame) = self.stack.pop() {
            if let Some(chain) = frame.building {
                // options, popped in order: close the chain, or extend it
                let pair = frame.next_pair;
                for (bi, &rv) in self.r_nodes.iter().enumerate().rev() {
                    if frame.used >> bi & 1 == 0 {
                        let mut c2 = chain.clone();
                        c2.push(rv);
                        self.stack.push(Frame {
                            next_pair: pair,
                            used: frame.used | 1 << bi,
                            chains: frame.chains.clone(),
                            building: Some(c2),
                        });
                    }
                }
                let mut chains = frame.chains;
                chains.push((pair, chain));
                self.stack.push(Frame {
                    next_pair: pair + 1,
                    used: frame.used,
                    chains,
                    building: None,
                });
                continue;
            }
            if frame.next_pair == self.pair_count {
                return Some(EssentialStructure { chains: frame.chains });
            }
            // popped in order: skip this pair, or start a chain with each
            // free R node
            for (bi, &rv) in self.r_nodes.iter().enumerate().rev() {
                if frame.used >> bi & 1 == 0 {
                    self.stack.push(Frame {
                        next_pair: frame.next_pair,
                        used: frame.used | 1 << bi,
                        chains: frame.chains.clone(),
                        building: Some(vec![rv]),
                    });
                }
            }
            self.stack.push(Frame {
                next_pair: frame.next_pair + 1,
                used: frame.used,
                chains: frame.chains,
                building: None,
            });
        }
        None
    }
}

const FREE: u8 = 0;
const TBU: u8 = 1;
const BLOCKED: u8 = 2;
const U_NONE: u8 = u8::MAX;

type Key = (u32, u8, u8);
type Table = BTreeMap<Key, i64>;

struct DpCtx<'p> {
    prep: &'p Prepared,
    me: Vec<(NodeId, NodeId)>,
    /// Unrouted pairs as (pair index, s, t).
    mbar: Vec<(usize, NodeId, NodeId)>,
    u_nodes: Vec<NodeId>,
    u_of: HashMap<NodeId, u8>,
    full_mask: u32,
}

impl<'p> DpCtx<'p> {
    fn new(prep: &'p Prepared, structure: &EssentialStructure) -> Self {
        let me = structure.essential_pairs(&prep.pairs);
        assert!(me.len() <= 32, "essential pair sets beyond 32 are out of scope");
        let routed: Vec<usize> = structure.chains.iter().map(|(i, _)| *i).collect();
        let mbar: Vec<(usize, NodeId, NodeId)> = prep
            .pairs
            .iter()
            .enumerate()
            .filter(|(i, _)| !routed.contains(i))
            .map(|(i, &(s, t))| (i, s, t))
            .collect();
        let mut u_nodes: Vec<NodeId> = Vec::new();
        for &(a, b) in &me {
            u_nodes.push(a);
            u_nodes.push(b);
        }
        for &(_, s, t) in &mbar {
            u_nodes.push(s);
            u_nodes.push(t);
        }
        u_nodes.sort_unstable();
        u_nodes.dedup();
        assert!(u_nodes.len() < 255);
        let u_of = u_nodes.iter().enumerate().map(|(i, &v)| (v, i as u8)).collect();
        let full_mask = if me.is_empty() { 0 } else { (1u32 << me.len()) - 1 };
        DpCtx { prep, me, mbar, u_nodes, u_of, full_mask }
    }

    /// Base table: only node v itself is available.
    fn base(&self, v: usize) -> Table {
        let mut t = Table::new();
        t.insert((0, U_NONE, FREE), 0);
        t.insert((0, U_NONE, BLOCKED), 0);
        if v == self.prep.root {
            return t; // the dummy root may never be used by a path
        }
        let rn = &self.prep.r_neighbors[v];
        for (pi, &(a, b)) in self.me.iter().enumerate() {
            let ok = (rn.contains(&a) && rn.contains(&b))
                || (a == v && rn.contains(&b))
                || (b == v && rn.contains(&a));
            if ok {
                t.insert((1 << pi, U_NONE, BLOCKED), 0);
            }
        }
        for (ui, &u) in self.u_nodes.iter().enumerate() {
            if u == v || rn.contains(&u) {
                t.insert((0, ui as u8, TBU), 0);
            }
        }
        t
    }

    fn me_index(&self, a: NodeId, b: NodeId) -> Option<usize> {
        self.me.iter().position(|&(x, y)| (x, y) == (a, b) || (x, y) == (b, a))
    }

    fn mbar_index(&self, a: NodeId, b: NodeId) -> Option<usize> {
        self.mbar
            .iter()
            .position(|&(_, s, t)| (s, t) == (a, b) || (s, t) == (b, a))
    }

    /// Combine the running prefix table with a finished child table.
    fn combine(&self, left: &Table, child: &Table) -> Table {
        let mut out = Table::new();
        let mut upd = |key: Key, val: i64, out: &mut Table| {
            let cur = out.entry(key).or_insert(i64::MIN);
            if val > *cur {
                *cur = val;
            }
        };
        for (&(ml, ul, bl), &vl) in left {
            for (&(mc, uc, bc), &vc) in child {
                if ml & mc != 0 {
                    continue;
                }
                let m = ml | mc;
                let val = vl + vc;
                match (bl, bc) {
                    (FREE, BLOCKED) => upd((m, U_NONE, FREE), val, &mut out),
                    (TBU, BLOCKED) => upd((m, ul, TBU), val, &mut out),
                    (FREE, TBU) => upd((m, uc, TBU), val, &mut out),
                    (BLOCKED, BLOCKED) => upd((m, U_NONE, BLOCKED), val, &mut out),
                    (TBU, TBU) => {
                        let a = self.u_nodes[ul as usize];
                        let b = self.u_nodes[uc as usize];
                        if let Some(pi) = self.me_index(a, b) {
                            if m & (1 << pi) == 0 {
                                upd((m | 1 << pi, U_NONE, BLOCKED), val, &mut out);
                            }
                        } else if self.mbar_index(a, b).is_some() {
                            upd((m, U_NONE, BLOCKED), val + 1, &mut out);
                        }
                    }
                    _ => {}
                }
            }
        }
        out
    }

    /// Full sweep over one node: prefix tables T[v, 0..=ch(v)].
    fn sweep(&self, v: usize, child_tables: &HashMap<usize, Table>) -> Vec<Table> {
        let mut tables = vec![self.base(v)];
        for c in &self.prep.children[v] {
            let next = self.combine(tables.last().unwrap(), &child_tables[c]);
            tables.push(next);
        }
        tables
    }

    /// Value of the structure: forest-routed pair count, or None when the
    /// essential pairs cannot all be realized.
    fn solve(&self) -> Option<i64> {
        let mut finals: HashMap<usize, Table> = HashMap::new();
        for &v in &self.prep.postorder {
            let mut tabs = self.sweep(v, &finals);
            finals.insert(v, tabs.pop().unwrap());
        }
        let mut root_tabs = self.sweep(self.prep.root, &finals);
        let root = root_tabs.pop().unwrap();
        root.get(&(self.full_mask, U_NONE, FREE)).copied()
    }
}

/// Value of the DP for one structure; None reports an unrealizable guess.
pub fn dp_solve(prep: &Prepared, structure: &EssentialStructure) -> Option<i64> {
    let ctx = DpCtx::new(prep, structure);
    ctx.solve()
}

/// Necessary condition for realizability, used to skip hopeless guesses
/// cheaply: the two ends of every essential pair must touch a common tree.
fn structure_plausible(prep: &Prepared, s: &EssentialStructure, trees_of_r: &HashMap<NodeId, Vec<usize>>) -> bool {
    for (a, b) in s.essential_pairs(&prep.pairs) {
        let ta: &[usize] = if prep.in_r[a] {
            trees_of_r.get(&a).map(|v| v.as_slice()).unwrap_or(&[])
        } else {
            std::slice::from_ref(&prep.tree_of[a])
        };
        let shared = if prep.in_r[b] {
            let tb = trees_of_r.get(&b).map(|v| v.as_slice()).unwrap_or(&[]);
            ta.iter().any(|t| tb.contains(t))
        } else {
            ta.contains(&prep.tree_of[b])
        };
        if !shared {
            return false;
        }
    }
    true
}

/// Chains and their reversals route the same pairs; keep one orientation.
fn structure_canonical(s: &EssentialStructure) -> bool {
    s.chains.iter().all(|(_, c)| c.len() < 2 || c.first() < c.last())
}

#[derive(Debug)]
pub struct NdpReport {
    pub value: usize,
    pub routing: Routing,
    pub structures_tried: usize,
    pub fvs_size: usize,
}

/// Exact MaxNDP on a normalized node-disjoint instance.
pub fn maxndp_fpt(inst: &Instance) -> Result<NdpReport, NdpError> {
    if inst.mode != Mode::NodeDisjoint {
        return Err(NdpError::WrongMode);
    }
    let k = inst.pairs.len();
    if k == 0 {
        return Ok(NdpReport {
            value: 0,
            routing: Routing::default(),
            structures_tried: 0,
            fvs_size: 0,
        });
    }
    let mut fvs = choose_fvs(&inst.graph);
    // leaves are never needed in a feedback vertex set
    let terminals = inst.terminals();
    fvs.nodes.retain(|v| !terminals.contains(v));
    debug_assert!(inst.graph.is_forest_without(&fvs.nodes));
    let prep = preprocess_ndp(inst, &fvs.nodes)?;
    let mut trees_of_r: HashMap<NodeId, Vec<usize>> = HashMap::new();
    for v in 0..prep.sub.node_count() {
        if prep.in_r[v] {
            continue;
        }
        for &r in &prep.r_neighbors[v] {
            let trees = trees_of_r.entry(r).or_default();
            if !trees.contains(&prep.tree_of[v]) {
                trees.push(prep.tree_of[v]);
            }
        }
    }
    let mut best: Option<(usize, EssentialStructure)> = None;
    let mut structures_tried = 0usize;
    for s in enumerate_essential_structures(k, &fvs.nodes) {
        structures_tried += 1;
        if !structure_canonical(&s) || !structure_plausible(&prep, &s, &trees_of_r) {
            continue;
        }
        let Some(pf) = dp_solve(&prep, &s) else { continue };
        let value = s.routed_count() + pf as usize;
        if best.as_ref().is_none_or(|(b, _)| value > *b) {
            best = Some((value, s));
            if value == k {
                break;
            }
        }
    }
    let (value, structure) = best.expect("the empty structure always realizes");
    let routing = reconstruct(&prep, &structure);
    Ok(NdpReport { value, routing, structures_tried, fvs_size: fvs.nodes.len() })
}

// ---- witness reconstruction -------------------------------------------

#[derive(Debug, Default, Clone)]
struct Parts {
    /// Forest-routed pairs: (pair index, subdivided node path).
    pf: Vec<(usize, Vec<NodeId>)>,
    /// Realizations per essential pair index, oriented as in `me`.
    pe: Vec<(usize, Vec<NodeId>)>,
    partial: Option<Vec<NodeId>>,
}

fn reconstruct(prep: &Prepared, structure: &EssentialStructure) -> Routing {
    let ctx = DpCtx::new(prep, structure);
    // keep every prefix table for the traceback
    let mut all: HashMap<usize, Vec<Table>> = HashMap::new();
    let mut finals: HashMap<usize, Table> = HashMap::new();
    for &v in &prep.postorder {
        let tabs = ctx.sweep(v, &finals);
        finals.insert(v, tabs.last().unwrap().clone());
        all.insert(v, tabs);
    }
    let root_tabs = ctx.sweep(prep.root, &finals);
    let key = (ctx.full_mask, U_NONE, FREE);
    let value = *root_tabs
        .last()
        .unwrap()
        .get(&key)
        .expect("winning structure realizes");
    all.insert(prep.root, root_tabs);
    let parts = trace(&ctx, &all, prep.root, prep.children[prep.root].len(), key, value);
    assemble(prep, structure, &ctx, parts)
}

/// Re-derive which combination produced `key = value` at (v, i) and
/// recurse. Deterministic because tables are ordered maps.
fn trace(
    ctx: &DpCtx<'_>,
    all: &HashMap<usize, Vec<Table>>,
    v: usize,
    i: usize,
    key: Key,
    value: i64,
) -> Parts {
    let (mask, u, b) = key;
    if i == 0 {
        let mut parts = Parts::default();
        if b == BLOCKED && mask != 0 {
            let pi = mask.trailing_zeros() as usize;
            let (a, bb) = ctx.me[pi];
            let nodes = if a == v {
                vec![v, bb]
            } else if bb == v {
                vec![a, v]
            } else {
                vec![a, v, bb]
            };
            parts.pe.push((pi, nodes));
        } else if b == TBU {
            let un = ctx.u_nodes[u as usize];
            parts.partial = Some(if un == v { vec![v] } else { vec![un, v] });
        }
        return parts;
    }
    let left_tab = &all[&v][i - 1];
    let child = ctx.prep.children[v][i - 1];
    let child_tab = all[&child].last().unwrap();
    for (&(ml, ul, bl), &vl) in left_tab {
        for (&(mc, uc, bc), &vc) in child_tab {
            if ml & mc != 0 {
                continue;
            }
            let m = ml | mc;
            let sum = vl + vc;
            let kl = (ml, ul, bl);
            let kc = (mc, uc, bc);
            let reclc = |ctxr: &DpCtx<'_>| {
                let l = trace(ctxr, all, v, i - 1, kl, vl);
                let c = trace(ctxr, all, child, ctxr.prep.children[child].len(), kc, vc);
                (l, c)
            };
            match (bl, bc) {
                (FREE, BLOCKED) if b == FREE && m == mask && sum == value => {
                    let (l, c) = reclc(ctx);
                    return merge(l, c, None);
                }
                (TBU, BLOCKED) if b == TBU && m == mask && ul == u && sum == value => {
                    let (l, c) = reclc(ctx);
                    let partial = l.partial.clone();
                    return merge(l, c, partial);
                }
                (FREE, TBU) if b == TBU && m == mask && uc == u && sum == value => {
                    let (l, c) = reclc(ctx);
                    let mut partial = c.partial.clone().expect("child TBU has a partial");
                    partial.push(v);
                    return merge(l, c, Some(partial));
                }
                (BLOCKED, BLOCKED) if b == BLOCKED && m == mask && sum == value => {
                    let (l, c) = reclc(ctx);
                    return merge(l, c, None);
                }
                (TBU, TBU) if b == BLOCKED => {
                    let a = ctx.u_nodes[ul as usize];
                    let bb = ctx.u_nodes[uc as usize];
                    if let Some(pi) = ctx.me_index(a, bb) {
                        if m & (1 << pi) == 0 && (m | 1 << pi) == mask && sum == value {
                            let (l, c) = reclc(ctx);
                            let mut nodes = l.partial.clone().unwrap();
                            let right = c.partial.clone().unwrap();
                            nodes.extend(right.into_iter().rev());
                            // orient along the essential pair
                            if nodes.first() != Some(&ctx.me[pi].0) {
                                nodes.reverse();
                            }
                            let mut out = merge(l, c, None);
                            out.pe.push((pi, nodes));
                            return out;
                        }
                    } else if let Some(bi) = ctx.mbar_index(a, bb) {
                        if m == mask && sum + 1 == value {
                            let (l, c) = reclc(ctx);
                            let mut nodes = l.partial.clone().unwrap();
                            let right = c.partial.clone().unwrap();
                            nodes.extend(right.into_iter().rev());
                            let pair = ctx.mbar[bi].0;
                            let mut out = merge(l, c, None);
                            out.pf.push((pair, nodes));
                            return out;
                        }
                    }
                }
                _ => {}
            }
        }
    }
    unreachable!("table entry must be reproducible at (v={v}, i={i}, key={key:?})");
}

fn merge(l: Parts, c: Parts, partial: Option<Vec<NodeId>>) -> Parts {
    let mut out = Parts { pf: l.pf, pe: l.pe, partial };
    out.pf.extend(c.pf);
    out.pe.extend(c.pe);
    out
}

/// Stitch realizations into full terminal-to-terminal paths, drop the
/// subdivision nodes, and rebuild edge ids in the original graph.
fn assemble(
    prep: &Prepared,
    structure: &EssentialStructure,
    ctx: &DpCtx<'_>,
    parts: Parts,
) -> Routing {
    let mut realization: HashMap<usize, Vec<NodeId>> = parts.pe.into_iter().collect();
    let mut entries = Vec::new();
    // chain-routed pairs: concatenate the realizations along the chain
    let mut me_cursor = 0usize;
    for (pair, chain) in &structure.chains {
        let mut nodes: Vec<NodeId> = Vec::new();
        let segs = chain.len() + 1;
        for s in 0..segs {
            let idx = me_cursor + s;
            let mut seg = realization
                .remove(&idx)
                .expect("realization for every essential pair");
            let want_start = ctx.me[idx].0;
            if seg.first() != Some(&want_start) {
                seg.reverse();
            }
            if nodes.is_empty() {
                nodes = seg;
            } else {
                debug_assert_eq!(nodes.last(), seg.first());
                nodes.extend(seg.into_iter().skip(1));
            }
        }
        me_cursor += segs;
        entries.push((*pair, unsubdivide(prep, &nodes)));
    }
    for (pair, nodes) in parts.pf {
        entries.push((pair, unsubdivide(prep, &nodes)));
    }
    entries.sort_by_key(|(p, _)| *p);
    Routing { entries }
}

/// Map a node path of the subdivided graph back to the original graph.
fn unsubdivide(prep: &Prepared, nodes: &[NodeId]) -> PathSeq {
    let mut out_nodes: Vec<NodeId> = Vec::new();
    let mut out_edges: Vec<EdgeId> = Vec::new();
    let mut pending: Option<EdgeId> = None;
    for &v in nodes {
        if v >= prep.orig_nodes {
            pending = prep.origin_edge[v];
            continue;
        }
        if let Some(prev) = out_nodes.last().copied() {
            let e = match pending.take() {
                Some(e) => e,
                None => lowest_edge_between(prep, prev, v),
            };
            out_edges.push(e);
        }
        out_nodes.push(v);
    }
    PathSeq { nodes: out_nodes, edges: out_edges }
}

fn lowest_edge_between(prep: &Prepared, a: NodeId, b: NodeId) -> EdgeId {
    // untouched edges keep their original ids in the subdivided graph
    prep.sub
        .live_edges()
        .find(|&e| {
            let (u, v) = prep.sub.raw_endpoints(e);
            (u, v) == (a, b) || (u, v) == (b, a)
        })
        .expect("consecutive original nodes are adjacent")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::gen_random_fvs;
    use crate::graph::{normalize_instance, verify_routing};
    use crate::oracle::{exact_opt, Guard};

    fn norm(graph: Graph, pairs: Vec<(NodeId, NodeId)>) -> Instance {
        normalize_instance(&Instance { graph, pairs, mode: Mode::NodeDisjoint })
            .unwrap()
            .instance
    }

    #[test]
    fn preprocess_splits_r_incident_edges() {
        // star center is the FVS node of a triangle with a pendant
        let g = Graph::with_edges(4, &[(0, 1), (1, 2), (2, 0), (0, 3)]);
        let inst = norm(g, vec![(1, 3)]);
        let prep = preprocess_ndp(&inst, &[0]).unwrap();
        // all neighbors of node 0 are now leaves of the forest
        let adj = prep.sub.adjacency();
        for v in 0..prep.sub.node_count() {
            if prep.r_neighbors[v].contains(&0) {
                let f_degree = adj[v].iter().filter(|&&(w, _)| !prep.in_r[w]).count();
                assert!(f_degree <= 1, "node {v} should be a forest leaf");
            }
        }
        // R is independent: no live edge joins two R nodes
        for e in prep.sub.live_edges() {
            let (u, v) = prep.sub.raw_endpoints(e);
            assert!(!(prep.in_r[u] && prep.in_r[v]));
        }
    }

    #[test]
    fn preprocess_forest_gets_only_dummy_root() {
        let g = Graph::with_edges(4, &[(0, 1), (1, 2), (2, 3)]);
        let inst = norm(g, vec![(0, 3)]);
        let prep = preprocess_ndp(&inst, &[]).unwrap();
        assert_eq!(prep.children[prep.root].len(), 1);
        assert_eq!(prep.sub.node_count(), inst.graph.node_count());
    }

    #[test]
    fn enumeration_counts() {
        // r = 0: only the empty structure
        let all: Vec<_> = enumerate_essential_structures(2, &[]).collect();
        assert_eq!(all.len(), 1);
        assert!(all[0].chains.is_empty());
        // r = 1, k = 1: empty + one chain
        let all: Vec<_> = enumerate_essential_structures(1, &[7]).collect();
        assert_eq!(all.len(), 2);
        // r = 2, k = 1: empty, (a), (b), (a,b), (b,a)
        let all: Vec<_> = enumerate_essential_structures(1, &[5, 9]).collect();
        assert_eq!(all.len(), 5);
        // never exceeds the coarse bound (2k + r + 1)^(2r)
        let count = enumerate_essential_structures(2, &[1, 2]).count();
        assert!(count <= (2 * 2 + 2 + 1usize).pow(4));
        // no duplicates
        let mut seen = Vec::new();
        for s in enumerate_essential_structures(2, &[1, 2]) {
            assert!(!seen.contains(&s));
            seen.push(s);
        }
    }

    #[test]
    fn forest_instance_solved_by_empty_structure() {
        let g = Graph::with_edges(6, &[(0, 1), (1, 2), (3, 4), (4, 5)]);
        let inst = norm(g, vec![(0, 2), (3, 5)]);
        let rep = maxndp_fpt(&inst).unwrap();
        assert_eq!(rep.value, 2);
        assert!(verify_routing(&inst, &rep.routing, 1).feasible);
        assert_eq!(rep.routing.size(), 2);
    }

    #[test]
    fn two_leaf_terminal_component() {
        // a pair whose normalized leaves hang off a 2-node tree; forces the
        // single-edge closure at a tree root
        let g = Graph::with_edges(2, &[(0, 1)]);
        let inst = norm(g, vec![(0, 1)]);
        let rep = maxndp_fpt(&inst).unwrap();
        assert_eq!(rep.value, 1);
        assert!(verify_routing(&inst, &rep.routing, 1).feasible);
    }

    #[test]
    fn chain_through_r_node() {
        // two trees hanging off one R node; the pair must use the chain (r)
        let g = Graph::with_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]);
        let inst = norm(g, vec![(0, 3)]);
        let rep = maxndp_fpt(&inst).unwrap();
        let (opt, _) = exact_opt(&inst, Guard { max_nodes: 20, max_pairs: 6 }).unwrap();
        assert_eq!(rep.value, opt);
        assert!(verify_routing(&inst, &rep.routing, 1).feasible);
    }

    #[test]
    fn nested_pairs_tree_routes_two() {
        // 8-node tree, three pairwise-conflicting-except-one pairs
        let g = Graph::with_edges(
            8,
            &[(0, 1), (0, 2), (1, 3), (1, 4), (2, 5), (2, 6), (0, 7)],
        );
        let raw = Instance {
            graph: g,
            pairs: vec![(3, 4), (5, 6), (7, 1)],
            mode: Mode::NodeDisjoint,
        };
        let inst = normalize_instance(&raw).unwrap().instance;
        let (opt, _) = exact_opt(&inst, Guard { max_nodes: 20, max_pairs: 6 }).unwrap();
        assert_eq!(opt, 2);
        let rep = maxndp_fpt(&inst).unwrap();
        assert_eq!(rep.value, 2);
        assert!(verify_routing(&inst, &rep.routing, 1).feasible);
    }

    #[test]
    fn unrealizable_structure_is_minus_infinity() {
        // R node with forest neighbors only on one side of the chain
        let g = Graph::with_edges(3, &[(0, 1), (1, 2)]);
        let inst = norm(g, vec![(0, 2)]);
        // R = {1}: chain (1) realizable; a fabricated chain over a node
        // with no attachment is not
        let prep = preprocess_ndp(&inst, &[1]).unwrap();
        let good = EssentialStructure { chains: vec![(0, vec![1])] };
        assert!(dp_solve(&prep, &good).is_some());
        let rep = maxndp_fpt(&inst).unwrap();
        assert_eq!(rep.value, 1);
    }

    #[test]
    fn matches_oracle_on_random_suite() {
        for seed in 0..40u64 {
            let inst = gen_random_fvs(9, 2, 6, 3, 500 + seed, Mode::NodeDisjoint);
            let (opt, _) = exact_opt(&inst, Guard { max_nodes: 30, max_pairs: 6 }).unwrap();
            let rep = maxndp_fpt(&inst).unwrap();
            assert_eq!(rep.value, opt, "seed {seed}");
            let ver = verify_routing(&inst, &rep.routing, 1);
            assert!(ver.feasible, "seed {seed}: {:?}", ver.violations);
            assert_eq!(rep.routing.size(), rep.value, "seed {seed}");
        }
    }

    #[test]
    fn monotonicity_of_table_states() {
        let inst = gen_random_fvs(8, 2, 5, 3, 77, Mode::NodeDisjoint);
        let fvs = choose_fvs(&inst.graph);
        let prep = preprocess_ndp(&inst, &fvs.nodes).unwrap();
        for s in enumerate_essential_structures(inst.pairs.len(), &fvs.nodes).take(40) {
            let ctx = DpCtx::new(&prep, &s);
            let mut finals: HashMap<usize, Table> = HashMap::new();
            for &v in &prep.postorder {
                let tabs = ctx.sweep(v, &finals);
                for t in &tabs {
                    for (&(m, u, b), &val) in t {
                        if b == TBU {
                            let f = t.get(&(m, U_NONE, FREE));
                            assert!(f.is_some_and(|&fv| fv >= val), "free >= tbu");
                            let _ = u;
                        }
                        if b == FREE {
                            let bl = t.get(&(m, U_NONE, BLOCKED));
                            assert!(bl.is_some_and(|&bv| bv >= val), "blocked >= free");
                        }
                    }
                }
                let mut tabs = tabs;
                finals.insert(v, tabs.pop().unwrap());
            }
        }
    }
}
