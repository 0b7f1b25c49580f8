//! Line-based text formats for instances and routings.
//!
//! Instance files: `p djp <edp|ndp> <n> <m> <k>` header, one `e <u> <v>`
//! line per edge, one `q <s> <t>` line per pair, `#` comments. Node ids are
//! 1-indexed in files and 0-indexed in memory.
//!
//! Routing files: `value <count>`, `congestion <int>`, then one
//! `r <pair> <v0> <v1> ... <vL>` line per routed pair (pair and nodes
//! 1-indexed).

use std::fmt::Write as _;

use thiserror::Error;

use crate::graph::{Graph, Instance, Mode, NodeId, PathSeq, Routing};

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("missing `p djp` header")]
    MissingHeader,
    #[error("line {line}: node id {id} out of range 1..={max}")]
    NodeRange { line: usize, id: usize, max: usize },
    #[error("declared {declared} {what}, found {found}")]
    CountMismatch { what: &'static str, declared: usize, found: usize },
    #[error("routing line {line}: no live edge between {u} and {v}")]
    NoSuchEdge { line: usize, u: usize, v: usize },
    #[error("routing line {line}: pair index {idx} out of range")]
    PairRange { line: usize, idx: usize },
}

fn syntax(line: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Syntax { line, msg: msg.into() }
}

pub fn parse_instance(text: &str) -> Result<Instance, ParseError> {
    let mut header: Option<(Mode, usize, usize, usize)> = None;
    let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
    let mut pairs: Vec<(NodeId, NodeId)> = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let tok: Vec<&str> = l.split_whitespace().collect();
        match tok[0] {
            "p" => {
                if tok.len() != 6 || tok[1] != "djp" {
                    return Err(syntax(line, "expected `p djp <edp|ndp> <n> <m> <k>`"));
                }
                let mode = match tok[2] {
                    "edp" => Mode::EdgeDisjoint,
                    "ndp" => Mode::NodeDisjoint,
                    other => return Err(syntax(line, format!("unknown mode `{other}`"))),
                };
                let n = tok[3].parse().map_err(|_| syntax(line, "bad node count"))?;
                let m = tok[4].parse().map_err(|_| syntax(line, "bad edge count"))?;
                let k = tok[5].parse().map_err(|_| syntax(line, "bad pair count"))?;
                header = Some((mode, n, m, k));
            }
            "e" | "q" => {
                let (_, n, _, _) = header.ok_or(ParseError::MissingHeader)?;
                if tok.len() != 3 {
                    return Err(syntax(line, "expected two node ids"));
                }
                let mut ids = [0usize; 2];
                for (slot, t) in tok[1..].iter().enumerate() {
                    let id: usize = t.parse().map_err(|_| syntax(line, "bad node id"))?;
                    if id == 0 || id > n {
                        return Err(ParseError::NodeRange { line, id, max: n });
                    }
                    ids[slot] = id - 1;
                }
                if tok[0] == "e" {
                    edges.push((ids[0], ids[1]));
                } else {
                    pairs.push((ids[0], ids[1]));
                }
            }
            other => return Err(syntax(line, format!("unknown record `{other}`"))),
        }
    }
    let (mode, n, m, k) = header.ok_or(ParseError::MissingHeader)?;
    if edges.len() != m {
        return Err(ParseError::CountMismatch { what: "edges", declared: m, found: edges.len() });
    }
    if pairs.len() != k {
        return Err(ParseError::CountMismatch { what: "pairs", declared: k, found: pairs.len() });
    }
    Ok(Instance { graph: Graph::with_edges(n, &edges), pairs, mode })
}

pub fn format_instance(inst: &Instance) -> String {
    let g = &inst.graph;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "p djp {} {} {} {}",
        inst.mode,
        g.node_count(),
        g.live_edge_count(),
        inst.pairs.len()
    );
    for e in g.live_edges() {
        let (u, v) = g.raw_endpoints(e);
        let _ = writeln!(out, "e {} {}", u + 1, v + 1);
    }
    for &(s, t) in &inst.pairs {
        let _ = writeln!(out, "q {} {}", s + 1, t + 1);
    }
    out
}

pub fn format_routing(r: &Routing, congestion: usize) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "value {}", r.entries.len());
    let _ = writeln!(out, "congestion {congestion}");
    for (idx, path) in &r.entries {
        let _ = write!(out, "r {}", idx + 1);
        for &v in &path.nodes {
            let _ = write!(out, " {}", v + 1);
        }
        let _ = writeln!(out);
    }
    out
}

/// Parse a routing against its instance. Edge ids are reconstructed from
/// consecutive node pairs, preferring the lowest-id live edge not already
/// used on the same path.
pub fn parse_routing(inst: &Instance, text: &str) -> Result<Routing, ParseError> {
    let g = &inst.graph;
    let n = g.node_count();
    let mut entries = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let tok: Vec<&str> = l.split_whitespace().collect();
        match tok[0] {
            "value" | "congestion" => continue,
            "r" => {
                if tok.len() < 3 {
                    return Err(syntax(line, "expected `r <pair> <v0> <v1> ...`"));
                }
                let idx: usize = tok[1].parse().map_err(|_| syntax(line, "bad pair index"))?;
                if idx == 0 || idx > inst.pairs.len() {
                    return Err(ParseError::PairRange { line, idx });
                }
                let mut nodes = Vec::with_capacity(tok.len() - 2);
                for t in &tok[2..] {
                    let id: usize = t.parse().map_err(|_| syntax(line, "bad node id"))?;
                    if id == 0 || id > n {
                        return Err(ParseError::NodeRange { line, id, max: n });
                    }
                    nodes.push(id - 1);
                }
                let mut edges = Vec::with_capacity(nodes.len().saturating_sub(1));
                for w in nodes.windows(2) {
                    let pick = g.live_edges().find(|&e| {
                        let (a, b) = g.raw_endpoints(e);
                        ((a, b) == (w[0], w[1]) || (a, b) == (w[1], w[0]))
                            && !edges.contains(&e)
                    });
                    match pick {
                        Some(e) => edges.push(e),
                        None => {
                            return Err(ParseError::NoSuchEdge { line, u: w[0] + 1, v: w[1] + 1 })
                        }
                    }
                }
                entries.push((idx - 1, PathSeq { nodes, edges }));
            }
            other => return Err(syntax(line, format!("unknown record `{other}`"))),
        }
    }
    Ok(Routing { entries })
}
