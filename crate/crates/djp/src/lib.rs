//! Solvers for maximum edge- and node-disjoint paths on undirected graphs,
//! organized around the feedback vertex set number: a multi-commodity flow
//! LP with path decomposition, low-congestion randomized rounding via
//! flow aggregation, a sqrt(r)-style approximation without congestion, an
//! exact fixed-parameter dynamic program for node-disjoint routing, plus
//! exact oracles and instance generators for verification.

pub mod edp;
pub mod fvs;
pub mod gen;
pub mod graph;
pub mod io;
pub mod lp;
pub mod ndp;
pub mod oracle;
pub mod rounding;

pub use graph::{
    contract_edge, normalize_instance, verify_routing, Graph, Instance, Mode, PathSeq, Routing,
};
