//! orientforge: a workbench for the chain of reductions from 3-SAT through
//! partial graph orientation (prescribed in-, out-, and undirected degrees,
//! both bounded by 1) to edge-disjoint path packing with paths of length
//! exactly 3, on simple graphs.
//!
//! The crate provides:
//!
//! - a shared graph data model with orientation and packing checkers
//!   ([`graph`]),
//! - bit-exact text formats for instances and certificates ([`formats`]),
//! - exhaustive and backtracking exact solvers ([`oracle`]),
//! - gadget constructors, a verified gadget store, a gadget synthesizer,
//!   and mirror completion ([`gadgets`]),
//! - the two reductions with witness translation in both directions
//!   ([`reductions`]),
//! - seeded generators and the equivalence experiment harness ([`harness`]),
//! - the command-line interface ([`cli`]).

pub mod cli;
pub mod formats;
pub mod gadgets;
pub mod graph;
pub mod harness;
pub mod oracle;
pub mod reductions;
