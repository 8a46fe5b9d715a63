//! Multi-scale community structure and fragmentation scoring for co-follow
//! networks.
//!
//! The crate turns a bipartite follower edge list into a weighted co-follow
//! graph, detects communities across a sweep of Markov scales, selects the
//! robust scales into a multilevel hierarchy, and scores how communities
//! fragment between adjacent levels. Companion modules test whether
//! communities that share a parent are more alike in ideology or social
//! identity than communities that do not, and whether ideology and identity
//! labels are associated at all.
//!
//! Everything downstream of a root seed is deterministic: repeated runs with
//! the same inputs, configuration, and seed produce byte-identical reports.

#![forbid(unsafe_code)]

pub mod attributes;
pub mod bipartite;
pub mod error;
pub mod fragmentation;
pub mod graph;
pub mod hierarchy;
pub mod io;
pub mod pipeline;
pub mod seed;
pub mod similarity;
pub mod stability;
pub mod stats;
pub mod synth;

pub use error::Error;

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;
