//! Occupation network analysis.
//!
//! Parses transcribed occupational-dictionary editions into structured
//! records, builds weighted job-similarity networks, labels jobs as
//! physical or cognitive, and measures how strongly the two classes
//! separate in each network over time.

pub mod classifier;
pub mod corpus;
pub mod embedding;
pub mod error;
pub mod graph;
pub mod longitudinal;
pub mod louvain;
pub mod polarization;
pub mod rng;
pub mod stats;
pub mod synthetic;
pub mod text;

pub use error::{Error, Result};
