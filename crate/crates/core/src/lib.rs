//! Boolean open-QA benchmark synthesis and evaluation for directional
//! predicate entailment.

pub mod config;
pub mod corpus;
pub mod error;
pub mod graph;
pub mod harness;
pub mod lexicon;
pub mod manifest;
pub mod mesh;
pub mod metrics;
pub mod synthesis;
pub mod text;

pub use error::{Error, Result};
