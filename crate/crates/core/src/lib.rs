//! Character decision point detection toolkit.
//!
//! Builds a binary prefix/postfix classification dataset from branching game
//! graphs, trains and serves boundary scorers, evaluates them, and segments
//! long narrative text at the boundaries a scorer marks as branching points.

pub mod cli;
pub mod config;
pub mod dataset;
pub mod eval;
pub mod graph;
pub mod import;
pub mod manifest;
pub mod text;
pub mod scorer;
pub mod segmenter;
