//! Standard-library companion to `persianrag-core`: JSON Lines formats,
//! `PRAG1` index files, HTTP clients for remote embedders, rerankers and
//! generators, parallel evaluation and sweeps, and the command line.

pub mod cli;
pub mod config;
pub mod formats;
pub mod par;
pub mod persist;
pub mod remote;
pub mod runner;

pub use persianrag_core as core;
