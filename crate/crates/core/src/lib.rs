//! Prior-informed graph rewiring for message-passing neural networks.
//!
//! The crate is organised bottom-up:
//!
//! - [`graph`]: simple undirected graphs, traversal and the edge-list text format.
//! - [`cayley`]: Cayley graphs of SL(2, Z_n) and BFS trimming to arbitrary sizes.
//! - [`rewire`]: the rewirer zoo, greedy alignment and interleave schedules.
//! - [`spectral`]: effective resistance, commute time, spectral gap, diameter.
//! - [`synthdata`]: the salient-pair (A) and community (B) regression benchmarks.
//! - [`nn`]: a small GIN with hand-written reverse-mode gradients and Adam.
//! - [`harness`]: experiment configs, sweeps, ratio summaries and charts.

pub mod cayley;
pub mod error;
pub mod graph;
pub mod harness;
pub mod matrix;
pub mod nn;
pub mod rewire;
pub mod spectral;
pub mod synthdata;

pub use error::{Error, Result};
pub use graph::{DistanceMatrix, Graph};
pub use matrix::Matrix;
