//! Multiscale training of graph neural networks.
//!
//! Small GCN/GIN models are trained on a hierarchy of reduced graphs
//! (coarse-to-fine and sub-to-full schedules) or with a telescopic
//! multiscale estimate of the fine-graph loss. The crate also carries the
//! FLOP model, a least squares harness for the reduced-graph bound, and
//! synthetic dataset generators.

pub mod coarsening;
pub mod datasets;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod io;
pub mod matrix;
pub mod telescope;
pub mod theory;
pub mod trainers;

pub use error::{Error, Result};
