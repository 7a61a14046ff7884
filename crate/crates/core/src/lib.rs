//! Unsupervised early-fault detection for rolling-element bearings.
//!
//! The pipeline turns raw vibration records into 300-point sub-samples,
//! describes each window with 23 condition indexes, links the windows into a
//! weighted k-nearest-neighbour digraph, and trains a two-layer autoencoder
//! that propagates features along that graph. Windows the network reconstructs
//! worst are reported as faults.
//!
//! ```text
//! ingest -> features -> graph -> gnn -> eval
//!                           \-> baselines (AE / LOF / COF) -/
//! ```

pub mod baselines;
pub mod error;
pub mod eval;
pub mod features;
pub mod gnn;
pub mod graph;
pub mod ingest;
pub mod io;
mod linalg;
pub mod rng;

pub use error::{Error, Result};
