//! Edge-cloud task scheduling simulator.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: clusters, workloads, assignments and the objective arithmetic.
//! - [`schedulers`] and [`oracle`]: heuristic baselines and exhaustive search.
//! - [`env`]: the sequential assignment MDP (state encoding, rewards, episodes).
//! - [`nn`]: a small fully-connected network with manual backprop.
//! - [`dqn`]: replay buffer, epsilon-greedy agent, training and rollouts.
//! - [`harness`] and [`plot`]: experiment runs, CSV output and SVG charts.
//!
//! Everything is deterministic for a fixed seed; see `examples/` for one
//! runnable program per capability.

pub mod dqn;
pub mod env;
pub mod error;
pub mod harness;
pub mod model;
pub mod nn;
pub mod oracle;
pub mod plot;
pub mod schedulers;

mod rng;

pub use error::{Error, Result};
