#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::type_complexity)]

//! Simulation and verification toolkit for piecewise-deterministic Markov
//! processes: switched ODEs, branching populations with a spine, fast
//! switching averages and a gene-expression cell-cycle model.

pub mod branching;
pub mod config;
pub mod error;
pub mod gene;
pub mod ifire;
pub mod linalg;
pub mod mc;
pub mod pdmp;
pub mod rng;
pub mod runner;
pub mod stats;
pub mod switched;

pub use error::{Error, Result};
pub use rng::{RngStream, SimRng};
