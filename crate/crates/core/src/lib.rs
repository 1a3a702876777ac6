//! Statevector simulation of a distributed variational quantum linear solver.
//!
//! A `2^n × 2^n` system `Ax = b` given as a real Pauli sum is split into an
//! `m × m` grid of blocks, one agent per block. Agents hold variational
//! states for their slice of the solution and coordinate with row and
//! column neighbors through gradient tracking and Adam updates.
//!
//! The crate is `no_std` with `alloc`; file formats and the command line
//! live in the `dvqls` crate.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod ansatz;
pub mod circuit;
pub mod error;
pub mod estimator;
pub mod graph;
pub mod mailbox;
pub mod metrics;
pub mod optimizer;
pub mod pauli;
pub mod problems;
pub mod seed;
pub mod spectral;
pub mod statevector;

pub use ansatz::{AnsatzConfig, AugmentedParams};
pub use circuit::{Circuit, Gate, StatePrep};
pub use error::{Error, Result};
pub use estimator::{EstimatorMode, LocalCostInputs, LocalGradient};
pub use graph::{NeighborGraph, Topology};
pub use metrics::RunRecord;
pub use optimizer::{AgentState, BetaGradient, Network, OptimizerConfig, RunSetup, Variant};
pub use pauli::{LcuOperator, Pauli, PauliString, PauliTerm};
pub use problems::{LinearSystem, ProblemInstance, SplitRule};
pub use statevector::Statevector;
