//! Exact simulation of a partial, deterministic, non-demolition Bell
//! measurement and the partial teleportation protocol built on top of it.
//!
//! The crate is organised bottom-up:
//!
//! * [`qsim`] holds the few-qubit state-vector and density-matrix machinery.
//! * [`ancilla`] prepares the two-qubit resource that sets how strongly the
//!   measurement discriminates the Bell states.
//! * [`pnbm`] contains the measurement itself, both as Kraus operators and as
//!   a gate network.
//! * [`teleport`] runs the partial teleportation protocol and the fidelity
//!   bounds it is compared against.
//! * [`analysis`] covers the information/disturbance trade-off of the
//!   measurement, including a Haar Monte-Carlo estimator.
//! * [`cv`] is the continuous-variable version of the protocol in the
//!   Heisenberg picture, with a Gaussian covariance oracle.
//! * [`sweep`] builds the parameter-sweep tables used by the CLI.
//!
//! Data-parallel loops (sweep rows, Monte-Carlo blocks) go through
//! [`exec::Execution`]; with the `parallel` feature disabled every loop runs
//! sequentially and produces bit-identical output.

pub mod analysis;
pub mod ancilla;
pub mod cv;
mod error;
pub mod exec;
pub mod labels;
pub mod pnbm;
pub mod qsim;
pub mod sweep;
pub mod teleport;

pub use error::{Error, Result};
pub use exec::Execution;
