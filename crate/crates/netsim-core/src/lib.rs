//! Simulation of SI and SIS contact processes on graphs.
//!
//! Two engines advance the same Markov process:
//!
//! * [`des`] samples the continuous-time chain exactly, one event at a time.
//! * [`dts`] batches all events of an interval of length `h` into one
//!   synchronous update.
//!
//! [`coupling`] drives both from one stream of per-step random blocks so the
//! pathwise gap between them (global error, local error, dominance) can be
//! measured directly, and [`bounds`] evaluates the closed-form error bounds
//! and the negative-binomial machinery used to check them.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

pub mod bounds;
pub mod coupling;
pub mod des;
pub mod dts;
pub mod graph;
pub mod process;
pub mod rng;

mod indexed_set;

pub use bounds::{BoundInputs, ErrorBound, NegBinomial};
pub use coupling::{run_coupled, CoupledPath, RandomBlock};
pub use des::{run_des, DesOptions, Trajectory};
pub use dts::{run_dts, DtsConfig, DtsTrajectory, StepPolicy};
pub use graph::{Graph, GraphError, GraphKind, GraphSpec};
pub use process::{InfectionState, InitSpec, ProcessKind, ProcessParams};
