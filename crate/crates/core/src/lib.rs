//! Train dispatching as a precedence model and as a QUBO, with exact and
//! annealing solvers and a rerouting loop on top.
//!
//! Times are integer ticks on a grid of `1 / resolution` minutes.

#![no_std]

extern crate alloc;

pub mod builder;
pub mod conflicts;
pub mod delays;
pub mod dispatch;
pub mod error;
pub mod fixture;
pub mod linear;
pub mod model;
pub mod qubo;
pub mod solve;
pub mod validate;

pub use builder::{BuildError, InstanceBuilder};
pub use conflicts::{derive_conflict_sets, Conflict, ConflictSets, Family};
pub use delays::{departure_windows, propagate_unavoidable_delays, Window};
pub use error::{Error, ParamKey, Result};
pub use model::*;
pub use validate::{validate_instance, Diagnostic};
