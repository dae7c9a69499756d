//! File formats, exports and the command line front end for `railqubo-core`.

pub mod cli;
pub mod export;
pub mod load;
pub mod names;
pub mod parallel;
pub mod qubo_io;
pub mod report;

pub use railqubo_core as core;
