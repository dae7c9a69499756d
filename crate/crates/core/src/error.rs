use crate::model::{Event, StationIx, Tick, TrainIx};
use thiserror::Error;

/// Identifies a timing parameter that an operation needed but did not find.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ParamKey {
    Pass {
        train: TrainIx,
        from: StationIx,
        to: StationIx,
    },
    Blocks {
        train: TrainIx,
        from: StationIx,
        to: StationIx,
    },
    Stop {
        train: TrainIx,
        station: StationIx,
    },
    Prep {
        inbound: TrainIx,
        outbound: TrainIx,
        station: StationIx,
    },
    Res {
        first: TrainIx,
        second: TrainIx,
        station: StationIx,
    },
    DMax {
        train: TrainIx,
    },
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum Error {
    #[error("missing timing parameter {0:?}")]
    MissingParameter(ParamKey),
    #[error("{free} free precedence variables exceed the enumeration cap of {cap}; use the annealing path")]
    EnumerationCap { free: usize, cap: usize },
    #[error("{states} one-hot assignments exceed the enumeration cap of {cap}")]
    OneHotCap { states: u128, cap: u128 },
    #[error("{n} variables exceed the full enumeration limit of {limit}")]
    FullEnumerationCap { n: usize, limit: usize },
    #[error("bit vector has length {got}, model has {expected} variables")]
    LengthMismatch { expected: usize, got: usize },
    #[error("departure {event:?} at {time} lies outside its window [{earliest}, {latest}]")]
    OutsideWindow {
        event: Event,
        time: Tick,
        earliest: Tick,
        latest: Tick,
    },
    #[error("no departure given for {0:?}")]
    MissingDeparture(Event),
    #[error("train {0} has no route")]
    EmptyRoute(TrainIx),
    #[error("invalid anneal parameters: {0}")]
    AnnealParams(&'static str),
    #[error("solver failed at iteration {iteration}: {source}")]
    Iteration {
        iteration: usize,
        #[source]
        source: alloc::boxed::Box<Error>,
    },
}

pub type Result<T> = core::result::Result<T, Error>;
