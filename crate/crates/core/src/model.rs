//! Problem statement: infrastructure, trains, timetable, timing parameters,
//! the disturbance scenario and the routing that places trains on resources.
//!
//! All times are integer grid ticks (`minutes * resolution`). Entities refer to
//! each other through dense index newtypes; string ids are kept for reporting.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Time on the discretisation grid, in units of `1 / resolution` minutes.
pub type Tick = i64;

macro_rules! index_type {
    ($(#[$m:meta])* $name:ident) => {
        $(#[$m])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub usize);

        impl $name {
            #[inline]
            pub fn get(self) -> usize {
                self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}#{}", stringify!($name), self.0)
            }
        }
    };
}

index_type!(
    /// Position of a station in [`DispatchInstance::stations`].
    StationIx
);
index_type!(
    /// Position of a train in [`DispatchInstance::trains`].
    TrainIx
);
index_type!(
    /// Position of a line segment in [`DispatchInstance::segments`].
    SegmentIx
);
index_type!(
    /// Track of a line segment, indexing [`LineSegment::tracks`].
    LineTrackIx
);
index_type!(
    /// Station (platform) track, indexing [`Station::tracks`].
    StationTrackIx
);
index_type!(
    /// Switch group of a station, indexing [`Station::switch_groups`].
    SwitchGroupIx
);

#[derive(Clone, Debug, PartialEq)]
pub struct Station {
    pub id: String,
    pub tracks: Vec<String>,
    pub switch_groups: Vec<String>,
    /// Switch groups used by the entry/exit paths of each station track,
    /// aligned with `tracks`. An empty entry means the track has no modelled switches.
    pub track_switch_groups: Vec<BTreeSet<SwitchGroupIx>>,
}

impl Station {
    pub fn track_by_id(&self, id: &str) -> Option<StationTrackIx> {
        self.tracks.iter().position(|t| t == id).map(StationTrackIx)
    }

    pub fn switch_group_by_id(&self, id: &str) -> Option<SwitchGroupIx> {
        self.switch_groups
            .iter()
            .position(|g| g == id)
            .map(SwitchGroupIx)
    }
}

/// Directions in which a line track may be used, relative to the segment's
/// `from -> to` orientation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TrackDirection {
    Forward,
    Backward,
    Both,
}

impl TrackDirection {
    pub fn allows(self, travel: Travel) -> bool {
        matches!(
            (self, travel),
            (TrackDirection::Both, _)
                | (TrackDirection::Forward, Travel::Forward)
                | (TrackDirection::Backward, Travel::Backward)
        )
    }
}

/// Direction of a movement over a segment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Travel {
    Forward,
    Backward,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LineTrack {
    pub id: String,
    pub direction: TrackDirection,
}

/// Open line between two stations. Two one-way tracks in opposite directions
/// form a double-track line; one bidirectional track is a single-track line.
#[derive(Clone, Debug, PartialEq)]
pub struct LineSegment {
    pub from: StationIx,
    pub to: StationIx,
    pub tracks: Vec<LineTrack>,
}

impl LineSegment {
    pub fn track_by_id(&self, id: &str) -> Option<LineTrackIx> {
        self.tracks.iter().position(|t| t.id == id).map(LineTrackIx)
    }
}

/// Scheduled arrival and departure at one stop of a route.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StopTimes {
    pub arrival: Option<Tick>,
    pub departure: Option<Tick>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Train {
    pub id: String,
    /// Priority weight in the objective.
    pub weight: f64,
    pub route: Vec<StationIx>,
    /// Timetable aligned with `route`. A train departs a station iff it has a
    /// scheduled departure there; the last stop may or may not have one.
    pub schedule: Vec<StopTimes>,
    /// Whether the departure delay at each stop enters the objective, aligned with `route`.
    pub counted: Vec<bool>,
}

impl Train {
    pub fn position(&self, station: StationIx) -> Option<usize> {
        self.route.iter().position(|&s| s == station)
    }

    pub fn departs(&self, station: StationIx) -> bool {
        self.position(station).is_some_and(|p| {
            self.schedule
                .get(p)
                .is_some_and(|st| st.departure.is_some())
        })
    }

    /// Station preceding `station` on the route, if the train arrives there from somewhere.
    pub fn previous(&self, station: StationIx) -> Option<StationIx> {
        let p = self.position(station)?;
        p.checked_sub(1).map(|q| self.route[q])
    }

    pub fn arrives(&self, station: StationIx) -> bool {
        self.previous(station).is_some()
    }

    pub fn is_counted(&self, station: StationIx) -> bool {
        self.position(station)
            .is_some_and(|p| self.counted.get(p).copied().unwrap_or(true))
    }

    /// Consecutive station pairs `(s, s')` travelled by the train.
    pub fn legs(&self) -> impl Iterator<Item = (StationIx, StationIx)> + '_ {
        self.route.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn first_station(&self) -> Option<StationIx> {
        self.route.first().copied()
    }

    pub fn last_station(&self) -> Option<StationIx> {
        self.route.last().copied()
    }
}

/// Minimum durations, all in ticks.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TimingParams {
    /// Running time of a train between consecutive stations.
    pub pass: BTreeMap<(TrainIx, StationIx, StationIx), Tick>,
    /// Time until a train releases the line blocks behind it for a follower at full speed.
    pub blocks: BTreeMap<(TrainIx, StationIx, StationIx), Tick>,
    /// Minimum dwell time at a station.
    pub stop: BTreeMap<(TrainIx, StationIx), Tick>,
    /// Rolling stock preparation time: inbound train, outbound train, station.
    /// Every entry declares a turnaround.
    pub prep: BTreeMap<(TrainIx, TrainIx, StationIx), Tick>,
    /// Occupation time of a shared station resource: first train, second train, station.
    pub res: BTreeMap<(TrainIx, TrainIx, StationIx), Tick>,
    /// Fallback for `res` entries that are not listed.
    pub res_default: Option<Tick>,
}

impl TimingParams {
    pub fn pass(&self, train: TrainIx, from: StationIx, to: StationIx) -> Option<Tick> {
        self.pass.get(&(train, from, to)).copied()
    }

    pub fn blocks(&self, train: TrainIx, from: StationIx, to: StationIx) -> Option<Tick> {
        self.blocks.get(&(train, from, to)).copied()
    }

    pub fn stop(&self, train: TrainIx, station: StationIx) -> Option<Tick> {
        self.stop.get(&(train, station)).copied()
    }

    pub fn prep(&self, inbound: TrainIx, outbound: TrainIx, station: StationIx) -> Option<Tick> {
        self.prep.get(&(inbound, outbound, station)).copied()
    }

    pub fn res(&self, first: TrainIx, second: TrainIx, station: StationIx) -> Option<Tick> {
        self.res
            .get(&(first, second, station))
            .copied()
            .or(self.res_default)
    }
}

/// Disturbance scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    /// Primary delay of a departure relative to the timetable.
    pub primary_delay: BTreeMap<(TrainIx, StationIx), Tick>,
    /// Maximal acceptable secondary delay per train.
    pub d_max: BTreeMap<TrainIx, Tick>,
    /// Grid points per minute.
    pub resolution: u32,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            primary_delay: BTreeMap::new(),
            d_max: BTreeMap::new(),
            resolution: 1,
        }
    }
}

/// The immutable problem statement.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DispatchInstance {
    pub stations: Vec<Station>,
    pub segments: Vec<LineSegment>,
    pub trains: Vec<Train>,
    pub timing: TimingParams,
    pub scenario: Scenario,
}

impl DispatchInstance {
    pub fn station(&self, s: StationIx) -> &Station {
        &self.stations[s.0]
    }

    pub fn train(&self, j: TrainIx) -> &Train {
        &self.trains[j.0]
    }

    pub fn segment(&self, k: SegmentIx) -> &LineSegment {
        &self.segments[k.0]
    }

    pub fn station_by_id(&self, id: &str) -> Option<StationIx> {
        self.stations.iter().position(|s| s.id == id).map(StationIx)
    }

    pub fn train_by_id(&self, id: &str) -> Option<TrainIx> {
        self.trains.iter().position(|t| t.id == id).map(TrainIx)
    }

    pub fn train_ids(&self) -> impl Iterator<Item = TrainIx> {
        (0..self.trains.len()).map(TrainIx)
    }

    /// Segment connecting `a` and `b` together with the direction of travel `a -> b`.
    pub fn segment_between(&self, a: StationIx, b: StationIx) -> Option<(SegmentIx, Travel)> {
        self.segments.iter().enumerate().find_map(|(k, seg)| {
            if seg.from == a && seg.to == b {
                Some((SegmentIx(k), Travel::Forward))
            } else if seg.from == b && seg.to == a {
                Some((SegmentIx(k), Travel::Backward))
            } else {
                None
            }
        })
    }

    /// Every `(train, station)` at which a departure is decided, in train order
    /// and then route order.
    pub fn departure_events(&self) -> Vec<Event> {
        let mut out = Vec::new();
        for (j, train) in self.trains.iter().enumerate() {
            for (p, &s) in train.route.iter().enumerate() {
                if train
                    .schedule
                    .get(p)
                    .is_some_and(|st| st.departure.is_some())
                {
                    out.push(Event {
                        train: TrainIx(j),
                        station: s,
                    });
                }
            }
        }
        out
    }

    pub fn d_max(&self, train: TrainIx) -> Option<Tick> {
        self.scenario.d_max.get(&train).copied()
    }
}

/// Departure of a train from a station.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Event {
    pub train: TrainIx,
    pub station: StationIx,
}

impl Event {
    pub fn new(train: TrainIx, station: StationIx) -> Self {
        Event { train, station }
    }
}

/// Assignment of trains to line tracks, station tracks and station paths.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Routing {
    pub line_track: BTreeMap<(TrainIx, SegmentIx), LineTrackIx>,
    pub station_track: BTreeMap<(TrainIx, StationIx), StationTrackIx>,
    pub station_path: BTreeMap<(TrainIx, StationIx), BTreeSet<SwitchGroupIx>>,
}

impl Routing {
    pub fn line_track(&self, train: TrainIx, segment: SegmentIx) -> Option<LineTrackIx> {
        self.line_track.get(&(train, segment)).copied()
    }

    pub fn station_track(&self, train: TrainIx, station: StationIx) -> Option<StationTrackIx> {
        self.station_track.get(&(train, station)).copied()
    }

    pub fn station_path(
        &self,
        train: TrainIx,
        station: StationIx,
    ) -> Option<&BTreeSet<SwitchGroupIx>> {
        self.station_path.get(&(train, station))
    }
}

/// Unordered train pair, stored with the smaller index first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TrainPair(TrainIx, TrainIx);

impl TrainPair {
    pub fn new(a: TrainIx, b: TrainIx) -> Self {
        if a <= b {
            TrainPair(a, b)
        } else {
            TrainPair(b, a)
        }
    }

    pub fn first(self) -> TrainIx {
        self.0
    }

    pub fn second(self) -> TrainIx {
        self.1
    }

    pub fn contains(self, j: TrainIx) -> bool {
        self.0 == j || self.1 == j
    }

    pub fn other(self, j: TrainIx) -> TrainIx {
        if self.0 == j {
            self.1
        } else {
            self.0
        }
    }
}
