//! Conflict sets induced by shared resources under a routing.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::model::{
    DispatchInstance, LineTrackIx, Routing, SegmentIx, StationIx, StationTrackIx, SwitchGroupIx,
    TrackDirection, TrainIx, TrainPair, Travel,
};

/// Condition families shared by the linear and the QUBO encodings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    Window,
    Span,
    SingleTrack,
    Stay,
    Circulation,
    TrackOccupancy,
    Switch,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Window => "window",
            Family::Span => "minimal-span",
            Family::SingleTrack => "single-track",
            Family::Stay => "minimal-stay",
            Family::Circulation => "rolling-stock",
            Family::TrackOccupancy => "track-occupancy",
            Family::Switch => "switch-occupancy",
        }
    }
}

/// A condition coupling two trains at one resource.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Conflict {
    /// Both trains run `from -> to` on the same line track.
    Span {
        pair: TrainPair,
        segment: SegmentIx,
        track: LineTrackIx,
        from: StationIx,
        to: StationIx,
    },
    /// Opposite directions on one bidirectional track; `forward` runs along the
    /// segment's orientation.
    SingleTrack {
        forward: TrainIx,
        backward: TrainIx,
        segment: SegmentIx,
        track: LineTrackIx,
    },
    /// Both trains arrive at and depart from the same station track.
    StationTrack {
        pair: TrainPair,
        station: StationIx,
        track: StationTrackIx,
    },
    /// The trains' paths through the station share at least one switch group.
    Switch { pair: TrainPair, station: StationIx },
    /// `inbound` terminates at `station` and its rolling stock leaves as `outbound`.
    Circulation {
        inbound: TrainIx,
        outbound: TrainIx,
        station: StationIx,
    },
}

impl Conflict {
    pub fn family(&self) -> Family {
        match self {
            Conflict::Span { .. } => Family::Span,
            Conflict::SingleTrack { .. } => Family::SingleTrack,
            Conflict::StationTrack { .. } => Family::TrackOccupancy,
            Conflict::Switch { .. } => Family::Switch,
            Conflict::Circulation { .. } => Family::Circulation,
        }
    }

    pub fn trains(&self) -> (TrainIx, TrainIx) {
        match *self {
            Conflict::Span { pair, .. }
            | Conflict::StationTrack { pair, .. }
            | Conflict::Switch { pair, .. } => (pair.first(), pair.second()),
            Conflict::SingleTrack {
                forward, backward, ..
            } => (forward, backward),
            Conflict::Circulation {
                inbound, outbound, ..
            } => (inbound, outbound),
        }
    }

    pub fn involves(&self, j: TrainIx) -> bool {
        let (a, b) = self.trains();
        a == j || b == j
    }

    /// Whether a rerouting move can separate the two trains.
    pub fn is_routable(&self) -> bool {
        !matches!(self, Conflict::Circulation { .. })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConflictSets {
    pub same_direction: BTreeMap<(SegmentIx, LineTrackIx), BTreeSet<TrainPair>>,
    /// Ordered `(forward, backward)` pairs per bidirectional track.
    pub single_track_opposite: BTreeMap<(SegmentIx, LineTrackIx), BTreeSet<(TrainIx, TrainIx)>>,
    pub shared_station_track: BTreeMap<(StationIx, StationTrackIx), BTreeSet<TrainIx>>,
    /// Pairs sharing a switch group, excluding pairs already sharing a station track there.
    pub shared_switch: BTreeMap<(StationIx, SwitchGroupIx), BTreeSet<TrainPair>>,
    /// Ordered `(inbound, outbound)` turnaround pairs per station.
    pub rolling_stock_pairs: BTreeMap<StationIx, BTreeSet<(TrainIx, TrainIx)>>,
    /// Legs travelled by both trains, in the direction of the pair's first train.
    pub common_path: BTreeMap<TrainPair, BTreeSet<(StationIx, StationIx)>>,
    conflicts: Vec<Conflict>,
}

impl ConflictSets {
    /// Flat, deterministic list of every two-train condition.
    pub fn conflicts(&self) -> &[Conflict] {
        &self.conflicts
    }

    pub fn is_empty(&self) -> bool {
        self.conflicts.is_empty()
    }
}

fn leg_travel(
    instance: &DispatchInstance,
    a: StationIx,
    b: StationIx,
) -> Option<(SegmentIx, Travel)> {
    instance.segment_between(a, b)
}

/// Derives the conflict sets of `routing`. Assumes the pair passed validation;
/// unresolvable references are skipped.
pub fn derive_conflict_sets(instance: &DispatchInstance, routing: &Routing) -> ConflictSets {
    let mut sets = ConflictSets::default();
    let n = instance.trains.len();

    // Line conflicts.
    for j in 0..n {
        for k in (j + 1)..n {
            let (ja, jb) = (TrainIx(j), TrainIx(k));
            let pair = TrainPair::new(ja, jb);
            let (ta, tb) = (instance.train(ja), instance.train(jb));
            for (s, s2) in ta.legs() {
                let Some((seg, travel_a)) = leg_travel(instance, s, s2) else {
                    continue;
                };
                let same = tb.legs().any(|l| l == (s, s2));
                let opposite = tb.legs().any(|l| l == (s2, s));
                if !same && !opposite {
                    continue;
                }
                sets.common_path.entry(pair).or_default().insert((s, s2));
                let (Some(track_a), Some(track_b)) =
                    (routing.line_track(ja, seg), routing.line_track(jb, seg))
                else {
                    continue;
                };
                if track_a != track_b {
                    continue;
                }
                if same {
                    sets.same_direction
                        .entry((seg, track_a))
                        .or_default()
                        .insert(pair);
                    sets.conflicts.push(Conflict::Span {
                        pair,
                        segment: seg,
                        track: track_a,
                        from: s,
                        to: s2,
                    });
                } else {
                    let track = &instance.segment(seg).tracks[track_a.0];
                    if track.direction != TrackDirection::Both {
                        continue;
                    }
                    let (forward, backward) = match travel_a {
                        Travel::Forward => (ja, jb),
                        Travel::Backward => (jb, ja),
                    };
                    sets.single_track_opposite
                        .entry((seg, track_a))
                        .or_default()
                        .insert((forward, backward));
                    sets.conflicts.push(Conflict::SingleTrack {
                        forward,
                        backward,
                        segment: seg,
                        track: track_a,
                    });
                }
            }
        }
    }

    // Station tracks.
    for (&(j, s), &track) in &routing.station_track {
        sets.shared_station_track
            .entry((s, track))
            .or_default()
            .insert(j);
    }
    sets.shared_station_track
        .retain(|_, trains| trains.len() >= 2);
    for (&(s, track), trains) in &sets.shared_station_track {
        let trains: Vec<TrainIx> = trains.iter().copied().collect();
        for (a, &ja) in trains.iter().enumerate() {
            for &jb in &trains[a + 1..] {
                // Only trains that both stop over (arrive and depart) compete
                // for the track within the modelled horizon.
                let stops_over =
                    |j: TrainIx| instance.train(j).arrives(s) && instance.train(j).departs(s);
                if stops_over(ja) && stops_over(jb) {
                    sets.conflicts.push(Conflict::StationTrack {
                        pair: TrainPair::new(ja, jb),
                        station: s,
                        track,
                    });
                }
            }
        }
    }

    // Switch groups.
    let shares_track = |ja: TrainIx, jb: TrainIx, s: StationIx| -> bool {
        matches!(
            (routing.station_track(ja, s), routing.station_track(jb, s)),
            (Some(a), Some(b)) if a == b
        )
    };
    let mut switch_pairs: BTreeSet<(StationIx, TrainPair)> = BTreeSet::new();
    let paths: Vec<(&(TrainIx, StationIx), &BTreeSet<SwitchGroupIx>)> =
        routing.station_path.iter().collect();
    for (a, &(&(ja, sa), pa)) in paths.iter().enumerate() {
        for &(&(jb, sb), pb) in &paths[a + 1..] {
            if sa != sb || ja == jb || shares_track(ja, jb, sa) {
                continue;
            }
            let pair = TrainPair::new(ja, jb);
            for g in pa.intersection(pb) {
                sets.shared_switch.entry((sa, *g)).or_default().insert(pair);
                switch_pairs.insert((sa, pair));
            }
        }
    }
    for (station, pair) in switch_pairs {
        sets.conflicts.push(Conflict::Switch { pair, station });
    }

    // Turnarounds.
    for &(inbound, outbound, station) in instance.timing.prep.keys() {
        sets.rolling_stock_pairs
            .entry(station)
            .or_default()
            .insert((inbound, outbound));
        sets.conflicts.push(Conflict::Circulation {
            inbound,
            outbound,
            station,
        });
    }

    sets
}
