//! Structural checks of an instance together with a routing.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::conflicts::{derive_conflict_sets, Conflict};
use crate::error::ParamKey;
use crate::model::{
    DispatchInstance, LineTrackIx, Routing, SegmentIx, StationIx, StationTrackIx, SwitchGroupIx,
    TrainIx,
};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Diagnostic {
    InvalidResolution,
    DuplicateStation(String),
    DuplicateTrain(String),
    DuplicateSegment {
        from: StationIx,
        to: StationIx,
    },
    BadSwitchMap {
        station: StationIx,
    },
    RouteTooShort {
        train: TrainIx,
    },
    RepeatedStation {
        train: TrainIx,
        station: StationIx,
    },
    NoSegment {
        train: TrainIx,
        from: StationIx,
        to: StationIx,
    },
    ScheduleShape {
        train: TrainIx,
    },
    MissingDeparture {
        train: TrainIx,
        station: StationIx,
    },
    ScheduleDecreasing {
        train: TrainIx,
        station: StationIx,
    },
    NegativeWeight {
        train: TrainIx,
    },
    MissingParameter(ParamKey),
    NegativeParameter(ParamKey),
    NegativePrimaryDelay {
        train: TrainIx,
        station: StationIx,
    },
    NegativeDefaultResource,
    MissingLineTrack {
        train: TrainIx,
        segment: SegmentIx,
    },
    UnknownLineTrack {
        train: TrainIx,
        segment: SegmentIx,
        track: LineTrackIx,
    },
    DirectionViolation {
        train: TrainIx,
        segment: SegmentIx,
        track: LineTrackIx,
    },
    OffRoute {
        train: TrainIx,
        station: StationIx,
    },
    UnknownStationTrack {
        train: TrainIx,
        station: StationIx,
        track: StationTrackIx,
    },
    UnknownSwitchGroup {
        train: TrainIx,
        station: StationIx,
        group: SwitchGroupIx,
    },
    PathOutsideTrack {
        train: TrainIx,
        station: StationIx,
        group: SwitchGroupIx,
    },
    CirculationMismatch {
        inbound: TrainIx,
        outbound: TrainIx,
        station: StationIx,
    },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl Diagnostic {
    /// Renders the diagnostic with ids instead of indices.
    pub fn describe(&self, instance: &DispatchInstance) -> String {
        let t = |j: &TrainIx| {
            instance
                .trains
                .get(j.0)
                .map_or_else(|| alloc::format!("{j}"), |t| t.id.clone())
        };
        let s = |s: &StationIx| {
            instance
                .stations
                .get(s.0)
                .map_or_else(|| alloc::format!("{s}"), |st| st.id.clone())
        };
        use alloc::format;
        match self {
            Diagnostic::InvalidResolution => "resolution must be at least 1".into(),
            Diagnostic::DuplicateStation(id) => format!("duplicate station `{id}`"),
            Diagnostic::DuplicateTrain(id) => format!("duplicate train `{id}`"),
            Diagnostic::DuplicateSegment { from, to } => {
                format!("duplicate segment {}-{}", s(from), s(to))
            }
            Diagnostic::BadSwitchMap { station } => {
                format!(
                    "switch map of station {} does not match its tracks",
                    s(station)
                )
            }
            Diagnostic::RouteTooShort { train } => {
                format!("route of {} has fewer than two stations", t(train))
            }
            Diagnostic::RepeatedStation { train, station } => {
                format!("route of {} visits {} more than once", t(train), s(station))
            }
            Diagnostic::NoSegment { train, from, to } => format!(
                "route of {} uses {}-{} but no segment connects them",
                t(train),
                s(from),
                s(to)
            ),
            Diagnostic::ScheduleShape { train } => {
                format!("schedule of {} does not match its route", t(train))
            }
            Diagnostic::MissingDeparture { train, station } => format!(
                "{} has no scheduled departure at intermediate station {}",
                t(train),
                s(station)
            ),
            Diagnostic::ScheduleDecreasing { train, station } => {
                format!("schedule of {} decreases at {}", t(train), s(station))
            }
            Diagnostic::NegativeWeight { train } => format!("weight of {} is negative", t(train)),
            Diagnostic::MissingParameter(key) => format!("missing {}", param(instance, key)),
            Diagnostic::NegativeParameter(key) => format!("negative {}", param(instance, key)),
            Diagnostic::NegativePrimaryDelay { train, station } => {
                format!("negative primary delay of {} at {}", t(train), s(station))
            }
            Diagnostic::NegativeDefaultResource => "negative default resource time".into(),
            Diagnostic::MissingLineTrack { train, segment } => {
                let seg = instance.segment(*segment);
                format!(
                    "{} has no line track on {}-{}",
                    t(train),
                    s(&seg.from),
                    s(&seg.to)
                )
            }
            Diagnostic::UnknownLineTrack {
                train,
                segment,
                track,
            } => format!(
                "{} is routed onto nonexistent track {} of segment {}",
                t(train),
                track.0,
                segment.0
            ),
            Diagnostic::DirectionViolation {
                train,
                segment,
                track,
            } => {
                let seg = instance.segment(*segment);
                format!(
                    "{} runs against the direction of track `{}` on {}-{}",
                    t(train),
                    seg.tracks[track.0].id,
                    s(&seg.from),
                    s(&seg.to)
                )
            }
            Diagnostic::OffRoute { train, station } => format!(
                "{} has a station assignment at {} which is not on its route",
                t(train),
                s(station)
            ),
            Diagnostic::UnknownStationTrack {
                train,
                station,
                track,
            } => format!(
                "{} is assigned nonexistent track {} at {}",
                t(train),
                track.0,
                s(station)
            ),
            Diagnostic::UnknownSwitchGroup {
                train,
                station,
                group,
            } => format!(
                "{} uses nonexistent switch group {} at {}",
                t(train),
                group.0,
                s(station)
            ),
            Diagnostic::PathOutsideTrack {
                train,
                station,
                group,
            } => format!(
                "path of {} at {} uses switch group `{}` not reachable from its track",
                t(train),
                s(station),
                instance.station(*station).switch_groups[group.0]
            ),
            Diagnostic::CirculationMismatch {
                inbound,
                outbound,
                station,
            } => format!(
                "turnaround {} -> {} at {} needs {0} to terminate and {1} to start there",
                t(inbound),
                t(outbound),
                s(station)
            ),
        }
    }
}

fn param(instance: &DispatchInstance, key: &ParamKey) -> String {
    use alloc::format;
    let t = |j: &TrainIx| {
        instance
            .trains
            .get(j.0)
            .map_or_else(|| format!("{j}"), |t| t.id.clone())
    };
    let s = |s: &StationIx| {
        instance
            .stations
            .get(s.0)
            .map_or_else(|| format!("{s}"), |st| st.id.clone())
    };
    match key {
        ParamKey::Pass { train, from, to } => {
            format!("pass time of {} on {}->{}", t(train), s(from), s(to))
        }
        ParamKey::Blocks { train, from, to } => {
            format!(
                "block release time of {} on {}->{}",
                t(train),
                s(from),
                s(to)
            )
        }
        ParamKey::Stop { train, station } => format!("stop time of {} at {}", t(train), s(station)),
        ParamKey::Prep {
            inbound,
            outbound,
            station,
        } => format!(
            "preparation time {}->{} at {}",
            t(inbound),
            t(outbound),
            s(station)
        ),
        ParamKey::Res {
            first,
            second,
            station,
        } => format!(
            "resource time {} before {} at {}",
            t(first),
            t(second),
            s(station)
        ),
        ParamKey::DMax { train } => format!("maximal secondary delay of {}", t(train)),
    }
}

/// Returns every violated invariant; an empty list means the pair can be encoded.
pub fn validate_instance(instance: &DispatchInstance, routing: &Routing) -> Vec<Diagnostic> {
    let mut out: BTreeSet<Diagnostic> = BTreeSet::new();
    let mut structural_ok = true;

    if instance.scenario.resolution == 0 {
        out.insert(Diagnostic::InvalidResolution);
    }
    let mut seen = BTreeSet::new();
    for st in &instance.stations {
        if !seen.insert(st.id.as_str()) {
            out.insert(Diagnostic::DuplicateStation(st.id.clone()));
        }
    }
    for (i, st) in instance.stations.iter().enumerate() {
        let groups = st.switch_groups.len();
        if st.track_switch_groups.len() != st.tracks.len()
            || st
                .track_switch_groups
                .iter()
                .flatten()
                .any(|g| g.0 >= groups)
        {
            out.insert(Diagnostic::BadSwitchMap {
                station: StationIx(i),
            });
        }
    }
    let mut seen = BTreeSet::new();
    for tr in &instance.trains {
        if !seen.insert(tr.id.as_str()) {
            out.insert(Diagnostic::DuplicateTrain(tr.id.clone()));
        }
    }
    let mut seen = BTreeSet::new();
    for seg in &instance.segments {
        let key = if seg.from <= seg.to {
            (seg.from, seg.to)
        } else {
            (seg.to, seg.from)
        };
        if !seen.insert(key) {
            out.insert(Diagnostic::DuplicateSegment {
                from: seg.from,
                to: seg.to,
            });
        }
    }

    for (j, train) in instance.trains.iter().enumerate() {
        let j = TrainIx(j);
        if train.route.len() < 2 {
            out.insert(Diagnostic::RouteTooShort { train: j });
            structural_ok = false;
        }
        if train.weight.is_nan() || train.weight < 0.0 {
            out.insert(Diagnostic::NegativeWeight { train: j });
        }
        let mut visited = BTreeSet::new();
        for &s in &train.route {
            if !visited.insert(s) {
                out.insert(Diagnostic::RepeatedStation {
                    train: j,
                    station: s,
                });
                structural_ok = false;
            }
        }
        for (a, b) in train.legs() {
            if instance.segment_between(a, b).is_none() {
                out.insert(Diagnostic::NoSegment {
                    train: j,
                    from: a,
                    to: b,
                });
                structural_ok = false;
            }
        }
        if train.schedule.len() != train.route.len() || train.counted.len() != train.route.len() {
            out.insert(Diagnostic::ScheduleShape { train: j });
            structural_ok = false;
            continue;
        }
        let last = train.route.len().saturating_sub(1);
        let mut prev = None;
        for (p, (&s, st)) in train.route.iter().zip(&train.schedule).enumerate() {
            if p < last && st.departure.is_none() {
                out.insert(Diagnostic::MissingDeparture {
                    train: j,
                    station: s,
                });
                structural_ok = false;
            }
            for t in [st.arrival, st.departure].into_iter().flatten() {
                if prev.is_some_and(|q| t < q) {
                    out.insert(Diagnostic::ScheduleDecreasing {
                        train: j,
                        station: s,
                    });
                }
                prev = Some(t);
            }
        }
        if train.schedule.iter().any(|st| st.departure.is_some()) {
            match instance.d_max(j) {
                None => {
                    out.insert(Diagnostic::MissingParameter(ParamKey::DMax { train: j }));
                }
                Some(d) if d < 0 => {
                    out.insert(Diagnostic::NegativeParameter(ParamKey::DMax { train: j }));
                }
                _ => {}
            }
        }
        // Running and dwell times the delay propagation needs.
        for (a, b) in train.legs() {
            let key = ParamKey::Pass {
                train: j,
                from: a,
                to: b,
            };
            if instance.timing.pass(j, a, b).is_none() {
                out.insert(Diagnostic::MissingParameter(key));
            }
            if train.departs(b) && instance.timing.stop(j, b).is_none() {
                out.insert(Diagnostic::MissingParameter(ParamKey::Stop {
                    train: j,
                    station: b,
                }));
            }
        }
    }

    for (&(j, s), &d) in &instance.scenario.primary_delay {
        if d < 0 {
            out.insert(Diagnostic::NegativePrimaryDelay {
                train: j,
                station: s,
            });
        }
    }
    let timing = &instance.timing;
    for (&(train, from, to), &v) in &timing.pass {
        if v < 0 {
            out.insert(Diagnostic::NegativeParameter(ParamKey::Pass {
                train,
                from,
                to,
            }));
        }
    }
    for (&(train, from, to), &v) in &timing.blocks {
        if v < 0 {
            out.insert(Diagnostic::NegativeParameter(ParamKey::Blocks {
                train,
                from,
                to,
            }));
        }
    }
    for (&(train, station), &v) in &timing.stop {
        if v < 0 {
            out.insert(Diagnostic::NegativeParameter(ParamKey::Stop {
                train,
                station,
            }));
        }
    }
    for (&(inbound, outbound, station), &v) in &timing.prep {
        if v < 0 {
            out.insert(Diagnostic::NegativeParameter(ParamKey::Prep {
                inbound,
                outbound,
                station,
            }));
        }
        let ok = inbound.0 < instance.trains.len()
            && outbound.0 < instance.trains.len()
            && instance.train(inbound).last_station() == Some(station)
            && instance.train(inbound).arrives(station)
            && instance.train(outbound).first_station() == Some(station);
        if !ok {
            out.insert(Diagnostic::CirculationMismatch {
                inbound,
                outbound,
                station,
            });
            structural_ok = false;
        }
    }
    for (&(first, second, station), &v) in &timing.res {
        if v < 0 {
            out.insert(Diagnostic::NegativeParameter(ParamKey::Res {
                first,
                second,
                station,
            }));
        }
    }
    if timing.res_default.is_some_and(|v| v < 0) {
        out.insert(Diagnostic::NegativeDefaultResource);
    }

    // Routing references.
    for (j, train) in instance.trains.iter().enumerate() {
        let j = TrainIx(j);
        for (a, b) in train.legs() {
            let Some((seg, travel)) = instance.segment_between(a, b) else {
                continue;
            };
            match routing.line_track(j, seg) {
                None => {
                    out.insert(Diagnostic::MissingLineTrack {
                        train: j,
                        segment: seg,
                    });
                    structural_ok = false;
                }
                Some(track) => match instance.segment(seg).tracks.get(track.0) {
                    None => {
                        out.insert(Diagnostic::UnknownLineTrack {
                            train: j,
                            segment: seg,
                            track,
                        });
                        structural_ok = false;
                    }
                    Some(t) if !t.direction.allows(travel) => {
                        out.insert(Diagnostic::DirectionViolation {
                            train: j,
                            segment: seg,
                            track,
                        });
                    }
                    _ => {}
                },
            }
        }
    }
    for &(j, seg) in routing.line_track.keys() {
        let on_route = instance.trains.get(j.0).is_some_and(|t| {
            t.legs()
                .any(|(a, b)| instance.segment_between(a, b).map(|x| x.0) == Some(seg))
        });
        if !on_route {
            out.insert(Diagnostic::MissingLineTrack {
                train: j,
                segment: seg,
            });
            structural_ok = false;
        }
    }
    for (&(j, s), &track) in &routing.station_track {
        if instance
            .trains
            .get(j.0)
            .and_then(|t| t.position(s))
            .is_none()
        {
            out.insert(Diagnostic::OffRoute {
                train: j,
                station: s,
            });
            structural_ok = false;
            continue;
        }
        if track.0 >= instance.station(s).tracks.len() {
            out.insert(Diagnostic::UnknownStationTrack {
                train: j,
                station: s,
                track,
            });
            structural_ok = false;
        }
    }
    for (&(j, s), path) in &routing.station_path {
        if instance
            .trains
            .get(j.0)
            .and_then(|t| t.position(s))
            .is_none()
        {
            out.insert(Diagnostic::OffRoute {
                train: j,
                station: s,
            });
            structural_ok = false;
            continue;
        }
        let st = instance.station(s);
        let reachable: Option<&BTreeSet<SwitchGroupIx>> = routing
            .station_track(j, s)
            .and_then(|k| st.track_switch_groups.get(k.0));
        for &g in path {
            if g.0 >= st.switch_groups.len() {
                out.insert(Diagnostic::UnknownSwitchGroup {
                    train: j,
                    station: s,
                    group: g,
                });
                structural_ok = false;
            } else if reachable.is_some_and(|r| !r.contains(&g)) {
                out.insert(Diagnostic::PathOutsideTrack {
                    train: j,
                    station: s,
                    group: g,
                });
            }
        }
    }

    // Parameters needed by the conflicts this routing creates.
    if structural_ok {
        let sets = derive_conflict_sets(instance, routing);
        for c in sets.conflicts() {
            for key in required_parameters(instance, c) {
                if lookup(instance, &key).is_none() {
                    out.insert(Diagnostic::MissingParameter(key));
                }
            }
        }
    }

    out.into_iter().collect()
}

/// Timing parameters an encoder reads for conflict `c`.
pub(crate) fn required_parameters(instance: &DispatchInstance, c: &Conflict) -> Vec<ParamKey> {
    let mut keys = Vec::new();
    match *c {
        Conflict::Span { pair, from, to, .. } => {
            for train in [pair.first(), pair.second()] {
                keys.push(ParamKey::Blocks { train, from, to });
                keys.push(ParamKey::Pass { train, from, to });
            }
        }
        Conflict::SingleTrack {
            forward,
            backward,
            segment,
            ..
        } => {
            let seg = instance.segment(segment);
            keys.push(ParamKey::Pass {
                train: forward,
                from: seg.from,
                to: seg.to,
            });
            keys.push(ParamKey::Pass {
                train: backward,
                from: seg.to,
                to: seg.from,
            });
        }
        Conflict::StationTrack { pair, station, .. } | Conflict::Switch { pair, station } => {
            let (a, b) = (pair.first(), pair.second());
            keys.push(ParamKey::Res {
                first: a,
                second: b,
                station,
            });
            keys.push(ParamKey::Res {
                first: b,
                second: a,
                station,
            });
        }
        Conflict::Circulation {
            inbound,
            outbound,
            station,
        } => {
            keys.push(ParamKey::Prep {
                inbound,
                outbound,
                station,
            });
        }
    }
    keys
}

pub(crate) fn lookup(instance: &DispatchInstance, key: &ParamKey) -> Option<i64> {
    let t = &instance.timing;
    match *key {
        ParamKey::Pass { train, from, to } => t.pass(train, from, to),
        ParamKey::Blocks { train, from, to } => t.blocks(train, from, to),
        ParamKey::Stop { train, station } => t.stop(train, station),
        ParamKey::Prep {
            inbound,
            outbound,
            station,
        } => t.prep(inbound, outbound, station),
        ParamKey::Res {
            first,
            second,
            station,
        } => t.res(first, second, station),
        ParamKey::DMax { train } => instance.d_max(train),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture;

    #[test]
    fn demo_is_valid() {
        let (inst, routing) = fixture::demo();
        assert_eq!(validate_instance(&inst, &routing), []);
        let (inst, routing) = fixture::demo_rerouted();
        assert_eq!(validate_instance(&inst, &routing), []);
    }

    #[test]
    fn removed_pass_time_is_reported_once() {
        let (mut inst, routing) = fixture::demo();
        let j1 = inst.train_by_id("j1").unwrap();
        let s1 = inst.station_by_id("s1").unwrap();
        let s2 = inst.station_by_id("s2").unwrap();
        inst.timing.pass.remove(&(j1, s1, s2));
        let diags = validate_instance(&inst, &routing);
        assert_eq!(
            diags,
            [Diagnostic::MissingParameter(ParamKey::Pass {
                train: j1,
                from: s1,
                to: s2
            })]
        );
    }

    #[test]
    fn wrong_way_on_one_way_track() {
        let (inst, mut routing) = fixture::demo();
        let j3 = inst.train_by_id("j3").unwrap();
        let s1 = inst.station_by_id("s1").unwrap();
        let s2 = inst.station_by_id("s2").unwrap();
        let (seg, _) = inst.segment_between(s1, s2).unwrap();
        let track1 = inst.segment(seg).track_by_id("1").unwrap();
        routing.line_track.insert((j3, seg), track1);
        let diags = validate_instance(&inst, &routing);
        assert_eq!(
            diags,
            [Diagnostic::DirectionViolation {
                train: j3,
                segment: seg,
                track: track1
            }]
        );
    }

    #[test]
    fn missing_resource_time_is_reported() {
        let (mut inst, routing) = fixture::demo();
        inst.timing.res_default = None;
        let diags = validate_instance(&inst, &routing);
        // Both orders of the shared platform at s2.
        assert_eq!(diags.len(), 2);
        assert!(diags
            .iter()
            .all(|d| matches!(d, Diagnostic::MissingParameter(ParamKey::Res { .. }))));
    }

    #[test]
    fn decreasing_schedule() {
        let (mut inst, routing) = fixture::demo();
        inst.trains[0].schedule[1].arrival = Some(1);
        let diags = validate_instance(&inst, &routing);
        assert!(diags
            .iter()
            .any(|d| matches!(d, Diagnostic::ScheduleDecreasing { .. })));
    }

    #[test]
    fn describe_mentions_ids() {
        let (mut inst, routing) = fixture::demo();
        inst.timing.pass.clear();
        let diags = validate_instance(&inst, &routing);
        let text = diags[0].describe(&inst);
        assert!(text.contains("j1"), "{text}");
    }
}
