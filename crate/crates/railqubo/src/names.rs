//! Human-readable names for model entities.

use railqubo_core::dispatch::RoutingDelta;
use railqubo_core::linear::{PrecedenceKey, Violation};
use railqubo_core::{Conflict, DispatchInstance, Event, SegmentIx, StationIx, Tick, TrainIx};

pub fn train(inst: &DispatchInstance, j: TrainIx) -> &str {
    &inst.train(j).id
}

pub fn station(inst: &DispatchInstance, s: StationIx) -> &str {
    &inst.station(s).id
}

pub fn segment(inst: &DispatchInstance, k: SegmentIx) -> String {
    let seg = inst.segment(k);
    format!("{}-{}", station(inst, seg.from), station(inst, seg.to))
}

pub fn event(inst: &DispatchInstance, e: Event) -> String {
    format!("{}@{}", train(inst, e.train), station(inst, e.station))
}

/// Grid ticks as minutes.
pub fn minutes(inst: &DispatchInstance, t: Tick) -> f64 {
    t as f64 / inst.scenario.resolution as f64
}

pub fn conflict(inst: &DispatchInstance, c: &Conflict) -> String {
    match *c {
        Conflict::Span {
            pair,
            segment: k,
            track,
            ..
        } => format!(
            "minimal span {}/{} on {} track {}",
            train(inst, pair.first()),
            train(inst, pair.second()),
            segment(inst, k),
            inst.segment(k).tracks[track.0].id
        ),
        Conflict::SingleTrack {
            forward,
            backward,
            segment: k,
            track,
        } => format!(
            "single track {}/{} on {} track {}",
            train(inst, forward),
            train(inst, backward),
            segment(inst, k),
            inst.segment(k).tracks[track.0].id
        ),
        Conflict::StationTrack {
            pair,
            station: s,
            track,
        } => format!(
            "track occupancy {}/{} at {} track {}",
            train(inst, pair.first()),
            train(inst, pair.second()),
            station(inst, s),
            inst.station(s).tracks[track.0]
        ),
        Conflict::Switch { pair, station: s } => format!(
            "switches {}/{} at {}",
            train(inst, pair.first()),
            train(inst, pair.second()),
            station(inst, s)
        ),
        Conflict::Circulation {
            inbound,
            outbound,
            station: s,
        } => format!(
            "rolling stock {}->{} at {}",
            train(inst, inbound),
            train(inst, outbound),
            station(inst, s)
        ),
    }
}

/// LP column name of a precedence variable.
pub fn precedence_key(inst: &DispatchInstance, key: &PrecedenceKey) -> String {
    let (kind, place) = match *key {
        PrecedenceKey::Departure { station: s, .. } => ("dep", station(inst, s).to_string()),
        PrecedenceKey::SingleTrack { segment: k, .. } => ("1tr", segment(inst, k)),
        PrecedenceKey::Switch { station: s, .. } => ("sw", station(inst, s).to_string()),
    };
    let pair = key.pair();
    format!(
        "{}_{}_{}_{}",
        train(inst, pair.first()),
        train(inst, pair.second()),
        kind,
        place
    )
}

pub fn violation(inst: &DispatchInstance, v: &Violation) -> String {
    match v {
        Violation::Missing(e) => format!("{} has no departure", event(inst, *e)),
        Violation::Ambiguous { event: e, times } => {
            format!("{} departs at several times {times:?}", event(inst, *e))
        }
        Violation::Window {
            event: e,
            time,
            window,
        } => format!(
            "{} departs at {} outside [{}, {}]",
            event(inst, *e),
            minutes(inst, *time),
            minutes(inst, window.earliest),
            minutes(inst, window.latest)
        ),
        Violation::Unconditional {
            family,
            later,
            earlier,
            required,
            actual,
            ..
        } => format!(
            "{}: {} - {} = {} but needs {}",
            family.name(),
            event(inst, *later),
            event(inst, *earlier),
            minutes(inst, *actual),
            minutes(inst, *required)
        ),
        Violation::Disjunction { conflict: c, .. } => {
            format!("{}: neither order fits", conflict(inst, c))
        }
        Violation::ContradictoryFixing => "fixed orders contradict each other".into(),
    }
}

pub fn delta(inst: &DispatchInstance, d: &RoutingDelta) -> String {
    match d {
        RoutingDelta::LineTrack {
            train: j,
            segment: k,
            to,
            ..
        } => format!(
            "{} to {} track {}",
            train(inst, *j),
            segment(inst, *k),
            inst.segment(*k).tracks[to.0].id
        ),
        RoutingDelta::StationTrack {
            train: j,
            station: s,
            to,
            ..
        } => format!(
            "{} to {} track {}",
            train(inst, *j),
            station(inst, *s),
            inst.station(*s).tracks[to.0]
        ),
        RoutingDelta::StationPath {
            train: j,
            station: s,
            to,
            ..
        } => {
            let st = inst.station(*s);
            let groups: Vec<&str> = to.iter().map(|g| st.switch_groups[g.0].as_str()).collect();
            format!(
                "{} to path {} at {}",
                train(inst, *j),
                groups.join("+"),
                station(inst, *s)
            )
        }
    }
}
