//! Built-in demonstration network: two stations joined by a two-track line,
//! two trains from `s1` to `s2` and one in the opposite direction.
//!
//! Track `1` of the line is one-way `s1 -> s2`, track `2` is signalled for both
//! directions and regularly carries the `s2 -> s1` traffic. Both `s1 -> s2`
//! trains end on station track `1` at `s2` and then leave for the depot; that
//! depot departure does not count in the objective.

use crate::builder::InstanceBuilder;
use crate::model::{DispatchInstance, Routing, TrackDirection};

/// The demonstration instance with its default routing (both `s1 -> s2`
/// trains on line track `1`).
pub fn demo() -> (DispatchInstance, Routing) {
    let mut b = InstanceBuilder::new(1);
    b.station("s1", &["1", "2"])
        .switch_group("s1", "a", &["1"])
        .switch_group("s1", "b", &["2"])
        .station("s2", &["1", "2"])
        .switch_group("s2", "a", &["1"])
        .switch_group("s2", "b", &["2"])
        .segment(
            "s1",
            "s2",
            &[("1", TrackDirection::Forward), ("2", TrackDirection::Both)],
        );

    // Regional
    b.train("j1", 2.0, &["s1", "s2"])
        .schedule("j1", "s1", None, Some(3))
        .schedule("j1", "s2", Some(7), Some(8))
        .counted("j1", "s2", false)
        .primary_delay("j1", "s1", 1);
    // Inter-City
    b.train("j2", 1.0, &["s1", "s2"])
        .schedule("j2", "s1", None, Some(0))
        .schedule("j2", "s2", Some(8), Some(9))
        .counted("j2", "s2", false)
        .primary_delay("j2", "s1", 1);
    // Regional, opposite direction
    b.train("j3", 1.0, &["s2", "s1"])
        .schedule("j3", "s2", None, Some(6))
        .schedule("j3", "s1", Some(14), None)
        .primary_delay("j3", "s2", 2);

    b.pass("j1", "s1", "s2", 4)
        .pass("j2", "s1", "s2", 8)
        .pass("j3", "s2", "s1", 8)
        .blocks("j1", "s1", "s2", 2)
        .blocks("j2", "s1", "s2", 2)
        .stop("j1", "s2", 1)
        .stop("j2", "s2", 1)
        .res_default(1);

    for j in ["j1", "j2", "j3"] {
        b.d_max(j, 10);
    }

    b.line_track("j1", "s1", "s2", "1")
        .line_track("j2", "s1", "s2", "1")
        .line_track("j3", "s2", "s1", "2")
        .station_track("j1", "s2", "1")
        .station_track("j2", "s2", "1")
        .station_track("j3", "s2", "2")
        .station_path("j1", "s2", &["a"])
        .station_path("j2", "s2", &["a"])
        .station_path("j3", "s2", &["b"]);

    b.build().expect("demo fixture is well formed")
}

/// Routing after the line is split into two parallel single-track lines:
/// `j1` keeps track `1`, `j2` moves to track `2` and meets `j3` there.
pub fn demo_rerouted() -> (DispatchInstance, Routing) {
    let (inst, mut routing) = demo();
    let j2 = inst.train_by_id("j2").unwrap();
    let s1 = inst.station_by_id("s1").unwrap();
    let s2 = inst.station_by_id("s2").unwrap();
    let (seg, _) = inst.segment_between(s1, s2).unwrap();
    let track2 = inst.segment(seg).track_by_id("2").unwrap();
    routing.line_track.insert((j2, seg), track2);
    (inst, routing)
}
