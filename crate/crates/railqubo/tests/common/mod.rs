//! Random micro-instances shared by the integration tests.

use railqubo_core::builder::InstanceBuilder;
use railqubo_core::{validate_instance, DispatchInstance, Routing, Tick, TrackDirection};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// A small line network with random trains, timings and routing; `None` when
/// the draw does not validate.
pub fn micro_instance(rng: &mut ChaCha8Rng) -> Option<(DispatchInstance, Routing)> {
    const STATIONS: [&str; 3] = ["a", "b", "c"];
    let ns = rng.random_range(2..=3);
    let mut b = InstanceBuilder::new(1);
    let mut station_tracks = Vec::new();
    for &s in &STATIONS[..ns] {
        let tracks: &[&str] = if rng.random_bool(0.7) {
            &["1", "2"]
        } else {
            &["1"]
        };
        b.station(s, tracks);
        for t in tracks {
            b.switch_group(s, &format!("g{t}"), &[t]);
        }
        if tracks.len() == 2 && rng.random_bool(0.3) {
            b.switch_group(s, "x", tracks);
        }
        station_tracks.push(tracks);
    }
    let mut seg_tracks = Vec::new();
    for k in 0..ns - 1 {
        let tracks: &[(&str, TrackDirection)] = match rng.random_range(0..3) {
            0 => &[("1", TrackDirection::Both)],
            1 => &[
                ("1", TrackDirection::Forward),
                ("2", TrackDirection::Backward),
            ],
            _ => &[("1", TrackDirection::Forward), ("2", TrackDirection::Both)],
        };
        b.segment(STATIONS[k], STATIONS[k + 1], tracks);
        seg_tracks.push(tracks);
    }
    b.res_default(rng.random_range(1..=2));

    let nt = rng.random_range(2..=3);
    // (first station, last station, departs from the last station)
    let mut ends = Vec::new();
    for j in 0..nt {
        let id = format!("t{j}");
        let len = rng.random_range(2..=ns);
        let first = rng.random_range(0..=ns - len);
        let mut route: Vec<usize> = (first..first + len).collect();
        let backward = rng.random_bool(0.5);
        if backward {
            route.reverse();
        }
        let names: Vec<&str> = route.iter().map(|&s| STATIONS[s]).collect();
        b.train(&id, rng.random_range(1..=2) as f64, &names);
        b.d_max(&id, rng.random_range(0..=4));
        b.primary_delay(&id, names[0], rng.random_range(0..=2));

        let mut dep: Tick = rng.random_range(0..=4);
        let ends_with_departure = rng.random_bool(0.5);
        ends.push((route[0], route[len - 1], ends_with_departure));
        for p in 0..len {
            let s = names[p];
            let arrival = (p > 0).then_some(dep);
            let departs = p + 1 < len || ends_with_departure;
            let departure = if p == 0 {
                Some(dep)
            } else if departs {
                let stop = rng.random_range(0..=1);
                b.stop(&id, s, stop);
                Some(dep + stop + rng.random_range(0..=1))
            } else {
                None
            };
            b.schedule(&id, s, arrival, departure);
            if departure.is_some() {
                let tracks = station_tracks[route[p]];
                let t = tracks[rng.random_range(0..tracks.len())];
                b.station_track(&id, s, t);
                let mut path = vec![format!("g{t}")];
                if tracks.len() == 2 && rng.random_bool(0.3) {
                    path = vec!["x".to_string()];
                }
                let path: Vec<&str> = path.iter().map(String::as_str).collect();
                b.station_path(&id, s, &path);
                if p + 1 == len && rng.random_bool(0.5) {
                    b.counted(&id, s, false);
                }
            }
            if p + 1 < len {
                let next = names[p + 1];
                let pass = rng.random_range(1..=4);
                b.pass(&id, s, next, pass);
                b.blocks(&id, s, next, rng.random_range(1..=pass));
                let seg = route[p].min(route[p + 1]);
                let allowed: Vec<&str> = seg_tracks[seg]
                    .iter()
                    .filter(|(_, d)| match d {
                        TrackDirection::Both => true,
                        TrackDirection::Forward => !backward,
                        TrackDirection::Backward => backward,
                    })
                    .map(|(t, _)| *t)
                    .collect();
                b.line_track(&id, s, next, allowed[rng.random_range(0..allowed.len())]);
                dep = departure.unwrap_or(dep) + pass + rng.random_range(0..=1);
            }
        }
    }
    // Occasionally turn a terminating train around into one starting there.
    for (a, &(_, last, departs)) in ends.iter().enumerate() {
        for (o, &(first, _, _)) in ends.iter().enumerate() {
            if a != o && !departs && last == first && rng.random_bool(0.5) {
                b.prep(
                    &format!("t{a}"),
                    &format!("t{o}"),
                    STATIONS[last],
                    rng.random_range(0..=2),
                );
            }
        }
    }
    let (inst, routing) = b.build().ok()?;
    validate_instance(&inst, &routing)
        .is_empty()
        .then_some((inst, routing))
}
