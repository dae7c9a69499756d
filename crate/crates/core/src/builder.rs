//! Incremental construction of an instance and its routing from string ids.
//!
//! Unknown references do not abort construction; they are collected and
//! returned together from [`InstanceBuilder::build`].

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::model::{
    DispatchInstance, LineSegment, LineTrack, Routing, Station, StationIx, StopTimes, Tick,
    TrackDirection, Train, TrainIx,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BuildError(pub String);

impl core::fmt::Display for BuildError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Default)]
pub struct InstanceBuilder {
    instance: DispatchInstance,
    routing: Routing,
    errors: Vec<BuildError>,
}

impl InstanceBuilder {
    pub fn new(resolution: u32) -> Self {
        let mut b = InstanceBuilder::default();
        b.instance.scenario.resolution = resolution;
        b
    }

    fn err(&mut self, msg: String) {
        self.errors.push(BuildError(msg));
    }

    fn station_ix(&mut self, id: &str) -> Option<StationIx> {
        let s = self.instance.station_by_id(id);
        if s.is_none() {
            self.err(format!("unknown station `{id}`"));
        }
        s
    }

    fn train_ix(&mut self, id: &str) -> Option<TrainIx> {
        let j = self.instance.train_by_id(id);
        if j.is_none() {
            self.err(format!("unknown train `{id}`"));
        }
        j
    }

    pub fn station(&mut self, id: &str, tracks: &[&str]) -> &mut Self {
        if self.instance.station_by_id(id).is_some() {
            self.err(format!("duplicate station `{id}`"));
        }
        self.instance.stations.push(Station {
            id: id.to_string(),
            tracks: tracks.iter().map(|t| t.to_string()).collect(),
            switch_groups: Vec::new(),
            track_switch_groups: tracks.iter().map(|_| BTreeSet::new()).collect(),
        });
        self
    }

    /// Declares a switch group at `station` used by the paths of the given tracks.
    pub fn switch_group(&mut self, station: &str, group: &str, tracks: &[&str]) -> &mut Self {
        let Some(s) = self.station_ix(station) else {
            return self;
        };
        let st = &mut self.instance.stations[s.0];
        let g = match st.switch_group_by_id(group) {
            Some(g) => g,
            None => {
                st.switch_groups.push(group.to_string());
                crate::model::SwitchGroupIx(st.switch_groups.len() - 1)
            }
        };
        let mut missing = Vec::new();
        for t in tracks {
            match st.track_by_id(t) {
                Some(k) => {
                    st.track_switch_groups[k.0].insert(g);
                }
                None => missing.push(format!("unknown track `{t}` at station `{station}`")),
            }
        }
        for m in missing {
            self.err(m);
        }
        self
    }

    pub fn segment(
        &mut self,
        from: &str,
        to: &str,
        tracks: &[(&str, TrackDirection)],
    ) -> &mut Self {
        let (Some(a), Some(b)) = (self.station_ix(from), self.station_ix(to)) else {
            return self;
        };
        if self.instance.segment_between(a, b).is_some() {
            self.err(format!("duplicate segment `{from}`-`{to}`"));
        }
        self.instance.segments.push(LineSegment {
            from: a,
            to: b,
            tracks: tracks
                .iter()
                .map(|(id, direction)| LineTrack {
                    id: id.to_string(),
                    direction: *direction,
                })
                .collect(),
        });
        self
    }

    pub fn train(&mut self, id: &str, weight: f64, route: &[&str]) -> &mut Self {
        if self.instance.train_by_id(id).is_some() {
            self.err(format!("duplicate train `{id}`"));
        }
        let route: Vec<StationIx> = route.iter().filter_map(|s| self.station_ix(s)).collect();
        let n = route.len();
        self.instance.trains.push(Train {
            id: id.to_string(),
            weight,
            route,
            schedule: alloc::vec![StopTimes::default(); n],
            counted: alloc::vec![true; n],
        });
        self
    }

    fn route_position(&mut self, train: &str, station: &str) -> Option<(TrainIx, usize)> {
        let j = self.train_ix(train)?;
        let s = self.station_ix(station)?;
        match self.instance.trains[j.0].position(s) {
            Some(p) => Some((j, p)),
            None => {
                self.err(format!(
                    "station `{station}` is not on the route of `{train}`"
                ));
                None
            }
        }
    }

    pub fn schedule(
        &mut self,
        train: &str,
        station: &str,
        arrival: Option<Tick>,
        departure: Option<Tick>,
    ) -> &mut Self {
        if let Some((j, p)) = self.route_position(train, station) {
            self.instance.trains[j.0].schedule[p] = StopTimes { arrival, departure };
        }
        self
    }

    pub fn counted(&mut self, train: &str, station: &str, counted: bool) -> &mut Self {
        if let Some((j, p)) = self.route_position(train, station) {
            self.instance.trains[j.0].counted[p] = counted;
        }
        self
    }

    pub fn pass(&mut self, train: &str, from: &str, to: &str, ticks: Tick) -> &mut Self {
        if let (Some(j), Some(a), Some(b)) = (
            self.train_ix(train),
            self.station_ix(from),
            self.station_ix(to),
        ) {
            self.instance.timing.pass.insert((j, a, b), ticks);
        }
        self
    }

    pub fn blocks(&mut self, train: &str, from: &str, to: &str, ticks: Tick) -> &mut Self {
        if let (Some(j), Some(a), Some(b)) = (
            self.train_ix(train),
            self.station_ix(from),
            self.station_ix(to),
        ) {
            self.instance.timing.blocks.insert((j, a, b), ticks);
        }
        self
    }

    pub fn stop(&mut self, train: &str, station: &str, ticks: Tick) -> &mut Self {
        if let (Some(j), Some(s)) = (self.train_ix(train), self.station_ix(station)) {
            self.instance.timing.stop.insert((j, s), ticks);
        }
        self
    }

    /// Declares a turnaround of `inbound` into `outbound` at `station`.
    pub fn prep(&mut self, inbound: &str, outbound: &str, station: &str, ticks: Tick) -> &mut Self {
        if let (Some(a), Some(b), Some(s)) = (
            self.train_ix(inbound),
            self.train_ix(outbound),
            self.station_ix(station),
        ) {
            self.instance.timing.prep.insert((a, b, s), ticks);
        }
        self
    }

    pub fn res(&mut self, first: &str, second: &str, station: &str, ticks: Tick) -> &mut Self {
        if let (Some(a), Some(b), Some(s)) = (
            self.train_ix(first),
            self.train_ix(second),
            self.station_ix(station),
        ) {
            self.instance.timing.res.insert((a, b, s), ticks);
        }
        self
    }

    pub fn res_default(&mut self, ticks: Tick) -> &mut Self {
        self.instance.timing.res_default = Some(ticks);
        self
    }

    pub fn d_max(&mut self, train: &str, ticks: Tick) -> &mut Self {
        if let Some(j) = self.train_ix(train) {
            self.instance.scenario.d_max.insert(j, ticks);
        }
        self
    }

    pub fn primary_delay(&mut self, train: &str, station: &str, ticks: Tick) -> &mut Self {
        if let (Some(j), Some(s)) = (self.train_ix(train), self.station_ix(station)) {
            self.instance.scenario.primary_delay.insert((j, s), ticks);
        }
        self
    }

    pub fn line_track(&mut self, train: &str, from: &str, to: &str, track: &str) -> &mut Self {
        let (Some(j), Some(a), Some(b)) = (
            self.train_ix(train),
            self.station_ix(from),
            self.station_ix(to),
        ) else {
            return self;
        };
        let Some((k, _)) = self.instance.segment_between(a, b) else {
            self.err(format!("no segment between `{from}` and `{to}`"));
            return self;
        };
        match self.instance.segments[k.0].track_by_id(track) {
            Some(t) => {
                self.routing.line_track.insert((j, k), t);
            }
            None => self.err(format!("unknown track `{track}` on `{from}`-`{to}`")),
        }
        self
    }

    pub fn station_track(&mut self, train: &str, station: &str, track: &str) -> &mut Self {
        let (Some(j), Some(s)) = (self.train_ix(train), self.station_ix(station)) else {
            return self;
        };
        match self.instance.stations[s.0].track_by_id(track) {
            Some(t) => {
                self.routing.station_track.insert((j, s), t);
            }
            None => self.err(format!("unknown track `{track}` at station `{station}`")),
        }
        self
    }

    pub fn station_path(&mut self, train: &str, station: &str, groups: &[&str]) -> &mut Self {
        let (Some(j), Some(s)) = (self.train_ix(train), self.station_ix(station)) else {
            return self;
        };
        let mut path = BTreeSet::new();
        for g in groups {
            match self.instance.stations[s.0].switch_group_by_id(g) {
                Some(g) => {
                    path.insert(g);
                }
                None => self.err(format!("unknown switch group `{g}` at station `{station}`")),
            }
        }
        self.routing.station_path.insert((j, s), path);
        self
    }

    pub fn build(self) -> Result<(DispatchInstance, Routing), Vec<BuildError>> {
        if self.errors.is_empty() {
            Ok((self.instance, self.routing))
        } else {
            Err(self.errors)
        }
    }
}
