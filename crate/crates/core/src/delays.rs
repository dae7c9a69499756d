//! Unavoidable delays and the departure windows they induce.

use alloc::collections::BTreeMap;

use crate::error::{Error, ParamKey, Result};
use crate::model::{DispatchInstance, Event, Tick, TrainIx};

/// Closed range of admissible departure ticks, `[t_U, t_U + d_max]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Window {
    pub earliest: Tick,
    pub latest: Tick,
}

impl Window {
    pub fn contains(&self, t: Tick) -> bool {
        self.earliest <= t && t <= self.latest
    }

    /// Number of grid points in the window.
    pub fn len(&self) -> usize {
        (self.latest - self.earliest + 1).max(0) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn points(&self) -> impl Iterator<Item = Tick> + Clone {
        self.earliest..=self.latest
    }
}

/// Earliest departure of every train at every station it departs, ignoring the
/// other trains.
///
/// The first departure is the scheduled one plus the primary delay. Downstream,
/// a departure is bounded by the arrival (previous departure plus running time)
/// plus the dwell time, and by the timetable plus any primary delay there.
pub fn propagate_unavoidable_delays(instance: &DispatchInstance) -> Result<BTreeMap<Event, Tick>> {
    let mut out = BTreeMap::new();
    for (j, train) in instance.trains.iter().enumerate() {
        let j = TrainIx(j);
        let mut previous: Option<Tick> = None;
        for (p, &s) in train.route.iter().enumerate() {
            let Some(scheduled) = train.schedule.get(p).and_then(|st| st.departure) else {
                // No departure here; only the terminal stop may lack one.
                previous = None;
                continue;
            };
            let primary = instance
                .scenario
                .primary_delay
                .get(&(j, s))
                .copied()
                .unwrap_or(0);
            let mut earliest = scheduled + primary;
            if p > 0 {
                let prev_station = train.route[p - 1];
                let pass =
                    instance
                        .timing
                        .pass(j, prev_station, s)
                        .ok_or(Error::MissingParameter(ParamKey::Pass {
                            train: j,
                            from: prev_station,
                            to: s,
                        }))?;
                let stop =
                    instance
                        .timing
                        .stop(j, s)
                        .ok_or(Error::MissingParameter(ParamKey::Stop {
                            train: j,
                            station: s,
                        }))?;
                if let Some(prev) = previous {
                    earliest = earliest.max(prev + pass + stop);
                }
            }
            out.insert(Event::new(j, s), earliest);
            previous = Some(earliest);
        }
    }
    Ok(out)
}

/// Departure windows `T_{j,s} = {t_U, ..., t_U + d_max(j)}` on the tick grid.
pub fn departure_windows(instance: &DispatchInstance) -> Result<BTreeMap<Event, Window>> {
    let earliest = propagate_unavoidable_delays(instance)?;
    earliest
        .into_iter()
        .map(|(ev, t)| {
            let d_max = instance
                .d_max(ev.train)
                .ok_or(Error::MissingParameter(ParamKey::DMax { train: ev.train }))?;
            Ok((
                ev,
                Window {
                    earliest: t,
                    latest: t + d_max,
                },
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture;
    use crate::model::StationIx;

    #[test]
    fn demo_unavoidable_departures() {
        let (inst, _) = fixture::demo();
        let t = propagate_unavoidable_delays(&inst).unwrap();
        let ev = |j: &str, s: &str| {
            Event::new(inst.train_by_id(j).unwrap(), inst.station_by_id(s).unwrap())
        };
        assert_eq!(t[&ev("j1", "s1")], 4);
        assert_eq!(t[&ev("j2", "s1")], 1);
        assert_eq!(t[&ev("j3", "s2")], 8);
        assert_eq!(t[&ev("j1", "s2")], 9);
        assert_eq!(t[&ev("j2", "s2")], 10);
        assert_eq!(t.len(), 5);
    }

    #[test]
    fn demo_windows() {
        let (inst, _) = fixture::demo();
        let w = departure_windows(&inst).unwrap();
        let ev = |j: &str, s: &str| {
            Event::new(inst.train_by_id(j).unwrap(), inst.station_by_id(s).unwrap())
        };
        assert_eq!(
            w[&ev("j1", "s1")],
            Window {
                earliest: 4,
                latest: 14
            }
        );
        assert_eq!(
            w[&ev("j2", "s1")],
            Window {
                earliest: 1,
                latest: 11
            }
        );
        assert_eq!(
            w[&ev("j3", "s2")],
            Window {
                earliest: 8,
                latest: 18
            }
        );
        assert!(w.values().all(|w| w.len() == 11));
    }

    #[test]
    fn zero_delay_and_zero_durations_reproduce_timetable() {
        let (mut inst, _) = fixture::demo();
        inst.scenario.primary_delay.clear();
        for v in inst.timing.pass.values_mut() {
            *v = 0;
        }
        for v in inst.timing.stop.values_mut() {
            *v = 0;
        }
        let t = propagate_unavoidable_delays(&inst).unwrap();
        for (ev, tu) in t {
            let train = inst.train(ev.train);
            let p = train.position(ev.station).unwrap();
            assert_eq!(Some(tu), train.schedule[p].departure);
        }
    }

    #[test]
    fn zero_slack_gives_singleton() {
        let (mut inst, _) = fixture::demo();
        for v in inst.scenario.d_max.values_mut() {
            *v = 0;
        }
        let w = departure_windows(&inst).unwrap();
        assert!(w.values().all(|w| w.len() == 1));
    }

    #[test]
    fn half_minute_grid() {
        // r = 2, d_max = 1 minute = 2 ticks -> 3 points spaced half a minute apart.
        let (mut inst, _) = fixture::demo();
        inst.scenario.resolution = 2;
        for v in inst.scenario.d_max.values_mut() {
            *v = 2;
        }
        let w = departure_windows(&inst).unwrap();
        let j1 = inst.train_by_id("j1").unwrap();
        let win = w[&Event::new(j1, StationIx(0))];
        assert_eq!(win.points().count(), 3);
        let minutes: alloc::vec::Vec<f64> = win.points().map(|t| t as f64 / 2.0).collect();
        assert_eq!(minutes[1] - minutes[0], 0.5);
    }

    #[test]
    fn missing_pass_is_reported() {
        let (mut inst, _) = fixture::demo();
        inst.timing.pass.clear();
        assert!(matches!(
            propagate_unavoidable_delays(&inst),
            Err(Error::MissingParameter(ParamKey::Pass { .. }))
        ));
    }
}
