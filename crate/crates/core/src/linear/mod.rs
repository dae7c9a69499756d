//! Precedence model with big-M disjunctions over departure times.
//!
//! Arrival times are substituted out through the full-speed running time, so
//! every constraint is a difference bound `t[later] >= t[earlier] + gap`,
//! optionally guarded by one value of a binary precedence variable.

mod schedule;
mod solve;

pub use schedule::{
    attribute_delays, check_feasibility, evaluate_objective, objective_of, Attribution, Schedule,
    Violation,
};
pub use solve::{
    propagate_earliest, solve_order_enumeration, solve_with, EnumerationOptions, Propagation,
    DEFAULT_ENUMERATION_CAP,
};

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::conflicts::{Conflict, ConflictSets, Family};
use crate::delays::{departure_windows, Window};
use crate::error::{Error, ParamKey, Result};
use crate::model::{
    DispatchInstance, Event, Routing, SegmentIx, StationIx, Tick, TrainIx, TrainPair,
};

/// Departure time variable `t(j, s_out)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeVar {
    pub event: Event,
    pub window: Window,
    pub weight: f64,
    pub d_max: Tick,
    pub counted: bool,
}

impl TimeVar {
    /// Contribution of a departure at `t` to the weighted delay objective.
    pub fn cost(&self, t: Tick) -> f64 {
        if !self.counted || self.d_max == 0 {
            return 0.0;
        }
        self.weight * (t - self.window.earliest) as f64 / self.d_max as f64
    }
}

/// Decision a precedence variable encodes. `y = 1` means the pair's first
/// train acts first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PrecedenceKey {
    /// Which train leaves the station first (line span and platform order).
    Departure { pair: TrainPair, station: StationIx },
    /// Which train enters the single-track section first.
    SingleTrack { pair: TrainPair, segment: SegmentIx },
    /// Which train uses the shared switches first.
    Switch { pair: TrainPair, station: StationIx },
}

impl PrecedenceKey {
    pub fn pair(&self) -> TrainPair {
        match *self {
            PrecedenceKey::Departure { pair, .. }
            | PrecedenceKey::SingleTrack { pair, .. }
            | PrecedenceKey::Switch { pair, .. } => pair,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Guard {
    pub var: usize,
    pub value: bool,
}

/// `t[later] >= t[earlier] + gap`, active when the guard holds (always if unguarded).
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub family: Family,
    pub conflict: Option<Conflict>,
    pub later: usize,
    pub earlier: usize,
    pub gap: Tick,
    pub guard: Option<Guard>,
}

/// Reference to a model column.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Column {
    Time(usize),
    Precedence(usize),
}

/// A constraint as a `>=` row with big-M applied.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub terms: Vec<(Column, f64)>,
    pub rhs: f64,
}

impl Constraint {
    pub fn is_big_m(&self) -> bool {
        self.guard.is_some()
    }

    pub fn is_active(&self, y: &[bool]) -> bool {
        self.guard.is_none_or(|g| y[g.var] == g.value)
    }

    pub fn holds(&self, times: &[Tick]) -> bool {
        times[self.later] >= times[self.earlier] + self.gap
    }

    pub fn is_tight(&self, times: &[Tick]) -> bool {
        times[self.later] == times[self.earlier] + self.gap
    }

    /// `t_later - t_earlier (+ mu (1 - y) | + mu y) >= gap`, constants moved right.
    pub fn row(&self, mu: Tick) -> Row {
        let mut terms = alloc::vec![
            (Column::Time(self.later), 1.0),
            (Column::Time(self.earlier), -1.0)
        ];
        let mut rhs = self.gap as f64;
        match self.guard {
            None => {}
            Some(Guard { var, value: true }) => {
                // + mu (1 - y)
                terms.push((Column::Precedence(var), -(mu as f64)));
                rhs -= mu as f64;
            }
            Some(Guard { var, value: false }) => {
                terms.push((Column::Precedence(var), mu as f64));
            }
        }
        Row { terms, rhs }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearModel {
    pub time_vars: Vec<TimeVar>,
    pub precedence_vars: Vec<PrecedenceKey>,
    pub constraints: Vec<Constraint>,
    /// Pairs of precedence variables that must take equal values.
    pub order_equalities: Vec<(usize, usize)>,
    pub mu: Tick,
    index: BTreeMap<Event, usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VariableCounts {
    pub num_time: usize,
    /// Stored precedence variables, one per decision key.
    pub num_precedence: usize,
    /// Independent precedence decisions once order equalities are merged.
    pub num_precedence_merged: usize,
}

impl LinearModel {
    pub fn var(&self, event: Event) -> Option<usize> {
        self.index.get(&event).copied()
    }

    pub fn precedence(&self, key: &PrecedenceKey) -> Option<usize> {
        self.precedence_vars.iter().position(|k| k == key)
    }

    /// Union-find classes of precedence variables under the order equalities.
    /// Returns the class of each variable, classes numbered by first member.
    pub fn precedence_classes(&self) -> (Vec<usize>, usize) {
        let n = self.precedence_vars.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &(a, b) in &self.order_equalities {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
                parent[hi] = lo;
            }
        }
        let mut class_of_root = BTreeMap::new();
        let mut class = Vec::with_capacity(n);
        for v in 0..n {
            let r = find(&mut parent, v);
            let next = class_of_root.len();
            class.push(*class_of_root.entry(r).or_insert(next));
        }
        (class, class_of_root.len())
    }
}

pub fn count_variables(model: &LinearModel) -> VariableCounts {
    VariableCounts {
        num_time: model.time_vars.len(),
        num_precedence: model.precedence_vars.len(),
        num_precedence_merged: model.precedence_classes().1,
    }
}

fn need(v: Option<Tick>, key: ParamKey) -> Result<Tick> {
    v.ok_or(Error::MissingParameter(key))
}

struct Builder<'a> {
    instance: &'a DispatchInstance,
    model: LinearModel,
    keys: BTreeMap<PrecedenceKey, usize>,
}

impl Builder<'_> {
    fn var(&self, j: TrainIx, s: StationIx) -> Result<usize> {
        self.model
            .var(Event::new(j, s))
            .ok_or(Error::MissingDeparture(Event::new(j, s)))
    }

    fn key(&mut self, key: PrecedenceKey) -> usize {
        if let Some(&v) = self.keys.get(&key) {
            return v;
        }
        let v = self.model.precedence_vars.len();
        self.model.precedence_vars.push(key);
        self.keys.insert(key, v);
        v
    }

    fn pass(&self, j: TrainIx, from: StationIx, to: StationIx) -> Result<Tick> {
        need(
            self.instance.timing.pass(j, from, to),
            ParamKey::Pass { train: j, from, to },
        )
    }

    fn res(&self, first: TrainIx, second: TrainIx, station: StationIx) -> Result<Tick> {
        need(
            self.instance.timing.res(first, second, station),
            ParamKey::Res {
                first,
                second,
                station,
            },
        )
    }

    fn push(&mut self, c: Constraint) {
        self.model.constraints.push(c);
    }

    /// Both disjuncts of a pairwise order: `first_first` applies when
    /// `pair.first()` goes first.
    fn disjunction(
        &mut self,
        key: PrecedenceKey,
        family: Family,
        conflict: Conflict,
        first_first: (usize, usize, Tick),
        second_first: (usize, usize, Tick),
    ) {
        let y = self.key(key);
        for ((later, earlier, gap), value) in [(first_first, true), (second_first, false)] {
            self.push(Constraint {
                family,
                conflict: Some(conflict),
                later,
                earlier,
                gap,
                guard: Some(Guard { var: y, value }),
            });
        }
    }

    /// Time variable and offset at which `j` uses the switches of `s`: its
    /// departure if it leaves `s`, its arrival otherwise.
    fn switch_event(&self, j: TrainIx, s: StationIx) -> Result<(usize, Tick)> {
        let train = self.instance.train(j);
        if train.departs(s) {
            return Ok((self.var(j, s)?, 0));
        }
        let prev = train
            .previous(s)
            .ok_or(Error::MissingDeparture(Event::new(j, s)))?;
        Ok((self.var(j, prev)?, self.pass(j, prev, s)?))
    }

    fn conflict(&mut self, c: &Conflict) -> Result<()> {
        let timing = &self.instance.timing;
        match *c {
            Conflict::Span { pair, from, to, .. } => {
                let (a, b) = (pair.first(), pair.second());
                let blocks = |j| {
                    need(
                        timing.blocks(j, from, to),
                        ParamKey::Blocks { train: j, from, to },
                    )
                };
                let (pa, pb) = (self.pass(a, from, to)?, self.pass(b, from, to)?);
                let (ta, tb) = (self.var(a, from)?, self.var(b, from)?);
                let gap_ab = blocks(a)? + (pa - pb).max(0);
                let gap_ba = blocks(b)? + (pb - pa).max(0);
                self.disjunction(
                    PrecedenceKey::Departure {
                        pair,
                        station: from,
                    },
                    Family::Span,
                    *c,
                    (tb, ta, gap_ab),
                    (ta, tb, gap_ba),
                );
            }
            Conflict::SingleTrack {
                forward,
                backward,
                segment,
                ..
            } => {
                let seg = self.instance.segment(segment);
                let (s, s2) = (seg.from, seg.to);
                let tf = self.var(forward, s)?;
                let tb = self.var(backward, s2)?;
                // The opposing train may leave only once the other has arrived.
                let forward_first = (tb, tf, self.pass(forward, s, s2)?);
                let backward_first = (tf, tb, self.pass(backward, s2, s)?);
                let pair = TrainPair::new(forward, backward);
                let (first_first, second_first) = if pair.first() == forward {
                    (forward_first, backward_first)
                } else {
                    (backward_first, forward_first)
                };
                self.disjunction(
                    PrecedenceKey::SingleTrack { pair, segment },
                    Family::SingleTrack,
                    *c,
                    first_first,
                    second_first,
                );
            }
            Conflict::StationTrack { pair, station, .. } => {
                let (a, b) = (pair.first(), pair.second());
                let arrival = |this: &Self, j: TrainIx| -> Result<(usize, Tick)> {
                    let prev = this
                        .instance
                        .train(j)
                        .previous(station)
                        .ok_or(Error::MissingDeparture(Event::new(j, station)))?;
                    Ok((this.var(j, prev)?, this.pass(j, prev, station)?))
                };
                let (ia, pass_a) = arrival(self, a)?;
                let (ib, pass_b) = arrival(self, b)?;
                let (oa, ob) = (self.var(a, station)?, self.var(b, station)?);
                // a leaves first: b enters after a has left and released the resource.
                let a_first = (ib, oa, self.res(a, b, station)? - pass_b);
                let b_first = (ia, ob, self.res(b, a, station)? - pass_a);
                self.disjunction(
                    PrecedenceKey::Departure { pair, station },
                    Family::TrackOccupancy,
                    *c,
                    a_first,
                    b_first,
                );
            }
            Conflict::Switch { pair, station } => {
                let (a, b) = (pair.first(), pair.second());
                let (va, oa) = self.switch_event(a, station)?;
                let (vb, ob) = self.switch_event(b, station)?;
                let a_first = (vb, va, oa + self.res(a, b, station)? - ob);
                let b_first = (va, vb, ob + self.res(b, a, station)? - oa);
                self.disjunction(
                    PrecedenceKey::Switch { pair, station },
                    Family::Switch,
                    *c,
                    a_first,
                    b_first,
                );
            }
            Conflict::Circulation {
                inbound,
                outbound,
                station,
            } => {
                let prev = self
                    .instance
                    .train(inbound)
                    .previous(station)
                    .ok_or(Error::MissingDeparture(Event::new(inbound, station)))?;
                let prep = need(
                    timing.prep(inbound, outbound, station),
                    ParamKey::Prep {
                        inbound,
                        outbound,
                        station,
                    },
                )?;
                let gap = self.pass(inbound, prev, station)? + prep;
                let later = self.var(outbound, station)?;
                let earlier = self.var(inbound, prev)?;
                self.push(Constraint {
                    family: Family::Circulation,
                    conflict: Some(*c),
                    later,
                    earlier,
                    gap,
                    guard: None,
                });
            }
        }
        Ok(())
    }
}

/// Emits the precedence model of `routing`: window-bounded departure
/// variables, minimal stay rows, and one guarded pair of rows per conflict.
pub fn build_linear_model(
    instance: &DispatchInstance,
    _routing: &Routing,
    conflicts: &ConflictSets,
) -> Result<LinearModel> {
    let windows = departure_windows(instance)?;
    let mut model = LinearModel {
        time_vars: Vec::new(),
        precedence_vars: Vec::new(),
        constraints: Vec::new(),
        order_equalities: Vec::new(),
        mu: 0,
        index: BTreeMap::new(),
    };
    for ev in instance.departure_events() {
        let train = instance.train(ev.train);
        model.index.insert(ev, model.time_vars.len());
        model.time_vars.push(TimeVar {
            event: ev,
            window: windows[&ev],
            weight: train.weight,
            d_max: instance.d_max(ev.train).unwrap_or(0),
            counted: train.is_counted(ev.station),
        });
    }
    let mut b = Builder {
        instance,
        model,
        keys: BTreeMap::new(),
    };

    for (j, train) in instance.trains.iter().enumerate() {
        let j = TrainIx(j);
        for (s, s2) in train.legs() {
            if !train.departs(s2) {
                continue;
            }
            let stop = need(
                instance.timing.stop(j, s2),
                ParamKey::Stop {
                    train: j,
                    station: s2,
                },
            )?;
            let gap = b.pass(j, s, s2)? + stop;
            let (later, earlier) = (b.var(j, s2)?, b.var(j, s)?);
            b.push(Constraint {
                family: Family::Stay,
                conflict: None,
                later,
                earlier,
                gap,
                guard: None,
            });
        }
    }

    for c in conflicts.conflicts() {
        b.conflict(c)?;
    }

    // No overtaking on a shared line track followed by a shared platform: the
    // order on leaving `from` is the order on leaving `to`.
    for c in conflicts.conflicts() {
        if let Conflict::Span { pair, from, to, .. } = *c {
            let platform = PrecedenceKey::Departure { pair, station: to };
            let line = PrecedenceKey::Departure {
                pair,
                station: from,
            };
            if let (Some(&a), Some(&p)) = (b.keys.get(&line), b.keys.get(&platform)) {
                let shares_platform = conflicts.conflicts().iter().any(|d| {
                    matches!(d, Conflict::StationTrack { pair: q, station, .. }
                        if *q == pair && *station == to)
                });
                if shares_platform && a != p {
                    b.model.order_equalities.push((a, p));
                }
            }
        }
    }

    let model = &mut b.model;
    let lo = model.time_vars.iter().map(|v| v.window.earliest).min();
    let hi = model.time_vars.iter().map(|v| v.window.latest).max();
    let span = match (lo, hi) {
        (Some(lo), Some(hi)) => hi - lo,
        _ => 0,
    };
    let max_gap = model
        .constraints
        .iter()
        .map(|c| c.gap.abs())
        .max()
        .unwrap_or(0);
    model.mu = span + max_gap + 1;
    Ok(b.model)
}
