use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::index::VarIndex;
use crate::error::{Error, ParamKey, Result};
use crate::model::{DispatchInstance, Event, StationIx, Tick, TrainIx};

/// Linear and quadratic coefficients over binary variables; `x^2 = x`, so a
/// diagonal pair is folded into the linear part.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Terms {
    pub linear: BTreeMap<usize, f64>,
    /// Keys are `(i, j)` with `i < j`.
    pub quadratic: BTreeMap<(usize, usize), f64>,
}

impl Terms {
    pub fn add_linear(&mut self, i: usize, c: f64) {
        *self.linear.entry(i).or_insert(0.0) += c;
    }

    pub fn add_quadratic(&mut self, i: usize, j: usize, c: f64) {
        if i == j {
            self.add_linear(i, c);
        } else {
            *self.quadratic.entry((i.min(j), i.max(j))).or_insert(0.0) += c;
        }
    }

    pub fn merge(&mut self, other: &Terms) {
        for (&i, &c) in &other.linear {
            self.add_linear(i, c);
        }
        for (&(i, j), &c) in &other.quadratic {
            self.add_quadratic(i, j, c);
        }
    }

    /// Drops entries that cancelled to exactly zero.
    pub fn prune(&mut self) {
        self.linear.retain(|_, c| *c != 0.0);
        self.quadratic.retain(|_, c| *c != 0.0);
    }

    pub fn is_empty(&self) -> bool {
        self.linear.is_empty() && self.quadratic.is_empty()
    }

    /// Value at `bits`; indices beyond `bits` read as zero.
    pub fn energy(&self, bits: &[bool]) -> f64 {
        let on = |i: usize| bits.get(i).copied().unwrap_or(false);
        let mut e = 0.0;
        for (&i, &c) in &self.linear {
            if on(i) {
                e += c;
            }
        }
        for (&(i, j), &c) in &self.quadratic {
            if on(i) && on(j) {
                e += c;
            }
        }
        e
    }
}

/// `coeff * x[a] * x[b] * x[c]` before reduction. `a` and `b` are the two
/// departures from the shared station; `c` is the follower's previous departure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CubicTerm {
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub coeff: f64,
}

/// Penalised region `lower < t_b - t_a < upper` for departures of two events.
/// A missing lower bound means unbounded below.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ForbiddenWindow {
    pub a: Event,
    pub b: Event,
    pub lower: Option<Tick>,
    pub upper: Tick,
}

impl ForbiddenWindow {
    pub fn forbids(&self, t_a: Tick, t_b: Tick) -> bool {
        let d = t_b - t_a;
        self.lower.is_none_or(|lo| lo < d) && d < self.upper
    }
}

fn pass(inst: &DispatchInstance, train: TrainIx, from: StationIx, to: StationIx) -> Result<Tick> {
    inst.timing
        .pass(train, from, to)
        .ok_or(Error::MissingParameter(ParamKey::Pass { train, from, to }))
}

fn blocks(inst: &DispatchInstance, train: TrainIx, from: StationIx, to: StationIx) -> Result<Tick> {
    inst.timing
        .blocks(train, from, to)
        .ok_or(Error::MissingParameter(ParamKey::Blocks {
            train,
            from,
            to,
        }))
}

pub(super) fn res(
    inst: &DispatchInstance,
    first: TrainIx,
    second: TrainIx,
    station: StationIx,
) -> Result<Tick> {
    inst.timing
        .res(first, second, station)
        .ok_or(Error::MissingParameter(ParamKey::Res {
            first,
            second,
            station,
        }))
}

pub(super) fn stop(inst: &DispatchInstance, train: TrainIx, station: StationIx) -> Result<Tick> {
    inst.timing
        .stop(train, station)
        .ok_or(Error::MissingParameter(ParamKey::Stop { train, station }))
}

fn previous(inst: &DispatchInstance, train: TrainIx, station: StationIx) -> Result<StationIx> {
    inst.train(train)
        .previous(station)
        .ok_or(Error::MissingDeparture(Event::new(train, station)))
}

/// `j` and `j2` leave `s` for `s2` on the same line track.
pub fn span_window(
    inst: &DispatchInstance,
    j: TrainIx,
    j2: TrainIx,
    s: StationIx,
    s2: StationIx,
) -> Result<ForbiddenWindow> {
    let (p, p2) = (pass(inst, j, s, s2)?, pass(inst, j2, s, s2)?);
    Ok(ForbiddenWindow {
        a: Event::new(j, s),
        b: Event::new(j2, s),
        lower: Some(-blocks(inst, j2, s, s2)? - (p2 - p).max(0)),
        upper: blocks(inst, j, s, s2)? + (p - p2).max(0),
    })
}

/// `j` runs `s -> s2` and `j2` runs `s2 -> s` on one bidirectional track.
pub fn single_track_window(
    inst: &DispatchInstance,
    j: TrainIx,
    j2: TrainIx,
    s: StationIx,
    s2: StationIx,
) -> Result<ForbiddenWindow> {
    Ok(ForbiddenWindow {
        a: Event::new(j, s),
        b: Event::new(j2, s2),
        lower: Some(-pass(inst, j2, s2, s)?),
        upper: pass(inst, j, s, s2)?,
    })
}

/// `j` runs `s -> s2` and departs again from `s2`.
pub fn stay_window(
    inst: &DispatchInstance,
    j: TrainIx,
    s: StationIx,
    s2: StationIx,
) -> Result<ForbiddenWindow> {
    Ok(ForbiddenWindow {
        a: Event::new(j, s),
        b: Event::new(j, s2),
        lower: None,
        upper: pass(inst, j, s, s2)? + stop(inst, j, s2)?,
    })
}

/// `j` terminates at `s` and its rolling stock leaves as `j2`.
pub fn circulation_window(
    inst: &DispatchInstance,
    j: TrainIx,
    j2: TrainIx,
    s: StationIx,
) -> Result<ForbiddenWindow> {
    let prev = previous(inst, j, s)?;
    let prep = inst
        .timing
        .prep(j, j2, s)
        .ok_or(Error::MissingParameter(ParamKey::Prep {
            inbound: j,
            outbound: j2,
            station: s,
        }))?;
    Ok(ForbiddenWindow {
        a: Event::new(j, prev),
        b: Event::new(j2, s),
        lower: None,
        upper: pass(inst, j, prev, s)? + prep,
    })
}

/// Event at which `j` crosses the switches of `s`, and the offset from that
/// event's departure variable: its own departure, or its arrival expressed
/// through the previous departure.
fn switch_event(inst: &DispatchInstance, j: TrainIx, s: StationIx) -> Result<(Event, Tick)> {
    if inst.train(j).departs(s) {
        return Ok((Event::new(j, s), 0));
    }
    let prev = previous(inst, j, s)?;
    Ok((Event::new(j, prev), pass(inst, j, prev, s)?))
}

/// `j` and `j2` cross a common switch group at `s`.
pub fn switch_window(
    inst: &DispatchInstance,
    j: TrainIx,
    j2: TrainIx,
    s: StationIx,
) -> Result<ForbiddenWindow> {
    let (a, off_a) = switch_event(inst, j, s)?;
    let (b, off_b) = switch_event(inst, j2, s)?;
    Ok(ForbiddenWindow {
        a,
        b,
        lower: Some(off_a - off_b - res(inst, j2, j, s)?),
        upper: off_a - off_b + res(inst, j, j2, s)?,
    })
}

/// Adds `2 p_pair` for every grid pair inside `window`.
pub fn emit_pairwise_penalty(
    window: &ForbiddenWindow,
    index: &VarIndex,
    p_pair: f64,
    terms: &mut Terms,
) -> Result<()> {
    let ga = *index
        .group(window.a)
        .ok_or(Error::MissingDeparture(window.a))?;
    let gb = *index
        .group(window.b)
        .ok_or(Error::MissingDeparture(window.b))?;
    for ia in ga.range() {
        let ta = ga.time_of(ia);
        for ib in gb.range() {
            if window.forbids(ta, gb.time_of(ib)) {
                terms.add_quadratic(ia, ib, 2.0 * p_pair);
            }
        }
    }
    Ok(())
}

/// `j` leaves `s` before `j2` on a shared station track, so `j2` may arrive
/// only after `j` has left and the resource is released. Penalises
/// `x[j,s,t] x[j2,s,t'] x[j2,prev,t'']` whenever
/// `t'' + pass(j2) - res(j, j2) < t < t'`, or `t <= t'` with `inclusive`.
pub fn emit_track_occupation_cubic(
    inst: &DispatchInstance,
    j: TrainIx,
    j2: TrainIx,
    s: StationIx,
    index: &VarIndex,
    p_pair: f64,
    inclusive: bool,
) -> Result<Vec<CubicTerm>> {
    let prev = previous(inst, j2, s)?;
    let shift = pass(inst, j2, prev, s)? - res(inst, j, j2, s)?;
    let group = |e: Event| index.group(e).copied().ok_or(Error::MissingDeparture(e));
    let g = group(Event::new(j, s))?;
    let g2 = group(Event::new(j2, s))?;
    let g_prev = group(Event::new(j2, prev))?;
    let mut out = Vec::new();
    for ia in g.range() {
        let t = g.time_of(ia);
        for ib in g2.range() {
            let t2 = g2.time_of(ib);
            if t > t2 || (t == t2 && !inclusive) {
                continue;
            }
            for ic in g_prev.range() {
                if g_prev.time_of(ic) + shift < t {
                    out.push(CubicTerm {
                        a: ia,
                        b: ib,
                        c: ic,
                        coeff: 2.0 * p_pair,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// `w_j (t - t_U) / d_max` on every counted indicator; zero coefficients omitted.
pub fn encode_objective(index: &VarIndex, inst: &DispatchInstance) -> Terms {
    let mut terms = Terms::default();
    for g in index.groups() {
        let train = inst.train(g.event.train);
        let d_max = inst.d_max(g.event.train).unwrap_or(0);
        if !train.is_counted(g.event.station) || d_max == 0 {
            continue;
        }
        for i in g.range() {
            let c = train.weight * (g.time_of(i) - g.window.earliest) as f64 / d_max as f64;
            if c != 0.0 {
                terms.add_linear(i, c);
            }
        }
    }
    terms
}

/// `p_sum (sum_{t != t'} x_t x_t' - sum_t x_t)` per group, minimal exactly
/// when one indicator is set.
pub fn encode_sum_constraint(index: &VarIndex, p_sum: f64) -> Terms {
    let mut terms = Terms::default();
    for g in index.groups() {
        for i in g.range() {
            terms.add_linear(i, -p_sum);
            for k in i + 1..g.start + g.len() {
                terms.add_quadratic(i, k, 2.0 * p_sum);
            }
        }
    }
    terms
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture;
    use crate::qubo::index::index_variables;

    fn ids(inst: &DispatchInstance) -> (TrainIx, TrainIx, TrainIx, StationIx, StationIx) {
        (
            inst.train_by_id("j1").unwrap(),
            inst.train_by_id("j2").unwrap(),
            inst.train_by_id("j3").unwrap(),
            inst.station_by_id("s1").unwrap(),
            inst.station_by_id("s2").unwrap(),
        )
    }

    #[test]
    fn demo_span_window() {
        let (inst, _) = fixture::demo();
        let (j1, j2, _, s1, s2) = ids(&inst);
        let w = span_window(&inst, j1, j2, s1, s2).unwrap();
        assert_eq!((w.lower, w.upper), (Some(-6), 2));
        // t2 - 2 < t1 < t2 + 6
        for t1 in 0..20 {
            for t2 in 0..20 {
                assert_eq!(w.forbids(t1, t2), t2 - 2 < t1 && t1 < t2 + 6);
            }
        }
    }

    #[test]
    fn mirrored_span_window_forbids_the_same_pairs() {
        let (inst, _) = fixture::demo();
        let (j1, j2, _, s1, s2) = ids(&inst);
        let w = span_window(&inst, j1, j2, s1, s2).unwrap();
        let m = span_window(&inst, j2, j1, s1, s2).unwrap();
        assert_eq!((m.lower, m.upper), (Some(-2), 6));
        for t1 in 0..20 {
            for t2 in 0..20 {
                assert_eq!(w.forbids(t1, t2), m.forbids(t2, t1));
            }
        }
    }

    #[test]
    fn demo_stay_and_single_track_windows() {
        let (inst, _) = fixture::demo();
        let (j1, j2, j3, s1, s2) = ids(&inst);
        assert_eq!(stay_window(&inst, j1, s1, s2).unwrap().upper, 5);
        assert_eq!(stay_window(&inst, j2, s1, s2).unwrap().upper, 9);
        let w = single_track_window(&inst, j2, j3, s1, s2).unwrap();
        assert_eq!((w.lower, w.upper), (Some(-8), 8));
    }

    #[test]
    fn objective_coefficients() {
        let (inst, routing) = fixture::demo();
        let (j1, _, j3, s1, s2) = ids(&inst);
        let index = index_variables(&inst, &routing).unwrap();
        let obj = encode_objective(&index, &inst);
        let x = |j, s, t| index.x(Event::new(j, s), t).unwrap();
        assert_eq!(obj.linear.get(&x(j1, s1, 4)), None);
        assert!((obj.linear[&x(j1, s1, 7)] - 0.6).abs() < 1e-12);
        assert!((obj.linear[&x(j3, s2, 10)] - 0.2).abs() < 1e-12);
        let uncounted = index.group(Event::new(j1, s2)).unwrap();
        assert!(uncounted.range().all(|i| !obj.linear.contains_key(&i)));
    }

    #[test]
    fn sum_constraint_group_energy() {
        let (inst, routing) = fixture::demo();
        let index = index_variables(&inst, &routing).unwrap();
        let terms = encode_sum_constraint(&index, 5.0);
        let g = index.groups()[0];
        for k in 0..=4usize {
            let mut bits = alloc::vec![false; index.num_x()];
            for i in 0..k {
                bits[g.start + i] = true;
            }
            let k = k as f64;
            assert_eq!(terms.energy(&bits), 5.0 * k * (k - 2.0));
        }
    }

    #[test]
    fn demo_cubic_families() {
        let (inst, routing) = fixture::demo();
        let (j1, j2, _, s1, s2) = ids(&inst);
        let index = index_variables(&inst, &routing).unwrap();
        let x = |j, s, t| index.x(Event::new(j, s), t).unwrap();
        // j2 leaves s2 first: t1 + 4 - 1 < t2* < t1*
        let first = emit_track_occupation_cubic(&inst, j2, j1, s2, &index, 5.0, false).unwrap();
        assert!(first
            .iter()
            .any(|c| c.a == x(j2, s2, 13) && c.b == x(j1, s2, 14) && c.c == x(j1, s1, 9)));
        assert!(!first
            .iter()
            .any(|c| c.a == x(j2, s2, 12) && c.b == x(j1, s2, 14) && c.c == x(j1, s1, 9)));
        assert!(first.iter().all(|c| c.coeff == 10.0));
        // j1 leaves s2 first: t2 + 8 - 1 < t1* < t2*
        let second = emit_track_occupation_cubic(&inst, j1, j2, s2, &index, 5.0, false).unwrap();
        let hit = |t2: Tick, t1s: Tick, t2s: Tick| {
            second
                .iter()
                .any(|c| c.a == x(j1, s2, t1s) && c.b == x(j2, s2, t2s) && c.c == x(j2, s1, t2))
        };
        assert!(hit(1, 9, 10));
        assert!(!hit(2, 9, 11));
    }
}
