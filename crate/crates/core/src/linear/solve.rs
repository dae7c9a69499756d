//! Exact solution of the precedence model by enumerating orders.
//!
//! For fixed precedence values the model is a system of difference
//! constraints, whose least solution above the window lower bounds is found by
//! label-correcting propagation. The least solution minimises every departure
//! at once, so it is optimal for a nonnegative weighted objective.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use super::schedule::{check_feasibility, Schedule};
use super::{LinearModel, PrecedenceKey};
use crate::error::{Error, Result};
use crate::model::Tick;

pub const DEFAULT_ENUMERATION_CAP: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnumerationOptions {
    /// Largest number of free precedence classes that will be enumerated.
    pub cap: usize,
    /// Decisions pinned in advance; `true` lets the pair's first train go first.
    pub fixed: BTreeMap<PrecedenceKey, bool>,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        EnumerationOptions {
            cap: DEFAULT_ENUMERATION_CAP,
            fixed: BTreeMap::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Propagation {
    pub times: Vec<Tick>,
    /// A positive cycle among the active constraints; `times` is then meaningless.
    pub cycle: bool,
}

impl Propagation {
    /// Total amount by which departures exceed their windows.
    pub fn excess(&self, model: &LinearModel) -> Option<Tick> {
        if self.cycle {
            return None;
        }
        Some(
            self.times
                .iter()
                .zip(&model.time_vars)
                .map(|(&t, v)| (t - v.window.latest).max(0))
                .sum(),
        )
    }

    pub fn within_windows(&self, model: &LinearModel) -> bool {
        self.excess(model) == Some(0)
    }
}

/// Least departure times satisfying every constraint active under `y`,
/// starting from the window lower bounds. Upper bounds are not enforced.
pub fn propagate_earliest(model: &LinearModel, y: &[bool]) -> Propagation {
    let mut times: Vec<Tick> = model.time_vars.iter().map(|v| v.window.earliest).collect();
    let active: Vec<_> = model
        .constraints
        .iter()
        .filter(|c| c.is_active(y))
        .collect();
    let n = times.len();
    for _ in 0..=n {
        let mut changed = false;
        for c in &active {
            let need = times[c.earlier] + c.gap;
            if times[c.later] < need {
                times[c.later] = need;
                changed = true;
            }
        }
        if !changed {
            return Propagation {
                times,
                cycle: false,
            };
        }
    }
    Propagation { times, cycle: true }
}

/// Optimal schedule over all precedence orders, ties broken towards the
/// lexicographically smallest precedence vector.
pub fn solve_order_enumeration(model: &LinearModel) -> Result<Schedule> {
    solve_with(model, &EnumerationOptions::default())
}

pub fn solve_with(model: &LinearModel, options: &EnumerationOptions) -> Result<Schedule> {
    let (class, k) = model.precedence_classes();
    let mut pinned: Vec<Option<bool>> = vec![None; k];
    let mut contradictory = false;
    for (key, &value) in &options.fixed {
        if let Some(v) = model.precedence(key) {
            let c = class[v];
            match pinned[c] {
                Some(old) if old != value => contradictory = true,
                _ => pinned[c] = Some(value),
            }
        }
    }
    let free: Vec<usize> = (0..k).filter(|&c| pinned[c].is_none()).collect();
    if free.len() > options.cap {
        return Err(Error::EnumerationCap {
            free: free.len(),
            cap: options.cap,
        });
    }

    let mut class_value: Vec<bool> = pinned.iter().map(|p| p.unwrap_or(false)).collect();
    let mut y = vec![false; model.precedence_vars.len()];
    // (objective, y, times) of the best feasible order; (excess, y, times) otherwise.
    let mut best: Option<(f64, Vec<bool>, Vec<Tick>)> = None;
    let mut fallback: Option<(Tick, Vec<bool>, Vec<Tick>)> = None;

    // The first free class is the most significant bit, so increasing masks
    // visit precedence vectors in lexicographic order.
    let m = free.len();
    for mask in 0u64..(1u64 << m) {
        for (i, &c) in free.iter().enumerate() {
            class_value[c] = (mask >> (m - 1 - i)) & 1 == 1;
        }
        for (v, yv) in y.iter_mut().enumerate() {
            *yv = class_value[class[v]];
        }
        let prop = propagate_earliest(model, &y);
        let Some(excess) = prop.excess(model) else {
            continue;
        };
        if excess == 0 && !contradictory {
            let obj = objective_of_times(model, &prop.times);
            if best.as_ref().is_none_or(|(b, _, _)| obj < *b - 1e-9) {
                best = Some((obj, y.clone(), prop.times));
            }
        } else if best.is_none() && fallback.as_ref().is_none_or(|(e, _, _)| excess < *e) {
            fallback = Some((excess, y.clone(), prop.times));
        }
    }

    let (y, times) = match (best, fallback) {
        (Some((_, y, t)), _) => (y, t),
        (None, Some((_, y, t))) => (y, t),
        (None, None) => {
            // Every order contains a positive cycle.
            let times: Vec<Tick> = model.time_vars.iter().map(|v| v.window.earliest).collect();
            (vec![false; model.precedence_vars.len()], times)
        }
    };
    let mut schedule = Schedule::from_times(model, &times);
    schedule.precedence = Some(y);
    schedule.violations = check_feasibility(&schedule, model);
    if contradictory {
        schedule
            .violations
            .push(super::Violation::ContradictoryFixing);
    }
    schedule.feasible = schedule.violations.is_empty();
    Ok(schedule)
}

pub(super) fn objective_of_times(model: &LinearModel, times: &[Tick]) -> f64 {
    model
        .time_vars
        .iter()
        .zip(times)
        .map(|(v, &t)| v.cost(t))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conflicts::derive_conflict_sets;
    use crate::fixture;
    use crate::linear::build_linear_model;
    use crate::model::{DispatchInstance, Event, Routing, TrainPair};

    fn model(f: fn() -> (DispatchInstance, Routing)) -> (DispatchInstance, LinearModel) {
        let (inst, routing) = f();
        let sets = derive_conflict_sets(&inst, &routing);
        let m = build_linear_model(&inst, &routing, &sets).unwrap();
        (inst, m)
    }

    fn time(inst: &DispatchInstance, s: &Schedule, j: &str, st: &str) -> Tick {
        s.departure[&Event::new(
            inst.train_by_id(j).unwrap(),
            inst.station_by_id(st).unwrap(),
        )]
    }

    #[test]
    fn default_optimum() {
        let (inst, m) = model(fixture::demo);
        let s = solve_order_enumeration(&m).unwrap();
        assert!(s.feasible);
        assert_eq!(time(&inst, &s, "j1", "s1"), 4);
        assert_eq!(time(&inst, &s, "j2", "s1"), 6);
        assert_eq!(time(&inst, &s, "j3", "s2"), 8);
        assert_eq!(time(&inst, &s, "j1", "s2"), 9);
        assert_eq!(time(&inst, &s, "j2", "s2"), 15);
        assert!((s.objective - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rerouted_optimum() {
        let (inst, m) = model(fixture::demo_rerouted);
        let s = solve_order_enumeration(&m).unwrap();
        assert!(s.feasible);
        assert_eq!(time(&inst, &s, "j1", "s1"), 4);
        assert_eq!(time(&inst, &s, "j2", "s1"), 2);
        assert_eq!(time(&inst, &s, "j3", "s2"), 10);
        assert_eq!(time(&inst, &s, "j1", "s2"), 9);
        assert_eq!(time(&inst, &s, "j2", "s2"), 11);
        assert!((s.objective - 0.3).abs() < 1e-12);
    }

    #[test]
    fn forcing_the_wrong_meet_is_infeasible() {
        let (inst, m) = model(fixture::demo_rerouted);
        let j2 = inst.train_by_id("j2").unwrap();
        let j3 = inst.train_by_id("j3").unwrap();
        let segment = inst.segment_between(
            inst.station_by_id("s1").unwrap(),
            inst.station_by_id("s2").unwrap(),
        );
        let key = PrecedenceKey::SingleTrack {
            pair: TrainPair::new(j2, j3),
            segment: segment.unwrap().0,
        };
        // j2 is the pair's first train; `false` sends j3 first.
        let options = EnumerationOptions {
            fixed: [(key, false)].into_iter().collect(),
            ..Default::default()
        };
        let s = solve_with(&m, &options).unwrap();
        assert!(!s.feasible);
        assert_eq!(time(&inst, &s, "j2", "s1"), 16);
    }

    #[test]
    fn cap_is_enforced() {
        let (_, m) = model(fixture::demo_rerouted);
        let options = EnumerationOptions {
            cap: 1,
            ..Default::default()
        };
        assert_eq!(
            solve_with(&m, &options),
            Err(Error::EnumerationCap { free: 2, cap: 1 })
        );
    }
}
