use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::solve::objective_of_times;
use super::{Constraint, LinearModel, PrecedenceKey};
use crate::conflicts::{Conflict, Family};
use crate::delays::{departure_windows, Window};
use crate::error::{Error, Result};
use crate::model::{DispatchInstance, Event, Tick};

/// Departure times of every decided event, with their evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    pub departure: BTreeMap<Event, Tick>,
    pub objective: f64,
    pub feasible: bool,
    pub violations: Vec<Violation>,
    /// Precedence values the schedule was derived from, when known.
    pub precedence: Option<Vec<bool>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    Missing(Event),
    /// More than one departure time selected for the event.
    Ambiguous {
        event: Event,
        times: Vec<Tick>,
    },
    Window {
        event: Event,
        time: Tick,
        window: Window,
    },
    /// A condition that holds for every order is not met.
    Unconditional {
        family: Family,
        conflict: Option<Conflict>,
        later: Event,
        earlier: Event,
        required: Tick,
        actual: Tick,
    },
    /// No order of the pair satisfies this condition.
    Disjunction {
        conflict: Conflict,
        key: PrecedenceKey,
    },
    /// Pinned precedence decisions contradict an order equality.
    ContradictoryFixing,
}

impl Violation {
    pub fn family(&self) -> Option<Family> {
        match self {
            Violation::Missing(_) | Violation::Ambiguous { .. } | Violation::Window { .. } => {
                Some(Family::Window)
            }
            Violation::Unconditional { family, .. } => Some(*family),
            Violation::Disjunction { conflict, .. } => Some(conflict.family()),
            Violation::ContradictoryFixing => None,
        }
    }
}

impl Schedule {
    /// Wraps raw times; violations are not computed.
    pub fn from_times(model: &LinearModel, times: &[Tick]) -> Schedule {
        Schedule {
            departure: model
                .time_vars
                .iter()
                .zip(times)
                .map(|(v, &t)| (v.event, t))
                .collect(),
            objective: objective_of_times(model, times),
            feasible: false,
            violations: Vec::new(),
            precedence: None,
        }
    }

    /// Evaluates `departure` against `model` and fills objective and verdict.
    pub fn evaluated(model: &LinearModel, departure: BTreeMap<Event, Tick>) -> Schedule {
        let times = times_of(model, &departure);
        let mut s = Schedule {
            objective: times
                .as_ref()
                .map(|t| objective_of_times(model, t))
                .unwrap_or(f64::INFINITY),
            departure,
            feasible: false,
            violations: Vec::new(),
            precedence: None,
        };
        s.violations = check_feasibility(&s, model);
        s.feasible = s.violations.is_empty();
        s
    }

    /// Delay beyond the unavoidable departure time of each event.
    pub fn secondary_delay(&self, model: &LinearModel) -> BTreeMap<Event, Tick> {
        model
            .time_vars
            .iter()
            .filter_map(|v| {
                self.departure
                    .get(&v.event)
                    .map(|&t| (v.event, t - v.window.earliest))
            })
            .collect()
    }
}

fn times_of(model: &LinearModel, departure: &BTreeMap<Event, Tick>) -> Option<Vec<Tick>> {
    model
        .time_vars
        .iter()
        .map(|v| departure.get(&v.event).copied())
        .collect()
}

/// Weighted normalised secondary delay of `departures`. Every counted
/// departure must be present and inside its window.
pub fn evaluate_objective(
    departures: &BTreeMap<Event, Tick>,
    instance: &DispatchInstance,
) -> Result<f64> {
    let windows = departure_windows(instance)?;
    let mut total = 0.0;
    for (ev, w) in &windows {
        let train = instance.train(ev.train);
        if !train.is_counted(ev.station) {
            continue;
        }
        let &t = departures.get(ev).ok_or(Error::MissingDeparture(*ev))?;
        if !w.contains(t) {
            return Err(Error::OutsideWindow {
                event: *ev,
                time: t,
                earliest: w.earliest,
                latest: w.latest,
            });
        }
        let d_max = instance.d_max(ev.train).unwrap_or(0);
        if d_max > 0 {
            total += train.weight * (t - w.earliest) as f64 / d_max as f64;
        }
    }
    Ok(total)
}

/// Objective of `departures` under the model's windows and weights.
pub fn objective_of(model: &LinearModel, departures: &BTreeMap<Event, Tick>) -> Result<f64> {
    let times = times_of(model, departures).ok_or_else(|| {
        let missing = model
            .time_vars
            .iter()
            .find(|v| !departures.contains_key(&v.event))
            .map(|v| v.event);
        Error::MissingDeparture(missing.expect("some event is missing"))
    })?;
    Ok(objective_of_times(model, &times))
}

/// Lists every condition of `model` that `schedule` breaks. A pair's
/// disjunction is broken when no single order satisfies all conditions tied
/// to it.
pub fn check_feasibility(schedule: &Schedule, model: &LinearModel) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut times = Vec::with_capacity(model.time_vars.len());
    for v in &model.time_vars {
        match schedule.departure.get(&v.event) {
            Some(&t) => {
                if !v.window.contains(t) {
                    out.push(Violation::Window {
                        event: v.event,
                        time: t,
                        window: v.window,
                    });
                }
                times.push(t);
            }
            None => {
                out.push(Violation::Missing(v.event));
                times.push(v.window.earliest);
            }
        }
    }
    if out.iter().any(|v| matches!(v, Violation::Missing(_))) {
        return out;
    }

    for c in model.constraints.iter().filter(|c| c.guard.is_none()) {
        if !c.holds(&times) {
            out.push(Violation::Unconditional {
                family: c.family,
                conflict: c.conflict,
                later: model.time_vars[c.later].event,
                earlier: model.time_vars[c.earlier].event,
                required: times[c.earlier] + c.gap,
                actual: times[c.later],
            });
        }
    }

    let (class, k) = model.precedence_classes();
    let mut by_class: Vec<Vec<&Constraint>> = (0..k).map(|_| Vec::new()).collect();
    for c in &model.constraints {
        if let Some(g) = c.guard {
            by_class[class[g.var]].push(c);
        }
    }
    for members in by_class {
        let failing = |value: bool| -> Vec<&Constraint> {
            members
                .iter()
                .copied()
                .filter(|c| c.guard.is_some_and(|g| g.value == value) && !c.holds(&times))
                .collect()
        };
        let (on_true, on_false) = (failing(true), failing(false));
        if on_true.is_empty() || on_false.is_empty() {
            continue;
        }
        let conflicts_of = |cs: &[&Constraint]| -> Vec<Conflict> {
            let mut v: Vec<Conflict> = cs.iter().filter_map(|c| c.conflict).collect();
            v.sort();
            v.dedup();
            v
        };
        let (ct, cf) = (conflicts_of(&on_true), conflicts_of(&on_false));
        let both: Vec<Conflict> = ct.iter().filter(|c| cf.contains(c)).copied().collect();
        let named = if !both.is_empty() {
            both
        } else if ct.len() <= cf.len() {
            ct
        } else {
            cf
        };
        for conflict in named {
            let key = members
                .iter()
                .find(|c| c.conflict == Some(conflict))
                .and_then(|c| c.guard)
                .map(|g| model.precedence_vars[g.var])
                .expect("named conflicts come from guarded rows");
            out.push(Violation::Disjunction { conflict, key });
        }
    }
    out
}

/// Delay a conflict imposes on the schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct Attribution {
    pub conflict: Conflict,
    /// Weighted normalised secondary delay of the departures the conflict holds back.
    pub score: f64,
    /// Whether a departure it holds back lies beyond its window.
    pub beyond_window: bool,
}

/// Credits each pushed departure to the conflicts whose conditions are tight
/// at it. Conflicts that hold nothing back are omitted.
pub fn attribute_delays(model: &LinearModel, schedule: &Schedule) -> Vec<Attribution> {
    let Some(times) = times_of(model, &schedule.departure) else {
        return Vec::new();
    };
    let mut out: Vec<Attribution> = Vec::new();
    for c in &model.constraints {
        let Some(conflict) = c.conflict else { continue };
        let var = &model.time_vars[c.later];
        let t = times[c.later];
        if t <= var.window.earliest || !c.is_tight(&times) {
            continue;
        }
        let score = var.cost(t);
        let beyond = t > var.window.latest;
        match out.iter_mut().find(|a| a.conflict == conflict) {
            Some(a) => {
                a.score += score;
                a.beyond_window |= beyond;
            }
            None => out.push(Attribution {
                conflict,
                score,
                beyond_window: beyond,
            }),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conflicts::derive_conflict_sets;
    use crate::fixture;
    use crate::linear::build_linear_model;

    fn setup() -> (DispatchInstance, LinearModel) {
        let (inst, routing) = fixture::demo();
        let sets = derive_conflict_sets(&inst, &routing);
        let m = build_linear_model(&inst, &routing, &sets).unwrap();
        (inst, m)
    }

    fn departures(inst: &DispatchInstance, v: &[(&str, &str, Tick)]) -> BTreeMap<Event, Tick> {
        v.iter()
            .map(|&(j, s, t)| {
                (
                    Event::new(inst.train_by_id(j).unwrap(), inst.station_by_id(s).unwrap()),
                    t,
                )
            })
            .collect()
    }

    #[test]
    fn simultaneous_departure_breaks_the_span_disjunction() {
        let (inst, m) = setup();
        let d = departures(
            &inst,
            &[
                ("j1", "s1", 4),
                ("j2", "s1", 4),
                ("j3", "s2", 8),
                ("j1", "s2", 9),
                ("j2", "s2", 13),
            ],
        );
        let s = Schedule::evaluated(&m, d);
        assert!(!s.feasible);
        assert_eq!(s.violations.len(), 1, "{:?}", s.violations);
        assert_eq!(s.violations[0].family(), Some(Family::Span));
    }

    #[test]
    fn optimum_is_feasible_and_attributed_to_the_span() {
        let (inst, m) = setup();
        let d = departures(
            &inst,
            &[
                ("j1", "s1", 4),
                ("j2", "s1", 6),
                ("j3", "s2", 8),
                ("j1", "s2", 9),
                ("j2", "s2", 15),
            ],
        );
        let s = Schedule::evaluated(&m, d.clone());
        assert!(s.feasible, "{:?}", s.violations);
        assert!((s.objective - 0.5).abs() < 1e-12);
        assert!((evaluate_objective(&d, &inst).unwrap() - 0.5).abs() < 1e-12);
        let a = attribute_delays(&m, &s);
        assert_eq!(a.len(), 1);
        assert_eq!(a[0].conflict.family(), Family::Span);
        assert!((a[0].score - 0.5).abs() < 1e-12);
    }

    #[test]
    fn objective_of_a_hand_schedule() {
        let (inst, _) = setup();
        let d = departures(&inst, &[("j1", "s1", 4), ("j2", "s1", 2), ("j3", "s2", 10)]);
        assert!((evaluate_objective(&d, &inst).unwrap() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn objective_rejects_out_of_window_times() {
        let (inst, _) = setup();
        let d = departures(
            &inst,
            &[("j1", "s1", 40), ("j2", "s1", 2), ("j3", "s2", 10)],
        );
        assert!(matches!(
            evaluate_objective(&d, &inst),
            Err(Error::OutsideWindow { time: 40, .. })
        ));
    }

    #[test]
    fn stay_shortfall_is_unconditional() {
        let (inst, m) = setup();
        let d = departures(
            &inst,
            &[
                ("j1", "s1", 4),
                ("j2", "s1", 6),
                ("j3", "s2", 8),
                ("j1", "s2", 9),
                ("j2", "s2", 14),
            ],
        );
        let s = Schedule::evaluated(&m, d);
        assert!(s
            .violations
            .iter()
            .any(|v| v.family() == Some(Family::Stay)));
    }
}
