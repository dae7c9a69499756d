use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::{QuboModel, TermFamily};
use crate::error::{Error, Result};
use crate::linear::{evaluate_objective, Schedule, Violation};
use crate::model::{DispatchInstance, Event, Tick};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GroupState {
    OneHot(Tick),
    Empty,
    Multiple(Vec<Tick>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decoded {
    /// Departures of the one-hot groups, objective and verdict. Feasible iff
    /// every group is one-hot, every auxiliary is consistent and the
    /// penalty energy sits on the floor.
    pub schedule: Schedule,
    pub groups: Vec<(Event, GroupState)>,
    /// Auxiliaries whose value differs from their product.
    pub inconsistent_aux: Vec<usize>,
    pub family_energy: BTreeMap<TermFamily, f64>,
    pub energy: f64,
    /// Energy minus the objective family.
    pub penalty: f64,
}

impl Decoded {
    pub fn is_one_hot(&self) -> bool {
        self.groups
            .iter()
            .all(|(_, g)| matches!(g, GroupState::OneHot(_)))
    }

    pub fn aux_consistent(&self) -> bool {
        self.inconsistent_aux.is_empty()
    }
}

pub fn decode(bits: &[bool], model: &QuboModel, instance: &DispatchInstance) -> Result<Decoded> {
    let energy = model.energy(bits)?;
    let index = &model.index;
    let mut departure = BTreeMap::new();
    let mut groups = Vec::with_capacity(index.groups().len());
    let mut violations = Vec::new();
    for g in index.groups() {
        let on: Vec<Tick> = g
            .range()
            .filter(|&i| bits[i])
            .map(|i| g.time_of(i))
            .collect();
        let state = match on.as_slice() {
            [] => {
                violations.push(Violation::Missing(g.event));
                GroupState::Empty
            }
            [t] => {
                departure.insert(g.event, *t);
                GroupState::OneHot(*t)
            }
            _ => {
                violations.push(Violation::Ambiguous {
                    event: g.event,
                    times: on.clone(),
                });
                GroupState::Multiple(on)
            }
        };
        groups.push((g.event, state));
    }
    let n_x = index.num_x();
    let inconsistent_aux: Vec<usize> = index
        .aux()
        .iter()
        .enumerate()
        .filter(|(k, a)| bits[n_x + k] != (bits[a.a] && bits[a.b]))
        .map(|(k, _)| n_x + k)
        .collect();
    let family_energy = model.family_energy(bits);
    let penalty = energy
        - family_energy
            .get(&TermFamily::Objective)
            .copied()
            .unwrap_or(0.0);

    let objective = if violations.is_empty() {
        match evaluate_objective(&departure, instance) {
            Ok(v) => v,
            Err(Error::OutsideWindow { .. }) | Err(Error::MissingDeparture(_)) => f64::INFINITY,
            Err(e) => return Err(e),
        }
    } else {
        f64::INFINITY
    };
    let feasible = violations.is_empty()
        && inconsistent_aux.is_empty()
        && (penalty - model.floor).abs() <= 1e-9;
    Ok(Decoded {
        schedule: Schedule {
            departure,
            objective,
            feasible,
            violations,
            precedence: None,
        },
        groups,
        inconsistent_aux,
        family_energy,
        energy,
        penalty,
    })
}
