use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::delays::{departure_windows, Window};
use crate::error::Result;
use crate::model::{DispatchInstance, Event, Routing, Tick};

/// One-hot group: the time-indexed variables of one departure event.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Group {
    pub event: Event,
    pub window: Window,
    /// Index of the variable for `window.earliest`; the group is contiguous.
    pub start: usize,
}

impl Group {
    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }

    pub fn range(&self) -> core::ops::Range<usize> {
        self.start..self.start + self.len()
    }

    pub fn time_of(&self, i: usize) -> Tick {
        self.window.earliest + (i - self.start) as Tick
    }
}

/// `z = x[a] * x[b]`, `a < b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AuxVar {
    pub a: usize,
    pub b: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    /// Departure of `event` at grid time `time`.
    X {
        event: Event,
        time: Tick,
    },
    Aux(AuxVar),
}

/// Dense numbering of departure indicators followed by auxiliary products.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VarIndex {
    groups: Vec<Group>,
    group_of: BTreeMap<Event, usize>,
    num_x: usize,
    aux: Vec<AuxVar>,
    aux_of: BTreeMap<AuxVar, usize>,
}

impl VarIndex {
    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn group(&self, event: Event) -> Option<&Group> {
        self.group_of.get(&event).map(|&g| &self.groups[g])
    }

    pub fn num_x(&self) -> usize {
        self.num_x
    }

    pub fn aux(&self) -> &[AuxVar] {
        &self.aux
    }

    /// All variables, departure indicators and auxiliaries.
    pub fn len(&self) -> usize {
        self.num_x + self.aux.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x(&self, event: Event, time: Tick) -> Option<usize> {
        let g = self.group(event)?;
        g.window
            .contains(time)
            .then(|| g.start + (time - g.window.earliest) as usize)
    }

    pub fn var(&self, i: usize) -> Option<Var> {
        if i < self.num_x {
            let g = self.groups.partition_point(|g| g.start + g.len() <= i);
            let g = &self.groups[g];
            Some(Var::X {
                event: g.event,
                time: g.time_of(i),
            })
        } else {
            self.aux.get(i - self.num_x).copied().map(Var::Aux)
        }
    }

    pub fn aux_index(&self, a: usize, b: usize) -> Option<usize> {
        let key = AuxVar {
            a: a.min(b),
            b: a.max(b),
        };
        self.aux_of.get(&key).map(|k| self.num_x + k)
    }

    /// Index of `z = x[a] x[b]`, allocating it on first use. The flag is true
    /// for a fresh allocation.
    pub(crate) fn intern_aux(&mut self, a: usize, b: usize) -> (usize, bool) {
        let key = AuxVar {
            a: a.min(b),
            b: a.max(b),
        };
        if let Some(&k) = self.aux_of.get(&key) {
            return (self.num_x + k, false);
        }
        self.aux.push(key);
        self.aux_of.insert(key, self.aux.len() - 1);
        (self.num_x + self.aux.len() - 1, true)
    }
}

/// One indicator per departure event and grid point of its window, grouped
/// by train, then route order, times ascending. No auxiliaries yet.
pub fn index_variables(instance: &DispatchInstance, _routing: &Routing) -> Result<VarIndex> {
    let windows = departure_windows(instance)?;
    let mut index = VarIndex::default();
    for event in instance.departure_events() {
        let window = windows[&event];
        index.group_of.insert(event, index.groups.len());
        index.groups.push(Group {
            event,
            window,
            start: index.num_x,
        });
        index.num_x += window.len();
    }
    Ok(index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture;

    #[test]
    fn demo_has_five_groups_of_eleven() {
        let (inst, routing) = fixture::demo();
        let index = index_variables(&inst, &routing).unwrap();
        assert_eq!(index.num_x(), 55);
        assert_eq!(index.groups().len(), 5);
        assert!(index.groups().iter().all(|g| g.len() == 11));
    }

    #[test]
    fn forward_and_reverse_agree() {
        let (inst, routing) = fixture::demo();
        let index = index_variables(&inst, &routing).unwrap();
        for i in 0..index.num_x() {
            let Some(Var::X { event, time }) = index.var(i) else {
                panic!("{i} is not a departure indicator");
            };
            assert_eq!(index.x(event, time), Some(i));
        }
        assert_eq!(index.var(55), None);
    }

    #[test]
    fn aux_is_interned_once_and_after_x() {
        let (inst, routing) = fixture::demo();
        let mut index = index_variables(&inst, &routing).unwrap();
        assert_eq!(index.intern_aux(7, 3), (55, true));
        assert_eq!(index.intern_aux(3, 7), (55, false));
        assert_eq!(index.aux_index(7, 3), Some(55));
        assert_eq!(index.var(55), Some(Var::Aux(AuxVar { a: 3, b: 7 })));
        assert_eq!(index.len(), 56);
    }

    #[test]
    fn zero_d_max_gives_one_variable_per_event() {
        let (mut inst, routing) = fixture::demo();
        for d in inst.scenario.d_max.values_mut() {
            *d = 0;
        }
        let index = index_variables(&inst, &routing).unwrap();
        assert_eq!(index.num_x(), inst.departure_events().len());
    }
}
