use alloc::vec;
use alloc::vec::Vec;

use super::{Compiled, Sample, SampleSet};
use crate::error::{Error, Result};
use crate::qubo::{Qubo, QuboModel};

pub const ONE_HOT_CAP: u128 = 10_000_000;
pub const FULL_ENUMERATION_LIMIT: usize = 24;

const TOL: f64 = 1e-9;

/// Keeps every state within `TOL` of the lowest energy seen.
#[derive(Default)]
struct Ground {
    best: f64,
    states: Vec<Sample>,
}

impl Ground {
    fn offer(&mut self, energy: f64, bits: impl FnOnce() -> Vec<bool>) {
        if self.states.is_empty() || energy < self.best - TOL {
            self.best = energy;
            self.states.retain(|s| s.energy <= energy + TOL);
        } else if energy > self.best + TOL {
            return;
        }
        self.states.push(Sample {
            bits: bits(),
            energy,
            multiplicity: 1,
        });
    }

    fn finish(self) -> SampleSet {
        SampleSet::from_samples(self.states)
    }
}

/// Every assignment with exactly one departure per group and auxiliaries equal
/// to their products; returns all minimisers.
pub fn brute_force_onehot(model: &QuboModel, cap: u128) -> Result<SampleSet> {
    let groups = model.index.groups();
    let states = groups
        .iter()
        .try_fold(1u128, |acc, g| acc.checked_mul(g.len() as u128))
        .unwrap_or(u128::MAX);
    if states > cap {
        return Err(Error::OneHotCap { states, cap });
    }
    let compiled = Compiled::new(&model.qubo);
    let n = model.n();
    if groups.iter().any(|g| g.is_empty()) {
        return Ok(SampleSet::default());
    }
    // Auxiliaries indexed by their first factor for quick activation.
    let mut aux_by_a: Vec<Vec<(usize, usize)>> = vec![Vec::new(); model.index.num_x()];
    let n_x = model.index.num_x();
    for (k, aux) in model.index.aux().iter().enumerate() {
        aux_by_a[aux.a].push((aux.b, n_x + k));
    }

    let mut choice = vec![0usize; groups.len()];
    let mut ground = Ground::default();
    let mut active: Vec<usize> = Vec::with_capacity(groups.len() * 2);
    let mut is_on = vec![false; n_x];
    loop {
        active.clear();
        for (g, &c) in groups.iter().zip(&choice) {
            active.push(g.start + c);
            is_on[g.start + c] = true;
        }
        for k in 0..groups.len() {
            for &(b, z) in &aux_by_a[active[k]] {
                if is_on[b] {
                    active.push(z);
                }
            }
        }
        for &i in active.iter().take(groups.len()) {
            is_on[i] = false;
        }
        let e = compiled.energy_of_active(&active);
        ground.offer(e, || {
            let mut bits = vec![false; n];
            for &i in &active {
                bits[i] = true;
            }
            bits
        });

        // Odometer, last group fastest.
        let mut k = groups.len();
        loop {
            if k == 0 {
                return Ok(ground.finish());
            }
            k -= 1;
            choice[k] += 1;
            if choice[k] < groups[k].len() {
                break;
            }
            choice[k] = 0;
        }
    }
}

/// Every bit vector, in Gray-code order. Limited to `FULL_ENUMERATION_LIMIT` variables.
pub fn brute_force_full(qubo: &Qubo) -> Result<SampleSet> {
    let n = qubo.n;
    if n > FULL_ENUMERATION_LIMIT {
        return Err(Error::FullEnumerationCap {
            n,
            limit: FULL_ENUMERATION_LIMIT,
        });
    }
    let compiled = Compiled::new(qubo);
    let mut bits = vec![false; n];
    let mut fields = compiled.local_fields(&bits);
    let mut e = qubo.offset;
    let mut ground = Ground::default();
    ground.offer(e, || bits.clone());
    for k in 1u64..(1u64 << n) {
        let i = k.trailing_zeros() as usize;
        e += compiled.flip_delta(&bits, &fields, i);
        compiled.flip(&mut bits, &mut fields, i);
        ground.offer(e, || bits.clone());
    }
    // Accumulated deltas drift; report exact energies.
    let states = ground
        .states
        .into_iter()
        .map(|mut s| {
            s.energy = compiled.energy(&s.bits).expect("length matches");
            s
        })
        .collect::<Vec<_>>();
    Ok(SampleSet::from_samples(states))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture;
    use crate::model::Event;
    use crate::qubo::{assemble, decode, encode_sum_constraint, index_variables, PenaltyOverrides};
    use alloc::collections::BTreeMap;

    #[test]
    fn rerouted_ground_state() {
        let (inst, routing) = fixture::demo_rerouted();
        let m = assemble(&inst, &routing, &PenaltyOverrides::default()).unwrap();
        let set = brute_force_onehot(&m, ONE_HOT_CAP).unwrap();
        let best = set.best().unwrap();
        let d = decode(&best.bits, &m, &inst).unwrap();
        assert!(d.schedule.feasible);
        assert!((d.schedule.objective - 0.3).abs() < 1e-12);
        assert!((best.energy - (m.floor + 0.3)).abs() < 1e-9);
        let t = |j, s| {
            d.schedule.departure
                [&Event::new(inst.train_by_id(j).unwrap(), inst.station_by_id(s).unwrap())]
        };
        assert_eq!((t("j1", "s1"), t("j2", "s1"), t("j3", "s2")), (4, 2, 10));
        assert_eq!((t("j1", "s2"), t("j2", "s2")), (9, 11));
    }

    #[test]
    fn cap_is_enforced() {
        let (inst, routing) = fixture::demo();
        let m = assemble(&inst, &routing, &PenaltyOverrides::default()).unwrap();
        assert_eq!(
            brute_force_onehot(&m, 1000),
            Err(Error::OneHotCap {
                states: 161_051,
                cap: 1000
            })
        );
    }

    #[test]
    fn empty_model_has_one_sample_at_offset() {
        let q = Qubo {
            offset: 1.5,
            ..Default::default()
        };
        let set = brute_force_full(&q).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.best().unwrap().energy, 1.5);
    }

    #[test]
    fn single_group_sum_is_threefold_degenerate() {
        let (mut inst, routing) = fixture::demo();
        inst.trains.truncate(1);
        inst.trains[0].route.truncate(1);
        inst.trains[0].schedule.truncate(1);
        inst.scenario
            .d_max
            .insert(inst.train_by_id("j1").unwrap(), 2);
        let index = index_variables(&inst, &routing).unwrap();
        assert_eq!(index.num_x(), 3);
        let t = encode_sum_constraint(&index, 5.0);
        let q = Qubo {
            n: 3,
            linear: t.linear,
            quadratic: t.quadratic,
            offset: 0.0,
        };
        let set = brute_force_full(&q).unwrap();
        assert_eq!(set.len(), 3);
        assert!(set.samples().iter().all(|s| s.energy == -5.0));
    }

    #[test]
    fn zero_model_is_flat() {
        let q = Qubo {
            n: 3,
            linear: BTreeMap::new(),
            quadratic: BTreeMap::new(),
            offset: 0.25,
        };
        let set = brute_force_full(&q).unwrap();
        assert_eq!(set.len(), 8);
        assert!(set.samples().iter().all(|s| s.energy == 0.25));
    }

    #[test]
    fn full_limit() {
        let q = Qubo {
            n: 25,
            ..Default::default()
        };
        assert!(matches!(
            brute_force_full(&q),
            Err(Error::FullEnumerationCap { n: 25, .. })
        ));
    }
}
