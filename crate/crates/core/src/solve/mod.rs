//! Ground-state search on QUBO models.

mod anneal;
mod brute;

pub use anneal::{
    anneal_chain, simulated_annealing, simulated_annealing_from, AnnealParams, BetaShape,
};
pub use brute::{brute_force_full, brute_force_onehot, FULL_ENUMERATION_LIMIT, ONE_HOT_CAP};

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::qubo::Qubo;

/// Symmetric adjacency form of a [`Qubo`] for repeated evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct Compiled {
    n: usize,
    offset: f64,
    linear: Vec<f64>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Compiled {
    pub fn new(q: &Qubo) -> Self {
        let n = q.n;
        let mut linear = alloc::vec![0.0; n];
        for (&i, &c) in &q.linear {
            linear[i] += c;
        }
        let mut degree = alloc::vec![0usize; n + 1];
        for &(i, j) in q.quadratic.keys() {
            degree[i + 1] += 1;
            degree[j + 1] += 1;
        }
        for i in 0..n {
            degree[i + 1] += degree[i];
        }
        let row_ptr = degree;
        let mut fill = row_ptr.clone();
        let mut cols = alloc::vec![0; row_ptr[n]];
        let mut vals = alloc::vec![0.0; row_ptr[n]];
        for (&(i, j), &c) in &q.quadratic {
            for (a, b) in [(i, j), (j, i)] {
                cols[fill[a]] = b;
                vals[fill[a]] = c;
                fill[a] += 1;
            }
        }
        // Keys iterate in (i, j) order, so every row is already sorted by column.
        Compiled {
            n,
            offset: q.offset,
            linear,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn linear(&self, i: usize) -> f64 {
        self.linear[i]
    }

    pub fn neighbours(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()]
            .iter()
            .copied()
            .zip(self.vals[r].iter().copied())
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn energy(&self, bits: &[bool]) -> Result<f64> {
        if bits.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: bits.len(),
            });
        }
        let mut e = self.offset;
        for i in (0..self.n).filter(|&i| bits[i]) {
            e += self.linear[i];
            for (j, c) in self.neighbours(i) {
                if j > i && bits[j] {
                    e += c;
                }
            }
        }
        Ok(e)
    }

    /// Energy of the state whose set bits are exactly `active`.
    pub fn energy_of_active(&self, active: &[usize]) -> f64 {
        let mut e = self.offset;
        for (k, &i) in active.iter().enumerate() {
            e += self.linear[i];
            for &j in &active[k + 1..] {
                e += self.coupling(i, j);
            }
        }
        e
    }

    /// `linear[i] + sum_j Q[i][j] x[j]` for every `i`.
    pub fn local_fields(&self, bits: &[bool]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                self.linear[i]
                    + self
                        .neighbours(i)
                        .filter(|&(j, _)| bits[j])
                        .map(|(_, c)| c)
                        .sum::<f64>()
            })
            .collect()
    }

    /// Energy change of flipping bit `i`.
    pub fn flip_delta(&self, bits: &[bool], fields: &[f64], i: usize) -> f64 {
        if bits[i] {
            -fields[i]
        } else {
            fields[i]
        }
    }

    /// Flips bit `i` and updates the local fields of its neighbours.
    pub fn flip(&self, bits: &mut [bool], fields: &mut [f64], i: usize) {
        bits[i] = !bits[i];
        let sign = if bits[i] { 1.0 } else { -1.0 };
        for (j, c) in self.neighbours(i) {
            fields[j] += sign * c;
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub bits: Vec<bool>,
    pub energy: f64,
    pub multiplicity: usize,
}

/// Samples sorted by energy; equal energies (to 1e-9) put the
/// lexicographically larger bit vector first, which for time-indexed groups
/// favours earlier departures.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SampleSet {
    samples: Vec<Sample>,
}

fn energy_key(e: f64) -> i64 {
    libm::round(e * 1e9) as i64
}

fn sample_order(a: &Sample, b: &Sample) -> Ordering {
    energy_key(a.energy)
        .cmp(&energy_key(b.energy))
        .then_with(|| b.bits.cmp(&a.bits))
}

impl SampleSet {
    /// Merges identical bit vectors and sorts.
    pub fn from_samples(samples: impl IntoIterator<Item = Sample>) -> Self {
        let mut v: Vec<Sample> = samples.into_iter().collect();
        v.sort_by(|a, b| a.bits.cmp(&b.bits));
        let mut merged: Vec<Sample> = Vec::with_capacity(v.len());
        for s in v {
            match merged.last_mut() {
                Some(last) if last.bits == s.bits => last.multiplicity += s.multiplicity,
                _ => merged.push(s),
            }
        }
        merged.sort_by(sample_order);
        SampleSet { samples: merged }
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn best(&self) -> Option<&Sample> {
        self.samples.first()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sum of multiplicities.
    pub fn total(&self) -> usize {
        self.samples.iter().map(|s| s.multiplicity).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeMap;

    fn toy() -> Qubo {
        Qubo {
            n: 3,
            linear: [(0, 1.0), (2, -2.0)].into_iter().collect(),
            quadratic: [((0, 1), 3.0), ((1, 2), -1.5)].into_iter().collect(),
            offset: 0.5,
        }
    }

    #[test]
    fn compiled_energy_matches_map_energy() {
        let q = toy();
        let c = Compiled::new(&q);
        for m in 0..8u8 {
            let bits: Vec<bool> = (0..3).map(|i| m >> i & 1 == 1).collect();
            assert_eq!(c.energy(&bits).unwrap(), q.energy(&bits).unwrap());
        }
        assert_eq!(c.coupling(2, 1), -1.5);
        assert_eq!(c.coupling(0, 2), 0.0);
    }

    #[test]
    fn length_is_checked() {
        let c = Compiled::new(&toy());
        assert_eq!(
            c.energy(&[true]),
            Err(Error::LengthMismatch {
                expected: 3,
                got: 1
            })
        );
        let empty = Compiled::new(&Qubo {
            n: 0,
            linear: BTreeMap::new(),
            quadratic: BTreeMap::new(),
            offset: 2.0,
        });
        assert_eq!(empty.energy(&[]).unwrap(), 2.0);
    }

    #[test]
    fn ordering_prefers_low_energy_then_larger_bits() {
        let s = |bits: &[bool], energy| Sample {
            bits: bits.to_vec(),
            energy,
            multiplicity: 1,
        };
        let set = SampleSet::from_samples([
            s(&[false, true], 1.0),
            s(&[true, false], 1.0 + 1e-12),
            s(&[false, false], 0.0),
            s(&[false, true], 1.0),
        ]);
        let order: Vec<_> = set.samples().iter().map(|s| s.bits.clone()).collect();
        assert_eq!(
            order,
            [
                alloc::vec![false, false],
                alloc::vec![true, false],
                alloc::vec![false, true]
            ]
        );
        assert_eq!(set.samples()[2].multiplicity, 2);
        assert_eq!(set.total(), 4);
    }
}
