//! Time-indexed binary encoding: one indicator per departure event and grid
//! time, penalty terms for every condition family, and a degree reduction of
//! the cubic track-occupation terms.

mod decode;
mod encode;
mod index;
mod reduce;

pub use decode::{decode, Decoded, GroupState};
pub use encode::{
    circulation_window, emit_pairwise_penalty, emit_track_occupation_cubic, encode_objective,
    encode_sum_constraint, single_track_window, span_window, stay_window, switch_window, CubicTerm,
    ForbiddenWindow, Terms,
};
pub use index::{index_variables, AuxVar, Group, Var, VarIndex};
pub use reduce::{emit_rosenberg, reduce_to_qubo, rosenberg_h};

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::conflicts::{derive_conflict_sets, Conflict};
use crate::error::{Error, Result};
use crate::model::{DispatchInstance, Event, Routing};

/// Plain quadratic binary model: `offset + sum linear + sum quadratic`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Qubo {
    pub n: usize,
    pub linear: BTreeMap<usize, f64>,
    /// Keys are `(i, j)` with `i < j`.
    pub quadratic: BTreeMap<(usize, usize), f64>,
    pub offset: f64,
}

impl Qubo {
    pub fn energy(&self, bits: &[bool]) -> Result<f64> {
        if bits.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: bits.len(),
            });
        }
        let mut e = self.offset;
        for (&i, &c) in &self.linear {
            if bits[i] {
                e += c;
            }
        }
        for (&(i, j), &c) in &self.quadratic {
            if bits[i] && bits[j] {
                e += c;
            }
        }
        Ok(e)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TermFamily {
    Objective,
    Sum,
    Span,
    SingleTrack,
    Stay,
    Circulation,
    Switch,
    /// Substituted cubic terms plus the equal-departure pairs of shared tracks.
    TrackOccupation,
    /// Rosenberg gadgets tying auxiliaries to their products.
    Reduction,
}

impl TermFamily {
    pub fn name(self) -> &'static str {
        match self {
            TermFamily::Objective => "objective",
            TermFamily::Sum => "sum",
            TermFamily::Span => "span",
            TermFamily::SingleTrack => "single-track",
            TermFamily::Stay => "stay",
            TermFamily::Circulation => "circulation",
            TermFamily::Switch => "switch",
            TermFamily::TrackOccupation => "track-occupation",
            TermFamily::Reduction => "reduction",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PenaltyParams {
    pub p_sum: f64,
    pub p_pair: f64,
    pub p_qubic: f64,
}

/// Explicit penalty constants; unset ones take their defaults.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PenaltyOverrides {
    pub p_sum: Option<f64>,
    pub p_pair: Option<f64>,
    pub p_qubic: Option<f64>,
}

impl PenaltyParams {
    /// `p_sum = p_pair = 1 + sum_j w_j |counted departures of j|`, which
    /// exceeds the largest attainable objective; `p_qubic = 2 p_pair`.
    pub fn defaults(instance: &DispatchInstance, overrides: &PenaltyOverrides) -> Self {
        let bound: f64 = instance
            .departure_events()
            .iter()
            .filter(|e| instance.train(e.train).is_counted(e.station))
            .map(|e| instance.train(e.train).weight)
            .sum();
        let p = 1.0 + bound;
        let p_pair = overrides.p_pair.unwrap_or(p);
        PenaltyParams {
            p_sum: overrides.p_sum.unwrap_or(p),
            p_pair,
            p_qubic: overrides.p_qubic.unwrap_or(2.0 * p_pair),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuboModel {
    pub qubo: Qubo,
    pub index: VarIndex,
    pub params: PenaltyParams,
    /// Energy of every feasible state minus its objective: `-p_sum * groups`.
    pub floor: f64,
    pub families: BTreeMap<TermFamily, Terms>,
    /// Cubic terms before reduction.
    pub cubic: Vec<CubicTerm>,
    /// Shared-track pairs whose simultaneous departure would need a quartic
    /// term; their equal-time case is left unpenalised.
    pub unencoded: Vec<Conflict>,
}

impl QuboModel {
    pub fn n(&self) -> usize {
        self.qubo.n
    }

    pub fn energy(&self, bits: &[bool]) -> Result<f64> {
        self.qubo.energy(bits)
    }

    /// Energy of each family at `bits`.
    pub fn family_energy(&self, bits: &[bool]) -> BTreeMap<TermFamily, f64> {
        self.families
            .iter()
            .map(|(f, t)| (*f, t.energy(bits)))
            .collect()
    }

    /// Bit vector of a one-hot assignment with consistent auxiliaries.
    pub fn encode_departures(
        &self,
        departures: &BTreeMap<Event, crate::model::Tick>,
    ) -> Result<Vec<bool>> {
        let mut bits = alloc::vec![false; self.n()];
        for g in self.index.groups() {
            let &t = departures
                .get(&g.event)
                .ok_or(Error::MissingDeparture(g.event))?;
            let i = self.index.x(g.event, t).ok_or(Error::OutsideWindow {
                event: g.event,
                time: t,
                earliest: g.window.earliest,
                latest: g.window.latest,
            })?;
            bits[i] = true;
        }
        self.fix_aux(&mut bits);
        Ok(bits)
    }

    /// Sets every auxiliary to the product it stands for.
    pub fn fix_aux(&self, bits: &mut [bool]) {
        let n_x = self.index.num_x();
        for (k, aux) in self.index.aux().iter().enumerate() {
            bits[n_x + k] = bits[aux.a] && bits[aux.b];
        }
    }
}

/// Compiles the instance under `routing` into a QUBO.
pub fn assemble(
    instance: &DispatchInstance,
    routing: &Routing,
    overrides: &PenaltyOverrides,
) -> Result<QuboModel> {
    let params = PenaltyParams::defaults(instance, overrides);
    let mut index = index_variables(instance, routing)?;
    let sets = derive_conflict_sets(instance, routing);
    let mut families: BTreeMap<TermFamily, Terms> = BTreeMap::new();
    let mut put = |f: TermFamily, t: Terms| families.entry(f).or_default().merge(&t);

    put(TermFamily::Objective, encode_objective(&index, instance));
    put(TermFamily::Sum, encode_sum_constraint(&index, params.p_sum));

    let pairwise = |family: TermFamily,
                    w: ForbiddenWindow,
                    index: &VarIndex,
                    put: &mut dyn FnMut(TermFamily, Terms)|
     -> Result<()> {
        let mut t = Terms::default();
        emit_pairwise_penalty(&w, index, params.p_pair, &mut t)?;
        put(family, t);
        Ok(())
    };

    for (j, train) in instance.trains.iter().enumerate() {
        let j = crate::model::TrainIx(j);
        for (s, s2) in train.legs() {
            if train.departs(s2) {
                pairwise(
                    TermFamily::Stay,
                    stay_window(instance, j, s, s2)?,
                    &index,
                    &mut put,
                )?;
            }
        }
    }

    let mut cubic = Vec::new();
    let mut unencoded = Vec::new();
    for c in sets.conflicts() {
        match *c {
            Conflict::Span { pair, from, to, .. } => {
                let w = span_window(instance, pair.first(), pair.second(), from, to)?;
                pairwise(TermFamily::Span, w, &index, &mut put)?;
            }
            Conflict::SingleTrack {
                forward,
                backward,
                segment,
                ..
            } => {
                let seg = instance.segment(segment);
                let w = single_track_window(instance, forward, backward, seg.from, seg.to)?;
                pairwise(TermFamily::SingleTrack, w, &index, &mut put)?;
            }
            Conflict::Switch { pair, station } => {
                let w = switch_window(instance, pair.first(), pair.second(), station)?;
                pairwise(TermFamily::Switch, w, &index, &mut put)?;
            }
            Conflict::Circulation {
                inbound,
                outbound,
                station,
            } => {
                let w = circulation_window(instance, inbound, outbound, station)?;
                pairwise(TermFamily::Circulation, w, &index, &mut put)?;
            }
            Conflict::StationTrack { pair, station, .. } => {
                let (a, b) = (pair.first(), pair.second());
                // Leaving together is consistent with `a` first only if `b`
                // needs no time between `a`'s release and its own departure.
                let a_at_tie = encode::stop(instance, b, station)?
                    + encode::res(instance, a, b, station)?
                    <= 0;
                let b_at_tie = encode::stop(instance, a, station)?
                    + encode::res(instance, b, a, station)?
                    <= 0;
                cubic.extend(emit_track_occupation_cubic(
                    instance,
                    a,
                    b,
                    station,
                    &index,
                    params.p_pair,
                    a_at_tie && !b_at_tie,
                )?);
                cubic.extend(emit_track_occupation_cubic(
                    instance,
                    b,
                    a,
                    station,
                    &index,
                    params.p_pair,
                    b_at_tie && !a_at_tie,
                )?);
                if !a_at_tie && !b_at_tie {
                    let w = ForbiddenWindow {
                        a: Event::new(a, station),
                        b: Event::new(b, station),
                        lower: Some(-1),
                        upper: 1,
                    };
                    pairwise(TermFamily::TrackOccupation, w, &index, &mut put)?;
                } else if a_at_tie && b_at_tie {
                    unencoded.push(*c);
                }
            }
        }
    }

    let (residual, gadgets) = reduce_to_qubo(&cubic, &mut index, params.p_qubic);
    put(TermFamily::TrackOccupation, residual);
    put(TermFamily::Reduction, gadgets);

    let mut all = Terms::default();
    for t in families.values_mut() {
        t.prune();
        all.merge(t);
    }
    families.retain(|_, t| !t.is_empty());
    all.prune();

    let groups = index.groups().len();
    Ok(QuboModel {
        qubo: Qubo {
            n: index.len(),
            linear: all.linear,
            quadratic: all.quadratic,
            offset: 0.0,
        },
        index,
        params,
        floor: -params.p_sum * groups as f64,
        families,
        cubic,
        unencoded,
    })
}
