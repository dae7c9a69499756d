use std::collections::BTreeMap;

use proptest::prelude::*;
use railqubo_core::linear::{
    build_linear_model, propagate_earliest, solve_order_enumeration, LinearModel,
};
use railqubo_core::qubo::{index_variables, Qubo};
use railqubo_core::solve::{Compiled, Sample, SampleSet};
use railqubo_core::{
    derive_conflict_sets, fixture, propagate_unavoidable_delays, DispatchInstance, Routing, Tick,
};

/// The demonstration instance on a grid of `r` points per minute, with its
/// primary delays and `d_max` (in minutes) replaced.
fn demo_variant(
    r: u32,
    delays: [Tick; 3],
    d_max: Tick,
    rerouted: bool,
) -> (DispatchInstance, Routing) {
    let (mut inst, routing) = if rerouted {
        fixture::demo_rerouted()
    } else {
        fixture::demo()
    };
    let r = r as Tick;
    inst.scenario.resolution = r as u32;
    for train in &mut inst.trains {
        for st in &mut train.schedule {
            st.arrival = st.arrival.map(|t| t * r);
            st.departure = st.departure.map(|t| t * r);
        }
    }
    let t = &mut inst.timing;
    t.pass.values_mut().for_each(|v| *v *= r);
    t.blocks.values_mut().for_each(|v| *v *= r);
    t.stop.values_mut().for_each(|v| *v *= r);
    t.res_default = t.res_default.map(|v| v * r);
    for (k, v) in inst.scenario.primary_delay.values_mut().enumerate() {
        *v = delays[k] * r;
    }
    inst.scenario
        .d_max
        .values_mut()
        .for_each(|v| *v = d_max * r);
    (inst, routing)
}

fn model(inst: &DispatchInstance, routing: &Routing) -> LinearModel {
    build_linear_model(inst, routing, &derive_conflict_sets(inst, routing)).unwrap()
}

fn all_assignments(k: usize) -> impl Iterator<Item = Vec<bool>> {
    (0..1u32 << k).map(move |m| (0..k).map(|i| m >> (k - 1 - i) & 1 == 1).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn window_sizes_follow_d_max_and_resolution(
        r in 1u32..4, d_max in 0 as Tick..12, rerouted: bool,
    ) {
        let (inst, routing) = demo_variant(r, [1, 1, 2], d_max, rerouted);
        let index = index_variables(&inst, &routing).unwrap();
        for g in index.groups() {
            prop_assert_eq!(g.len(), (d_max * r as Tick + 1) as usize);
        }
    }

    #[test]
    fn unavoidable_delays_are_monotone(
        delays in prop::array::uniform3(0 as Tick..8), which in 0usize..3, extra in 1 as Tick..6,
    ) {
        let (base, _) = demo_variant(1, delays, 10, false);
        let mut more = delays;
        more[which] += extra;
        let (bumped, _) = demo_variant(1, more, 10, false);
        let a = propagate_unavoidable_delays(&base).unwrap();
        let b = propagate_unavoidable_delays(&bumped).unwrap();
        for (e, t) in &a {
            prop_assert!(b[e] >= *t, "{:?}: {} -> {}", e, t, b[e]);
        }
    }

    #[test]
    fn propagation_reaches_a_fixed_point(
        delays in prop::array::uniform3(0 as Tick..8), d_max in 0 as Tick..12, rerouted: bool,
    ) {
        let (inst, routing) = demo_variant(1, delays, d_max, rerouted);
        let m = model(&inst, &routing);
        for y in all_assignments(m.precedence_vars.len()) {
            let p = propagate_earliest(&m, &y);
            if p.cycle {
                // Only assignments splitting a tied pair of decisions contradict themselves here.
                prop_assert!(m.order_equalities.iter().any(|&(a, b)| y[a] != y[b]));
                continue;
            }
            for c in m.constraints.iter().filter(|c| c.is_active(&y)) {
                prop_assert!(p.times[c.later] >= p.times[c.earlier] + c.gap);
            }
            for (v, &t) in m.time_vars.iter().zip(&p.times) {
                prop_assert!(t >= v.window.earliest);
            }
        }
    }

    #[test]
    fn optimum_ignores_weight_scale(
        delays in prop::array::uniform3(0 as Tick..6), scale in 0.01f64..100.0, rerouted: bool,
    ) {
        let (inst, routing) = demo_variant(1, delays, 10, rerouted);
        let mut scaled = inst.clone();
        scaled.trains.iter_mut().for_each(|t| t.weight *= scale);
        let a = solve_order_enumeration(&model(&inst, &routing)).unwrap();
        let b = solve_order_enumeration(&model(&scaled, &routing)).unwrap();
        prop_assert_eq!(&a.departure, &b.departure);
        prop_assert_eq!(a.feasible, b.feasible);
        if a.feasible {
            prop_assert!((a.objective * scale - b.objective).abs() <= 1e-9 * (1.0 + b.objective));
        }
    }

    #[test]
    fn deactivated_constraints_never_bind(
        delays in prop::array::uniform3(0 as Tick..8), d_max in 0 as Tick..12, rerouted: bool,
    ) {
        let (inst, routing) = demo_variant(1, delays, d_max, rerouted);
        let m = model(&inst, &routing);
        let n = m.time_vars.len();
        for y in all_assignments(m.precedence_vars.len()) {
            for corner in 0..1u32 << n {
                let times: Vec<Tick> = m
                    .time_vars
                    .iter()
                    .enumerate()
                    .map(|(i, v)| if corner >> i & 1 == 1 { v.window.latest } else { v.window.earliest })
                    .collect();
                for c in m.constraints.iter().filter(|c| !c.is_active(&y)) {
                    let row = c.row(m.mu);
                    let lhs: f64 = row
                        .terms
                        .iter()
                        .map(|(col, k)| k * match *col {
                            railqubo_core::linear::Column::Time(i) => times[i] as f64,
                            railqubo_core::linear::Column::Precedence(i) => y[i] as u8 as f64,
                        })
                        .sum();
                    prop_assert!(lhs >= row.rhs, "{:?} binds at corner {}", c, corner);
                }
            }
        }
    }

    #[test]
    fn flip_delta_matches_recomputation(
        n in 1usize..14,
        coeffs in prop::collection::vec(-5.0f64..5.0, 14 * 15 / 2 + 14),
        start in prop::collection::vec(any::<bool>(), 14),
        flips in prop::collection::vec(0usize..14, 1..40),
    ) {
        let mut q = Qubo { n, linear: BTreeMap::new(), quadratic: BTreeMap::new(), offset: 0.25 };
        let mut k = 0;
        for i in 0..n {
            q.linear.insert(i, coeffs[k]);
            k += 1;
            for j in i + 1..n {
                if coeffs[k].abs() > 1.0 {
                    q.quadratic.insert((i, j), coeffs[k]);
                }
                k += 1;
            }
        }
        let c = Compiled::new(&q);
        let mut bits = start[..n].to_vec();
        let mut fields = c.local_fields(&bits);
        for &f in &flips {
            let i = f % n;
            let before = q.energy(&bits).unwrap();
            let delta = c.flip_delta(&bits, &fields, i);
            c.flip(&mut bits, &mut fields, i);
            let after = q.energy(&bits).unwrap();
            prop_assert!((after - before - delta).abs() <= 1e-9);
            prop_assert!((c.energy(&bits).unwrap() - after).abs() <= 1e-9);
        }
    }

    #[test]
    fn sample_order_is_independent_of_input_order(
        raw in prop::collection::vec(prop::collection::vec(any::<bool>(), 4), 1..20),
        rotate in 0usize..20,
    ) {
        // Energy as a function of the bits, with many ties.
        let energy = |b: &[bool]| (b[0] as u8 + b[3] as u8) as f64 * 0.5;
        let samples: Vec<Sample> = raw
            .iter()
            .map(|bits| Sample { bits: bits.clone(), energy: energy(bits), multiplicity: 1 })
            .collect();
        let mut shuffled = samples.clone();
        shuffled.rotate_left(rotate % samples.len());
        shuffled.reverse();
        let a = SampleSet::from_samples(samples);
        let b = SampleSet::from_samples(shuffled);
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.total(), raw.len());
        for w in a.samples().windows(2) {
            prop_assert!(w[0].energy < w[1].energy || (w[0].energy == w[1].energy && w[0].bits > w[1].bits));
        }
    }
}
