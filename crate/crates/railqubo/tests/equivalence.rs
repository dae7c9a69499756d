//! Linear oracle and QUBO brute force agree on many random micro-instances.

use railqubo_core::derive_conflict_sets;
use railqubo_core::linear::{build_linear_model, solve_order_enumeration};
use railqubo_core::qubo::{assemble, decode, PenaltyOverrides};
use railqubo_core::solve::{brute_force_onehot, ONE_HOT_CAP};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

mod common;

#[test]
fn linear_and_qubo_agree_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let (mut done, mut infeasible, mut conflicts, mut turnarounds) = (0, 0, 0, 0);
    while done < 3000 {
        let Some((inst, routing)) = common::micro_instance(&mut rng) else {
            continue;
        };
        let sets = derive_conflict_sets(&inst, &routing);
        conflicts += sets.conflicts().len();
        turnarounds += inst.timing.prep.len();
        let model = build_linear_model(&inst, &routing, &sets).unwrap();
        let lin = solve_order_enumeration(&model).unwrap();
        let q = assemble(&inst, &routing, &PenaltyOverrides::default()).unwrap();
        let set = brute_force_onehot(&q, ONE_HOT_CAP).unwrap();
        let d = decode(&set.best().unwrap().bits, &q, &inst).unwrap();
        assert_eq!(
            lin.feasible, d.schedule.feasible,
            "instance {done}: {inst:#?}\n{routing:#?}"
        );
        if lin.feasible {
            assert!(
                (lin.objective - d.schedule.objective).abs() < 1e-9,
                "instance {done}: {} vs {}\n{inst:#?}\n{routing:#?}",
                lin.objective,
                d.schedule.objective
            );
        } else {
            infeasible += 1;
        }
        done += 1;
    }
    eprintln!(
        "{done} instances, {infeasible} infeasible, {conflicts} conflicts, {turnarounds} turnarounds"
    );
    assert!(infeasible > 0 && turnarounds > 0);
}
