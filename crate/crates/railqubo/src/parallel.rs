//! Annealing chains spread over threads. Each chain owns its random stream,
//! so the result equals the sequential solver's for the same parameters.

use rayon::prelude::*;

use railqubo_core::dispatch::{
    rebuild_after_reroute, schedule_from_samples, BuiltinSolver, DispatchConfig, Solved,
    SolverMode, SubproblemSolver,
};
use railqubo_core::qubo::Qubo;
use railqubo_core::solve::{anneal_chain, AnnealParams, Compiled, SampleSet};
use railqubo_core::{DispatchInstance, Result, Routing};

pub fn anneal_parallel(qubo: &Qubo, params: &AnnealParams) -> Result<SampleSet> {
    params.validate()?;
    let model = Compiled::new(qubo);
    let samples: Vec<_> = (0..params.restarts as u64)
        .into_par_iter()
        .map(|c| anneal_chain(&model, params, c, None))
        .collect();
    Ok(SampleSet::from_samples(samples))
}

/// The built-in solvers with annealing run in parallel.
#[derive(Clone, Copy, Debug, Default)]
pub struct ParallelSolver;

impl SubproblemSolver for ParallelSolver {
    fn solve(
        &self,
        instance: &DispatchInstance,
        routing: &Routing,
        config: &DispatchConfig,
    ) -> Result<Solved> {
        if config.mode != SolverMode::QuboAnneal {
            return BuiltinSolver.solve(instance, routing, config);
        }
        let input = rebuild_after_reroute(instance, routing, config)?;
        let qubo = &input.qubo.as_ref().expect("built for annealing").qubo;
        let samples = anneal_parallel(qubo, &config.anneal)?;
        schedule_from_samples(instance, input, samples)
    }
}
