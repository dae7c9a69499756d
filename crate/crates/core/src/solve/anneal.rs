use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Compiled, Sample, SampleSet};
use crate::error::{Error, Result};
use crate::qubo::Qubo;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BetaShape {
    Geometric,
    Linear,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnnealParams {
    pub sweeps: usize,
    /// Independent chains.
    pub restarts: usize,
    pub beta_min: f64,
    /// May be infinite: the final sweeps then accept no uphill move.
    pub beta_max: f64,
    pub shape: BetaShape,
    pub seed: u64,
}

impl Default for AnnealParams {
    fn default() -> Self {
        AnnealParams {
            sweeps: 20_000,
            restarts: 10,
            beta_min: 0.3,
            beta_max: 0.8,
            shape: BetaShape::Geometric,
            seed: 0,
        }
    }
}

impl AnnealParams {
    pub fn validate(&self) -> Result<()> {
        if self.sweeps == 0 {
            return Err(Error::AnnealParams("sweeps must be at least 1"));
        }
        if self.restarts == 0 {
            return Err(Error::AnnealParams("restarts must be at least 1"));
        }
        if self.beta_min.is_nan() || self.beta_max.is_nan() || self.beta_min < 0.0 {
            return Err(Error::AnnealParams(
                "inverse temperatures must be nonnegative",
            ));
        }
        if self.beta_min >= self.beta_max {
            return Err(Error::AnnealParams("beta_min must be below beta_max"));
        }
        if self.shape == BetaShape::Geometric && self.beta_min == 0.0 {
            return Err(Error::AnnealParams(
                "a geometric schedule needs beta_min > 0",
            ));
        }
        if self.beta_min.is_infinite() {
            return Err(Error::AnnealParams("beta_min must be finite"));
        }
        Ok(())
    }

    /// Inverse temperature of sweep `k`.
    pub fn beta(&self, k: usize) -> f64 {
        if self.sweeps == 1 {
            return self.beta_max;
        }
        let frac = k as f64 / (self.sweeps - 1) as f64;
        if frac == 0.0 {
            return self.beta_min;
        }
        if self.beta_max.is_infinite() {
            return f64::INFINITY;
        }
        match self.shape {
            BetaShape::Geometric => self.beta_min * libm::pow(self.beta_max / self.beta_min, frac),
            BetaShape::Linear => self.beta_min + (self.beta_max - self.beta_min) * frac,
        }
    }
}

/// One Metropolis chain with single-bit flips in index order. Starts from
/// `init` or from uniformly random bits; returns the lowest state visited.
pub fn anneal_chain(
    model: &Compiled,
    params: &AnnealParams,
    chain: u64,
    init: Option<&[bool]>,
) -> Sample {
    run_chain(model, params, chain, init, |_, _| {})
}

/// Chain body; `after_sweep` sees the sweep's inverse temperature and the
/// current energy at its end.
fn run_chain(
    model: &Compiled,
    params: &AnnealParams,
    chain: u64,
    init: Option<&[bool]>,
    mut after_sweep: impl FnMut(f64, f64),
) -> Sample {
    let n = model.n();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(chain);
    let mut bits: Vec<bool> = match init {
        Some(b) => b.to_vec(),
        None => (0..n).map(|_| rng.random::<bool>()).collect(),
    };
    let mut fields = model.local_fields(&bits);
    let mut energy = model.energy(&bits).expect("length matches");
    let mut best = bits.clone();
    let mut best_energy = energy;
    for k in 0..params.sweeps {
        let beta = params.beta(k);
        for i in 0..n {
            let delta = model.flip_delta(&bits, &fields, i);
            let accept = delta <= 0.0
                || (beta.is_finite() && rng.random::<f64>() < libm::exp(-beta * delta));
            if accept {
                model.flip(&mut bits, &mut fields, i);
                energy += delta;
                if energy < best_energy - 1e-12 {
                    best_energy = energy;
                    best.copy_from_slice(&bits);
                }
            }
        }
        after_sweep(beta, energy);
    }
    let energy = model.energy(&best).expect("length matches");
    Sample {
        bits: best,
        energy,
        multiplicity: 1,
    }
}

/// `restarts` independent chains; identical seeds give identical results.
pub fn simulated_annealing(qubo: &Qubo, params: &AnnealParams) -> Result<SampleSet> {
    params.validate()?;
    let model = Compiled::new(qubo);
    Ok(SampleSet::from_samples(
        (0..params.restarts as u64).map(|c| anneal_chain(&model, params, c, None)),
    ))
}

/// As [`simulated_annealing`], every chain starting from `init`.
pub fn simulated_annealing_from(
    qubo: &Qubo,
    params: &AnnealParams,
    init: &[bool],
) -> Result<SampleSet> {
    params.validate()?;
    if init.len() != qubo.n {
        return Err(Error::LengthMismatch {
            expected: qubo.n,
            got: init.len(),
        });
    }
    let model = Compiled::new(qubo);
    Ok(SampleSet::from_samples(
        (0..params.restarts as u64).map(|c| anneal_chain(&model, params, c, Some(init))),
    ))
}
