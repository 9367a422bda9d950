//! Maximum-likelihood identification of the ensemble member behind a
//! trajectory, the estimator whose error Fano's inequality bounds from below.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::IrlInstance;
use crate::trajectory::{rng_from_seed, Sampler, Step};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentificationError {
    pub m: usize,
    pub trials: usize,
    pub errors: usize,
}

impl IdentificationError {
    pub fn rate(&self) -> f64 {
        self.errors as f64 / self.trials as f64
    }

    /// Binomial standard deviation of the rate at probability `p`.
    pub fn sigma(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

/// Each trial draws a member uniformly, samples an `m`-state trajectory with
/// uniform actions from it, and guesses the member of highest likelihood
/// (ties broken uniformly). Trial `t` uses seed `seed + t`.
pub fn ml_identification_error(
    members: &[IrlInstance],
    m: usize,
    trials: usize,
    seed: u64,
) -> Result<IdentificationError> {
    if members.len() < 2 {
        return Err(Error::InvalidConfig("identification needs at least two members".into()));
    }
    if m == 0 || trials == 0 {
        return Err(Error::InvalidConfig("need m >= 1 and trials >= 1".into()));
    }
    let (n, k) = (members[0].n(), members[0].k());
    if members.iter().any(|x| x.n() != n || x.k() != k) {
        return Err(Error::InvalidConfig("members differ in shape".into()));
    }
    let samplers: Vec<Sampler> = members.iter().map(Sampler::new).collect();
    let errors = (0..trials)
        .into_par_iter()
        .filter(|&t| {
            let mut rng = rng_from_seed(seed.wrapping_add(t as u64));
            let truth = rng.gen_range(0..members.len());
            let sampler = &samplers[truth];
            let mut state = sampler.initial_state(&mut rng);
            let mut steps: Vec<Step> = Vec::with_capacity(m - 1);
            for _ in 1..m {
                let s = sampler.step(&mut rng, state);
                state = s.next_state;
                steps.push(s);
            }
            let scores: Vec<f64> = members
                .iter()
                .map(|inst| {
                    steps
                        .iter()
                        .map(|s| inst.transitions[s.action].get(s.state, s.next_state).ln())
                        .sum()
                })
                .collect();
            let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let ties: Vec<usize> = (0..scores.len()).filter(|&j| scores[j] == best).collect();
            let guess = ties[rng.gen_range(0..ties.len())];
            guess != truth
        })
        .count();
    Ok(IdentificationError { m, trials, errors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::StochasticMatrix;

    #[test]
    fn identical_members_are_guessed_at_random() {
        let p = StochasticMatrix::uniform(3);
        let inst = IrlInstance::new(0.1, vec![p.clone(), p]).unwrap();
        let res = ml_identification_error(&[inst.clone(), inst], 20, 4000, 1).unwrap();
        assert!((res.rate() - 0.5).abs() < 4.0 * res.sigma(0.5));
    }

    #[test]
    fn distinct_members_are_told_apart() {
        let u = StochasticMatrix::uniform(2);
        let a = StochasticMatrix::from_rows(&[vec![0.9, 0.1], vec![0.9, 0.1]]).unwrap();
        let b = StochasticMatrix::from_rows(&[vec![0.1, 0.9], vec![0.1, 0.9]]).unwrap();
        let ia = IrlInstance::new(0.1, vec![u.clone(), a]).unwrap();
        let ib = IrlInstance::new(0.1, vec![u, b]).unwrap();
        let res = ml_identification_error(&[ia, ib], 60, 500, 2).unwrap();
        assert!(res.rate() < 0.01);
    }
}
