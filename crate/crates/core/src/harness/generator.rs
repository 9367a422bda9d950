//! Random multi-action instances with a prescribed separability.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::mdp::{measure_beta, IrlInstance, StochasticMatrix};
use crate::trajectory::rng_from_seed;

pub const MAX_DRAWS: usize = 100_000;

/// Uniform point of the zero-sum hyperplane's unit sphere.
fn zero_sum_direction<R: Rng>(rng: &mut R, n: usize) -> DVector<f64> {
    loop {
        let mut v = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mean = v.mean();
        v.add_scalar_mut(-mean);
        let norm = v.norm();
        if norm > 1e-9 {
            return v / norm;
        }
    }
}

/// Uniform point of the zero-sum ball of radius `eps`.
fn zero_sum_ball<R: Rng>(rng: &mut R, n: usize, eps: f64) -> DVector<f64> {
    let dir = zero_sum_direction(rng, n);
    let radius = eps * rng.gen::<f64>().powf(1.0 / (n - 1) as f64);
    dir * radius
}

/// Instance with uniform `P_{a_1}` and measured separability within
/// `target_beta * (1 +- window)`.
///
/// Each draw picks a zero-sum direction `u` and fills every row of the other
/// actions with `uniform - d`, where `d` is uniform in the half of the
/// inradius ball with `d . u >= 0`; the reward proportional to
/// `(I - gamma P_{a_1}) u` then certifies a positive margin. Margins are
/// linear in the row offsets, so when the measured separability misses the
/// window all offsets are rescaled onto `target_beta`, provided the rows stay
/// in the ball.
pub fn random_separable_instance(
    n: usize,
    k: usize,
    gamma: f64,
    target_beta: f64,
    window: f64,
    rng_seed: u64,
) -> Result<IrlInstance> {
    if k < 2 || n < 2 {
        return Err(Error::InvalidConfig(format!("need n >= 2 and k >= 2, got n={n}, k={k}")));
    }
    if !(target_beta > 0.0) || !(window >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "need target_beta > 0 and window >= 0, got {target_beta} and {window}"
        )));
    }
    let nf = n as f64;
    let eps = 1.0 / (nf * (nf - 1.0)).sqrt();
    let lo = target_beta * (1.0 - window);
    let hi = target_beta * (1.0 + window);
    let mut rng = rng_from_seed(rng_seed);
    for _ in 0..MAX_DRAWS {
        let u = zero_sum_direction(&mut rng, n);
        let offsets: Vec<DMatrix<f64>> = (1..k)
            .map(|_| {
                let mut d = DMatrix::zeros(n, n);
                for i in 0..n {
                    let mut row = zero_sum_ball(&mut rng, n, eps);
                    if row.dot(&u) < 0.0 {
                        row.neg_mut();
                    }
                    d.row_mut(i).copy_from(&row.transpose());
                }
                d
            })
            .collect();
        let inst = assemble(n, gamma, &offsets, 1.0)?;
        let (beta, _) = measure_beta(&inst)?;
        if !(beta > 0.0) {
            continue;
        }
        if (lo..=hi).contains(&beta) {
            return Ok(inst);
        }
        let scale = target_beta / beta;
        let widest = offsets
            .iter()
            .flat_map(|d| d.row_iter().map(|r| r.norm()).collect::<Vec<_>>())
            .fold(0.0, f64::max);
        if widest * scale > eps {
            continue;
        }
        let inst = assemble(n, gamma, &offsets, scale)?;
        let (beta, _) = measure_beta(&inst)?;
        if (lo..=hi).contains(&beta) {
            return Ok(inst);
        }
    }
    Err(Error::GenerationTimeout { attempts: MAX_DRAWS })
}

fn assemble(n: usize, gamma: f64, offsets: &[DMatrix<f64>], scale: f64) -> Result<IrlInstance> {
    let uniform = 1.0 / n as f64;
    let mut transitions = vec![StochasticMatrix::uniform(n)];
    for d in offsets {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| (uniform - scale * d[(i, j)]).max(0.0)).collect())
            .collect();
        transitions.push(StochasticMatrix::from_rows(&rows)?);
    }
    IrlInstance::new(gamma, transitions)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hits_the_window() {
        for (n, k, beta) in [(4usize, 3usize, 0.01), (7, 7, 0.0032), (5, 5, 0.0056)] {
            let inst = random_separable_instance(n, k, 0.1, beta, 0.15, 11).unwrap();
            assert_eq!((inst.n(), inst.k()), (n, k));
            let (measured, _) = measure_beta(&inst).unwrap();
            assert!((measured - beta).abs() <= 0.15 * beta + 1e-12, "{measured}");
            let first = inst.transitions[0].to_rows();
            assert!(first.iter().flatten().all(|&v| (v - 1.0 / n as f64).abs() < 1e-15));
        }
    }

    #[test]
    fn seeded_generation_is_deterministic() {
        let a = random_separable_instance(5, 3, 0.1, 0.005, 0.15, 3).unwrap();
        let b = random_separable_instance(5, 3, 0.1, 0.005, 0.15, 3).unwrap();
        assert_eq!(a, b);
        let c = random_separable_instance(5, 3, 0.1, 0.005, 0.15, 4).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_single_action() {
        assert!(random_separable_instance(5, 1, 0.1, 0.005, 0.15, 3).is_err());
    }
}
