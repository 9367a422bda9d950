//! Trajectories under the uniform behavior policy, empirical transition
//! estimates and KL divergences between trajectory distributions.
//!
//! Randomness comes from `ChaCha8Rng` seeded with a `u64`, so a seed fixes
//! the sample path on every platform.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{IrlInstance, StochasticMatrix};

/// Trajectory enumeration is refused above this many state sequences.
pub const BRUTE_FORCE_LIMIT: f64 = 1e7;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub state: usize,
    pub action: usize,
    pub next_state: usize,
}

/// `m` visited states: an initial state followed by `m - 1` steps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    pub initial_state: usize,
    pub steps: Vec<Step>,
}

impl Trajectory {
    pub fn states(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.steps.len() + 1);
        out.push(self.initial_state);
        out.extend(self.steps.iter().map(|s| s.next_state));
        out
    }

    pub fn len_states(&self) -> usize {
        self.steps.len() + 1
    }
}

/// Cumulative transition rows for inverse-CDF sampling.
#[derive(Debug, Clone)]
pub struct Sampler {
    n: usize,
    k: usize,
    cdf: Vec<f64>,
}

impl Sampler {
    pub fn new(inst: &IrlInstance) -> Self {
        let n = inst.n();
        let k = inst.k();
        let mut cdf = Vec::with_capacity(k * n * n);
        for p in &inst.transitions {
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..n {
                    acc += p.get(i, j);
                    cdf.push(acc);
                }
            }
        }
        Sampler { n, k, cdf }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn initial_state<R: Rng>(&self, rng: &mut R) -> usize {
        rng.gen_range(0..self.n)
    }

    /// Draws a uniform action and the next state.
    pub fn step<R: Rng>(&self, rng: &mut R, state: usize) -> Step {
        let action = rng.gen_range(0..self.k);
        let next_state = self.next_state(rng, state, action);
        Step {
            state,
            action,
            next_state,
        }
    }

    pub fn next_state<R: Rng>(&self, rng: &mut R, state: usize, action: usize) -> usize {
        let base = (action * self.n + state) * self.n;
        let row = &self.cdf[base..base + self.n];
        let u: f64 = rng.gen::<f64>() * row[self.n - 1];
        row.iter().position(|&c| u < c).unwrap_or_else(|| {
            // Rounding can leave u at the top of the row; take the last
            // state with positive mass.
            (0..self.n)
                .rev()
                .find(|&j| j == 0 || row[j] > row[j - 1])
                .unwrap_or(0)
        })
    }
}

/// Trajectory with `m` states: uniform initial state, uniform actions.
pub fn sample_trajectory(inst: &IrlInstance, m: usize, rng_seed: u64) -> Trajectory {
    assert!(m >= 1, "a trajectory has at least one state");
    let sampler = Sampler::new(inst);
    let mut rng = rng_from_seed(rng_seed);
    let initial_state = sampler.initial_state(&mut rng);
    let mut steps = Vec::with_capacity(m - 1);
    let mut state = initial_state;
    for _ in 1..m {
        let s = sampler.step(&mut rng, state);
        state = s.next_state;
        steps.push(s);
    }
    Trajectory {
        initial_state,
        steps,
    }
}

/// Per-action transition counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionCounts {
    pub n: usize,
    pub k: usize,
    /// Index `(a * n + i) * n + j`.
    pub counts: Vec<u64>,
    /// Index `a * n + i`.
    pub visits: Vec<u64>,
}

impl TransitionCounts {
    pub fn new(n: usize, k: usize) -> Self {
        TransitionCounts {
            n,
            k,
            counts: vec![0; k * n * n],
            visits: vec![0; k * n],
        }
    }

    pub fn from_trajectories(trajs: &[Trajectory], n: usize, k: usize) -> Self {
        let mut c = TransitionCounts::new(n, k);
        for t in trajs {
            for s in &t.steps {
                c.record(s);
            }
        }
        c
    }

    #[inline]
    pub fn record(&mut self, s: &Step) {
        self.add(s.state, s.action, s.next_state);
    }

    #[inline]
    pub fn add(&mut self, state: usize, action: usize, next_state: usize) {
        let row = action * self.n + state;
        self.counts[row * self.n + next_state] += 1;
        self.visits[row] += 1;
    }

    pub fn count(&self, action: usize, i: usize, j: usize) -> u64 {
        self.counts[(action * self.n + i) * self.n + j]
    }

    pub fn visits(&self, action: usize, i: usize) -> u64 {
        self.visits[action * self.n + i]
    }

    pub fn total(&self) -> u64 {
        self.visits.iter().sum()
    }

    pub fn merge(&mut self, other: &TransitionCounts) {
        assert_eq!((self.n, self.k), (other.n, other.k), "count shapes differ");
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        for (a, b) in self.visits.iter_mut().zip(&other.visits) {
            *a += b;
        }
    }

    /// `(count + s) / (visits + n s)`, uniform for unvisited rows.
    pub fn estimate(&self, smoothing: f64) -> Result<Vec<StochasticMatrix>> {
        assert!(smoothing >= 0.0, "smoothing must be nonnegative");
        let n = self.n;
        (0..self.k)
            .map(|a| {
                let m = DMatrix::from_fn(n, n, |i, j| {
                    let v = self.visits(a, i);
                    if v == 0 {
                        1.0 / n as f64
                    } else {
                        (self.count(a, i, j) as f64 + smoothing) / (v as f64 + n as f64 * smoothing)
                    }
                });
                crate::mdp::validate_stochastic(m)
            })
            .collect()
    }
}

pub fn estimate_transitions(
    trajs: &[Trajectory],
    n: usize,
    k: usize,
    smoothing: f64,
) -> Result<Vec<StochasticMatrix>> {
    TransitionCounts::from_trajectories(trajs, n, k).estimate(smoothing)
}

/// Stream of back-to-back trajectories, each of `length` transitions, that
/// can be paused after any number of transitions.
///
/// Stopping after `m` transitions yields the first `m` transitions of the
/// same stream regardless of how the total was split across calls.
#[derive(Debug, Clone)]
pub struct TransitionStream {
    rng: ChaCha8Rng,
    length: usize,
    remaining: usize,
    state: usize,
}

impl TransitionStream {
    pub fn new(seed: u64, length: usize) -> Self {
        assert!(length >= 1, "trajectory length must be positive");
        TransitionStream {
            rng: rng_from_seed(seed),
            length,
            remaining: 0,
            state: 0,
        }
    }

    pub fn advance(&mut self, sampler: &Sampler, counts: &mut TransitionCounts, transitions: u64) {
        for _ in 0..transitions {
            if self.remaining == 0 {
                self.state = sampler.initial_state(&mut self.rng);
                self.remaining = self.length;
            }
            let s = sampler.step(&mut self.rng, self.state);
            counts.record(&s);
            self.state = s.next_state;
            self.remaining -= 1;
        }
    }
}

/// Counts of the first `transitions` transitions of [`TransitionStream`].
pub fn sample_transition_counts(
    inst: &IrlInstance,
    transitions: u64,
    length: usize,
    seed: u64,
) -> TransitionCounts {
    let sampler = Sampler::new(inst);
    let mut counts = TransitionCounts::new(inst.n(), inst.k());
    TransitionStream::new(seed, length).advance(&sampler, &mut counts, transitions);
    counts
}

/// `sum_j p_j log(p_j / q_j)` in nats.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            got: q.len(),
        });
    }
    let mut d = 0.0;
    for (j, (&pj, &qj)) in p.iter().zip(q).enumerate() {
        if pj > 0.0 {
            if !(qj > 0.0) {
                return Err(Error::AbsoluteContinuityViolation { row: 0, col: j });
            }
            d += pj * (pj / qj).ln();
        }
    }
    Ok(d)
}

/// Row-wise KL divergences `D(P(i) || Q(i))`.
pub fn kl_rows(p: &StochasticMatrix, q: &StochasticMatrix) -> Result<DVector<f64>> {
    if p.n() != q.n() {
        return Err(Error::DimensionMismatch {
            expected: p.n(),
            got: q.n(),
        });
    }
    let n = p.n();
    let mut out = DVector::zeros(n);
    for i in 0..n {
        out[i] = kl_divergence(&p.row(i), &q.row(i)).map_err(|e| match e {
            Error::AbsoluteContinuityViolation { col, .. } => {
                Error::AbsoluteContinuityViolation { row: i, col }
            }
            other => other,
        })?;
    }
    Ok(out)
}

/// `1/2 sum_j (q_j - p_j)^2 / p_j`.
pub fn kl_quadratic_bound(p_row: &[f64], q_row: &[f64]) -> Result<f64> {
    if p_row.len() != q_row.len() {
        return Err(Error::DimensionMismatch {
            expected: p_row.len(),
            got: q_row.len(),
        });
    }
    let mut s = 0.0;
    for (j, (&p, &q)) in p_row.iter().zip(q_row).enumerate() {
        if !(p > 0.0) {
            return Err(Error::ZeroEntry { index: j });
        }
        s += (q - p) * (q - p) / p;
    }
    Ok(0.5 * s)
}

/// KL divergence between the laws of `m`-state trajectories of the chains
/// `(init_p, P)` and `(init_q, Q)`, via the chain rule
/// `D(init_p || init_q) + sum_{t=0}^{m-2} init_p P^t V` with
/// `V_i = D(P(i) || Q(i))`.
pub fn exact_trajectory_kl(
    p: &StochasticMatrix,
    q: &StochasticMatrix,
    init_p: &[f64],
    init_q: &[f64],
    m: usize,
) -> Result<f64> {
    assert!(m >= 1, "a trajectory has at least one state");
    let n = p.n();
    if init_p.len() != n || init_q.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: init_p.len().min(init_q.len()),
        });
    }
    let mut total = kl_divergence(init_p, init_q)?;
    if m == 1 {
        return Ok(total);
    }
    let v = kl_rows(p, q)?;
    let pt = p.matrix().transpose();
    let mut dist = DVector::from_column_slice(init_p);
    for t in 0..m - 1 {
        if t > 0 {
            dist = &pt * dist;
        }
        total += dist.dot(&v);
    }
    Ok(total)
}

/// The same divergence by summing over all `n^m` state sequences.
pub fn brute_force_trajectory_kl(
    p: &StochasticMatrix,
    q: &StochasticMatrix,
    init_p: &[f64],
    init_q: &[f64],
    m: usize,
) -> Result<f64> {
    assert!(m >= 1, "a trajectory has at least one state");
    let n = p.n();
    let space = (n as f64).powi(m as i32);
    if space > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge(format!("{n}^{m} trajectories exceed {BRUTE_FORCE_LIMIT}")));
    }
    let mut total = 0.0;
    for s in 0..n {
        let pp = init_p[s];
        if pp > 0.0 {
            if !(init_q[s] > 0.0) {
                return Err(Error::AbsoluteContinuityViolation { row: 0, col: s });
            }
            walk(p, q, s, pp, init_q[s], m - 1, &mut total)?;
        }
    }
    Ok(total)
}

fn walk(
    p: &StochasticMatrix,
    q: &StochasticMatrix,
    state: usize,
    pp: f64,
    qq: f64,
    left: usize,
    total: &mut f64,
) -> Result<()> {
    if left == 0 {
        *total += pp * (pp / qq).ln();
        return Ok(());
    }
    for next in 0..p.n() {
        let a = p.get(state, next);
        if a > 0.0 {
            let b = q.get(state, next);
            if !(b > 0.0) {
                return Err(Error::AbsoluteContinuityViolation {
                    row: state,
                    col: next,
                });
            }
            walk(p, q, next, pp * a, qq * b, left - 1, total)?;
        }
    }
    Ok(())
}

/// Chain over `(state, action)` pairs, index `s * k + a`, with entry
/// `P_a(s, s') / k` for every next action `a'`.
pub fn extended_chain(inst: &IrlInstance) -> StochasticMatrix {
    let n = inst.n();
    let k = inst.k();
    let m = DMatrix::from_fn(n * k, n * k, |r, c| {
        let (s, a) = (r / k, r % k);
        let s2 = c / k;
        inst.transitions[a].get(s, s2) / k as f64
    });
    crate::mdp::validate_stochastic(m).expect("extended chain of valid matrices is stochastic")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_action() -> IrlInstance {
        let p1 = StochasticMatrix::uniform(3);
        let p2 = StochasticMatrix::from_rows(&[
            vec![0.5, 0.25, 0.25],
            vec![0.2, 0.6, 0.2],
            vec![0.1, 0.1, 0.8],
        ])
        .unwrap();
        IrlInstance::new(0.1, vec![p1, p2]).unwrap()
    }

    #[test]
    fn single_state_trajectory() {
        let t = sample_trajectory(&two_action(), 1, 5);
        assert!(t.steps.is_empty());
        assert!(t.initial_state < 3);
    }

    #[test]
    fn absorbing_chain_stays_put() {
        let id = StochasticMatrix::identity(4);
        let inst = IrlInstance::new(0.5, vec![id.clone(), id]).unwrap();
        for seed in 0..20 {
            let t = sample_trajectory(&inst, 30, seed);
            assert!(t.states().iter().all(|&s| s == t.initial_state));
        }
    }

    #[test]
    fn trajectories_are_linked_and_deterministic() {
        let inst = two_action();
        let a = sample_trajectory(&inst, 50, 9);
        assert_eq!(a, sample_trajectory(&inst, 50, 9));
        assert_eq!(a.len_states(), 50);
        for w in a.steps.windows(2) {
            assert_eq!(w[0].next_state, w[1].state);
        }
        assert_eq!(a.steps[0].state, a.initial_state);
    }

    #[test]
    fn estimation_fallback_and_exact_counts() {
        let est = estimate_transitions(&[], 3, 2, 1e-3).unwrap();
        for p in &est {
            assert!(p.to_rows().iter().flatten().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));
        }
        let mut c = TransitionCounts::new(2, 1);
        for _ in 0..3 {
            c.add(0, 0, 0);
        }
        c.add(0, 0, 1);
        c.add(1, 0, 1);
        let est = c.estimate(0.0).unwrap();
        assert_eq!(est[0].row(0), vec![0.75, 0.25]);
        assert_eq!(est[0].row(1), vec![0.0, 1.0]);
        let sm = c.estimate(1.0).unwrap();
        assert!((sm[0].get(0, 0) - 4.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn stream_prefixes_nest() {
        let inst = two_action();
        let sampler = Sampler::new(&inst);
        let mut stream = TransitionStream::new(3, 7);
        let mut counts = TransitionCounts::new(3, 2);
        stream.advance(&sampler, &mut counts, 40);
        stream.advance(&sampler, &mut counts, 23);
        assert_eq!(counts, sample_transition_counts(&inst, 63, 7, 3));
        assert_eq!(counts.total(), 63);
    }

    #[test]
    fn kl_examples() {
        let d = kl_divergence(&[0.6, 0.4], &[0.5, 0.5]).unwrap();
        assert!((d - (0.6 * 1.2f64.ln() + 0.4 * 0.8f64.ln())).abs() < 1e-15);
        assert!((d - 0.020136).abs() < 1e-6);
        let q = kl_quadratic_bound(&[0.6, 0.4], &[0.5, 0.5]).unwrap();
        assert!((q - 0.5 * (0.01 / 0.6 + 0.01 / 0.4)).abs() < 1e-15);
        assert!(q >= d);
        assert!(matches!(kl_quadratic_bound(&[0.0, 1.0], &[0.5, 0.5]), Err(Error::ZeroEntry { index: 0 })));
        let p = StochasticMatrix::from_rows(&[vec![0.5, 0.5], vec![1.0, 0.0]]).unwrap();
        let z = StochasticMatrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert!(matches!(
            kl_rows(&p, &z),
            Err(Error::AbsoluteContinuityViolation { row: 0, col: 1 })
        ));
        assert!(kl_rows(&p, &p).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn trajectory_kl_small_cases() {
        let inst = two_action();
        let (p, q) = (&inst.transitions[0], &inst.transitions[1]);
        let u = vec![1.0 / 3.0; 3];
        assert_eq!(exact_trajectory_kl(p, q, &u, &u, 1).unwrap(), 0.0);
        assert_eq!(exact_trajectory_kl(p, p, &u, &u, 6).unwrap(), 0.0);
        let v = kl_rows(p, q).unwrap();
        let two = exact_trajectory_kl(p, q, &u, &u, 2).unwrap();
        assert!((two - v.mean()).abs() < 1e-15);
        let skew = [0.5, 0.3, 0.2];
        for m in 1..6 {
            let a = exact_trajectory_kl(q, p, &skew, &u, m).unwrap();
            let b = brute_force_trajectory_kl(q, p, &skew, &u, m).unwrap();
            assert!((a - b).abs() < 1e-12, "m={m}: {a} vs {b}");
        }
        assert!(matches!(
            brute_force_trajectory_kl(p, q, &u, &u, 20),
            Err(Error::TooLarge(_))
        ));
    }

    #[test]
    fn extended_chain_shape() {
        let inst = two_action();
        let ext = extended_chain(&inst);
        assert_eq!(ext.n(), 6);
        for r in ext.to_rows() {
            assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let single = IrlInstance::new(0.1, vec![inst.transitions[1].clone()]).unwrap();
        assert_eq!(extended_chain(&single), inst.transitions[1]);
    }
}
