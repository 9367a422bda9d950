//! Finite MDPs without reward, the Bellman optimality condition for the
//! constant policy `a_1`, and beta-strict separability.
//!
//! Throughout, action index 0 is the designated optimal action `a_1`. For a
//! state-only reward `R`, `a_1` is Bellman optimal exactly when every margin
//! `(P_{a_1}(i) - P_a(i)) (I - gamma P_{a_1})^{-1} R` is nonnegative, and it
//! is the unique optimal policy when every margin is strictly positive.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solvers::lp::{solve_lp, LpProblem, LpStatus, Relation};
use crate::STRICT_TOL;

/// Entries in `[-NEG_TOL, 0)` are clamped to zero during validation.
pub const NEG_TOL: f64 = 1e-12;
/// Allowed deviation of a row sum from one before rows are renormalized.
pub const ROW_SUM_TOL: f64 = 1e-9;
/// Largest policy space enumerated exhaustively.
pub const ENUMERATION_LIMIT: usize = 1_000_000;
const POLICY_ITERATION_SWEEPS: usize = 10_000;

/// Square right-stochastic matrix; entry `(i, j)` is the probability of
/// moving from state `i` to state `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    matrix: DMatrix<f64>,
}

impl StochasticMatrix {
    pub fn uniform(n: usize) -> Self {
        StochasticMatrix {
            matrix: DMatrix::from_element(n, n, 1.0 / n as f64),
        }
    }

    pub fn identity(n: usize) -> Self {
        StochasticMatrix {
            matrix: DMatrix::identity(n, n),
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        for r in rows {
            if r.len() != n {
                return Err(Error::NotSquare {
                    rows: n,
                    cols: r.len(),
                });
            }
        }
        validate_stochastic(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.matrix.row(i).iter().copied().collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n()).map(|i| self.row(i)).collect()
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.matrix
    }
}

/// Validates (and lightly repairs) a candidate transition matrix.
///
/// Negative entries no smaller than `-1e-12` are clamped to zero; rows whose
/// sum is within `1e-9` of one are renormalized exactly.
pub fn validate_stochastic(mut m: DMatrix<f64>) -> Result<StochasticMatrix> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let n = m.nrows();
    for i in 0..n {
        for j in 0..n {
            let v = m[(i, j)];
            if !v.is_finite() || v < -NEG_TOL {
                return Err(Error::NegativeEntry {
                    row: i,
                    col: j,
                    value: v,
                });
            }
            if v < 0.0 {
                m[(i, j)] = 0.0;
            }
        }
        let sum: f64 = m.row(i).sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::RowSumViolation { row: i, sum });
        }
        if sum != 1.0 {
            m.row_mut(i).unscale_mut(sum);
        }
    }
    Ok(StochasticMatrix { matrix: m })
}

/// State-only reward.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardVector(DVector<f64>);

impl RewardVector {
    /// Panics on non-finite entries.
    pub fn new(values: Vec<f64>) -> Self {
        assert!(
            values.iter().all(|v| v.is_finite()),
            "reward entries must be finite"
        );
        RewardVector(DVector::from_vec(values))
    }

    pub fn zeros(n: usize) -> Self {
        RewardVector(DVector::zeros(n))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.iter().copied().collect()
    }

    pub fn l1_norm(&self) -> f64 {
        self.0.iter().map(|v| v.abs()).sum()
    }

    pub fn scaled(&self, c: f64) -> Self {
        RewardVector(&self.0 * c)
    }

    pub fn normalize_l1(&self) -> Result<Self> {
        let norm = self.l1_norm();
        if norm <= 0.0 {
            return Err(Error::ZeroReward);
        }
        Ok(RewardVector(&self.0 / norm))
    }
}

impl From<DVector<f64>> for RewardVector {
    fn from(v: DVector<f64>) -> Self {
        RewardVector::new(v.iter().copied().collect())
    }
}

/// Deterministic policy.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Policy {
    pub action_of_state: Vec<usize>,
}

impl Policy {
    pub fn constant(n: usize, action: usize) -> Self {
        Policy {
            action_of_state: vec![action; n],
        }
    }

    pub fn is_constant(&self, action: usize) -> bool {
        self.action_of_state.iter().all(|&a| a == action)
    }

    /// Row `i` of the result is `P_{pi(i)}(i)`.
    pub fn transition_matrix(&self, inst: &IrlInstance) -> DMatrix<f64> {
        let n = inst.n();
        DMatrix::from_fn(n, n, |i, j| {
            inst.transitions[self.action_of_state[i]].get(i, j)
        })
    }
}

/// An MDP without reward: `k` transition matrices over `n` states and a
/// discount factor, optionally with a certified separating reward.
#[derive(Debug, Clone, PartialEq)]
pub struct IrlInstance {
    pub gamma: f64,
    /// `transitions[0]` belongs to the designated optimal action `a_1`.
    pub transitions: Vec<StochasticMatrix>,
    pub certified_reward: Option<RewardVector>,
    pub certified_beta: Option<f64>,
}

impl IrlInstance {
    pub fn new(gamma: f64, transitions: Vec<StochasticMatrix>) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidInstance(format!(
                "gamma must lie in (0, 1), got {gamma}"
            )));
        }
        let Some(first) = transitions.first() else {
            return Err(Error::InvalidInstance("no actions".into()));
        };
        let n = first.n();
        if n == 0 {
            return Err(Error::InvalidInstance("no states".into()));
        }
        for t in &transitions {
            if t.n() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: t.n(),
                });
            }
        }
        Ok(IrlInstance {
            gamma,
            transitions,
            certified_reward: None,
            certified_beta: None,
        })
    }

    /// Attaches a reward and margin, checking both against the instance.
    pub fn with_certificate(mut self, reward: RewardVector, beta: f64) -> Result<Self> {
        if (reward.l1_norm() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInstance(format!(
                "certified reward has 1-norm {}",
                reward.l1_norm()
            )));
        }
        if !(beta > 0.0) {
            return Err(Error::InvalidInstance(format!(
                "certified beta must be positive, got {beta}"
            )));
        }
        let margin = separability_margin(&self, &reward)?;
        if margin < beta - 1e-9 {
            return Err(Error::InvalidInstance(format!(
                "reward separates with margin {margin}, below certified beta {beta}"
            )));
        }
        self.certified_reward = Some(reward);
        self.certified_beta = Some(beta);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.transitions[0].n()
    }

    pub fn k(&self) -> usize {
        self.transitions.len()
    }

    /// Swaps action `a` into the optimal slot, so a constant policy `a`
    /// can be analyzed with the `a_1` machinery.
    pub fn relabel_optimal(&self, a: usize) -> Result<Self> {
        if a >= self.k() {
            return Err(Error::InvalidInstance(format!("no action {a}")));
        }
        let mut transitions = self.transitions.clone();
        transitions.swap(0, a);
        IrlInstance::new(self.gamma, transitions)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&InstanceJson::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: InstanceJson = serde_json::from_str(s)?;
        raw.try_into()
    }
}

/// On-disk layout: transitions are action-major, then row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceJson {
    pub n: usize,
    pub k: usize,
    pub gamma: f64,
    pub transitions: Vec<Vec<Vec<f64>>>,
    pub reward: Option<Vec<f64>>,
    pub beta: Option<f64>,
}

impl From<&IrlInstance> for InstanceJson {
    fn from(inst: &IrlInstance) -> Self {
        InstanceJson {
            n: inst.n(),
            k: inst.k(),
            gamma: inst.gamma,
            transitions: inst.transitions.iter().map(|t| t.to_rows()).collect(),
            reward: inst.certified_reward.as_ref().map(|r| r.to_vec()),
            beta: inst.certified_beta,
        }
    }
}

impl TryFrom<InstanceJson> for IrlInstance {
    type Error = Error;

    fn try_from(raw: InstanceJson) -> Result<Self> {
        if raw.transitions.len() != raw.k {
            return Err(Error::DimensionMismatch {
                expected: raw.k,
                got: raw.transitions.len(),
            });
        }
        let transitions = raw
            .transitions
            .iter()
            .map(|rows| {
                if rows.len() != raw.n {
                    return Err(Error::DimensionMismatch {
                        expected: raw.n,
                        got: rows.len(),
                    });
                }
                StochasticMatrix::from_rows(rows)
            })
            .collect::<Result<Vec<_>>>()?;
        let inst = IrlInstance::new(raw.gamma, transitions)?;
        match (raw.reward, raw.beta) {
            (Some(r), Some(b)) => {
                if r.len() != raw.n {
                    return Err(Error::DimensionMismatch {
                        expected: raw.n,
                        got: r.len(),
                    });
                }
                inst.with_certificate(RewardVector::new(r), b)
            }
            (None, None) => Ok(inst),
            (Some(r), None) => {
                let mut inst = inst;
                inst.certified_reward = Some(RewardVector::new(r));
                Ok(inst)
            }
            (None, Some(_)) => Err(Error::InvalidInstance(
                "beta given without a reward".into(),
            )),
        }
    }
}

/// Solves `(I - gamma P) V = R`.
pub fn policy_value(p: &DMatrix<f64>, r: &RewardVector, gamma: f64) -> Result<DVector<f64>> {
    let n = p.nrows();
    if r.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: r.len(),
        });
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidInstance(format!(
            "gamma must lie in (0, 1), got {gamma}"
        )));
    }
    let a = DMatrix::identity(n, n) - p * gamma;
    a.lu().solve(r.as_vector()).ok_or(Error::SingularSystem)
}

/// `(I - gamma P_{a_1})^{-1}`.
pub fn discounted_resolvent(inst: &IrlInstance) -> Result<DMatrix<f64>> {
    let n = inst.n();
    let a = DMatrix::identity(n, n) - inst.transitions[0].matrix() * inst.gamma;
    a.try_inverse().ok_or(Error::SingularSystem)
}

/// Linear map from a reward to its Bellman margins.
///
/// Row `(a - 1) * n + i` is `(P_{a_1}(i) - P_a(i)) (I - gamma P_{a_1})^{-1}`
/// for `a = 1..k`.
pub fn margin_operator(inst: &IrlInstance) -> Result<DMatrix<f64>> {
    let n = inst.n();
    let k = inst.k();
    let resolvent = discounted_resolvent(inst)?;
    let p1 = inst.transitions[0].matrix();
    let mut diff = DMatrix::zeros(n * (k - 1), n);
    for a in 1..k {
        let pa = inst.transitions[a].matrix();
        for i in 0..n {
            for j in 0..n {
                diff[((a - 1) * n + i, j)] = p1[(i, j)] - pa[(i, j)];
            }
        }
    }
    Ok(diff * resolvent)
}

/// Margin matrix, `n x (k - 1)`: column `a - 1` holds
/// `(P_{a_1}(i) - P_a(i)) V` with `V = (I - gamma P_{a_1})^{-1} R`.
pub fn bellman_margins(inst: &IrlInstance, r: &RewardVector) -> Result<DMatrix<f64>> {
    let n = inst.n();
    let v = policy_value(inst.transitions[0].matrix(), r, inst.gamma)?;
    let p1 = inst.transitions[0].matrix();
    let base = p1 * &v;
    let mut out = DMatrix::zeros(n, inst.k() - 1);
    for a in 1..inst.k() {
        let other = inst.transitions[a].matrix() * &v;
        for i in 0..n {
            out[(i, a - 1)] = base[i] - other[i];
        }
    }
    Ok(out)
}

pub fn is_bellman_optimal(margins: &DMatrix<f64>) -> bool {
    margins.iter().all(|&m| m >= -STRICT_TOL)
}

pub fn is_strictly_optimal(margins: &DMatrix<f64>) -> bool {
    margins.iter().all(|&m| m > STRICT_TOL)
}

/// Smallest Bellman margin of `R / ||R||_1`.
pub fn separability_margin(inst: &IrlInstance, r: &RewardVector) -> Result<f64> {
    if inst.k() < 2 {
        return Err(Error::InvalidInstance(
            "separability needs at least two actions".into(),
        ));
    }
    let unit = r.normalize_l1()?;
    let margins = bellman_margins(inst, &unit)?;
    Ok(margins.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Largest separability margin over all rewards, with a maximizer.
///
/// Solves `max beta` subject to every margin of `R` being at least `beta`
/// and `||R||_1 <= 1`, with `R = R+ - R-`. A result `<= 0` means no reward
/// makes `a_1` strictly optimal.
pub fn measure_beta(inst: &IrlInstance) -> Result<(f64, RewardVector)> {
    if inst.k() < 2 {
        return Err(Error::InvalidInstance(
            "separability needs at least two actions".into(),
        ));
    }
    let n = inst.n();
    let ops = margin_operator(inst)?;
    // Variables: R+ (n), R- (n), beta.
    let mut objective = vec![0.0; 2 * n + 1];
    objective[2 * n] = -1.0;
    let mut lp = LpProblem::new(objective);
    lp.set_free(2 * n);
    for row in ops.row_iter() {
        let mut coeffs = Vec::with_capacity(2 * n + 1);
        coeffs.extend(row.iter().copied());
        coeffs.extend(row.iter().map(|v| -v));
        coeffs.push(-1.0);
        lp.add_constraint(coeffs, Relation::Ge, 0.0);
    }
    let mut norm = vec![1.0; 2 * n];
    norm.push(0.0);
    lp.add_constraint(norm, Relation::Le, 1.0);

    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::LpFailure(format!("max-margin LP: {:?}", sol.status)));
    }
    let reward: Vec<f64> = (0..n).map(|i| sol.x[i] - sol.x[n + i]).collect();
    let reward = RewardVector::new(reward);
    let beta = sol.x[2 * n];
    let reward = if reward.l1_norm() > 0.0 {
        reward.normalize_l1()?
    } else {
        reward
    };
    Ok((beta, reward))
}

/// Every Bellman-optimal deterministic policy for `(inst, R)`.
///
/// Small policy spaces (`k^n <= 1e6`) are enumerated: a policy is kept when
/// no single-state deviation improves its own Q values by more than
/// `STRICT_TOL`. Larger spaces fall back to policy iteration followed by a
/// product over per-state optimal action sets.
pub fn brute_force_optimal_policies(inst: &IrlInstance, r: &RewardVector) -> Result<Vec<Policy>> {
    let n = inst.n();
    let k = inst.k();
    if r.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: r.len(),
        });
    }
    let space = (k as f64).powi(n as i32);
    if space <= ENUMERATION_LIMIT as f64 {
        enumerate_optimal(inst, r)
    } else {
        policy_iteration_optimal(inst, r)
    }
}

/// `(P_{pi(s)}(s) - P_a(s)) V^pi >= -STRICT_TOL` for all `s, a`.
fn is_policy_greedy(inst: &IrlInstance, policy: &Policy, v: &DVector<f64>) -> bool {
    let n = inst.n();
    for s in 0..n {
        let own = row_dot(inst.transitions[policy.action_of_state[s]].matrix(), s, v);
        for a in 0..inst.k() {
            let alt = row_dot(inst.transitions[a].matrix(), s, v);
            if own - alt < -STRICT_TOL {
                return false;
            }
        }
    }
    true
}

fn row_dot(m: &DMatrix<f64>, i: usize, v: &DVector<f64>) -> f64 {
    (0..v.len()).map(|j| m[(i, j)] * v[j]).sum()
}

fn enumerate_optimal(inst: &IrlInstance, r: &RewardVector) -> Result<Vec<Policy>> {
    let n = inst.n();
    let k = inst.k();
    let mut out = Vec::new();
    let mut actions = vec![0usize; n];
    loop {
        let policy = Policy {
            action_of_state: actions.clone(),
        };
        let v = policy_value(&policy.transition_matrix(inst), r, inst.gamma)?;
        if is_policy_greedy(inst, &policy, &v) {
            out.push(policy);
        }
        // Odometer increment, state 0 fastest.
        let mut s = 0;
        loop {
            if s == n {
                return Ok(out);
            }
            actions[s] += 1;
            if actions[s] < k {
                break;
            }
            actions[s] = 0;
            s += 1;
        }
    }
}

fn policy_iteration_optimal(inst: &IrlInstance, r: &RewardVector) -> Result<Vec<Policy>> {
    let n = inst.n();
    let k = inst.k();
    let mut policy = Policy::constant(n, 0);
    let mut v = policy_value(&policy.transition_matrix(inst), r, inst.gamma)?;
    let mut converged = false;
    for _ in 0..POLICY_ITERATION_SWEEPS {
        let mut changed = false;
        for s in 0..n {
            let current = row_dot(inst.transitions[policy.action_of_state[s]].matrix(), s, &v);
            let (best_a, best) = (0..k)
                .map(|a| (a, row_dot(inst.transitions[a].matrix(), s, &v)))
                .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best > current + STRICT_TOL {
                policy.action_of_state[s] = best_a;
                changed = true;
            }
        }
        if !changed {
            converged = true;
            break;
        }
        v = policy_value(&policy.transition_matrix(inst), r, inst.gamma)?;
    }
    if !converged {
        return Err(Error::TooLarge(
            "policy iteration did not converge".into(),
        ));
    }
    let per_state: Vec<Vec<usize>> = (0..n)
        .map(|s| {
            let best = row_dot(inst.transitions[policy.action_of_state[s]].matrix(), s, &v);
            (0..k)
                .filter(|&a| best - row_dot(inst.transitions[a].matrix(), s, &v) <= STRICT_TOL)
                .collect()
        })
        .collect();
    let count: f64 = per_state.iter().map(|s| s.len() as f64).product();
    if count > ENUMERATION_LIMIT as f64 {
        return Err(Error::TooLarge(format!(
            "{count} optimal policies exceed the enumeration limit"
        )));
    }
    let mut out = vec![Vec::with_capacity(n)];
    for choices in &per_state {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                choices.iter().map(move |&a| {
                    let mut p = prefix.clone();
                    p.push(a);
                    p
                })
            })
            .collect();
    }
    Ok(out
        .into_iter()
        .map(|action_of_state| Policy { action_of_state })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state(p2: [[f64; 2]; 2]) -> IrlInstance {
        let p1 = StochasticMatrix::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let p2 = StochasticMatrix::from_rows(&[p2[0].to_vec(), p2[1].to_vec()]).unwrap();
        IrlInstance::new(0.5, vec![p1, p2]).unwrap()
    }

    #[test]
    fn validation_accepts_uniform_and_identity() {
        let u = DMatrix::from_element(4, 4, 0.25);
        assert!(validate_stochastic(u).is_ok());
        assert!(validate_stochastic(DMatrix::identity(3, 3)).is_ok());
    }

    #[test]
    fn validation_rejects_negative_entry() {
        let m = DMatrix::from_row_slice(2, 2, &[1.01, -0.01, 0.5, 0.5]);
        assert!(matches!(
            validate_stochastic(m),
            Err(Error::NegativeEntry { row: 0, col: 1, .. })
        ));
    }

    #[test]
    fn validation_rejects_bad_row_sum_and_renormalizes_small_drift() {
        let bad = DMatrix::from_row_slice(2, 2, &[0.5, 0.4, 0.5, 0.5]);
        assert!(matches!(
            validate_stochastic(bad),
            Err(Error::RowSumViolation { row: 0, .. })
        ));
        let drift = DMatrix::from_row_slice(2, 2, &[0.5 + 5e-10, 0.5, -5e-13, 1.0]);
        let ok = validate_stochastic(drift).unwrap();
        assert!(ok.get(1, 0) == 0.0);
        assert!((ok.row(0).iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn value_of_identity_chain_is_geometric() {
        let v = policy_value(&DMatrix::identity(3, 3), &RewardVector::new(vec![2.0; 3]), 0.75)
            .unwrap();
        for x in v.iter() {
            assert!((x - 8.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_reward_has_zero_value() {
        let p = StochasticMatrix::uniform(4);
        let v = policy_value(p.matrix(), &RewardVector::zeros(4), 0.3).unwrap();
        assert!(v.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn uniform_chain_value_matches_closed_form() {
        // Uniform P is idempotent, so V = R + gamma / (1 - gamma) * mean(R).
        let r = RewardVector::new(vec![0.3, -1.2, 2.0, 0.1, 0.0]);
        let gamma = 0.6;
        let v = policy_value(StochasticMatrix::uniform(5).matrix(), &r, gamma).unwrap();
        let mean = r.as_slice().iter().sum::<f64>() / 5.0;
        for i in 0..5 {
            let expect = r.as_slice()[i] + gamma / (1.0 - gamma) * mean;
            assert!((v[i] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn duplicate_actions_have_zero_margins() {
        let inst = two_state([[0.5, 0.5], [0.5, 0.5]]);
        let m = bellman_margins(&inst, &RewardVector::new(vec![1.0, -3.0])).unwrap();
        assert!(m.iter().all(|&x| x == 0.0));
        assert_eq!(
            separability_margin(&inst, &RewardVector::new(vec![0.2, 0.7])).unwrap(),
            0.0
        );
        let (beta, _) = measure_beta(&inst).unwrap();
        assert!(beta.abs() < 1e-12);
    }

    #[test]
    fn separability_is_scale_invariant() {
        let inst = two_state([[0.8, 0.2], [0.7, 0.3]]);
        let r = RewardVector::new(vec![-0.4, 1.3]);
        let a = separability_margin(&inst, &r).unwrap();
        let b = separability_margin(&inst, &r.scaled(17.5)).unwrap();
        assert!((a - b).abs() < 1e-15);
        assert!(matches!(
            separability_margin(&inst, &RewardVector::zeros(2)),
            Err(Error::ZeroReward)
        ));
    }

    #[test]
    fn two_state_max_margin_matches_grid_search() {
        // a_2 pushes mass toward state 0; rewarding state 1 separates.
        let inst = two_state([[0.8, 0.2], [0.7, 0.3]]);
        let (beta, reward) = measure_beta(&inst).unwrap();
        assert!(beta > 0.0);
        let mut best = f64::NEG_INFINITY;
        let steps = 4000;
        for s in 0..=steps {
            // Parametrize the unit 1-norm circle.
            let t = -1.0 + 2.0 * s as f64 / steps as f64;
            for sign in [-1.0, 1.0] {
                let r = RewardVector::new(vec![t, sign * (1.0 - t.abs())]);
                if r.l1_norm() > 0.0 {
                    best = best.max(separability_margin(&inst, &r).unwrap());
                }
            }
        }
        assert!(beta >= best - 1e-12);
        assert!(beta - best < 1e-3);
        assert!((separability_margin(&inst, &reward).unwrap() - beta).abs() < 1e-9);
    }

    #[test]
    fn brute_force_on_identical_actions_returns_everything() {
        let inst = two_state([[0.5, 0.5], [0.5, 0.5]]);
        let all = brute_force_optimal_policies(&inst, &RewardVector::new(vec![1.0, 2.0])).unwrap();
        assert_eq!(all.len(), 4);
        let zero = brute_force_optimal_policies(&two_state([[0.9, 0.1], [0.2, 0.8]]), &RewardVector::zeros(2))
            .unwrap();
        assert_eq!(zero.len(), 4);
    }

    #[test]
    fn policy_iteration_path_agrees_with_enumeration() {
        let inst = two_state([[0.8, 0.2], [0.1, 0.9]]);
        let r = RewardVector::new(vec![-0.3, 0.6]);
        let mut a = enumerate_optimal(&inst, &r).unwrap();
        let mut b = policy_iteration_optimal(&inst, &r).unwrap();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn json_round_trip_keeps_certificate() {
        let inst = two_state([[0.8, 0.2], [0.7, 0.3]]);
        let (beta, r) = measure_beta(&inst).unwrap();
        let inst = inst.with_certificate(r, beta).unwrap();
        let back = IrlInstance::from_json(&inst.to_json().unwrap()).unwrap();
        assert_eq!(back.n(), 2);
        assert_eq!(back.k(), 2);
        assert_eq!(back.certified_beta, inst.certified_beta);
    }

    #[test]
    fn relabeling_swaps_optimal_action() {
        let inst = two_state([[0.8, 0.2], [0.7, 0.3]]);
        let swapped = inst.relabel_optimal(1).unwrap();
        assert_eq!(swapped.transitions[0], inst.transitions[1]);
        assert!(inst.relabel_optimal(5).is_err());
    }
}
