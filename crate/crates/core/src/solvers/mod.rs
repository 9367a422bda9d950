//! Reward recovery from estimated transitions.
//!
//! Both solvers write the Bellman margins of the constant policy `a_1` as a
//! linear map of the reward (see [`crate::mdp::margin_operator`]) and split
//! `R = R+ - R-` with `R+, R- >= 0`, so `||R||_1` is linear at the optimum.

pub mod lp;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{bellman_margins, is_strictly_optimal, margin_operator, IrlInstance, RewardVector};
use lp::{solve_lp, LpProblem, LpStatus, Relation};

pub use lp::LpSolution;

pub const DEFAULT_NG_LAMBDA: f64 = 0.001;
pub const DEFAULT_R_MAX: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct IrlSolution {
    /// Present iff `status` is optimal.
    pub reward: Option<RewardVector>,
    pub status: LpStatus,
    pub objective_value: f64,
}

impl IrlSolution {
    fn failed(status: LpStatus) -> Self {
        IrlSolution {
            reward: None,
            status,
            objective_value: f64::NAN,
        }
    }
}

/// A reward-recovery method. Implementations receive the estimated
/// transitions and discount of `est`, never the true model.
pub trait IrlSolver: Send + Sync {
    fn name(&self) -> &str;
    fn solve(&self, est: &IrlInstance) -> Result<IrlSolution>;
}

/// Linear-programming IRL: maximize
/// `sum_i min_{a != a_1} margin_{a,i}(R) - lambda ||R||_1` subject to all
/// margins being nonnegative and `|R_i| <= r_max`. The inner minimum is
/// linearized with one free variable per state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NgRussell {
    pub lambda: f64,
    pub r_max: f64,
}

impl Default for NgRussell {
    fn default() -> Self {
        NgRussell {
            lambda: DEFAULT_NG_LAMBDA,
            r_max: DEFAULT_R_MAX,
        }
    }
}

impl IrlSolver for NgRussell {
    fn name(&self) -> &str {
        "ng_russell"
    }

    fn solve(&self, est: &IrlInstance) -> Result<IrlSolution> {
        irl_ng_russell(est, self.lambda, self.r_max)
    }
}

pub fn irl_ng_russell(est: &IrlInstance, lambda: f64, r_max: f64) -> Result<IrlSolution> {
    check_actions(est)?;
    if !(lambda >= 0.0) || !(r_max > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "need lambda >= 0 and r_max > 0, got {lambda} and {r_max}"
        )));
    }
    let n = est.n();
    let ops = margin_operator(est)?;
    // Variables: R+ (n), R- (n), t (n).
    let mut objective = vec![lambda; 2 * n];
    objective.extend(std::iter::repeat_n(-1.0, n));
    let mut lp = LpProblem::new(objective);
    for i in 0..n {
        lp.set_bounds(i, 0.0, r_max);
        lp.set_bounds(n + i, 0.0, r_max);
        lp.set_free(2 * n + i);
    }
    for (r, row) in ops.row_iter().enumerate() {
        let state = r % n;
        let mut margin = split_row(row.iter().copied(), 3 * n);
        lp.add_constraint(margin.clone(), Relation::Ge, 0.0);
        margin[2 * n + state] = -1.0;
        lp.add_constraint(margin, Relation::Ge, 0.0);
    }
    let sol = solve_lp(&lp)?;
    Ok(finish(sol, n, -1.0, false))
}

/// Sparse max-margin IRL: minimize `||R||_1` subject to every margin being at
/// least 1. The reward is returned with unit 1-norm.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct L1Svm;

impl IrlSolver for L1Svm {
    fn name(&self) -> &str {
        "l1_svm"
    }

    fn solve(&self, est: &IrlInstance) -> Result<IrlSolution> {
        irl_l1_svm(est)
    }
}

pub fn irl_l1_svm(est: &IrlInstance) -> Result<IrlSolution> {
    check_actions(est)?;
    let n = est.n();
    let ops = margin_operator(est)?;
    let mut lp = LpProblem::new(vec![1.0; 2 * n]);
    for row in ops.row_iter() {
        lp.add_constraint(split_row(row.iter().copied(), 2 * n), Relation::Ge, 1.0);
    }
    let sol = solve_lp(&lp)?;
    Ok(finish(sol, n, 1.0, true))
}

fn check_actions(est: &IrlInstance) -> Result<()> {
    if est.k() < 2 {
        return Err(Error::InvalidInstance("reward recovery needs at least two actions".into()));
    }
    Ok(())
}

/// `[row, -row, 0...]` padded to `width`.
fn split_row(row: impl Iterator<Item = f64> + Clone, width: usize) -> Vec<f64> {
    let mut out: Vec<f64> = row.clone().collect();
    out.extend(row.map(|v| -v));
    out.resize(width, 0.0);
    out
}

fn finish(sol: LpSolution, n: usize, sign: f64, normalize: bool) -> IrlSolution {
    if sol.status != LpStatus::Optimal {
        return IrlSolution::failed(sol.status);
    }
    let reward = RewardVector::new((0..n).map(|i| sol.x[i] - sol.x[n + i]).collect());
    let reward = if normalize && reward.l1_norm() > 0.0 {
        reward.normalize_l1().expect("nonzero reward")
    } else {
        reward
    };
    IrlSolution {
        reward: Some(reward),
        status: LpStatus::Optimal,
        objective_value: sign * sol.objective,
    }
}

/// True iff every Bellman margin of `recovered / ||recovered||_1` under the
/// true transitions exceeds `STRICT_TOL`, i.e. `a_1` everywhere is the
/// unique optimal policy.
pub fn success_check(truth: &IrlInstance, recovered: &RewardVector) -> bool {
    if recovered.len() != truth.n() || truth.k() < 2 {
        return false;
    }
    let Ok(unit) = recovered.normalize_l1() else {
        return false;
    };
    match bellman_margins(truth, &unit) {
        Ok(m) => is_strictly_optimal(&m),
        Err(_) => false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    pub ng_lambda: f64,
    pub r_max: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            ng_lambda: DEFAULT_NG_LAMBDA,
            r_max: DEFAULT_R_MAX,
        }
    }
}

pub const SOLVER_NAMES: [&str; 2] = ["ng_russell", "l1_svm"];

pub fn solver_by_name(name: &str, params: &SolverParams) -> Result<Box<dyn IrlSolver>> {
    match name {
        "ng_russell" => Ok(Box::new(NgRussell {
            lambda: params.ng_lambda,
            r_max: params.r_max,
        })),
        "l1_svm" => Ok(Box::new(L1Svm)),
        other => Err(Error::InvalidConfig(format!(
            "unknown solver {other:?}; expected one of {SOLVER_NAMES:?}"
        ))),
    }
}
