//! Independent oracles: brute-force enumerations and statistical checks that
//! the fast code paths are compared against.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use irl_lab::ensemble::{build_ensemble, EnsembleConfig};
use irl_lab::geometry::CodeKind;
use irl_lab::mdp::{policy_value, IrlInstance, RewardVector, StochasticMatrix};
use irl_lab::solvers::lp::{solve_lp, LpProblem, LpStatus, Relation};
use irl_lab::trajectory::{
    brute_force_trajectory_kl, exact_trajectory_kl, sample_trajectory, sample_transition_counts,
};

fn random_stochastic(rng: &mut ChaCha8Rng, n: usize, sparse: bool) -> StochasticMatrix {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let mut r: Vec<f64> = (0..n)
                .map(|_| if sparse && rng.gen_bool(0.3) { 0.0 } else { rng.gen::<f64>() + 0.01 })
                .collect();
            if r.iter().all(|&v| v == 0.0) {
                r[0] = 1.0;
            }
            let s: f64 = r.iter().sum();
            r.iter().map(|v| v / s).collect()
        })
        .collect();
    StochasticMatrix::from_rows(&rows).unwrap()
}

fn random_dist(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let r: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() + 0.05).collect();
    let s: f64 = r.iter().sum();
    r.iter().map(|v| v / s).collect()
}

// Vertex enumeration: every basic solution of the inequality system with
// all equalities active, kept if feasible, best objective wins.
enum Oracle {
    Optimal(f64),
    Infeasible,
}

fn vertex_oracle(p: &LpProblem) -> Oracle {
    let n = p.num_vars();
    let mut eq: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut ineq: Vec<(Vec<f64>, f64)> = Vec::new();
    for c in &p.constraints {
        match c.relation {
            Relation::Eq => eq.push((c.coeffs.clone(), c.rhs)),
            _ => ineq.push((c.coeffs.clone(), c.rhs)),
        }
    }
    for (i, &(lo, hi)) in p.bounds.iter().enumerate() {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        if lo.is_finite() {
            ineq.push((e.clone(), lo));
        }
        if hi.is_finite() {
            ineq.push((e, hi));
        }
    }
    let need = n - eq.len();
    let mut best: Option<f64> = None;
    let mut pick = Vec::with_capacity(need);
    subsets(ineq.len(), need, 0, &mut pick, &mut |idx| {
        let rows: Vec<&(Vec<f64>, f64)> = eq.iter().chain(idx.iter().map(|&i| &ineq[i])).collect();
        let a = DMatrix::from_fn(n, n, |r, c| rows[r].0[c]);
        let b = DVector::from_fn(n, |r, _| rows[r].1);
        let lu = a.lu();
        if lu.determinant().abs() < 1e-9 {
            return;
        }
        let Some(x) = lu.solve(&b) else { return };
        let x: Vec<f64> = x.iter().copied().collect();
        if p.max_violation(&x) <= 1e-7 {
            let v = p.objective_value(&x);
            best = Some(best.map_or(v, |b: f64| b.min(v)));
        }
    });
    match best {
        Some(v) => Oracle::Optimal(v),
        None => Oracle::Infeasible,
    }
}

fn subsets(len: usize, k: usize, start: usize, pick: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    if pick.len() == k {
        f(pick);
        return;
    }
    for i in start..len {
        if len - i < k - pick.len() {
            break;
        }
        pick.push(i);
        subsets(len, k, i + 1, pick, f);
        pick.pop();
    }
}

fn random_lp(rng: &mut ChaCha8Rng) -> LpProblem {
    let n = rng.gen_range(1..=6);
    let m = rng.gen_range(1..=12 - n);
    let int = |rng: &mut ChaCha8Rng, lo: i32, hi: i32| rng.gen_range(lo..=hi) as f64;
    let mut p = LpProblem::new((0..n).map(|_| int(rng, -5, 5)).collect());
    let mut equalities = 0;
    for _ in 0..m {
        let coeffs: Vec<f64> = (0..n).map(|_| int(rng, -4, 4)).collect();
        let rel = match rng.gen_range(0..10) {
            0 if equalities < n => {
                equalities += 1;
                Relation::Eq
            }
            0..=2 => Relation::Ge,
            _ => Relation::Le,
        };
        p.add_constraint(coeffs, rel, int(rng, -3, 8));
    }
    // Boxes keep every instance bounded; some variables are free below.
    for v in 0..n {
        let lo = if rng.gen_bool(0.3) { -int(rng, 0, 4) } else { 0.0 };
        p.set_bounds(v, lo, int(rng, 1, 6));
    }
    p
}

#[test]
fn simplex_matches_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut optimal, mut infeasible) = (0, 0);
    for case in 0..400 {
        let p = random_lp(&mut rng);
        let sol = solve_lp(&p).unwrap();
        match vertex_oracle(&p) {
            Oracle::Optimal(v) => {
                optimal += 1;
                assert_eq!(sol.status, LpStatus::Optimal, "case {case}: {p:?}");
                assert!((sol.objective - v).abs() <= 1e-7 * (1.0 + v.abs()), "case {case}: {} vs {v}", sol.objective);
                assert!(p.max_violation(&sol.x) <= 1e-7);
            }
            Oracle::Infeasible => {
                infeasible += 1;
                assert_eq!(sol.status, LpStatus::Infeasible, "case {case}: {p:?}");
            }
        }
    }
    assert!(optimal > 50 && infeasible > 20, "{optimal} optimal, {infeasible} infeasible");
}

#[test]
fn unbounded_lp_is_reported() {
    let mut p = LpProblem::new(vec![-1.0, 0.0]);
    p.add_constraint(vec![1.0, -1.0], Relation::Le, 1.0);
    assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Unbounded);
}

#[test]
fn exact_kl_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let n = rng.gen_range(2..=4);
        let m = rng.gen_range(1..=6);
        let p = random_stochastic(&mut rng, n, true);
        let q = random_stochastic(&mut rng, n, false);
        let (ip, iq) = (random_dist(&mut rng, n), random_dist(&mut rng, n));
        let exact = exact_trajectory_kl(&p, &q, &ip, &iq, m).unwrap();
        let brute = brute_force_trajectory_kl(&p, &q, &ip, &iq, m).unwrap();
        assert!((exact - brute).abs() <= 1e-10, "n={n} m={m}: {exact} vs {brute}");
    }
}

#[test]
fn policy_value_solves_the_bellman_system() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let n = rng.gen_range(1..=8);
        let p = random_stochastic(&mut rng, n, true);
        let r = RewardVector::new((0..n).map(|_| rng.gen_range(-10.0..10.0)).collect());
        let gamma = rng.gen_range(0.01..0.99);
        let v = policy_value(p.matrix(), &r, gamma).unwrap();
        let residual = (DMatrix::identity(n, n) - p.matrix() * gamma) * &v - r.as_vector();
        let scale = 1.0 + r.as_vector().amax();
        assert!(residual.amax() <= 1e-9 * scale, "{}", residual.amax());
    }
}

// With P_{a_2} = P_{a_1} + eps U, the proof of the trajectory bound uses
// 1'U = 0 and P_{a_1} U = 0.
#[test]
fn construction_offsets_annihilate_the_uniform_row() {
    for n in [4usize, 5, 7] {
        let cfg = EnsembleConfig::new(n, 0.1, 1e-3, None, CodeKind::Simplex).unwrap();
        for h in build_ensemble(&cfg).unwrap() {
            let p1 = h.instance.transitions[0].matrix();
            let u = (h.instance.transitions[1].matrix() - p1) / cfg.eps;
            let ones = DVector::from_element(n, 1.0);
            assert!((&u * &ones).amax() <= 1e-10, "rows of U sum to zero");
            let uniform_row = ones.transpose() / n as f64;
            assert!((uniform_row * &u).amax() <= 1e-10, "n={n}: uniform row times U is nonzero");
            assert!((p1 * &u).amax() <= 1e-10, "n={n}: P_a1 U is nonzero");
        }
    }
}

#[test]
fn initial_states_are_uniform() {
    let n = 5;
    let inst = IrlInstance::new(0.1, vec![StochasticMatrix::identity(n), StochasticMatrix::uniform(n)]).unwrap();
    let mut counts = vec![0.0f64; n];
    let draws = 100_000;
    for seed in 0..draws {
        counts[sample_trajectory(&inst, 1, seed).initial_state] += 1.0;
    }
    let expected = draws as f64 / n as f64;
    let chi2: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
    // 4 degrees of freedom; 18.47 is the 0.999 quantile.
    assert!(chi2 < 18.47, "chi2 = {chi2}, counts {counts:?}");
}

#[test]
fn estimates_converge_to_the_truth() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 4;
    let inst = IrlInstance::new(
        0.1,
        vec![random_stochastic(&mut rng, n, false), random_stochastic(&mut rng, n, true)],
    )
    .unwrap();
    let mut prev = f64::INFINITY;
    for &m in &[1_000u64, 100_000, 1_000_000] {
        let counts = sample_transition_counts(&inst, m, 10, 5);
        let est = counts.estimate(0.0).unwrap();
        let err = est
            .iter()
            .zip(&inst.transitions)
            .map(|(e, t)| (e.matrix() - t.matrix()).amax())
            .fold(0.0, f64::max);
        assert!(err < prev.max(1e-3), "m={m}: {err}");
        prev = err;
    }
    assert!(prev < 0.01, "{prev}");
}
