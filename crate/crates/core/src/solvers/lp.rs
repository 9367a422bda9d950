//! Dense two-phase primal simplex.
//!
//! Problems are stated as `minimize c'x` subject to linear rows with
//! `<=`, `=` or `>=` relations and per-variable bounds (infinite bounds
//! allowed). The solver rewrites everything into standard form
//! (`Ay = b`, `y >= 0`, `b >= 0`), runs phase one on artificial variables
//! and phase two on the real objective. Degenerate stretches fall back to
//! Bland's rule, so the method terminates on degenerate problems, and the
//! tableau is periodically rebuilt from `A` to keep rounding error bounded.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-10;
const FEAS_TOL: f64 = 1e-9;
const HARRIS_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 200_000;
const REINVERT_EVERY: usize = 50;
const STALL_LIMIT: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `minimize objective'x` subject to `constraints` and `bounds`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<(f64, f64)>,
}

impl LpProblem {
    /// New problem with every variable bounded to `[0, inf)`.
    pub fn new(objective: Vec<f64>) -> Self {
        let bounds = vec![(0.0, f64::INFINITY); objective.len()];
        LpProblem {
            objective,
            constraints: Vec::new(),
            bounds,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_constraint(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) {
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.bounds[var] = (lower, upper);
    }

    pub fn set_free(&mut self, var: usize) {
        self.bounds[var] = (f64::NEG_INFINITY, f64::INFINITY);
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.bounds.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.bounds.len(),
            });
        }
        for c in &self.constraints {
            if c.coeffs.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: c.coeffs.len(),
                });
            }
            if !c.rhs.is_finite() || c.coeffs.iter().any(|v| !v.is_finite()) {
                return Err(Error::LpFailure("non-finite constraint data".into()));
            }
        }
        if self.objective.iter().any(|v| !v.is_finite()) {
            return Err(Error::LpFailure("non-finite objective".into()));
        }
        for &(lo, hi) in &self.bounds {
            if lo.is_nan() || hi.is_nan() || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(Error::LpFailure("invalid variable bound".into()));
            }
        }
        Ok(())
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for c in &self.constraints {
            let lhs: f64 = c.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
            let v = match c.relation {
                Relation::Le => lhs - c.rhs,
                Relation::Ge => c.rhs - lhs,
                Relation::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(v);
        }
        for (&(lo, hi), &v) in self.bounds.iter().zip(x) {
            worst = worst.max(lo - v).max(v - hi);
        }
        worst
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal point; empty unless `status == Optimal`.
    pub x: Vec<f64>,
    pub objective: f64,
}

impl LpSolution {
    fn failed(status: LpStatus) -> Self {
        LpSolution {
            status,
            x: Vec::new(),
            objective: f64::NAN,
        }
    }
}

/// How an original variable is recovered from standard-form columns:
/// `x = offset + sum(sign * y[col])`.
#[derive(Debug, Clone)]
struct VarMap {
    offset: f64,
    cols: Vec<(usize, f64)>,
}

struct Tableau {
    /// `rows x (cols + 1)`, last column is the right-hand side.
    data: Vec<f64>,
    rows: usize,
    cols: usize,
    basis: Vec<usize>,
    /// Reduced costs, last entry is minus the current objective.
    cost: Vec<f64>,
    /// Original standard-form rows, kept for reinversion.
    a: Vec<f64>,
    b: Vec<f64>,
    /// Column costs of the current phase.
    c: Vec<f64>,
    since_reinvert: usize,
}

impl Tableau {
    #[inline]
    fn stride(&self) -> usize {
        self.cols + 1
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.stride() + c]
    }

    #[inline]
    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let stride = self.stride();
        let piv = self.at(pr, pc);
        let start = pr * stride;
        for v in &mut self.data[start..start + stride] {
            *v /= piv;
        }
        let pivot_row: Vec<f64> = self.data[start..start + stride].to_vec();
        for r in 0..self.rows {
            if r == pr {
                continue;
            }
            let f = self.data[r * stride + pc];
            if f != 0.0 {
                let row = &mut self.data[r * stride..(r + 1) * stride];
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
                row[pc] = 0.0;
                // The Harris ratio test may leave tiny negative values.
                if row[self.cols] < 0.0 && row[self.cols] > -HARRIS_TOL {
                    row[self.cols] = 0.0;
                }
            }
        }
        let f = self.cost[pc];
        if f != 0.0 {
            for (v, p) in self.cost.iter_mut().zip(&pivot_row) {
                *v -= f * p;
            }
            self.cost[pc] = 0.0;
        }
        self.basis[pr] = pc;
        self.since_reinvert += 1;
    }

    /// Sets reduced costs for the column costs `c` (length `cols`).
    fn load_costs(&mut self, c: &[f64]) {
        self.c = c.to_vec();
        self.refresh_costs();
    }

    fn refresh_costs(&mut self) {
        let mut cost = self.c.clone();
        cost.push(0.0);
        for r in 0..self.rows {
            let cb = self.c[self.basis[r]];
            if cb != 0.0 {
                for (j, v) in cost.iter_mut().enumerate() {
                    *v -= cb * self.at(r, j);
                }
            }
        }
        self.cost = cost;
    }

    /// Rebuilds the tableau as `B^{-1} [A | b]` for the current basis, which
    /// discards rounding error accumulated by pivoting.
    fn reinvert(&mut self) -> std::result::Result<(), LpStatus> {
        let m = self.rows;
        let stride = self.stride();
        if m > 0 {
            let bmat = DMatrix::from_fn(m, m, |r, k| self.a[r * self.cols + self.basis[k]]);
            let full = DMatrix::from_fn(m, stride, |r, j| {
                if j < self.cols {
                    self.a[r * self.cols + j]
                } else {
                    self.b[r]
                }
            });
            let Some(t) = bmat.lu().solve(&full) else {
                return Err(LpStatus::NumericalFailure);
            };
            if t.iter().any(|v| !v.is_finite()) {
                return Err(LpStatus::NumericalFailure);
            }
            for r in 0..m {
                for j in 0..stride {
                    self.data[r * stride + j] = t[(r, j)];
                }
                let v = &mut self.data[r * stride + self.cols];
                if *v < 0.0 && *v > -HARRIS_TOL {
                    *v = 0.0;
                }
            }
            for (r, &col) in self.basis.iter().enumerate() {
                for k in 0..m {
                    self.data[k * stride + col] = if k == r { 1.0 } else { 0.0 };
                }
            }
        }
        self.refresh_costs();
        self.since_reinvert = 0;
        Ok(())
    }

    /// Primal simplex iterations. `allowed[j]` marks columns that may enter.
    ///
    /// Pricing picks the most negative reduced cost; after a run of
    /// degenerate pivots it switches to Bland's rule (lowest index enters,
    /// lowest basic index leaves among ratio ties) until the objective moves,
    /// which rules out cycling.
    fn run(&mut self, allowed: &[bool]) -> std::result::Result<(), LpStatus> {
        let mut bland = false;
        let mut stalled = 0usize;
        for _ in 0..MAX_PIVOTS {
            if self.since_reinvert >= REINVERT_EVERY {
                self.reinvert()?;
            }
            let entering = if bland {
                (0..self.cols).find(|&j| allowed[j] && self.cost[j] < -COST_TOL)
            } else {
                (0..self.cols)
                    .filter(|&j| allowed[j] && self.cost[j] < -COST_TOL)
                    .min_by(|&x, &y| self.cost[x].total_cmp(&self.cost[y]))
            };
            let Some(pc) = entering else {
                if self.since_reinvert > 0 {
                    self.reinvert()?;
                    continue;
                }
                return Ok(());
            };
            let leaving = if bland {
                self.bland_ratio(pc)
            } else {
                self.harris_ratio(pc)
            };
            let Some(pr) = leaving else {
                if self.since_reinvert > 0 {
                    self.reinvert()?;
                    continue;
                }
                return Err(LpStatus::Unbounded);
            };
            let step = self.rhs(pr).max(0.0) / self.at(pr, pc);
            if step <= 1e-12 {
                stalled += 1;
                if stalled > STALL_LIMIT {
                    bland = true;
                }
            } else {
                stalled = 0;
                bland = false;
            }
            self.pivot(pr, pc);
        }
        Err(LpStatus::NumericalFailure)
    }

    /// Two-pass Harris ratio test: among rows whose ratio is within a small
    /// tolerance of the minimum, take the largest pivot element.
    fn harris_ratio(&self, pc: usize) -> Option<usize> {
        let mut bound = f64::INFINITY;
        for r in 0..self.rows {
            let a = self.at(r, pc);
            if a > PIVOT_TOL {
                bound = bound.min((self.rhs(r).max(0.0) + HARRIS_TOL) / a);
            }
        }
        if !bound.is_finite() {
            return None;
        }
        let mut best: Option<(usize, f64)> = None;
        for r in 0..self.rows {
            let a = self.at(r, pc);
            if a > PIVOT_TOL && self.rhs(r).max(0.0) / a <= bound && best.is_none_or(|(_, ba)| a > ba) {
                best = Some((r, a));
            }
        }
        best.map(|(r, _)| r)
    }

    fn bland_ratio(&self, pc: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for r in 0..self.rows {
            let a = self.at(r, pc);
            if a > PIVOT_TOL {
                let ratio = self.rhs(r).max(0.0) / a;
                best = match best {
                    None => Some((r, ratio)),
                    Some((br, bratio)) => {
                        if ratio < bratio - 1e-12
                            || (ratio <= bratio + 1e-12 && self.basis[r] < self.basis[br])
                        {
                            Some((r, ratio))
                        } else {
                            Some((br, bratio))
                        }
                    }
                };
            }
        }
        best.map(|(r, _)| r)
    }

    fn remove_row(&mut self, r: usize) {
        let stride = self.stride();
        self.data.drain(r * stride..(r + 1) * stride);
        self.a.drain(r * self.cols..(r + 1) * self.cols);
        self.b.remove(r);
        self.basis.remove(r);
        self.rows -= 1;
    }
}

/// Solves `p`. Dimension errors come back as `Err`; infeasibility,
/// unboundedness and numerical trouble are reported through the status.
pub fn solve_lp(p: &LpProblem) -> Result<LpSolution> {
    p.validate()?;
    let nvar = p.num_vars();

    // Column layout of the structural part.
    let mut maps = Vec::with_capacity(nvar);
    let mut ncols = 0usize;
    let mut bound_rows: Vec<(usize, f64)> = Vec::new();
    for &(lo, hi) in &p.bounds {
        if lo > hi {
            return Ok(LpSolution::failed(LpStatus::Infeasible));
        }
        let map = if lo.is_finite() {
            let col = ncols;
            ncols += 1;
            if hi.is_finite() {
                bound_rows.push((col, hi - lo));
            }
            VarMap {
                offset: lo,
                cols: vec![(col, 1.0)],
            }
        } else if hi.is_finite() {
            let col = ncols;
            ncols += 1;
            VarMap {
                offset: hi,
                cols: vec![(col, -1.0)],
            }
        } else {
            let col = ncols;
            ncols += 2;
            VarMap {
                offset: 0.0,
                cols: vec![(col, 1.0), (col + 1, -1.0)],
            }
        };
        maps.push(map);
    }

    // Standard-form rows over the structural columns.
    let mut rows: Vec<(Vec<f64>, Relation, f64)> = Vec::new();
    for c in &p.constraints {
        let mut coeffs = vec![0.0; ncols];
        let mut rhs = c.rhs;
        for (j, &a) in c.coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            rhs -= a * maps[j].offset;
            for &(col, s) in &maps[j].cols {
                coeffs[col] += a * s;
            }
        }
        rows.push((coeffs, c.relation, rhs));
    }
    for &(col, width) in &bound_rows {
        let mut coeffs = vec![0.0; ncols];
        coeffs[col] = 1.0;
        rows.push((coeffs, Relation::Le, width));
    }
    for row in &mut rows {
        if row.2 < 0.0 {
            row.0.iter_mut().for_each(|v| *v = -*v);
            row.2 = -row.2;
            row.1 = match row.1 {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
    }

    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
    let total = ncols + n_slack + n_art;
    let art_start = ncols + n_slack;

    let mut tab = Tableau {
        data: vec![0.0; m * (total + 1)],
        rows: m,
        cols: total,
        basis: vec![0; m],
        cost: vec![0.0; total + 1],
        a: Vec::new(),
        b: Vec::new(),
        c: vec![0.0; total],
        since_reinvert: 0,
    };
    let stride = total + 1;
    let mut next_slack = ncols;
    let mut next_art = art_start;
    for (r, (coeffs, rel, rhs)) in rows.iter().enumerate() {
        tab.data[r * stride..r * stride + ncols].copy_from_slice(coeffs);
        tab.data[r * stride + total] = *rhs;
        match rel {
            Relation::Le => {
                tab.data[r * stride + next_slack] = 1.0;
                tab.basis[r] = next_slack;
                next_slack += 1;
            }
            Relation::Ge => {
                tab.data[r * stride + next_slack] = -1.0;
                next_slack += 1;
                tab.data[r * stride + next_art] = 1.0;
                tab.basis[r] = next_art;
                next_art += 1;
            }
            Relation::Eq => {
                tab.data[r * stride + next_art] = 1.0;
                tab.basis[r] = next_art;
                next_art += 1;
            }
        }
    }

    tab.a = (0..m)
        .flat_map(|r| tab.data[r * stride..r * stride + total].to_vec())
        .collect();
    tab.b = rows.iter().map(|r| r.2).collect();

    let scale = 1.0 + rows.iter().map(|r| r.2.abs()).fold(0.0, f64::max);

    // Phase one.
    if n_art > 0 {
        let mut c1 = vec![0.0; total];
        c1[art_start..].iter_mut().for_each(|v| *v = 1.0);
        tab.load_costs(&c1);
        let allowed = vec![true; total];
        if let Err(status) = tab.run(&allowed) {
            // Phase one is bounded below by zero, so only numerical trouble lands here.
            let status = if status == LpStatus::Unbounded {
                LpStatus::NumericalFailure
            } else {
                status
            };
            return Ok(LpSolution::failed(status));
        }
        let infeasibility = -tab.cost[total];
        if infeasibility > FEAS_TOL * scale {
            return Ok(LpSolution::failed(LpStatus::Infeasible));
        }
        // Drive remaining (zero-valued) artificials out of the basis.
        let mut r = 0;
        while r < tab.rows {
            if tab.basis[r] >= art_start {
                let col = (0..art_start)
                    .filter(|&j| tab.at(r, j).abs() > PIVOT_TOL)
                    .max_by(|&x, &y| tab.at(r, x).abs().total_cmp(&tab.at(r, y).abs()));
                match col {
                    Some(j) => {
                        tab.pivot(r, j);
                        r += 1;
                    }
                    None => tab.remove_row(r),
                }
            } else {
                r += 1;
            }
        }
    }

    // Phase two.
    let mut c2 = vec![0.0; total];
    for (j, map) in maps.iter().enumerate() {
        for &(col, s) in &map.cols {
            c2[col] += p.objective[j] * s;
        }
    }
    tab.load_costs(&c2);
    let mut allowed = vec![true; total];
    allowed[art_start..].iter_mut().for_each(|v| *v = false);
    if let Err(status) = tab.run(&allowed) {
        return Ok(LpSolution::failed(status));
    }

    let mut y = vec![0.0; total];
    for r in 0..tab.rows {
        y[tab.basis[r]] = tab.rhs(r).max(0.0);
    }
    let x: Vec<f64> = maps
        .iter()
        .map(|map| map.offset + map.cols.iter().map(|&(c, s)| s * y[c]).sum::<f64>())
        .collect();

    let xscale = 1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if p.max_violation(&x) > 1e-7 * scale * xscale {
        return Ok(LpSolution::failed(LpStatus::NumericalFailure));
    }
    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective: p.objective_value(&x),
        x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lower_bound_is_optimum() {
        let mut p = LpProblem::new(vec![1.0]);
        p.set_free(0);
        p.add_constraint(vec![1.0], Relation::Ge, 3.0);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let mut p = LpProblem::new(vec![1.0]);
        p.set_free(0);
        p.add_constraint(vec![1.0], Relation::Le, 0.0);
        p.add_constraint(vec![1.0], Relation::Ge, 1.0);
        assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_ray() {
        let mut p = LpProblem::new(vec![-1.0, 0.0]);
        p.add_constraint(vec![1.0, -1.0], Relation::Le, 1.0);
        assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
        let mut p = LpProblem::new(vec![-3.0, -5.0]);
        p.add_constraint(vec![1.0, 0.0], Relation::Le, 4.0);
        p.add_constraint(vec![0.0, 2.0], Relation::Le, 12.0);
        p.add_constraint(vec![3.0, 2.0], Relation::Le, 18.0);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective + 36.0).abs() < 1e-9);
        assert!((s.x[0] - 2.0).abs() < 1e-9 && (s.x[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn equality_and_bounds() {
        // min x - y, x + y = 1, x in [0.25, 2], y in (-inf, 0.5]
        let mut p = LpProblem::new(vec![1.0, -1.0]);
        p.set_bounds(0, 0.25, 2.0);
        p.set_bounds(1, f64::NEG_INFINITY, 0.5);
        p.add_constraint(vec![1.0, 1.0], Relation::Eq, 1.0);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 0.5).abs() < 1e-9 && (s.x[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn redundant_equalities() {
        let mut p = LpProblem::new(vec![1.0, 1.0]);
        p.add_constraint(vec![1.0, 1.0], Relation::Eq, 2.0);
        p.add_constraint(vec![2.0, 2.0], Relation::Eq, 4.0);
        p.add_constraint(vec![1.0, 0.0], Relation::Ge, 0.5);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 2.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's cycling example; Dantzig's rule cycles here, Bland's does not.
        let mut p = LpProblem::new(vec![-0.75, 150.0, -0.02, 6.0]);
        p.add_constraint(vec![0.25, -60.0, -0.04, 9.0], Relation::Le, 0.0);
        p.add_constraint(vec![0.5, -90.0, -0.02, 3.0], Relation::Le, 0.0);
        p.add_constraint(vec![0.0, 0.0, 1.0, 0.0], Relation::Le, 1.0);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective + 0.05).abs() < 1e-9);
    }

    #[test]
    fn inverted_bounds_infeasible() {
        let mut p = LpProblem::new(vec![1.0]);
        p.set_bounds(0, 2.0, 1.0);
        assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let mut p = LpProblem::new(vec![1.0, 2.0]);
        p.add_constraint(vec![1.0], Relation::Le, 1.0);
        assert!(matches!(solve_lp(&p), Err(Error::DimensionMismatch { .. })));
    }
}
