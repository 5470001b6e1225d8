//! Two-phase primal simplex for bounded variables on a dense tableau.
//!
//! Each row becomes `a·x + s = b` with a slack `s` bounded by the row kind
//! (`≤`: `s ≥ 0`, `≥`: `s ≤ 0`, `=`: `s = 0`). Rows whose starting residual
//! falls outside the slack bounds get an artificial column; phase 1 drives
//! the artificials to zero. Nonbasic variables sit at a bound (or at zero if
//! free) and may jump to the opposite bound without a pivot.
//!
//! Pricing is Dantzig's largest reduced cost; after a run of degenerate
//! pivots the solver falls back to Bland's smallest-index rule until the
//! objective moves again. The tableau is rebuilt from an LU factorization of
//! the basis every `refactor_every` pivots; the
//! all-slack starting basis skips the factorization.

use nalgebra::{DMatrix, DVector};

use super::lp::{LinearProgram, RowKind, Sense};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub pivot_tol: f64,
    pub refactor_every: usize,
    /// Degenerate pivots in a row before switching to Bland's rule.
    pub degenerate_streak: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-7,
            optimality_tol: 1e-7,
            pivot_tol: 1e-9,
            refactor_every: 100,
            degenerate_streak: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Basic,
    Lower,
    Upper,
    /// Free nonbasic variable held at zero.
    Zero,
}

enum Phase {
    Optimal,
    Unbounded,
}

struct Tableau<'o> {
    m: usize,
    ncol: usize,
    a: DMatrix<f64>,
    b: DVector<f64>,
    t: DMatrix<f64>,
    /// Reduced costs of the current phase.
    d: Vec<f64>,
    cost: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<State>,
    x: Vec<f64>,
    lo: Vec<f64>,
    up: Vec<f64>,
    opts: &'o SimplexOptions,
    pivots: usize,
}

/// Solves `lp` with the variable bounds replaced by `lower`/`upper`.
pub fn solve_lp(
    lp: &LinearProgram,
    lower: &[f64],
    upper: &[f64],
    opts: &SimplexOptions,
) -> Result<LpOutcome> {
    let nv = lp.num_variables();
    let m = lp.num_constraints();
    if lower.len() != nv || upper.len() != nv {
        return Err(Error::Dimension {
            what: "variable bounds",
            expected: nv,
            got: lower.len().min(upper.len()),
        });
    }
    if (0..nv).any(|j| lower[j] > upper[j] + opts.feasibility_tol) {
        return Ok(LpOutcome::Infeasible);
    }
    let mut lo = Vec::with_capacity(nv + 2 * m);
    let mut up = Vec::with_capacity(nv + 2 * m);
    lo.extend_from_slice(lower);
    up.extend(lower.iter().zip(upper).map(|(l, u)| u.max(*l)));
    let mut x = vec![0.0; nv];
    let mut state = vec![State::Lower; nv];
    for j in 0..nv {
        if lo[j].is_finite() {
            x[j] = lo[j];
        } else if up[j].is_finite() {
            x[j] = up[j];
            state[j] = State::Upper;
        } else {
            state[j] = State::Zero;
        }
    }

    // Slack columns nv..nv+m, then one artificial per row that starts
    // outside its slack bounds.
    let mut basis = Vec::with_capacity(m);
    let mut artificials: Vec<(usize, f64, f64)> = Vec::new();
    let mut b = DVector::zeros(m);
    let mut slack_x = vec![0.0; m];
    let mut slack_state = vec![State::Lower; m];
    for (i, row) in lp.constraints.iter().enumerate() {
        b[i] = row.rhs;
        let (sl, su) = match row.kind {
            RowKind::Le => (0.0, f64::INFINITY),
            RowKind::Ge => (f64::NEG_INFINITY, 0.0),
            RowKind::Eq => (0.0, 0.0),
        };
        lo.push(sl);
        up.push(su);
        let residual = row.rhs - row.coefs.iter().map(|&(j, c)| c * x[j]).sum::<f64>();
        if residual >= sl && residual <= su {
            basis.push(nv + i);
            slack_state[i] = State::Basic;
            slack_x[i] = residual;
        } else {
            let bound = if residual < sl { sl } else { su };
            slack_x[i] = bound;
            slack_state[i] = if bound == sl {
                State::Lower
            } else {
                State::Upper
            };
            let gap = residual - bound;
            basis.push(nv + m + artificials.len());
            artificials.push((i, gap.signum(), gap.abs()));
        }
    }
    x.extend(slack_x);
    state.extend(slack_state);
    let ncol = nv + m + artificials.len();
    let mut a = DMatrix::zeros(m, ncol);
    for (i, row) in lp.constraints.iter().enumerate() {
        for &(j, c) in &row.coefs {
            a[(i, j)] = c;
        }
        a[(i, nv + i)] = 1.0;
    }
    let mut cost = vec![0.0; ncol];
    for (k, &(i, sign, value)) in artificials.iter().enumerate() {
        a[(i, nv + m + k)] = sign;
        lo.push(0.0);
        up.push(f64::INFINITY);
        x.push(value);
        state.push(State::Basic);
        cost[nv + m + k] = 1.0;
    }

    let mut tab = Tableau {
        m,
        ncol,
        t: DMatrix::zeros(m, ncol),
        a,
        b,
        d: vec![0.0; ncol],
        cost,
        basis,
        state,
        x,
        lo,
        up,
        opts,
        pivots: 0,
    };
    tab.refactor()?;

    let scale = 1.0 + tab.b.amax();
    if tab.cost.iter().any(|&c| c != 0.0) {
        tab.run()?;
        let infeasibility: f64 = (nv + m..ncol).map(|j| tab.x[j]).sum();
        if infeasibility > opts.feasibility_tol * scale {
            return Ok(LpOutcome::Infeasible);
        }
        tab.retire_artificials(nv + m)?;
    }

    let sign = match lp.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    tab.cost = vec![0.0; ncol];
    for (j, v) in lp.variables.iter().enumerate() {
        tab.cost[j] = sign * v.objective;
    }
    tab.price();
    match tab.run()? {
        Phase::Unbounded => Ok(LpOutcome::Unbounded),
        Phase::Optimal => {
            let x: Vec<f64> = (0..nv)
                .map(|j| tab.x[j].clamp(tab.lo[j], tab.up[j]))
                .collect();
            let objective = lp.objective_value(&x);
            Ok(LpOutcome::Optimal { x, objective })
        }
    }
}

impl Tableau<'_> {
    /// Rebuilds `B⁻¹A`, the basic values and the reduced costs.
    fn refactor(&mut self) -> Result<()> {
        if self.m == 0 {
            self.price();
            return Ok(());
        }
        if let Some(signs) = self.diagonal_basis() {
            self.t = self.a.clone();
            for (i, &s) in signs.iter().enumerate() {
                if s < 0.0 {
                    self.t.row_mut(i).neg_mut();
                }
            }
            let mut rhs = self.b.clone();
            for j in 0..self.ncol {
                if self.state[j] != State::Basic && self.x[j] != 0.0 {
                    rhs.axpy(-self.x[j], &self.a.column(j), 1.0);
                }
            }
            for (i, &j) in self.basis.iter().enumerate() {
                self.x[j] = signs[i] * rhs[i];
            }
            self.price();
            return Ok(());
        }
        let bmat = self.a.select_columns(&self.basis);
        let lu = bmat.lu();
        let u = lu.u();
        let pivot = (0..self.m)
            .map(|i| u[(i, i)].abs())
            .fold(f64::INFINITY, f64::min);
        let singular = Error::Singular {
            context: "simplex basis",
            pivot,
        };
        if pivot.is_nan() || pivot <= 1e-13 {
            return Err(singular);
        }
        let binv = lu.try_inverse().ok_or(singular)?;
        self.t = &binv * &self.a;
        let mut rhs = self.b.clone();
        for j in 0..self.ncol {
            if self.state[j] != State::Basic && self.x[j] != 0.0 {
                rhs.axpy(-self.x[j], &self.a.column(j), 1.0);
            }
        }
        let xb = &binv * rhs;
        for (i, &j) in self.basis.iter().enumerate() {
            self.x[j] = xb[i];
        }
        self.price();
        Ok(())
    }

    /// Signs of a basis made of `±e_r` columns in row order, the usual
    /// starting basis of slacks and artificials.
    fn diagonal_basis(&self) -> Option<Vec<f64>> {
        let mut signs = Vec::with_capacity(self.m);
        for (r, &j) in self.basis.iter().enumerate() {
            let col = self.a.column(j);
            let s = col[r];
            if s.abs() != 1.0 || col.iter().filter(|&&v| v != 0.0).count() != 1 {
                return None;
            }
            signs.push(s);
        }
        Some(signs)
    }

    fn price(&mut self) {
        let cb = DVector::from_iterator(self.m, self.basis.iter().map(|&j| self.cost[j]));
        for j in 0..self.ncol {
            self.d[j] = if self.state[j] == State::Basic {
                0.0
            } else {
                self.cost[j] - self.t.column(j).dot(&cb)
            };
        }
    }

    /// Entering candidate and its direction (`+1` increase, `-1` decrease).
    fn entering(&self, bland: bool) -> Option<(usize, f64)> {
        let tol = self.opts.optimality_tol;
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.ncol {
            if self.lo[j] == self.up[j] {
                continue;
            }
            let dj = self.d[j];
            let dir = match self.state[j] {
                State::Basic => continue,
                State::Lower if dj < -tol => 1.0,
                State::Upper if dj > tol => -1.0,
                State::Zero if dj.abs() > tol => -dj.signum(),
                _ => continue,
            };
            if bland {
                return Some((j, dir));
            }
            if dj.abs() > best_score {
                best_score = dj.abs();
                best = Some((j, dir));
            }
        }
        best
    }

    /// Step length, leaving row (None for a bound flip), or None if unbounded.
    fn ratio(&self, q: usize, dir: f64, bland: bool) -> Option<(f64, Option<usize>)> {
        let ptol = self.opts.pivot_tol;
        let ftol = self.opts.feasibility_tol;
        let limit = |i: usize, relax: f64| -> Option<f64> {
            let alpha = dir * self.t[(i, q)];
            let j = self.basis[i];
            if alpha > ptol && self.lo[j].is_finite() {
                Some(((self.x[j] - self.lo[j] + relax) / alpha).max(0.0))
            } else if alpha < -ptol && self.up[j].is_finite() {
                Some(((self.up[j] - self.x[j] + relax) / -alpha).max(0.0))
            } else {
                None
            }
        };
        let flip = self.up[q] - self.lo[q];

        let mut row = None;
        let mut step = f64::INFINITY;
        if bland {
            for i in 0..self.m {
                if let Some(r) = limit(i, 0.0) {
                    let better = match row {
                        None => true,
                        Some(k) => {
                            r < step - 1e-12 || (r <= step + 1e-12 && self.basis[i] < self.basis[k])
                        }
                    };
                    if better {
                        step = r;
                        row = Some(i);
                    }
                }
            }
        } else {
            let bound = (0..self.m)
                .filter_map(|i| limit(i, ftol))
                .fold(f64::INFINITY, f64::min);
            let mut best_alpha = 0.0;
            for i in 0..self.m {
                if let Some(r) = limit(i, 0.0) {
                    let alpha = self.t[(i, q)].abs();
                    if r <= bound && alpha > best_alpha {
                        best_alpha = alpha;
                        step = r;
                        row = Some(i);
                    }
                }
            }
        }
        if flip.is_finite() && flip <= step {
            return Some((flip, None));
        }
        row.map(|r| (step, Some(r)))
    }

    fn run(&mut self) -> Result<Phase> {
        let limit = 50 * (self.m + self.ncol) + 1000;
        let mut degenerate = 0usize;
        for _ in 0..limit {
            let bland = degenerate >= self.opts.degenerate_streak;
            let Some((q, dir)) = self.entering(bland) else {
                return Ok(Phase::Optimal);
            };
            let Some((step, row)) = self.ratio(q, dir, bland) else {
                return Ok(Phase::Unbounded);
            };
            if step <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }

            if step != 0.0 {
                self.x[q] += dir * step;
                for i in 0..self.m {
                    let j = self.basis[i];
                    self.x[j] -= dir * step * self.t[(i, q)];
                }
            }
            match row {
                None => {
                    let (state, value) = if dir > 0.0 {
                        (State::Upper, self.up[q])
                    } else {
                        (State::Lower, self.lo[q])
                    };
                    self.state[q] = state;
                    self.x[q] = value;
                }
                Some(r) => {
                    let leaving = self.basis[r];
                    let alpha = dir * self.t[(r, q)];
                    let (state, value) = if alpha > 0.0 {
                        (State::Lower, self.lo[leaving])
                    } else {
                        (State::Upper, self.up[leaving])
                    };
                    self.x[leaving] = value;
                    self.state[leaving] = state;
                    self.pivot(r, q);
                    if self.pivots.is_multiple_of(self.opts.refactor_every) {
                        self.refactor()?;
                    }
                }
            }
        }
        Err(Error::NonConvergence {
            context: "simplex",
            iterations: limit,
        })
    }

    /// Fixed nonbasic columns never enter again and are left stale.
    fn live(&self, j: usize) -> bool {
        self.state[j] == State::Basic || self.lo[j] != self.up[j]
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let m = self.m;
        let live: Vec<bool> = (0..self.ncol)
            .map(|j| j == self.basis[r] || self.live(j))
            .collect();
        let data = self.t.as_mut_slice();
        let col_q: Vec<f64> = data[q * m..(q + 1) * m].to_vec();
        let piv = col_q[r];
        let dq = self.d[q];
        for (j, col) in data.chunks_exact_mut(m).enumerate() {
            let trj = col[r];
            if trj == 0.0 || !live[j] {
                continue;
            }
            let f = trj / piv;
            for (ci, cq) in col.iter_mut().zip(&col_q) {
                *ci -= f * cq;
            }
            col[r] = f;
            self.d[j] -= f * dq;
        }
        self.d[q] = 0.0;
        let leaving = self.basis[r];
        self.basis[r] = q;
        self.state[q] = State::Basic;
        debug_assert!(self.state[leaving] != State::Basic);
        self.pivots += 1;
    }

    /// Fixes artificial columns at zero and pivots basic ones out where a
    /// structural or slack column can take their place.
    fn retire_artificials(&mut self, first: usize) -> Result<()> {
        for j in first..self.ncol {
            self.up[j] = 0.0;
            self.lo[j] = 0.0;
        }
        for r in 0..self.m {
            if self.basis[r] < first {
                continue;
            }
            let mut best = None;
            let mut best_abs = self.opts.pivot_tol.max(1e-7);
            for j in 0..first {
                if self.state[j] != State::Basic && self.live(j) && self.t[(r, j)].abs() > best_abs
                {
                    best_abs = self.t[(r, j)].abs();
                    best = Some(j);
                }
            }
            if let Some(q) = best {
                let leaving = self.basis[r];
                self.x[leaving] = 0.0;
                self.state[leaving] = State::Lower;
                self.pivot(r, q);
            }
        }
        self.refactor()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bounds(lp: &LinearProgram) -> (Vec<f64>, Vec<f64>) {
        (
            lp.variables.iter().map(|v| v.lower).collect(),
            lp.variables.iter().map(|v| v.upper).collect(),
        )
    }

    fn solve(lp: &LinearProgram) -> LpOutcome {
        let (l, u) = bounds(lp);
        solve_lp(lp, &l, &u, &SimplexOptions::default()).unwrap()
    }

    #[test]
    fn textbook_maximum() {
        let mut lp = LinearProgram::new("toy", Sense::Maximize);
        let x = lp.add_variable("x", 0.0, f64::INFINITY, 1.0, false);
        let y = lp.add_variable("y", 0.0, f64::INFINITY, 1.0, false);
        lp.add_constraint("c1", [(x, 1.0), (y, 2.0)], RowKind::Le, 4.0);
        lp.add_constraint("c2", [(x, 1.0)], RowKind::Le, 3.0);
        match solve(&lp) {
            LpOutcome::Optimal { x, objective } => {
                assert!((x[0] - 3.0).abs() < 1e-12);
                assert!((x[1] - 0.5).abs() < 1e-12);
                assert!((objective - 3.5).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn phase_one_with_ge_and_eq_rows() {
        // min x + y s.t. x + y >= 2, x - y = 1
        let mut lp = LinearProgram::new("p1", Sense::Minimize);
        let x = lp.add_variable("x", 0.0, 10.0, 1.0, false);
        let y = lp.add_variable("y", 0.0, 10.0, 1.0, false);
        lp.add_constraint("c1", [(x, 1.0), (y, 1.0)], RowKind::Ge, 2.0);
        lp.add_constraint("c2", [(x, 1.0), (y, -1.0)], RowKind::Eq, 1.0);
        match solve(&lp) {
            LpOutcome::Optimal { x, objective } => {
                assert!((x[0] - 1.5).abs() < 1e-12);
                assert!((x[1] - 0.5).abs() < 1e-12);
                assert!((objective - 2.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bound_flip_only() {
        let mut lp = LinearProgram::new("flip", Sense::Maximize);
        lp.add_variable("x", -1.0, 2.0, 3.0, false);
        lp.add_variable("y", 0.0, 1.0, -1.0, false);
        match solve(&lp) {
            LpOutcome::Optimal { x, objective } => {
                assert_eq!(x, vec![2.0, 0.0]);
                assert_eq!(objective, 6.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new("inf", Sense::Minimize);
        let x = lp.add_variable("x", 0.0, 1.0, 1.0, false);
        lp.add_constraint("c", [(x, 1.0)], RowKind::Ge, 2.0);
        assert_eq!(solve(&lp), LpOutcome::Infeasible);

        let mut lp = LinearProgram::new("unb", Sense::Maximize);
        let x = lp.add_variable("x", 0.0, f64::INFINITY, 1.0, false);
        let y = lp.add_variable("y", 0.0, f64::INFINITY, 0.0, false);
        lp.add_constraint("c", [(x, 1.0), (y, -1.0)], RowKind::Le, 1.0);
        assert_eq!(solve(&lp), LpOutcome::Unbounded);
    }

    #[test]
    fn free_variable() {
        // min x s.t. x >= -3, x free
        let mut lp = LinearProgram::new("free", Sense::Minimize);
        let x = lp.add_variable("x", f64::NEG_INFINITY, f64::INFINITY, 1.0, false);
        lp.add_constraint("c", [(x, 1.0)], RowKind::Ge, -3.0);
        match solve(&lp) {
            LpOutcome::Optimal { x, .. } => assert!((x[0] + 3.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new("red", Sense::Maximize);
        let x = lp.add_variable("x", 0.0, 5.0, 1.0, false);
        let y = lp.add_variable("y", 0.0, 5.0, 2.0, false);
        lp.add_constraint("c1", [(x, 1.0), (y, 1.0)], RowKind::Eq, 3.0);
        lp.add_constraint("c2", [(x, 2.0), (y, 2.0)], RowKind::Eq, 6.0);
        match solve(&lp) {
            LpOutcome::Optimal { x, objective } => {
                assert!((x[1] - 3.0).abs() < 1e-12);
                assert!((objective - 6.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn degenerate_vertex() {
        // Beale-style cycling example
        let mut lp = LinearProgram::new("beale", Sense::Minimize);
        let v: Vec<usize> = (0..4)
            .map(|i| lp.add_variable(format!("x{i}"), 0.0, f64::INFINITY, 0.0, false))
            .collect();
        for (j, c) in [-0.75, 150.0, -0.02, 6.0].into_iter().enumerate() {
            lp.variables[v[j]].objective = c;
        }
        lp.add_constraint(
            "r1",
            [(0, 0.25), (1, -60.0), (2, -0.04), (3, 9.0)],
            RowKind::Le,
            0.0,
        );
        lp.add_constraint(
            "r2",
            [(0, 0.5), (1, -90.0), (2, -0.02), (3, 3.0)],
            RowKind::Le,
            0.0,
        );
        lp.add_constraint("r3", [(2, 1.0)], RowKind::Le, 1.0);
        match solve(&lp) {
            LpOutcome::Optimal { objective, .. } => assert!((objective + 0.05).abs() < 1e-10),
            other => panic!("{other:?}"),
        }
    }
}
