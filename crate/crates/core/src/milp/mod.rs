//! Maximal and minimal clearing pairs as optima of mixed integer-linear
//! programs over `(a, p, V)` with `a ∈ {0,1}ⁿ`.
//!
//! With `f(a, p, V) = Σ f1·a + f2·p + f3·V` for strictly positive weights,
//! the maximal pair solves
//!
//! ```text
//! P1: max f   s.t.  p ≤ y + a∘l,  a∘l ≤ x,  V ≤ x - a∘l,  V ≤ κa,
//!                   p ∈ [0, l],  V ∈ [0, κ]
//! ```
//!
//! and the minimal pair of the `Φ_0` regime (when no `y^j` sits exactly at
//! `l^j`) solves
//!
//! ```text
//! P2: min f   s.t.  p ≥ y - κ₁a,  p ≥ a∘l,  (1-a)∘l + κ₁a ≥ y,
//!                   V ≥ x - l - κ(1-a),  p ∈ [0, l],  V ∈ [0, κ]
//! ```
//!
//! Variables are laid out as `a` (columns `0..n`), `p` (`n..2n`), `V`
//! (`2n..3n`).

pub mod branch;
pub mod lp;
pub mod mps;
pub mod simplex;

use nalgebra::DVector;

use crate::equity::compute_bounds;
use crate::error::{Error, Result};
use crate::fixpoint::{min_fixpoint, RegimeVector};
use crate::linalg::{sup_distance, sup_norm};
use crate::model::{recovery_assets, verify_clearing_pair, ClearingPair, FinancialNetwork};

pub use branch::{branch_and_bound, BranchOptions, MipResult, MipStatus};
pub use lp::{Constraint, LinearProgram, RowKind, Sense, Variable};
pub use simplex::{solve_lp, LpOutcome, SimplexOptions};

/// Tolerance for the structural checks on solver output.
pub const LEMMA_TOL: f64 = 1e-6;

/// Ties `|y^j - l^j|` below this make the minimal-pair comparison inexact.
pub const EQUALITY_TOL: f64 = 1e-7;

/// Strictly positive objective weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveWeights {
    pub f1: DVector<f64>,
    pub f2: DVector<f64>,
    pub f3: DVector<f64>,
}

impl ObjectiveWeights {
    pub fn new(f1: DVector<f64>, f2: DVector<f64>, f3: DVector<f64>) -> Result<Self> {
        let n = f1.len();
        for (what, v) in [("weights f2", &f2), ("weights f3", &f3)] {
            if v.len() != n {
                return Err(Error::Dimension {
                    what,
                    expected: n,
                    got: v.len(),
                });
            }
        }
        for (name, v) in [("f1", &f1), ("f2", &f2), ("f3", &f3)] {
            if let Some(&value) = v.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
                return Err(Error::ParameterRange { name, value });
            }
        }
        Ok(Self { f1, f2, f3 })
    }

    pub fn ones(n: usize) -> Self {
        Self::uniform(n, 1.0, 1.0, 1.0)
    }

    /// The same three weights for every bank.
    pub fn uniform(n: usize, f1: f64, f2: f64, f3: f64) -> Self {
        Self {
            f1: DVector::from_element(n, f1),
            f2: DVector::from_element(n, f2),
            f3: DVector::from_element(n, f3),
        }
    }

    fn check(&self, n: usize) -> Result<()> {
        if self.f1.len() != n {
            return Err(Error::Dimension {
                what: "objective weights",
                expected: n,
                got: self.f1.len(),
            });
        }
        Self::new(self.f1.clone(), self.f2.clone(), self.f3.clone()).map(|_| ())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    /// P1, the maximal clearing pair.
    Maximal,
    /// P2, the minimal solution of the `Φ_0` system.
    Minimal,
}

#[derive(Debug, Clone)]
pub struct MilpInstance {
    pub kind: ProblemKind,
    pub program: LinearProgram,
    pub weights: ObjectiveWeights,
    pub kappa: f64,
    pub kappa1: f64,
    net: FinancialNetwork,
}

impl MilpInstance {
    pub fn n(&self) -> usize {
        self.net.n()
    }

    pub fn network(&self) -> &FinancialNetwork {
        &self.net
    }
}

/// `Σ_j π^{ji} p^j + Σ_j θ^{ji} V^j` as sparse coefficients on `(p, V)`,
/// scaled by `(debt, equity)`.
fn inflow(net: &FinancialNetwork, i: usize, debt: f64, equity: f64) -> Vec<(usize, f64)> {
    let n = net.n();
    let s = net.system();
    let mut row = Vec::with_capacity(2 * n);
    for j in 0..n {
        row.push((n + j, debt * s.pi[(j, i)]));
        row.push((2 * n + j, equity * s.theta[(j, i)]));
    }
    row
}

fn add_columns(lp: &mut LinearProgram, net: &FinancialNetwork, w: &ObjectiveWeights, kappa: f64) {
    let n = net.n();
    for i in 0..n {
        lp.add_variable(format!("a{}", i + 1), 0.0, 1.0, w.f1[i], true);
    }
    for i in 0..n {
        lp.add_variable(format!("p{}", i + 1), 0.0, net.totals()[i], w.f2[i], false);
    }
    for i in 0..n {
        lp.add_variable(format!("v{}", i + 1), 0.0, kappa, w.f3[i], false);
    }
}

/// Problem P1.
pub fn build_p1(net: &FinancialNetwork, weights: &ObjectiveWeights) -> Result<MilpInstance> {
    let n = net.n();
    weights.check(n)?;
    let bounds = compute_bounds(net.system())?;
    let ch = net.charges();
    let e = net.cash();
    let l = net.totals();
    let mut lp = LinearProgram::new("P1", Sense::Maximize);
    add_columns(&mut lp, net, weights, bounds.kappa);

    for i in 0..n {
        // p_i - βΣπ_ji p_j - γΣθ_ji V_j - l_i a_i ≤ α e_i
        let mut row = inflow(net, i, -ch.beta, -ch.gamma);
        row.push((n + i, 1.0));
        row.push((i, -l[i]));
        lp.add_constraint(format!("pay{}", i + 1), row, RowKind::Le, ch.alpha * e[i]);
    }
    for i in 0..n {
        // l_i a_i - Σπ_ji p_j - Σθ_ji V_j ≤ e_i
        let mut row = inflow(net, i, -1.0, -1.0);
        row.push((i, l[i]));
        lp.add_constraint(format!("liq{}", i + 1), row, RowKind::Le, e[i]);
    }
    for i in 0..n {
        // V_i - Σπ_ji p_j - Σθ_ji V_j + l_i a_i ≤ e_i
        let mut row = inflow(net, i, -1.0, -1.0);
        row.push((2 * n + i, 1.0));
        row.push((i, l[i]));
        lp.add_constraint(format!("eqt{}", i + 1), row, RowKind::Le, e[i]);
    }
    for i in 0..n {
        lp.add_constraint(
            format!("cap{}", i + 1),
            [(2 * n + i, 1.0), (i, -bounds.kappa)],
            RowKind::Le,
            0.0,
        );
    }
    Ok(MilpInstance {
        kind: ProblemKind::Maximal,
        program: lp,
        weights: weights.clone(),
        kappa: bounds.kappa,
        kappa1: bounds.kappa1,
        net: net.clone(),
    })
}

/// Problem P2.
pub fn build_p2(net: &FinancialNetwork, weights: &ObjectiveWeights) -> Result<MilpInstance> {
    let n = net.n();
    weights.check(n)?;
    let bounds = compute_bounds(net.system())?;
    let (kappa, kappa1) = (bounds.kappa, bounds.kappa1);
    let ch = net.charges();
    let e = net.cash();
    let l = net.totals();
    let mut lp = LinearProgram::new("P2", Sense::Minimize);
    add_columns(&mut lp, net, weights, kappa);

    for i in 0..n {
        // βΣπ_ji p_j - p_i + γΣθ_ji V_j - κ₁ a_i ≤ -α e_i
        let mut row = inflow(net, i, ch.beta, ch.gamma);
        row.push((n + i, -1.0));
        row.push((i, -kappa1));
        lp.add_constraint(format!("rec{}", i + 1), row, RowKind::Le, -ch.alpha * e[i]);
    }
    for i in 0..n {
        lp.add_constraint(
            format!("ful{}", i + 1),
            [(i, l[i]), (n + i, -1.0)],
            RowKind::Le,
            0.0,
        );
    }
    for i in 0..n {
        // βΣπ_ji p_j + γΣθ_ji V_j + (l_i - κ₁) a_i ≤ l_i - α e_i
        let mut row = inflow(net, i, ch.beta, ch.gamma);
        row.push((i, l[i] - kappa1));
        lp.add_constraint(
            format!("cov{}", i + 1),
            row,
            RowKind::Le,
            l[i] - ch.alpha * e[i],
        );
    }
    for i in 0..n {
        // Σπ_ji p_j + Σθ_ji V_j - V_i + κ a_i ≤ l_i + κ - e_i
        let mut row = inflow(net, i, 1.0, 1.0);
        row.push((2 * n + i, -1.0));
        row.push((i, kappa));
        lp.add_constraint(
            format!("eqt{}", i + 1),
            row,
            RowKind::Le,
            l[i] + kappa - e[i],
        );
    }
    Ok(MilpInstance {
        kind: ProblemKind::Minimal,
        program: lp,
        weights: weights.clone(),
        kappa,
        kappa1,
        net: net.clone(),
    })
}

/// Structural identities every optimum must satisfy.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaChecks {
    /// P1: `a = 1{p = l}`. P2: `a = 1{y > l}` off near-ties.
    pub indicator: bool,
    /// P1: `p = y` where `a = 0`. P2: `p = (1 - a)∘y + a∘l` and `p = y ∧ l`.
    pub payment: bool,
    /// P1: `V = x - l` where `a = 1`, else `0`. P2: `V = a∘(x - l)^+`.
    pub equity: bool,
    /// Banks with `|y^j - l^j| ≤ EQUALITY_TOL`, skipped by the P2 indicator test.
    pub near_ties: Vec<usize>,
}

impl LemmaChecks {
    pub fn all(&self) -> bool {
        self.indicator && self.payment && self.equity
    }

    fn describe(&self) -> String {
        let mut failed = Vec::new();
        if !self.indicator {
            failed.push("indicator identity");
        }
        if !self.payment {
            failed.push("payment identity");
        }
        if !self.equity {
            failed.push("equity identity");
        }
        failed.join(", ")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpSolution {
    pub status: MipStatus,
    pub a: DVector<f64>,
    pub p: DVector<f64>,
    pub v: DVector<f64>,
    pub objective: f64,
    pub nodes: usize,
    /// Present when an integer-feasible point was found.
    pub lemma_checks: Option<LemmaChecks>,
}

pub fn solve_milp(instance: &MilpInstance) -> Result<MilpSolution> {
    solve_milp_with(instance, &BranchOptions::default())
}

pub fn solve_milp_with(instance: &MilpInstance, opts: &BranchOptions) -> Result<MilpSolution> {
    let n = instance.n();
    let res = branch_and_bound(&instance.program, opts)?;
    let Some(x) = res.x else {
        return Ok(MilpSolution {
            status: res.status,
            a: DVector::zeros(n),
            p: DVector::zeros(n),
            v: DVector::zeros(n),
            objective: res.objective,
            nodes: res.nodes,
            lemma_checks: None,
        });
    };
    let a = DVector::from_iterator(n, x[..n].iter().map(|v| v.round()));
    let p = DVector::from_column_slice(&x[n..2 * n]);
    let v = DVector::from_column_slice(&x[2 * n..]);
    let checks = lemma_checks(instance, &a, &p, &v);
    Ok(MilpSolution {
        status: res.status,
        a,
        p,
        v,
        objective: res.objective,
        nodes: res.nodes,
        lemma_checks: Some(checks),
    })
}

fn lemma_checks(
    instance: &MilpInstance,
    a: &DVector<f64>,
    p: &DVector<f64>,
    v: &DVector<f64>,
) -> LemmaChecks {
    let net = &instance.net;
    let l = net.totals();
    let x = net.system().assets(p, v);
    let y = recovery_assets(net, p, v);
    let scale = 1.0 + sup_norm(l) + instance.kappa;
    let tol = LEMMA_TOL * scale;
    let near = |u: f64, w: f64| (u - w).abs() <= tol;
    let n = net.n();
    let near_ties: Vec<usize> = (0..n)
        .filter(|&j| (y[j] - l[j]).abs() <= EQUALITY_TOL * scale)
        .collect();

    match instance.kind {
        ProblemKind::Maximal => {
            let indicator = (0..n).all(|i| (a[i] == 1.0) == near(p[i], l[i]));
            let payment = (0..n).all(|i| a[i] == 1.0 || near(p[i], y[i]));
            let equity = (0..n).all(|i| {
                if a[i] == 1.0 {
                    near(v[i], x[i] - l[i])
                } else {
                    near(v[i], 0.0)
                }
            });
            LemmaChecks {
                indicator,
                payment,
                equity,
                near_ties,
            }
        }
        ProblemKind::Minimal => {
            let indicator = (0..n)
                .filter(|j| !near_ties.contains(j))
                .all(|i| (a[i] == 1.0) == (y[i] > l[i]));
            let payment = (0..n).all(|i| {
                let split = if a[i] == 1.0 { l[i] } else { y[i] };
                near(p[i], split) && near(p[i], y[i].min(l[i]))
            });
            let equity = (0..n).all(|i| near(v[i], a[i] * (x[i] - l[i]).max(0.0)));
            LemmaChecks {
                indicator,
                payment,
                equity,
                near_ties,
            }
        }
    }
}

fn require_optimal(sol: &MilpSolution, what: &str) -> Result<LemmaChecks> {
    if sol.status != MipStatus::Optimal {
        return Err(Error::Internal(format!(
            "{what} ended with status {:?} after {} nodes",
            sol.status, sol.nodes
        )));
    }
    let checks = sol
        .lemma_checks
        .clone()
        .expect("optimal solutions carry checks");
    if !checks.all() {
        return Err(Error::Internal(format!(
            "{what} optimum violates the {} (a = {:?})",
            checks.describe(),
            sol.a.as_slice()
        )));
    }
    Ok(checks)
}

fn label(kind: ProblemKind) -> &'static str {
    match kind {
        ProblemKind::Maximal => "problem P1",
        ProblemKind::Minimal => "problem P2",
    }
}

fn expect_kind(inst: &MilpInstance, kind: ProblemKind) -> Result<()> {
    if inst.kind != kind {
        return Err(Error::Precondition(format!(
            "expected an instance of {}, got {}",
            label(kind),
            label(inst.kind)
        )));
    }
    Ok(())
}

/// [`solve_milp`] followed by the status and structural checks; anything
/// short of a verified optimum is an [`Error::Internal`].
pub fn solve_milp_checked(instance: &MilpInstance) -> Result<MilpSolution> {
    let sol = solve_milp(instance)?;
    require_optimal(&sol, label(instance.kind))?;
    Ok(sol)
}

/// The maximal clearing pair from problem P1.
pub fn maximal_pair_via_milp(
    net: &FinancialNetwork,
    weights: &ObjectiveWeights,
) -> Result<ClearingPair> {
    let inst = build_p1(net, weights)?;
    let sol = solve_milp_checked(&inst)?;
    maximal_pair_from(&inst, &sol)
}

/// Reads the clearing pair off a checked P1 optimum and verifies it.
pub fn maximal_pair_from(inst: &MilpInstance, sol: &MilpSolution) -> Result<ClearingPair> {
    expect_kind(inst, ProblemKind::Maximal)?;
    let net = &inst.net;
    let pair = ClearingPair {
        p: sol.p.clone(),
        v: sol.v.clone(),
        defaulted: sol.a.iter().map(|&ai| ai == 0.0).collect(),
    };
    let scale = 1.0 + sup_norm(net.totals()) + inst.kappa;
    let report = verify_clearing_pair(net, &pair, LEMMA_TOL * scale);
    if !report.overall {
        return Err(Error::Internal(format!(
            "problem P1 optimum is not a clearing pair: {}",
            report.failures().join("; ")
        )));
    }
    Ok(pair)
}

/// Minimal solution of the `Φ_0` system from problem P2.
#[derive(Debug, Clone, PartialEq)]
pub struct MinimalMilpPair {
    pub pair: ClearingPair,
    pub a: DVector<f64>,
    /// No bank has `y^j` within `EQUALITY_TOL` of `l^j`; the pair is then the
    /// minimal fixed point of `F_0`.
    pub equality_flag: bool,
}

pub fn minimal_pair_via_milp(
    net: &FinancialNetwork,
    weights: &ObjectiveWeights,
) -> Result<MinimalMilpPair> {
    let inst = build_p2(net, weights)?;
    let sol = solve_milp_checked(&inst)?;
    minimal_pair_from(&inst, &sol)
}

/// Reads the pair off a checked P2 optimum. Without near-ties it is compared
/// against the minimal fixed point of `F_0`.
pub fn minimal_pair_from(inst: &MilpInstance, sol: &MilpSolution) -> Result<MinimalMilpPair> {
    expect_kind(inst, ProblemKind::Minimal)?;
    let net = &inst.net;
    let checks = require_optimal(sol, "problem P2")?;
    let equality_flag = checks.near_ties.is_empty();
    let pair = ClearingPair::new(net, sol.p.clone(), sol.v.clone())?;
    if equality_flag {
        let reference = min_fixpoint(net, &RegimeVector::zeros(net.n()))?;
        let gap = sup_distance(&pair.p, &reference.p);
        if gap > LEMMA_TOL * (1.0 + sup_norm(net.totals())) {
            return Err(Error::Internal(format!(
                "problem P2 optimum differs from the minimal fixed point by {gap:e}"
            )));
        }
    }
    Ok(MinimalMilpPair {
        pair,
        a: sol.a.clone(),
        equality_flag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixpoint::max_fixpoint;
    use crate::model::Charges;
    use approx::assert_relative_eq;

    fn charged_pair() -> FinancialNetwork {
        FinancialNetwork::from_rows(
            &[0.5, 0.0],
            &[vec![0.0, 2.0], vec![3.0, 0.0]],
            &[vec![0.0; 2], vec![0.0; 2]],
            Charges::new(0.5, 0.5, 1.0),
        )
        .unwrap()
    }

    fn rich() -> FinancialNetwork {
        FinancialNetwork::from_rows(
            &[5.0, 6.0, 4.0],
            &[
                vec![0.0, 1.0, 2.0],
                vec![1.0, 0.0, 1.0],
                vec![2.0, 0.5, 0.0],
            ],
            &[
                vec![0.0, 0.2, 0.1],
                vec![0.3, 0.0, 0.0],
                vec![0.1, 0.1, 0.0],
            ],
            Charges::new(0.5, 0.7, 0.9),
        )
        .unwrap()
    }

    #[test]
    fn p1_shape() {
        let net = FinancialNetwork::from_rows(&[1.0], &[vec![0.0]], &[vec![0.0]], Charges::none())
            .unwrap();
        let inst = build_p1(&net, &ObjectiveWeights::ones(1)).unwrap();
        assert_eq!(inst.program.num_variables(), 3);
        assert_eq!(inst.program.num_constraints(), 4);
        assert_eq!(inst.program.sense, Sense::Maximize);
        let inst = build_p2(&net, &ObjectiveWeights::ones(1)).unwrap();
        assert_eq!(inst.program.num_constraints(), 4);
        assert_eq!(inst.program.sense, Sense::Minimize);
    }

    #[test]
    fn clearing_pairs_are_admissible() {
        let net = rich();
        let inst = build_p1(&net, &ObjectiveWeights::ones(3)).unwrap();
        let max = max_fixpoint(&net, &RegimeVector::ones(3)).unwrap();
        let mut point: Vec<f64> = max
            .p
            .iter()
            .zip(net.totals().iter())
            .map(|(p, l)| if (p - l).abs() <= 1e-12 { 1.0 } else { 0.0 })
            .collect();
        point.extend(max.p.iter());
        point.extend(max.v.iter());
        assert!(inst.program.max_violation(&point) < 1e-12);
    }

    #[test]
    fn p1_examples() {
        let net = rich();
        let sol = solve_milp(&build_p1(&net, &ObjectiveWeights::ones(3)).unwrap()).unwrap();
        assert_eq!(sol.status, MipStatus::Optimal);
        assert_eq!(sol.a.as_slice(), &[1.0; 3]);
        assert!(sup_distance(&sol.p, net.totals()) < 1e-9);
        let h = crate::equity::solve_gplus(net.system(), net.totals(), 1e-9).unwrap();
        assert!(sup_distance(&sol.v, &h) < 1e-7);

        let pair = maximal_pair_via_milp(&charged_pair(), &ObjectiveWeights::ones(2)).unwrap();
        assert_relative_eq!(pair.p[0], 1.0 / 3.0, epsilon = 1e-9);
        assert_relative_eq!(pair.p[1], 1.0 / 6.0, epsilon = 1e-9);
        assert!(pair.v.amax() < 1e-9);
        assert_eq!(pair.defaulted, vec![true, true]);
    }

    #[test]
    fn p2_examples() {
        let res = minimal_pair_via_milp(&charged_pair(), &ObjectiveWeights::ones(2)).unwrap();
        assert!(res.equality_flag);
        assert_relative_eq!(res.pair.p[0], 1.0 / 3.0, epsilon = 1e-9);
        assert_relative_eq!(res.pair.p[1], 1.0 / 6.0, epsilon = 1e-9);

        let net = rich();
        let res = minimal_pair_via_milp(&net, &ObjectiveWeights::ones(3)).unwrap();
        assert!(sup_distance(&res.pair.p, net.totals()) < 1e-9);
        assert_eq!(res.a.as_slice(), &[1.0; 3]);
    }

    #[test]
    fn p2_tie_clears_flag() {
        // y = αe = l exactly for the single bank
        let net = FinancialNetwork::from_rows(
            &[2.0, 0.0],
            &[vec![0.0, 1.0], vec![0.0, 0.0]],
            &[vec![0.0; 2], vec![0.0; 2]],
            Charges::new(0.5, 0.5, 0.5),
        )
        .unwrap();
        let res = minimal_pair_via_milp(&net, &ObjectiveWeights::ones(2)).unwrap();
        assert!(!res.equality_flag);
        let min = min_fixpoint(&net, &RegimeVector::zeros(2)).unwrap();
        assert!(res.pair.p[0] <= min.p[0] + 1e-9);
    }

    #[test]
    fn weights_validated() {
        let err = ObjectiveWeights::new(
            DVector::from_element(2, 1.0),
            DVector::from_element(2, 0.0),
            DVector::from_element(2, 1.0),
        )
        .unwrap_err();
        assert!(matches!(err, Error::ParameterRange { name: "f2", .. }));
        let net = charged_pair();
        assert!(build_p1(&net, &ObjectiveWeights::ones(3)).is_err());
    }
}
