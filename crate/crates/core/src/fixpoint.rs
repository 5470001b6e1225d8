//! Extremal fixed points of the regime maps `F_b` and the clearing set.
//!
//! For a regime vector `b ∈ {0,1}ⁿ` the map `Φ_b` uses, per bank,
//!
//! ```text
//! b^i = 0:  y^i ∧ l^i
//! b^i = 1:  y^i if x^i < l^i, else l^i
//! ```
//!
//! and `F_b(p) = Φ_b(p, H(p))`. Every clearing vector is a fixed point of
//! some `F_b` and every such fixed point is a clearing vector, so the
//! clearing set is the union of the fixed-point sets over all `2ⁿ` regimes.
//! The least element is the minimal fixed point of `F_0`, the greatest is
//! the maximal fixed point of `F_1`.
//!
//! Both extremal fixed points are computed by freezing the set of banks
//! that pay in full and solving the resulting linear system exactly, which
//! terminates after finitely many solves even though `F_b` is discontinuous.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::equity::solve_gplus;
use crate::error::{Error, Result};
use crate::linalg::{lu_solve, sup_distance};
use crate::model::{recovery_assets, verify_clearing_pair, ClearingPair, FinancialNetwork};
use crate::obstacle::ClippedSystem;

/// Binary regime vector selecting the `Φ⁰` or `Φ¹` branch per bank.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RegimeVector(Vec<bool>);

impl RegimeVector {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![false; n])
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![true; n])
    }

    /// The `index`-th vector in lexicographic order; bank 0 is the most
    /// significant position.
    pub fn from_index(n: usize, index: u64) -> Self {
        Self((0..n).map(|i| (index >> (n - 1 - i)) & 1 == 1).collect())
    }

    pub fn index(&self) -> u64 {
        self.0.iter().fold(0, |acc, &b| (acc << 1) | b as u64)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    /// Componentwise `self ≤ other`.
    pub fn le(&self, other: &Self) -> bool {
        self.0.iter().zip(&other.0).all(|(&a, &b)| !a || b)
    }
}

impl fmt::Display for RegimeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

fn check_regime(net: &FinancialNetwork, b: &RegimeVector) -> Result<()> {
    if b.len() != net.n() {
        return Err(Error::Dimension {
            what: "regime vector",
            expected: net.n(),
            got: b.len(),
        });
    }
    Ok(())
}

/// `Φ_b(p, V)`.
pub fn phi_b(
    net: &FinancialNetwork,
    b: &RegimeVector,
    p: &DVector<f64>,
    v: &DVector<f64>,
) -> Result<DVector<f64>> {
    check_regime(net, b)?;
    let x = crate::model::assets_x(net, p, v)?;
    let y = recovery_assets(net, p, v);
    let l = net.totals();
    let tol = net.tol();
    Ok(DVector::from_fn(net.n(), |i, _| {
        if b.0[i] {
            if x[i] < l[i] - tol {
                y[i]
            } else {
                l[i]
            }
        } else {
            y[i].min(l[i])
        }
    }))
}

/// `F_b(p) = Φ_b(p, H(p))`.
pub fn eval_f(net: &FinancialNetwork, b: &RegimeVector, p: &DVector<f64>) -> Result<DVector<f64>> {
    net.check_dim("payment vector", p)?;
    let v = solve_gplus(net.system(), p, net.tol())?;
    phi_b(net, b, p, &v)
}

/// `‖p - F_b(p)‖∞`.
pub fn fixpoint_residual(
    net: &FinancialNetwork,
    b: &RegimeVector,
    p: &DVector<f64>,
) -> Result<f64> {
    let f = eval_f(net, b, p)?;
    Ok(sup_distance(p, &f))
}

/// Linear rows of a frozen regime over the stacked unknown `z = (p, V)`.
///
/// `recovery[i]`: `p^i = y^i(p, V)`, otherwise `p^i = l^i`.
/// `equity[i]`: `V^i = x^i(p, V) - l^i`, otherwise `V^i = 0`.
fn frozen_rows(
    net: &FinancialNetwork,
    recovery: &[bool],
    equity: &[bool],
) -> (DMatrix<f64>, DVector<f64>) {
    let n = net.n();
    let s = net.system();
    let ch = net.charges();
    let mut a = DMatrix::zeros(2 * n, 2 * n);
    let mut c = DVector::zeros(2 * n);
    for i in 0..n {
        if recovery[i] {
            for j in 0..n {
                a[(i, j)] = ch.beta * s.pi[(j, i)];
                a[(i, n + j)] = ch.gamma * s.theta[(j, i)];
            }
            c[i] = ch.alpha * s.cash[i];
        } else {
            c[i] = s.totals[i];
        }
        if equity[i] {
            for j in 0..n {
                a[(n + i, j)] = s.pi[(j, i)];
                a[(n + i, n + j)] = s.theta[(j, i)];
            }
            c[n + i] = s.cash[i] - s.totals[i];
        }
    }
    (a, c)
}

fn split(z: &DVector<f64>, n: usize) -> (DVector<f64>, DVector<f64>) {
    (z.rows(0, n).into_owned(), z.rows(n, n).into_owned())
}

/// Maximal fixed point of `F_b` with its equity vector.
///
/// Starts from full payment and repeatedly adds to the default set every
/// bank whose branch condition fails (`x^i < l^i` for `b^i = 1`,
/// `y^i < l^i` for `b^i = 0`). Given a default set `D` the system
/// `p_D = y_D`, `p_{D^c} = l`, `V_D = 0`, `V_{D^c} = (x - l)^+` is solved
/// exactly. Payments only decrease, so at most `n + 1` rounds are needed.
pub fn max_fixpoint(net: &FinancialNetwork, b: &RegimeVector) -> Result<ClearingPair> {
    check_regime(net, b)?;
    let n = net.n();
    let tol = net.tol();
    let l = net.totals();
    let bounds = crate::equity::compute_bounds(net.system())?;

    let mut defaulted = vec![false; n];
    let mut z = DVector::zeros(2 * n);
    z.rows_mut(0, n).copy_from(l);
    z.rows_mut(n, n).copy_from(&bounds.k);

    for _ in 0..=n {
        let solvent: Vec<bool> = defaulted.iter().map(|d| !d).collect();
        let (a, c) = frozen_rows(net, &defaulted, &solvent);
        let mut clipped = vec![false; 2 * n];
        clipped[n..].copy_from_slice(&solvent);
        let sys = ClippedSystem {
            a: &a,
            c: &c,
            clipped: &clipped,
        };
        z = sys.polish(z, "frozen default set")?;

        let (p, v) = split(&z, n);
        let x = net.system().assets(&p, &v);
        let y = recovery_assets(net, &p, &v);
        let mut grew = false;
        for i in 0..n {
            if defaulted[i] {
                continue;
            }
            let available = if b.0[i] { x[i] } else { y[i] };
            if available < l[i] - tol {
                defaulted[i] = true;
                grew = true;
            }
        }
        if !grew {
            return ClearingPair::new(net, p, v);
        }
    }
    Err(Error::Internal(format!(
        "default set for regime {b} still growing after {} rounds",
        n + 1
    )))
}

/// Largest set of recovering banks that owe nothing outside the set. With
/// `β = 1` these rows of the frozen system are singular.
fn closed_recovering(net: &FinancialNetwork, recovering: &[bool]) -> Vec<bool> {
    let n = net.n();
    if net.charges().beta < 1.0 {
        return vec![false; n];
    }
    let pi = &net.system().pi;
    let mut closed = recovering.to_vec();
    loop {
        let mut changed = false;
        for i in 0..n {
            if closed[i] && (0..n).any(|j| !closed[j] && pi[(i, j)] > 0.0) {
                closed[i] = false;
                changed = true;
            }
        }
        if !changed {
            return closed;
        }
    }
}

/// Advances the payments of a closed recovering set by plain iteration
/// `p ← Π'p + u` up to the last iterate before some bank meets its
/// promotion threshold. Iterates are found by repeated squaring of the
/// affine step. Returns `None` when the set receives no input.
fn advance_closed_set(
    net: &FinancialNetwork,
    b: &RegimeVector,
    closed: &[bool],
    p: &DVector<f64>,
    v: &DVector<f64>,
) -> Option<DVector<f64>> {
    let s = net.system();
    let ch = net.charges();
    let l = net.totals();
    let tol = net.tol();
    let idx: Vec<usize> = (0..net.n()).filter(|&i| closed[i]).collect();
    let k = idx.len();
    let theta_v = s.theta.tr_mul(v);
    let x = s.assets(p, v);
    let y = recovery_assets(net, p, v);

    let m = DMatrix::from_fn(k, k, |a, c| s.pi[(idx[c], idx[a])]);
    let u = DVector::from_fn(k, |a, _| {
        let i = idx[a];
        let outside: f64 = (0..net.n())
            .filter(|&j| !closed[j])
            .map(|j| s.pi[(j, i)] * p[j])
            .sum();
        ch.alpha * s.cash[i] + ch.beta * outside + ch.gamma * theta_v[i]
    });
    if u.iter().all(|&ui| ui <= 0.0) {
        return None;
    }
    // x - y does not depend on the closed payments when β = 1
    let threshold = DVector::from_fn(k, |a, _| {
        let i = idx[a];
        let slack = if b.0[i] { x[i] - y[i] } else { 0.0 };
        l[i] - tol - slack
    });
    let crosses = |z: &DVector<f64>| z.iter().zip(threshold.iter()).any(|(zi, ti)| zi >= ti);

    let start = DVector::from_fn(k, |a, _| p[idx[a]]);
    let mut maps = vec![(m, u)];
    loop {
        let (mk, sk) = maps.last().unwrap();
        if crosses(&(mk * &start + sk)) {
            break;
        }
        if maps.len() >= 64 {
            return None;
        }
        let next = (mk * mk, mk * sk + sk);
        maps.push(next);
    }
    let mut cur = start;
    for (mk, sk) in maps.iter().rev() {
        let cand = mk * &cur + sk;
        if !crosses(&cand) {
            cur = cand;
        }
    }
    let mut out = p.clone();
    for (a, &i) in idx.iter().enumerate() {
        out[i] = cur[a];
    }
    Some(out)
}

/// Minimal fixed point of `F_b` with its equity vector.
///
/// Ascends from `p = 0`. The state is a set of full payers `S`, a set of
/// banks with positive equity `P ⊆ S` and a point below the least fixed
/// point. With `S` and `P` frozen the regime is affine; the walk moves along
/// the segment towards that affine fixed point and stops at the first event:
/// a recovering bank whose `y^i` reaches `l^i` joins `S`, a full payer whose
/// `x^i` reaches `l^i` joins `P`. At the segment end, banks meeting their
/// branch condition (`x^i ≥ l^i` for `b^i = 1`, `y^i ≥ l^i` for `b^i = 0`)
/// are promoted. Both sets only grow, so the number of solves is linear in
/// `n`.
///
/// Without charges on collected debts a group of recovering banks that only
/// owe each other has no affine fixed point. Such a group keeps its payments
/// while the rest moves and is then advanced by exact iteration until one of
/// its members is promoted.
pub fn min_fixpoint(net: &FinancialNetwork, b: &RegimeVector) -> Result<ClearingPair> {
    check_regime(net, b)?;
    let n = net.n();
    let tol = net.tol();
    let l = net.totals().clone();

    let mut solvent: Vec<bool> = l.iter().map(|&li| li == 0.0).collect();
    let mut positive = vec![false; n];
    let mut p = DVector::zeros(n);
    let mut v = DVector::zeros(n);
    let mut at_target = false;
    let limit = 6 * n + 8;

    for _ in 0..limit {
        let x = net.system().assets(&p, &v);
        let y = recovery_assets(net, &p, &v);

        let mut promoted = false;
        for i in 0..n {
            if solvent[i] {
                continue;
            }
            let available = if b.0[i] { x[i] } else { y[i] };
            if available >= l[i] - tol {
                solvent[i] = true;
                p[i] = l[i];
                promoted = true;
            }
        }
        if promoted {
            at_target = false;
            continue;
        }
        let recovering: Vec<bool> = solvent.iter().map(|s| !s).collect();
        let closed = closed_recovering(net, &recovering);
        if at_target {
            if closed.iter().any(|&c| c) {
                if let Some(next) = advance_closed_set(net, b, &closed, &p, &v) {
                    p = next;
                    at_target = false;
                    continue;
                }
            }
            return ClearingPair::new(net, p, v);
        }
        for j in 0..n {
            if solvent[j] && !positive[j] && x[j] >= l[j] {
                positive[j] = true;
            }
        }

        let (mut a, mut c) = frozen_rows(net, &recovering, &positive);
        for i in (0..n).filter(|&i| closed[i]) {
            a.row_mut(i).fill(0.0);
            c[i] = p[i];
        }
        let target = lu_solve(
            DMatrix::identity(2 * n, 2 * n) - a,
            &c,
            "frozen solvency set",
        )?;
        let (pt, vt) = split(&target, n);
        let xt = net.system().assets(&pt, &vt);
        let yt = recovery_assets(net, &pt, &vt);

        let mut events: Vec<(f64, usize, bool)> = Vec::new();
        for i in 0..n {
            if !solvent[i] && yt[i] > l[i] {
                events.push(((l[i] - y[i]) / (yt[i] - y[i]), i, true));
            }
            if solvent[i] && !positive[i] && xt[i] > l[i] {
                events.push(((l[i] - x[i]) / (xt[i] - x[i]), i, false));
            }
        }
        let t_star = events
            .iter()
            .map(|e| e.0)
            .fold(f64::INFINITY, f64::min)
            .max(0.0);
        if t_star >= 1.0 {
            p = pt;
            v = vt;
            at_target = true;
            continue;
        }
        p += (&pt - &p) * t_star;
        v += (&vt - &v) * t_star;
        for &(t, i, cap) in &events {
            if t > t_star + 1e-12 {
                continue;
            }
            if cap {
                solvent[i] = true;
                p[i] = l[i];
            } else {
                positive[i] = true;
            }
        }
    }
    Err(Error::Internal(format!(
        "ascent for regime {b} did not settle after {limit} steps"
    )))
}

/// Minimal and maximal fixed points of one regime map.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeFixpoints {
    pub regime: RegimeVector,
    pub min: ClearingPair,
    pub max: ClearingPair,
    pub exists: bool,
    /// The two extremal fixed points coincide within `10ε`.
    pub unique: bool,
}

pub fn regime_fixpoints(net: &FinancialNetwork, b: &RegimeVector) -> Result<RegimeFixpoints> {
    let min = min_fixpoint(net, b)?;
    let max = max_fixpoint(net, b)?;
    let unique = sup_distance(&min.p, &max.p) <= 10.0 * net.tol();
    Ok(RegimeFixpoints {
        regime: b.clone(),
        min,
        max,
        exists: true,
        unique,
    })
}

/// Per-regime extremal fixed points over all of `{0,1}ⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClearingSet {
    /// One entry per regime vector, in lexicographic order.
    pub entries: Vec<RegimeFixpoints>,
    /// Distinct clearing vectors (sup-norm `10ε` apart) in order of first
    /// appearance.
    pub distinct: Vec<ClearingPair>,
    pub global_min: ClearingPair,
    pub global_max: ClearingPair,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationOptions {
    pub max_n: usize,
    pub parallel: bool,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        Self {
            max_n: 16,
            parallel: true,
        }
    }
}

/// Sweeps all `2ⁿ` regimes and collects their extremal fixed points.
pub fn enumerate_clearing_set(
    net: &FinancialNetwork,
    options: EnumerationOptions,
) -> Result<ClearingSet> {
    let n = net.n();
    if n > options.max_n || n >= 63 {
        return Err(Error::Precondition(format!(
            "enumeration covers 2^n regimes; n = {n} exceeds the cap of {}",
            options.max_n
        )));
    }
    let count = 1u64 << n;
    let solve = |index: u64| regime_fixpoints(net, &RegimeVector::from_index(n, index));
    let entries: Vec<RegimeFixpoints> = if options.parallel {
        (0..count)
            .into_par_iter()
            .map(solve)
            .collect::<Result<_>>()?
    } else {
        (0..count).map(solve).collect::<Result<_>>()?
    };

    let tol = net.tol();
    let check_tol = 10.0 * tol;
    let mut distinct: Vec<ClearingPair> = Vec::new();
    for entry in &entries {
        for pair in [&entry.min, &entry.max] {
            let report = verify_clearing_pair(net, pair, check_tol);
            if !report.overall {
                return Err(Error::Internal(format!(
                    "fixed point of regime {} fails the clearing rules: {}",
                    entry.regime,
                    report.failures().join("; ")
                )));
            }
            if !distinct
                .iter()
                .any(|q| sup_distance(&q.p, &pair.p) <= check_tol)
            {
                distinct.push(pair.clone());
            }
        }
    }
    let global_min = entries[0].min.clone();
    let global_max = entries[entries.len() - 1].max.clone();
    Ok(ClearingSet {
        entries,
        distinct,
        global_min,
        global_max,
    })
}

/// The least and the greatest clearing pair: `(min F_0, max F_1)`.
pub fn extreme_pairs(net: &FinancialNetwork) -> Result<(ClearingPair, ClearingPair)> {
    let n = net.n();
    Ok((
        min_fixpoint(net, &RegimeVector::zeros(n))?,
        max_fixpoint(net, &RegimeVector::ones(n))?,
    ))
}
