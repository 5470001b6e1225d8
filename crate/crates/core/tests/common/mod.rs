#![allow(dead_code, clippy::needless_range_loop)]

use clearnet_core::milp::{LinearProgram, RowKind, Sense};
use clearnet_core::{verify_clearing_pair, Charges, ClearingPair, FinancialNetwork};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Debts U[0,10] with the given density, holdings rows rescaled to a sum
/// drawn from U[0, max_holding], cash U[0,5](1 - shock).
pub fn random_network(
    rng: &mut ChaCha8Rng,
    n: usize,
    density: f64,
    shock: f64,
    max_holding: f64,
    charges: Charges,
) -> FinancialNetwork {
    let cash = DVector::from_fn(n, |_, _| rng.gen_range(0.0..5.0) * (1.0 - shock));
    let mut debts = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.gen_bool(density) {
                debts[(i, j)] = rng.gen_range(0.0..10.0);
            }
        }
    }
    let mut holdings = DMatrix::zeros(n, n);
    if max_holding > 0.0 {
        for i in 0..n {
            let target = rng.gen_range(0.0..max_holding);
            let mut row: Vec<f64> = (0..n)
                .map(|j| {
                    if j != i && rng.gen_bool(0.5) {
                        rng.gen::<f64>()
                    } else {
                        0.0
                    }
                })
                .collect();
            let sum: f64 = row.iter().sum();
            if sum > 0.0 {
                for v in &mut row {
                    *v *= target / sum;
                }
            }
            for (j, v) in row.into_iter().enumerate() {
                holdings[(i, j)] = v;
            }
        }
    }
    FinancialNetwork::new(cash, debts, holdings, charges).expect("generated network is valid")
}

pub fn random_charges(rng: &mut ChaCha8Rng) -> Charges {
    Charges::new(
        rng.gen_range(0.1..=1.0),
        rng.gen_range(0.1..=1.0),
        rng.gen_range(0.1..=1.0),
    )
}

/// A mixed draw used by most batteries: size, density, stress and holdings
/// all vary with the seed.
pub fn battery_network(seed: u64, max_n: usize, charges: Option<Charges>) -> FinancialNetwork {
    let mut r = rng(seed);
    let n = r.gen_range(1..=max_n);
    let density = r.gen_range(0.2..=1.0);
    let shock = r.gen_range(0.0..0.9);
    let holding = if r.gen_bool(0.8) { 0.9 } else { 0.0 };
    let ch = charges.unwrap_or_else(|| random_charges(&mut r));
    random_network(&mut r, n, density, shock, holding, ch)
}

pub fn sup_dist(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).amax()
}

/// Gaussian elimination with partial pivoting, independent of the crate.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-13 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

/// Classical fictitious default algorithm for `p = (e + Π'p) ∧ l`.
pub fn eisenberg_noe(cash: &[f64], debts: &[Vec<f64>]) -> Vec<f64> {
    let n = cash.len();
    let totals: Vec<f64> = debts.iter().map(|r| r.iter().sum()).collect();
    let share = |i: usize, j: usize| {
        if totals[i] > 0.0 {
            debts[i][j] / totals[i]
        } else {
            0.0
        }
    };
    let mut p = totals.clone();
    let mut default = vec![false; n];
    loop {
        let mut changed = false;
        for i in 0..n {
            let assets = cash[i] + (0..n).map(|j| share(j, i) * p[j]).sum::<f64>();
            if !default[i] && assets < totals[i] - 1e-12 {
                default[i] = true;
                changed = true;
            }
        }
        if !changed {
            return p;
        }
        // p_i = e_i + Σ_j π_ji p_j on D, p_i = l_i off D
        let mut a = vec![vec![0.0; n]; n];
        let mut b = vec![0.0; n];
        for i in 0..n {
            a[i][i] = 1.0;
            if default[i] {
                for j in 0..n {
                    a[i][j] -= share(j, i);
                }
                b[i] = cash[i];
            } else {
                b[i] = totals[i];
            }
        }
        p = gauss_solve(a, b).expect("fictitious default system is regular");
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum BankState {
    Recovery,
    FullNoEquity,
    FullWithEquity,
}

/// Every clearing pair whose structure is one of the `3ⁿ` assignments of
/// banks to recovery, full payment without equity, or full payment with
/// equity. Pairs are deduplicated in sup-norm.
pub fn brute_force_pairs(net: &FinancialNetwork, tol: f64) -> Vec<ClearingPair> {
    let n = net.n();
    let s = net.system();
    let ch = net.charges();
    let l = net.totals();
    let mut found: Vec<ClearingPair> = Vec::new();
    let states = [
        BankState::Recovery,
        BankState::FullNoEquity,
        BankState::FullWithEquity,
    ];
    for code in 0..3usize.pow(n as u32) {
        let mut c = code;
        let assign: Vec<BankState> = (0..n)
            .map(|_| {
                let st = states[c % 3];
                c /= 3;
                st
            })
            .collect();
        let mut a = vec![vec![0.0; 2 * n]; 2 * n];
        let mut b = vec![0.0; 2 * n];
        for i in 0..n {
            a[i][i] = 1.0;
            a[n + i][n + i] = 1.0;
            match assign[i] {
                BankState::Recovery => {
                    for j in 0..n {
                        a[i][j] -= ch.beta * s.pi[(j, i)];
                        a[i][n + j] -= ch.gamma * s.theta[(j, i)];
                    }
                    b[i] = ch.alpha * s.cash[i];
                }
                BankState::FullNoEquity => b[i] = l[i],
                BankState::FullWithEquity => {
                    b[i] = l[i];
                    for j in 0..n {
                        a[n + i][j] -= s.pi[(j, i)];
                        a[n + i][n + j] -= s.theta[(j, i)];
                    }
                    b[n + i] = s.cash[i] - l[i];
                }
            }
        }
        let Some(z) = gauss_solve(a, b) else { continue };
        let p = DVector::from_column_slice(&z[..n]);
        let v = DVector::from_column_slice(&z[n..]);
        let Ok(pair) = ClearingPair::new(net, p, v) else {
            continue;
        };
        if !verify_clearing_pair(net, &pair, tol).overall {
            continue;
        }
        if !found.iter().any(|q| sup_dist(&q.p, &pair.p) <= 10.0 * tol) {
            found.push(pair);
        }
    }
    found
}

/// Optimum of a bounded LP by enumerating every basic solution.
pub fn vertex_enumeration(lp: &LinearProgram) -> Option<f64> {
    let n = lp.num_variables();
    // Each candidate active constraint is a row `g·x = h`.
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for c in &lp.constraints {
        let mut g = vec![0.0; n];
        for &(j, v) in &c.coefs {
            g[j] = v;
        }
        planes.push((g, c.rhs));
    }
    for (j, v) in lp.variables.iter().enumerate() {
        for bound in [v.lower, v.upper] {
            if bound.is_finite() {
                let mut g = vec![0.0; n];
                g[j] = 1.0;
                planes.push((g, bound));
            }
        }
    }
    let sign = if lp.sense == Sense::Maximize {
        1.0
    } else {
        -1.0
    };
    let mut best: Option<f64> = None;
    let mut pick = Vec::with_capacity(n);
    fn rec(
        start: usize,
        pick: &mut Vec<usize>,
        planes: &[(Vec<f64>, f64)],
        lp: &LinearProgram,
        n: usize,
        sign: f64,
        best: &mut Option<f64>,
    ) {
        if pick.len() == n {
            let a: Vec<Vec<f64>> = pick.iter().map(|&k| planes[k].0.clone()).collect();
            let b: Vec<f64> = pick.iter().map(|&k| planes[k].1).collect();
            if let Some(x) = gauss_solve(a, b) {
                if lp.max_violation(&x) <= 1e-9 {
                    let val = sign * lp.objective_value(&x);
                    if best.is_none_or(|b| val > b) {
                        *best = Some(val);
                    }
                }
            }
            return;
        }
        for k in start..planes.len() {
            if planes.len() - k < n - pick.len() {
                break;
            }
            pick.push(k);
            rec(k + 1, pick, planes, lp, n, sign, best);
            pick.pop();
        }
    }
    rec(0, &mut pick, &planes, lp, n, sign, &mut best);
    best.map(|b| sign * b)
}

/// Random LP with box bounds, feasible at a random anchor point inside the box.
pub fn random_lp(rng: &mut ChaCha8Rng, n: usize, m: usize) -> LinearProgram {
    let sense = if rng.gen_bool(0.5) {
        Sense::Maximize
    } else {
        Sense::Minimize
    };
    let mut lp = LinearProgram::new("rnd", sense);
    let mut anchor = Vec::with_capacity(n);
    for j in 0..n {
        let lo = rng.gen_range(-3.0..1.0);
        let up = lo + rng.gen_range(0.5..5.0);
        anchor.push(rng.gen_range(lo..up));
        lp.add_variable(format!("x{j}"), lo, up, rng.gen_range(-2.0..2.0), false);
    }
    for i in 0..m {
        let mut coefs: Vec<(usize, f64)> = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.7) {
                coefs.push((j, rng.gen_range(-3.0..3.0)));
            }
        }
        let act: f64 = coefs.iter().map(|&(j, c)| c * anchor[j]).sum();
        let (kind, rhs) = match rng.gen_range(0..5) {
            0 => (RowKind::Eq, act),
            1 | 2 => (RowKind::Ge, act - rng.gen_range(0.0..2.0)),
            _ => (RowKind::Le, act + rng.gen_range(0.0..2.0)),
        };
        lp.add_constraint(format!("r{i}"), coefs, kind, rhs);
    }
    lp
}
