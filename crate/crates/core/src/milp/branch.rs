//! Best-first branch-and-bound over the integer variables of a
//! [`LinearProgram`].

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::lp::{LinearProgram, Sense};
use super::simplex::{solve_lp, LpOutcome, SimplexOptions};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchOptions {
    pub integer_tol: f64,
    pub node_limit: usize,
    pub simplex: SimplexOptions,
}

impl Default for BranchOptions {
    fn default() -> Self {
        Self {
            integer_tol: 1e-6,
            node_limit: 1_000_000,
            simplex: SimplexOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MipStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NodeLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MipResult {
    pub status: MipStatus,
    /// Best integer-feasible point found, if any.
    pub x: Option<Vec<f64>>,
    pub objective: f64,
    pub nodes: usize,
}

/// Objective, point and the node bounds it was found under.
type Incumbent = (f64, Vec<f64>, Vec<f64>, Vec<f64>);

struct Node {
    /// Parent relaxation value in minimization form.
    bound: f64,
    id: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // BinaryHeap is a max-heap: the smallest bound, then the smallest id,
    // must compare greatest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

/// Most fractional integer variable, lowest index on ties.
fn branching_variable(lp: &LinearProgram, x: &[f64], tol: f64) -> Option<usize> {
    let mut best = None;
    let mut best_frac = tol;
    for (j, v) in lp.variables.iter().enumerate() {
        if !v.integer {
            continue;
        }
        let frac = (x[j] - x[j].floor()).min(x[j].ceil() - x[j]);
        if frac > best_frac {
            best_frac = frac;
            best = Some(j);
        }
    }
    best
}

pub fn branch_and_bound(lp: &LinearProgram, opts: &BranchOptions) -> Result<MipResult> {
    let sign = match lp.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut lower: Vec<f64> = lp.variables.iter().map(|v| v.lower).collect();
    let mut upper: Vec<f64> = lp.variables.iter().map(|v| v.upper).collect();
    for (j, v) in lp.variables.iter().enumerate() {
        if v.integer {
            lower[j] = lower[j].ceil();
            upper[j] = upper[j].floor();
        }
    }

    let mut heap = BinaryHeap::new();
    heap.push(Node {
        bound: f64::NEG_INFINITY,
        id: 0,
        lower,
        upper,
    });
    let mut next_id = 1;
    let mut nodes = 0;
    let mut incumbent: Option<Incumbent> = None;
    let gap = |best: f64| 1e-9 * (1.0 + best.abs());

    while let Some(node) = heap.pop() {
        if let Some((best, ..)) = &incumbent {
            if node.bound >= best - gap(*best) {
                continue;
            }
        }
        if nodes >= opts.node_limit {
            return Ok(finish(
                lp,
                opts,
                incumbent,
                MipStatus::NodeLimit,
                nodes,
                sign,
            ));
        }
        nodes += 1;
        let (x, value) = match solve_lp(lp, &node.lower, &node.upper, &opts.simplex)? {
            LpOutcome::Infeasible => continue,
            LpOutcome::Unbounded => {
                return Ok(MipResult {
                    status: MipStatus::Unbounded,
                    x: None,
                    objective: sign * f64::NEG_INFINITY,
                    nodes,
                })
            }
            LpOutcome::Optimal { x, objective } => (x, sign * objective),
        };
        if let Some((best, ..)) = &incumbent {
            if value >= best - gap(*best) {
                continue;
            }
        }
        match branching_variable(lp, &x, opts.integer_tol) {
            None => incumbent = Some((value, x, node.lower, node.upper)),
            Some(j) => {
                let mut down = node.upper.clone();
                down[j] = x[j].floor();
                heap.push(Node {
                    bound: value,
                    id: next_id,
                    lower: node.lower.clone(),
                    upper: down,
                });
                let mut up = node.lower;
                up[j] = x[j].ceil();
                heap.push(Node {
                    bound: value,
                    id: next_id + 1,
                    lower: up,
                    upper: node.upper,
                });
                next_id += 2;
            }
        }
    }
    let status = if incumbent.is_some() {
        MipStatus::Optimal
    } else {
        MipStatus::Infeasible
    };
    Ok(finish(lp, opts, incumbent, status, nodes, sign))
}

/// Rounds the integer part of the incumbent and re-solves the continuous
/// part with it fixed.
fn finish(
    lp: &LinearProgram,
    opts: &BranchOptions,
    incumbent: Option<Incumbent>,
    status: MipStatus,
    nodes: usize,
    sign: f64,
) -> MipResult {
    let Some((value, x, mut lower, mut upper)) = incumbent else {
        return MipResult {
            status,
            x: None,
            objective: f64::NAN,
            nodes,
        };
    };
    for (j, v) in lp.variables.iter().enumerate() {
        if v.integer {
            lower[j] = x[j].round();
            upper[j] = x[j].round();
        }
    }
    let (x, objective) = match solve_lp(lp, &lower, &upper, &opts.simplex) {
        Ok(LpOutcome::Optimal { x, objective }) => (x, objective),
        _ => {
            let mut x = x;
            for (j, v) in lp.variables.iter().enumerate() {
                if v.integer {
                    x[j] = x[j].round();
                }
            }
            (x, sign * value)
        }
    };
    MipResult {
        status,
        x: Some(x),
        objective,
        nodes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::lp::RowKind;

    #[test]
    fn small_knapsack() {
        // max 5a + 4b + 3c s.t. 2a + 3b + c <= 5, 4a + b + 2c <= 11, 3a + 4b + 2c <= 8
        let mut lp = LinearProgram::new("knap", Sense::Maximize);
        let v: Vec<usize> = [5.0, 4.0, 3.0]
            .iter()
            .enumerate()
            .map(|(i, &c)| lp.add_variable(format!("x{i}"), 0.0, 1.0, c, true))
            .collect();
        lp.add_constraint(
            "r1",
            [(v[0], 2.0), (v[1], 3.0), (v[2], 1.0)],
            RowKind::Le,
            5.0,
        );
        lp.add_constraint(
            "r2",
            [(v[0], 4.0), (v[1], 1.0), (v[2], 2.0)],
            RowKind::Le,
            11.0,
        );
        lp.add_constraint(
            "r3",
            [(v[0], 3.0), (v[1], 4.0), (v[2], 2.0)],
            RowKind::Le,
            8.0,
        );
        let res = branch_and_bound(&lp, &BranchOptions::default()).unwrap();
        assert_eq!(res.status, MipStatus::Optimal);
        assert_eq!(res.x.unwrap(), vec![1.0, 1.0, 0.0]);
        assert_eq!(res.objective, 9.0);
    }

    #[test]
    fn mixed_problem_needs_branching() {
        // max x + 2z, x continuous in [0, 3.5], z binary, x + 4z <= 4.5
        let mut lp = LinearProgram::new("mix", Sense::Maximize);
        let x = lp.add_variable("x", 0.0, 3.5, 1.0, false);
        let z = lp.add_variable("z", 0.0, 1.0, 2.0, true);
        lp.add_constraint("r", [(x, 1.0), (z, 4.0)], RowKind::Le, 4.5);
        let res = branch_and_bound(&lp, &BranchOptions::default()).unwrap();
        assert_eq!(res.status, MipStatus::Optimal);
        let sol = res.x.unwrap();
        assert_eq!(sol[1], 0.0);
        assert!((sol[0] - 3.5).abs() < 1e-12);
        assert!(res.nodes >= 2);
    }

    #[test]
    fn integer_infeasible() {
        let mut lp = LinearProgram::new("inf", Sense::Minimize);
        let z = lp.add_variable("z", 0.0, 1.0, 1.0, true);
        lp.add_constraint("lo", [(z, 1.0)], RowKind::Ge, 0.3);
        lp.add_constraint("hi", [(z, 1.0)], RowKind::Le, 0.7);
        let res = branch_and_bound(&lp, &BranchOptions::default()).unwrap();
        assert_eq!(res.status, MipStatus::Infeasible);
        assert!(res.x.is_none());
    }

    #[test]
    fn node_limit_is_reported() {
        let mut lp = LinearProgram::new("lim", Sense::Maximize);
        let a = lp.add_variable("a", 0.0, 1.0, 1.0, true);
        let b = lp.add_variable("b", 0.0, 1.0, 1.0, true);
        lp.add_constraint("r", [(a, 2.0), (b, 2.0)], RowKind::Le, 3.0);
        let opts = BranchOptions {
            node_limit: 1,
            ..BranchOptions::default()
        };
        let res = branch_and_bound(&lp, &opts).unwrap();
        assert_eq!(res.status, MipStatus::NodeLimit);
    }
}
