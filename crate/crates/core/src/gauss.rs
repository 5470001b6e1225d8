//! Maximal clearing pair by successive elimination of defaulting banks.
//!
//! Requires `α = β = γ` and `‖Θ‖∞ < 1`. If `e + Π'l + Θ'H(l) ≥ l` the
//! maximal pair is `(l, H(l))`. Otherwise some bank `k` defaults at the
//! maximal pair, has `V^k = 0` and pays
//!
//! ```text
//! p^k = c (e^k + T'p̃ + M'Ṽ),   c = α / (1 - α π^{kk})
//! ```
//!
//! with `T`, `M` the `k`-th columns of `Π`, `Θ` and `R` the `k`-th row of
//! `Π`, all without the `k`-th entry. Substituting leaves a system of the same
//! shape in one bank less:
//!
//! ```text
//! Π₁ = Π̃ + c T R,   Θ₁ = Θ̃ + c M R,   e₁ = ẽ + c e^k R
//! ```
//!
//! `Π₁` stays substochastic and `‖Θ₁‖∞ < 1`, so the step can be repeated.

use nalgebra::DVector;

use crate::equity::solve_gplus;
use crate::error::{Error, Result};
use crate::fixpoint::{max_fixpoint, RegimeVector};
use crate::linalg::{row_sum_norm, sup_distance, sup_norm};
use crate::model::{ClearingPair, ClearingSystem, FinancialNetwork};

/// Data needed to recover one eliminated bank's payment.
#[derive(Debug, Clone, PartialEq)]
pub struct EliminationRecord {
    /// Original index of the eliminated bank.
    pub bank: usize,
    /// Original indices of the banks left after this step; `row`, `debt`
    /// and `holding` are indexed alike.
    pub remaining: Vec<usize>,
    /// `π^{kk}` in the system the bank was removed from.
    pub diagonal: f64,
    pub cash: f64,
    pub total: f64,
    /// `R`.
    pub row: DVector<f64>,
    /// `T`.
    pub debt: DVector<f64>,
    /// `M`.
    pub holding: DVector<f64>,
    /// `α (1 - α π^{kk})⁻¹`; zero on the degenerate branch.
    pub scale: f64,
    /// `α = 1` and `π^{kk} = 1`: the payment is set to `l^k`.
    pub degenerate: bool,
}

/// Outcome of the full-payment test on the current system.
#[derive(Debug, Clone, PartialEq)]
pub struct SolvencyCheck {
    pub holds: bool,
    /// Smallest position `i` with `(e + Π'l + Θ'H(l))^i < l^i - ε`.
    pub violating: Option<usize>,
    /// `H(l)` of the current system.
    pub equity: DVector<f64>,
}

/// Shape data recorded after each elimination.
#[derive(Debug, Clone, PartialEq)]
pub struct StepTrace {
    pub bank: usize,
    pub dim: usize,
    pub pi_row_sum_max: f64,
    pub theta_norm: f64,
    pub degenerate: bool,
}

/// A system after some eliminations.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSystem {
    pub system: ClearingSystem,
    /// Current position to original bank index.
    pub index_map: Vec<usize>,
    pub log: Vec<EliminationRecord>,
    alpha: f64,
    tol: f64,
}

impl ReducedSystem {
    pub fn new(net: &FinancialNetwork) -> Result<Self> {
        let ch = net.charges();
        if !ch.is_uniform() {
            return Err(Error::Precondition(format!(
                "the elimination method requires alpha = beta = gamma, got ({}, {}, {})",
                ch.alpha, ch.beta, ch.gamma
            )));
        }
        if net.holdings_norm() >= 1.0 {
            return Err(Error::Precondition(format!(
                "the elimination method requires every holdings row sum below 1, max is {}",
                net.holdings_norm()
            )));
        }
        Ok(Self {
            system: net.system().clone(),
            index_map: (0..net.n()).collect(),
            log: Vec::new(),
            alpha: ch.alpha,
            tol: net.tol(),
        })
    }

    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    pub fn full_payment_check(&self) -> Result<SolvencyCheck> {
        let s = &self.system;
        let l = &s.totals;
        let equity = solve_gplus(s, l, self.tol)?;
        let x = s.assets(l, &equity);
        let violating = (0..s.dim()).find(|&i| x[i] < l[i] - self.tol);
        Ok(SolvencyCheck {
            holds: violating.is_none(),
            violating,
            equity,
        })
    }

    /// Removes the bank at position `i`, which must fail the full-payment
    /// test.
    pub fn eliminate(&self, i: usize) -> Result<ReducedSystem> {
        if i >= self.dim() {
            return Err(Error::Dimension {
                what: "elimination index",
                expected: self.dim(),
                got: i,
            });
        }
        let check = self.full_payment_check()?;
        let s = &self.system;
        let x = s.assets(&s.totals, &check.equity);
        if x[i] >= s.totals[i] - self.tol {
            return Err(Error::Precondition(format!(
                "bank {} meets its obligations under full payment and cannot be eliminated",
                self.index_map[i]
            )));
        }
        Ok(self.eliminate_unchecked(i))
    }

    fn eliminate_unchecked(&self, i: usize) -> ReducedSystem {
        let s = &self.system;
        let m = s.dim();
        let rest: Vec<usize> = (0..m).filter(|&k| k != i).collect();
        let diagonal = s.pi[(i, i)];
        let row = DVector::from_iterator(rest.len(), rest.iter().map(|&k| s.pi[(i, k)]));
        let debt = DVector::from_iterator(rest.len(), rest.iter().map(|&k| s.pi[(k, i)]));
        let holding = DVector::from_iterator(rest.len(), rest.iter().map(|&k| s.theta[(k, i)]));
        let cash = s.cash[i];

        let pi_t = s.pi.select_rows(&rest).select_columns(&rest);
        let theta_t = s.theta.select_rows(&rest).select_columns(&rest);
        let cash_t = DVector::from_iterator(rest.len(), rest.iter().map(|&k| s.cash[k]));
        let totals = DVector::from_iterator(rest.len(), rest.iter().map(|&k| s.totals[k]));

        let degenerate = (1.0 - self.alpha * diagonal).abs() <= 1e-12;
        let (scale, pi, theta, cash_new) = if degenerate {
            (0.0, pi_t, theta_t, cash_t + &row * cash)
        } else {
            let c = self.alpha / (1.0 - self.alpha * diagonal);
            (
                c,
                pi_t + &debt * row.transpose() * c,
                theta_t + &holding * row.transpose() * c,
                cash_t + &row * (c * cash),
            )
        };

        let remaining: Vec<usize> = rest.iter().map(|&k| self.index_map[k]).collect();
        let mut log = self.log.clone();
        log.push(EliminationRecord {
            bank: self.index_map[i],
            remaining: remaining.clone(),
            diagonal,
            cash,
            total: s.totals[i],
            row,
            debt,
            holding,
            scale,
            degenerate,
        });
        ReducedSystem {
            system: ClearingSystem {
                cash: cash_new,
                pi,
                theta,
                totals,
            },
            index_map: remaining,
            log,
            alpha: self.alpha,
            tol: self.tol,
        }
    }
}

/// Maximal clearing pair by elimination, cross-checked against the
/// fixed-point engine.
pub fn gaussian_max_clearing(net: &FinancialNetwork) -> Result<ClearingPair> {
    gaussian_max_clearing_traced(net).map(|(pair, _)| pair)
}

pub fn gaussian_max_clearing_traced(
    net: &FinancialNetwork,
) -> Result<(ClearingPair, Vec<StepTrace>)> {
    let n = net.n();
    let mut sys = ReducedSystem::new(net)?;
    let mut trace = Vec::new();
    let base = loop {
        let check = sys.full_payment_check()?;
        match check.violating {
            None => break check.equity,
            Some(i) => {
                sys = sys.eliminate_unchecked(i);
                let last = sys.log.last().expect("record just pushed");
                trace.push(StepTrace {
                    bank: last.bank,
                    dim: sys.dim(),
                    pi_row_sum_max: row_sum_norm(&sys.system.pi),
                    theta_norm: row_sum_norm(&sys.system.theta),
                    degenerate: last.degenerate,
                });
                if trace.len() > n {
                    return Err(Error::Internal("more eliminations than banks".into()));
                }
            }
        }
    };

    let mut p = DVector::zeros(n);
    let mut v = DVector::zeros(n);
    for (pos, &bank) in sys.index_map.iter().enumerate() {
        p[bank] = sys.system.totals[pos];
        v[bank] = base[pos];
    }
    for rec in sys.log.iter().rev() {
        p[rec.bank] = if rec.degenerate {
            rec.total
        } else {
            let inflow: f64 = rec
                .remaining
                .iter()
                .enumerate()
                .map(|(k, &j)| rec.debt[k] * p[j] + rec.holding[k] * v[j])
                .sum();
            rec.scale * (rec.cash + inflow)
        };
        v[rec.bank] = 0.0;
    }

    let pair = ClearingPair::new(net, p, v)?;
    let reference = max_fixpoint(net, &RegimeVector::ones(n))?;
    let gap = sup_distance(&pair.p, &reference.p).max(sup_distance(&pair.v, &reference.v));
    let allowed = 10.0 * net.tol() * (1.0 + sup_norm(net.totals()));
    if gap > allowed {
        return Err(Error::Internal(format!(
            "elimination result differs from the maximal fixed point by {gap:e}"
        )));
    }
    Ok((pair, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Charges;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn charged_pair(rate: f64) -> FinancialNetwork {
        FinancialNetwork::from_rows(
            &[0.5, 0.0],
            &[vec![0.0, 2.0], vec![3.0, 0.0]],
            &[vec![0.0; 2], vec![0.0; 2]],
            Charges::uniform(rate),
        )
        .unwrap()
    }

    #[test]
    fn solvency_check_example() {
        let sys = ReducedSystem::new(&charged_pair(0.5)).unwrap();
        let check = sys.full_payment_check().unwrap();
        assert!(!check.holds);
        assert_eq!(check.violating, Some(1));
        assert_eq!(check.equity.as_slice(), &[1.5, 0.0]);
    }

    #[test]
    fn single_elimination_example() {
        let sys = ReducedSystem::new(&charged_pair(0.5)).unwrap();
        let red = sys.eliminate(1).unwrap();
        assert_eq!(red.dim(), 1);
        assert_eq!(red.index_map, vec![0]);
        assert_relative_eq!(red.system.pi[(0, 0)], 0.5);
        assert_relative_eq!(red.system.cash[0], 0.5);
        assert_eq!(red.system.theta[(0, 0)], 0.0);
        let check = red.full_payment_check().unwrap();
        assert_eq!(check.violating, Some(0));
        assert!(matches!(sys.eliminate(0), Err(Error::Precondition(_))));
        assert!(matches!(sys.eliminate(2), Err(Error::Dimension { .. })));
    }

    #[test]
    fn full_reduction_example() {
        let (pair, trace) = gaussian_max_clearing_traced(&charged_pair(0.5)).unwrap();
        assert_relative_eq!(pair.p[0], 1.0 / 3.0, epsilon = 1e-14);
        assert_relative_eq!(pair.p[1], 1.0 / 6.0, epsilon = 1e-14);
        assert_eq!(pair.v, DVector::zeros(2));
        assert_eq!(trace.iter().map(|t| t.bank).collect::<Vec<_>>(), vec![1, 0]);
        assert_eq!(trace.last().unwrap().dim, 0);
    }

    #[test]
    fn adequate_cash_needs_no_elimination() {
        let net = FinancialNetwork::from_rows(
            &[5.0, 5.0],
            &[vec![0.0, 2.0], vec![3.0, 0.0]],
            &[vec![0.0, 0.5], vec![0.2, 0.0]],
            Charges::uniform(0.3),
        )
        .unwrap();
        let (pair, trace) = gaussian_max_clearing_traced(&net).unwrap();
        assert!(trace.is_empty());
        assert_eq!(pair.p, *net.totals());
        let h = solve_gplus(net.system(), net.totals(), net.tol()).unwrap();
        assert!(sup_distance(&pair.v, &h) < 1e-12);
    }

    #[test]
    fn chain_with_one_solvent_bank() {
        let net = FinancialNetwork::from_rows(
            &[10.0, 0.0, 0.0],
            &[
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 2.0],
                vec![2.0, 0.0, 0.0],
            ],
            &[vec![0.0; 3], vec![0.0; 3], vec![0.0; 3]],
            Charges::uniform(0.5),
        )
        .unwrap();
        let (pair, trace) = gaussian_max_clearing_traced(&net).unwrap();
        assert_eq!(trace.len(), 2);
        assert_eq!(pair.default_set(), vec![1, 2]);
        // bank 1 recovers 0.5, bank 2 recovers 0.25; bank 0 keeps 10 + 0.25 - 1
        assert_relative_eq!(pair.p[1], 0.5, epsilon = 1e-14);
        assert_relative_eq!(pair.p[2], 0.25, epsilon = 1e-14);
        assert_relative_eq!(pair.v[0], 9.25, epsilon = 1e-13);
    }

    #[test]
    fn zero_holding_column_leaves_theta() {
        let net = FinancialNetwork::from_rows(
            &[0.1, 4.0, 0.0],
            &[
                vec![0.0, 1.0, 1.0],
                vec![1.0, 0.0, 1.0],
                vec![0.0, 1.0, 0.0],
            ],
            &[
                vec![0.0, 0.0, 0.0],
                vec![0.0, 0.0, 0.3],
                vec![0.0, 0.4, 0.0],
            ],
            Charges::uniform(0.8),
        )
        .unwrap();
        let sys = ReducedSystem::new(&net).unwrap();
        let red = sys.eliminate(0).unwrap();
        assert_eq!(
            red.system.theta,
            DMatrix::from_row_slice(2, 2, &[0.0, 0.3, 0.4, 0.0])
        );
    }

    #[test]
    fn preconditions() {
        let net = FinancialNetwork::from_rows(
            &[0.5, 0.0],
            &[vec![0.0, 2.0], vec![3.0, 0.0]],
            &[vec![0.0; 2], vec![0.0; 2]],
            Charges::new(0.5, 0.6, 0.5),
        )
        .unwrap();
        assert!(matches!(
            gaussian_max_clearing(&net),
            Err(Error::Precondition(_))
        ));

        let net = FinancialNetwork::from_rows(
            &[0.5, 0.0],
            &[vec![0.0, 2.0], vec![3.0, 0.0]],
            &[vec![0.0, 1.0], vec![0.0; 2]],
            Charges::uniform(0.5),
        )
        .unwrap();
        assert!(matches!(
            gaussian_max_clearing(&net),
            Err(Error::Precondition(_))
        ));
    }
}
