//! Network data, the asset maps `x` and `y`, and the axiomatic checker.
//!
//! Every money comparison in the crate follows one convention: with
//! tolerance `ε`, "`a = b`" means `|a - b| ≤ ε` and "`a < b`" means
//! `a < b - ε`. The tolerance travels with the network
//! ([`FinancialNetwork::tol`]).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{min_pivot, row_sum_norm, PIVOT_THRESHOLD};

/// Absolute tolerance on money amounts used when none is configured.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

const ROW_SUM_SLACK: f64 = 1e-12;

/// Recovery fractions applied on default: `α` to cash, `β` to collected
/// debts, `γ` to the value of held shares.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Charges {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Charges {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self { alpha, beta, gamma }
    }

    /// No default charges.
    pub fn none() -> Self {
        Self::new(1.0, 1.0, 1.0)
    }

    pub fn uniform(rate: f64) -> Self {
        Self::new(rate, rate, rate)
    }

    pub fn is_uniform(&self) -> bool {
        self.alpha == self.beta && self.beta == self.gamma
    }

    fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::ParameterRange { name, value });
            }
        }
        Ok(())
    }
}

/// The linear data `(e, Π, Θ, l)` of a clearing problem.
///
/// For a [`FinancialNetwork`] `Π` is row-stochastic and `l` holds the row
/// totals of the liability matrix. Systems produced by the elimination in
/// [`crate::gauss`] only keep `Π` substochastic, so nothing here assumes
/// more than nonnegativity.
#[derive(Debug, Clone, PartialEq)]
pub struct ClearingSystem {
    pub cash: DVector<f64>,
    pub pi: DMatrix<f64>,
    pub theta: DMatrix<f64>,
    pub totals: DVector<f64>,
}

impl ClearingSystem {
    pub fn new(
        cash: DVector<f64>,
        pi: DMatrix<f64>,
        theta: DMatrix<f64>,
        totals: DVector<f64>,
    ) -> Result<Self> {
        let n = cash.len();
        check_square("relative liabilities", &pi, n)?;
        check_square("holdings", &theta, n)?;
        check_len("totals", totals.len(), n)?;
        Ok(Self {
            cash,
            pi,
            theta,
            totals,
        })
    }

    pub fn dim(&self) -> usize {
        self.cash.len()
    }

    /// Total assets `e + Π'p + Θ'V`.
    pub fn assets(&self, p: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        &self.cash + self.pi.tr_mul(p) + self.theta.tr_mul(v)
    }
}

/// A validated interbank network.
#[derive(Debug, Clone)]
pub struct FinancialNetwork {
    system: ClearingSystem,
    liabilities: DMatrix<f64>,
    charges: Charges,
    tol: f64,
    holdings_norm: f64,
}

impl FinancialNetwork {
    /// Validates the raw data and derives totals and relative liabilities.
    ///
    /// `liabilities[(i, j)]` is the nominal debt of bank `i` towards bank `j`
    /// and `holdings[(i, j)]` is the fraction of bank `i`'s equity owned by
    /// bank `j`, so bank `j` receives `θ^{ij} V^i` through `Θ'V`.
    pub fn new(
        cash: DVector<f64>,
        liabilities: DMatrix<f64>,
        holdings: DMatrix<f64>,
        charges: Charges,
    ) -> Result<Self> {
        let n = cash.len();
        if n == 0 {
            return Err(Error::Empty);
        }
        check_square("liabilities", &liabilities, n)?;
        check_square("holdings", &holdings, n)?;

        for (i, &c) in cash.iter().enumerate() {
            check_entry("cash", i.to_string(), c)?;
        }
        for (field, m) in [("liabilities", &liabilities), ("holdings", &holdings)] {
            for i in 0..n {
                for j in 0..n {
                    check_entry(field, format!("({i}, {j})"), m[(i, j)])?;
                }
            }
        }
        for i in 0..n {
            if liabilities[(i, i)] != 0.0 {
                return Err(Error::SelfLiability {
                    bank: i,
                    value: liabilities[(i, i)],
                });
            }
        }
        for (row, r) in holdings.row_iter().enumerate() {
            let sum: f64 = r.iter().sum();
            if sum > 1.0 + ROW_SUM_SLACK {
                return Err(Error::HoldingsRowSum { row, sum });
            }
        }
        charges.validate()?;

        let pivot = min_pivot(&(DMatrix::identity(n, n) - holdings.transpose()));
        if pivot.is_nan() || pivot <= PIVOT_THRESHOLD {
            return Err(Error::SingularHoldings { pivot });
        }

        let totals = DVector::from_iterator(n, liabilities.row_iter().map(|r| r.sum()));
        let pi = relative_liabilities(&liabilities, &totals);
        let holdings_norm = row_sum_norm(&holdings);
        Ok(Self {
            system: ClearingSystem {
                cash,
                pi,
                theta: holdings,
                totals,
            },
            liabilities,
            charges,
            tol: DEFAULT_TOLERANCE,
            holdings_norm,
        })
    }

    /// Convenience constructor from nested vectors (rows).
    pub fn from_rows(
        cash: &[f64],
        liabilities: &[Vec<f64>],
        holdings: &[Vec<f64>],
        charges: Charges,
    ) -> Result<Self> {
        let n = cash.len();
        Self::new(
            DVector::from_column_slice(cash),
            matrix_from_rows("liabilities", liabilities, n)?,
            matrix_from_rows("holdings", holdings, n)?,
            charges,
        )
    }

    /// Replaces the comparison tolerance `ε`.
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn n(&self) -> usize {
        self.system.dim()
    }

    pub fn system(&self) -> &ClearingSystem {
        &self.system
    }

    pub fn cash(&self) -> &DVector<f64> {
        &self.system.cash
    }

    pub fn liabilities(&self) -> &DMatrix<f64> {
        &self.liabilities
    }

    pub fn holdings(&self) -> &DMatrix<f64> {
        &self.system.theta
    }

    pub fn relative_liabilities(&self) -> &DMatrix<f64> {
        &self.system.pi
    }

    pub fn totals(&self) -> &DVector<f64> {
        &self.system.totals
    }

    pub fn charges(&self) -> Charges {
        self.charges
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// `‖Θ‖∞`, the largest holdings row sum.
    pub fn holdings_norm(&self) -> f64 {
        self.holdings_norm
    }

    /// Whether `‖Θ‖∞ < 1`, the stronger holdings condition required by the
    /// elimination method.
    pub fn has_strict_holdings(&self) -> bool {
        self.holdings_norm < 1.0
    }

    pub(crate) fn check_dim(&self, what: &'static str, v: &DVector<f64>) -> Result<()> {
        check_len(what, v.len(), self.n())
    }
}

/// `π^{ij} = l^{ij} / l^i` when `l^i ≠ 0`, otherwise the `i`-th unit row.
fn relative_liabilities(liabilities: &DMatrix<f64>, totals: &DVector<f64>) -> DMatrix<f64> {
    let n = totals.len();
    DMatrix::from_fn(n, n, |i, j| {
        if totals[i] != 0.0 {
            liabilities[(i, j)] / totals[i]
        } else if i == j {
            1.0
        } else {
            0.0
        }
    })
}

/// `x(p, V) = e + Π'p + Θ'V`.
pub fn assets_x(
    net: &FinancialNetwork,
    p: &DVector<f64>,
    v: &DVector<f64>,
) -> Result<DVector<f64>> {
    net.check_dim("payment vector", p)?;
    net.check_dim("equity vector", v)?;
    Ok(net.system.assets(p, v))
}

/// `y(p, V) = αe + βΠ'p + γΘ'V`, the assets left to creditors after default charges.
pub fn assets_y(
    net: &FinancialNetwork,
    p: &DVector<f64>,
    v: &DVector<f64>,
) -> Result<DVector<f64>> {
    net.check_dim("payment vector", p)?;
    net.check_dim("equity vector", v)?;
    Ok(recovery_assets(net, p, v))
}

pub(crate) fn recovery_assets(
    net: &FinancialNetwork,
    p: &DVector<f64>,
    v: &DVector<f64>,
) -> DVector<f64> {
    let c = net.charges;
    let s = &net.system;
    &s.cash * c.alpha + s.pi.tr_mul(p) * c.beta + s.theta.tr_mul(v) * c.gamma
}

/// A payment vector with its equity vector and the implied default indicator.
#[derive(Debug, Clone, PartialEq)]
pub struct ClearingPair {
    pub p: DVector<f64>,
    pub v: DVector<f64>,
    /// `d^i` is true iff `x^i(p, V) < l^i` under the tolerance convention.
    pub defaulted: Vec<bool>,
}

impl ClearingPair {
    pub fn new(net: &FinancialNetwork, p: DVector<f64>, v: DVector<f64>) -> Result<Self> {
        let x = assets_x(net, &p, &v)?;
        let tol = net.tol();
        let defaulted = x
            .iter()
            .zip(net.totals().iter())
            .map(|(&xi, &li)| xi < li - tol)
            .collect();
        Ok(Self { p, v, defaulted })
    }

    /// Indices of defaulting banks.
    pub fn default_set(&self) -> Vec<usize> {
        self.defaulted
            .iter()
            .enumerate()
            .filter_map(|(i, &d)| d.then_some(i))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BankCheck {
    pub passed: bool,
    pub residual: f64,
}

/// Which alternative of the absolute priority rule a bank satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorityBranch {
    /// `p^i = l^i`.
    FullPayment,
    /// `p^i = y^i(p, V)`.
    Recovery,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorityCheck {
    pub passed: bool,
    pub branch: Option<PriorityBranch>,
    pub residual: f64,
}

/// Per-bank outcome of the three clearing rules plus the box `0 ≤ p ≤ l`, `V ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct AxiomReport {
    pub bounds: Vec<BankCheck>,
    pub limited_liability: Vec<BankCheck>,
    pub absolute_priority: Vec<PriorityCheck>,
    pub equity_evaluation: Vec<BankCheck>,
    pub overall: bool,
}

impl AxiomReport {
    /// Human-readable list of failed checks.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (i, c) in self.bounds.iter().enumerate() {
            if !c.passed {
                out.push(format!("bank {i}: outside bounds by {:e}", c.residual));
            }
        }
        for (i, c) in self.limited_liability.iter().enumerate() {
            if !c.passed {
                out.push(format!(
                    "bank {i}: limited liability violated by {:e}",
                    c.residual
                ));
            }
        }
        for (i, c) in self.absolute_priority.iter().enumerate() {
            if !c.passed {
                out.push(format!(
                    "bank {i}: absolute priority violated by {:e}",
                    c.residual
                ));
            }
        }
        for (i, c) in self.equity_evaluation.iter().enumerate() {
            if !c.passed {
                out.push(format!(
                    "bank {i}: equity evaluation violated by {:e}",
                    c.residual
                ));
            }
        }
        out
    }
}

/// Checks limited liability, absolute priority and equity evaluation for
/// `pair` with absolute tolerance `tol`.
pub fn verify_clearing_pair(net: &FinancialNetwork, pair: &ClearingPair, tol: f64) -> AxiomReport {
    let n = net.n();
    if pair.p.len() != n || pair.v.len() != n {
        let fail = BankCheck {
            passed: false,
            residual: f64::INFINITY,
        };
        return AxiomReport {
            bounds: vec![fail; n],
            limited_liability: vec![fail; n],
            absolute_priority: vec![
                PriorityCheck {
                    passed: false,
                    branch: None,
                    residual: f64::INFINITY
                };
                n
            ],
            equity_evaluation: vec![fail; n],
            overall: false,
        };
    }
    let (p, v) = (&pair.p, &pair.v);
    let x = net.system.assets(p, v);
    let y = recovery_assets(net, p, v);
    let l = net.totals();

    let check = |residual: f64| BankCheck {
        passed: residual <= tol,
        residual,
    };
    let bounds: Vec<_> = (0..n)
        .map(|i| check((-p[i]).max(p[i] - l[i]).max(-v[i]).max(0.0)))
        .collect();
    let limited_liability: Vec<_> = (0..n).map(|i| check((p[i] - x[i]).max(0.0))).collect();
    let absolute_priority: Vec<_> = (0..n)
        .map(|i| {
            let full = (p[i] - l[i]).abs();
            let recovery = (p[i] - y[i]).abs();
            let branch = if full <= tol {
                Some(PriorityBranch::FullPayment)
            } else if recovery <= tol {
                Some(PriorityBranch::Recovery)
            } else {
                None
            };
            PriorityCheck {
                passed: branch.is_some(),
                branch,
                residual: full.min(recovery),
            }
        })
        .collect();
    let equity_evaluation: Vec<_> = (0..n)
        .map(|i| {
            if (p[i] - l[i]).abs() <= tol {
                check((v[i] - (x[i] - p[i])).abs())
            } else {
                check(v[i].abs())
            }
        })
        .collect();

    let overall = bounds.iter().all(|c| c.passed)
        && limited_liability.iter().all(|c| c.passed)
        && absolute_priority.iter().all(|c| c.passed)
        && equity_evaluation.iter().all(|c| c.passed);
    AxiomReport {
        bounds,
        limited_liability,
        absolute_priority,
        equity_evaluation,
        overall,
    }
}

fn check_square(what: &'static str, m: &DMatrix<f64>, n: usize) -> Result<()> {
    check_len(what, m.nrows(), n)?;
    check_len(what, m.ncols(), n)
}

fn check_len(what: &'static str, got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::Dimension {
            what,
            expected,
            got,
        });
    }
    Ok(())
}

fn check_entry(field: &'static str, index: String, value: f64) -> Result<()> {
    if !value.is_finite() {
        return Err(Error::NonFinite { field, index });
    }
    if value < 0.0 {
        return Err(Error::Negative {
            field,
            index,
            value,
        });
    }
    Ok(())
}

fn matrix_from_rows(what: &'static str, rows: &[Vec<f64>], n: usize) -> Result<DMatrix<f64>> {
    check_len(what, rows.len(), n)?;
    for r in rows {
        check_len(what, r.len(), n)?;
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}
