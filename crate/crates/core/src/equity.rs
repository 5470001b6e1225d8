//! Equity fixed points for a given payment vector.
//!
//! For a payment vector `x` let `Λ = diag 1{x = l}`, `B = ΘΛ`. The equity
//! equations are
//!
//! ```text
//! V = a(x) + B'V         with a(x) = Λ(e + Π'x - x)   (unclipped, G)
//! V = (c(x) + B'V)^+     with c(x) = Λ(e + Π'x - l)   (clipped, G₊)
//! ```
//!
//! The clipped solution is `H(x)`. It lies in `[0, K]` with
//! `K = (I - Θ')⁻¹ (e + Π'l - l)^+`, which also yields the big-M constants
//! `κ = ‖K‖∞` and `κ₁ = ‖e + Π'l + κΘ'1‖∞` used by the integer programs.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{lu_solve, sup_norm};
use crate::model::ClearingSystem;
use crate::obstacle::ClippedSystem;

/// `Λ^i = 1` iff `|x^i - l^i| ≤ tol`.
pub fn equality_mask(x: &DVector<f64>, totals: &DVector<f64>, tol: f64) -> Vec<bool> {
    x.iter()
        .zip(totals.iter())
        .map(|(xi, li)| (xi - li).abs() <= tol)
        .collect()
}

/// The masked affine data of one equity equation.
#[derive(Debug, Clone, PartialEq)]
pub struct EquityProblem {
    pub mask: Vec<bool>,
    /// `a(x)` for `G`, `c(x)` for `G₊`.
    pub affine: DVector<f64>,
    /// `B = Θ diag(Λ)`.
    pub coupling: DMatrix<f64>,
}

impl EquityProblem {
    pub fn for_g(sys: &ClearingSystem, x: &DVector<f64>, tol: f64) -> Result<Self> {
        Self::build(sys, x, tol, x)
    }

    pub fn for_gplus(sys: &ClearingSystem, x: &DVector<f64>, tol: f64) -> Result<Self> {
        Self::build(sys, x, tol, &sys.totals)
    }

    fn build(
        sys: &ClearingSystem,
        x: &DVector<f64>,
        tol: f64,
        subtract: &DVector<f64>,
    ) -> Result<Self> {
        if x.len() != sys.dim() {
            return Err(Error::Dimension {
                what: "payment vector",
                expected: sys.dim(),
                got: x.len(),
            });
        }
        let mask = equality_mask(x, &sys.totals, tol);
        let base = &sys.cash + sys.pi.tr_mul(x) - subtract;
        Ok(Self::assemble(sys, base, mask))
    }

    fn assemble(sys: &ClearingSystem, mut affine: DVector<f64>, mask: Vec<bool>) -> Self {
        let mut coupling = sys.theta.clone();
        for (j, &on) in mask.iter().enumerate() {
            if !on {
                affine[j] = 0.0;
                coupling.column_mut(j).fill(0.0);
            }
        }
        Self {
            mask,
            affine,
            coupling,
        }
    }

    fn iteration_matrix(&self) -> DMatrix<f64> {
        self.coupling.transpose()
    }
}

/// Unique solution of `V = a(x) + B'V`. May have negative components.
pub fn solve_g(sys: &ClearingSystem, x: &DVector<f64>, tol: f64) -> Result<DVector<f64>> {
    let prob = EquityProblem::for_g(sys, x, tol)?;
    let n = sys.dim();
    let m = DMatrix::identity(n, n) - prob.iteration_matrix();
    lu_solve(m, &prob.affine, "equity equation V = G(x, V)")
}

/// Starting point of the monotone iteration for `H`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquityStart {
    /// Start at `K` and decrease.
    Upper,
    /// Start at `0` and increase.
    Zero,
}

/// `H(x)`: the unique `V ≥ 0` with `V = (c(x) + B'V)^+`.
pub fn solve_gplus(sys: &ClearingSystem, x: &DVector<f64>, tol: f64) -> Result<DVector<f64>> {
    solve_gplus_from(sys, x, tol, EquityStart::Upper)
}

pub fn solve_gplus_from(
    sys: &ClearingSystem,
    x: &DVector<f64>,
    tol: f64,
    start: EquityStart,
) -> Result<DVector<f64>> {
    let prob = EquityProblem::for_gplus(sys, x, tol)?;
    let z0 = match start {
        EquityStart::Upper => compute_bounds(sys)?.k,
        EquityStart::Zero => DVector::zeros(sys.dim()),
    };
    solve_problem(sys.dim(), &prob, z0, tol)
}

pub(crate) fn solve_problem(
    n: usize,
    prob: &EquityProblem,
    z0: DVector<f64>,
    tol: f64,
) -> Result<DVector<f64>> {
    let a = prob.iteration_matrix();
    let clipped = vec![true; n];
    let sys = ClippedSystem {
        a: &a,
        c: &prob.affine,
        clipped: &clipped,
    };
    let warm = sys.sweep(z0, tol / 10.0, 10 * n + 100);
    sys.polish(warm, "equity equation V = G+(x, V)")
}

/// Upper bound `K` for `H` on `[0, l]` and the big-M constants.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub k: DVector<f64>,
    pub kappa: f64,
    pub kappa1: f64,
}

pub fn compute_bounds(sys: &ClearingSystem) -> Result<Bounds> {
    let n = sys.dim();
    let surplus = &sys.cash + sys.pi.tr_mul(&sys.totals) - &sys.totals;
    let positive = surplus.map(|z| z.max(0.0));
    let m = DMatrix::identity(n, n) - sys.theta.transpose();
    let k = lu_solve(m, &positive, "equity bound K = (I - Θ')⁻¹ z⁺")?.map(|v| v.max(0.0));
    let kappa = sup_norm(&k);
    let column_sums = sys.theta.tr_mul(&DVector::from_element(n, 1.0));
    let kappa1 = sup_norm(&(&sys.cash + sys.pi.tr_mul(&sys.totals) + column_sums * kappa));
    Ok(Bounds { k, kappa, kappa1 })
}
