use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Smallest admissible pivot magnitude in an LU factorization.
pub(crate) const PIVOT_THRESHOLD: f64 = 1e-12;

/// Smallest absolute diagonal entry of `U` in the partially pivoted LU of `a`.
pub(crate) fn min_pivot(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return f64::INFINITY;
    }
    let lu = a.clone().lu();
    let u = lu.u();
    (0..u.nrows())
        .map(|i| u[(i, i)].abs())
        .fold(f64::INFINITY, f64::min)
}

/// Solves `a z = b` with partial pivoting, rejecting near-singular systems.
pub(crate) fn lu_solve(
    a: DMatrix<f64>,
    b: &DVector<f64>,
    context: &'static str,
) -> Result<DVector<f64>> {
    if a.nrows() == 0 {
        return Ok(DVector::zeros(0));
    }
    let lu = a.lu();
    let u = lu.u();
    let pivot = (0..u.nrows())
        .map(|i| u[(i, i)].abs())
        .fold(f64::INFINITY, f64::min);
    if pivot.is_nan() || pivot <= PIVOT_THRESHOLD {
        return Err(Error::Singular { context, pivot });
    }
    lu.solve(b).ok_or(Error::Singular { context, pivot })
}

pub(crate) fn sup_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub(crate) fn sup_distance(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Maximum absolute row sum.
pub(crate) fn row_sum_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}
