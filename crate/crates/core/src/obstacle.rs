//! Piecewise-linear monotone fixed points `z = Φ(z)` where
//! `Φ_i(z) = (Az + c)_i` on linear rows and `max((Az + c)_i, 0)` on clipped
//! rows, for `A ≥ 0` with `I - A` an M-matrix.
//!
//! Solved by policy iteration: freeze the set of clipped rows that are
//! positive, solve the resulting linear system exactly, recompute the set.
//! For M-matrices the iterates are monotone after the first step and the
//! policy settles after at most `n + 1` solves.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::lu_solve;

pub(crate) struct ClippedSystem<'a> {
    pub a: &'a DMatrix<f64>,
    pub c: &'a DVector<f64>,
    pub clipped: &'a [bool],
}

impl ClippedSystem<'_> {
    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn apply(&self, z: &DVector<f64>) -> DVector<f64> {
        let mut w = self.a * z + self.c;
        for (wi, &clip) in w.iter_mut().zip(self.clipped) {
            if clip && *wi < 0.0 {
                *wi = 0.0;
            }
        }
        w
    }

    /// Plain fixed-point sweeps `z ← Φ(z)` until the sup-norm change drops
    /// to `stop` or `max_sweeps` is reached. Returns the last iterate.
    pub fn sweep(&self, mut z: DVector<f64>, stop: f64, max_sweeps: usize) -> DVector<f64> {
        for _ in 0..max_sweeps {
            let next = self.apply(&z);
            let change = next
                .iter()
                .zip(z.iter())
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            z = next;
            if change <= stop {
                break;
            }
        }
        z
    }

    /// Exact solution by policy iteration started from `z`.
    pub fn polish(&self, mut z: DVector<f64>, context: &'static str) -> Result<DVector<f64>> {
        let n = self.dim();
        let mut policy: Option<Vec<bool>> = None;
        for _ in 0..(n + 4) {
            let w = self.a * &z + self.c;
            let active: Vec<bool> = w
                .iter()
                .zip(self.clipped)
                .map(|(&wi, &clip)| !clip || wi > 0.0)
                .collect();
            if policy.as_ref() == Some(&active) {
                return Ok(z);
            }
            let mut m = -self.a.clone();
            let mut rhs = self.c.clone();
            for i in 0..n {
                if active[i] {
                    m[(i, i)] += 1.0;
                } else {
                    m.row_mut(i).fill(0.0);
                    m[(i, i)] = 1.0;
                    rhs[i] = 0.0;
                }
            }
            z = lu_solve(m, &rhs, context)?;
            policy = Some(active);
        }
        Err(Error::NonConvergence {
            context,
            iterations: n + 4,
        })
    }
}
