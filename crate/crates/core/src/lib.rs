//! Clearing vectors and equity vectors for interbank networks with
//! cross-holdings and default charges.
//!
//! A network of `n` banks is described by external cash `e`, a nominal
//! liability matrix `L`, a cross-holding matrix `Θ` and three recovery
//! fractions `α`, `β`, `γ` applied to cash, collected debts and share values
//! when a bank defaults. A *clearing pair* `(p, V)` is a payment vector and
//! an equity vector that respect limited liability, absolute priority and
//! equity evaluation simultaneously.
//!
//! The crate offers several independent routes to clearing pairs:
//!
//! - [`fixpoint`]: extremal fixed points of the regime maps `F_b` for every
//!   binary regime vector `b`, and the full clearing set as their union.
//! - [`milp`]: the maximal and minimal clearing pairs as optima of two
//!   mixed integer-linear programs, solved by a built-in bounded-variable
//!   simplex and branch-and-bound.
//! - [`gauss`]: a dimension-reducing elimination for the maximal pair when
//!   all recovery fractions coincide.
//!
//! [`equity`] solves the equity fixed point `V = (c + B'V)^+` that all of the
//! above depend on, and [`model`] holds the network type, the asset maps and
//! the axiom checker used to cross-validate every solver.

pub mod equity;
pub mod error;
pub mod fixpoint;
pub mod gauss;
mod linalg;
pub mod milp;
pub mod model;
mod obstacle;

pub use error::{Error, Result};
pub use model::{
    assets_x, assets_y, verify_clearing_pair, AxiomReport, Charges, ClearingPair, ClearingSystem,
    FinancialNetwork, DEFAULT_TOLERANCE,
};
