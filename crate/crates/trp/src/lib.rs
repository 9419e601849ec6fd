//! Global solution and Lagrangian duality analysis for the generalized trace
//! ratio problem
//!
//! ```text
//! max  tr(G XᵀB X) / tr(G XᵀA X)   s.t.  XᵀX = I_p,
//! ```
//!
//! with `A ≻ 0` (n×n), `B` symmetric (n×n) and `G ≻ 0` (p×p).
//!
//! The crate computes the global optimum (Dinkelbach iteration over a
//! closed-form inner trace maximizer), the optimal values of the Lagrangian
//! duals of the four formulations (plain, with the redundant `XXᵀ ⪯ I_n`
//! constraint, scaled, and redundant+scaled), constructively decides the
//! matrix S-lemma dichotomy with machine-checkable certificates, and
//! diagnoses when the duality gap closes.

pub mod cli;
pub mod combinatorics;
pub mod duality;
mod error;
pub mod linalg;
pub mod lp;
pub mod model;
pub mod sampling;
pub mod slemma;
pub mod solver;

pub use error::{Error, Result};
