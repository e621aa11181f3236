//! Precoder design by alternating non-monotone gradient projection.
//!
//! For fixed MMSE combiners the sum SINR `f(v_1, v_2) = γ_1 + γ_2` is
//! maximised over the convex set `{‖v_k‖² ≤ P_k, [Φ_k]_mm ≤ ε_{k,m}}` by
//! projected gradient steps with an Armijo-selected correction step. The
//! outer loop alternates combiner and precoder updates and accepts
//! temporary decreases of the objective, rolling back to the best iterate of
//! a sliding window when that best iterate is about to leave the window.

mod altnmgap;
mod armijo;
mod constraints;
mod gradient;
mod projection;

pub use altnmgap::{altnmgap, initial_precoder, OptTrace, OptimizerConfig, OptimizerOutput};
pub use armijo::{armijo_step, ArmijoOutcome};
pub use constraints::{build_constraint_mats, ConstraintSet};
pub use gradient::{node_objective, sum_sinr, sum_sinr_gradient};
pub use projection::{project_feasible, project_feasible_warm, Projection, ProjectionOptions};
