//! Probabilistic relational reasoning over finite memories.

pub mod assertion;
pub mod goal;
pub mod lift;
pub mod tactics;

pub use assertion::{holds, subst, wp_assign, Assertion, RelOp, Side};
pub use goal::{discharge, Counterexample, Discharge, RelGoal};
pub use lift::lift_check;
pub use tactics::{apply_tactic, Tactic, TacticError};
