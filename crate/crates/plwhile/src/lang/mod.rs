//! Syntax, types and labels of plWhile.

pub mod ast;
pub mod check;
pub mod decls;
pub mod value;

pub use ast::{Command, DistExpr, Expr, LVal, Module, Proc, Ty};
pub use check::{free_vars, guard_check, rw_sets, well_formed, GuardViolation, TypeError};
pub use decls::{Decls, DistBinding, DistDef, FiniteType};
pub use value::{in_r, is_leaked, label_eq, proj, Conf, Elem, Labeled, Origin, Value};
