//! Posynomial algebra, condensation, and the GP/LP solvers behind the
//! signomial programming loop.

mod constraint;
mod expr;
mod gp;
mod lp;

pub use constraint::{
    alpha_var, build_mrc_constraint, interference_signomial, phase_condition, power_var, SinrRatio,
};
pub use expr::{condense, Assignment, ExprError, Monomial, Posynomial, Signomial};
pub use gp::{solve_gp, solve_gp_with, GpError, GpOptions, GpProblem, VAR_FLOOR};
pub use lp::{solve_lp, LpConstraint, LpError, Relation};
