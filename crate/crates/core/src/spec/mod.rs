//! LTL fragment, finite-trace checking and composite specifications.

mod check;
mod composite;
pub mod lexer;
mod ltl;

pub use check::{check_trace, check_trace_by, satisfaction};
pub use composite::{
    active_signs, compile_objective, state_formula_concept, CompositeSpec, GameObjective, ReachAvoidTemplate, SpecError,
};
pub use ltl::{parse_ltl, LtlFormula, SyntaxError};
