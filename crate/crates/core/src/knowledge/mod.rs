//! ALC knowledge bases evaluated over the grid interpretation.
//!
//! The domain is the set of state cells. Atomic concept extents come from map
//! regions and ABox assertions, defined concepts are evaluated from their TBox
//! definitions, and temporally defined concepts get their extent from
//! synthesis (the cells from which the temporal property can be enforced).

mod concept;
mod interp;
mod kb;
pub mod proximity;

use thiserror::Error;

use crate::grid::CellId;
use crate::spec::SyntaxError;

pub use concept::{parse_concept, Concept};
pub use interp::{eval_concept, Interpretation, MapRegions, SignInstance, SignRegion};
pub use kb::{parse_axiom, ABoxAssertion, KnowledgeBase, Obligation, RoleDef, TBoxAxiom};
pub use proximity::{proximity, ProximityGeometry};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KnowledgeError {
    #[error("undeclared name `{0}`")]
    UndeclaredName(String),
    #[error("unknown role `{0}`")]
    UnknownRole(String),
    #[error("`{0}` is already declared or defined")]
    DuplicateName(String),
    #[error("`{0}` is not a valid name")]
    InvalidName(String),
    #[error("definition of `{0}` refers to itself")]
    CyclicDefinition(String),
    #[error("unsupported temporal axiom `{0}`: expected `Name == G (Trigger -> G !Watched)` with `Trigger == exists role.Watched`")]
    UnsupportedAxiom(String),
    #[error("invalid role: {0}")]
    InvalidRole(String),
    #[error("cell {0} is not in the domain")]
    InvalidInstance(CellId),
    #[error("no extent available yet for temporally defined `{0}`")]
    MissingExtent(String),
    #[error("invalid region for `{name}`: {reason}")]
    InvalidRegion { name: String, reason: String },
    #[error("in `{text}`: {error}")]
    Syntax { text: String, error: SyntaxError },
}
