//! Knowledge-aware controller synthesis for continuous-time systems.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`grid`] quantizes the state and input boxes and [`abstraction`] builds a
//!    finite transition system over the resulting cells, using the growth-bound
//!    reachability over-approximation from [`dynamics`].
//! 2. [`knowledge`] evaluates an ALC knowledge base (concepts, roles, TBox/ABox)
//!    over the single grid interpretation induced by a scenario map.
//! 3. [`spec`] parses LTL, folds the mission objective and the activated
//!    knowledge-base obligations into a reach-avoid game, and [`synthesis`]
//!    solves that game with controlled-predecessor fixpoints.
//! 4. [`runtime`] closes the loop: sense, update the composite specification,
//!    re-synthesize on change, apply the controller and integrate the dynamics.
//!
//! [`audit`] is an independent checker for logged traces that only looks at the
//! trace and the scenario.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod abstraction;
pub mod audit;
pub mod cellset;
pub mod dynamics;
pub mod grid;
pub mod knowledge;
pub mod runtime;
pub mod scenario;
pub mod spec;
pub mod synthesis;
pub mod trace;

pub use abstraction::{Abstraction, AbstractionStats};
pub use cellset::CellSet;
pub use dynamics::{ContinuousSystem, ReachSet, VectorField};
pub use grid::{CellId, Grid, GridError, HyperRect};






pub use knowledge::{Concept, Interpretation, KnowledgeBase};
pub use runtime::{run_closed_loop, RunResult, SensorState};
pub use scenario::Scenario;
pub use spec::{CompositeSpec, GameObjective, LtlFormula};
pub use synthesis::{Controller, Solver};
pub use trace::{Outcome, StepRecord, Trace};
