//! Composite specifications: the fixed mission objective conjoined with the
//! obligations activated by what the vehicle has sensed so far.

use thiserror::Error;

use super::ltl::{LtlFormula, SyntaxError};
use crate::cellset::CellSet;
use crate::knowledge::{Concept, Interpretation, KnowledgeError, Obligation};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("objective `{0}` is not of the form `stay U target` or `F target`")]
    NotReachAvoid(String),
    #[error("`{0}` must be a state formula (no temporal operators)")]
    NotPropositional(String),
    #[error("target is unreachable: all {0} target cells are in the avoid set")]
    TargetUnreachable(usize),
    #[error("{0} target cells are also avoid cells")]
    TargetAvoidOverlap(usize),
    #[error(transparent)]
    Knowledge(#[from] KnowledgeError),
}

/// Target and avoid cells of a reach-avoid game.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameObjective {
    pub target: CellSet,
    pub avoid: CellSet,
}

impl GameObjective {
    /// Fails if the sets share a cell.
    pub fn new(target: CellSet, avoid: CellSet) -> Result<Self, SpecError> {
        if !target.is_empty() && target.is_subset(&avoid) {
            return Err(SpecError::TargetUnreachable(target.len()));
        }
        let shared = target.intersection(&avoid).len();
        if shared > 0 {
            return Err(SpecError::TargetAvoidOverlap(shared));
        }
        Ok(Self { target, avoid })
    }
}

/// Objective `stay U target` with state formulas on both sides.
#[derive(Debug, Clone, PartialEq)]
pub struct ReachAvoidTemplate {
    pub stay: LtlFormula,
    pub target: LtlFormula,
}

impl ReachAvoidTemplate {
    pub fn from_formula(phi: &LtlFormula) -> Result<Self, SpecError> {
        let (stay, target) = match phi {
            LtlFormula::Until(a, b) => ((**a).clone(), (**b).clone()),
            LtlFormula::Eventually(b) => (LtlFormula::True, (**b).clone()),
            _ => return Err(SpecError::NotReachAvoid(phi.to_string())),
        };
        for part in [&stay, &target] {
            if part.is_temporal() {
                return Err(SpecError::NotPropositional(part.to_string()));
            }
        }
        Ok(Self { stay, target })
    }

    pub fn to_formula(&self) -> LtlFormula {
        LtlFormula::until(self.stay.clone(), self.target.clone())
    }
}

/// Concept with the same extent as a state formula.
pub fn state_formula_concept(phi: &LtlFormula) -> Result<Concept, SpecError> {
    let c = |f: &LtlFormula| state_formula_concept(f);
    Ok(match phi {
        LtlFormula::True => Concept::Top,
        LtlFormula::Prop(p) => Concept::atomic(p),
        LtlFormula::Not(a) => Concept::not(c(a)?),
        LtlFormula::And(a, b) => Concept::and(c(a)?, c(b)?),
        LtlFormula::Or(a, b) => Concept::or(c(a)?, c(b)?),
        LtlFormula::Implies(a, b) => Concept::or(Concept::not(c(a)?), c(b)?),
        _ => return Err(SpecError::NotPropositional(phi.to_string())),
    })
}

/// Indices of signs that have at least one known cell and are watched by an
/// obligation, in map order.
pub fn active_signs(interp: &Interpretation, obligations: &[Obligation], known_signs: &CellSet) -> Vec<usize> {
    interp
        .signs()
        .iter()
        .enumerate()
        .filter(|(_, s)| obligations.iter().any(|o| o.watched == s.concept) && !s.cells.is_disjoint(known_signs))
        .map(|(i, _)| i)
        .collect()
}

/// Game for `objective` with the obligations of the known signs folded into the
/// avoid set: target is the extent of the target formula, avoid is the extent
/// of the negated stay formula plus the street of every active sign.
pub fn compile_objective(
    template: &ReachAvoidTemplate,
    interp: &Interpretation,
    obligations: &[Obligation],
    known_signs: &CellSet,
) -> Result<GameObjective, SpecError> {
    let target = interp.eval(&state_formula_concept(&template.target)?)?;
    let mut avoid = interp.eval(&state_formula_concept(&template.stay)?)?.complement();
    for i in active_signs(interp, obligations, known_signs) {
        avoid.union_with(&interp.signs()[i].street);
    }
    GameObjective::new(target, avoid)
}

/// `kb_part & objective`, with the game derived from both.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeSpec {
    pub objective: LtlFormula,
    pub kb_part: LtlFormula,
    pub game: GameObjective,
    template: ReachAvoidTemplate,
    obligations: Vec<Obligation>,
}

impl CompositeSpec {
    /// Composite specification before anything has been sensed.
    pub fn new(objective: LtlFormula, interp: &Interpretation) -> Result<Self, SpecError> {
        let template = ReachAvoidTemplate::from_formula(&objective)?;
        let obligations = interp.kb().obligations()?;
        let none = CellSet::empty(interp.domain_len());
        let game = compile_objective(&template, interp, &obligations, &none)?;
        Ok(Self { objective, kb_part: LtlFormula::True, game, template, obligations })
    }

    /// Re-derives the knowledge-base part and the game for `known_signs`.
    pub fn update(&mut self, interp: &Interpretation, known_signs: &CellSet) -> Result<(), SpecError> {
        let game = compile_objective(&self.template, interp, &self.obligations, known_signs)?;
        let parts = active_signs(interp, &self.obligations, known_signs)
            .into_iter()
            .map(|i| LtlFormula::always(LtlFormula::not(LtlFormula::prop(&interp.signs()[i].street_concept))));
        self.kb_part = LtlFormula::conjunction(parts);
        self.game = game;
        Ok(())
    }

    pub fn template(&self) -> &ReachAvoidTemplate {
        &self.template
    }

    pub fn obligations(&self) -> &[Obligation] {
        &self.obligations
    }

    /// The full composite formula `kb_part & objective`.
    pub fn formula(&self) -> LtlFormula {
        match self.kb_part {
            LtlFormula::True => self.objective.clone(),
            _ => LtlFormula::and(self.kb_part.clone(), self.objective.clone()),
        }
    }
}
