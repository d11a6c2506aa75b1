//! Knowledge bases: declarations, TBox and ABox.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::concept::{parse_concept, Concept, KEYWORDS};
use super::KnowledgeError;
use crate::grid::CellId;
use crate::spec::lexer::SyntaxError;
use crate::spec::{parse_ltl, LtlFormula};

/// How a role's extent is obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RoleDef {
    /// Cell pair is related when the planar boxes are closer than `range` and the
    /// source heading points toward the target cell.
    Proximity { range: f64 },
    /// Extent given by ABox role assertions.
    Explicit,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TBoxAxiom {
    Inclusion(Concept, Concept),
    Equivalence(Concept, Concept),
    /// `name == formula` with an LTL formula over concept names.
    Temporal { name: String, formula: LtlFormula },
}

impl fmt::Display for TBoxAxiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TBoxAxiom::Inclusion(c, d) => write!(f, "{c} <= {d}"),
            TBoxAxiom::Equivalence(c, d) => write!(f, "{c} == {d}"),
            TBoxAxiom::Temporal { name, formula } => write!(f, "{name} == {formula}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ABoxAssertion {
    Concept { instance: CellId, concept: String },
    Role { from: CellId, to: CellId, role: String },
}

/// Parses `C == D`, `C <= D` or `Name == <LTL formula>`.
///
/// The right-hand side of `==` is read as a concept when possible and as an LTL
/// formula otherwise. Error columns refer to the whole axiom text.
pub fn parse_axiom(text: &str) -> Result<TBoxAxiom, SyntaxError> {
    let ops = [("==", true), ("≡", true), ("<=", false), ("⊑", false)];
    let found = ops
        .iter()
        .filter_map(|&(op, equiv)| text.find(op).map(|at| (at, op, equiv)))
        .min_by_key(|&(at, ..)| at);
    let Some((at, op, equiv)) = found else {
        return Err(SyntaxError::new(text.chars().count() + 1, "expected `==` or `<=` in axiom"));
    };
    let lhs_text = &text[..at];
    let rhs_text = &text[at + op.len()..];
    let rhs_offset = text[..at + op.len()].chars().count();
    let shift = |e: SyntaxError| SyntaxError::new(e.column + rhs_offset, e.message);

    let lhs = parse_concept(lhs_text)?;
    let concept_rhs = parse_concept(rhs_text);
    if let Ok(rhs) = concept_rhs {
        return Ok(if equiv { TBoxAxiom::Equivalence(lhs, rhs) } else { TBoxAxiom::Inclusion(lhs, rhs) });
    }
    let concept_err = concept_rhs.unwrap_err();
    let formula = match parse_ltl(rhs_text) {
        Ok(f) => f,
        Err(ltl_err) => {
            let err = if ltl_err.column >= concept_err.column { ltl_err } else { concept_err };
            return Err(shift(err));
        }
    };
    match (&lhs, equiv) {
        (Concept::Atomic(name), true) => Ok(TBoxAxiom::Temporal { name: name.clone(), formula }),
        _ => Err(SyntaxError::new(1, "a temporal axiom needs the form `Name == formula`")),
    }
}

/// Shape `G (Trigger -> G !Watched)` of a temporal axiom together with the
/// definition `Trigger == exists role.Watched`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Obligation {
    /// Name defined by the temporal axiom.
    pub name: String,
    pub trigger: String,
    pub watched: String,
    pub role: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct KnowledgeBase {
    atomic: BTreeSet<String>,
    roles: BTreeMap<String, RoleDef>,
    tbox: Vec<TBoxAxiom>,
    abox: Vec<ABoxAssertion>,
}

impl KnowledgeBase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare_concept(&mut self, name: &str) -> Result<(), KnowledgeError> {
        check_name(name)?;
        if self.roles.contains_key(name) {
            return Err(KnowledgeError::DuplicateName(name.to_string()));
        }
        self.atomic.insert(name.to_string());
        Ok(())
    }

    pub fn declare_role(&mut self, name: &str, def: RoleDef) -> Result<(), KnowledgeError> {
        check_name(name)?;
        if self.atomic.contains(name) || self.roles.contains_key(name) {
            return Err(KnowledgeError::DuplicateName(name.to_string()));
        }
        if let RoleDef::Proximity { range } = def {
            if !(range > 0.0 && range.is_finite()) {
                return Err(KnowledgeError::InvalidRole(format!("{name}: range must be positive, got {range}")));
            }
        }
        self.roles.insert(name.to_string(), def);
        Ok(())
    }

    /// Adds an axiom after checking that it only uses declared or defined names
    /// and does not make a definition circular.
    pub fn add_axiom(&mut self, axiom: TBoxAxiom) -> Result<(), KnowledgeError> {
        let mut used = BTreeSet::new();
        let mut roles = BTreeSet::new();
        match &axiom {
            TBoxAxiom::Inclusion(c, d) | TBoxAxiom::Equivalence(c, d) => {
                for x in [c, d] {
                    used.extend(x.names());
                    roles.extend(x.roles());
                }
            }
            TBoxAxiom::Temporal { name, formula } => {
                used.insert(name.clone());
                used.extend(formula.props());
            }
        }
        if let Some(name) = self.defined_name(&axiom) {
            if self.atomic.contains(&name) || self.definition(&name).is_some() || self.temporal(&name).is_some() {
                return Err(KnowledgeError::DuplicateName(name));
            }
            used.remove(&name);
            if self.depends_on(&axiom, &name) {
                return Err(KnowledgeError::CyclicDefinition(name));
            }
        }
        for n in used {
            if !self.is_known(&n) {
                return Err(KnowledgeError::UndeclaredName(n));
            }
        }
        for r in roles {
            if !self.roles.contains_key(&r) {
                return Err(KnowledgeError::UnknownRole(r));
            }
        }
        self.tbox.push(axiom);
        Ok(())
    }

    pub fn add_axiom_text(&mut self, text: &str) -> Result<(), KnowledgeError> {
        let axiom = parse_axiom(text).map_err(|e| KnowledgeError::Syntax { text: text.to_string(), error: e })?;
        self.add_axiom(axiom)
    }

    pub fn assert_concept(&mut self, instance: CellId, concept: &str) -> Result<(), KnowledgeError> {
        if !self.atomic.contains(concept) {
            return Err(KnowledgeError::UndeclaredName(concept.to_string()));
        }
        self.abox.push(ABoxAssertion::Concept { instance, concept: concept.to_string() });
        Ok(())
    }

    pub fn assert_role(&mut self, from: CellId, to: CellId, role: &str) -> Result<(), KnowledgeError> {
        match self.roles.get(role) {
            Some(RoleDef::Explicit) => {}
            Some(_) => return Err(KnowledgeError::InvalidRole(format!("{role} is computed, not asserted"))),
            None => return Err(KnowledgeError::UnknownRole(role.to_string())),
        }
        self.abox.push(ABoxAssertion::Role { from, to, role: role.to_string() });
        Ok(())
    }

    pub fn atomic_concepts(&self) -> &BTreeSet<String> {
        &self.atomic
    }

    pub fn roles(&self) -> &BTreeMap<String, RoleDef> {
        &self.roles
    }

    pub fn tbox(&self) -> &[TBoxAxiom] {
        &self.tbox
    }

    pub fn abox(&self) -> &[ABoxAssertion] {
        &self.abox
    }

    /// Atomic, concept-defined or temporally defined name.
    pub fn is_known(&self, name: &str) -> bool {
        self.atomic.contains(name) || self.definition(name).is_some() || self.temporal(name).is_some()
    }

    /// Right-hand side of `name == C` for a non-temporal definition.
    pub fn definition(&self, name: &str) -> Option<&Concept> {
        self.tbox.iter().find_map(|a| match a {
            TBoxAxiom::Equivalence(Concept::Atomic(n), rhs) if n == name && !self.atomic.contains(n) => Some(rhs),
            _ => None,
        })
    }

    pub fn temporal(&self, name: &str) -> Option<&LtlFormula> {
        self.tbox.iter().find_map(|a| match a {
            TBoxAxiom::Temporal { name: n, formula } if n == name => Some(formula),
            _ => None,
        })
    }

    /// Names introduced by definitions, in axiom order.
    pub fn defined_names(&self) -> Vec<String> {
        self.tbox.iter().filter_map(|a| self.defined_name(a)).collect()
    }

    fn defined_name(&self, axiom: &TBoxAxiom) -> Option<String> {
        match axiom {
            TBoxAxiom::Equivalence(Concept::Atomic(n), _) if !self.atomic.contains(n) => Some(n.clone()),
            TBoxAxiom::Temporal { name, .. } => Some(name.clone()),
            _ => None,
        }
    }

    fn depends_on(&self, axiom: &TBoxAxiom, target: &str) -> bool {
        let mut stack: Vec<String> = match axiom {
            TBoxAxiom::Equivalence(_, rhs) => rhs.names().into_iter().collect(),
            TBoxAxiom::Temporal { formula, .. } => formula.props().into_iter().collect(),
            TBoxAxiom::Inclusion(..) => return false,
        };
        let mut seen = BTreeSet::new();
        while let Some(n) = stack.pop() {
            if n == target {
                return true;
            }
            if !seen.insert(n.clone()) {
                continue;
            }
            if let Some(c) = self.definition(&n) {
                stack.extend(c.names());
            }
            if let Some(f) = self.temporal(&n) {
                stack.extend(f.props());
            }
        }
        false
    }

    /// Temporal axioms of the form `G (Trigger -> G !Watched)` where `Trigger`
    /// is defined as `exists role.Watched`.
    ///
    /// Any other temporal axiom is reported as unsupported, since synthesis only
    /// handles avoidance obligations.
    pub fn obligations(&self) -> Result<Vec<Obligation>, KnowledgeError> {
        let mut out = Vec::new();
        for axiom in &self.tbox {
            let TBoxAxiom::Temporal { name, formula } = axiom else { continue };
            let unsupported = || KnowledgeError::UnsupportedAxiom(axiom.to_string());
            let (trigger, watched) = match formula {
                LtlFormula::Always(inner) => match inner.as_ref() {
                    LtlFormula::Implies(t, rest) => match (t.as_ref(), rest.as_ref()) {
                        (LtlFormula::Prop(t), LtlFormula::Always(neg)) => match neg.as_ref() {
                            LtlFormula::Not(w) => match w.as_ref() {
                                LtlFormula::Prop(w) => (t.clone(), w.clone()),
                                _ => return Err(unsupported()),
                            },
                            _ => return Err(unsupported()),
                        },
                        _ => return Err(unsupported()),
                    },
                    _ => return Err(unsupported()),
                },
                _ => return Err(unsupported()),
            };
            let role = match self.definition(&trigger) {
                Some(Concept::Exists(role, body)) if **body == Concept::Atomic(watched.clone()) => role.clone(),
                _ => return Err(unsupported()),
            };
            if !self.atomic.contains(&watched) {
                return Err(unsupported());
            }
            out.push(Obligation { name: name.clone(), trigger, watched, role });
        }
        Ok(out)
    }
}

fn check_name(name: &str) -> Result<(), KnowledgeError> {
    let mut chars = name.chars();
    let ok_start = chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_');
    let ok_rest = chars.all(|c| c.is_ascii_alphanumeric() || c == '_');
    let reserved = KEYWORDS.contains(&name) || ["X", "F", "G", "U", "true", "false"].contains(&name);
    if ok_start && ok_rest && !reserved {
        Ok(())
    } else {
        Err(KnowledgeError::InvalidName(name.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn road_kb() -> KnowledgeBase {
        let mut kb = KnowledgeBase::new();
        for c in ["Target", "Obstacle", "NoEntrySign"] {
            kb.declare_concept(c).unwrap();
        }
        kb.declare_role("Proximity", RoleDef::Proximity { range: 1.5 }).unwrap();
        kb.add_axiom_text("NoEntrySignDetected == exists Proximity.NoEntrySign").unwrap();
        kb.add_axiom_text("NoEntrySignRespected == G (NoEntrySignDetected -> G !NoEntrySign)").unwrap();
        kb
    }

    #[test]
    fn parses_axiom_kinds() {
        assert!(matches!(parse_axiom("A <= B | C").unwrap(), TBoxAxiom::Inclusion(..)));
        assert!(matches!(parse_axiom("A ≡ ∃r.B").unwrap(), TBoxAxiom::Equivalence(..)));
        let t = parse_axiom("R == G (D -> G !S)").unwrap();
        assert!(matches!(t, TBoxAxiom::Temporal { ref name, .. } if name == "R"));
    }

    #[test]
    fn axiom_errors_point_into_the_whole_text() {
        let e = parse_axiom("A == B & ").unwrap_err();
        assert_eq!(e.column, 10);
        assert!(parse_axiom("A B").is_err());
        assert!(parse_axiom("A & B == G C").is_err());
    }

    #[test]
    fn extracts_the_avoidance_obligation() {
        let kb = road_kb();
        let obs = kb.obligations().unwrap();
        assert_eq!(
            obs,
            vec![Obligation {
                name: "NoEntrySignRespected".into(),
                trigger: "NoEntrySignDetected".into(),
                watched: "NoEntrySign".into(),
                role: "Proximity".into(),
            }]
        );
        assert_eq!(kb.defined_names(), vec!["NoEntrySignDetected", "NoEntrySignRespected"]);
    }

    #[test]
    fn rejects_undeclared_and_circular_names() {
        let mut kb = road_kb();
        assert!(matches!(kb.add_axiom_text("Foo == Bar"), Err(KnowledgeError::UndeclaredName(n)) if n == "Bar"));
        assert!(matches!(kb.add_axiom_text("Foo == exists Near.Target"), Err(KnowledgeError::UnknownRole(_))));
        assert!(matches!(kb.add_axiom_text("Foo == !Foo"), Err(KnowledgeError::CyclicDefinition(_))));
        assert!(matches!(
            kb.add_axiom_text("NoEntrySignDetected == Target"),
            Err(KnowledgeError::DuplicateName(_))
        ));
        assert!(matches!(kb.declare_concept("exists"), Err(KnowledgeError::InvalidName(_))));
    }

    #[test]
    fn unsupported_temporal_shape_is_reported() {
        let mut kb = road_kb();
        kb.add_axiom_text("Later == F Target").unwrap();
        assert!(matches!(kb.obligations(), Err(KnowledgeError::UnsupportedAxiom(_))));
    }
}
