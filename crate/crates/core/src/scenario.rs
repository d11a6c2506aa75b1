//! Scenario files: system, knowledge base, map, objective and run settings.
//!
//! Scenarios are JSON documents (schema in `scenarios/scenario.schema.json`).
//! Map boxes may list fewer coordinates than the state has; the missing
//! trailing dimensions span the whole state range, so a planar box covers
//! every heading.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abstraction::{check_compatible, Abstraction, AbstractionError, InputSemantics};
use crate::dynamics::{ContinuousSystem, VectorField};
use crate::grid::{Grid, HyperRect};
use crate::knowledge::{Interpretation, KnowledgeBase, KnowledgeError, MapRegions, RoleDef, SignRegion};
use crate::spec::{parse_ltl, state_formula_concept, LtlFormula, ReachAvoidTemplate};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}, column {column}: {message}")]
    Json { line: usize, column: usize, message: String },
    #[error("{field}: syntax error at column {column}: {message}")]
    Syntax { field: String, column: usize, message: String },
    #[error("{field}: {message}")]
    Validation { field: String, message: String },
}

impl ScenarioError {
    /// Short machine-readable category.
    pub fn category(&self) -> &'static str {
        match self {
            ScenarioError::Io { .. } => "io",
            ScenarioError::Json { .. } | ScenarioError::Syntax { .. } => "parse",
            ScenarioError::Validation { .. } => "validation",
        }
    }
}

fn invalid(field: impl Into<String>, message: impl ToString) -> ScenarioError {
    ScenarioError::Validation { field: field.into(), message: message.to_string() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    /// `dubins_car`, `integrator` or `stationary`.
    pub model: String,
    pub tau: f64,
    #[serde(default)]
    pub disturbance: Option<HyperRect>,
    pub state_bounds: HyperRect,
    pub input_bounds: HyperRect,
    pub eta_x: Vec<f64>,
    pub eta_u: Vec<f64>,
    pub periodic: Vec<bool>,
    #[serde(default)]
    pub input_semantics: InputSemantics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnowledgeFile {
    pub concepts: Vec<String>,
    #[serde(default)]
    pub roles: BTreeMap<String, RoleDef>,
    #[serde(default)]
    pub tbox: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub system: SystemFile,
    pub knowledge: KnowledgeFile,
    pub map: MapRegions,
    pub objective: String,
    pub initial_state: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    pub max_steps: usize,
}

/// A validated scenario with its derived objects.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub file: ScenarioFile,
    system: ContinuousSystem,
    grid_x: Grid,
    grid_u: Grid,
    kb: KnowledgeBase,
    map: MapRegions,
    objective: LtlFormula,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(|e| ScenarioError::Json {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        Self::from_file(file)
    }

    pub fn from_file(file: ScenarioFile) -> Result<Self, ScenarioError> {
        let (system, grid_x, grid_u) = build_system(&file.system)?;
        let kb = build_kb(&file.knowledge, &file.map)?;
        let map = extend_map(&file.map, &grid_x)?;
        let objective = parse_ltl(&file.objective).map_err(|e| ScenarioError::Syntax {
            field: "objective".into(),
            column: e.column,
            message: e.message,
        })?;
        let template = ReachAvoidTemplate::from_formula(&objective).map_err(|e| invalid("objective", e))?;
        for part in [&template.stay, &template.target] {
            let concept = state_formula_concept(part).map_err(|e| invalid("objective", e))?;
            for name in concept.names() {
                if !kb.is_known(&name) {
                    return Err(invalid("objective", format!("undeclared concept `{name}`")));
                }
            }
        }
        // surfaces region and obligation errors at load time
        Interpretation::assemble(&kb, &map, &grid_x).map_err(|e| invalid(knowledge_field(&e), e))?;
        kb.obligations().map_err(|e| invalid("knowledge.tbox", e))?;
        if file.initial_state.len() != grid_x.dim() {
            return Err(invalid(
                "initial_state",
                format!("expected {} coordinates, got {}", grid_x.dim(), file.initial_state.len()),
            ));
        }
        if file.max_steps == 0 {
            return Err(invalid("max_steps", "must be positive"));
        }
        Ok(Self { file, system, grid_x, grid_u, kb, map, objective })
    }

    pub fn system(&self) -> &ContinuousSystem {
        &self.system
    }

    pub fn grid_x(&self) -> &Grid {
        &self.grid_x
    }

    pub fn grid_u(&self) -> &Grid {
        &self.grid_u
    }

    pub fn input_semantics(&self) -> InputSemantics {
        self.file.system.input_semantics
    }

    pub fn knowledge_base(&self) -> &KnowledgeBase {
        &self.kb
    }

    /// Map with every box extended to the full state dimension.
    pub fn map(&self) -> &MapRegions {
        &self.map
    }

    pub fn objective(&self) -> &LtlFormula {
        &self.objective
    }

    pub fn interpretation(&self) -> Result<Interpretation, KnowledgeError> {
        Interpretation::assemble(&self.kb, &self.map, &self.grid_x)
    }

    pub fn build_abstraction(&self) -> Result<Abstraction, AbstractionError> {
        Abstraction::build(&self.system, &self.grid_x, &self.grid_u, self.input_semantics())
    }

    /// Whether a loaded abstraction was built for this scenario's system and grids.
    pub fn matches_abstraction(&self, abs: &Abstraction) -> bool {
        abs.matches(&self.system, &self.grid_x, &self.grid_u, self.input_semantics())
    }
}

fn knowledge_field(e: &KnowledgeError) -> String {
    match e {
        KnowledgeError::InvalidRegion { name, .. } => format!("map.{name}"),
        _ => "map".into(),
    }
}

fn build_system(s: &SystemFile) -> Result<(ContinuousSystem, Grid, Grid), ScenarioError> {
    let n = s.state_bounds.dim();
    let field = match s.model.as_str() {
        "dubins_car" => VectorField::DubinsCar,
        "integrator" => VectorField::Integrator { dim: n },
        "stationary" => VectorField::Stationary { dim: n },
        other => return Err(invalid("system.model", format!("unknown model `{other}`"))),
    };
    let disturbance = s.disturbance.clone().unwrap_or(HyperRect { lower: vec![0.0; n], upper: vec![0.0; n] });
    let system = ContinuousSystem::with_disturbance(field, s.tau, disturbance).map_err(|e| {
        let field = match e {
            crate::dynamics::DynamicsError::InvalidTau(_) => "system.tau",
            _ => "system.disturbance",
        };
        invalid(field, e)
    })?;
    s.state_bounds.validate().map_err(|e| invalid("system.state_bounds", e))?;
    s.input_bounds.validate().map_err(|e| invalid("system.input_bounds", e))?;
    if s.eta_x.len() != n {
        return Err(invalid("system.eta_x", format!("expected {n} entries, got {}", s.eta_x.len())));
    }
    if s.periodic.len() != n {
        return Err(invalid("system.periodic", format!("expected {n} entries, got {}", s.periodic.len())));
    }
    if s.eta_u.len() != s.input_bounds.dim() {
        return Err(invalid("system.eta_u", format!("expected {} entries, got {}", s.input_bounds.dim(), s.eta_u.len())));
    }
    let grid_x = Grid::new(s.state_bounds.clone(), s.eta_x.clone(), s.periodic.clone())
        .map_err(|e| invalid("system.eta_x", e))?;
    let m = s.input_bounds.dim();
    let grid_u = Grid::new(s.input_bounds.clone(), s.eta_u.clone(), vec![false; m]).map_err(|e| invalid("system.eta_u", e))?;
    check_compatible(&system, &grid_x, &grid_u).map_err(|e| invalid("system", e))?;
    Ok((system, grid_x, grid_u))
}

fn build_kb(k: &KnowledgeFile, map: &MapRegions) -> Result<KnowledgeBase, ScenarioError> {
    let mut kb = KnowledgeBase::new();
    for c in &k.concepts {
        kb.declare_concept(c).map_err(|e| invalid("knowledge.concepts", e))?;
    }
    for s in &map.signs {
        kb.declare_concept(&s.street_concept()).map_err(|e| invalid(format!("map.signs.{}", s.name), e))?;
    }
    for (name, def) in &k.roles {
        kb.declare_role(name, def.clone()).map_err(|e| invalid(format!("knowledge.roles.{name}"), e))?;
    }
    for (i, text) in k.tbox.iter().enumerate() {
        let field = format!("knowledge.tbox[{i}]");
        match kb.add_axiom_text(text) {
            Ok(()) => {}
            Err(KnowledgeError::Syntax { error, .. }) => {
                return Err(ScenarioError::Syntax { field, column: error.column, message: error.message })
            }
            Err(e) => return Err(invalid(field, e)),
        }
    }
    Ok(kb)
}

fn extend_box(b: &HyperRect, bounds: &HyperRect, field: &str) -> Result<HyperRect, ScenarioError> {
    let n = bounds.dim();
    if b.lower.len() != b.upper.len() || b.lower.len() > n || b.lower.is_empty() {
        return Err(invalid(field, format!("box must have between 1 and {n} coordinates in lower and upper")));
    }
    let mut out = b.clone();
    for d in b.lower.len()..n {
        out.lower.push(bounds.lower[d]);
        out.upper.push(bounds.upper[d]);
    }
    out.validate().map_err(|e| invalid(field, e))?;
    Ok(out)
}

fn extend_map(map: &MapRegions, grid: &Grid) -> Result<MapRegions, ScenarioError> {
    let bounds = grid.bounds();
    let mut out = MapRegions::default();
    for (name, boxes) in &map.concepts {
        let field = format!("map.concepts.{name}");
        let ext = boxes.iter().map(|b| extend_box(b, bounds, &field)).collect::<Result<Vec<_>, _>>()?;
        for b in &ext {
            if !b.intersects(bounds) {
                return Err(invalid(field, "region does not intersect the state bounds"));
            }
        }
        out.concepts.insert(name.clone(), ext);
    }
    for s in &map.signs {
        let field = format!("map.signs.{}", s.name);
        let ext = |boxes: &[HyperRect]| -> Result<Vec<HyperRect>, ScenarioError> {
            let v = boxes.iter().map(|b| extend_box(b, bounds, &field)).collect::<Result<Vec<_>, _>>()?;
            if v.is_empty() || v.iter().any(|b| !b.intersects(bounds)) {
                return Err(invalid(field.clone(), "sign and street boxes must be nonempty and intersect the state bounds"));
            }
            Ok(v)
        };
        out.signs.push(SignRegion { name: s.name.clone(), concept: s.concept.clone(), at: ext(&s.at)?, street: ext(&s.street)? });
    }
    Ok(out)
}
