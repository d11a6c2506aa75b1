//! The grid interpretation of a knowledge base.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::concept::Concept;
use super::kb::{ABoxAssertion, KnowledgeBase, RoleDef};
use super::proximity::ProximityGeometry;
use super::KnowledgeError;
use crate::cellset::CellSet;
use crate::grid::{CellId, Grid, HyperRect};

/// A sign on the map together with the street region it governs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignRegion {
    pub name: String,
    /// Concept the sign cells belong to.
    #[serde(default = "default_sign_concept")]
    pub concept: String,
    pub at: Vec<HyperRect>,
    pub street: Vec<HyperRect>,
}

pub(crate) fn default_sign_concept() -> String {
    "NoEntrySign".to_string()
}

impl SignRegion {
    /// Name of the atomic concept holding the street cells.
    pub fn street_concept(&self) -> String {
        street_concept(&self.name)
    }
}

pub fn street_concept(sign: &str) -> String {
    format!("Street_{sign}")
}

/// Map content: boxes per atomic concept plus signs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MapRegions {
    #[serde(default)]
    pub concepts: BTreeMap<String, Vec<HyperRect>>,
    #[serde(default)]
    pub signs: Vec<SignRegion>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignInstance {
    pub name: String,
    pub concept: String,
    pub cells: CellSet,
    pub street_concept: String,
    pub street: CellSet,
}

#[derive(Debug, Clone)]
enum RoleExtent {
    Proximity(ProximityGeometry),
    /// Successor lists per source cell.
    Explicit(Vec<Vec<CellId>>),
}

#[derive(Debug, Clone)]
pub struct Interpretation {
    kb: KnowledgeBase,
    grid: Grid,
    /// Atomic extents and cached extents of defined concepts.
    extents: BTreeMap<String, CellSet>,
    temporal: BTreeMap<String, CellSet>,
    roles: BTreeMap<String, RoleExtent>,
    signs: Vec<SignInstance>,
}

fn region_cells(grid: &Grid, name: &str, boxes: &[HyperRect]) -> Result<CellSet, KnowledgeError> {
    let mut set = CellSet::empty(grid.len());
    let domain = grid.covered_extent();
    for b in boxes {
        let bad = |reason: String| KnowledgeError::InvalidRegion { name: name.to_string(), reason };
        if b.dim() != grid.dim() {
            return Err(bad(format!("box has {} dimensions, grid has {}", b.dim(), grid.dim())));
        }
        b.validate().map_err(|e| bad(e.to_string()))?;
        if !b.intersects(&domain) {
            return Err(bad("box lies outside the state bounds".into()));
        }
        for c in grid.cells_intersecting(b) {
            set.insert(c);
        }
    }
    Ok(set)
}

impl Interpretation {
    /// Builds the interpretation induced by `map` on `grid`.
    ///
    /// Atomic extents are the cells meeting the concept's boxes plus ABox
    /// instances; a sign adds its cells to its concept and its street cells to
    /// `Street_<name>`. Defined concepts that do not depend on temporal names
    /// are evaluated here.
    pub fn assemble(kb: &KnowledgeBase, map: &MapRegions, grid: &Grid) -> Result<Self, KnowledgeError> {
        let n = grid.len();
        let mut extents: BTreeMap<String, CellSet> =
            kb.atomic_concepts().iter().map(|a| (a.clone(), CellSet::empty(n))).collect();
        for (name, boxes) in &map.concepts {
            let cells = region_cells(grid, name, boxes)?;
            extents.get_mut(name).ok_or_else(|| KnowledgeError::UndeclaredName(name.clone()))?.union_with(&cells);
        }
        let mut signs = Vec::with_capacity(map.signs.len());
        for s in &map.signs {
            if signs.iter().any(|o: &SignInstance| o.name == s.name) {
                return Err(KnowledgeError::DuplicateName(s.name.clone()));
            }
            let cells = region_cells(grid, &s.name, &s.at)?;
            let street = region_cells(grid, &s.street_concept(), &s.street)?;
            if cells.is_empty() || street.is_empty() {
                return Err(KnowledgeError::InvalidRegion {
                    name: s.name.clone(),
                    reason: "sign and street must each cover at least one cell".into(),
                });
            }
            extents
                .get_mut(&s.concept)
                .ok_or_else(|| KnowledgeError::UndeclaredName(s.concept.clone()))?
                .union_with(&cells);
            let street_name = s.street_concept();
            extents
                .get_mut(&street_name)
                .ok_or_else(|| KnowledgeError::UndeclaredName(street_name.clone()))?
                .union_with(&street);
            signs.push(SignInstance {
                name: s.name.clone(),
                concept: s.concept.clone(),
                cells,
                street_concept: street_name,
                street,
            });
        }
        Self::from_extents(kb, grid, extents, signs)
    }

    /// Builds an interpretation from explicit atomic extents. Missing atomic
    /// names get empty extents.
    pub fn from_extents(
        kb: &KnowledgeBase,
        grid: &Grid,
        mut extents: BTreeMap<String, CellSet>,
        signs: Vec<SignInstance>,
    ) -> Result<Self, KnowledgeError> {
        let n = grid.len();
        for name in extents.keys() {
            if !kb.atomic_concepts().contains(name) {
                return Err(KnowledgeError::UndeclaredName(name.clone()));
            }
        }
        for (name, set) in &extents {
            if set.domain_len() != n {
                return Err(KnowledgeError::InvalidRegion {
                    name: name.clone(),
                    reason: format!("extent over {} cells, grid has {n}", set.domain_len()),
                });
            }
        }
        for a in kb.atomic_concepts() {
            extents.entry(a.clone()).or_insert_with(|| CellSet::empty(n));
        }
        let mut roles = BTreeMap::new();
        for (name, def) in kb.roles() {
            let ext = match def {
                RoleDef::Proximity { range } => RoleExtent::Proximity(ProximityGeometry::new(grid, *range)?),
                RoleDef::Explicit => RoleExtent::Explicit(vec![Vec::new(); n]),
            };
            roles.insert(name.clone(), ext);
        }
        for assertion in kb.abox() {
            match assertion {
                ABoxAssertion::Concept { instance, concept } => {
                    if instance.index() >= n {
                        return Err(KnowledgeError::InvalidInstance(*instance));
                    }
                    extents.get_mut(concept).expect("declared").insert(*instance);
                }
                ABoxAssertion::Role { from, to, role } => {
                    for c in [from, to] {
                        if c.index() >= n {
                            return Err(KnowledgeError::InvalidInstance(*c));
                        }
                    }
                    if let Some(RoleExtent::Explicit(adj)) = roles.get_mut(role) {
                        adj[from.index()].push(*to);
                    }
                }
            }
        }
        for adj in roles.values_mut() {
            if let RoleExtent::Explicit(adj) = adj {
                for list in adj.iter_mut() {
                    list.sort_unstable();
                    list.dedup();
                }
            }
        }
        let mut interp = Self {
            kb: kb.clone(),
            grid: grid.clone(),
            extents,
            temporal: BTreeMap::new(),
            roles,
            signs,
        };
        for name in kb.defined_names() {
            if let Some(def) = kb.definition(&name) {
                match interp.eval(def) {
                    Ok(set) => {
                        interp.extents.insert(name, set);
                    }
                    Err(KnowledgeError::MissingExtent(_)) => {}
                    Err(e) => return Err(e),
                }
            }
        }
        Ok(interp)
    }

    pub fn kb(&self) -> &KnowledgeBase {
        &self.kb
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn signs(&self) -> &[SignInstance] {
        &self.signs
    }

    pub fn domain_len(&self) -> usize {
        self.grid.len()
    }

    /// Extent of a named concept.
    pub fn extent(&self, name: &str) -> Result<CellSet, KnowledgeError> {
        if let Some(set) = self.extents.get(name).or_else(|| self.temporal.get(name)) {
            return Ok(set.clone());
        }
        if let Some(def) = self.kb.definition(name) {
            return self.eval(def);
        }
        if self.kb.temporal(name).is_some() {
            return Err(KnowledgeError::MissingExtent(name.to_string()));
        }
        Err(KnowledgeError::UndeclaredName(name.to_string()))
    }

    /// Sets the extent of a temporally defined concept. Cached extents of
    /// concepts defined on top of it are not affected since they are never
    /// cached.
    pub fn set_temporal_extent(&mut self, name: &str, set: CellSet) -> Result<(), KnowledgeError> {
        if self.kb.temporal(name).is_none() {
            return Err(KnowledgeError::UndeclaredName(name.to_string()));
        }
        if set.domain_len() != self.grid.len() {
            return Err(KnowledgeError::InvalidRegion {
                name: name.to_string(),
                reason: "extent over a different domain".into(),
            });
        }
        self.temporal.insert(name.to_string(), set);
        Ok(())
    }

    /// Whether `(x, y)` is in the extent of `role`.
    pub fn role_holds(&self, role: &str, x: CellId, y: CellId) -> Result<bool, KnowledgeError> {
        let n = self.grid.len();
        for c in [x, y] {
            if c.index() >= n {
                return Err(KnowledgeError::InvalidInstance(c));
            }
        }
        match self.roles.get(role) {
            Some(RoleExtent::Proximity(geo)) => Ok(geo.related(geo.split(x), geo.planar_of(y))),
            Some(RoleExtent::Explicit(adj)) => Ok(adj[x.index()].binary_search(&y).is_ok()),
            None => Err(KnowledgeError::UnknownRole(role.to_string())),
        }
    }

    /// Extent of a concept expression.
    pub fn eval(&self, c: &Concept) -> Result<CellSet, KnowledgeError> {
        let n = self.grid.len();
        Ok(match c {
            Concept::Top => CellSet::full(n),
            Concept::Bottom => CellSet::empty(n),
            Concept::Atomic(name) => self.extent(name)?,
            Concept::Not(a) => self.eval(a)?.complement(),
            Concept::And(a, b) => self.eval(a)?.intersection(&self.eval(b)?),
            Concept::Or(a, b) => self.eval(a)?.union(&self.eval(b)?),
            Concept::Exists(role, a) => {
                let inner = self.eval(a)?;
                self.restrict(role, &inner, true)?
            }
            Concept::Forall(role, a) => {
                let inner = self.eval(a)?;
                self.restrict(role, &inner, false)?
            }
        })
    }

    /// `exists role.inner` when `exists`, otherwise `forall role.inner`.
    fn restrict(&self, role: &str, inner: &CellSet, exists: bool) -> Result<CellSet, KnowledgeError> {
        let n = self.grid.len();
        let ext = self.roles.get(role).ok_or_else(|| KnowledgeError::UnknownRole(role.to_string()))?;
        let member: Vec<bool> = match ext {
            RoleExtent::Explicit(adj) => (0..n)
                .into_par_iter()
                .map(|x| {
                    if exists {
                        adj[x].iter().any(|y| inner.contains(*y))
                    } else {
                        adj[x].iter().all(|y| inner.contains(*y))
                    }
                })
                .collect(),
            RoleExtent::Proximity(geo) => {
                // the relation ignores the target heading, so aggregate per planar position
                let [ni, nj] = geo.planar_counts();
                let nh = geo.heading_count();
                let planar: Vec<bool> = (0..ni * nj)
                    .map(|p| {
                        let mut column = (0..nh).map(|h| inner.contains(CellId::from(p * nh + h)));
                        if exists {
                            column.any(|b| b)
                        } else {
                            column.all(|b| b)
                        }
                    })
                    .collect();
                (0..n)
                    .into_par_iter()
                    .map(|x| {
                        let src = geo.split(CellId::from(x));
                        if exists {
                            geo.for_each_related(src, |[k, l]| planar[k * nj + l])
                        } else {
                            !geo.for_each_related(src, |[k, l]| !planar[k * nj + l])
                        }
                    })
                    .collect()
            }
        };
        Ok(CellSet::from_cells(n, member.iter().enumerate().filter(|(_, m)| **m).map(|(i, _)| CellId::from(i))))
    }

    /// Cells violating each inclusion or non-definitional equivalence axiom,
    /// in TBox order. Axioms that hold in this interpretation are omitted.
    pub fn axiom_violations(&self) -> Result<Vec<(usize, CellSet)>, KnowledgeError> {
        use super::kb::TBoxAxiom;
        let mut out = Vec::new();
        for (i, axiom) in self.kb.tbox().iter().enumerate() {
            let bad = match axiom {
                TBoxAxiom::Inclusion(c, d) => self.eval(c)?.difference(&self.eval(d)?),
                TBoxAxiom::Equivalence(Concept::Atomic(n), _) if !self.kb.atomic_concepts().contains(n) => continue,
                TBoxAxiom::Equivalence(c, d) => {
                    let (c, d) = (self.eval(c)?, self.eval(d)?);
                    c.difference(&d).union(&d.difference(&c))
                }
                TBoxAxiom::Temporal { .. } => continue,
            };
            if !bad.is_empty() {
                out.push((i, bad));
            }
        }
        Ok(out)
    }
}

/// Extent of `c` in `interp`.
pub fn eval_concept(interp: &Interpretation, c: &Concept) -> Result<CellSet, KnowledgeError> {
    interp.eval(c)
}
