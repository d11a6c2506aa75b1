//! Reach-avoid and safety games on an abstraction.
//!
//! Both fixpoints are computed with per-pair counters over a reverse
//! transition index, so each transition is touched a constant number of times
//! per solve. The reverse index is built once per abstraction by [`Solver`] and
//! reused across re-syntheses.

use std::io::{self, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::abstraction::Abstraction;
use crate::cellset::CellSet;
use crate::grid::CellId;
use crate::spec::GameObjective;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthesisError {
    #[error("objective is over {got} cells but the abstraction has {expected}")]
    DomainMismatch { expected: usize, got: usize },
    #[error("cell {0} is not in the winning set")]
    NotWinning(CellId),
}

const UNRANKED: u32 = u32::MAX;

/// Result of a reach-avoid solve.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Controller {
    target: CellSet,
    winning: CellSet,
    rank: Vec<u32>,
    policy: Vec<u32>,
    allowed_offsets: Vec<u32>,
    allowed: Vec<CellId>,
    iterations: usize,
}

impl Controller {
    pub fn winning(&self) -> &CellSet {
        &self.winning
    }

    pub fn target(&self) -> &CellSet {
        &self.target
    }

    pub fn is_winning(&self, x: CellId) -> bool {
        self.winning.contains(x)
    }

    /// Fixpoint layer at which `x` became winning, 0 for target cells.
    pub fn rank(&self, x: CellId) -> Option<u32> {
        self.rank.get(x.index()).copied().filter(|&r| r != UNRANKED)
    }

    /// Chosen input of a winning non-target cell.
    pub fn policy(&self, x: CellId) -> Option<CellId> {
        self.policy.get(x.index()).copied().filter(|&u| u != UNRANKED).map(CellId)
    }

    /// Inputs under which every successor of `x` has a smaller rank. Empty for
    /// target and losing cells.
    pub fn allowed(&self, x: CellId) -> &[CellId] {
        let i = x.index();
        if i + 1 >= self.allowed_offsets.len() {
            return &[];
        }
        &self.allowed[self.allowed_offsets[i] as usize..self.allowed_offsets[i + 1] as usize]
    }

    /// Number of fixpoint layers computed, including the target layer.
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn check_winning(&self, x: CellId) -> Result<(), SynthesisError> {
        if self.is_winning(x) {
            Ok(())
        } else {
            Err(SynthesisError::NotWinning(x))
        }
    }

    /// CSV with columns `cell_index,rank,policy_input_index`, one row per
    /// winning cell in ascending order. The policy column is empty for target
    /// cells.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "cell_index,rank,policy_input_index")?;
        for x in self.winning.iter() {
            let r = self.rank[x.index()];
            match self.policy(x) {
                Some(u) => writeln!(w, "{},{},{}", x.0, r, u.0)?,
                None => writeln!(w, "{},{},", x.0, r)?,
            }
        }
        Ok(())
    }
}

/// Reverse transition index for repeated solves on one abstraction.
pub struct Solver<'a> {
    abs: &'a Abstraction,
    rev_offsets: Vec<u64>,
    /// Pair indices `x * |Ū| + u` having the target state as a successor.
    rev_pairs: Vec<u32>,
}

impl<'a> Solver<'a> {
    pub fn new(abs: &'a Abstraction) -> Self {
        let nx = abs.num_states();
        let pairs = nx * abs.num_inputs();
        assert!(pairs < u32::MAX as usize, "too many state-input pairs for the reverse index");
        let mut counts = vec![0u64; nx + 1];
        for p in 0..pairs {
            for y in abs.post_unchecked(p) {
                counts[y.index() + 1] += 1;
            }
        }
        for i in 0..nx {
            counts[i + 1] += counts[i];
        }
        let rev_offsets = counts.clone();
        let mut fill = counts;
        let mut rev_pairs = vec![0u32; rev_offsets[nx] as usize];
        for p in 0..pairs {
            for y in abs.post_unchecked(p) {
                let slot = &mut fill[y.index()];
                rev_pairs[*slot as usize] = p as u32;
                *slot += 1;
            }
        }
        Self { abs, rev_offsets, rev_pairs }
    }

    pub fn abstraction(&self) -> &Abstraction {
        self.abs
    }

    fn predecessors(&self, y: CellId) -> &[u32] {
        &self.rev_pairs[self.rev_offsets[y.index()] as usize..self.rev_offsets[y.index() + 1] as usize]
    }

    fn check_domain(&self, set: &CellSet) -> Result<(), SynthesisError> {
        let expected = self.abs.num_states();
        if set.domain_len() != expected {
            return Err(SynthesisError::DomainMismatch { expected, got: set.domain_len() });
        }
        Ok(())
    }

    /// Least fixpoint `Z⁰ = T`, `Zᵏ⁺¹ = T ∪ cpre(Zᵏ, A)`, with ranks, allowed
    /// inputs and the lowest-index policy.
    pub fn solve_reach_avoid(&self, obj: &GameObjective) -> Result<Controller, SynthesisError> {
        self.check_domain(&obj.target)?;
        self.check_domain(&obj.avoid)?;
        let abs = self.abs;
        let nx = abs.num_states();
        let nu = abs.num_inputs();
        let mut remaining: Vec<u32> = (0..nx * nu)
            .map(|p| if abs.is_usable(p) { abs.post_unchecked(p).len() as u32 } else { u32::MAX })
            .collect();
        let mut rank = vec![UNRANKED; nx];
        let mut frontier: Vec<CellId> = obj.target.iter().collect();
        for x in &frontier {
            rank[x.index()] = 0;
        }
        let mut layer = 0u32;
        let mut iterations = 1;
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for &y in &frontier {
                for &p in self.predecessors(y) {
                    let c = &mut remaining[p as usize];
                    if *c == u32::MAX {
                        continue;
                    }
                    *c -= 1;
                    if *c == 0 {
                        let x = p as usize / nu;
                        if rank[x] == UNRANKED && !obj.avoid.contains(CellId::from(x)) {
                            rank[x] = layer + 1;
                            next.push(CellId::from(x));
                        }
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            next.sort_unstable();
            layer += 1;
            iterations += 1;
            frontier = next;
        }
        let winning = CellSet::from_cells(nx, (0..nx).filter(|&x| rank[x] != UNRANKED).map(CellId::from));
        let per_cell: Vec<Vec<CellId>> = (0..nx)
            .into_par_iter()
            .map(|x| {
                let r = rank[x];
                if r == UNRANKED || r == 0 {
                    return Vec::new();
                }
                (0..nu)
                    .filter(|&u| {
                        let p = x * nu + u;
                        abs.is_usable(p) && abs.post_unchecked(p).iter().all(|y| rank[y.index()] < r)
                    })
                    .map(CellId::from)
                    .collect()
            })
            .collect();
        let mut allowed_offsets = Vec::with_capacity(nx + 1);
        allowed_offsets.push(0u32);
        let mut allowed = Vec::new();
        let mut policy = vec![UNRANKED; nx];
        for (x, list) in per_cell.into_iter().enumerate() {
            if let Some(u) = list.first() {
                policy[x] = u.0;
            }
            allowed.extend(list);
            allowed_offsets.push(allowed.len() as u32);
        }
        Ok(Controller { target: obj.target.clone(), winning, rank, policy, allowed_offsets, allowed, iterations })
    }

    /// Greatest fixpoint `Z⁰ = X̄ ∖ F`, `Zᵏ⁺¹ = Zᵏ ∩ cpre(Zᵏ, ∅)`: the cells
    /// from which `forbidden` can be avoided forever.
    pub fn respected_region(&self, forbidden: &CellSet) -> Result<CellSet, SynthesisError> {
        self.check_domain(forbidden)?;
        let abs = self.abs;
        let nx = abs.num_states();
        let nu = abs.num_inputs();
        let mut alive = forbidden.complement();
        // successors outside the current set, per pair
        let mut outside: Vec<u32> = (0..nx * nu)
            .map(|p| {
                if abs.is_usable(p) {
                    abs.post_unchecked(p).iter().filter(|y| !alive.contains(**y)).count() as u32
                } else {
                    u32::MAX
                }
            })
            .collect();
        let mut good: Vec<u32> =
            (0..nx).map(|x| (0..nu).filter(|&u| outside[x * nu + u] == 0).count() as u32).collect();
        let mut queue: Vec<CellId> = alive.iter().filter(|x| good[x.index()] == 0).collect();
        for x in &queue {
            alive.remove(*x);
        }
        while let Some(y) = queue.pop() {
            for &p in self.predecessors(y) {
                let o = &mut outside[p as usize];
                if *o == u32::MAX {
                    continue;
                }
                *o += 1;
                if *o == 1 {
                    let x = p as usize / nu;
                    good[x] -= 1;
                    if good[x] == 0 && alive.contains(CellId::from(x)) {
                        alive.remove(CellId::from(x));
                        queue.push(CellId::from(x));
                    }
                }
            }
        }
        Ok(alive)
    }
}

/// `{ x ∉ avoid | ∃u: post(x,u) ≠ ∅ ∧ post(x,u) ⊆ z }`.
pub fn cpre(abs: &Abstraction, z: &CellSet, avoid: &CellSet) -> CellSet {
    let nx = abs.num_states();
    let nu = abs.num_inputs();
    let member: Vec<bool> = (0..nx)
        .into_par_iter()
        .map(|x| {
            !avoid.contains(CellId::from(x))
                && (0..nu).any(|u| {
                    let p = x * nu + u;
                    let post = abs.post_unchecked(p);
                    abs.is_usable(p) && !post.is_empty() && post.iter().all(|y| z.contains(*y))
                })
        })
        .collect();
    CellSet::from_cells(nx, (0..nx).filter(|&x| member[x]).map(CellId::from))
}

pub fn solve_reach_avoid(abs: &Abstraction, obj: &GameObjective) -> Result<Controller, SynthesisError> {
    Solver::new(abs).solve_reach_avoid(obj)
}

pub fn respected_region(abs: &Abstraction, forbidden: &CellSet) -> Result<CellSet, SynthesisError> {
    Solver::new(abs).respected_region(forbidden)
}
